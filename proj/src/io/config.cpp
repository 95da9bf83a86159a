#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

#include "qflow/config.hpp"
#include "qflow/conformal.hpp"
#include "qflow/errors.hpp"
#include "qflow/mobius.hpp"

namespace qflow {

unsigned long long fnv1a(const void* data, std::size_t len, unsigned long long seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  unsigned long long h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(Errc::TypeError, "key '" + key + "': cannot parse '" + v + "' as a number");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(Errc::TypeError, "key '" + key + "': cannot parse '" + v + "' as an integer");
  }
}

// Spherical mean of the candidate, in closed form where possible and by a
// 1-D Gauss rule for bump terms.
double fspec_mean(const FSpec& spec, int n) {
  switch (spec.family) {
    case FSpec::Family::Constant:
      return spec.c;
    case FSpec::Family::Affine:
      return spec.c; // mean of any coordinate is zero
    case FSpec::Family::Bumps: {
      std::vector<double> x, w;
      gauss_gegenbauer(n, 64, x, w);
      double mu0 = 0.0;
      for (double v : w) mu0 += v;
      double acc = spec.c;
      for (const auto& t : spec.bumps) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
          s += w[i] * std::exp(t.sharp * (x[i] - 1.0));
        acc += t.amp * s / mu0;
      }
      return acc;
    }
  }
  return 0.0;
}

} // namespace

FSpec parse_fspec(const std::string& text, int n) {
  std::size_t colon = text.find(':');
  std::string family = colon == std::string::npos ? text : text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  FSpec spec;
  if (family == "constant") {
    spec.family = FSpec::Family::Constant;
    spec.c = to_double("f", args);
  } else if (family == "affine") {
    auto parts = split(args, ',');
    if (parts.size() != 3)
      fail(Errc::TypeError, "affine candidate needs 'a,b,axis', got '" + args + "'");
    spec.family = FSpec::Family::Affine;
    spec.c = to_double("f", parts[0]);
    spec.b = to_double("f", parts[1]);
    spec.axis = static_cast<int>(to_int("f", parts[2]));
    if (spec.axis < 1 || spec.axis > n + 1)
      fail(Errc::TypeError, "affine axis must be in [1, " + std::to_string(n + 1) + "]");
  } else if (family == "bumps") {
    auto groups = split(args, ';');
    if (groups.empty())
      fail(Errc::TypeError, "bumps candidate needs 'c0;amp,sharp,center...'");
    spec.family = FSpec::Family::Bumps;
    spec.c = to_double("f", groups[0]);
    for (std::size_t g = 1; g < groups.size(); ++g) {
      auto parts = split(groups[g], ',');
      if (static_cast<int>(parts.size()) != 2 + n + 1)
        fail(Errc::TypeError, "bump term needs amp,sharp and " +
                                  std::to_string(n + 1) + " center coordinates");
      BumpTerm t;
      t.amp = to_double("f", parts[0]);
      t.sharp = to_double("f", parts[1]);
      double nrm = 0.0;
      for (int d = 0; d < n + 1; ++d) {
        t.center.push_back(to_double("f", parts[2 + d]));
        nrm += t.center.back() * t.center.back();
      }
      if (nrm == 0.0) fail(Errc::TypeError, "bump center must be nonzero");
      nrm = std::sqrt(nrm);
      for (double& c : t.center) c /= nrm;
      spec.bumps.push_back(std::move(t));
    }
  } else {
    fail(Errc::TypeError, "unknown candidate family '" + family + "'");
  }
  double mean = fspec_mean(spec, n);
  if (mean <= 0.0)
    fail(Errc::NonpositiveMeanF,
         "candidate '" + text + "' has spherical mean " + std::to_string(mean) +
             " <= 0 (candidates must have positive spherical mean)");
  return spec;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::TypeError, "expected key=value, got '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  RunConfig cfg;
  bool mode_set = false;
  for (const auto& [key, value] : kv) {
    if (key == "n") {
      cfg.n = static_cast<int>(to_int(key, value));
    } else if (key == "mode") {
      if (value == "full2d")
        cfg.mode = GridMode::Full2D;
      else if (value == "axisymmetric" || value == "axi")
        cfg.mode = GridMode::Axisymmetric;
      else
        fail(Errc::TypeError, "mode must be 'full2d' or 'axisymmetric'");
      mode_set = true;
    } else if (key == "L") {
      cfg.L = static_cast<int>(to_int(key, value));
    } else if (key == "dt0") {
      cfg.dt0 = to_double(key, value);
    } else if (key == "dt_max") {
      cfg.dt_max = to_double(key, value);
    } else if (key == "t_max") {
      cfg.t_max = to_double(key, value);
    } else if (key == "tol_converge") {
      cfg.tol_converge = to_double(key, value);
    } else if (key == "u_blow") {
      cfg.u_blow = to_double(key, value);
    } else if (key == "r_min") {
      cfg.r_min = to_double(key, value);
    } else if (key == "record_every") {
      cfg.record_every = static_cast<int>(to_int(key, value));
    } else if (key == "scan_every") {
      cfg.scan_every = static_cast<int>(to_int(key, value));
    } else if (key == "seed") {
      cfg.seed = static_cast<unsigned long long>(to_int(key, value));
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "f") {
      cfg.f_spec = value;
    } else if (key == "u0") {
      cfg.u0_spec = value;
    } else {
      fail(Errc::UnknownKey, "'" + key + "'");
    }
  }

  if (kv.find("n") == kv.end()) fail(Errc::MissingKey, "n");
  if (cfg.n < 2 || cfg.n % 2 != 0)
    fail(Errc::OddDimension, "n must be even and >= 2, got " + std::to_string(cfg.n));
  if (!mode_set) cfg.mode = cfg.n == 2 ? GridMode::Full2D : GridMode::Axisymmetric;
  if (cfg.mode == GridMode::Full2D && cfg.n != 2)
    fail(Errc::InvalidMode, "full2d mode requires n=2");
  if (cfg.f_spec.empty()) fail(Errc::MissingKey, "f");
  if (cfg.L < 8) fail(Errc::BandLimitTooSmall, "L must be >= 8");
  if (!(cfg.dt0 > 0.0 && cfg.dt_max > 0.0 && cfg.t_max >= 0.0 &&
        cfg.tol_converge > 0.0 && cfg.u_blow > 0.0 && cfg.r_min > 0.0))
    fail(Errc::TypeError, "tolerances and step sizes must be positive");
  if (cfg.dt0 > cfg.dt_max) fail(Errc::TypeError, "dt0 must be <= dt_max");
  if (cfg.record_every < 1 || cfg.scan_every < 1)
    fail(Errc::TypeError, "record_every and scan_every must be >= 1");

  parse_fspec(cfg.f_spec, cfg.n); // validates, including the mean>0 hypothesis
  return cfg;
}

FlowParams RunConfig::flow_params() const {
  FlowParams p;
  p.dt0 = dt0;
  p.dt_max = dt_max;
  p.t_max = t_max;
  p.tol_converge = tol_converge;
  p.u_blow = u_blow;
  p.r_min = r_min;
  p.record_every = record_every;
  p.scan_every = scan_every;
  return p;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "L=" << L << "\n";
  os << "dt0=" << dt0 << "\n";
  os << "dt_max=" << dt_max << "\n";
  os << "f=" << f_spec << "\n";
  os << "mode=" << (mode == GridMode::Full2D ? "full2d" : "axisymmetric") << "\n";
  os << "n=" << n << "\n";
  os << "r_min=" << r_min << "\n";
  os << "record_every=" << record_every << "\n";
  os << "scan_every=" << scan_every << "\n";
  os << "seed=" << seed << "\n";
  os << "t_max=" << t_max << "\n";
  os << "tol_converge=" << tol_converge << "\n";
  os << "u0=" << u0_spec << "\n";
  os << "u_blow=" << u_blow << "\n";
  return os.str();
}

namespace {

// xorshift-based uniform doubles; fixed across platforms.
struct SplitMix {
  unsigned long long s;
  explicit SplitMix(unsigned long long seed) : s(seed) {}
  unsigned long long next() {
    s += 0x9e3779b97f4a7c15ULL;
    unsigned long long z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; } // [0,1)
  double symmetric() { return 2.0 * uniform() - 1.0; }    // [-1,1)
};

} // namespace

SpectralField build_initial(const SphereContext& ctx, const RunConfig& cfg) {
  const std::string& s = cfg.u0_spec;
  std::size_t colon = s.find(':');
  std::string kind = colon == std::string::npos ? s : s.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);

  SpectralField u(ctx.coeff_count(), 0.0);
  if (kind == "zero") {
    return u;
  }
  if (kind == "bubble") {
    auto parts = split(args, ',');
    if (static_cast<int>(parts.size()) != 1 + ctx.n() + 1)
      fail(Errc::TypeError, "bubble u0 needs eps and " +
                                std::to_string(ctx.n() + 1) + " center coordinates");
    double eps = to_double("u0", parts[0]);
    std::vector<double> q;
    for (int d = 0; d < ctx.n() + 1; ++d) q.push_back(to_double("u0", parts[1 + d]));
    // bubble() already yields unit volume up to quadrature error; renormalize
    // to pin the class membership exactly.
    u = bubble(ctx, MobiusParam::make(q, eps));
  } else if (kind == "harmonic") {
    auto parts = split(args, ',');
    if (ctx.mode() == GridMode::Full2D) {
      if (parts.size() != 3)
        fail(Errc::TypeError, "harmonic u0 needs 'l,m,amp' in full2d mode");
      int l = static_cast<int>(to_int("u0", parts[0]));
      int m = static_cast<int>(to_int("u0", parts[1]));
      double amp = to_double("u0", parts[2]);
      if (l < 0 || l > ctx.band_limit() || std::abs(m) > l)
        fail(Errc::TypeError, "harmonic degree/order out of range");
      u[ctx.coeff_index(l, m)] = amp;
    } else {
      if (parts.size() != 2)
        fail(Errc::TypeError, "harmonic u0 needs 'l,amp' in axisymmetric mode");
      int l = static_cast<int>(to_int("u0", parts[0]));
      double amp = to_double("u0", parts[1]);
      if (l < 0 || l > ctx.band_limit())
        fail(Errc::TypeError, "harmonic degree out of range");
      u[ctx.coeff_index(l, 0)] = amp;
    }
  } else if (kind == "randband") {
    auto parts = split(args, ',');
    if (parts.size() != 2)
      fail(Errc::TypeError, "randband u0 needs 'amp,lmax'");
    double amp = to_double("u0", parts[0]);
    int lmax = static_cast<int>(to_int("u0", parts[1]));
    lmax = std::min(lmax, ctx.band_limit());
    SplitMix rng(cfg.seed * 2654435761ULL + 12345ULL);
    for (std::size_t i = 0; i < u.size(); ++i)
      if (ctx.coeff_degree(i) >= 1 && ctx.coeff_degree(i) <= lmax)
        u[i] = amp * rng.symmetric();
  } else {
    fail(Errc::TypeError, "unknown u0 kind '" + kind + "'");
  }
  return renormalize_volume(ctx, u);
}

} // namespace qflow
