#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "qflow/blowup.hpp"
#include "qflow/diagnostics_csv.hpp"
#include "qflow/errors.hpp"
#include "qflow/io.hpp"
#include "qflow/mobius.hpp"

using namespace qflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qflow_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

} // namespace

TEST_CASE("parse_config accepts the documented grammar") {
  RunConfig cfg = parse_config("n=2\nmode=full2d\nL=32\nf=affine:0.5,1.0,3\n");
  CHECK(cfg.n == 2);
  CHECK(cfg.mode == GridMode::Full2D);
  CHECK(cfg.L == 32);
  CHECK(cfg.f_spec == "affine:0.5,1.0,3");
  // documented defaults
  CHECK(cfg.dt0 == 1e-3);
  CHECK(cfg.dt_max == 0.1);
  CHECK(cfg.t_max == 200.0);
  CHECK(cfg.tol_converge == 1e-8);
  CHECK(cfg.u_blow == 6.0);
  CHECK(cfg.r_min == 0.05);
  CHECK(cfg.record_every == 1);
  CHECK(cfg.u0_spec == "zero");

  // comments, blank lines, later keys win
  RunConfig cfg2 = parse_config(
      "# comment\nn=2\nf=constant:1\n\nL=16 # trailing\nL=24\nseed=7\n");
  CHECK(cfg2.L == 24);
  CHECK(cfg2.seed == 7);
}

TEST_CASE("parse_config rejections") {
  try {
    parse_config("");
    FAIL("empty config accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingKey);
    CHECK(std::string(e.what()).find("n") != std::string::npos);
  }
  try {
    parse_config("n=2\nf=affine:-1.0,0.1,3\n");
    FAIL("negative-mean candidate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonpositiveMeanF);
  }
  try {
    parse_config("n=2\nf=constant:1\nbogus=3\n");
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownKey);
  }
  try {
    parse_config("n=two\nf=constant:1\n");
    FAIL("bad integer accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TypeError);
  }
  CHECK_THROWS_AS(parse_config("n=3\nf=constant:1\n"), Error);
  CHECK_THROWS_AS(parse_config("n=4\nmode=full2d\nf=constant:6\n"), Error);
  CHECK_THROWS_AS(parse_config("n=2\nf=constant:1\ndt0=0.5\ndt_max=0.1\n"), Error);
  CHECK_THROWS_AS(parse_config("n=2\nf=nosuch:1\n"), Error);
}

TEST_CASE("bumps mean check happens at parse time") {
  // mean = c0 + amp * (1 - e^{-2b})/(2b); amp 1, b 8 gives ~0.0625
  CHECK_NOTHROW(parse_config("n=2\nf=bumps:-0.05;1,8,0,0,1\n"));
  try {
    parse_config("n=2\nf=bumps:-0.07;1,8,0,0,1\n");
    FAIL("negative-mean bumps accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonpositiveMeanF);
  }
}

TEST_CASE("build_initial produces normalized states") {
  RunConfig cfg = parse_config("n=2\nL=24\nf=constant:1\n");
  auto ctx = SphereContext::make(cfg.n, cfg.mode, cfg.L);

  SpectralField z = build_initial(ctx, cfg);
  for (double c : z.c) CHECK(c == 0.0);

  cfg.u0_spec = "harmonic:2,0,0.1";
  SpectralField h = build_initial(ctx, cfg);
  CHECK(std::abs(volume_mean(ctx, h) - 1.0) <= 1e-12);
  CHECK(h[ctx.coeff_index(2, 0)] == doctest::Approx(0.1).epsilon(1e-12));

  cfg.u0_spec = "bubble:0.4,0,0,1";
  SpectralField b = build_initial(ctx, cfg);
  CHECK(std::abs(volume_mean(ctx, b) - 1.0) <= 1e-12);

  cfg.u0_spec = "randband:0.05,6";
  SpectralField r1 = build_initial(ctx, cfg);
  SpectralField r2 = build_initial(ctx, cfg);
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]); // seeded
  CHECK(std::abs(volume_mean(ctx, r1) - 1.0) <= 1e-12);

  cfg.u0_spec = "nosuch";
  CHECK_THROWS_AS(build_initial(ctx, cfg), Error);
}

TEST_CASE("snapshot round trip is bit exact") {
  TempDir tmp;
  Snapshot snap;
  snap.n = 2;
  snap.mode = GridMode::Full2D;
  snap.L = 16;
  snap.t = 1.25;
  snap.dt = 3.0e-3;
  snap.step_index = 421;
  snap.accept_streak = 7;
  snap.config_hash = 0xdeadbeefcafef00dULL;
  snap.coeffs = {0.0, 1.0, -3.5e-17, 2.2250738585072014e-308, 1.7976931348623157e308};

  const std::string path = (tmp.path / "s.qfs").string();
  write_snapshot(path, snap);
  Snapshot back = read_snapshot(path);
  CHECK(back.n == snap.n);
  CHECK(back.mode == snap.mode);
  CHECK(back.L == snap.L);
  CHECK(back.t == snap.t);
  CHECK(back.dt == snap.dt);
  CHECK(back.step_index == snap.step_index);
  CHECK(back.accept_streak == snap.accept_streak);
  CHECK(back.config_hash == snap.config_hash);
  REQUIRE(back.coeffs.size() == snap.coeffs.size());
  for (std::size_t i = 0; i < snap.coeffs.size(); ++i)
    CHECK(std::memcmp(&back.coeffs[i], &snap.coeffs[i], 8) == 0);
}

TEST_CASE("snapshot corruption and version checks") {
  TempDir tmp;
  Snapshot snap;
  snap.n = 2;
  snap.mode = GridMode::Full2D;
  snap.L = 16;
  snap.coeffs = {1.0, 2.0, 3.0};
  const std::string path = (tmp.path / "s.qfs").string();
  write_snapshot(path, snap);

  // truncated file
  std::string bytes = slurp(path);
  {
    std::ofstream os(tmp.path / "trunc.qfs", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 6));
  }
  try {
    read_snapshot((tmp.path / "trunc.qfs").string());
    FAIL("truncated snapshot accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptPayload);
  }

  // wrong version
  {
    std::string v = bytes;
    v[4] = 9;
    std::ofstream os(tmp.path / "ver.qfs", std::ios::binary);
    os.write(v.data(), static_cast<std::streamsize>(v.size()));
  }
  try {
    read_snapshot((tmp.path / "ver.qfs").string());
    FAIL("wrong version accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::VersionMismatch);
  }

  // flipped payload byte
  {
    std::string v = bytes;
    v[v.size() - 12] ^= 0x40;
    std::ofstream os(tmp.path / "bad.qfs", std::ios::binary);
    os.write(v.data(), static_cast<std::streamsize>(v.size()));
  }
  try {
    read_snapshot((tmp.path / "bad.qfs").string());
    FAIL("corrupt payload accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptPayload);
  }
}

TEST_CASE("command_run is deterministic byte-for-byte") {
  TempDir tmp;
  RunConfig cfg = parse_config(
      "n=2\nL=16\nf=constant:1\nu0=harmonic:2,0,0.08\nt_max=0.5\nrecord_every=2\n"
      "scan_every=5\n");
  cfg.output_dir = (tmp.path / "a").string();
  REQUIRE(command_run(cfg, std::nullopt) == 0);
  cfg.output_dir = (tmp.path / "b").string();
  REQUIRE(command_run(cfg, std::nullopt) == 0);

  std::string csv_a = slurp(tmp.path / "a" / "diagnostics.csv");
  std::string csv_b = slurp(tmp.path / "b" / "diagnostics.csv");
  CHECK(csv_a == csv_b);
  CHECK(!csv_a.empty());
  // header row present and stable
  CHECK(csv_a.rfind("t,dt,E,E_f,alpha,residual_l2,max_u,min_u,volume_err,theta_0,"
                    "theta_1,theta_2,r_star\n", 0) == 0);
}

TEST_CASE("resume reproduces the uninterrupted trajectory bit-exactly") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  auto mult = make_multiplier(ctx);
  FSpec c1;
  c1.c = 1.0;
  CandidateF f = CandidateF::make(ctx, c1);

  FlowParams params;
  params.dt0 = 1e-2;
  params.t_max = 0.8;
  params.compute_theta = true;

  SpectralField u0(ctx.coeff_count(), 0.0);
  u0[ctx.coeff_index(2, 0)] = 0.05;
  u0 = renormalize_volume(ctx, u0);

  RunResult full = run(ctx, mult, f, u0, params);
  REQUIRE(full.trajectory.size() > 10);

  // interrupt at t_mid, snapshot through the serializer, resume to t_max
  FlowParams mid = params;
  mid.t_max = 0.35;
  RunResult first = run(ctx, mult, f, u0, mid);

  TempDir tmp;
  Snapshot snap;
  snap.n = 2;
  snap.mode = GridMode::Full2D;
  snap.L = 16;
  snap.t = first.final_state.t;
  snap.dt = first.final_state.dt;
  snap.step_index = first.final_state.step_index;
  snap.accept_streak = first.final_state.accept_streak;
  snap.coeffs = first.final_state.u.c;
  const std::string path = (tmp.path / "mid.qfs").string();
  write_snapshot(path, snap);
  Snapshot loaded = read_snapshot(path);

  SpectralField um;
  um.c = loaded.coeffs;
  FlowState st = resume_state(ctx, mult, f, um, loaded.t, loaded.dt,
                              loaded.step_index, loaded.accept_streak);
  RunResult resumed = run_from(ctx, mult, f, std::move(st), params);

  // align on step_index; every overlapping record must agree bit-for-bit
  std::size_t matched = 0;
  for (const auto& rec : resumed.trajectory) {
    for (const auto& ref : full.trajectory) {
      if (ref.step_index != rec.step_index) continue;
      CHECK(rec.t == ref.t);
      CHECK(rec.dt == ref.dt);
      CHECK(rec.E == ref.E);
      CHECK(rec.E_f == ref.E_f);
      CHECK(rec.alpha == ref.alpha);
      CHECK(rec.residual_l2 == ref.residual_l2);
      CHECK(rec.max_u == ref.max_u);
      CHECK(rec.min_u == ref.min_u);
      REQUIRE(rec.theta.size() == ref.theta.size());
      for (std::size_t d = 0; d < rec.theta.size(); ++d)
        CHECK(rec.theta[d] == ref.theta[d]);
      ++matched;
    }
  }
  CHECK(matched >= resumed.trajectory.size() - 1);
}

TEST_CASE("command_run writes snapshot and report; exit codes") {
  TempDir tmp;
  RunConfig cfg = parse_config("n=2\nL=16\nf=constant:1\nt_max=0.05\n");
  cfg.output_dir = tmp.path.string();
  CHECK(command_run(cfg, std::nullopt) == 0);
  CHECK(fs::exists(tmp.path / "diagnostics.csv"));
  CHECK(fs::exists(tmp.path / "snapshot.qfs"));
  CHECK(fs::exists(tmp.path / "report.json"));

  // stationary candidate converges at the first step: single-row tail
  std::string rep = slurp(tmp.path / "report.json");
  CHECK(rep.find("Converged") != std::string::npos);

  // resume with a different config is refused
  RunConfig other = cfg;
  other.u0_spec = "harmonic:2,0,0.05";
  CHECK(command_run(other, (tmp.path / "snapshot.qfs").string()) == 1);
}

TEST_CASE("command_morse writes the criterion report") {
  TempDir tmp;
  RunConfig cfg = parse_config("n=2\nL=24\nf=bumps:0.5;1,4,0,0,1\n");
  cfg.output_dir = tmp.path.string();
  CHECK(command_morse(cfg) == 0);
  std::string rep = slurp(tmp.path / "morse_report.json");
  CHECK(rep.find("\"existence_guaranteed\": \"no\"") != std::string::npos);
  CHECK(rep.find("\"gamma\"") != std::string::npos);
}

TEST_CASE("command_normalize and command_bubble_fit on a synthetic snapshot") {
  TempDir tmp;
  // L = 48 resolves the eps = 0.2 bubble, so the resampled pullback's
  // center of mass lands at the solver tolerance rather than at the
  // truncation floor.
  auto ctx = SphereContext::make(2, GridMode::Full2D, 48);
  SpectralField u = renormalize_volume(
      ctx, bubble(ctx, MobiusParam::make({0.0, 0.0, 1.0}, 0.2)));
  Snapshot snap;
  snap.n = 2;
  snap.mode = GridMode::Full2D;
  snap.L = 48;
  snap.coeffs = u.c;
  const std::string in = (tmp.path / "bubble.qfs").string();
  const std::string out = (tmp.path / "norm.qfs").string();
  write_snapshot(in, snap);

  CHECK(command_normalize(in, out) == 0);
  Snapshot normed = read_snapshot(out);
  SpectralField v;
  v.c = normed.coeffs;
  auto com = center_of_mass(ctx, v);
  double nrm = 0.0;
  for (double c : com) nrm += c * c;
  CHECK(std::sqrt(nrm) <= 1e-7);

  CHECK(command_bubble_fit(in) == 0);
}

TEST_CASE("command_sweep launches independent runs") {
  TempDir tmp;
  RunConfig cfg = parse_config(
      "n=2\nL=16\nf=constant:1\nu0=harmonic:2,0,0.05\nt_max=0.1\nrecord_every=5\n");
  cfg.output_dir = tmp.path.string();
  CHECK(command_sweep(cfg, "dt0", {"0.001", "0.002"}, 2) == 0);
  CHECK(fs::exists(tmp.path / "run_000" / "diagnostics.csv"));
  CHECK(fs::exists(tmp.path / "run_001" / "diagnostics.csv"));
  // the varied key took effect: second run's first step is larger
  CsvTable a = read_csv((tmp.path / "run_000" / "diagnostics.csv").string());
  CsvTable b = read_csv((tmp.path / "run_001" / "diagnostics.csv").string());
  CHECK(a.rows[0][a.column("dt")] == 0.001);
  CHECK(b.rows[0][b.column("dt")] == 0.002);
}

TEST_CASE("output root override") {
  TempDir tmp;
  ::setenv("QFLOW_OUTPUT_ROOT", tmp.path.c_str(), 1);
  std::string resolved = resolve_output_dir("sub");
  ::unsetenv("QFLOW_OUTPUT_ROOT");
  CHECK(resolved == (tmp.path / "sub").string());
  CHECK(resolve_output_dir("sub") == "sub");
}

TEST_CASE("qflow binary end to end") {
#ifdef QFLOW_BIN
  TempDir tmp;
  {
    std::ofstream cfg(tmp.path / "run.cfg");
    cfg << "n=2\nL=16\nf=constant:1\nu0=harmonic:2,0,0.05\nt_max=0.05\n";
    cfg << "output_dir=" << (tmp.path / "out").string() << "\n";
  }
  std::string cmd = std::string(QFLOW_BIN) + " run " +
                    (tmp.path / "run.cfg").string() + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(tmp.path / "out" / "diagnostics.csv"));

  std::string morse = std::string(QFLOW_BIN) + " morse " +
                      (tmp.path / "run.cfg").string() +
                      " --f 'bumps:0.5;1,4,0,0,1' --output-dir " +
                      (tmp.path / "m").string() + " > /dev/null 2>&1";
  CHECK(std::system(morse.c_str()) == 0);
  CHECK(fs::exists(tmp.path / "m" / "morse_report.json"));
#endif
}
