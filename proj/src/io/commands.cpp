#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "json.hpp"

#include "qflow/blowup.hpp"
#include "qflow/diagnostics_csv.hpp"
#include "qflow/errors.hpp"
#include "qflow/io.hpp"
#include "qflow/kernels.hpp"
#include "qflow/mobius.hpp"
#include "qflow/morse.hpp"

namespace qflow {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string resolve_output_dir(const std::string& output_dir) {
  const char* root = std::getenv("QFLOW_OUTPUT_ROOT");
  if (root != nullptr && root[0] != '\0')
    return (fs::path(root) / output_dir).string();
  return output_dir;
}

namespace {

class CsvWriter {
public:
  CsvWriter(const std::string& path, int n) : os_(path, std::ios::trunc) {
    if (!os_) fail(Errc::CorruptPayload, "cannot open '" + path + "'");
    os_ << diagnostics_csv_header(n) << '\n';
  }
  void row(const DiagnosticsRecord& rec) { os_ << diagnostics_csv_row(rec) << '\n'; }

private:
  std::ofstream os_;
};

json probe_json(const ConcentrationProbe& probe) {
  json j;
  j["p_star"] = probe.p_star;
  if (probe.r_star) j["r_star"] = *probe.r_star;
  if (probe.r_star_half) j["r_star_half"] = *probe.r_star_half;
  j["threshold_quarter"] = probe.threshold_quarter;
  j["threshold_half"] = probe.threshold_half;
  return j;
}

json critical_point_json(const CriticalPoint& p) {
  json j;
  j["location"] = p.location;
  j["f_value"] = p.f_value;
  j["grad_norm"] = p.grad_norm;
  j["laplacian"] = p.laplacian;
  j["morse_index"] = p.morse_index;
  j["hessian_eigs"] = p.hessian_eigs;
  j["degenerate"] = p.degenerate;
  return j;
}

Snapshot snapshot_of(const SphereContext& ctx, const FlowState& st,
                     unsigned long long config_hash) {
  Snapshot snap;
  snap.n = ctx.n();
  snap.mode = ctx.mode();
  snap.L = ctx.band_limit();
  snap.t = st.t;
  snap.dt = st.dt;
  snap.step_index = st.step_index;
  snap.accept_streak = st.accept_streak;
  snap.config_hash = config_hash;
  snap.coeffs = st.u.c;
  return snap;
}

} // namespace

int command_run(const RunConfig& cfg, const std::optional<std::string>& resume_path) {
  try {
    SphereContext ctx = SphereContext::make(cfg.n, cfg.mode, cfg.L);
    PaneitzMultiplier mult = make_multiplier(ctx);
    CandidateF f = CandidateF::make(ctx, parse_fspec(cfg.f_spec, cfg.n));
    FlowParams params = cfg.flow_params();
    const std::string canonical = cfg.canonical_text();
    const unsigned long long config_hash = fnv1a(canonical.data(), canonical.size());

    FlowState initial;
    if (resume_path) {
      Snapshot snap = read_snapshot(*resume_path);
      if (snap.n != cfg.n || snap.mode != cfg.mode || snap.L != cfg.L)
        fail(Errc::ConfigMismatch, "snapshot grid does not match the config");
      if (snap.config_hash != config_hash)
        fail(Errc::ConfigMismatch,
             "snapshot was produced by a different config; resume requires an "
             "identical one");
      SpectralField u;
      u.c = snap.coeffs;
      ctx.check_spectral(u);
      initial = resume_state(ctx, mult, f, u, snap.t, snap.dt, snap.step_index,
                             snap.accept_streak);
    } else {
      initial = make_state(ctx, mult, f, build_initial(ctx, cfg), params);
    }

    const std::string outdir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(outdir);
    CsvWriter csv((fs::path(outdir) / "diagnostics.csv").string(), cfg.n);

    RunResult result = run_from(ctx, mult, f, std::move(initial), params,
                                [&](const DiagnosticsRecord& rec) { csv.row(rec); });

    write_snapshot((fs::path(outdir) / "snapshot.qfs").string(),
                   snapshot_of(ctx, result.final_state, config_hash));

    json rep;
    rep["reason"] = stop_kind_name(result.reason.kind);
    rep["detail"] = result.reason.detail;
    rep["t_final"] = result.final_state.t;
    rep["steps"] = result.final_state.step_index;
    rep["E_f_final"] = result.final_state.report.E_f;
    rep["alpha_final"] = result.final_state.report.alpha;
    rep["residual_l2_final"] = result.final_state.residual_l2;
    rep["max_u_final"] = result.final_state.max_u;
    if (!result.trajectory.empty())
      rep["theta_final"] = result.trajectory.back().theta;
    rep["config"] = canonical;

    if (result.reason.kind == StopReason::Kind::Concentrated && result.probe) {
      rep["probe"] = probe_json(*result.probe);
      try {
        BubbleFit fit = fit_bubble(ctx, result.final_state, result.probe->p_star);
        json jf;
        jf["center"] = fit.center;
        jf["lambda"] = fit.lambda;
        jf["z0"] = fit.z0;
        jf["q_inf"] = fit.q_inf;
        jf["fit_residual"] = fit.fit_residual;
        rep["bubble_fit"] = jf;
      } catch (const Error& e) {
        rep["bubble_fit"] = {{"error", e.what()}};
      }
      if (f.has_analytic_derivatives()) {
        // Concentration happens at a critical point of f with f > 0 and
        // Delta f <= 0; report the nearest one.
        try {
          CriticalPointResult cps = find_critical_points(ctx, f);
          const CriticalPoint* best = nullptr;
          double best_d = 1e30;
          for (const auto& p : cps.points) {
            double dp = 0.0;
            for (std::size_t d = 0; d < p.location.size(); ++d)
              dp += p.location[d] * result.probe->p_star[d];
            double dist = std::acos(std::min(1.0, std::max(-1.0, dp)));
            if (dist < best_d) {
              best_d = dist;
              best = &p;
            }
          }
          if (best) {
            json jc = critical_point_json(*best);
            jc["distance_to_p_star"] = best_d;
            rep["nearest_critical_point"] = jc;
          }
        } catch (const Error&) {
          // leave the section out if the search is unavailable
        }
      }
    }

    std::ofstream rf(fs::path(outdir) / "report.json");
    rf << rep.dump(2) << "\n";

    std::cout << "qflow run: " << stop_kind_name(result.reason.kind) << " at t = "
              << format_g17(result.final_state.t) << " after "
              << result.final_state.step_index
              << " steps; E_f = " << format_g17(result.final_state.report.E_f)
              << ", residual_l2 = " << format_g17(result.final_state.residual_l2)
              << "\n";
    return result.reason.kind == StopReason::Kind::NumericFailure ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "qflow run: " << e.what() << "\n";
    return 1;
  }
}

int command_morse(const RunConfig& cfg) {
  try {
    SphereContext ctx = SphereContext::make(cfg.n, cfg.mode, cfg.L);
    CandidateF f = CandidateF::make(ctx, parse_fspec(cfg.f_spec, cfg.n));
    CriterionVerdict v = criterion_verdict(ctx, f);

    json rep;
    rep["candidate"] = f.label();
    rep["gamma"] = v.gamma;
    if (v.k_seq)
      rep["k_seq"] = *v.k_seq;
    else
      rep["k_seq"] = "UNSOLVABLE";
    rep["solvable"] = v.solvable;
    rep["existence_guaranteed"] = v.headline;
    rep["beta_levels"] = v.levels.betas;
    rep["beta_levels_distinct"] = v.levels.distinct;
    json pts = json::array();
    for (const auto& p : v.points) pts.push_back(critical_point_json(p));
    rep["critical_points"] = pts;
    json checks = json::array();
    for (const auto& c : v.hypothesis_report)
      checks.push_back({{"name", c.name},
                        {"pass", c.pass},
                        {"structural", c.structural},
                        {"detail", c.detail}});
    rep["hypothesis_report"] = checks;

    const std::string outdir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(outdir);
    std::ofstream rf(fs::path(outdir) / "morse_report.json");
    rf << rep.dump(2) << "\n";

    std::cout << "candidate: " << f.label() << "\n";
    std::cout << "critical points in {f>0}: " << v.points.size() << "\n";
    std::cout << "gamma =";
    for (long long g : v.gamma) std::cout << ' ' << g;
    std::cout << "\nk sequence: ";
    if (v.k_seq) {
      for (long long k : *v.k_seq) std::cout << k << ' ';
      std::cout << "(solvable)";
    } else {
      std::cout << "UNSOLVABLE";
    }
    std::cout << "\nhypothesis checks:\n";
    for (const auto& c : v.hypothesis_report)
      std::cout << "  " << (c.pass ? "[ok]  " : "[FAIL]") << ' ' << c.name << ": "
                << c.detail << "\n";
    std::cout << "existence guaranteed: " << v.headline << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "qflow morse: " << e.what() << "\n";
    return 1;
  }
}

int command_normalize(const std::string& snapshot_path, const std::string& out_path) {
  try {
    Snapshot snap = read_snapshot(snapshot_path);
    SphereContext ctx = SphereContext::make(snap.n, snap.mode, snap.L);
    SpectralField u;
    u.c = snap.coeffs;
    ctx.check_spectral(u);
    NormalizedState ns = normalize_com(ctx, u);

    Snapshot out = snap;
    out.coeffs = ns.v.c;
    write_snapshot(out_path, out);

    json j;
    j["q"] = ns.phi.q;
    j["eps"] = ns.phi.eps;
    j["ball_point"] = ns.phi.ball_point();
    j["theta"] = ns.theta;
    j["com_residual"] = ns.com_residual;
    j["output"] = out_path;
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "qflow normalize: " << e.what() << "\n";
    return 1;
  }
}

int command_bubble_fit(const std::string& snapshot_path) {
  try {
    Snapshot snap = read_snapshot(snapshot_path);
    SphereContext ctx = SphereContext::make(snap.n, snap.mode, snap.L);
    PaneitzMultiplier mult = make_multiplier(ctx);
    FlowState st;
    st.u.c = snap.coeffs;
    ctx.check_spectral(st.u);
    st.u_grid = ctx.synthesize(st.u);
    st.q_grid = q_curvature(ctx, mult, st.u);
    kernels::active().minmax(st.u_grid.data(), st.u_grid.size(), &st.min_u, &st.max_u);

    ConcentrationProbe probe = concentration_scan(ctx, st, default_radii());
    json j;
    j["probe"] = probe_json(probe);
    try {
      BubbleFit fit = fit_bubble(ctx, st, probe.p_star);
      j["lambda"] = fit.lambda;
      j["z0"] = fit.z0;
      j["q_inf"] = fit.q_inf;
      j["fit_residual"] = fit.fit_residual;
    } catch (const Error& e) {
      j["error"] = e.what();
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "qflow bubble-fit: " << e.what() << "\n";
    return 1;
  }
}

int command_sweep(const RunConfig& base, const std::string& key,
                  const std::vector<std::string>& values, int jobs) {
  if (values.empty()) {
    std::cerr << "qflow sweep: no values given\n";
    return 1;
  }
  std::vector<RunConfig> configs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::string text = base.canonical_text() + key + "=" + values[i] + "\n";
    RunConfig cfg;
    try {
      cfg = parse_config(text);
    } catch (const Error& e) {
      std::cerr << "qflow sweep: " << e.what() << "\n";
      return 1;
    }
    char sub[32];
    std::snprintf(sub, sizeof(sub), "run_%03zu", i);
    cfg.output_dir = (fs::path(base.output_dir) / sub).string();
    configs.push_back(std::move(cfg));
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      int rc = command_run(configs[i], std::nullopt);
      int cur = worst.load();
      while (rc > cur && !worst.compare_exchange_weak(cur, rc)) {
      }
    }
  };
  int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return worst.load();
}

} // namespace qflow
