#pragma once

#include <string>

#include "qflow/candidate.hpp"
#include "qflow/flow.hpp"

namespace qflow {

// Run configuration, parsed from "key=value" text (one pair per line, '#'
// comments, later duplicates win). Required keys: n, f.
struct RunConfig {
  int n = 0;
  GridMode mode = GridMode::Full2D;
  int L = 32;
  double dt0 = 1e-3;
  double dt_max = 0.1;
  double t_max = 200.0;
  double tol_converge = 1e-8;
  double u_blow = 6.0;
  double r_min = 0.05;
  int record_every = 1;
  int scan_every = 25;
  unsigned long long seed = 0;
  std::string output_dir = ".";
  std::string f_spec;
  std::string u0_spec = "zero";

  FlowParams flow_params() const;
  std::string canonical_text() const; // normalized key=value dump, keys sorted
};

RunConfig parse_config(const std::string& text);

FSpec parse_fspec(const std::string& text, int n);

// Resolves u0_spec against a context: "zero", "bubble:eps,x...",
// "harmonic:l,m,amp" (Full2D) or "harmonic:l,amp" (axisymmetric),
// "randband:amp,lmax" (seeded). The result is volume-normalized.
SpectralField build_initial(const SphereContext& ctx, const RunConfig& cfg);

unsigned long long fnv1a(const void* data, std::size_t len,
                         unsigned long long seed = 0xcbf29ce484222325ULL);

} // namespace qflow
