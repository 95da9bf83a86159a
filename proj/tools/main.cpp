#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "qflow/errors.hpp"
#include "qflow/io.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    std::cerr << "qflow: cannot open config '" << path << "'\n";
    std::exit(1);
  }
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Config text plus per-key flag overrides (later lines win).
struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("config", path, "config file (key=value lines)")->required();
    auto add = [&](const std::string& flag, const std::string& key) {
      cmd->add_option_function<std::string>(
          flag,
          [this, key](const std::string& v) { overrides.push_back(key + "=" + v); },
          "override config key '" + key + "'");
    };
    add("--n", "n");
    add("--mode", "mode");
    add("--L", "L");
    add("--dt0", "dt0");
    add("--dt-max", "dt_max");
    add("--t-max", "t_max");
    add("--tol-converge", "tol_converge");
    add("--u-blow", "u_blow");
    add("--r-min", "r_min");
    add("--record-every", "record_every");
    add("--scan-every", "scan_every");
    add("--seed", "seed");
    add("--output-dir", "output_dir");
    add("--f", "f");
    add("--u0", "u0");
  }

  qflow::RunConfig parse() const {
    std::string text = read_file(path);
    for (const auto& line : overrides) text += "\n" + line;
    return qflow::parse_config(text);
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"prescribed Q-curvature flow simulator on S^n"};
  app.require_subcommand(1);

  ConfigArgs run_args, morse_args, sweep_args;
  std::string resume_path, snapshot_path, normalize_out = "normalized.qfs";
  std::string sweep_key;
  std::string sweep_values;
  int sweep_jobs = 2;

  CLI::App* cmd_run = app.add_subcommand("run", "integrate the flow");
  run_args.attach(cmd_run);
  cmd_run->add_option("--resume", resume_path, "resume from a snapshot file");

  CLI::App* cmd_morse =
      app.add_subcommand("morse", "critical-point analysis and existence criterion");
  morse_args.attach(cmd_morse);

  CLI::App* cmd_norm = app.add_subcommand(
      "normalize", "one-shot center-of-mass normalization of a snapshot");
  cmd_norm->add_option("snapshot", snapshot_path, "snapshot file")->required();
  cmd_norm->add_option("-o,--output", normalize_out, "output snapshot path");

  CLI::App* cmd_fit =
      app.add_subcommand("bubble-fit", "one-shot bubble-profile fit of a snapshot");
  cmd_fit->add_option("snapshot", snapshot_path, "snapshot file")->required();

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run several configs in parallel");
  sweep_args.attach(cmd_sweep);
  cmd_sweep->add_option("--key", sweep_key, "config key to vary")->required();
  cmd_sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required();
  cmd_sweep->add_option("--jobs", sweep_jobs, "concurrent runs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      std::optional<std::string> resume;
      if (!resume_path.empty()) resume = resume_path;
      return qflow::command_run(run_args.parse(), resume);
    }
    if (cmd_morse->parsed()) return qflow::command_morse(morse_args.parse());
    if (cmd_norm->parsed())
      return qflow::command_normalize(snapshot_path, normalize_out);
    if (cmd_fit->parsed()) return qflow::command_bubble_fit(snapshot_path);
    if (cmd_sweep->parsed()) {
      std::vector<std::string> values;
      std::string cur;
      for (char c : sweep_values) {
        if (c == ',') {
          values.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      values.push_back(cur);
      return qflow::command_sweep(sweep_args.parse(), sweep_key, values, sweep_jobs);
    }
  } catch (const qflow::Error& e) {
    std::cerr << "qflow: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
