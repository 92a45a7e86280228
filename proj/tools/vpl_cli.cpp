#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vpl/config.hpp"
#include "vpl/diagnostics.hpp"
#include "vpl/error.hpp"
#include "vpl/experiment.hpp"

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string output_dir;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("-c,--config", o.config_file, "configuration file")->check(CLI::ExistingFile);
  app->add_option("-s,--set", o.sets, "override a key, e.g. --set physics.gamma=0")->take_all();
  app->add_option("-o,--output", o.output_dir, "output directory (output.dir)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vpl::FormatError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

vpl::RunConfig load(const CommonOptions& o, std::map<std::string, std::string> forced) {
  vpl::RunConfig base = o.config_file.empty() ? vpl::RunConfig{} : vpl::parse_config(read_file(o.config_file));
  std::map<std::string, std::string> overrides;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw vpl::ConfigError({"override '" + s + "' is not key=value"});
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!o.output_dir.empty()) overrides["output.dir"] = o.output_dir;
  for (auto& [k, v] : forced) overrides[k] = v;
  return vpl::apply_overrides(base, overrides);
}

int report(const vpl::ExperimentOutcome& out) {
  std::printf("summary: %s\n", out.summary_path.string().c_str());
  if (out.exit_status == 2) {
    const auto summary = nlohmann::json::parse(read_file(out.summary_path.string()));
    std::fprintf(stderr, "error: %s\n", summary["error"]["message"].get<std::string>().c_str());
  }
  for (const auto& name : out.failed_checks) std::printf("check failed: %s\n", name.c_str());
  return out.exit_status;
}

int fit_command(const std::string& csv, const std::string& column, const std::string& mode,
                std::optional<double> t_start, std::optional<double> t_end) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw vpl::FormatError("cannot read " + csv);
  const auto cols = vpl::read_csv_columns(in, {"time", column});
  vpl::FitWindow window{t_start, t_end};
  nlohmann::json out = {{"csv", csv}, {"column", column}};
  std::vector<vpl::FitMode> modes;
  if (mode == "both")
    modes = {vpl::FitMode::exponential, vpl::FitMode::polynomial};
  else
    modes = {vpl::parse_fit_mode(mode)};
  for (auto m : modes) {
    const auto f = vpl::fit_decay(cols[0], cols[1], m, window);
    out[vpl::to_string(m)] = {{"rate", f.rate},       {"intercept", f.intercept}, {"t_start", f.t_start},
                              {"t_end", f.t_end},     {"samples", f.samples},     {"r_squared", f.r_squared}};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-species Vlasov-Poisson-Landau spectral simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts, lin_opts, op_opts;
  std::string resume;
  auto* run = app.add_subcommand("run", "nonlinear run with diagnostics and decay fit");
  add_common(run, run_opts);
  run->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);

  auto* lin = app.add_subcommand("linearized", "linearized decay experiment");
  add_common(lin, lin_opts);

  auto* op = app.add_subcommand("operator-test", "collision operator, weight and projection checks");
  add_common(op, op_opts);

  std::string csv, column = "E_k", mode = "both";
  std::optional<double> t_start, t_end;
  auto* fit = app.add_subcommand("fit", "re-fit a column of an existing diagnostics CSV");
  fit->add_option("csv", csv, "diagnostics CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--column", column, "column to fit")->capture_default_str();
  fit->add_option("--mode", mode, "exponential, polynomial or both")->capture_default_str();
  fit->add_option("--t-start", t_start, "window start");
  fit->add_option("--t-end", t_end, "window end");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = load(run_opts, {});
      return report(resume.empty() ? vpl::run_experiment(config) : vpl::resume_experiment(config, resume));
    }
    if (*lin) return report(vpl::run_experiment(load(lin_opts, {{"run.linearized_mode", "true"}})));
    if (*op) return report(vpl::run_experiment(load(op_opts, {{"run.operator_test_mode", "true"}})));
    if (*fit) return fit_command(csv, column, mode, t_start, t_end);
  } catch (const vpl::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const vpl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
