// msmw: command-line experiment runner.
//
//   msmw run   --config <file> [--out <dir>] [--format csv|json]
//   msmw sweep --config <file> --param <name> --values <v1,v2,...> [--out <dir>]
//   msmw bench --trace <file> --eps <e> [--delta <d>] [--max-value <h>]
//   msmw verify [--quick]
//
// Exit codes: 0 success, 1 a bound check failed, 2 bad config or arguments.
// MSMW_OUT_DIR sets the default output directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "CLI11.hpp"
#include "msmw/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kBoundFailure = 1;
constexpr int kConfigError = 2;

void print_verdicts(const msmw::RunResult& r) {
  for (const auto& l : r.learners) {
    std::size_t failed = 0;
    for (const auto& v : l.verdicts) {
      if (v.holds) continue;
      ++failed;
      std::fprintf(stderr, "  FAIL %s: %s  %.10g %s %.10g%s%s\n", l.learner.c_str(), v.name.c_str(), v.lhs,
                   v.relation.c_str(), v.rhs, v.seed ? (" seed " + std::to_string(*v.seed)).c_str() : "",
                   v.detail.empty() ? "" : ("  [" + v.detail + "]").c_str());
    }
    std::printf("%-16s checks %zu, failed %zu", l.learner.c_str(), l.verdicts.size(), failed);
    for (const char* key : {"regret_best_arm", "alg_gain_expected", "gmax", "gmax_delta", "opt_delta"}) {
      const auto it = l.final_mean.find(key);
      if (it != l.final_mean.end()) std::printf("  %s=%.6g", key, it->second);
    }
    std::printf("\n");
  }
}

int cmd_run(const std::string& config, const std::string& out, const std::string& format) {
  msmw::ExperimentConfig cfg = msmw::ExperimentConfig::from_file(config);
  if (!out.empty()) cfg.out_dir = out;
  if (!format.empty()) {
    if (format != "csv" && format != "json") throw msmw::ConfigError("--format must be csv or json");
    cfg.format = format;
  }
  const msmw::RunResult result = msmw::run_experiment(cfg);
  const auto path = msmw::emit_results({result}, cfg.out_dir, cfg.name, cfg.format);
  print_verdicts(result);
  std::printf("wrote %s (%.2fs)\n", path.string().c_str(), result.wall_clock_seconds);
  return result.all_hold() ? kOk : kBoundFailure;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& values, const std::string& out) {
  const msmw::ConfigFile raw = msmw::ConfigFile::parse_file(config);
  std::vector<std::string> list = msmw::detail::split(values, ',');
  const msmw::ExperimentConfig base = msmw::ExperimentConfig::from_raw(raw);
  const std::string dir = out.empty() ? base.out_dir : out;
  const auto points = msmw::sweep(raw, param, list);

  const std::filesystem::path path = std::filesystem::path(dir) / (base.name + "_sweep.csv");
  std::filesystem::create_directories(dir);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  msmw::write_sweep_csv(param, points, f);

  bool ok = true;
  for (const auto& p : points) {
    std::printf("%s = %s\n", param.c_str(), p.value.c_str());
    print_verdicts(p.result);
    ok = ok && p.result.all_hold();
  }
  std::printf("wrote %s\n", path.string().c_str());
  return ok ? kOk : kBoundFailure;
}

int cmd_bench(const std::string& trace_path, double eps, std::optional<double> delta, std::optional<double> h) {
  const msmw::ValueTrace trace = msmw::ValueTrace::read(trace_path);
  const double top = h.value_or(std::max(1.0, trace.max_value()));
  std::printf("rounds %zu  buyers %zu  max value %.17g\n", trace.rounds(), trace.buyers(), trace.max_value());
  if (trace.buyers() == 1) {
    const msmw::PriceGrid grid(eps, top);
    const auto g = msmw::benchmark_gmax(trace, grid);
    std::printf("G_max          %.17g  at price %.17g\n", g.value, g.price);
    if (delta) {
      const auto gd = msmw::benchmark_gmax_delta(trace, grid, *delta);
      std::printf("G_max(delta)   %.17g  at price %.17g%s\n", gd.value, gd.price,
                  gd.qualified ? "" : "  (no price meets the market share)");
    }
  } else if (!delta) {
    throw msmw::ConfigError("--delta is required for multi-buyer traces");
  }
  if (delta) {
    const msmw::PriceGrid grid(eps, top);
    const bool v_bar_only = trace.buyers() * grid.size() > msmw::kMyersonSlotCap;
    if (v_bar_only) {
      if (trace.buyers() > 1)
        throw msmw::ConfigError("buyers * levels = " + std::to_string(trace.buyers() * grid.size()) +
                                " exceeds the enumeration cap of " + std::to_string(msmw::kMyersonSlotCap) +
                                "; use a coarser --eps or a smaller --max-value");
      std::printf("V-bar          %.17g\n", msmw::v_bar(trace, *delta));
      std::printf("OPT(delta)     skipped: %zu levels exceed the enumeration cap of %zu\n", grid.size(),
                  msmw::kMyersonSlotCap);
      return kOk;
    }
    const auto mechanisms = msmw::enumerate_myerson(trace.buyers(), grid.prices());
    const auto opt = msmw::benchmark_opt_delta_multibuyer(trace, *delta, mechanisms);
    std::printf("V-bar          %.17g\n", opt.v_bar);
    std::printf("OPT(delta)     %.17g  over %zu mechanisms\n", opt.value, mechanisms.size());
  }
  return kOk;
}

int cmd_verify(bool quick) {
  std::string command = MSMW_ACCEPTANCE_BINARY;
  if (quick) command += " --quick";
  const int status = std::system(command.c_str());
  if (status == -1) throw std::runtime_error("cannot launch " + std::string(MSMW_ACCEPTANCE_BINARY));
  return WIFEXITED(status) && WEXITSTATUS(status) == 0 ? kOk : kBoundFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale online learning experiments"};
  app.require_subcommand(1);

  std::string config, out, format, param, values, trace;
  double eps = 0.0;
  std::optional<double> delta, h;
  bool quick = false;

  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config, "Config file")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--format", format, "csv or json");

  auto* sw = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  sw->add_option("--config", config, "Config file")->required();
  sw->add_option("--param", param, "section.key to vary")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->add_option("--out", out, "Output directory");

  auto* bench = app.add_subcommand("bench", "Offline benchmarks on a trace file");
  bench->add_option("--trace", trace, "Trace CSV")->required();
  bench->add_option("--eps", eps, "Price grid spacing")->required();
  bench->add_option("--delta", delta, "Market-share guard");
  bench->add_option("--max-value", h, "Top of the price grid (default: max value)");

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_flag("--quick", quick, "Reduced seeds and horizons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, out, format);
    if (*sw) return cmd_sweep(config, param, values, out);
    if (*bench) return cmd_bench(trace, eps, delta, h);
    if (*verify) return cmd_verify(quick);
  } catch (const msmw::InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  }
  return kOk;
}
