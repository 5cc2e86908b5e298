// Command-line front door: configured simulator runs, parameter sweeps, the
// verification ledger, closed-form reports, and collection-time measurements.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vtlab/complexity.hpp"
#include "vtlab/runner.hpp"
#include "vtlab/trace_io.hpp"
#include "vtlab/verify.hpp"

namespace {

std::string resolve_out(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("VTLAB_OUT")) return env;
  return "out";
}

int cmd_run(const std::string& config_path, const std::string& out,
            std::int64_t seed_override) {
  vtlab::RawConfig cfg = vtlab::load_config(config_path);
  if (seed_override >= 0)
    cfg.values["seeds"] = std::to_string(seed_override);
  const auto summary = vtlab::cli_run(cfg, resolve_out(out));
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out) {
  const vtlab::RawConfig cfg = vtlab::load_config(config_path);
  const auto report = vtlab::cli_sweep(cfg, resolve_out(out));
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_verify(const std::string& only, const std::string& out) {
  const auto results = vtlab::run_verification(only);
  nlohmann::json ledger = nlohmann::json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name
              << " (" << vtlab::verify_detail::fmt(r.seconds) << "s): "
              << r.details << '\n';
    ledger.push_back({{"id", r.id},
                      {"name", r.name},
                      {"pass", r.pass},
                      {"details", r.details},
                      {"seconds", r.seconds}});
    all_pass = all_pass && r.pass;
  }
  if (results.empty()) {
    std::cerr << "no checks matched the filter\n";
    return 1;
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream f(std::filesystem::path(out) / "verify.json");
    f << ledger.dump(2) << '\n';
  }
  return all_pass ? 0 : 1;
}

int cmd_report(const std::string& config_path) {
  const vtlab::RawConfig cfg = vtlab::load_config(config_path);
  const vtlab::WorkerPool pool = vtlab::build_pool(cfg);

  nlohmann::json j;
  j["note"] = "universal constants dropped; compare values ratio-style";
  j["pool"] = pool.delays;

  if (cfg.has("bounds.L")) {
    const auto b = vtlab::time_bounds(
        pool.delays, cfg.get_double("bounds.L"), cfg.get_double("bounds.delta"),
        cfg.get_double("bounds.sigma2"), cfg.get_double("bounds.eps"));
    j["nonconvex"] = {{"minibatch", b.minibatch},
                      {"async_sgd", b.async_sgd},
                      {"rennala", b.rennala},
                      {"rennala_m", b.rennala_m},
                      {"heterog", b.heterog},
                      {"sync", b.sync},
                      {"sync_m", b.sync_m}};
  }
  if (cfg.has("bounds.M")) {
    const auto b = vtlab::convex_bounds(
        pool.delays, cfg.get_double("bounds.L"), cfg.get_double("bounds.M"),
        cfg.get_double("bounds.R"), cfg.get_double("bounds.sigma2"),
        cfg.get_double("bounds.eps"));
    j["convex"] = {{"lower", b.lower},
                   {"lower_m", b.lower_m},
                   {"graph_oracle", b.graph_oracle},
                   {"minibatch", b.minibatch},
                   {"async_sgd", b.async_sgd}};
  }
  if (cfg.has("bounds.S")) {
    const auto [v, jstar] =
        vtlab::t_prime_min(pool.delays, cfg.get_double("bounds.S"));
    j["t_prime_min"] = {{"value", v}, {"j", jstar}};
  }
  std::cout << j.dump(2) << '\n';

  // small readable table alongside the JSON
  if (j.contains("nonconvex")) {
    std::cout << "\nexpression        value\n";
    for (const auto& key :
         {"minibatch", "async_sgd", "rennala", "heterog", "sync"}) {
      std::printf("%-17s %.6g\n", key, j["nonconvex"][key].get<double>());
    }
  }
  return 0;
}

int cmd_collect_time(const std::string& config_path) {
  const vtlab::RawConfig cfg = vtlab::load_config(config_path);
  const vtlab::WorkerPool pool = vtlab::build_pool(cfg);
  const auto S = static_cast<std::uint64_t>(cfg.get_int("collect.S"));
  const std::string regime = cfg.get_or("collect.regime", "worst_case");
  const auto mode = regime == "fresh" ? vtlab::CollectionRegime::Fresh
                                      : vtlab::CollectionRegime::WorstCase;
  if (regime != "fresh" && regime != "worst_case")
    throw vtlab::ConfigError("collect.regime must be fresh or worst_case");

  const double measured = vtlab::measure_collection_time(pool, S, mode);
  const auto [tp, jstar] =
      vtlab::t_prime_min(pool.delays, static_cast<double>(S));
  double inv = 0.0;
  for (double tau : pool.delays) inv += 1.0 / tau;

  nlohmann::json j;
  j["S"] = S;
  j["regime"] = regime;
  j["measured"] = measured;
  j["lower_bound"] = static_cast<double>(S) / inv;
  j["t_prime_min"] = tp;
  j["t_prime_j"] = jstar;
  j["upper_bound"] = 2.0 * tp;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual-time laboratory for parallel stochastic optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir, only;
  std::int64_t seed_override = -1;

  auto* run = app.add_subcommand("run", "execute a configured experiment");
  run->add_option("--config", config_path, "config file (text or .json)")
      ->required();
  run->add_option("--out", out_dir, "output directory (or $VTLAB_OUT)");
  run->add_option("--seed", seed_override, "override the seed list");

  auto* sweep = app.add_subcommand("sweep", "grid-search over hyperparameters");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "run the verification ledger");
  verify->add_option("--only", only, "substring filter on check id or name");
  verify->add_option("--out", out_dir, "write verify.json here");

  auto* report = app.add_subcommand("report", "evaluate closed-form bounds");
  report->add_option("--config", config_path, "config file with bounds.*")
      ->required();

  auto* collect =
      app.add_subcommand("collect-time", "measure batch collection time");
  collect->add_option("--config", config_path, "config file with collect.*")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed_override);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir);
    if (verify->parsed()) return cmd_verify(only, out_dir);
    if (report->parsed()) return cmd_report(config_path);
    if (collect->parsed()) return cmd_collect_time(config_path);
  } catch (const vtlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
