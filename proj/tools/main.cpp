#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "chaining_lab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"chaining-lab: l1-penalized M-estimation and empirical-process experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  const std::vector<std::string> names = {"solve",  "simulate", "check",
                                          "chain",  "oracle",   "scaling"};
  const std::vector<std::string> descs = {
      "penalized M-estimation on a configured model and sample",
      "E_n estimates and regime bounds over (n, p) grids",
      "Monte Carlo verification of the tail and contraction bounds",
      "Dudley vs dual-norm comparison over l1-hull surrogates",
      "oracle-inequality replication experiment",
      "scaling-law fits of E_n against n and p"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required();
    sub->add_option_function<std::uint64_t>(
        "--seed", [&seed](std::uint64_t v) { seed = v; },
        "master seed override");
    sub->add_option_function<std::string>(
        "--out", [&out_dir](const std::string& v) { out_dir = v; },
        "output directory override");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  std::string error;
  const int status = chainlab::run_experiment(sub, config_path, seed, out_dir, &error);
  if (status == 1) std::cerr << error << "\n";
  return status;
}
