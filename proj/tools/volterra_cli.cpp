#include "volterra/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Volterra resolvent, positivity and stochastic-convolution toolkit"};
  app.require_subcommand(1);

  volterra::CommandOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_flag("--force", opts.force, "proceed even if the kernel certificate fails");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };
  for (const char* name : {"verify-kernel", "resolvent", "simulate", "check-positivity", "report"}) {
    static const std::map<std::string, std::string> help{
        {"verify-kernel", "certify kernel admissibility"},
        {"resolvent", "build the operator resolvent by both methods"},
        {"simulate", "simulate stochastic convolutions and run path diagnostics"},
        {"check-positivity", "Gram and Bochner positivity checks"},
        {"report", "aggregate the JSON reports in the output directory"}};
    add_common(app.add_subcommand(name, help.at(name)));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : volterra::exit_usage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--config")) opts.config = config;
  if (sub->count("--out")) opts.out = out;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--threads")) opts.threads = threads;
  return volterra::run_command(sub->get_name(), opts);
}
