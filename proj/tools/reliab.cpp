#include "reliab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace reliab::cli;
  CLI::App app{"Structural reliability analysis with surrogate models"};
  app.require_subcommand(1);

  CommandLine cl;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string output;
  for (auto* sub : {app.add_subcommand("run", "Run the single method declared in the config"),
                    app.add_subcommand("compare", "Run every listed method and emit one CSV table")}) {
    sub->add_option("--config", cl.config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Seed overriding the config");
    sub->add_option("--threads", threads, "Worker threads");
    sub->add_option("--output", output, "Output file overriding the config");
    sub->add_option("--method-override", cl.overrides, "Method option as key=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  auto* sub = app.get_subcommands().front();
  cl.command = sub->get_name() == "run" ? Command::Run : Command::Compare;
  if (sub->count("--seed")) cl.seed = seed;
  if (sub->count("--threads")) cl.threads = threads;
  if (sub->count("--output")) cl.output = output;
  return dispatch(cl, std::cout, std::cerr);
}
