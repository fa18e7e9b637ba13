#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pzbeam/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Piezoelectric beam numerical lab"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;

  for (const auto& name : pzbeam::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pzbeam::kExitConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const int rc = pzbeam::execute_file(command, config_path, out_dir, seed, threads);
  if (rc != pzbeam::kExitOk) {
    std::cerr << command << ": exit " << rc << ", see " << out_dir << "/"
              << (rc == pzbeam::kExitCheckFailure ? "summary.json" : "error.json") << "\n";
  }
  return rc;
}
