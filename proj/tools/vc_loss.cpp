// vc-loss <experiment-tag> --config <path.json> [--seed S] [--out DIR]
//
// Exit codes: 0 success, 2 bad command line or config, 3 numerical failure.

#include "vcl/errors.hpp"
#include "vcl/harness.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdint>
#include <iostream>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate neural parameter-to-solution maps with FOSLS and DPG losses"};
  std::string tag;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
  app.add_option("experiment", tag, "tables, ratio_curves, level_set, fields, l2_compare or train_only")->required();
  app.add_option("--config", config_path, "JSON config or a run manifest")->required();
  app.add_option("--seed", seed, "base seed, overrides the config");
  app.add_option("--out", out, "output directory, overrides the config");
  app.add_flag("-q,--quiet", quiet, "only log warnings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    vcl::ExperimentConfig cfg = vcl::loadConfig(config_path, vcl::parseExperiment(tag));
    if (seed) {
      cfg.seed = *seed;
      cfg.deriveSeeds();
    }
    if (out) {
      cfg.output_dir = *out;
    }
    cfg.validate();

    spdlog::info("{} on a {}x{} mesh, seed {}, writing to {}", tag, cfg.mesh_n, cfg.mesh_n, cfg.seed,
                 cfg.output_dir);
    const vcl::ExperimentReport report = vcl::runExperiment(cfg);
    const vcl::WrittenRun run = vcl::writeRun(cfg, report, cfg.output_dir);
    for (const std::string& note : report.advisories) {
      spdlog::warn("advisory: {}", note);
    }
    if (report.skipped > 0) {
      spdlog::warn("{} test samples skipped after failed solves", report.skipped);
    }
    for (const auto& row : report.aggregates.rows()) {
      std::cout << row[0] << " = " << row[1] << '\n';
    }
    std::cout << "wrote " << run.files.size() << " files to " << run.dir.string() << " (inputs " << run.input_hash
              << ")\n";
    return 0;
  } catch (const vcl::InputError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const vcl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
