#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "embedprobe/pipeline.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("embedprobe");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("EMBEDPROBE_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off")
      spdlog::warn("EMBEDPROBE_LOG: unknown level '{}', using warn", level);
    else
      spdlog::set_level(parsed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace embedprobe;
  configure_logging();

  CLI::App app{"Assess how well time-series embeddings preserve physiological signal structure"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "global seed (overrides seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* generate = app.add_subcommand("generate", "generate or ingest the dataset and canonicalise it");
  auto* embed = app.add_subcommand("embed", "embed the canonical dataset (or validate external embeddings)");
  auto* assess = app.add_subcommand("assess", "run the assessment and write the report files");
  auto* all = app.add_subcommand("all", "generate, embed and assess");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = load_run_config(config_path, Overrides{seed, out, threads});
    if (generate->parsed()) {
      cmd_generate(config);
    } else if (embed->parsed()) {
      cmd_embed(config);
    } else if (assess->parsed()) {
      cmd_assess(config);
    } else if (all->parsed()) {
      const auto report = cmd_all(config);
      std::cout << config.output_dir << "/assessment.json\n";
      std::cout << "disentanglement: " << (report.verdicts.disentanglement ? "pass" : "fail") << '\n'
                << "temporal_preservation: " << (report.verdicts.temporal_preservation ? "pass" : "fail") << '\n'
                << "scenario_discrimination: " << (report.verdicts.scenario_discrimination ? "pass" : "fail")
                << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
