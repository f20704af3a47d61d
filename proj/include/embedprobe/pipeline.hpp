#pragma once

// Run configuration and the generate -> embed -> assess stages behind the
// command-line tool. Stage outputs are plain directories under the run's
// output dir:
//
//   dataset/manifest.json, dataset/signals/        raw episodes
//   dataset/canonical/manifest.json, .../signals/   resampled + normalised
//   embeddings/                                     reference embeddings
//   assessment.json, assessment.md, fig_<panel>.svg

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "embedprobe/embedders.hpp"
#include "embedprobe/metrics.hpp"
#include "embedprobe/report.hpp"
#include "embedprobe/scenario_forge.hpp"
#include "json.hpp"

namespace embedprobe {

struct IngestSource {
  std::string signals_dir;
  std::string manifest_path;
};

struct ExternalEmbeddings {
  std::string dir;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::variant<GeneratorConfig, IngestSource> dataset;
  CanonicalOptions canonical;
  std::variant<EmbedderSpec, ExternalEmbeddings> embedder;
  MetricOptions metrics;  // metrics.seed already resolved
  Thresholds thresholds;
  std::string output_dir;
  unsigned threads = 1;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<unsigned> threads;
};

/// Parses a run configuration. Relative paths resolve against `base_dir`.
/// Throws InvalidConfig naming the offending field path, e.g.
/// "dataset.generate.patients_per_scenario".
RunConfig parse_run_config(const nlohmann::json& doc, const Overrides& overrides = {},
                           const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path, const Overrides& overrides = {});

/// Normalised form of everything that can affect results (no output dir,
/// no thread count); its digest is the report's config digest.
nlohmann::json run_config_identity(const RunConfig& config);
std::string config_digest(const RunConfig& config);

std::string dataset_dir(const RunConfig& config);
std::string canonical_dir(const RunConfig& config);
std::string embedding_dir(const RunConfig& config);

/// Builds (or ingests) the dataset, canonicalises it and writes both forms.
Dataset cmd_generate(const RunConfig& config);
/// Embeds the canonical dataset with the reference embedder, or validates
/// an external embedding dir against it.
EmbeddingSet cmd_embed(const RunConfig& config);
/// Runs every battery and writes the report files.
AssessmentReport cmd_assess(const RunConfig& config);
AssessmentReport cmd_all(const RunConfig& config);

/// Runs the batteries on in-memory inputs.
AssessmentReport assess(const Dataset& canonical, const EmbeddingSet& embeddings,
                        const std::string& model_id, const RunConfig& config);

void write_report_files(const AssessmentReport& report, const std::string& dir);

/// 0 ok, 2 configuration error, 3 data error.
int exit_code_for(ErrorCode code);

}  // namespace embedprobe
