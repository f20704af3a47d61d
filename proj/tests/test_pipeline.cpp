#include <filesystem>

#include "doctest.h"
#include "embedprobe/pipeline.hpp"
#include "support.hpp"

using namespace embedprobe;
using nlohmann::json;
using testing::TempDir;

namespace {

json base_config(const std::string& out) {
  return {
      {"seed", 3},
      {"output_dir", out},
      {"dataset", {{"generate", {{"patients_per_scenario", 2}, {"duration_s", 1800}}}}},
      {"embedder", {{"reference", {{"kind", "identity"}}}}},
      {"metrics", {{"n_perm", 100}}},
  };
}

Error config_error_of(const json& doc, const Overrides& overrides = {}) {
  try {
    parse_run_config(doc, overrides);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected a configuration error");
  return Error(ErrorCode::IoError, "unreachable");
}

bool mentions(const Error& e, const std::string& text) {
  return std::string(e.what()).find(text) != std::string::npos;
}

}  // namespace

TEST_CASE("a complete config parses with defaults filled in") {
  const auto config = parse_run_config(base_config("out"));
  CHECK(config.seed == 3);
  CHECK(config.metrics.seed == 3);
  CHECK(config.metrics.n_perm == 100);
  CHECK(config.metrics.window == 50);
  CHECK(std::get<GeneratorConfig>(config.dataset).patients_per_scenario == 2);
  CHECK(std::get<GeneratorConfig>(config.dataset).seed == 3);
  CHECK(config.canonical.length == 1000);
  CHECK(config.thresholds.decoding_auc == 0.9);
}

TEST_CASE("missing and malformed fields name their path") {
  auto doc = base_config("out");
  doc.erase("seed");
  auto e = config_error_of(doc);
  CHECK(e.code() == ErrorCode::InvalidConfig);
  CHECK(mentions(e, "seed"));

  doc = base_config("out");
  doc["dataset"]["generate"]["patients_per_scenario"] = "five";
  CHECK(mentions(config_error_of(doc), "dataset.generate.patients_per_scenario"));

  doc = base_config("out");
  doc["dataset"]["generate"]["duration_s"] = -4;
  CHECK(mentions(config_error_of(doc), "dataset.generate.duration_s"));

  doc = base_config("out");
  doc["metrics"]["thresholds"] = {{"decoding_aux", 0.8}};
  CHECK(mentions(config_error_of(doc), "metrics.thresholds.decoding_aux"));

  doc = base_config("out");
  doc.erase("embedder");
  CHECK(mentions(config_error_of(doc), "embedder"));

  doc = base_config("out");
  doc["embedder"]["reference"] = {{"kind", "delay"}, {"window", 0}};
  e = config_error_of(doc);
  CHECK(mentions(e, "embedder.reference"));
  CHECK(exit_code_for(e.code()) == 2);

  doc = base_config("out");
  doc.erase("output_dir");
  CHECK(mentions(config_error_of(doc), "output_dir"));
}

TEST_CASE("exactly one dataset source and one embedding source") {
  auto doc = base_config("out");
  doc["dataset"]["ingest"] = {{"signals", "a"}, {"manifest", "b"}};
  CHECK(mentions(config_error_of(doc), "exactly one"));
  doc = base_config("out");
  doc["embedder"]["external"] = {{"dir", "x"}};
  CHECK(mentions(config_error_of(doc), "exactly one"));
}

TEST_CASE("overrides take precedence") {
  auto doc = base_config("out");
  const auto config = parse_run_config(doc, Overrides{99, std::string("elsewhere"), 3u});
  CHECK(config.seed == 99);
  CHECK(config.metrics.seed == 99);
  CHECK(config.output_dir == "elsewhere");
  CHECK(config.threads == 3);
  doc.erase("seed");
  CHECK(parse_run_config(doc, Overrides{5, {}, {}}).seed == 5);
}

TEST_CASE("config digest ignores output dir and threads but not results-relevant fields") {
  const auto a = parse_run_config(base_config("one"));
  auto other = base_config("two");
  other["threads"] = 4;
  CHECK(config_digest(a) == config_digest(parse_run_config(other)));
  other["metrics"]["window"] = 25;
  CHECK(config_digest(a) != config_digest(parse_run_config(other)));
}

TEST_CASE("full run passes for identity and is byte-identical when repeated") {
  TempDir dir("pipeline_all");
  const auto first = parse_run_config(base_config(dir / "a"));
  const auto second = parse_run_config(base_config(dir / "b"));
  const auto report = cmd_all(first);
  cmd_all(second);
  CHECK(report.verdicts.disentanglement);
  CHECK(report.verdicts.temporal_preservation);
  CHECK(report.verdicts.scenario_discrimination);
  CHECK(read_file(dir / "a/assessment.json") == read_file(dir / "b/assessment.json"));
  for (const auto& panel : panel_names())
    CHECK(std::filesystem::exists(dir / ("a/fig_" + panel + ".svg")));
  CHECK(std::filesystem::exists(dir / "a/assessment.md"));
  CHECK(std::filesystem::exists(dir / "a/dataset/canonical/manifest.json"));
  // No temporaries are left behind.
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir.path()))
    CHECK(entry.path().extension() != ".tmp");
}

TEST_CASE("stages can run separately and the external path reads the same files") {
  TempDir dir("pipeline_stages");
  const auto config = parse_run_config(base_config(dir / "run"));
  const Dataset canonical = cmd_generate(config);
  const auto embeddings = cmd_embed(config);
  CHECK(embeddings.size() == canonical.cells().size());
  const auto in_process = cmd_assess(config);

  auto doc = base_config(dir / "external");
  doc["embedder"] = {{"external", {{"dir", dir / "run/embeddings"}}}};
  const auto external = parse_run_config(doc);
  cmd_generate(external);
  cmd_embed(external);
  const auto report = cmd_assess(external);
  CHECK(report.provenance.model_id == "identity");
  CHECK(report.provenance.dataset_digest == in_process.provenance.dataset_digest);
  CHECK(report.decoding.embedded_mean == in_process.decoding.embedded_mean);
}

TEST_CASE("ingesting a written dataset reproduces the generated run") {
  TempDir dir("pipeline_ingest");
  const auto generated = parse_run_config(base_config(dir / "gen"));
  const auto a = cmd_all(generated);

  auto doc = base_config(dir / "ing");
  doc["dataset"] = {{"ingest", {{"signals", dir / "gen/dataset/signals"}, {"manifest", dir / "gen/dataset/manifest.json"}}}};
  const auto b = cmd_all(parse_run_config(doc));
  CHECK(a.provenance.dataset_digest == b.provenance.dataset_digest);
  CHECK(a.entanglement.raw_grand_mean == b.entanglement.raw_grand_mean);
}

TEST_CASE("shape-mismatched external file is a data error naming the cell") {
  TempDir dir("pipeline_mismatch");
  const auto config = parse_run_config(base_config(dir / "run"));
  cmd_generate(config);
  cmd_embed(config);
  const CellKey victim{"sepsis", "p02", FeatureId::OxygenConsumptionRate};
  const std::string path = dir / ("run/embeddings/" + embedding_file_name(victim));
  auto meta = json::parse(read_file(sidecar_path(path)));
  meta["cols"] = 4;
  write_file_atomic(sidecar_path(path), meta.dump());
  try {
    cmd_assess(config);
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.code()) == 3);
    CHECK(mentions(e, "sepsis"));
    CHECK(mentions(e, "p02"));
    CHECK(mentions(e, "oxygen_consumption_rate"));
  }
}

TEST_CASE("assess without a dataset reports what is missing") {
  TempDir dir("pipeline_empty");
  const auto config = parse_run_config(base_config(dir / "nothing"));
  CHECK_THROWS_AS(cmd_assess(config), Error);
}
