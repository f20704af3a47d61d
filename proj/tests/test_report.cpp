#include <cmath>
#include <map>
#include <regex>

#include "doctest.h"
#include "embedprobe/report.hpp"
#include "support.hpp"

using namespace embedprobe;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an embedprobe::Error");
  return ErrorCode::IoError;
}

AssessmentReport identity_report() {
  static const AssessmentReport report = [] {
    const Dataset d = canonicalize(generate_dataset(testing::small_generator(5, 2)));
    const auto emb = embed_dataset(d, EmbedderSpec::identity());
    MetricOptions options;
    options.seed = 5;
    options.n_perm = 100;
    Provenance provenance;
    provenance.config_digest = "cfg";
    provenance.model_id = "identity";
    provenance.seeds = {{"run", 5}};
    return assemble(provenance, feature_entanglement(d, emb, options), reconstruction_assessment(d, emb, options),
                    temporal_dynamics(d, emb, options), scenario_similarity(d, emb, options),
                    feature_decoding(d, emb, options));
  }();
  return report;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (std::isnan(a(i)) != std::isnan(b(i))) return false;
    if (!std::isnan(a(i)) && a(i) != b(i)) return false;
  }
  return true;
}

DecodingReport decoding_with_mean(double mean) {
  DecodingReport d;
  d.embedded_mean = mean;
  return d;
}

}  // namespace

TEST_CASE("disentanglement verdict follows the 0.9 bar") {
  const DynamicsReport dyn;
  const ScenarioReport sc;
  CHECK(compute_verdicts(dyn, sc, decoding_with_mean(0.95), {}).disentanglement);
  CHECK_FALSE(compute_verdicts(dyn, sc, decoding_with_mean(0.78), {}).disentanglement);
  CHECK_FALSE(compute_verdicts(dyn, sc, decoding_with_mean(0.9), {}).disentanglement);
  CHECK_FALSE(compute_verdicts(dyn, sc, decoding_with_mean(std::nan("")), {}).disentanglement);
}

TEST_CASE("temporal and scenario verdict rules") {
  DynamicsReport dyn;
  dyn.mean_raw_smoothness = 0.9;
  dyn.mean_embedded_smoothness = 0.7;
  ScenarioReport sc;
  sc.raw_mean_similarity = 0.3;
  sc.embedded_mean_similarity = 0.4;
  auto v = compute_verdicts(dyn, sc, {}, {});
  CHECK(v.temporal_preservation);
  CHECK(v.scenario_discrimination);
  dyn.mean_embedded_smoothness = 0.69;
  sc.embedded_mean_similarity = 0.41;
  v = compute_verdicts(dyn, sc, {}, {});
  CHECK_FALSE(v.temporal_preservation);
  CHECK_FALSE(v.scenario_discrimination);
}

TEST_CASE("identity run passes every verdict") {
  const auto& r = identity_report();
  CHECK(r.verdicts.disentanglement);
  CHECK(r.verdicts.temporal_preservation);
  CHECK(r.verdicts.scenario_discrimination);
  CHECK(r.feature_codes == std::vector<std::string>{"A", "B", "C", "D", "E", "F", "G"});
  CHECK(r.provenance.dataset_digest == r.entanglement.dataset_digest);
  CHECK(r.schema_version == 1);
}

TEST_CASE("mismatched dataset digests are rejected") {
  const auto& r = identity_report();
  auto decoding = r.decoding;
  decoding.dataset_digest = "other";
  CHECK(code_of([&] {
          assemble(r.provenance, r.entanglement, r.reconstruction, r.dynamics, r.scenario, decoding);
        }) == ErrorCode::ProvenanceMismatch);
  auto provenance = r.provenance;
  provenance.dataset_digest = "elsewhere";
  CHECK(code_of([&] {
          assemble(provenance, r.entanglement, r.reconstruction, r.dynamics, r.scenario, r.decoding);
        }) == ErrorCode::ProvenanceMismatch);
}

TEST_CASE("json round-trips losslessly and canonically") {
  const auto& r = identity_report();
  const std::string text = render_json(r);
  const auto back = parse_report(text);
  CHECK(render_json(back) == text);
  CHECK(back.provenance.seeds == r.provenance.seeds);
  CHECK(same_matrix(back.decoding.raw_auc, r.decoding.raw_auc));
  CHECK(same_matrix(back.reconstruction.test_r2, r.reconstruction.test_r2));
  REQUIRE(back.dynamics.scenarios.size() == r.dynamics.scenarios.size());
  CHECK(same_matrix(back.dynamics.scenarios[0].raw_trajectory, r.dynamics.scenarios[0].raw_trajectory));
  CHECK(back.entanglement.raw_grand_mean == r.entanglement.raw_grand_mean);
  CHECK(back.verdicts == r.verdicts);

  // Keys come out sorted at every level.
  const auto doc = nlohmann::json::parse(text);
  std::string previous;
  for (const auto& [key, value] : doc.items()) {
    CHECK(previous < key);
    previous = key;
  }
  CHECK(doc["decoding"]["raw_auc"][0][0].is_null());
}

TEST_CASE("stored verdicts are reproducible from the serialised numbers") {
  const auto back = parse_report(render_json(identity_report()));
  CHECK(compute_verdicts(back.dynamics, back.scenario, back.decoding, back.thresholds) == back.verdicts);
}

TEST_CASE("threshold provenance is labelled") {
  const auto doc = report_to_json(identity_report());
  CHECK(doc["thresholds"]["decoding_auc"]["source"].get<std::string>().find("published") != std::string::npos);
  CHECK(doc["thresholds"]["smoothness_drop"]["source"].get<std::string>().find("declared default") != std::string::npos);
  const std::string md = render_markdown(identity_report());
  CHECK(md.find("declared default") != std::string::npos);
  CHECK(md.find(" ± ") != std::string::npos);
}

TEST_CASE("parse_report rejects malformed input") {
  CHECK(code_of([] { parse_report("{"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { parse_report("{\"schema_version\": 1}"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { parse_report("{\"schema_version\": 2}"); }) == ErrorCode::FormatError);
}

TEST_CASE("unknown panel") {
  CHECK(code_of([] { render_svg(identity_report(), "spectrogram"); }) == ErrorCode::UnknownPanel);
}

TEST_CASE("symmetric heatmaps render symmetric colours") {
  const std::regex cell(R"re(data-i="(\d+)" data-j="(\d+)" data-value="[^"]*" fill="(#[0-9a-f]{6})")re");
  for (const char* panel : {"entanglement", "decoding", "scenarios"}) {
    const std::string svg = render_svg(identity_report(), panel);
    // One colour map per heatmap: cells are emitted in row-major blocks.
    std::vector<std::map<std::pair<int, int>, std::string>> maps;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
      const int i = std::stoi((*it)[1]), j = std::stoi((*it)[2]);
      if (i == 0 && j == 0) maps.emplace_back();
      maps.back()[{i, j}] = (*it)[3];
    }
    CHECK_FALSE(maps.empty());
    for (const auto& m : maps)
      for (const auto& [ij, colour] : m) CHECK(m.at({ij.second, ij.first}) == colour);
  }
}

TEST_CASE("panels carry feature-code axis labels") {
  for (const char* panel : {"entanglement", "reconstruction", "decoding"}) {
    const std::string svg = render_svg(identity_report(), panel);
    for (const char* code : {"A", "B", "C", "D", "E", "F", "G"})
      CHECK(svg.find(std::string(">") + code + "</text>") != std::string::npos);
  }
}

TEST_CASE("identity trajectory curves coincide") {
  const std::string svg = render_svg(identity_report(), "dynamics");
  const std::regex line(R"re(<polyline class="(raw|embedded)"[^>]*points="([^"]*)")re");
  std::vector<std::string> raw, embedded;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), line); it != std::sregex_iterator(); ++it)
    ((*it)[1] == "raw" ? raw : embedded).push_back((*it)[2]);
  REQUIRE(raw.size() == identity_report().dynamics.scenarios.size());
  CHECK(raw == embedded);
}
