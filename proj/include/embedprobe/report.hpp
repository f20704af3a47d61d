#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "embedprobe/metrics.hpp"
#include "json.hpp"

namespace embedprobe {

inline constexpr int kReportSchemaVersion = 1;

/// Verdict thresholds. Only the decoding bar comes from the published
/// protocol; the other two are declared defaults and are labelled as such
/// in every rendered output.
struct Thresholds {
  double decoding_auc = 0.9;     // pass iff embedded mean AUC > this
  double smoothness_drop = 0.2;  // pass iff embedded >= raw - this
  double similarity_rise = 0.1;  // pass iff embedded <= raw + this
};

struct Verdicts {
  bool disentanglement = false;
  bool temporal_preservation = false;
  bool scenario_discrimination = false;

  bool operator==(const Verdicts&) const = default;
};

struct Provenance {
  std::string config_digest;
  std::string dataset_digest;
  std::string model_id;
  std::string tool_version = std::string(kToolVersion);
  std::map<std::string, std::uint64_t> seeds;
};

struct AssessmentReport {
  int schema_version = kReportSchemaVersion;
  Provenance provenance;
  Thresholds thresholds;
  Verdicts verdicts;
  EntanglementReport entanglement;
  ReconstructionReport reconstruction;
  DynamicsReport dynamics;
  ScenarioReport scenario;
  DecodingReport decoding;
  std::vector<std::string> feature_codes;  // axis labels, e.g. "A"
  std::vector<std::string> feature_names;
};

Verdicts compute_verdicts(const DynamicsReport& dynamics, const ScenarioReport& scenario,
                          const DecodingReport& decoding, const Thresholds& thresholds);

/// Throws ProvenanceMismatch unless all reports share one dataset digest
/// (and match `provenance.dataset_digest` when that is set).
AssessmentReport assemble(Provenance provenance, EntanglementReport entanglement,
                          ReconstructionReport reconstruction, DynamicsReport dynamics,
                          ScenarioReport scenario, DecodingReport decoding,
                          const Thresholds& thresholds = {},
                          const std::vector<FeatureId>& features = {kAllFeatures.begin(),
                                                                    kAllFeatures.end()});

nlohmann::json report_to_json(const AssessmentReport& report);
AssessmentReport report_from_json(const nlohmann::json& doc);

/// Canonical JSON: sorted keys, shortest round-trip float formatting,
/// NaN written as null.
std::string render_json(const AssessmentReport& report);
AssessmentReport parse_report(std::string_view text);

std::string render_markdown(const AssessmentReport& report);

/// Panels: entanglement (B), reconstruction (C), dynamics (D),
/// scenarios (E), decoding. Throws UnknownPanel otherwise.
std::string render_svg(const AssessmentReport& report, std::string_view panel);
std::vector<std::string> panel_names();

}  // namespace embedprobe
