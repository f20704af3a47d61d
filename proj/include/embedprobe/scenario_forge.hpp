#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embedprobe/common.hpp"

namespace embedprobe {

enum class FeatureId : int {
  ArterialPressure = 0,
  Co2ProductionRate,
  CentralVenousPressure,
  HeartRate,
  OxygenConsumptionRate,
  RenalBloodFlow,
  RespirationRate,
};

inline constexpr std::size_t kFeatureCount = 7;

inline constexpr std::array<FeatureId, kFeatureCount> kAllFeatures = {
    FeatureId::ArterialPressure,      FeatureId::Co2ProductionRate,
    FeatureId::CentralVenousPressure, FeatureId::HeartRate,
    FeatureId::OxygenConsumptionRate, FeatureId::RenalBloodFlow,
    FeatureId::RespirationRate,
};

std::string_view feature_name(FeatureId feature);
std::string_view feature_unit(FeatureId feature);
// Display codes A-G in the order above.
char feature_code(FeatureId feature);
std::optional<FeatureId> parse_feature(std::string_view name);
inline std::size_t feature_index(FeatureId feature) { return static_cast<std::size_t>(feature); }

enum class Sex { Female, Male };

std::string_view sex_name(Sex sex);

struct PatientProfile {
  std::string id;
  std::string scenario;
  double age = 40.0;      // years, 1-100
  Sex sex = Sex::Female;
  double severity = 0.5;  // [0, 1]

  void validate() const;
  bool operator==(const PatientProfile&) const = default;
};

struct SignalRecord {
  std::string scenario;
  std::string patient;
  FeatureId feature = FeatureId::ArterialPressure;
  Vector times;
  Vector values;

  Index size() const { return values.size(); }
  void validate() const;
  bool operator==(const SignalRecord& other) const;
};

struct Manifest {
  int format_version = 1;
  std::vector<std::string> scenarios;
  std::vector<PatientProfile> patients;
  std::vector<FeatureId> features;
  Index canonical_length = 1000;
  std::uint64_t seed = 0;

  std::vector<const PatientProfile*> patients_of(std::string_view scenario) const;
  bool operator==(const Manifest&) const = default;
};

/// Identifies one (scenario, patient, feature) cell.
struct CellKey {
  std::string scenario;
  std::string patient;
  FeatureId feature = FeatureId::ArterialPressure;

  auto operator<=>(const CellKey&) const = default;
  std::string describe() const;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(Manifest manifest, std::vector<SignalRecord> records);

  const Manifest& manifest() const { return manifest_; }
  const std::vector<SignalRecord>& records() const { return records_; }

  // Throws SchemaError when the cell is absent.
  const SignalRecord& at(std::string_view scenario, std::string_view patient,
                         FeatureId feature) const;
  const SignalRecord& at(const CellKey& key) const {
    return at(key.scenario, key.patient, key.feature);
  }

  std::vector<CellKey> cells() const;
  bool is_canonical() const;
  // Fingerprint of the serialised contents; reports carry it as provenance.
  std::string digest() const;

  bool operator==(const Dataset& other) const = default;

 private:
  void validate() const;

  Manifest manifest_;
  std::vector<SignalRecord> records_;
};

// ---------------------------------------------------------------------------
// Generation

enum class ScenarioTemplate { Hemorrhage, Sepsis, MultiOrganFailure };

std::string_view template_name(ScenarioTemplate kind);
std::optional<ScenarioTemplate> parse_template(std::string_view name);

struct ScenarioSpec {
  std::string name;
  ScenarioTemplate kind = ScenarioTemplate::Hemorrhage;
};

struct GeneratorConfig {
  std::vector<ScenarioSpec> scenarios = {
      {"hemorrhage", ScenarioTemplate::Hemorrhage},
      {"sepsis", ScenarioTemplate::Sepsis},
      {"multi_organ_failure", ScenarioTemplate::MultiOrganFailure},
  };
  int patients_per_scenario = 5;
  double duration_s = 3600.0;
  double sample_rate_hz = 0.5;
  // Scales both the feature-specific physiological rhythm and the white
  // measurement noise; 0 leaves only the closed-form trend.
  double noise_level = 0.1;
  std::uint64_t seed = 0;
  Index canonical_length = 1000;

  void validate() const;
};

/// Fraction of the episode before the scenario's insult begins.
inline constexpr double kOnsetFraction = 0.1;

/// Closed-form trend of one feature for one patient, in physical units.
double template_trend(ScenarioTemplate kind, FeatureId feature, const PatientProfile& patient,
                      double t, double duration_s);

Dataset generate_dataset(const GeneratorConfig& config);

// ---------------------------------------------------------------------------
// Canonical form

SignalRecord resample_linear(const SignalRecord& record, Index target_len = 1000);
SignalRecord normalize_zscore(const SignalRecord& record);

enum class Normalization { PerCell, PerScenarioPooled };
enum class CanonicalOrder { ResampleThenNormalize, NormalizeThenResample };

struct CanonicalOptions {
  Index length = 1000;
  Normalization normalization = Normalization::PerCell;
  CanonicalOrder order = CanonicalOrder::ResampleThenNormalize;
};

Dataset canonicalize(const Dataset& dataset, const CanonicalOptions& options = {});

// ---------------------------------------------------------------------------
// Interchange: manifest.json plus one `time,<feature>...` CSV per
// (scenario, patient) named `<scenario>__<patient>.csv`.

std::string signal_file_name(std::string_view scenario, std::string_view patient);
std::string render_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);
std::string render_signal_csv(const Dataset& dataset, std::string_view scenario,
                              std::string_view patient);

/// Writes `<dir>/manifest.json` and `<dir>/<signals_subdir>/*.csv`.
void write_dataset(const Dataset& dataset, const std::string& dir,
                   const std::string& signals_subdir = "signals");
Dataset ingest_csv(const std::string& signal_dir, const std::string& manifest_path);

}  // namespace embedprobe
