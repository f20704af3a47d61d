#include "embedprobe/scenario_forge.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace embedprobe {

namespace {

using json = nlohmann::json;

struct FeatureInfo {
  std::string_view name;
  std::string_view unit;
  double baseline;
  int rhythm_cycles;    // per 50 canonical samples
  double rhythm_phase;  // radians
};

constexpr std::array<FeatureInfo, kFeatureCount> kFeatureInfo = {{
    {"arterial_pressure", "mmHg", 93.0, 1, 0.0},
    {"co2_production_rate", "mL/min", 200.0, 2, 0.9},
    {"central_venous_pressure", "mmHg", 6.0, 3, 1.8},
    {"heart_rate", "1/min", 75.0, 4, 2.7},
    {"oxygen_consumption_rate", "mL/min", 250.0, 5, 3.6},
    {"renal_blood_flow", "L/min", 1.1, 6, 4.5},
    {"respiration_rate", "1/min", 14.0, 7, 5.4},
}};

// Fractional change of each feature at full severity, per template, in
// FeatureId order.
constexpr std::array<std::array<double, kFeatureCount>, 3> kTemplateDeltas = {{
    // hemorrhage: pressure falls, compensatory tachycardia and tachypnoea
    {-0.40, -0.20, -0.60, 0.60, -0.20, -0.50, 0.40},
    // sepsis: rising heart/respiration rate and metabolism, falling pressures
    {-0.30, 0.30, -0.30, 0.55, 0.35, -0.35, 0.70},
    // multi-organ failure: broad decline
    {-0.35, -0.30, -0.25, -0.20, -0.30, -0.55, -0.25},
}};

// Transient excursion (compensation or overshoot) peaking mid-episode.
constexpr std::array<std::array<double, kFeatureCount>, 3> kTemplateBumps = {{
    {0.00, 0.25, 0.00, -0.20, 0.30, 0.00, 0.30},
    {0.15, 0.00, 0.20, 0.00, 0.00, 0.30, 0.00},
    {0.00, 0.20, 0.30, 0.35, 0.00, 0.00, 0.30},
}};

// Fraction of the post-onset interval before each feature responds.
constexpr std::array<double, kFeatureCount> kFeatureLags = {0.00, 0.15, 0.05, 0.00, 0.20, 0.10, 0.25};

constexpr double kRhythmGain = 0.06;
constexpr double kNoiseGain = 0.02;
constexpr Index kRhythmWindow = 50;

double patient_baseline(FeatureId feature, const PatientProfile& patient) {
  const double base = kFeatureInfo[feature_index(feature)].baseline;
  const double age = patient.age - 40.0;
  const bool male = patient.sex == Sex::Male;
  switch (feature) {
    case FeatureId::ArterialPressure: return base + 0.15 * age - (male ? 0.0 : 3.0);
    case FeatureId::HeartRate: return base - 0.1 * age + (male ? 0.0 : 3.0);
    case FeatureId::RenalBloodFlow: return base * (1.0 - 0.004 * age);
    case FeatureId::Co2ProductionRate:
    case FeatureId::OxygenConsumptionRate: return base * (male ? 1.1 : 0.95);
    default: return base;
  }
}

// Monotone progression from 0 at onset to 1 at the end of the episode.
double progression(ScenarioTemplate kind, double tau, double severity) {
  if (tau <= 0.0) return 0.0;
  tau = std::min(tau, 1.0);
  switch (kind) {
    case ScenarioTemplate::Hemorrhage: {
      const double rate = 2.0 + 3.0 * severity;
      return (1.0 - std::exp(-rate * tau)) / (1.0 - std::exp(-rate));
    }
    case ScenarioTemplate::Sepsis: {
      const double centre = 0.45 - 0.15 * severity;
      auto logistic = [&](double x) { return 1.0 / (1.0 + std::exp(-10.0 * (x - centre))); };
      return (logistic(tau) - logistic(0.0)) / (logistic(1.0) - logistic(0.0));
    }
    case ScenarioTemplate::MultiOrganFailure: return std::pow(tau, 1.6 - 0.6 * severity);
  }
  return 0.0;
}

std::string cell_label(std::string_view scenario, std::string_view patient, FeatureId feature) {
  return CellKey{std::string(scenario), std::string(patient), feature}.describe();
}

}  // namespace

// ---------------------------------------------------------------------------
// Feature and profile helpers

std::string_view feature_name(FeatureId feature) { return kFeatureInfo[feature_index(feature)].name; }
std::string_view feature_unit(FeatureId feature) { return kFeatureInfo[feature_index(feature)].unit; }
char feature_code(FeatureId feature) { return char('A' + int(feature_index(feature))); }

std::optional<FeatureId> parse_feature(std::string_view name) {
  for (FeatureId f : kAllFeatures)
    if (feature_name(f) == name) return f;
  return std::nullopt;
}

std::string_view sex_name(Sex sex) { return sex == Sex::Female ? "female" : "male"; }

void PatientProfile::validate() const {
  if (id.empty()) throw Error(ErrorCode::SchemaError, "patient id is empty");
  if (!(age >= 1.0 && age <= 100.0))
    throw Error(ErrorCode::SchemaError, "patient " + id + ": age out of range [1, 100]");
  if (!(severity >= 0.0 && severity <= 1.0))
    throw Error(ErrorCode::SchemaError, "patient " + id + ": severity out of range [0, 1]");
}

void SignalRecord::validate() const {
  const std::string where = cell_label(scenario, patient, feature);
  if (times.size() != values.size())
    throw Error(ErrorCode::SchemaError, where + ": times and values differ in length");
  if (!values.allFinite()) throw Error(ErrorCode::SchemaError, where + ": non-finite value");
  for (Index i = 1; i < times.size(); ++i)
    if (!(times(i) > times(i - 1)))
      throw Error(ErrorCode::GapError, where + ": time is not strictly increasing at row " +
                                           std::to_string(i));
}

bool SignalRecord::operator==(const SignalRecord& other) const {
  return scenario == other.scenario && patient == other.patient && feature == other.feature &&
         times.size() == other.times.size() && values.size() == other.values.size() &&
         times == other.times && values == other.values;
}

std::vector<const PatientProfile*> Manifest::patients_of(std::string_view scenario) const {
  std::vector<const PatientProfile*> out;
  for (const auto& p : patients)
    if (p.scenario == scenario) out.push_back(&p);
  return out;
}

std::string CellKey::describe() const {
  return "(scenario=" + scenario + ", patient=" + patient +
         ", feature=" + std::string(feature_name(feature)) + ")";
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Manifest manifest, std::vector<SignalRecord> records)
    : manifest_(std::move(manifest)), records_(std::move(records)) {
  validate();
}

void Dataset::validate() const {
  std::set<std::string> scenarios;
  for (const auto& s : manifest_.scenarios) {
    if (s.empty()) throw Error(ErrorCode::SchemaError, "scenario name is empty");
    if (!scenarios.insert(s).second)
      throw Error(ErrorCode::SchemaError, "duplicate scenario '" + s + "'");
  }
  std::set<std::pair<std::string, std::string>> patients;
  for (const auto& p : manifest_.patients) {
    p.validate();
    if (!scenarios.contains(p.scenario))
      throw Error(ErrorCode::SchemaError,
                  "patient " + p.id + " refers to unknown scenario '" + p.scenario + "'");
    if (!patients.insert({p.scenario, p.id}).second)
      throw Error(ErrorCode::SchemaError, "duplicate patient " + p.id + " in " + p.scenario);
  }

  std::set<CellKey> seen;
  for (const auto& r : records_) {
    r.validate();
    CellKey key{r.scenario, r.patient, r.feature};
    if (!patients.contains({r.scenario, r.patient}))
      throw Error(ErrorCode::SchemaError, key.describe() + ": not listed in the manifest");
    if (!seen.insert(key).second)
      throw Error(ErrorCode::SchemaError, key.describe() + ": duplicate record");
  }
  for (const auto& [scenario, patient] : patients)
    for (FeatureId f : manifest_.features)
      if (!seen.contains(CellKey{scenario, patient, f}))
        throw Error(ErrorCode::SchemaError, cell_label(scenario, patient, f) + ": missing feature");
}

const SignalRecord& Dataset::at(std::string_view scenario, std::string_view patient,
                                FeatureId feature) const {
  for (const auto& r : records_)
    if (r.feature == feature && r.scenario == scenario && r.patient == patient) return r;
  throw Error(ErrorCode::SchemaError, cell_label(scenario, patient, feature) + ": no such cell");
}

std::vector<CellKey> Dataset::cells() const {
  std::vector<CellKey> out;
  for (const auto& scenario : manifest_.scenarios)
    for (const auto* patient : manifest_.patients_of(scenario))
      for (FeatureId f : manifest_.features) out.push_back({scenario, patient->id, f});
  return out;
}

bool Dataset::is_canonical() const {
  return std::all_of(records_.begin(), records_.end(), [&](const SignalRecord& r) {
    return r.size() == manifest_.canonical_length;
  });
}

std::string Dataset::digest() const {
  std::string text = render_manifest(manifest_);
  for (const auto& scenario : manifest_.scenarios)
    for (const auto* patient : manifest_.patients_of(scenario))
      text += render_signal_csv(*this, scenario, patient->id);
  return hex_digest(text);
}

// ---------------------------------------------------------------------------
// Generation

std::string_view template_name(ScenarioTemplate kind) {
  switch (kind) {
    case ScenarioTemplate::Hemorrhage: return "hemorrhage";
    case ScenarioTemplate::Sepsis: return "sepsis";
    case ScenarioTemplate::MultiOrganFailure: return "multi_organ_failure";
  }
  return "unknown";
}

std::optional<ScenarioTemplate> parse_template(std::string_view name) {
  for (auto kind : {ScenarioTemplate::Hemorrhage, ScenarioTemplate::Sepsis,
                    ScenarioTemplate::MultiOrganFailure})
    if (template_name(kind) == name) return kind;
  return std::nullopt;
}

void GeneratorConfig::validate() const {
  if (scenarios.empty()) throw Error(ErrorCode::InvalidConfig, "scenarios: list is empty");
  std::set<std::string> names;
  for (const auto& s : scenarios) {
    if (s.name.empty()) throw Error(ErrorCode::InvalidConfig, "scenarios: empty scenario name");
    if (s.name.find("__") != std::string::npos || s.name.find('/') != std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "scenarios: name '" + s.name + "' contains '__' or '/'");
    if (!names.insert(s.name).second)
      throw Error(ErrorCode::InvalidConfig, "scenarios: duplicate name '" + s.name + "'");
  }
  if (patients_per_scenario < 1)
    throw Error(ErrorCode::InvalidConfig, "patients_per_scenario must be >= 1");
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration_s must be > 0");
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "sample_rate_hz must be > 0");
  if (!(noise_level >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise_level must be >= 0");
  if (duration_s * sample_rate_hz < 1.0)
    throw Error(ErrorCode::InvalidConfig, "duration_s * sample_rate_hz must give >= 2 samples");
  if (canonical_length < 2) throw Error(ErrorCode::InvalidConfig, "canonical_length must be >= 2");
}

double template_trend(ScenarioTemplate kind, FeatureId feature, const PatientProfile& patient,
                      double t, double duration_s) {
  const double onset = kOnsetFraction * duration_s;
  const double tau = (t - onset) / (duration_s - onset);
  const auto f = feature_index(feature);
  const double lag = kFeatureLags[f];
  const double local = (tau - lag) / (1.0 - lag);
  const double delta = kTemplateDeltas[std::size_t(kind)][f];
  const double bump = kTemplateBumps[std::size_t(kind)][f];
  const double transient = local > 0.0 && local < 1.0 ? 4.0 * local * (1.0 - local) : 0.0;
  return patient_baseline(feature, patient) *
         (1.0 + patient.severity *
                    (delta * progression(kind, local, patient.severity) + bump * transient));
}

Dataset generate_dataset(const GeneratorConfig& config) {
  config.validate();

  Manifest manifest;
  manifest.canonical_length = config.canonical_length;
  manifest.seed = config.seed;
  manifest.features.assign(kAllFeatures.begin(), kAllFeatures.end());

  const auto samples = Index(std::floor(config.duration_s * config.sample_rate_hz + 1e-9)) + 1;
  Vector times(samples);
  for (Index i = 0; i < samples; ++i) times(i) = double(i) / config.sample_rate_hz;

  // Rhythms complete an integral number of cycles per 50-sample window of
  // the canonical grid, so every window sees the same phase.
  const double window_span =
      config.duration_s * double(kRhythmWindow) / double(config.canonical_length - 1);

  std::vector<SignalRecord> records;
  for (const auto& scenario : config.scenarios) {
    manifest.scenarios.push_back(scenario.name);
    for (int p = 0; p < config.patients_per_scenario; ++p) {
      char id[16];
      std::snprintf(id, sizeof id, "p%02d", p + 1);
      Rng profile_rng(derive_seed(config.seed, "patient", scenario.name, std::uint64_t(p)));
      PatientProfile patient;
      patient.id = id;
      patient.scenario = scenario.name;
      patient.age = std::round(profile_rng.uniform(18.0, 90.0));
      patient.sex = profile_rng.below(2) == 0 ? Sex::Female : Sex::Male;
      patient.severity = profile_rng.uniform(0.4, 1.0);
      manifest.patients.push_back(patient);

      for (FeatureId feature : kAllFeatures) {
        const auto& info = kFeatureInfo[feature_index(feature)];
        const double scale = patient_baseline(feature, patient);
        Rng noise(derive_seed(config.seed, scenario.name, patient.id, feature_name(feature)));
        SignalRecord record{scenario.name, patient.id, feature, times, Vector(samples)};
        for (Index i = 0; i < samples; ++i) {
          const double t = times(i);
          double value = template_trend(scenario.kind, feature, patient, t, config.duration_s);
          if (config.noise_level > 0.0) {
            const double phase =
                2.0 * std::numbers::pi * info.rhythm_cycles * t / window_span + info.rhythm_phase;
            value += config.noise_level * scale *
                     (kRhythmGain * std::sin(phase) + kNoiseGain * noise.normal());
          }
          record.values(i) = value;
        }
        records.push_back(std::move(record));
      }
    }
  }
  return Dataset(std::move(manifest), std::move(records));
}

// ---------------------------------------------------------------------------
// Canonical form

SignalRecord resample_linear(const SignalRecord& record, Index target_len) {
  const std::string where = cell_label(record.scenario, record.patient, record.feature);
  if (record.size() < 2) throw Error(ErrorCode::TooShort, where + ": fewer than two samples");
  if (target_len < 2) throw Error(ErrorCode::TooShort, where + ": target length below two");

  const Index n = record.size();
  const double t0 = record.times(0);
  const double t1 = record.times(n - 1);
  const double step = (t1 - t0) / double(target_len - 1);
  const double node_tolerance = 1e-12 * (t1 - t0);

  SignalRecord out{record.scenario, record.patient, record.feature, Vector(target_len),
                   Vector(target_len)};
  Index segment = 0;
  for (Index k = 0; k < target_len; ++k) {
    const double t = k + 1 == target_len ? t1 : t0 + double(k) * step;
    while (segment + 2 < n && record.times(segment + 1) <= t) ++segment;
    const double ta = record.times(segment);
    const double tb = record.times(segment + 1);
    double value;
    if (std::abs(t - ta) <= node_tolerance) {
      value = record.values(segment);
    } else if (std::abs(t - tb) <= node_tolerance) {
      value = record.values(segment + 1);
    } else {
      const double fraction = (t - ta) / (tb - ta);
      value = record.values(segment) + fraction * (record.values(segment + 1) - record.values(segment));
    }
    out.times(k) = t;
    out.values(k) = value;
  }
  return out;
}

namespace {

void check_variance(double variance, const SignalRecord& record) {
  if (variance < 1e-15)
    throw Error(ErrorCode::ConstantSignal,
                cell_label(record.scenario, record.patient, record.feature) +
                    ": zero variance; the cell must be excluded");
}

SignalRecord apply_affine(const SignalRecord& record, double mean, double stddev) {
  SignalRecord out = record;
  out.values = (record.values.array() - mean) / stddev;
  return out;
}

}  // namespace

SignalRecord normalize_zscore(const SignalRecord& record) {
  if (record.size() < 1)
    throw Error(ErrorCode::TooShort,
                cell_label(record.scenario, record.patient, record.feature) + ": empty signal");
  const double mean = record.values.mean();
  const double variance = (record.values.array() - mean).square().mean();
  check_variance(variance, record);
  return apply_affine(record, mean, std::sqrt(variance));
}

Dataset canonicalize(const Dataset& dataset, const CanonicalOptions& options) {
  std::vector<SignalRecord> records = dataset.records();

  auto normalize_all = [&] {
    if (options.normalization == Normalization::PerCell) {
      for (auto& r : records) r = normalize_zscore(r);
      return;
    }
    // Pool each feature over the patients of a scenario.
    std::map<std::pair<std::string, FeatureId>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i)
      groups[{records[i].scenario, records[i].feature}].push_back(i);
    for (const auto& [key, members] : groups) {
      double sum = 0;
      double count = 0;
      for (auto i : members) {
        sum += records[i].values.sum();
        count += double(records[i].size());
      }
      const double mean = sum / count;
      double squares = 0;
      for (auto i : members) squares += (records[i].values.array() - mean).square().sum();
      const double variance = squares / count;
      check_variance(variance, records[members.front()]);
      for (auto i : members) records[i] = apply_affine(records[i], mean, std::sqrt(variance));
    }
  };

  if (options.order == CanonicalOrder::NormalizeThenResample) normalize_all();
  for (auto& r : records) r = resample_linear(r, options.length);
  if (options.order == CanonicalOrder::ResampleThenNormalize) normalize_all();

  Manifest manifest = dataset.manifest();
  manifest.canonical_length = options.length;
  return Dataset(std::move(manifest), std::move(records));
}

// ---------------------------------------------------------------------------
// Interchange

std::string signal_file_name(std::string_view scenario, std::string_view patient) {
  return std::string(scenario) + "__" + std::string(patient) + ".csv";
}

std::string render_manifest(const Manifest& manifest) {
  json doc;
  doc["format_version"] = manifest.format_version;
  doc["scenarios"] = manifest.scenarios;
  doc["patients"] = json::array();
  for (const auto& p : manifest.patients)
    doc["patients"].push_back({{"id", p.id},
                               {"scenario", p.scenario},
                               {"age", p.age},
                               {"sex", sex_name(p.sex)},
                               {"severity", p.severity}});
  doc["features"] = json::array();
  for (FeatureId f : manifest.features) doc["features"].push_back(feature_name(f));
  doc["canonical_length"] = manifest.canonical_length;
  doc["seed"] = manifest.seed;
  return doc.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest is not valid JSON: ") + e.what());
  }
  auto require = [&](const char* field) -> const json& {
    if (!doc.contains(field)) throw Error(ErrorCode::SchemaError, std::string("manifest.") + field + " is missing");
    return doc.at(field);
  };
  Manifest m;
  try {
    m.format_version = require("format_version").get<int>();
    if (m.format_version != 1)
      throw Error(ErrorCode::SchemaError,
                  "manifest.format_version " + std::to_string(m.format_version) + " unsupported");
    m.scenarios = require("scenarios").get<std::vector<std::string>>();
    for (const auto& p : require("patients")) {
      PatientProfile profile;
      profile.id = p.at("id").get<std::string>();
      profile.scenario = p.at("scenario").get<std::string>();
      profile.age = p.at("age").get<double>();
      const auto sex = p.at("sex").get<std::string>();
      if (sex != "female" && sex != "male")
        throw Error(ErrorCode::SchemaError, "patient " + profile.id + ": unknown sex '" + sex + "'");
      profile.sex = sex == "female" ? Sex::Female : Sex::Male;
      profile.severity = p.at("severity").get<double>();
      m.patients.push_back(std::move(profile));
    }
    std::set<FeatureId> listed;
    for (const auto& name : require("features").get<std::vector<std::string>>()) {
      const auto f = parse_feature(name);
      if (!f) throw Error(ErrorCode::SchemaError, "manifest.features: unknown feature '" + name + "'");
      if (!listed.insert(*f).second)
        throw Error(ErrorCode::SchemaError, "manifest.features: duplicate '" + name + "'");
      m.features.push_back(*f);
    }
    for (FeatureId f : kAllFeatures)
      if (!listed.contains(f))
        throw Error(ErrorCode::SchemaError,
                    "manifest.features: missing feature '" + std::string(feature_name(f)) + "'");
    m.canonical_length = require("canonical_length").get<Index>();
    m.seed = require("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("manifest: ") + e.what());
  }
  return m;
}

std::string render_signal_csv(const Dataset& dataset, std::string_view scenario,
                              std::string_view patient) {
  const auto& features = dataset.manifest().features;
  std::vector<const SignalRecord*> columns;
  for (FeatureId f : features) columns.push_back(&dataset.at(scenario, patient, f));
  const Vector& times = columns.front()->times;
  for (const auto* c : columns)
    if (c->times.size() != times.size() || c->times != times)
      throw Error(ErrorCode::FormatError,
                  cell_label(scenario, patient, c->feature) +
                      ": features of one patient must share a time grid to be written as CSV");

  std::string out = "time";
  for (FeatureId f : features) {
    out += ',';
    out += feature_name(f);
  }
  out += '\n';
  for (Index i = 0; i < times.size(); ++i) {
    out += format_double(times(i));
    for (const auto* c : columns) {
      out += ',';
      out += format_double(c->values(i));
    }
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::string& dir,
                   const std::string& signals_subdir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  for (const auto& scenario : dataset.manifest().scenarios)
    for (const auto* patient : dataset.manifest().patients_of(scenario))
      write_file_atomic((root / signals_subdir / signal_file_name(scenario, patient->id)).string(),
                        render_signal_csv(dataset, scenario, patient->id));
  write_file_atomic((root / "manifest.json").string(), render_manifest(dataset.manifest()));
}

namespace {

double parse_number(std::string_view field, const std::string& where, std::size_t line) {
  double value = 0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw Error(ErrorCode::ParseError, where + " line " + std::to_string(line) +
                                           ": not a finite number '" + std::string(field) + "'");
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

Dataset ingest_csv(const std::string& signal_dir, const std::string& manifest_path) {
  namespace fs = std::filesystem;
  Manifest manifest = parse_manifest(read_file(manifest_path));

  std::vector<SignalRecord> records;
  for (const auto& scenario : manifest.scenarios) {
    for (const auto* patient : manifest.patients_of(scenario)) {
      const fs::path path = fs::path(signal_dir) / signal_file_name(scenario, patient->id);
      if (!fs::exists(path))
        throw Error(ErrorCode::SchemaError, "missing signal file " + path.string() + " for patient " +
                                                patient->id + " of " + scenario);
      const std::string where = path.string();
      const std::string text = read_file(where);
      std::string_view rest(text);

      std::vector<std::string_view> lines;
      while (!rest.empty()) {
        const auto nl = rest.find('\n');
        auto line = rest.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
      }
      if (lines.empty()) throw Error(ErrorCode::ParseError, where + ": empty file");

      const auto header = split_fields(lines.front());
      if (header.front() != "time")
        throw Error(ErrorCode::ParseError, where + ": first column must be 'time'");
      std::vector<FeatureId> columns;
      for (std::size_t c = 1; c < header.size(); ++c) {
        const auto f = parse_feature(header[c]);
        if (!f)
          throw Error(ErrorCode::SchemaError,
                      where + ": unknown feature column '" + std::string(header[c]) + "'");
        if (std::find(columns.begin(), columns.end(), *f) != columns.end())
          throw Error(ErrorCode::SchemaError,
                      where + ": duplicate feature column '" + std::string(header[c]) + "'");
        columns.push_back(*f);
      }
      std::vector<std::string> missing;
      for (FeatureId f : manifest.features)
        if (std::find(columns.begin(), columns.end(), f) == columns.end())
          missing.push_back(cell_label(scenario, patient->id, f));
      if (!missing.empty()) {
        std::string message = where + ": missing feature cells";
        for (const auto& m : missing) message += " " + m;
        throw Error(ErrorCode::SchemaError, message);
      }

      const auto rows = Index(lines.size() - 1);
      Vector times(rows);
      Matrix values(rows, Index(columns.size()));
      for (Index r = 0; r < rows; ++r) {
        const auto fields = split_fields(lines[std::size_t(r + 1)]);
        const std::size_t line_no = std::size_t(r) + 2;
        if (fields.size() != header.size())
          throw Error(ErrorCode::ParseError, where + " line " + std::to_string(line_no) + ": expected " +
                                                 std::to_string(header.size()) + " fields, found " +
                                                 std::to_string(fields.size()));
        times(r) = parse_number(fields[0], where, line_no);
        if (r > 0 && !(times(r) > times(r - 1)))
          throw Error(ErrorCode::GapError,
                      where + " line " + std::to_string(line_no) + ": time is not strictly increasing");
        for (std::size_t c = 0; c < columns.size(); ++c)
          values(r, Index(c)) = parse_number(fields[c + 1], where, line_no);
      }
      if (rows < 2) throw Error(ErrorCode::ParseError, where + ": fewer than two data rows");

      for (FeatureId f : manifest.features) {
        const auto c = std::find(columns.begin(), columns.end(), f) - columns.begin();
        records.push_back({scenario, patient->id, f, times, values.col(c)});
      }
    }
  }
  return Dataset(std::move(manifest), std::move(records));
}

}  // namespace embedprobe
