#include "embedprobe/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace embedprobe {

namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  const auto rows = Index(j.size());
  const Index cols = rows > 0 ? Index(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (Index(j.at(std::size_t(r)).size()) != cols)
      throw Error(ErrorCode::FormatError, "ragged matrix in report");
    for (Index c = 0; c < cols; ++c) m(r, c) = number_from(j.at(std::size_t(r)).at(std::size_t(c)));
  }
  return m;
}

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> vector_from(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from(x));
  return out;
}

std::string fixed(double v, int decimals = 3) {
  if (!std::isfinite(v)) return "n/a";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, v);
  return buffer;
}

}  // namespace

Verdicts compute_verdicts(const DynamicsReport& dynamics, const ScenarioReport& scenario,
                          const DecodingReport& decoding, const Thresholds& thresholds) {
  Verdicts v;
  v.disentanglement = decoding.embedded_mean > thresholds.decoding_auc;
  v.temporal_preservation =
      dynamics.mean_embedded_smoothness >= dynamics.mean_raw_smoothness - thresholds.smoothness_drop;
  v.scenario_discrimination = scenario.embedded_mean_similarity <=
                              scenario.raw_mean_similarity + thresholds.similarity_rise;
  return v;
}

AssessmentReport assemble(Provenance provenance, EntanglementReport entanglement,
                          ReconstructionReport reconstruction, DynamicsReport dynamics,
                          ScenarioReport scenario, DecodingReport decoding,
                          const Thresholds& thresholds, const std::vector<FeatureId>& features) {
  const std::string& digest = entanglement.dataset_digest;
  const std::pair<const char*, const std::string*> others[] = {
      {"reconstruction", &reconstruction.dataset_digest},
      {"dynamics", &dynamics.dataset_digest},
      {"scenario", &scenario.dataset_digest},
      {"decoding", &decoding.dataset_digest},
  };
  for (const auto& [name, other] : others)
    if (*other != digest)
      throw Error(ErrorCode::ProvenanceMismatch,
                  std::string(name) + " report was computed on dataset " + *other +
                      " but entanglement used " + digest);
  if (!provenance.dataset_digest.empty() && provenance.dataset_digest != digest)
    throw Error(ErrorCode::ProvenanceMismatch,
                "reports were computed on dataset " + digest + ", provenance names " +
                    provenance.dataset_digest);
  provenance.dataset_digest = digest;

  AssessmentReport report;
  report.provenance = std::move(provenance);
  report.thresholds = thresholds;
  report.verdicts = compute_verdicts(dynamics, scenario, decoding, thresholds);
  report.entanglement = std::move(entanglement);
  report.reconstruction = std::move(reconstruction);
  report.dynamics = std::move(dynamics);
  report.scenario = std::move(scenario);
  report.decoding = std::move(decoding);
  for (FeatureId f : features) {
    report.feature_codes.emplace_back(1, feature_code(f));
    report.feature_names.emplace_back(feature_name(f));
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

json report_to_json(const AssessmentReport& r) {
  json doc;
  doc["schema_version"] = r.schema_version;
  doc["provenance"] = {{"config_digest", r.provenance.config_digest},
                       {"dataset_digest", r.provenance.dataset_digest},
                       {"model_id", r.provenance.model_id},
                       {"tool_version", r.provenance.tool_version},
                       {"seeds", r.provenance.seeds}};
  doc["thresholds"] = {
      {"decoding_auc", {{"value", r.thresholds.decoding_auc}, {"source", "published protocol (AUC > 0.9)"}}},
      {"smoothness_drop", {{"value", r.thresholds.smoothness_drop}, {"source", "declared default (not a published bar)"}}},
      {"similarity_rise", {{"value", r.thresholds.similarity_rise}, {"source", "declared default (not a published bar)"}}},
  };
  doc["verdicts"] = {{"disentanglement", r.verdicts.disentanglement},
                     {"temporal_preservation", r.verdicts.temporal_preservation},
                     {"scenario_discrimination", r.verdicts.scenario_discrimination}};
  doc["features"] = {{"codes", r.feature_codes}, {"names", r.feature_names}};

  const auto& e = r.entanglement;
  json raw_m = json::array(), emb_m = json::array();
  for (const auto& m : e.raw) raw_m.push_back(matrix_json(m));
  for (const auto& m : e.embedded) emb_m.push_back(matrix_json(m));
  doc["entanglement"] = {{"dataset_digest", e.dataset_digest},
                         {"mode", e.mode},
                         {"scenarios", e.scenarios},
                         {"raw", raw_m},
                         {"embedded", emb_m},
                         {"raw_grand_mean", number(e.raw_grand_mean)},
                         {"embedded_grand_mean", number(e.embedded_grand_mean)},
                         {"raw_pair_values", vector_json(e.raw_pair_values)},
                         {"embedded_pair_values", vector_json(e.embedded_pair_values)},
                         {"notices", e.notices}};

  const auto& c = r.reconstruction;
  doc["reconstruction"] = {{"dataset_digest", c.dataset_digest},
                           {"test_r2", matrix_json(c.test_r2)},
                           {"cv_mean", matrix_json(c.cv_mean)},
                           {"cv_std", matrix_json(c.cv_std)},
                           {"split_seed", c.split_seed},
                           {"train_rows", c.train_rows},
                           {"test_rows", c.test_rows},
                           {"folds", c.folds}};

  const auto& d = r.dynamics;
  json scenarios = json::array();
  for (const auto& s : d.scenarios)
    scenarios.push_back({{"scenario", s.scenario},
                         {"raw_dimensionality", number(s.raw_dimensionality)},
                         {"embedded_dimensionality", number(s.embedded_dimensionality)},
                         {"raw_smoothness", number(s.raw_smoothness)},
                         {"embedded_smoothness", number(s.embedded_smoothness)},
                         {"raw_trajectory", matrix_json(s.raw_trajectory)},
                         {"embedded_trajectory", matrix_json(s.embedded_trajectory)}});
  doc["dynamics"] = {{"dataset_digest", d.dataset_digest},
                     {"scenarios", scenarios},
                     {"mean_raw_dimensionality", number(d.mean_raw_dimensionality)},
                     {"mean_embedded_dimensionality", number(d.mean_embedded_dimensionality)},
                     {"mean_raw_smoothness", number(d.mean_raw_smoothness)},
                     {"mean_embedded_smoothness", number(d.mean_embedded_smoothness)},
                     {"n_perm", d.n_perm},
                     {"per_patient", d.per_patient},
                     {"notices", d.notices}};

  const auto& s = r.scenario;
  doc["scenario"] = {{"dataset_digest", s.dataset_digest},
                     {"scenarios", s.scenarios},
                     {"raw_cosine", matrix_json(s.raw_cosine)},
                     {"embedded_cosine", matrix_json(s.embedded_cosine)},
                     {"raw_mean_similarity", number(s.raw_mean_similarity)},
                     {"embedded_mean_similarity", number(s.embedded_mean_similarity)},
                     {"raw_dimensionality", s.raw_dimensionality},
                     {"embedded_dimensionality", s.embedded_dimensionality}};

  const auto& k = r.decoding;
  doc["decoding"] = {{"dataset_digest", k.dataset_digest},
                     {"raw_auc", matrix_json(k.raw_auc)},
                     {"embedded_auc", matrix_json(k.embedded_auc)},
                     {"raw_mean", number(k.raw_mean)},
                     {"raw_std", number(k.raw_std)},
                     {"embedded_mean", number(k.embedded_mean)},
                     {"embedded_std", number(k.embedded_std)},
                     {"sample_counts", matrix_json(k.sample_counts)},
                     {"test_counts", matrix_json(k.test_counts)},
                     {"split_seed", k.split_seed},
                     {"window", k.window},
                     {"labels_permuted", k.labels_permuted},
                     {"notices", k.notices}};
  return doc;
}

AssessmentReport report_from_json(const json& doc) {
  AssessmentReport r;
  try {
    r.schema_version = doc.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion)
      throw Error(ErrorCode::FormatError,
                  "report schema_version " + std::to_string(r.schema_version) + " unsupported");
    const auto& p = doc.at("provenance");
    r.provenance.config_digest = p.at("config_digest").get<std::string>();
    r.provenance.dataset_digest = p.at("dataset_digest").get<std::string>();
    r.provenance.model_id = p.at("model_id").get<std::string>();
    r.provenance.tool_version = p.at("tool_version").get<std::string>();
    r.provenance.seeds = p.at("seeds").get<std::map<std::string, std::uint64_t>>();

    const auto& t = doc.at("thresholds");
    r.thresholds.decoding_auc = t.at("decoding_auc").at("value").get<double>();
    r.thresholds.smoothness_drop = t.at("smoothness_drop").at("value").get<double>();
    r.thresholds.similarity_rise = t.at("similarity_rise").at("value").get<double>();

    const auto& v = doc.at("verdicts");
    r.verdicts.disentanglement = v.at("disentanglement").get<bool>();
    r.verdicts.temporal_preservation = v.at("temporal_preservation").get<bool>();
    r.verdicts.scenario_discrimination = v.at("scenario_discrimination").get<bool>();
    r.feature_codes = doc.at("features").at("codes").get<std::vector<std::string>>();
    r.feature_names = doc.at("features").at("names").get<std::vector<std::string>>();

    const auto& e = doc.at("entanglement");
    auto& en = r.entanglement;
    en.dataset_digest = e.at("dataset_digest").get<std::string>();
    en.mode = e.at("mode").get<std::string>();
    en.scenarios = e.at("scenarios").get<std::vector<std::string>>();
    for (const auto& m : e.at("raw")) en.raw.push_back(matrix_from(m));
    for (const auto& m : e.at("embedded")) en.embedded.push_back(matrix_from(m));
    en.raw_grand_mean = number_from(e.at("raw_grand_mean"));
    en.embedded_grand_mean = number_from(e.at("embedded_grand_mean"));
    en.raw_pair_values = vector_from(e.at("raw_pair_values"));
    en.embedded_pair_values = vector_from(e.at("embedded_pair_values"));
    en.notices = e.at("notices").get<std::vector<std::string>>();

    const auto& c = doc.at("reconstruction");
    auto& rc = r.reconstruction;
    rc.dataset_digest = c.at("dataset_digest").get<std::string>();
    rc.test_r2 = matrix_from(c.at("test_r2"));
    rc.cv_mean = matrix_from(c.at("cv_mean"));
    rc.cv_std = matrix_from(c.at("cv_std"));
    rc.split_seed = c.at("split_seed").get<std::uint64_t>();
    rc.train_rows = c.at("train_rows").get<Index>();
    rc.test_rows = c.at("test_rows").get<Index>();
    rc.folds = c.at("folds").get<Index>();

    const auto& d = doc.at("dynamics");
    auto& dy = r.dynamics;
    dy.dataset_digest = d.at("dataset_digest").get<std::string>();
    for (const auto& s : d.at("scenarios"))
      dy.scenarios.push_back({s.at("scenario").get<std::string>(),
                              number_from(s.at("raw_dimensionality")),
                              number_from(s.at("embedded_dimensionality")),
                              number_from(s.at("raw_smoothness")),
                              number_from(s.at("embedded_smoothness")),
                              matrix_from(s.at("raw_trajectory")),
                              matrix_from(s.at("embedded_trajectory"))});
    dy.mean_raw_dimensionality = number_from(d.at("mean_raw_dimensionality"));
    dy.mean_embedded_dimensionality = number_from(d.at("mean_embedded_dimensionality"));
    dy.mean_raw_smoothness = number_from(d.at("mean_raw_smoothness"));
    dy.mean_embedded_smoothness = number_from(d.at("mean_embedded_smoothness"));
    dy.n_perm = d.at("n_perm").get<Index>();
    dy.per_patient = d.at("per_patient").get<bool>();
    dy.notices = d.at("notices").get<std::vector<std::string>>();

    const auto& s = doc.at("scenario");
    auto& sc = r.scenario;
    sc.dataset_digest = s.at("dataset_digest").get<std::string>();
    sc.scenarios = s.at("scenarios").get<std::vector<std::string>>();
    sc.raw_cosine = matrix_from(s.at("raw_cosine"));
    sc.embedded_cosine = matrix_from(s.at("embedded_cosine"));
    sc.raw_mean_similarity = number_from(s.at("raw_mean_similarity"));
    sc.embedded_mean_similarity = number_from(s.at("embedded_mean_similarity"));
    sc.raw_dimensionality = s.at("raw_dimensionality").get<Index>();
    sc.embedded_dimensionality = s.at("embedded_dimensionality").get<Index>();

    const auto& k = doc.at("decoding");
    auto& dc = r.decoding;
    dc.dataset_digest = k.at("dataset_digest").get<std::string>();
    dc.raw_auc = matrix_from(k.at("raw_auc"));
    dc.embedded_auc = matrix_from(k.at("embedded_auc"));
    dc.raw_mean = number_from(k.at("raw_mean"));
    dc.raw_std = number_from(k.at("raw_std"));
    dc.embedded_mean = number_from(k.at("embedded_mean"));
    dc.embedded_std = number_from(k.at("embedded_std"));
    dc.sample_counts = matrix_from(k.at("sample_counts"));
    dc.test_counts = matrix_from(k.at("test_counts"));
    dc.split_seed = k.at("split_seed").get<std::uint64_t>();
    dc.window = k.at("window").get<Index>();
    dc.labels_permuted = k.at("labels_permuted").get<bool>();
    dc.notices = k.at("notices").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("assessment report: ") + e.what());
  }
  return r;
}

std::string render_json(const AssessmentReport& report) { return report_to_json(report).dump(2) + "\n"; }

AssessmentReport parse_report(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("assessment report is not valid JSON: ") + e.what());
  }
  return report_from_json(doc);
}

// ---------------------------------------------------------------------------
// Markdown

namespace {

void matrix_table(std::ostringstream& out, const Matrix& m, const std::vector<std::string>& row_labels,
                  const std::vector<std::string>& col_labels, int decimals = 2) {
  out << "| |";
  for (const auto& c : col_labels) out << ' ' << c << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < col_labels.size(); ++i) out << "---|";
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    out << "| " << row_labels[std::size_t(r)] << " |";
    for (Index c = 0; c < m.cols(); ++c) out << ' ' << (std::isnan(m(r, c)) ? "–" : fixed(m(r, c), decimals)) << " |";
    out << '\n';
  }
  out << '\n';
}

const char* pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace

std::string render_markdown(const AssessmentReport& r) {
  std::ostringstream out;
  const auto& codes = r.feature_codes;
  out << "# Embedding assessment\n\n";
  out << "- model: `" << r.provenance.model_id << "`\n";
  out << "- dataset digest: `" << r.provenance.dataset_digest << "`\n";
  out << "- config digest: `" << r.provenance.config_digest << "`\n";
  out << "- tool version: " << r.provenance.tool_version << "\n";
  for (const auto& [name, seed] : r.provenance.seeds) out << "- seed `" << name << "`: " << seed << "\n";
  out << "\nFeature codes: ";
  for (std::size_t i = 0; i < codes.size(); ++i)
    out << (i ? ", " : "") << codes[i] << " = " << r.feature_names[i];
  out << "\n\n## Verdicts\n\n| check | rule | result |\n|---|---|---|\n";
  out << "| disentanglement | embedded mean decoding AUC > " << fixed(r.thresholds.decoding_auc, 2)
      << " (published bar) | " << pass_fail(r.verdicts.disentanglement) << " |\n";
  out << "| temporal preservation | embedded smoothness ≥ raw − " << fixed(r.thresholds.smoothness_drop, 2)
      << " (declared default) | " << pass_fail(r.verdicts.temporal_preservation) << " |\n";
  out << "| scenario discrimination | embedded similarity ≤ raw + "
      << fixed(r.thresholds.similarity_rise, 2) << " (declared default) | "
      << pass_fail(r.verdicts.scenario_discrimination) << " |\n\n";

  const auto& e = r.entanglement;
  out << "## Feature entanglement (" << e.mode << ")\n\n";
  out << "Grand mean |r|: raw " << fixed(e.raw_grand_mean) << ", embedded " << fixed(e.embedded_grand_mean)
      << "\n\n";
  for (std::size_t s = 0; s < e.scenarios.size(); ++s) {
    out << "### " << e.scenarios[s] << " (raw)\n\n";
    matrix_table(out, e.raw[s], codes, codes);
    out << "### " << e.scenarios[s] << " (embedded)\n\n";
    matrix_table(out, e.embedded[s], codes, codes);
  }

  const auto& c = r.reconstruction;
  out << "## Reconstruction (test R², rows = embedding source, columns = raw target)\n\n";
  matrix_table(out, c.test_r2, codes, codes);
  out << "Train rows " << c.train_rows << ", test rows " << c.test_rows << ", " << c.folds
      << "-fold CV on train.\n\n";

  const auto& d = r.dynamics;
  out << "## Temporal dynamics\n\n| scenario | dims raw | dims embedded | smoothness raw | smoothness embedded |\n"
         "|---|---|---|---|---|\n";
  for (const auto& s : d.scenarios)
    out << "| " << s.scenario << " | " << fixed(s.raw_dimensionality, 1) << " | "
        << fixed(s.embedded_dimensionality, 1) << " | " << fixed(s.raw_smoothness) << " | "
        << fixed(s.embedded_smoothness) << " |\n";
  out << "| mean | " << fixed(d.mean_raw_dimensionality, 2) << " | "
      << fixed(d.mean_embedded_dimensionality, 2) << " | " << fixed(d.mean_raw_smoothness) << " | "
      << fixed(d.mean_embedded_smoothness) << " |\n\n";

  const auto& s = r.scenario;
  out << "## Scenario similarity (cosine)\n\n";
  out << "Mean off-diagonal: raw " << fixed(s.raw_mean_similarity) << ", embedded "
      << fixed(s.embedded_mean_similarity) << ". Dimensionality at 90%: raw " << s.raw_dimensionality
      << ", embedded " << s.embedded_dimensionality << ".\n\n";
  matrix_table(out, s.raw_cosine, s.scenarios, s.scenarios);
  matrix_table(out, s.embedded_cosine, s.scenarios, s.scenarios);

  const auto& k = r.decoding;
  out << "## Feature decoding (pairwise AUC, window " << k.window << ")\n\n";
  out << "Raw mean AUC = " << format_mean_std(k.raw_mean, k.raw_std) << "; embedded mean AUC = "
      << format_mean_std(k.embedded_mean, k.embedded_std) << "\n\n";
  matrix_table(out, k.embedded_auc, codes, codes);

  std::vector<std::string> notices = e.notices;
  notices.insert(notices.end(), d.notices.begin(), d.notices.end());
  notices.insert(notices.end(), k.notices.begin(), k.notices.end());
  if (!notices.empty()) {
    out << "## Notices\n\n";
    for (const auto& n : notices) out << "- " << n << '\n';
  }
  return out.str();
}

}  // namespace embedprobe
