#include "embedprobe/pipeline.hpp"

#include <filesystem>
#include <set>

#include <spdlog/spdlog.h>

namespace embedprobe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::InvalidConfig, path + ": " + message);
}

// Reads one JSON object while tracking its dotted path, so every error can
// say where it happened. Unknown keys are rejected in finish().
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) config_error(display(), "expected an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    return required<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) config_error(field(key), "missing required field");
    const json& value = doc_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!value.is_boolean()) config_error(field(key), "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!value.is_number_integer()) config_error(field(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (!value.is_number_unsigned() && value.get<std::int64_t>() < 0)
            config_error(field(key), "expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!value.is_number()) config_error(field(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!value.is_string()) config_error(field(key), "expected a string");
      }
      return value.get<T>();
    } catch (const json::exception& e) {
      config_error(field(key), e.what());
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) config_error(field(key), "missing required section");
    return Section(doc_.at(key), field(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return doc_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) config_error(field(key), "unknown field");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(base_dir) / p).lexically_normal().string();
}

GeneratorConfig parse_generator(Section s, std::uint64_t seed, Index canonical_length) {
  GeneratorConfig g;
  if (s.has("scenarios")) {
    const json& list = s.raw("scenarios");
    const std::string path = s.field("scenarios");
    if (!list.is_array() || list.empty()) config_error(path, "expected a non-empty array");
    g.scenarios.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string item_path = path + "[" + std::to_string(i) + "]";
      ScenarioSpec spec;
      std::string template_text;
      if (list[i].is_string()) {
        spec.name = template_text = list[i].get<std::string>();
      } else {
        Section item(list[i], item_path);
        spec.name = item.required<std::string>("name");
        template_text = item.get<std::string>("template", spec.name);
        item.finish();
      }
      const auto kind = parse_template(template_text);
      if (!kind)
        config_error(item_path, "unknown scenario template '" + template_text +
                                    "' (hemorrhage, sepsis, multi_organ_failure)");
      spec.kind = *kind;
      g.scenarios.push_back(spec);
    }
  }
  g.patients_per_scenario = s.get<int>("patients_per_scenario", g.patients_per_scenario);
  g.duration_s = s.get<double>("duration_s", g.duration_s);
  g.sample_rate_hz = s.get<double>("sample_rate_hz", g.sample_rate_hz);
  g.noise_level = s.get<double>("noise_level", g.noise_level);
  g.seed = s.get<std::uint64_t>("seed", seed);
  g.canonical_length = canonical_length;
  s.finish();
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, s.field("") + e.detail());
  }
  return g;
}

CanonicalOptions parse_canonical(Section s) {
  CanonicalOptions c;
  c.length = s.get<Index>("length", c.length);
  if (c.length < 2) config_error(s.field("length"), "must be >= 2");
  const auto normalization = s.get<std::string>("normalization", "per_cell");
  if (normalization == "per_cell")
    c.normalization = Normalization::PerCell;
  else if (normalization == "per_scenario_pooled")
    c.normalization = Normalization::PerScenarioPooled;
  else
    config_error(s.field("normalization"), "expected per_cell or per_scenario_pooled");
  const auto order = s.get<std::string>("order", "resample_then_normalize");
  if (order == "resample_then_normalize")
    c.order = CanonicalOrder::ResampleThenNormalize;
  else if (order == "normalize_then_resample")
    c.order = CanonicalOrder::NormalizeThenResample;
  else
    config_error(s.field("order"), "expected resample_then_normalize or normalize_then_resample");
  s.finish();
  return c;
}

void parse_metrics(Section s, RunConfig& config) {
  auto& m = config.metrics;
  m.seed = s.get<std::uint64_t>("seed", config.seed);
  m.variance_threshold = s.get<double>("variance_threshold", m.variance_threshold);
  if (!(m.variance_threshold > 0 && m.variance_threshold <= 1))
    config_error(s.field("variance_threshold"), "must be in (0, 1]");
  m.n_perm = s.get<Index>("n_perm", m.n_perm);
  if (m.n_perm < 1) config_error(s.field("n_perm"), "must be >= 1");
  m.window = s.get<Index>("window", m.window);
  if (m.window < 1) config_error(s.field("window"), "must be >= 1");
  m.split_ratio = s.get<double>("split_ratio", m.split_ratio);
  if (!(m.split_ratio > 0 && m.split_ratio < 1)) config_error(s.field("split_ratio"), "must be in (0, 1)");
  m.folds = s.get<Index>("folds", m.folds);
  if (m.folds < 2) config_error(s.field("folds"), "must be >= 2");
  m.ridge_lambda = s.get<double>("ridge_lambda", m.ridge_lambda);
  if (!(m.ridge_lambda >= 0)) config_error(s.field("ridge_lambda"), "must be >= 0");
  m.per_patient = s.get<bool>("per_patient", m.per_patient);
  const auto mode = s.get<std::string>("entanglement_mode", "matched_dimensions");
  if (mode == "matched_dimensions")
    m.entanglement_mode = EntanglementMode::MatchedDimensions;
  else if (mode == "first_principal_component")
    m.entanglement_mode = EntanglementMode::FirstPrincipalComponent;
  else
    config_error(s.field("entanglement_mode"), "expected matched_dimensions or first_principal_component");
  if (s.has("logistic")) {
    Section l = s.child("logistic");
    m.logistic.l2 = l.get<double>("l2", m.logistic.l2);
    if (!(m.logistic.l2 >= 0)) config_error(l.field("l2"), "must be >= 0");
    m.logistic.gradient_tolerance = l.get<double>("gradient_tolerance", m.logistic.gradient_tolerance);
    m.logistic.max_iterations = l.get<int>("max_iterations", m.logistic.max_iterations);
    if (m.logistic.max_iterations < 1) config_error(l.field("max_iterations"), "must be >= 1");
    l.finish();
  }
  if (s.has("thresholds")) {
    Section t = s.child("thresholds");
    auto& th = config.thresholds;
    th.decoding_auc = t.get<double>("decoding_auc", th.decoding_auc);
    th.smoothness_drop = t.get<double>("smoothness_drop", th.smoothness_drop);
    th.similarity_rise = t.get<double>("similarity_rise", th.similarity_rise);
    t.finish();
  }
  s.finish();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());
}

Dataset load_canonical(const RunConfig& config) {
  const std::string dir = canonical_dir(config);
  if (!fs::exists(fs::path(dir) / "manifest.json"))
    throw Error(ErrorCode::IoError, "no canonical dataset at " + dir + " (run generate first)");
  return ingest_csv((fs::path(dir) / "signals").string(), (fs::path(dir) / "manifest.json").string());
}

std::string model_id_of(const EmbeddingSet& embeddings) {
  std::string id;
  for (const auto& [cell, embedding] : embeddings) {
    if (id.empty()) id = embedding.meta.model_id;
    if (embedding.meta.model_id != id)
      throw Error(ErrorCode::MetadataMismatch, cell.describe() + ": model_id '" + embedding.meta.model_id +
                                                   "' differs from '" + id + "'");
  }
  return id;
}

void log_notices(const std::vector<std::string>& notices) {
  for (const auto& n : notices) spdlog::warn("{}", n);
}

}  // namespace

RunConfig parse_run_config(const json& doc, const Overrides& overrides, const std::string& base_dir) {
  RunConfig config;
  Section root(doc, "");
  if (overrides.seed) {
    root.get<std::uint64_t>("seed", 0);
    config.seed = *overrides.seed;
  } else {
    config.seed = root.required<std::uint64_t>("seed");
  }
  config.output_dir = root.get<std::string>("output_dir", "");
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (config.output_dir.empty()) config_error("output_dir", "missing required field (or pass --out)");
  config.threads = root.get<unsigned>("threads", 1);
  if (overrides.threads) config.threads = *overrides.threads;
  if (config.threads < 1) config_error("threads", "must be >= 1");

  Section dataset = root.child("dataset");
  if (dataset.has("canonical")) config.canonical = parse_canonical(dataset.child("canonical"));
  const bool generate = dataset.has("generate");
  const bool ingest = dataset.has("ingest");
  if (generate == ingest)
    config_error("dataset", "exactly one of 'generate' or 'ingest' is required");
  if (generate) {
    config.dataset = parse_generator(dataset.child("generate"), config.seed, config.canonical.length);
  } else {
    Section s = dataset.child("ingest");
    config.dataset = IngestSource{resolve(s.required<std::string>("signals"), base_dir),
                                  resolve(s.required<std::string>("manifest"), base_dir)};
    s.finish();
  }
  dataset.finish();

  Section embedder = root.child("embedder");
  const bool reference = embedder.has("reference");
  const bool external = embedder.has("external");
  if (reference == external)
    config_error("embedder", "exactly one of 'reference' or 'external' is required");
  if (reference) {
    try {
      EmbedderSpec spec = parse_embedder_spec(embedder.raw("reference"));
      spec.validate(config.canonical.length);
      config.embedder = std::move(spec);
    } catch (const Error& e) {
      config_error("embedder.reference", e.detail());
    }
  } else {
    Section s = embedder.child("external");
    config.embedder = ExternalEmbeddings{resolve(s.required<std::string>("dir"), base_dir)};
    s.finish();
  }
  embedder.finish();

  if (root.has("metrics")) {
    parse_metrics(root.child("metrics"), config);
  } else {
    config.metrics.seed = config.seed;
  }
  config.metrics.threads = config.threads;
  root.finish();
  return config;
}

RunConfig load_run_config(const std::string& path, const Overrides& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config file: ") + e.detail());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": not valid JSON: " + e.what());
  }
  const auto base = fs::path(path).parent_path();
  return parse_run_config(doc, overrides, base.empty() ? "." : base.string());
}

json run_config_identity(const RunConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  if (const auto* g = std::get_if<GeneratorConfig>(&c.dataset)) {
    json scenarios = json::array();
    for (const auto& s : g->scenarios) scenarios.push_back({{"name", s.name}, {"template", template_name(s.kind)}});
    doc["dataset"]["generate"] = {{"scenarios", scenarios},
                                  {"patients_per_scenario", g->patients_per_scenario},
                                  {"duration_s", g->duration_s},
                                  {"sample_rate_hz", g->sample_rate_hz},
                                  {"noise_level", g->noise_level},
                                  {"seed", g->seed}};
  } else {
    const auto& i = std::get<IngestSource>(c.dataset);
    doc["dataset"]["ingest"] = {{"signals", i.signals_dir}, {"manifest", i.manifest_path}};
  }
  doc["dataset"]["canonical"] = {
      {"length", c.canonical.length},
      {"normalization", c.canonical.normalization == Normalization::PerCell ? "per_cell" : "per_scenario_pooled"},
      {"order", c.canonical.order == CanonicalOrder::ResampleThenNormalize ? "resample_then_normalize"
                                                                            : "normalize_then_resample"}};
  if (const auto* spec = std::get_if<EmbedderSpec>(&c.embedder))
    doc["embedder"]["reference"] = embedder_spec_to_json(*spec);
  else
    doc["embedder"]["external"] = {{"dir", std::get<ExternalEmbeddings>(c.embedder).dir}};
  const auto& m = c.metrics;
  doc["metrics"] = {{"seed", m.seed},
                    {"variance_threshold", m.variance_threshold},
                    {"n_perm", m.n_perm},
                    {"window", m.window},
                    {"split_ratio", m.split_ratio},
                    {"folds", m.folds},
                    {"ridge_lambda", m.ridge_lambda},
                    {"per_patient", m.per_patient},
                    {"entanglement_mode", entanglement_mode_name(m.entanglement_mode)},
                    {"logistic",
                     {{"l2", m.logistic.l2},
                      {"gradient_tolerance", m.logistic.gradient_tolerance},
                      {"max_iterations", m.logistic.max_iterations}}},
                    {"thresholds",
                     {{"decoding_auc", c.thresholds.decoding_auc},
                      {"smoothness_drop", c.thresholds.smoothness_drop},
                      {"similarity_rise", c.thresholds.similarity_rise}}}};
  return doc;
}

std::string config_digest(const RunConfig& config) { return hex_digest(run_config_identity(config).dump()); }

std::string dataset_dir(const RunConfig& config) { return (fs::path(config.output_dir) / "dataset").string(); }
std::string canonical_dir(const RunConfig& config) {
  return (fs::path(config.output_dir) / "dataset" / "canonical").string();
}
std::string embedding_dir(const RunConfig& config) {
  if (const auto* external = std::get_if<ExternalEmbeddings>(&config.embedder)) return external->dir;
  return (fs::path(config.output_dir) / "embeddings").string();
}

Dataset cmd_generate(const RunConfig& config) {
  Dataset raw;
  if (const auto* g = std::get_if<GeneratorConfig>(&config.dataset)) {
    spdlog::info("generating {} scenarios x {} patients", g->scenarios.size(), g->patients_per_scenario);
    raw = generate_dataset(*g);
  } else {
    const auto& source = std::get<IngestSource>(config.dataset);
    spdlog::info("ingesting {}", source.signals_dir);
    raw = ingest_csv(source.signals_dir, source.manifest_path);
  }
  Dataset canonical = canonicalize(raw, config.canonical);
  ensure_dir(dataset_dir(config));
  write_dataset(raw, dataset_dir(config), "signals");
  write_dataset(canonical, canonical_dir(config), "signals");
  spdlog::info("dataset written to {}", dataset_dir(config));
  return canonical;
}

EmbeddingSet cmd_embed(const RunConfig& config) {
  const Dataset canonical = load_canonical(config);
  if (const auto* spec = std::get_if<EmbedderSpec>(&config.embedder)) {
    EmbeddingSet embeddings = embed_dataset(canonical, *spec, config.threads);
    ensure_dir(embedding_dir(config));
    write_embedding_dir(embeddings, embedding_dir(config));
    spdlog::info("{} embeddings written to {}", embeddings.size(), embedding_dir(config));
    return embeddings;
  }
  EmbeddingSet embeddings = read_embedding_dir(embedding_dir(config), canonical);
  model_id_of(embeddings);
  spdlog::info("external embeddings in {} validated", embedding_dir(config));
  return embeddings;
}

AssessmentReport assess(const Dataset& canonical, const EmbeddingSet& embeddings,
                        const std::string& model_id, const RunConfig& config) {
  const auto& options = config.metrics;
  spdlog::info("assessing {} cells", embeddings.size());
  auto entanglement = feature_entanglement(canonical, embeddings, options);
  auto reconstruction = reconstruction_assessment(canonical, embeddings, options);
  auto dynamics = temporal_dynamics(canonical, embeddings, options);
  auto scenario = scenario_similarity(canonical, embeddings, options);
  auto decoding = feature_decoding(canonical, embeddings, options);
  log_notices(entanglement.notices);
  log_notices(dynamics.notices);
  log_notices(decoding.notices);

  Provenance provenance;
  provenance.config_digest = config_digest(config);
  provenance.dataset_digest = canonical.digest();
  provenance.model_id = model_id;
  provenance.seeds = {{"run", config.seed},
                      {"dataset", canonical.manifest().seed},
                      {"metrics", options.seed},
                      {"reconstruction_split", reconstruction.split_seed}};
  return assemble(std::move(provenance), std::move(entanglement), std::move(reconstruction),
                  std::move(dynamics), std::move(scenario), std::move(decoding), config.thresholds,
                  canonical.manifest().features);
}

void write_report_files(const AssessmentReport& report, const std::string& dir) {
  ensure_dir(dir);
  const fs::path root(dir);
  for (const auto& panel : panel_names())
    write_file_atomic((root / ("fig_" + panel + ".svg")).string(), render_svg(report, panel));
  write_file_atomic((root / "assessment.md").string(), render_markdown(report));
  write_file_atomic((root / "assessment.json").string(), render_json(report));
}

AssessmentReport cmd_assess(const RunConfig& config) {
  const Dataset canonical = load_canonical(config);
  if (!fs::exists(embedding_dir(config)))
    throw Error(ErrorCode::IoError, "no embeddings at " + embedding_dir(config) + " (run embed first)");
  const EmbeddingSet embeddings = read_embedding_dir(embedding_dir(config), canonical);
  AssessmentReport report = assess(canonical, embeddings, model_id_of(embeddings), config);
  write_report_files(report, config.output_dir);
  spdlog::info("verdicts: disentanglement {}, temporal preservation {}, scenario discrimination {}",
               report.verdicts.disentanglement ? "pass" : "fail",
               report.verdicts.temporal_preservation ? "pass" : "fail",
               report.verdicts.scenario_discrimination ? "pass" : "fail");
  return report;
}

AssessmentReport cmd_all(const RunConfig& config) {
  cmd_generate(config);
  cmd_embed(config);
  return cmd_assess(config);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
      return 2;
    default:
      return 3;
  }
}

}  // namespace embedprobe
