#include "embedprobe/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "embedprobe/parallel.hpp"

namespace embedprobe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> patient_ids(const Dataset& dataset, const std::string& scenario) {
  std::vector<std::string> out;
  for (const auto* p : dataset.manifest().patients_of(scenario)) out.push_back(p->id);
  return out;
}

const Matrix& cell_matrix(const EmbeddingSet& cells, const CellKey& key) {
  const auto it = cells.find(key);
  if (it == cells.end()) throw Error(ErrorCode::MetadataMismatch, key.describe() + ": no embedding");
  return it->second.values;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return kNaN;
  double sum = 0;
  for (double v : values) sum += v;
  return sum / double(values.size());
}

double std_of(const std::vector<double>& values) {
  if (values.empty()) return kNaN;
  const double mean = mean_of(values);
  double sum = 0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return std::sqrt(sum / double(values.size()));
}

// First principal component scores of a cell (the cell itself if D = 1).
Vector leading_scores(const Matrix& m) {
  if (m.cols() == 1) return m.col(0);
  const auto pca = numerics::pca(m);
  return pca.transform(m, 1).col(0);
}

// Mean |r| between two cells under the chosen convention. Returns NaN and
// appends a notice when no dimension pair has variance.
double cell_pair_correlation(const Matrix& a, const Matrix& b, EntanglementMode mode,
                             const std::string& where, std::vector<std::string>& notices) {
  if (mode == EntanglementMode::FirstPrincipalComponent) {
    try {
      return std::abs(numerics::pearson(leading_scores(a), leading_scores(b)));
    } catch (const Error& e) {
      notices.push_back(where + ": excluded (" + e.what() + ")");
      return kNaN;
    }
  }
  const Index dims = std::min(a.cols(), b.cols());
  double sum = 0;
  Index used = 0;
  for (Index d = 0; d < dims; ++d) {
    try {
      sum += std::abs(numerics::pearson(a.col(d), b.col(d)));
      ++used;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      notices.push_back(where + " dim " + std::to_string(d) + ": excluded (zero variance)");
    }
  }
  return used > 0 ? sum / double(used) : kNaN;
}

struct EntanglementSide {
  std::vector<Matrix> matrices;
  std::vector<double> pair_values;
  double grand_mean = 0;
};

EntanglementSide entanglement_side(const Dataset& dataset, const EmbeddingSet& cells,
                                   EntanglementMode mode, std::vector<std::string>& notices) {
  const auto& features = dataset.manifest().features;
  const auto f = Index(features.size());
  EntanglementSide side;
  for (const auto& scenario : dataset.manifest().scenarios) {
    Matrix m = Matrix::Identity(f, f);
    const auto patients = patient_ids(dataset, scenario);
    for (Index i = 0; i < f; ++i) {
      for (Index j = i + 1; j < f; ++j) {
        std::vector<double> values;
        for (const auto& patient : patients) {
          const CellKey ka{scenario, patient, features[std::size_t(i)]};
          const CellKey kb{scenario, patient, features[std::size_t(j)]};
          const double r = cell_pair_correlation(
              cell_matrix(cells, ka), cell_matrix(cells, kb), mode,
              ka.describe() + " vs " + std::string(feature_name(kb.feature)), notices);
          if (!std::isnan(r)) values.push_back(r);
        }
        m(i, j) = m(j, i) = mean_of(values);
        side.pair_values.push_back(m(i, j));
      }
    }
    side.matrices.push_back(std::move(m));
  }
  std::vector<double> finite;
  for (double v : side.pair_values)
    if (!std::isnan(v)) finite.push_back(v);
  side.grand_mean = mean_of(finite);
  return side;
}

// Rows of a (scenario, patient) cell matrix as samples: one row per window
// of `window` consecutive rows, flattened time-major.
Matrix window_samples(const Matrix& cell, Index window) {
  const Index count = cell.rows() / window;
  const Index dims = cell.cols();
  Matrix out(count, window * dims);
  for (Index w = 0; w < count; ++w)
    for (Index r = 0; r < window; ++r)
      out.row(w).segment(r * dims, dims) = cell.row(w * window + r);
  return out;
}

}  // namespace

std::string_view entanglement_mode_name(EntanglementMode mode) {
  return mode == EntanglementMode::MatchedDimensions ? "matched_dimensions"
                                                     : "first_principal_component";
}

std::string format_mean_std(double mean, double stddev, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f ± %.*f", decimals, mean, decimals, stddev);
  return buffer;
}

EmbeddingSet raw_view(const Dataset& dataset) {
  EmbeddingSet out;
  for (const auto& record : dataset.records()) {
    EmbeddingMatrix m;
    m.values = record.values;
    m.meta = {"raw", record.scenario, record.patient, record.feature};
    out.emplace(m.cell(), std::move(m));
  }
  return out;
}

void check_aligned(const Dataset& dataset, const EmbeddingSet& embeddings) {
  if (!dataset.is_canonical())
    throw Error(ErrorCode::SchemaError, "metrics need a canonical dataset");
  const Index length = dataset.manifest().canonical_length;
  for (const auto& cell : dataset.cells()) {
    const auto it = embeddings.find(cell);
    if (it == embeddings.end())
      throw Error(ErrorCode::MetadataMismatch, cell.describe() + ": no embedding");
    if (it->second.rows() != length)
      throw Error(ErrorCode::MetadataMismatch,
                  cell.describe() + ": embedding has " + std::to_string(it->second.rows()) +
                      " rows, expected " + std::to_string(length));
    it->second.validate();
  }
}

Matrix scenario_matrix(const Dataset& dataset, const EmbeddingSet& cells, const std::string& scenario) {
  const auto patients = patient_ids(dataset, scenario);
  if (patients.empty()) throw Error(ErrorCode::TooFewSamples, "scenario " + scenario + " has no patients");
  std::vector<Matrix> blocks;
  Index total = 0;
  for (FeatureId f : dataset.manifest().features) {
    Matrix sum = cell_matrix(cells, {scenario, patients.front(), f});
    for (std::size_t p = 1; p < patients.size(); ++p) sum += cell_matrix(cells, {scenario, patients[p], f});
    sum /= double(patients.size());
    total += sum.cols();
    blocks.push_back(std::move(sum));
  }
  Matrix out(blocks.front().rows(), total);
  Index col = 0;
  for (const auto& b : blocks) {
    out.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  return out;
}

// ---------------------------------------------------------------------------

EntanglementReport feature_entanglement(const Dataset& dataset, const EmbeddingSet& embeddings,
                                        const MetricOptions& options) {
  check_aligned(dataset, embeddings);
  EntanglementReport report;
  report.dataset_digest = dataset.digest();
  report.mode = entanglement_mode_name(options.entanglement_mode);
  report.scenarios = dataset.manifest().scenarios;
  auto raw = entanglement_side(dataset, raw_view(dataset), options.entanglement_mode, report.notices);
  auto emb = entanglement_side(dataset, embeddings, options.entanglement_mode, report.notices);
  report.raw = std::move(raw.matrices);
  report.embedded = std::move(emb.matrices);
  report.raw_pair_values = std::move(raw.pair_values);
  report.embedded_pair_values = std::move(emb.pair_values);
  report.raw_grand_mean = raw.grand_mean;
  report.embedded_grand_mean = emb.grand_mean;
  return report;
}

ReconstructionReport reconstruction_assessment(const Dataset& dataset, const EmbeddingSet& embeddings,
                                               const MetricOptions& options) {
  check_aligned(dataset, embeddings);
  const auto& manifest = dataset.manifest();
  const auto& features = manifest.features;
  const auto f = Index(features.size());
  const Index length = manifest.canonical_length;

  // Sample order: scenario, patient, timestep.
  std::vector<std::pair<std::string, std::string>> blocks;
  std::vector<int> scenario_of;
  for (std::size_t s = 0; s < manifest.scenarios.size(); ++s)
    for (const auto& patient : patient_ids(dataset, manifest.scenarios[s])) {
      blocks.emplace_back(manifest.scenarios[s], patient);
      scenario_of.insert(scenario_of.end(), std::size_t(length), int(s));
    }
  const auto n = Index(scenario_of.size());

  Matrix targets(n, f);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (Index j = 0; j < f; ++j)
      targets.block(Index(b) * length, j, length, 1) =
          dataset.at(blocks[b].first, blocks[b].second, features[std::size_t(j)]).values;

  ReconstructionReport report;
  report.dataset_digest = dataset.digest();
  report.split_seed = derive_seed(options.seed, "reconstruction");
  report.folds = options.folds;
  const auto plan = numerics::stratified_split(scenario_of, options.split_ratio, report.split_seed);
  report.train_rows = Index(plan.train.size());
  report.test_rows = Index(plan.test.size());
  if (plan.test.empty() || report.train_rows < options.folds)
    throw Error(ErrorCode::TooFewSamples, "reconstruction split leaves too few rows");
  const auto folds = numerics::kfold_indices(report.train_rows, options.folds,
                                             derive_seed(report.split_seed, "folds"));

  report.test_r2 = Matrix::Constant(f, f, kNaN);
  report.cv_mean = Matrix::Constant(f, f, kNaN);
  report.cv_std = Matrix::Constant(f, f, kNaN);

  const Matrix y_train = targets(plan.train, Eigen::all);
  const Matrix y_test = targets(plan.test, Eigen::all);

  parallel_for(std::size_t(f), options.threads, [&](std::size_t source) {
    const auto dims = cell_matrix(embeddings, {blocks.front().first, blocks.front().second,
                                               features[source]}).cols();
    Matrix x(n, dims);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Matrix& cell = cell_matrix(embeddings, {blocks[b].first, blocks[b].second, features[source]});
      if (cell.cols() != dims)
        throw Error(ErrorCode::MetadataMismatch,
                    CellKey{blocks[b].first, blocks[b].second, features[source]}.describe() +
                        ": embedding width differs from other patients of the feature");
      x.middleRows(Index(b) * length, length) = cell;
    }
    const Matrix x_train = x(plan.train, Eigen::all);
    const Matrix x_test = x(plan.test, Eigen::all);

    std::vector<std::vector<double>> cv(static_cast<std::size_t>(f));
    for (std::size_t k = 0; k < folds.size(); ++k) {
      std::vector<Index> fit_rows;
      std::vector<char> held(std::size_t(report.train_rows), 0);
      for (Index i : folds[k]) held[std::size_t(i)] = 1;
      for (Index i = 0; i < report.train_rows; ++i)
        if (!held[std::size_t(i)]) fit_rows.push_back(i);
      const auto model =
          numerics::ridge_fit_multi(x_train(fit_rows, Eigen::all), y_train(fit_rows, Eigen::all),
                                    options.ridge_lambda);
      const Matrix predicted = model.predict(x_train(folds[k], Eigen::all));
      const Matrix held_targets = y_train(folds[k], Eigen::all);
      for (Index j = 0; j < f; ++j)
        cv[std::size_t(j)].push_back(numerics::r2(held_targets.col(j), predicted.col(j)));
    }
    const auto model = numerics::ridge_fit_multi(x_train, y_train, options.ridge_lambda);
    const Matrix predicted = model.predict(x_test);
    for (Index j = 0; j < f; ++j) {
      report.test_r2(Index(source), j) = numerics::r2(y_test.col(j), predicted.col(j));
      report.cv_mean(Index(source), j) = mean_of(cv[std::size_t(j)]);
      report.cv_std(Index(source), j) = std_of(cv[std::size_t(j)]);
    }
  });
  return report;
}

double trajectory_smoothness(const Matrix& trajectory, Index n_perm, std::uint64_t seed) {
  const Index n = trajectory.rows();
  if (n < 3) throw Error(ErrorCode::TooShort, "smoothness needs at least three points");
  if (n_perm < 1) throw Error(ErrorCode::InvalidConfig, "smoothness needs n_perm >= 1");

  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> points = trajectory;
  const RowVector centroid = points.colwise().mean();
  const double magnitude = (points.rowwise() - centroid).rowwise().norm().mean();
  if (magnitude <= 1e-15) throw Error(ErrorCode::ZeroMagnitude, "trajectory is constant");

  auto mean_step = [&](const std::vector<Index>* order) {
    double total = 0;
    for (Index t = 0; t + 1 < n; ++t) {
      const Index a = order ? (*order)[std::size_t(t)] : t;
      const Index b = order ? (*order)[std::size_t(t + 1)] : t + 1;
      total += (points.row(b) - points.row(a)).norm();
    }
    return total / double(n - 1);
  };

  const double sequential = mean_step(nullptr) / magnitude;
  Rng rng(seed);
  double permuted = 0;
  for (Index k = 0; k < n_perm; ++k) {
    const auto order = rng.permutation(n);
    permuted += mean_step(&order) / magnitude;
  }
  permuted /= double(n_perm);
  return 1.0 - sequential / permuted;
}

namespace {

struct TrajectoryStats {
  double dimensionality = 0;
  double smoothness = 0;
  Matrix leading;
};

TrajectoryStats trajectory_stats(const Matrix& x, const MetricOptions& options, std::uint64_t seed) {
  const auto pca = numerics::pca(x);
  const Index k = numerics::components_for_variance(pca.explained_variance_ratio,
                                                    options.variance_threshold);
  const Matrix reduced = pca.transform(x, k);
  TrajectoryStats stats;
  stats.dimensionality = double(k);
  stats.smoothness = trajectory_smoothness(reduced, options.n_perm, seed);
  stats.leading = reduced.leftCols(std::min<Index>(3, k));
  return stats;
}

Matrix patient_matrix(const Dataset& dataset, const EmbeddingSet& cells, const std::string& scenario,
                      const std::string& patient) {
  std::vector<const Matrix*> blocks;
  Index total = 0;
  for (FeatureId f : dataset.manifest().features) {
    blocks.push_back(&cell_matrix(cells, {scenario, patient, f}));
    total += blocks.back()->cols();
  }
  Matrix out(blocks.front()->rows(), total);
  Index col = 0;
  for (const auto* b : blocks) {
    out.middleCols(col, b->cols()) = *b;
    col += b->cols();
  }
  return out;
}

}  // namespace

DynamicsReport temporal_dynamics(const Dataset& dataset, const EmbeddingSet& embeddings,
                                 const MetricOptions& options) {
  check_aligned(dataset, embeddings);
  const auto raw = raw_view(dataset);
  const auto& scenarios = dataset.manifest().scenarios;

  DynamicsReport report;
  report.dataset_digest = dataset.digest();
  report.n_perm = options.n_perm;
  report.per_patient = options.per_patient;
  report.scenarios.resize(scenarios.size());

  parallel_for(scenarios.size(), options.threads, [&](std::size_t s) {
    const auto& scenario = scenarios[s];
    ScenarioDynamics& out = report.scenarios[s];
    out.scenario = scenario;
    if (!options.per_patient) {
      // Raw and embedded trajectories share the permutation seed.
      const auto seed = derive_seed(options.seed, "smoothness", scenario);
      const auto r = trajectory_stats(scenario_matrix(dataset, raw, scenario), options, seed);
      const auto e = trajectory_stats(scenario_matrix(dataset, embeddings, scenario), options, seed);
      out = {scenario, r.dimensionality, e.dimensionality, r.smoothness, e.smoothness, r.leading, e.leading};
      return;
    }
    const auto patients = patient_ids(dataset, scenario);
    for (std::size_t p = 0; p < patients.size(); ++p) {
      const auto seed = derive_seed(options.seed, "smoothness", scenario, patients[p]);
      const auto r = trajectory_stats(patient_matrix(dataset, raw, scenario, patients[p]), options, seed);
      const auto e =
          trajectory_stats(patient_matrix(dataset, embeddings, scenario, patients[p]), options, seed);
      out.raw_dimensionality += r.dimensionality / double(patients.size());
      out.embedded_dimensionality += e.dimensionality / double(patients.size());
      out.raw_smoothness += r.smoothness / double(patients.size());
      out.embedded_smoothness += e.smoothness / double(patients.size());
      if (p == 0) {
        out.raw_trajectory = r.leading;
        out.embedded_trajectory = e.leading;
      }
    }
  });

  std::vector<double> rd, ed, rs, es;
  for (const auto& s : report.scenarios) {
    rd.push_back(s.raw_dimensionality);
    ed.push_back(s.embedded_dimensionality);
    rs.push_back(s.raw_smoothness);
    es.push_back(s.embedded_smoothness);
    if (s.raw_smoothness < 0)
      report.notices.push_back(s.scenario + ": raw smoothness is negative (anti-persistent trajectory)");
    if (s.embedded_smoothness < 0)
      report.notices.push_back(s.scenario +
                               ": embedded smoothness is negative (anti-persistent trajectory)");
  }
  report.mean_raw_dimensionality = mean_of(rd);
  report.mean_embedded_dimensionality = mean_of(ed);
  report.mean_raw_smoothness = mean_of(rs);
  report.mean_embedded_smoothness = mean_of(es);
  return report;
}

namespace {

struct ScenarioSide {
  Matrix cosine;
  double mean_similarity = 0;
  Index dimensionality = 0;
};

ScenarioSide scenario_side(const Dataset& dataset, const EmbeddingSet& cells,
                           const MetricOptions& options) {
  const auto& scenarios = dataset.manifest().scenarios;
  const auto s = Index(scenarios.size());
  std::vector<Vector> vectors;
  for (const auto& scenario : scenarios) {
    const Matrix m = scenario_matrix(dataset, cells, scenario);
    vectors.push_back(m.reshaped());
    if (vectors.back().size() != vectors.front().size())
      throw Error(ErrorCode::MetadataMismatch,
                  "scenario " + scenario + " has a different embedding width than " + scenarios.front());
  }
  ScenarioSide side;
  side.cosine = Matrix::Identity(s, s);
  std::vector<double> off;
  for (Index i = 0; i < s; ++i)
    for (Index j = i + 1; j < s; ++j) {
      try {
        side.cosine(i, j) = side.cosine(j, i) =
            numerics::cosine_similarity(vectors[std::size_t(i)], vectors[std::size_t(j)]);
      } catch (const Error& e) {
        throw Error(e.code(), "scenario pair " + scenarios[std::size_t(i)] + "/" +
                                  scenarios[std::size_t(j)] + ": " + e.detail());
      }
      off.push_back(side.cosine(i, j));
    }
  side.mean_similarity = mean_of(off);

  Matrix rows(s, vectors.front().size());
  for (Index i = 0; i < s; ++i) rows.row(i) = vectors[std::size_t(i)].transpose();
  // Coincident scenarios have no spread: zero dimensions.
  const Matrix centered = rows.rowwise() - rows.colwise().mean();
  if (centered.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, rows.cwiseAbs().maxCoeff())) {
    side.dimensionality = 0;
    return side;
  }
  const auto pca = numerics::pca(rows);
  side.dimensionality =
      numerics::components_for_variance(pca.explained_variance_ratio, options.variance_threshold);
  return side;
}

}  // namespace

ScenarioReport scenario_similarity(const Dataset& dataset, const EmbeddingSet& embeddings,
                                   const MetricOptions& options) {
  check_aligned(dataset, embeddings);
  if (dataset.manifest().scenarios.size() < 2)
    throw Error(ErrorCode::TooFewSamples, "scenario similarity needs at least two scenarios");
  ScenarioReport report;
  report.dataset_digest = dataset.digest();
  report.scenarios = dataset.manifest().scenarios;
  const auto raw = scenario_side(dataset, raw_view(dataset), options);
  const auto emb = scenario_side(dataset, embeddings, options);
  report.raw_cosine = raw.cosine;
  report.embedded_cosine = emb.cosine;
  report.raw_mean_similarity = raw.mean_similarity;
  report.embedded_mean_similarity = emb.mean_similarity;
  report.raw_dimensionality = raw.dimensionality;
  report.embedded_dimensionality = emb.dimensionality;
  return report;
}

namespace {

struct PairOutcome {
  double auc = kNaN;
  Index samples = 0;
  Index test = 0;
  std::string notice;
};

PairOutcome decode_pair(const Dataset& dataset, const EmbeddingSet& cells, FeatureId a, FeatureId b,
                        const MetricOptions& options, std::uint64_t split_seed, bool permute_labels) {
  const auto& scenarios = dataset.manifest().scenarios;
  std::vector<Matrix> blocks;
  std::vector<int> labels;
  std::vector<int> scenario_of;
  Index width = -1;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (const auto& patient : patient_ids(dataset, scenarios[s]))
      for (int label : {0, 1}) {
        const CellKey key{scenarios[s], patient, label == 0 ? a : b};
        Matrix samples = window_samples(cell_matrix(cells, key), options.window);
        if (width < 0) width = samples.cols();
        if (samples.cols() != width)
          throw Error(ErrorCode::MetadataMismatch,
                      key.describe() + ": embedding width differs within a decoding pair");
        labels.insert(labels.end(), std::size_t(samples.rows()), label);
        scenario_of.insert(scenario_of.end(), std::size_t(samples.rows()), int(s));
        blocks.push_back(std::move(samples));
      }
  const auto n = Index(labels.size());
  if (n == 0 || width <= 0)
    throw Error(ErrorCode::TooFewSamples,
                "decoding window " + std::to_string(options.window) + " exceeds the canonical length");

  Matrix x(n, width);
  Index row = 0;
  for (const auto& block : blocks) {
    x.middleRows(row, block.rows()) = block;
    row += block.rows();
  }

  if (permute_labels) {
    Rng rng(derive_seed(split_seed, "permute-labels"));
    rng.shuffle(labels);
  }
  std::vector<int> strata(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) strata[i] = scenario_of[i] * 2 + labels[i];
  const auto plan = numerics::stratified_split(strata, options.split_ratio, split_seed);

  std::vector<int> train_labels, test_labels;
  for (Index i : plan.train) train_labels.push_back(labels[std::size_t(i)]);
  for (Index i : plan.test) test_labels.push_back(labels[std::size_t(i)]);

  PairOutcome outcome;
  outcome.samples = n;
  outcome.test = Index(plan.test.size());
  const auto model = numerics::logistic_fit(x(plan.train, Eigen::all), train_labels, options.logistic);
  if (!model.converged)
    outcome.notice = std::string(feature_name(a)) + "/" + std::string(feature_name(b)) +
                     ": NonConvergence after " + std::to_string(model.iterations) +
                     " iterations (gradient norm " + format_double(model.gradient_norm) + ")";
  outcome.auc = numerics::auc_roc(model.predict_score(x(plan.test, Eigen::all)), test_labels);
  return outcome;
}

struct DecodingSide {
  Matrix auc;
  Matrix samples;
  Matrix test;
  double mean = 0;
  double stddev = 0;
};

DecodingSide decoding_side(const Dataset& dataset, const EmbeddingSet& cells,
                           const MetricOptions& options, bool permute_labels,
                           std::vector<std::string>& notices) {
  const auto& features = dataset.manifest().features;
  const auto f = Index(features.size());
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < f; ++i)
    for (Index j = i + 1; j < f; ++j) pairs.emplace_back(i, j);

  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), options.threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const auto seed = derive_seed(options.seed, "decoding", std::uint64_t(i), std::uint64_t(j));
    outcomes[k] = decode_pair(dataset, cells, features[std::size_t(i)], features[std::size_t(j)],
                              options, seed, permute_labels);
  });

  DecodingSide side;
  side.auc = Matrix::Constant(f, f, kNaN);
  side.samples = Matrix::Zero(f, f);
  side.test = Matrix::Zero(f, f);
  std::vector<double> values;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    side.auc(i, j) = side.auc(j, i) = outcomes[k].auc;
    side.samples(i, j) = side.samples(j, i) = double(outcomes[k].samples);
    side.test(i, j) = side.test(j, i) = double(outcomes[k].test);
    values.push_back(outcomes[k].auc);
    if (!outcomes[k].notice.empty()) notices.push_back(outcomes[k].notice);
  }
  side.mean = mean_of(values);
  side.stddev = std_of(values);
  return side;
}

}  // namespace

DecodingReport feature_decoding(const Dataset& dataset, const EmbeddingSet& embeddings,
                                const MetricOptions& options, bool permute_labels) {
  check_aligned(dataset, embeddings);
  if (options.window < 1) throw Error(ErrorCode::InvalidConfig, "decoding window must be >= 1");
  DecodingReport report;
  report.dataset_digest = dataset.digest();
  report.split_seed = derive_seed(options.seed, "decoding");
  report.window = options.window;
  report.labels_permuted = permute_labels;

  std::vector<std::string> raw_notices, emb_notices;
  const auto raw = decoding_side(dataset, raw_view(dataset), options, permute_labels, raw_notices);
  const auto emb = decoding_side(dataset, embeddings, options, permute_labels, emb_notices);
  for (auto& n : raw_notices) report.notices.push_back("raw " + n);
  for (auto& n : emb_notices) report.notices.push_back("embedded " + n);
  report.raw_auc = raw.auc;
  report.embedded_auc = emb.auc;
  report.raw_mean = raw.mean;
  report.raw_std = raw.stddev;
  report.embedded_mean = emb.mean;
  report.embedded_std = emb.stddev;
  report.sample_counts = emb.samples;
  report.test_counts = emb.test;
  return report;
}

}  // namespace embedprobe
