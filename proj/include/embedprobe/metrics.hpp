#pragma once

// Assessment batteries comparing raw canonical signals with their
// embeddings. Every battery runs the same code path on both sides: the raw
// side is presented as a one-column "embedding" per cell, which is what
// makes identity embeddings reproduce raw metrics exactly.

#include <cstdint>
#include <string>
#include <vector>

#include "embedprobe/common.hpp"
#include "embedprobe/embedders.hpp"
#include "embedprobe/numerics.hpp"
#include "embedprobe/scenario_forge.hpp"

namespace embedprobe {

enum class EntanglementMode { MatchedDimensions, FirstPrincipalComponent };

std::string_view entanglement_mode_name(EntanglementMode mode);

struct MetricOptions {
  std::uint64_t seed = 0;
  double variance_threshold = 0.9;
  Index n_perm = 1000;
  Index window = 50;
  double split_ratio = 0.8;
  Index folds = 5;
  double ridge_lambda = numerics::kDefaultRidge;
  numerics::LogisticOptions logistic{};
  EntanglementMode entanglement_mode = EntanglementMode::MatchedDimensions;
  bool per_patient = false;
  unsigned threads = 1;
};

struct EntanglementReport {
  std::string dataset_digest;
  std::string mode;
  std::vector<std::string> scenarios;
  std::vector<Matrix> raw;       // per scenario, F x F mean |r| over patients
  std::vector<Matrix> embedded;
  double raw_grand_mean = 0;
  double embedded_grand_mean = 0;
  std::vector<double> raw_pair_values;  // one per (scenario, pair), pair-major within scenario
  std::vector<double> embedded_pair_values;
  std::vector<std::string> notices;
};

struct ReconstructionReport {
  std::string dataset_digest;
  Matrix test_r2;  // row = embedding source feature, col = reconstructed raw feature
  Matrix cv_mean;
  Matrix cv_std;
  std::uint64_t split_seed = 0;
  Index train_rows = 0;
  Index test_rows = 0;
  Index folds = 0;
};

struct ScenarioDynamics {
  std::string scenario;
  double raw_dimensionality = 0;
  double embedded_dimensionality = 0;
  double raw_smoothness = 0;
  double embedded_smoothness = 0;
  Matrix raw_trajectory;       // T x min(3, k) leading component scores
  Matrix embedded_trajectory;
};

struct DynamicsReport {
  std::string dataset_digest;
  std::vector<ScenarioDynamics> scenarios;
  double mean_raw_dimensionality = 0;
  double mean_embedded_dimensionality = 0;
  double mean_raw_smoothness = 0;
  double mean_embedded_smoothness = 0;
  Index n_perm = 0;
  bool per_patient = false;
  std::vector<std::string> notices;
};

struct ScenarioReport {
  std::string dataset_digest;
  std::vector<std::string> scenarios;
  Matrix raw_cosine;
  Matrix embedded_cosine;
  double raw_mean_similarity = 0;
  double embedded_mean_similarity = 0;
  Index raw_dimensionality = 0;
  Index embedded_dimensionality = 0;
};

struct DecodingReport {
  std::string dataset_digest;
  Matrix raw_auc;  // F x F, symmetric, NaN diagonal
  Matrix embedded_auc;
  double raw_mean = 0;
  double raw_std = 0;
  double embedded_mean = 0;
  double embedded_std = 0;
  Matrix sample_counts;  // samples per pair (train + test)
  Matrix test_counts;
  std::uint64_t split_seed = 0;
  Index window = 0;
  bool labels_permuted = false;
  std::vector<std::string> notices;
};

/// "0.78 ± 0.10"
std::string format_mean_std(double mean, double stddev, int decimals = 2);

/// The raw canonical signals viewed as T x 1 matrices.
EmbeddingSet raw_view(const Dataset& dataset);

/// Throws MetadataMismatch unless every dataset cell has a T-row embedding.
void check_aligned(const Dataset& dataset, const EmbeddingSet& embeddings);

// ---------------------------------------------------------------------------
// Batteries

EntanglementReport feature_entanglement(const Dataset& dataset, const EmbeddingSet& embeddings,
                                        const MetricOptions& options = {});

ReconstructionReport reconstruction_assessment(const Dataset& dataset,
                                               const EmbeddingSet& embeddings,
                                               const MetricOptions& options = {});

/// 1 - (mean step length / mean distance from centroid) divided by the same
/// ratio averaged over `n_perm` seeded row permutations.
double trajectory_smoothness(const Matrix& trajectory, Index n_perm, std::uint64_t seed);

DynamicsReport temporal_dynamics(const Dataset& dataset, const EmbeddingSet& embeddings,
                                 const MetricOptions& options = {});

ScenarioReport scenario_similarity(const Dataset& dataset, const EmbeddingSet& embeddings,
                                   const MetricOptions& options = {});

/// Pairwise feature-identity decoding with a logistic probe. A sample is the
/// flattened block of `window` consecutive rows (stride = window) of a cell;
/// for raw signals that is a window of the 1-D series. With
/// `permute_labels`, labels are shuffled before splitting as a null control.
DecodingReport feature_decoding(const Dataset& dataset, const EmbeddingSet& embeddings,
                                const MetricOptions& options = {}, bool permute_labels = false);

// Per-cell helper exposed for tests: T x sum(D) concatenation of the
// patient-averaged cell matrices of one scenario, in manifest feature order.
Matrix scenario_matrix(const Dataset& dataset, const EmbeddingSet& cells,
                       const std::string& scenario);

}  // namespace embedprobe
