#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>

#include "embedprobe/common.hpp"
#include "embedprobe/scenario_forge.hpp"
#include "json.hpp"

namespace embedprobe {

struct EmbeddingMeta {
  std::string model_id;
  std::string scenario;
  std::string patient;
  FeatureId feature = FeatureId::ArterialPressure;

  bool operator==(const EmbeddingMeta&) const = default;
};

/// T x D per-timestep embedding of one signal cell.
struct EmbeddingMatrix {
  Matrix values;
  EmbeddingMeta meta;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  CellKey cell() const { return {meta.scenario, meta.patient, meta.feature}; }
  void validate() const;

  bool operator==(const EmbeddingMatrix& other) const {
    return meta == other.meta && values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && values == other.values;
  }
};

using EmbeddingSet = std::map<CellKey, EmbeddingMatrix>;

// ---------------------------------------------------------------------------
// Reference embedders with plantable pathologies

struct EmbedderSpec;

struct IdentitySpec {};
struct DelaySpec {
  Index window = 1;
};
struct RandomProjectionSpec {
  Index window = 1;
  Index dims = 1;
  std::uint64_t seed = 0;
};
/// Adds alpha * c(t) to every dimension, with c one seeded series shared by
/// all features of a scenario.
struct MixerSpec {
  std::shared_ptr<const EmbedderSpec> base;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};
/// Permutes the rows of the base embedding.
struct ShufflerSpec {
  std::shared_ptr<const EmbedderSpec> base;
  std::uint64_t seed = 0;
};

struct EmbedderSpec {
  std::variant<IdentitySpec, DelaySpec, RandomProjectionSpec, MixerSpec, ShufflerSpec> variant;

  static EmbedderSpec identity() { return {IdentitySpec{}}; }
  static EmbedderSpec delay(Index window) { return {DelaySpec{window}}; }
  static EmbedderSpec random_projection(Index window, Index dims, std::uint64_t seed) {
    return {RandomProjectionSpec{window, dims, seed}};
  }
  static EmbedderSpec mixer(EmbedderSpec base, double alpha, std::uint64_t seed) {
    return {MixerSpec{std::make_shared<const EmbedderSpec>(std::move(base)), alpha, seed}};
  }
  static EmbedderSpec shuffler(EmbedderSpec base, std::uint64_t seed) {
    return {ShufflerSpec{std::make_shared<const EmbedderSpec>(std::move(base)), seed}};
  }

  /// Throws InvalidSpec if the spec cannot embed a series of `length` rows.
  void validate(Index length) const;
  /// Stable textual identifier, used as the model id of reference embeddings.
  std::string id() const;
};

EmbedderSpec parse_embedder_spec(const nlohmann::json& doc);
nlohmann::json embedder_spec_to_json(const EmbedderSpec& spec);

/// The shared confounder series of a mixer for one scenario.
Vector mixer_confounder(std::uint64_t seed, std::string_view scenario, Index length);

EmbeddingMatrix embed_reference(const SignalRecord& record, const EmbedderSpec& spec);

/// Embeds every cell of a canonical dataset.
EmbeddingSet embed_dataset(const Dataset& dataset, const EmbedderSpec& spec, unsigned threads = 1);

/// Column-wise linear interpolation onto `target_len` uniformly spaced rows.
EmbeddingMatrix align_embedding(const EmbeddingMatrix& embedding, Index target_len);

// ---------------------------------------------------------------------------
// Interchange: headerless %.17g CSV plus `<name>.meta.json` sidecar.

std::string embedding_file_name(const CellKey& cell);
std::string sidecar_path(const std::string& csv_path);

void write_embedding(const EmbeddingMatrix& embedding, const std::string& path);
EmbeddingMatrix read_embedding(const std::string& path);

void write_embedding_dir(const EmbeddingSet& embeddings, const std::string& dir);

/// Reads the embedding of every dataset cell from `dir`, checks that each
/// sidecar names its cell, and aligns all matrices to the canonical length.
EmbeddingSet read_embedding_dir(const std::string& dir, const Dataset& dataset);

}  // namespace embedprobe
