#include "embedprobe/embedders.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>

#include "embedprobe/parallel.hpp"

namespace embedprobe {

namespace {

using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Matrix delay_rows(const Vector& x, Index window) {
  const Index n = x.size();
  Matrix out(n, window);
  for (Index t = 0; t < n; ++t)
    for (Index lag = 0; lag < window; ++lag) out(t, lag) = x(std::max<Index>(t - lag, 0));
  return out;
}

Matrix projection_matrix(Index window, Index dims, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "projection"));
  Matrix r(window, dims);
  const double scale = 1.0 / std::sqrt(double(window));
  for (Index j = 0; j < dims; ++j)
    for (Index i = 0; i < window; ++i) r(i, j) = scale * rng.normal();
  return r;
}

Matrix embed_values(const SignalRecord& record, const EmbedderSpec& spec) {
  return std::visit(
      overloaded{
          [&](const IdentitySpec&) -> Matrix { return record.values; },
          [&](const DelaySpec& s) -> Matrix { return delay_rows(record.values, s.window); },
          [&](const RandomProjectionSpec& s) -> Matrix {
            return delay_rows(record.values, s.window) * projection_matrix(s.window, s.dims, s.seed);
          },
          [&](const MixerSpec& s) -> Matrix {
            Matrix base = embed_values(record, *s.base);
            if (s.alpha == 0.0) return base;
            const Vector c = mixer_confounder(s.seed, record.scenario, base.rows());
            base.colwise() += s.alpha * c;
            return base;
          },
          [&](const ShufflerSpec& s) -> Matrix {
            const Matrix base = embed_values(record, *s.base);
            Rng rng(derive_seed(s.seed, "shuffle", record.scenario, record.patient,
                                feature_name(record.feature)));
            const auto order = rng.permutation(base.rows());
            Matrix out(base.rows(), base.cols());
            for (Index t = 0; t < base.rows(); ++t) out.row(t) = base.row(order[std::size_t(t)]);
            return out;
          },
      },
      spec.variant);
}

}  // namespace

void EmbeddingMatrix::validate() const {
  const std::string where = cell().describe();
  if (values.rows() < 2) throw Error(ErrorCode::TooShort, where + ": embedding has fewer than two rows");
  if (values.cols() < 1) throw Error(ErrorCode::FormatError, where + ": embedding has no columns");
  if (!values.allFinite()) throw Error(ErrorCode::FormatError, where + ": embedding has non-finite entries");
}

void EmbedderSpec::validate(Index length) const {
  std::visit(overloaded{
                 [](const IdentitySpec&) {},
                 [&](const DelaySpec& s) {
                   if (s.window < 1 || s.window > length)
                     throw Error(ErrorCode::InvalidSpec, "delay window must lie in [1, T]");
                 },
                 [&](const RandomProjectionSpec& s) {
                   if (s.window < 1 || s.window > length)
                     throw Error(ErrorCode::InvalidSpec, "projection window must lie in [1, T]");
                   if (s.dims < 1) throw Error(ErrorCode::InvalidSpec, "projection dims must be >= 1");
                 },
                 [&](const MixerSpec& s) {
                   if (!s.base) throw Error(ErrorCode::InvalidSpec, "mixer needs a base spec");
                   if (!(s.alpha >= 0.0)) throw Error(ErrorCode::InvalidSpec, "mixer alpha must be >= 0");
                   s.base->validate(length);
                 },
                 [&](const ShufflerSpec& s) {
                   if (!s.base) throw Error(ErrorCode::InvalidSpec, "shuffler needs a base spec");
                   s.base->validate(length);
                 },
             },
             variant);
}

std::string EmbedderSpec::id() const {
  return std::visit(
      overloaded{
          [](const IdentitySpec&) -> std::string { return "identity"; },
          [](const DelaySpec& s) -> std::string { return "delay(w=" + std::to_string(s.window) + ")"; },
          [](const RandomProjectionSpec& s) -> std::string {
            return "random_projection(w=" + std::to_string(s.window) + ",D=" + std::to_string(s.dims) +
                   ",seed=" + std::to_string(s.seed) + ")";
          },
          [](const MixerSpec& s) -> std::string {
            return "mixer(alpha=" + format_double(s.alpha) + ",seed=" + std::to_string(s.seed) + "," +
                   s.base->id() + ")";
          },
          [](const ShufflerSpec& s) -> std::string {
            return "shuffler(seed=" + std::to_string(s.seed) + "," + s.base->id() + ")";
          },
      },
      variant);
}

EmbedderSpec parse_embedder_spec(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind"))
    throw Error(ErrorCode::InvalidSpec, "embedder spec needs a 'kind'");
  const auto kind = doc.at("kind").get<std::string>();
  auto integer = [&](const char* field, Index fallback) -> Index {
    return doc.contains(field) ? doc.at(field).get<Index>() : fallback;
  };
  auto seed = [&] { return doc.contains("seed") ? doc.at("seed").get<std::uint64_t>() : 0; };
  auto base = [&]() -> EmbedderSpec {
    return doc.contains("base") ? parse_embedder_spec(doc.at("base")) : EmbedderSpec::identity();
  };
  try {
    if (kind == "identity") return EmbedderSpec::identity();
    if (kind == "delay") return EmbedderSpec::delay(integer("window", 1));
    if (kind == "random_projection")
      return EmbedderSpec::random_projection(integer("window", 1), integer("dims", 1), seed());
    if (kind == "mixer")
      return EmbedderSpec::mixer(base(), doc.value("alpha", 0.0), seed());
    if (kind == "shuffler") return EmbedderSpec::shuffler(base(), seed());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("embedder spec: ") + e.what());
  }
  throw Error(ErrorCode::InvalidSpec, "unknown embedder kind '" + kind + "'");
}

json embedder_spec_to_json(const EmbedderSpec& spec) {
  return std::visit(
      overloaded{
          [](const IdentitySpec&) -> json { return {{"kind", "identity"}}; },
          [](const DelaySpec& s) -> json { return {{"kind", "delay"}, {"window", s.window}}; },
          [](const RandomProjectionSpec& s) -> json {
            return {{"kind", "random_projection"}, {"window", s.window}, {"dims", s.dims}, {"seed", s.seed}};
          },
          [](const MixerSpec& s) -> json {
            return {{"kind", "mixer"}, {"alpha", s.alpha}, {"seed", s.seed},
                    {"base", embedder_spec_to_json(*s.base)}};
          },
          [](const ShufflerSpec& s) -> json {
            return {{"kind", "shuffler"}, {"seed", s.seed}, {"base", embedder_spec_to_json(*s.base)}};
          },
      },
      spec.variant);
}

Vector mixer_confounder(std::uint64_t seed, std::string_view scenario, Index length) {
  Rng rng(derive_seed(seed, "confounder", scenario));
  Vector c(length);
  for (Index t = 0; t < length; ++t) c(t) = rng.normal();
  return c;
}

EmbeddingMatrix embed_reference(const SignalRecord& record, const EmbedderSpec& spec) {
  if (record.size() < 2)
    throw Error(ErrorCode::TooShort,
                CellKey{record.scenario, record.patient, record.feature}.describe() +
                    ": fewer than two samples");
  spec.validate(record.size());
  EmbeddingMatrix out;
  out.values = embed_values(record, spec);
  out.meta = {spec.id(), record.scenario, record.patient, record.feature};
  return out;
}

EmbeddingSet embed_dataset(const Dataset& dataset, const EmbedderSpec& spec, unsigned threads) {
  const auto cells = dataset.cells();
  std::vector<EmbeddingMatrix> slots(cells.size());
  parallel_for(cells.size(), threads,
               [&](std::size_t i) { slots[i] = embed_reference(dataset.at(cells[i]), spec); });
  EmbeddingSet out;
  for (std::size_t i = 0; i < cells.size(); ++i) out.emplace(cells[i], std::move(slots[i]));
  return out;
}

EmbeddingMatrix align_embedding(const EmbeddingMatrix& embedding, Index target_len) {
  const Index rows = embedding.rows();
  if (rows < 2) throw Error(ErrorCode::TooShort, embedding.cell().describe() + ": fewer than two rows");
  if (target_len < 2) throw Error(ErrorCode::TooShort, "alignment target below two rows");
  if (rows == target_len) return embedding;

  EmbeddingMatrix out;
  out.meta = embedding.meta;
  out.values.resize(target_len, embedding.cols());
  const double scale = double(rows - 1) / double(target_len - 1);
  for (Index k = 0; k < target_len; ++k) {
    if (k + 1 == target_len) {
      out.values.row(k) = embedding.values.row(rows - 1);
      continue;
    }
    const double position = double(k) * scale;
    const auto lower = std::min<Index>(Index(std::floor(position)), rows - 2);
    const double fraction = position - double(lower);
    if (fraction == 0.0)
      out.values.row(k) = embedding.values.row(lower);
    else
      out.values.row(k) = embedding.values.row(lower) +
                          fraction * (embedding.values.row(lower + 1) - embedding.values.row(lower));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interchange

std::string embedding_file_name(const CellKey& cell) {
  return cell.scenario + "__" + cell.patient + "__" + std::string(feature_name(cell.feature)) + ".csv";
}

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".meta.json");
  return p.string();
}

void write_embedding(const EmbeddingMatrix& embedding, const std::string& path) {
  embedding.validate();
  std::string csv;
  csv.reserve(std::size_t(embedding.rows() * embedding.cols() * 24));
  for (Index r = 0; r < embedding.rows(); ++r) {
    for (Index c = 0; c < embedding.cols(); ++c) {
      if (c > 0) csv += ',';
      csv += format_double(embedding.values(r, c));
    }
    csv += '\n';
  }
  const json meta = {{"format_version", 1},
                     {"model_id", embedding.meta.model_id},
                     {"scenario", embedding.meta.scenario},
                     {"patient", embedding.meta.patient},
                     {"feature", feature_name(embedding.meta.feature)},
                     {"rows", embedding.rows()},
                     {"cols", embedding.cols()}};
  write_file_atomic(path, csv);
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

EmbeddingMatrix read_embedding(const std::string& path) {
  const std::string meta_path = sidecar_path(path);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::FormatError, path + ": file not found");
  if (!std::filesystem::exists(meta_path))
    throw Error(ErrorCode::FormatError, meta_path + ": sidecar not found");

  EmbeddingMatrix out;
  Index declared_rows = 0;
  Index declared_cols = 0;
  try {
    const json meta = json::parse(read_file(meta_path));
    if (meta.at("format_version").get<int>() != 1)
      throw Error(ErrorCode::FormatError, meta_path + ": unsupported format_version");
    out.meta.model_id = meta.at("model_id").get<std::string>();
    out.meta.scenario = meta.at("scenario").get<std::string>();
    out.meta.patient = meta.at("patient").get<std::string>();
    const auto feature = parse_feature(meta.at("feature").get<std::string>());
    if (!feature) throw Error(ErrorCode::FormatError, meta_path + ": unknown feature");
    out.meta.feature = *feature;
    declared_rows = meta.at("rows").get<Index>();
    declared_cols = meta.at("cols").get<Index>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, meta_path + ": " + e.what());
  }

  const std::string text = read_file(path);
  if (text.empty() || text.back() != '\n')
    throw Error(ErrorCode::FormatError, path + ": truncated (missing final newline)");

  std::vector<double> data;
  Index rows = 0;
  Index cols = -1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    Index fields = 0;
    const char* p = line.data();
    const char* stop = line.data() + line.size();
    while (true) {
      double value = 0;
      const auto [next, ec] = std::from_chars(p, stop, value);
      if (ec != std::errc() || !std::isfinite(value))
        throw Error(ErrorCode::FormatError,
                    path + " row " + std::to_string(rows + 1) + ": malformed number");
      data.push_back(value);
      ++fields;
      p = next;
      if (p == stop) break;
      if (*p != ',')
        throw Error(ErrorCode::FormatError, path + " row " + std::to_string(rows + 1) + ": bad separator");
      ++p;
    }
    if (cols < 0) cols = fields;
    if (fields != cols)
      throw Error(ErrorCode::FormatError, path + " row " + std::to_string(rows + 1) + ": expected " +
                                              std::to_string(cols) + " columns, found " +
                                              std::to_string(fields));
    ++rows;
  }
  if (rows != declared_rows || cols != declared_cols)
    throw Error(ErrorCode::MetadataMismatch,
                path + ": sidecar declares " + std::to_string(declared_rows) + "x" +
                    std::to_string(declared_cols) + " but file holds " + std::to_string(rows) + "x" +
                    std::to_string(cols));

  out.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data.data(), rows, cols);
  out.validate();
  return out;
}

void write_embedding_dir(const EmbeddingSet& embeddings, const std::string& dir) {
  for (const auto& [cell, embedding] : embeddings)
    write_embedding(embedding, (std::filesystem::path(dir) / embedding_file_name(cell)).string());
}

EmbeddingSet read_embedding_dir(const std::string& dir, const Dataset& dataset) {
  EmbeddingSet out;
  for (const auto& cell : dataset.cells()) {
    const std::string path = (std::filesystem::path(dir) / embedding_file_name(cell)).string();
    EmbeddingMatrix embedding;
    try {
      embedding = read_embedding(path);
    } catch (const Error& e) {
      throw Error(e.code(), cell.describe() + ": " + e.detail());
    }
    if (embedding.cell() != cell)
      throw Error(ErrorCode::MetadataMismatch,
                  cell.describe() + ": sidecar names " + embedding.cell().describe());
    out.emplace(cell, align_embedding(embedding, dataset.manifest().canonical_length));
  }
  return out;
}

}  // namespace embedprobe
