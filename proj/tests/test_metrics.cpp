#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "embedprobe/metrics.hpp"
#include "support.hpp"

using namespace embedprobe;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

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

MetricOptions quick_options(std::uint64_t seed = 1) {
  MetricOptions options;
  options.seed = seed;
  options.n_perm = 200;
  return options;
}

// Every feature carries one smooth sinusoid; feature f completes f + 1 cycles.
Dataset sinusoid_dataset(int scenarios = 2, int patients = 2, Index length = 600) {
  return testing::make_dataset(scenarios, patients, length, [length](int s, int, int f, Index t) {
    return std::sin(kTwoPi * (f + 1) * double(t) / double(length) + 0.3 * s + 0.7 * f);
  });
}

// Per-row cell value of a seeded normal stream, used by the decoding oracle.
Matrix window_samples(const Dataset& d, FeatureId feature, Index window) {
  std::vector<RowVector> rows;
  for (const auto& scenario : d.manifest().scenarios)
    for (const auto* p : d.manifest().patients_of(scenario)) {
      const Vector& v = d.at(scenario, p->id, feature).values;
      for (Index start = 0; start + window <= v.size(); start += window)
        rows.push_back(v.segment(start, window).transpose());
    }
  Matrix out(Index(rows.size()), window);
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(Index(i)) = rows[i];
  return out;
}

}  // namespace

TEST_CASE("format_mean_std matches the published style") {
  CHECK(format_mean_std(0.78, 0.10) == "0.78 ± 0.10");
  CHECK(format_mean_std(0.964, 0.0512) == "0.96 ± 0.05");
}

TEST_CASE("exact copies have pair value one") {
  const Dataset d = testing::make_dataset(2, 2, 300, [](int s, int p, int, Index t) {
    return std::sin(0.05 * double(t) * (1 + s)) + 0.1 * p;
  });
  const auto report = feature_entanglement(d, raw_view(d), quick_options());
  for (const Matrix& m : report.raw) {
    CHECK((m.array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  CHECK(std::abs(report.raw_grand_mean - 1.0) < 1e-12);
}

TEST_CASE("independent white noise has grand mean below 0.1") {
  const Dataset d = testing::noise_dataset(4, 2, 3, 1000);
  const auto report = feature_entanglement(d, raw_view(d), quick_options());
  // |r| of independent noise concentrates near sqrt(2 / (pi T)) ~ 0.025.
  CHECK(report.raw_grand_mean < 0.1);
  for (const Matrix& m : report.raw) {
    CHECK(m.isApprox(m.transpose()));
    CHECK((m.diagonal().array() - 1).abs().maxCoeff() < 1e-12);
    CHECK(m.minCoeff() >= 0);
    CHECK(m.maxCoeff() <= 1 + 1e-12);
  }
}

TEST_CASE("mixer raises entanglement and is monotone in strength") {
  const Dataset d = testing::noise_dataset(6, 2, 3, 1000);
  const auto base = EmbedderSpec::random_projection(4, 8, 3);
  double previous = -1;
  double raw = 0;
  for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
    const auto embeddings = embed_dataset(d, EmbedderSpec::mixer(base, alpha, 17));
    const auto report = feature_entanglement(d, embeddings, quick_options());
    raw = report.raw_grand_mean;
    CHECK(report.embedded_grand_mean >= previous);
    previous = report.embedded_grand_mean;
  }
  CHECK(previous > raw + 0.2);
}

TEST_CASE("first-principal-component entanglement mode") {
  const Dataset d = testing::noise_dataset(6, 2, 2, 400);
  auto options = quick_options();
  options.entanglement_mode = EntanglementMode::FirstPrincipalComponent;
  const auto identity = feature_entanglement(d, raw_view(d), options);
  CHECK(identity.mode == "first_principal_component");
  CHECK(std::abs(identity.raw_grand_mean - identity.embedded_grand_mean) < 1e-12);
}

TEST_CASE("identity reconstruction of its own feature is perfect") {
  const Dataset d = canonicalize(generate_dataset(testing::small_generator(3, 2)));
  const auto report = reconstruction_assessment(d, embed_dataset(d, EmbedderSpec::identity()), quick_options());
  for (Index f = 0; f < 7; ++f) CHECK(report.test_r2(f, f) >= 1 - 1e-9);
  CHECK(report.test_r2.maxCoeff() <= 1 + 1e-12);
  CHECK(report.train_rows + report.test_rows == 3 * 2 * 1000);
  CHECK(report.folds == 5);
}

TEST_CASE("pure-noise embeddings reconstruct nothing") {
  const Dataset d = canonicalize(generate_dataset(testing::small_generator(3, 2)));
  const auto noise = embed_dataset(d, EmbedderSpec::shuffler(EmbedderSpec::random_projection(8, 16, 4), 9));
  const auto report = reconstruction_assessment(d, noise, quick_options());
  for (Index f = 0; f < 7; ++f) CHECK(report.test_r2(f, f) <= 0.05);
}

TEST_CASE("delay embedding recovers a linear filter of its source") {
  // Feature 1 is a fixed 3-tap filter of feature 0 (with the same
  // back-filled start), so a delay(3) embedding of 0 predicts it exactly.
  const Index n = 400;
  const Dataset d = testing::make_dataset(2, 2, n, [n](int s, int p, int f, Index t) {
    auto source = [&](Index u) {
      u = std::max<Index>(u, 0);
      return std::sin(0.07 * double(u) * (1 + 0.1 * p) + s) + 0.3 * std::cos(0.23 * double(u));
    };
    if (f == 1) return 0.5 * source(t) - 0.8 * source(t - 1) + 0.25 * source(t - 2);
    if (f == 0) return source(t);
    return std::sin(0.011 * double(t * (f + 2)) + double(n % 7));
  });
  const auto report = reconstruction_assessment(d, embed_dataset(d, EmbedderSpec::delay(3)), quick_options());
  CHECK(report.test_r2(0, 1) >= 0.99);
}

TEST_CASE("smoothness calibration") {
  const Matrix ramp = Vector::LinSpaced(1000, 0, 1);
  const double ramp_value = trajectory_smoothness(ramp, 1000, 3);
  // Expected ~ 1 - 3 / (N - 1).
  CHECK(ramp_value >= 0.95);
  CHECK(ramp_value <= 1.0);
  CHECK(std::abs(ramp_value - (1 - 3.0 / 999)) < 0.01);

  Rng rng(4);
  Matrix shuffled(1000, 1);
  const auto order = rng.permutation(1000);
  for (Index i = 0; i < 1000; ++i) shuffled(i, 0) = ramp(order[std::size_t(i)], 0);
  CHECK(std::abs(trajectory_smoothness(shuffled, 1000, 5)) <= 0.05);

  CHECK(code_of([] { trajectory_smoothness(Matrix::Constant(10, 2, 3.0), 10, 1); }) == ErrorCode::ZeroMagnitude);
}

TEST_CASE("sinusoid dynamics: dimensionality, smoothness and shuffling") {
  const Dataset d = sinusoid_dataset();
  auto options = quick_options();
  const auto identity = temporal_dynamics(d, raw_view(d), options);
  for (const auto& s : identity.scenarios) {
    CHECK(s.raw_dimensionality >= 6);
    CHECK(s.raw_smoothness >= 0.9);
    CHECK(s.embedded_dimensionality == s.raw_dimensionality);
    CHECK(s.embedded_smoothness == s.raw_smoothness);
    CHECK(s.raw_trajectory.cols() == 3);
    CHECK(s.raw_trajectory == s.embedded_trajectory);
  }
  const auto shuffled = temporal_dynamics(d, embed_dataset(d, EmbedderSpec::shuffler(EmbedderSpec::identity(), 3)), options);
  for (const auto& s : shuffled.scenarios) {
    CHECK(s.embedded_smoothness <= 0.1);
    CHECK(s.embedded_smoothness < s.raw_smoothness - 0.5);
  }
}

TEST_CASE("scenario similarity examples") {
  const Index n = 200;
  SUBCASE("identical scenarios") {
    const Dataset d = testing::make_dataset(2, 2, n, [](int, int p, int f, Index t) {
      return std::sin(0.03 * double(t) * (f + 1)) + p;
    });
    const auto report = scenario_similarity(d, raw_view(d), quick_options());
    CHECK(std::abs(report.raw_cosine(0, 1) - 1.0) < 1e-12);
    CHECK(std::abs(report.raw_mean_similarity - 1.0) < 1e-12);
    CHECK(report.raw_dimensionality == 0);
  }
  SUBCASE("orthogonal scenarios") {
    const Dataset d = testing::make_dataset(2, 2, n, [n](int s, int, int f, Index t) {
      const bool active = s == 0 ? t < n / 2 : t >= n / 2;
      return active ? 1.0 + 0.1 * f + 0.001 * double(t) : 0.0;
    });
    const auto report = scenario_similarity(d, raw_view(d), quick_options());
    CHECK(std::abs(report.raw_cosine(0, 1)) < 1e-12);
    CHECK(report.raw_cosine.isApprox(report.raw_cosine.transpose()));
    CHECK(report.raw_cosine(0, 0) == 1.0);
  }
  SUBCASE("three generic scenarios span two dimensions") {
    const Dataset d = testing::noise_dataset(8, 3, 2, n);
    const auto report = scenario_similarity(d, raw_view(d), quick_options());
    CHECK(report.raw_dimensionality == 2);
    CHECK(report.embedded_dimensionality == 2);
  }
  SUBCASE("one scenario is too few") {
    const Dataset d = testing::noise_dataset(8, 1, 2, n);
    CHECK(code_of([&] { scenario_similarity(d, raw_view(d), quick_options()); }) == ErrorCode::TooFewSamples);
  }
}

TEST_CASE("sinusoid versus white noise decodes, cross-checked by nearest centroid") {
  // Feature 0 is a window-locked sinusoid, feature 1 white noise.
  const Index n = 1000;
  const std::uint64_t seed = 31;
  const Dataset noise = testing::noise_dataset(seed, 3, 3, n);
  const Dataset d = testing::make_dataset(3, 3, n, [&](int s, int p, int f, Index t) {
    if (f == 0) return std::sin(kTwoPi * double(t) / 25.0);
    return noise.at("s" + std::to_string(s), "p" + std::to_string(p), kAllFeatures[std::size_t(f)]).values(t);
  });
  auto options = quick_options();
  const auto report = feature_decoding(d, raw_view(d), options);
  CHECK(report.raw_auc(0, 1) >= 0.95);
  CHECK(report.raw_auc(0, 1) == report.raw_auc(1, 0));
  CHECK(std::isnan(report.raw_auc(0, 0)));
  CHECK(report.sample_counts(0, 1) == 2 * 3 * 3 * (n / options.window));

  // Oracle: nearest class centroid on a simple alternating split.
  const Matrix a = window_samples(d, FeatureId::ArterialPressure, options.window);
  const Matrix b = window_samples(d, FeatureId::Co2ProductionRate, options.window);
  RowVector ca = RowVector::Zero(options.window), cb = RowVector::Zero(options.window);
  Index na = 0, nb = 0;
  for (Index i = 0; i < a.rows(); i += 2) ca += a.row(i), ++na;
  for (Index i = 0; i < b.rows(); i += 2) cb += b.row(i), ++nb;
  ca /= double(na);
  cb /= double(nb);
  double ordered = 0, pairs = 0;
  for (Index i = 1; i < a.rows(); i += 2)
    for (Index j = 1; j < b.rows(); j += 2) {
      const double score_a = (a.row(i) - cb).norm() - (a.row(i) - ca).norm();
      const double score_b = (b.row(j) - cb).norm() - (b.row(j) - ca).norm();
      ordered += score_a > score_b ? 1.0 : score_a == score_b ? 0.5 : 0.0;
      pairs += 1;
    }
  CHECK(ordered / pairs >= 0.95);
}

TEST_CASE("features drawn from one distribution are indistinguishable") {
  // Sixteen patients keep the per-pair standard error near 0.03.
  const Dataset d = testing::make_dataset(3, 16, 1000, [](int s, int p, int f, Index t) {
    Rng rng(derive_seed(77, std::uint64_t(s), std::uint64_t(p), std::uint64_t(f), std::uint64_t(t)));
    return rng.normal();
  });
  const auto report = feature_decoding(d, raw_view(d), quick_options());
  for (Index i = 0; i < 7; ++i)
    for (Index j = i + 1; j < 7; ++j) CHECK(std::abs(report.raw_auc(i, j) - 0.5) <= 0.1);
}

TEST_CASE("identity embeddings reproduce every raw metric") {
  const Dataset d = canonicalize(generate_dataset(testing::small_generator(7, 2)));
  const auto identity = embed_dataset(d, EmbedderSpec::identity());
  const auto options = quick_options(7);
  const auto e = feature_entanglement(d, identity, options);
  CHECK(std::abs(e.raw_grand_mean - e.embedded_grand_mean) <= 1e-9);
  const auto dyn = temporal_dynamics(d, identity, options);
  CHECK(dyn.mean_raw_smoothness == dyn.mean_embedded_smoothness);
  CHECK(dyn.mean_raw_dimensionality == dyn.mean_embedded_dimensionality);
  const auto sc = scenario_similarity(d, identity, options);
  CHECK(sc.raw_cosine == sc.embedded_cosine);
  const auto dec = feature_decoding(d, identity, options);
  CHECK(((dec.raw_auc - dec.embedded_auc).array().isNaN() || (dec.raw_auc - dec.embedded_auc).array().abs() <= 1e-9).all());
}

TEST_CASE("metrics reject misaligned embeddings") {
  const Dataset d = testing::noise_dataset(1, 2, 1, 100);
  auto embeddings = raw_view(d);
  embeddings.erase(embeddings.begin());
  CHECK(code_of([&] { feature_entanglement(d, embeddings); }) == ErrorCode::MetadataMismatch);
}

TEST_CASE("metric results do not depend on the thread count") {
  const Dataset d = canonicalize(generate_dataset(testing::small_generator(2, 2)));
  const auto emb = embed_dataset(d, EmbedderSpec::random_projection(4, 6, 1));
  auto one = quick_options();
  auto four = quick_options();
  four.threads = 4;
  const auto a = feature_decoding(d, emb, one);
  const auto b = feature_decoding(d, emb, four);
  CHECK(((a.embedded_auc - b.embedded_auc).array().isNaN() || (a.embedded_auc - b.embedded_auc).array() == 0).all());
  CHECK(temporal_dynamics(d, emb, one).mean_embedded_smoothness ==
        temporal_dynamics(d, emb, four).mean_embedded_smoothness);
}
