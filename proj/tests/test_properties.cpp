// Randomised property checks. Each case draws its instances from a seeded
// generator so failures replay exactly; the failing seed is reported.

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "embedprobe/metrics.hpp"
#include "embedprobe/numerics.hpp"
#include "support.hpp"

using namespace embedprobe;
using namespace embedprobe::numerics;

namespace {

struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  Index size(Index lo, Index hi) { return lo + Index(rng.below(std::uint64_t(hi - lo + 1))); }

  Vector normal(Index n, double scale = 1.0) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
  }

  // Scores on a coarse grid so ties are common.
  Vector tied_scores(Index n, int levels) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = double(rng.below(std::uint64_t(levels))) / levels;
    return v;
  }

  std::vector<int> labels(Index n) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = int(rng.below(2));
    y[0] = 0;
    y[1] = 1;
    return y;
  }

  Rng rng;
};

double brute_force_auc(const Vector& scores, const std::vector<int>& labels) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[i] == 1 && labels[j] == 0) {
        pairs += 1;
        const double a = scores(Index(i)), b = scores(Index(j));
        wins += a > b ? 1.0 : a == b ? 0.5 : 0.0;
      }
  return wins / pairs;
}

}  // namespace

TEST_CASE("pearson and cosine stay within [-1, 1]") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CAPTURE(seed);
    Gen g(seed);
    const Index n = g.size(2, 50);
    const double scale = std::pow(10.0, g.rng.uniform(-6, 6));
    Vector x = g.normal(n, scale);
    Vector y = g.rng.below(4) == 0 ? Vector(3.0 * x.array() + 1.0) : g.normal(n, scale);
    const double r = pearson(x, y);
    const double c = cosine_similarity(x, y);
    CHECK(r >= -1 - 1e-12);
    CHECK(r <= 1 + 1e-12);
    CHECK(c >= -1 - 1e-12);
    CHECK(c <= 1 + 1e-12);
    CHECK(std::abs(pearson(y, x) - r) < 1e-12);
  }
}

TEST_CASE("auc equals the pairwise brute force, ties included") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    Gen g(1000 + seed);
    const Index n = g.size(2, 200);
    const Vector scores = g.tied_scores(n, int(g.size(2, 30)));
    const auto labels = g.labels(n);
    const double fast = auc_roc(scores, labels);
    CHECK(fast == brute_force_auc(scores, labels));
    // Strictly increasing transforms keep ranks and so the statistic.
    const Vector transformed = scores.array().cube() * 7.0 + 3.0;
    CHECK(auc_roc(transformed, labels) == fast);
    // Scalar exp: Eigen's packet exp may differ by an ulp across lanes.
    CHECK(auc_roc(Vector(scores.unaryExpr([](double v) { return std::exp(v); })), labels) == fast);
  }
}

TEST_CASE("pca invariants on random matrices") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    CAPTURE(seed);
    Gen g(2000 + seed);
    const Index n = g.size(2, 40), p = g.size(1, 40);
    Matrix x(n, p);
    for (Index i = 0; i < x.size(); ++i) x(i) = g.rng.normal();
    const auto result = pca(x);
    const auto& ratios = result.explained_variance_ratio;
    CHECK(std::abs(ratios.sum() - 1) < 1e-9);
    for (Index k = 1; k < ratios.size(); ++k) CHECK(ratios(k) <= ratios(k - 1) + 1e-15);
    const Matrix gram = result.components * result.components.transpose();
    CHECK((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-9);
    const Matrix back = result.inverse_transform(result.transform(x));
    CHECK((back - x).norm() <= 1e-9 * std::max(1.0, x.norm()));
    const Index k = components_for_variance(ratios, 0.9);
    CHECK(k >= 1);
    CHECK(k <= ratios.size());
  }
}

TEST_CASE("stratified split invariants") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CAPTURE(seed);
    Gen g(3000 + seed);
    const Index n = g.size(2, 300);
    const int classes = int(g.size(1, 6));
    std::vector<int> class_of(static_cast<std::size_t>(n));
    for (auto& c : class_of) c = int(g.rng.below(std::uint64_t(classes)));
    const auto plan = stratified_split(class_of, 0.8, seed);

    std::set<Index> train(plan.train.begin(), plan.train.end()), test(plan.test.begin(), plan.test.end());
    CHECK(train.size() == plan.train.size());
    CHECK(test.size() == plan.test.size());
    for (Index i : test) CHECK_FALSE(train.count(i));
    CHECK(Index(train.size() + test.size()) == n);
    CHECK(std::is_sorted(plan.train.begin(), plan.train.end()));

    for (int c : plan.classes) {
      const auto members = Index(std::count(class_of.begin(), class_of.end(), c));
      const auto in_train = Index(std::count_if(plan.train.begin(), plan.train.end(),
                                                [&](Index i) { return class_of[std::size_t(i)] == c; }));
      if (members >= 2) CHECK(std::abs(double(in_train) - 0.8 * double(members)) <= 1.0);
    }
    const auto again = stratified_split(class_of, 0.8, seed);
    CHECK(again.train == plan.train);
  }
}

TEST_CASE("kfold partitions") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    Gen g(4000 + seed);
    const Index k = g.size(2, 10);
    const Index n = g.size(k, 200);
    const auto folds = kfold_indices(n, k, seed);
    CHECK(Index(folds.size()) == k);
    std::set<Index> all;
    std::size_t smallest = SIZE_MAX, largest = 0;
    for (const auto& fold : folds) {
      for (Index i : fold) CHECK(all.insert(i).second);
      smallest = std::min(smallest, fold.size());
      largest = std::max(largest, fold.size());
    }
    CHECK(Index(all.size()) == n);
    CHECK(largest - smallest <= 1);
  }
}

TEST_CASE("logistic optimum is stationary on random small instances") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CAPTURE(seed);
    Gen g(5000 + seed);
    const Index n = g.size(10, 80), p = g.size(1, 6);
    Matrix x(n, p);
    for (Index i = 0; i < x.size(); ++i) x(i) = g.rng.normal();
    const auto labels = g.labels(n);
    const auto model = logistic_fit(x, labels);
    CHECK(model.converged);
    CHECK(logistic_gradient(x, labels, model.weights, model.intercept, 1e-4).norm() < 1e-6);
  }
}

TEST_CASE("resampling is exact on affine signals") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    Gen g(6000 + seed);
    const Index n = g.size(2, 300);
    SignalRecord r;
    r.scenario = "s";
    r.patient = "p";
    // Irregular but increasing sample times.
    r.times.resize(n);
    double t = g.rng.uniform(-10, 10);
    for (Index i = 0; i < n; ++i) r.times(i) = t += g.rng.uniform(0.01, 3.0);
    const double slope = g.rng.normal(), offset = g.rng.normal();
    r.values = (slope * r.times.array() + offset).matrix();
    const Index target = g.size(2, 1200);
    const auto out = resample_linear(r, target);
    CHECK(out.size() == target);
    const double err = (out.values.array() - (slope * out.times.array() + offset)).abs().maxCoeff();
    CHECK(err < 1e-12 * std::max(1.0, r.values.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("canonical records have length T and unit moments for any generator config") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    CAPTURE(seed);
    Gen g(7000 + seed);
    GeneratorConfig config;
    config.seed = seed;
    config.patients_per_scenario = int(g.size(1, 3));
    config.duration_s = g.rng.uniform(300, 7200);
    config.sample_rate_hz = g.rng.uniform(0.1, 1.0);
    config.noise_level = g.rng.uniform(0.0, 0.5);
    const Dataset d = canonicalize(generate_dataset(config));
    for (const auto& r : d.records()) {
      CHECK(r.size() == 1000);
      const double mean = r.values.mean();
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs((r.values.array() - mean).square().mean() - 1) < 1e-9);
    }
  }
}

TEST_CASE("shuffler keeps column multisets, means and variances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const Dataset d = testing::noise_dataset(seed, 1, 1, 128);
    const auto spec = EmbedderSpec::random_projection(3, 4, seed);
    const auto base = embed_dataset(d, spec);
    const auto shuffled = embed_dataset(d, EmbedderSpec::shuffler(spec, seed + 1));
    for (const auto& [cell, e] : base) {
      const Matrix& s = shuffled.at(cell).values;
      for (Index c = 0; c < e.cols(); ++c) {
        std::vector<double> a(e.values.col(c).data(), e.values.col(c).data() + e.rows());
        std::vector<double> b(s.col(c).data(), s.col(c).data() + s.rows());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
      }
    }
  }
}

TEST_CASE("mixer entanglement is non-decreasing in strength on independent features") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CAPTURE(seed);
    // Independent features: on coupled ones a confounder can cancel
    // anti-correlation, so monotonicity is not expected there.
    const Dataset d = testing::noise_dataset(seed, 2, 2, 500);
    MetricOptions options;
    options.seed = seed;
    double previous = -1;
    for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
      const auto emb = embed_dataset(d, EmbedderSpec::mixer(EmbedderSpec::delay(4), alpha, seed + 40));
      const double mean = feature_entanglement(d, emb, options).embedded_grand_mean;
      CHECK(mean >= previous - 1e-12);
      previous = mean;
    }
  }
}

TEST_CASE("label-permuted decoding sits at chance for every pair") {
  // Enough windows that a 0.1 deviation is several standard errors.
  GeneratorConfig config = testing::small_generator(9, 20);
  const Dataset d = canonicalize(generate_dataset(config));
  MetricOptions options;
  options.seed = 9;
  const auto report = feature_decoding(d, raw_view(d), options, true);
  CHECK(report.labels_permuted);
  for (Index i = 0; i < 7; ++i)
    for (Index j = i + 1; j < 7; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(report.raw_auc(i, j) - 0.5) <= 0.1);
    }
  CHECK(std::abs(report.raw_mean - 0.5) <= 0.05);
}

TEST_CASE("metric reports are deterministic") {
  const Dataset d = canonicalize(generate_dataset(testing::small_generator(12, 2)));
  const auto emb = embed_dataset(d, EmbedderSpec::random_projection(8, 12, 3));
  MetricOptions options;
  options.seed = 12;
  options.n_perm = 100;
  const auto a = temporal_dynamics(d, emb, options);
  const auto b = temporal_dynamics(d, emb, options);
  CHECK(a.mean_embedded_smoothness == b.mean_embedded_smoothness);
  const auto ra = reconstruction_assessment(d, emb, options);
  const auto rb = reconstruction_assessment(d, emb, options);
  CHECK(ra.test_r2 == rb.test_r2);
}
