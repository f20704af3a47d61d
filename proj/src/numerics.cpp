#include "embedprobe/numerics.hpp"

#include <cmath>
#include <map>

namespace embedprobe::numerics {

SplitPlan stratified_split(std::span<const int> class_of, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw Error(ErrorCode::InvalidConfig, "split ratio must lie in (0, 1)");

  std::map<int, std::vector<Index>> members;
  for (std::size_t i = 0; i < class_of.size(); ++i) members[class_of[i]].push_back(Index(i));

  SplitPlan plan;
  plan.seed = seed;

  struct Quota {
    std::size_t train = 0;
    double remainder = 0;
    bool splittable = false;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [cls, items] : members) {
    plan.classes.push_back(cls);
    Rng rng(derive_seed(seed, "stratum", std::uint64_t(std::int64_t(cls))));
    rng.shuffle(items);

    Quota quota;
    if (items.size() < 2) {
      quota.train = items.size();
      plan.warnings.push_back("class " + std::to_string(cls) + " has " +
                              std::to_string(items.size()) +
                              " item(s); assigned wholly to train");
    } else {
      const double exact = ratio * double(items.size());
      quota.train = std::min(items.size() - 1, std::size_t(std::floor(exact + 1e-9)));
      quota.train = std::max<std::size_t>(quota.train, 1);
      quota.remainder = exact - double(quota.train);
      quota.splittable = true;
    }
    assigned += quota.train;
    quotas.push_back(quota);
  }

  const auto target = std::size_t(std::llround(ratio * double(class_of.size())));
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t idx : order) {
    if (assigned >= target) break;
    auto& quota = quotas[idx];
    const std::size_t size = members[plan.classes[idx]].size();
    if (quota.splittable && quota.remainder > 0 && quota.train + 1 < size) {
      ++quota.train;
      ++assigned;
    }
  }

  for (std::size_t c = 0; c < plan.classes.size(); ++c) {
    const auto& items = members[plan.classes[c]];
    for (std::size_t i = 0; i < items.size(); ++i)
      (i < quotas[c].train ? plan.train : plan.test).push_back(items[i]);
    plan.train_fraction.push_back(double(quotas[c].train) / double(items.size()));
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

std::vector<std::vector<Index>> kfold_indices(Index n, Index k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "k-fold needs k >= 2");
  if (n < k)
    throw Error(ErrorCode::TooFewSamples,
                "k-fold needs n >= k (n = " + std::to_string(n) + ", k = " + std::to_string(k) + ")");
  Rng rng(derive_seed(seed, "kfold"));
  const auto order = rng.permutation(n);
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  const Index base = n / k;
  const Index extra = n % k;
  Index cursor = 0;
  for (Index f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.assign(order.begin() + cursor, order.begin() + cursor + size);
    std::sort(fold.begin(), fold.end());
    cursor += size;
  }
  return folds;
}

}  // namespace embedprobe::numerics
