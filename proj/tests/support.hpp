#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

#include "embedprobe/embedders.hpp"
#include "embedprobe/scenario_forge.hpp"

namespace testing {

using namespace embedprobe;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("embedprobe_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& child) const { return (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

// (scenario index, patient index, feature index, t) -> value
using CellFunction = std::function<double(int, int, int, Index)>;

/// Canonical dataset of `length` rows per cell built from a closure.
inline Dataset make_dataset(int scenarios, int patients, Index length, const CellFunction& value) {
  Manifest manifest;
  manifest.features.assign(kAllFeatures.begin(), kAllFeatures.end());
  manifest.canonical_length = length;
  std::vector<SignalRecord> records;
  for (int s = 0; s < scenarios; ++s) {
    const std::string scenario = "s" + std::to_string(s);
    manifest.scenarios.push_back(scenario);
    for (int p = 0; p < patients; ++p) {
      PatientProfile profile;
      profile.id = "p" + std::to_string(p);
      profile.scenario = scenario;
      manifest.patients.push_back(profile);
      for (std::size_t f = 0; f < manifest.features.size(); ++f) {
        SignalRecord r;
        r.scenario = scenario;
        r.patient = profile.id;
        r.feature = manifest.features[f];
        r.times = Vector::LinSpaced(length, 0.0, double(length - 1));
        r.values.resize(length);
        for (Index t = 0; t < length; ++t) r.values(t) = value(s, p, int(f), t);
        records.push_back(std::move(r));
      }
    }
  }
  return Dataset(std::move(manifest), std::move(records));
}

/// Independent seeded white noise in every cell.
inline Dataset noise_dataset(std::uint64_t seed, int scenarios = 2, int patients = 3, Index length = 1000) {
  return make_dataset(scenarios, patients, length, [seed](int s, int p, int f, Index t) {
    // One stream per cell, consumed in t order.
    thread_local std::uint64_t current = ~0ULL;
    thread_local Rng rng(0);
    const auto key = derive_seed(seed, std::uint64_t(s), std::uint64_t(p), std::uint64_t(f));
    if (t == 0 || key != current) {
      current = key;
      rng = Rng(key);
    }
    return rng.normal();
  });
}

inline GeneratorConfig small_generator(std::uint64_t seed, int patients = 3) {
  GeneratorConfig g;
  g.seed = seed;
  g.patients_per_scenario = patients;
  return g;
}

}  // namespace testing
