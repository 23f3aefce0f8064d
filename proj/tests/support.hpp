#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "confold/model.hpp"

namespace testing {

using confold::Dataset;
using confold::Example;
using confold::Feature;
using confold::FeatureKind;
using confold::FeatureValue;
using confold::Schema;

inline Example row(std::string label, std::vector<FeatureValue> values, std::string id = {}) {
  return Example{std::move(id), std::move(values), std::move(label)};
}

inline Dataset table(std::vector<Feature> features, std::vector<Example> examples, std::string target = "class") {
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (examples[i].id.empty()) examples[i].id = std::to_string(i);
  return Dataset(Schema(std::move(features)), std::move(examples), std::move(target));
}

// Individuals of the age/name/colour example: female iff older than 16,
// except anyone called sam whose favourite colour is not purple.
inline Dataset female_data() {
  const std::vector<std::string> names{"adam", "beth", "carl", "dora", "sam"};
  const std::vector<std::string> colours{"red", "green", "purple"};
  std::vector<Example> examples;
  for (double age : {5.0, 10.0, 14.0, 16.0, 17.0, 20.0, 25.0, 30.0, 41.0, 60.0})
    for (const auto& name : names)
      for (const auto& colour : colours) {
        const bool female = age > 16 && !(name == "sam" && colour != "purple");
        examples.push_back(row(female ? "true" : "false", {age, name, colour}));
      }
  return table({{"age", FeatureKind::Numeric}, {"name", FeatureKind::Categorical},
                {"fav_color", FeatureKind::Categorical}},
               std::move(examples), "female");
}

struct RandomDataSpec {
  std::size_t max_examples = 200;
  std::size_t max_features = 8;
  std::size_t max_classes = 5;
  double missing_rate = 0.05;
};

// Mixed categorical/numeric data with a weak signal and label noise.
inline Dataset random_dataset(std::mt19937_64& rng, const RandomDataSpec& spec = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = pick(1, spec.max_examples);
  const std::size_t f = pick(1, spec.max_features);
  const std::size_t k = pick(1, spec.max_classes);
  std::vector<Feature> features;
  std::vector<std::size_t> arity;
  for (std::size_t i = 0; i < f; ++i) {
    const bool numeric = unit(rng) < 0.5;
    features.push_back({"f" + std::to_string(i), numeric ? FeatureKind::Numeric : FeatureKind::Categorical});
    arity.push_back(pick(2, 6));
  }
  std::vector<Example> examples;
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<FeatureValue> values;
    std::size_t signal = 0;
    for (std::size_t i = 0; i < f; ++i) {
      const std::size_t level = pick(0, arity[i] - 1);
      signal += level;
      if (unit(rng) < spec.missing_rate)
        values.emplace_back(confold::Missing{});
      else if (features[i].kind == FeatureKind::Numeric)
        values.emplace_back(static_cast<double>(level) + 0.5 * std::floor(unit(rng) * 4.0));
      else
        values.emplace_back("v" + std::to_string(level));
    }
    const std::size_t cls = unit(rng) < 0.7 ? signal % k : pick(0, k - 1);
    examples.push_back(row("c" + std::to_string(cls), std::move(values)));
  }
  return table(std::move(features), std::move(examples));
}

inline std::string data_path(const std::string& file) { return std::string(CONFOLD_DATA_DIR) + "/" + file; }

}  // namespace testing
