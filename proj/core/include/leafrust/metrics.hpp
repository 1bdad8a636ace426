#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace leafrust {

/// counts[actual][predicted].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 2);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t& at(std::size_t actual, std::size_t predicted) {
    return counts_[actual * classes_ + predicted];
  }
  std::size_t at(std::size_t actual, std::size_t predicted) const {
    return counts_[actual * classes_ + predicted];
  }
  std::size_t total() const noexcept;

  std::size_t true_positives(std::size_t cls) const;
  std::size_t false_positives(std::size_t cls) const;
  std::size_t false_negatives(std::size_t cls) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> actual,
                                 std::span<const std::size_t> predicted, std::size_t classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  // Macro averages over classes.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // 2TP / (2TP + FP + FN) on the positive class.
  double dice = 0.0;
  std::size_t positive_class = 1;
  std::vector<ClassScores> per_class;
  ConfusionMatrix confusion;
};

// 0/0 ratios are defined as 0. Throws ValidationError on an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix& confusion, std::size_t positive_class);

nlohmann::json to_json(const MetricsReport& report);
// "label,precision,recall,f1,dice" with shortest round-trip number formatting.
std::string to_csv_row(const MetricsReport& report, const std::string& label);

// Shortest decimal representation that parses back to the same double.
std::string format_exact(double value);

}  // namespace leafrust
