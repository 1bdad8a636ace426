#include "leafrust/metrics.hpp"

#include <charconv>
#include <numeric>

#include "leafrust/error.hpp"

namespace leafrust {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw ValidationError("confusion matrix needs at least one class");
}

std::size_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::true_positives(std::size_t cls) const { return at(cls, cls); }

std::size_t ConfusionMatrix::false_positives(std::size_t cls) const {
  std::size_t s = 0;
  for (std::size_t a = 0; a < classes_; ++a)
    if (a != cls) s += at(a, cls);
  return s;
}

std::size_t ConfusionMatrix::false_negatives(std::size_t cls) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != cls) s += at(cls, p);
  return s;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> actual,
                                 std::span<const std::size_t> predicted, std::size_t classes) {
  if (actual.size() != predicted.size()) {
    throw ValidationError("confusion_matrix: " + std::to_string(actual.size()) + " actual vs " +
                          std::to_string(predicted.size()) + " predicted labels");
  }
  if (actual.empty()) throw ValidationError("confusion_matrix: no samples");
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] >= classes || predicted[i] >= classes) {
      throw ValidationError("confusion_matrix: class index out of range at sample " + std::to_string(i));
    }
    ++m.at(actual[i], predicted[i]);
  }
  return m;
}

namespace {
double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

MetricsReport compute_metrics(const ConfusionMatrix& confusion, std::size_t positive_class) {
  if (confusion.total() == 0) throw ValidationError("compute_metrics: empty confusion matrix");
  if (positive_class >= confusion.classes()) {
    throw ValidationError("compute_metrics: positive class out of range");
  }
  MetricsReport r;
  r.confusion = confusion;
  r.positive_class = positive_class;
  const std::size_t k = confusion.classes();
  for (std::size_t c = 0; c < k; ++c) {
    const auto tp = confusion.true_positives(c);
    ClassScores s;
    s.precision = ratio(tp, tp + confusion.false_positives(c));
    s.recall = ratio(tp, tp + confusion.false_negatives(c));
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    r.per_class.push_back(s);
    r.precision += s.precision;
    r.recall += s.recall;
  }
  r.precision /= double(k);
  r.recall /= double(k);
  // F1 of the macro precision and recall, so that f1 is their harmonic mean.
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  const auto tp = confusion.true_positives(positive_class);
  r.dice = ratio(2 * tp, 2 * tp + confusion.false_positives(positive_class) +
                             confusion.false_negatives(positive_class));
  return r;
}

std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t a = 0; a < r.confusion.classes(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.confusion.classes(); ++p) row.push_back(r.confusion.at(a, p));
    counts.push_back(std::move(row));
  }
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& s : r.per_class) {
    per_class.push_back({{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
  }
  return {{"averaging", {{"precision_recall_f1", "macro"}, {"dice", "positive_class"}}},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"dice", r.dice},
          {"positive_class", r.positive_class},
          {"per_class", std::move(per_class)},
          {"confusion", std::move(counts)}};
}

std::string to_csv_row(const MetricsReport& r, const std::string& label) {
  return label + "," + format_exact(r.precision) + "," + format_exact(r.recall) + "," +
         format_exact(r.f1) + "," + format_exact(r.dice);
}

}  // namespace leafrust
