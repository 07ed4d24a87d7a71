#include "talloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace talloc {

double label_accuracy(const std::vector<int>& preds,
                      const std::vector<int>& gold) {
  if (preds.size() != gold.size() || preds.empty()) {
    throw LengthMismatchError("label_accuracy needs equal nonempty vectors (" +
                              std::to_string(preds.size()) + " vs " +
                              std::to_string(gold.size()) + ")");
  }
  long hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == gold[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double auc(const std::vector<double>& scores, const std::vector<int>& gold) {
  if (scores.size() != gold.size() || scores.empty()) {
    throw LengthMismatchError("auc needs equal nonempty vectors");
  }
  long n_pos = 0;
  for (int g : gold) n_pos += g;
  const long n_neg = static_cast<long>(gold.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClassError("auc needs both classes present in gold");
  }

  // Average ranks with tie handling, then the Mann-Whitney identity.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (size_t t = i; t <= j; ++t) {
      if (gold[order[t]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw TooFewTrialsError("mean_stderr needs at least 2 trials, got " +
                            std::to_string(values.size()));
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, sd / std::sqrt(n)};
}

}  // namespace talloc
