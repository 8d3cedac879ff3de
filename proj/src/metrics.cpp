#include "wenets/train/metrics.hpp"

#include <cmath>
#include <vector>

namespace wenets::train {

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("pearson: length mismatch");
  const size_t n = a.size();
  if (n < 2) throw DataError("pearson: need at least 2 pairs");

  const double mean_a = pairwise_sum(a) / static_cast<double>(n);
  const double mean_b = pairwise_sum(b) / static_cast<double>(n);
  std::vector<double> ca(n), cb(n), cab(n);
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    ca[i] = da * da;
    cb[i] = db * db;
    cab[i] = da * db;
  }
  const double var_a = pairwise_sum(ca.data(), n);
  const double var_b = pairwise_sum(cb.data(), n);
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw DataError("pearson: zero variance input");
  }
  return pairwise_sum(cab.data(), n) / std::sqrt(var_a * var_b);
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("rmse: length mismatch");
  if (a.empty()) throw DataError("rmse: empty input");
  std::vector<double> sq(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq[i] = d * d;
  }
  return std::sqrt(pairwise_sum(sq.data(), sq.size()) / static_cast<double>(a.size()));
}

}  // namespace wenets::train
