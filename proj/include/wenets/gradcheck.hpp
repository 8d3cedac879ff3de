#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/model/network.hpp"
#include "wenets/nn/layers.hpp"
#include "wenets/tensor.hpp"

// Central finite differences against the analytic backward pass, in
// double precision (h = 1e-5 on unit-scale values). Large groups are
// spot-checked on a deterministic sample of coordinates.

namespace wenets::gradcheck {

struct GroupResult {
  std::string name;
  double max_rel_err = 0.0;
  size_t coords_checked = 0;
  size_t coords_one_sided = 0;  // resolved against a kink via one-sided slopes
};

struct Report {
  std::vector<GroupResult> groups;

  double max_rel_err() const {
    double m = 0.0;
    for (const auto& g : groups) m = std::max(m, g.max_rel_err);
    return m;
  }
  bool pass(double tolerance) const { return max_rel_err() < tolerance; }
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  return denom < 1e-6 ? diff : diff / denom;
}

class Checker {
 public:
  explicit Checker(uint64_t seed, double h = 1e-5, size_t max_coords_per_group = 24)
      : rng_(mix_seed(seed, 0x9CAD)), h_(h), max_coords_(max_coords_per_group) {}

  // loss() must re-evaluate the forward map from current parameter values
  // (with any stochastic state frozen).
  //
  // The map is piecewise smooth: PReLU branches and max-pool argmax
  // switches put kinks arbitrarily close to any operating point, and a
  // central difference across a kink averages the two one-sided slopes.
  // When the central estimate disagrees, the coordinate is re-probed with
  // small one-sided differences: a correct backward pass equals the left
  // or the right slope (its branch convention), while a broken one
  // matches neither.
  void check_group(Report& report, const std::string& name, double* values, size_t n,
                   const double* analytic, const std::function<double()>& loss) {
    GroupResult res;
    res.name = name;
    const size_t count = std::min(n, max_coords_);
    for (size_t s = 0; s < count; ++s) {
      const size_t i = count == n ? s : rng_.uniform_index(n);
      const double saved = values[i];
      auto eval_at = [&](double offset) {
        values[i] = saved + offset;
        const double v = loss();
        values[i] = saved;
        return v;
      };
      const double central = (eval_at(h_) - eval_at(-h_)) / (2.0 * h_);
      double err = relative_error(analytic[i], central);
      if (err >= 1e-4) {
        const double hs = h_ / 100.0;
        const double at = eval_at(0.0);
        const double right = (eval_at(hs) - at) / hs;
        const double left = (at - eval_at(-hs)) / hs;
        err = std::min(relative_error(analytic[i], right),
                       relative_error(analytic[i], left));
        ++res.coords_one_sided;
      }
      res.max_rel_err = std::max(res.max_rel_err, err);
      ++res.coords_checked;
    }
    report.groups.push_back(res);
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  double h_;
  size_t max_coords_;
};

namespace detail {

inline wenets::Tensor<double> random_tensor(Rng& rng, std::vector<size_t> shape,
                                            double scale = 1.0) {
  wenets::Tensor<double> t(std::move(shape));
  for (auto& v : t.v) v = rng.uniform(-scale, scale);
  return t;
}

inline double weighted_sum(const wenets::Tensor<double>& y,
                           const wenets::Tensor<double>& r) {
  double s = 0.0;
  for (size_t i = 0; i < y.numel(); ++i) s += y.v[i] * r.v[i];
  return s;
}

}  // namespace detail

// Every individual layer type on small random shapes; parameter and input
// gradients both count as groups.
Report check_layers(uint64_t seed);

// End-to-end check of a scaled-down network (train-mode forward with
// frozen dropout masks). inject_fault flips the sign of one analytic
// group, as a detector sanity control.
Report check_network(const model::NetworkConfig& cfg, uint64_t seed,
                     bool inject_fault = false);

}  // namespace wenets::gradcheck
