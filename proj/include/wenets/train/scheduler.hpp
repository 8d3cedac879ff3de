#pragma once

#include <cmath>
#include <limits>

namespace wenets::train {

// Reduce-on-plateau: an epoch improves iff loss < best - threshold
// (strict). After `patience` consecutive non-improving epochs the rate
// drops by `factor` and the counter resets; the best-so-far loss is
// retained across decays. The rate is recomputed as
// initial * factor^decays, so k decays land on exactly that value with no
// cumulative-multiplication drift.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double threshold, int patience, double factor)
      : initial_lr_(initial_lr), threshold_(threshold), patience_(patience),
        factor_(factor) {}

  // One call per epoch, in order. Returns true when a decay fired.
  bool step(double validation_loss) {
    if (validation_loss < best_ - threshold_) {
      best_ = validation_loss;
      bad_epochs_ = 0;
      return false;
    }
    if (++bad_epochs_ >= patience_) {
      ++decays_;
      bad_epochs_ = 0;
      return true;
    }
    return false;
  }

  double lr() const { return initial_lr_ * std::pow(factor_, decays_); }
  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }
  int decays() const { return decays_; }

 private:
  double initial_lr_;
  double threshold_;
  int patience_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
  int decays_ = 0;
};

}  // namespace wenets::train
