#pragma once

#include <span>

#include "wenets/common.hpp"

namespace wenets::train {

// Sample Pearson correlation. Throws DataError for n < 2 or when either
// input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// sqrt(mean((a-b)^2)); n >= 1.
double rmse(std::span<const double> a, std::span<const double> b);

}  // namespace wenets::train
