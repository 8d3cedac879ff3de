#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "wenets/common.hpp"

namespace wenets::model {

enum class PoolKind { Average, Max };

struct ConvSpec {
  size_t filters = 0;  // f_n
  size_t length = 0;   // f_l
};

// One convolutional section: one or two convolutions, one batch norm,
// one PReLU, then a pooling layer.
struct SectionConfig {
  std::vector<ConvSpec> convs;
  PoolKind pool = PoolKind::Max;
  size_t pool_k = 1;
};

struct NetworkConfig {
  size_t input_length = 24000;
  std::vector<SectionConfig> sections;
  std::vector<size_t> dense_out = {512, 512, 1};  // d_o chain; d_i derived
  double dropout_p = 0.5;

  // The published narrowband architecture.
  static NetworkConfig canonical();

  void validate() const;  // throws DataError

  size_t pool_product() const;
  size_t final_channels() const;
  size_t flatten_size() const;  // final_channels * (input_length / pool_product)

  // Per-section shape/rate bookkeeping.
  struct SectionTrace {
    size_t channels_in = 0;
    size_t channels_out = 0;
    size_t l_in = 0;
    size_t l_out = 0;
    double rate_in_hz = 0.0;   // effective input sample rate
    double spacing_ms = 0.0;   // effective sample spacing at the input
  };
  std::vector<SectionTrace> trace(double input_rate_hz = 8000.0) const;
};

// Scaled-down variant with the same five-section topology and pool chain.
// All f_n * width_scale, the two hidden dense widths * width_scale, and
// input_length * length_scale must come out integral, and the scaled
// length must divide through the pool chain. Throws DataError otherwise.
NetworkConfig tiny_variant_config(double width_scale, double length_scale);

struct ParamCount {
  std::vector<std::pair<std::string, size_t>> groups;  // name -> count
  size_t conv_total = 0;
  size_t dense_total = 0;
  size_t total = 0;
};

// Closed-form learnable-parameter counts (batch-norm running statistics
// are buffers, not parameters, and are excluded).
ParamCount count_params(const NetworkConfig& cfg);

// Compact single-line codec used in model files, e.g.
// "in=24000;p=0.5;S=C192x11:A4|C192x7:M2|...;D=512,512,1".
std::string format_config(const NetworkConfig& cfg);
NetworkConfig parse_config(const std::string& text);

uint32_t config_hash(const NetworkConfig& cfg);

}  // namespace wenets::model
