#include "wenets/model/config.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <zlib.h>

namespace wenets::model {

NetworkConfig NetworkConfig::canonical() {
  NetworkConfig cfg;
  cfg.input_length = 24000;
  cfg.sections = {
      {{{192, 11}}, PoolKind::Average, 4},
      {{{192, 7}}, PoolKind::Max, 2},
      {{{256, 7}}, PoolKind::Max, 4},
      {{{512, 7}, {512, 7}}, PoolKind::Max, 3},
      {{{512, 7}, {512, 7}}, PoolKind::Max, 2},
  };
  cfg.dense_out = {512, 512, 1};
  cfg.dropout_p = 0.5;
  return cfg;
}

void NetworkConfig::validate() const {
  if (input_length == 0) throw DataError("config: input_length must be positive");
  if (sections.empty()) throw DataError("config: no sections");
  if (dense_out.empty() || dense_out.back() != 1) {
    throw DataError("config: dense chain must end in a single output");
  }
  size_t len = input_length;
  for (size_t s = 0; s < sections.size(); ++s) {
    const auto& sec = sections[s];
    if (sec.convs.empty() || sec.convs.size() > 2) {
      throw DataError("config: section " + std::to_string(s + 1) +
                      " must have one or two convolutions");
    }
    for (const auto& c : sec.convs) {
      if (c.filters == 0 || c.length == 0) {
        throw DataError("config: zero-sized convolution in section " +
                        std::to_string(s + 1));
      }
    }
    if (sec.pool_k == 0 || len % sec.pool_k != 0) {
      throw DataError("config: section " + std::to_string(s + 1) + " pool k=" +
                      std::to_string(sec.pool_k) + " does not divide length " +
                      std::to_string(len));
    }
    len /= sec.pool_k;
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    throw DataError("config: dropout_p must be in [0, 1)");
  }
}

size_t NetworkConfig::pool_product() const {
  size_t p = 1;
  for (const auto& s : sections) p *= s.pool_k;
  return p;
}

size_t NetworkConfig::final_channels() const {
  return sections.back().convs.back().filters;
}

size_t NetworkConfig::flatten_size() const {
  return final_channels() * (input_length / pool_product());
}

std::vector<NetworkConfig::SectionTrace> NetworkConfig::trace(double input_rate_hz) const {
  validate();
  std::vector<SectionTrace> out;
  size_t len = input_length;
  size_t chan = 1;
  double rate = input_rate_hz;
  for (const auto& sec : sections) {
    SectionTrace t;
    t.channels_in = chan;
    t.l_in = len;
    t.rate_in_hz = rate;
    t.spacing_ms = 1000.0 / rate;
    chan = sec.convs.back().filters;
    len /= sec.pool_k;
    rate /= static_cast<double>(sec.pool_k);
    t.channels_out = chan;
    t.l_out = len;
    out.push_back(t);
  }
  return out;
}

NetworkConfig tiny_variant_config(double width_scale, double length_scale) {
  const NetworkConfig base = NetworkConfig::canonical();
  NetworkConfig cfg = base;

  const double scaled_len = static_cast<double>(base.input_length) * length_scale;
  if (scaled_len < 1.0 || scaled_len != std::floor(scaled_len)) {
    throw DataError("tiny variant: scaled input length " + std::to_string(scaled_len) +
                    " is not a positive integer");
  }
  cfg.input_length = static_cast<size_t>(scaled_len);
  double len = scaled_len;
  for (size_t s = 0; s < base.sections.size(); ++s) {
    len /= static_cast<double>(base.sections[s].pool_k);
    if (len != std::floor(len) || len < 1.0) {
      throw DataError("tiny variant: length " + std::to_string(len) + " after section " +
                      std::to_string(s + 1) + " is not a positive integer");
    }
  }

  auto scale_width = [&](size_t w, const char* what) {
    const double scaled = static_cast<double>(w) * width_scale;
    if (scaled < 1.0 || scaled != std::floor(scaled)) {
      throw DataError(std::string("tiny variant: scaled ") + what + " " +
                      std::to_string(scaled) + " is not a positive integer");
    }
    return static_cast<size_t>(scaled);
  };
  for (auto& sec : cfg.sections) {
    for (auto& c : sec.convs) c.filters = scale_width(c.filters, "channel count");
  }
  for (size_t i = 0; i + 1 < cfg.dense_out.size(); ++i) {
    cfg.dense_out[i] = scale_width(cfg.dense_out[i], "dense width");
  }
  cfg.validate();
  return cfg;
}

ParamCount count_params(const NetworkConfig& cfg) {
  cfg.validate();
  ParamCount pc;
  auto add = [&](const std::string& name, size_t n, size_t& bucket) {
    pc.groups.emplace_back(name, n);
    bucket += n;
  };

  size_t chan = 1;
  for (size_t s = 0; s < cfg.sections.size(); ++s) {
    const auto& sec = cfg.sections[s];
    const std::string sn = "S" + std::to_string(s + 1);
    for (size_t ci = 0; ci < sec.convs.size(); ++ci) {
      const auto& c = sec.convs[ci];
      const std::string cn = sn + ".conv" + std::to_string(ci + 1);
      add(cn + ".w", c.filters * chan * c.length, pc.conv_total);
      add(cn + ".b", c.filters, pc.conv_total);
      chan = c.filters;
    }
    add(sn + ".bn.gamma", chan, pc.conv_total);
    add(sn + ".bn.beta", chan, pc.conv_total);
    add(sn + ".prelu.a", chan, pc.conv_total);
  }

  size_t d_in = cfg.flatten_size();
  for (size_t li = 0; li < cfg.dense_out.size(); ++li) {
    const std::string ln = "L" + std::to_string(li + 1);
    const size_t d_out = cfg.dense_out[li];
    add(ln + ".w", d_out * d_in, pc.dense_total);
    add(ln + ".b", d_out, pc.dense_total);
    if (li + 1 < cfg.dense_out.size()) {
      add(ln + ".prelu.a", d_out, pc.dense_total);
    }
    d_in = d_out;
  }
  pc.total = pc.conv_total + pc.dense_total;
  return pc;
}

std::string format_config(const NetworkConfig& cfg) {
  std::ostringstream os;
  os << "in=" << cfg.input_length << ";p=" << cfg.dropout_p << ";S=";
  for (size_t s = 0; s < cfg.sections.size(); ++s) {
    if (s) os << '|';
    const auto& sec = cfg.sections[s];
    for (size_t c = 0; c < sec.convs.size(); ++c) {
      if (c) os << ',';
      os << 'C' << sec.convs[c].filters << 'x' << sec.convs[c].length;
    }
    os << ':' << (sec.pool == PoolKind::Average ? 'A' : 'M') << sec.pool_k;
  }
  os << ";D=";
  for (size_t i = 0; i < cfg.dense_out.size(); ++i) {
    if (i) os << ',';
    os << cfg.dense_out[i];
  }
  return os.str();
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

size_t parse_size(const std::string& s, const char* what) {
  size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw DataError(std::string("config: bad ") + what + " '" + s + "'");
  }
  if (pos != s.size()) {
    throw DataError(std::string("config: bad ") + what + " '" + s + "'");
  }
  return static_cast<size_t>(v);
}

}  // namespace

NetworkConfig parse_config(const std::string& text) {
  NetworkConfig cfg;
  cfg.sections.clear();
  cfg.dense_out.clear();
  bool saw_in = false, saw_p = false, saw_s = false, saw_d = false;
  for (const auto& field : split_on(text, ';')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DataError("config: malformed field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "in") {
      cfg.input_length = parse_size(val, "input length");
      saw_in = true;
    } else if (key == "p") {
      try {
        cfg.dropout_p = std::stod(val);
      } catch (const std::exception&) {
        throw DataError("config: bad dropout '" + val + "'");
      }
      saw_p = true;
    } else if (key == "S") {
      for (const auto& sec_text : split_on(val, '|')) {
        const auto colon = sec_text.find(':');
        if (colon == std::string::npos || colon + 2 > sec_text.size()) {
          throw DataError("config: malformed section '" + sec_text + "'");
        }
        SectionConfig sec;
        for (const auto& conv_text : split_on(sec_text.substr(0, colon), ',')) {
          if (conv_text.size() < 4 || conv_text[0] != 'C') {
            throw DataError("config: malformed conv '" + conv_text + "'");
          }
          const auto x = conv_text.find('x');
          if (x == std::string::npos) {
            throw DataError("config: malformed conv '" + conv_text + "'");
          }
          sec.convs.push_back({parse_size(conv_text.substr(1, x - 1), "filter count"),
                               parse_size(conv_text.substr(x + 1), "filter length")});
        }
        const char pool = sec_text[colon + 1];
        if (pool == 'A') {
          sec.pool = PoolKind::Average;
        } else if (pool == 'M') {
          sec.pool = PoolKind::Max;
        } else {
          throw DataError("config: unknown pool kind '" + std::string(1, pool) + "'");
        }
        sec.pool_k = parse_size(sec_text.substr(colon + 2), "pool k");
        cfg.sections.push_back(std::move(sec));
      }
      saw_s = true;
    } else if (key == "D") {
      for (const auto& d : split_on(val, ',')) {
        cfg.dense_out.push_back(parse_size(d, "dense width"));
      }
      saw_d = true;
    } else {
      throw DataError("config: unknown field '" + key + "'");
    }
  }
  if (!saw_in || !saw_p || !saw_s || !saw_d) {
    throw DataError("config: missing fields in '" + text + "'");
  }
  cfg.validate();
  return cfg;
}

uint32_t config_hash(const NetworkConfig& cfg) {
  const std::string s = format_config(cfg);
  return static_cast<uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace wenets::model
