#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "wenets/common.hpp"
#include "wenets/model/network.hpp"

// WENET1 model file:
//   magic "WENET1" (6 bytes)
//   payload:
//     version            u16 LE (currently 1)
//     metadata           u32 LE line count, then per line u32 LE byte
//                        length + UTF-8 "key=value"
//     parameter groups   in the model's topological order (parameters,
//                        then batch-norm running stats); per group
//                        u32 LE element count + that many f32 LE
//   crc32 of the payload, u32 LE
// Parameters are stored as f32 regardless of the in-memory precision.

namespace wenets::model {

inline constexpr char kModelMagic[6] = {'W', 'E', 'N', 'E', 'T', '1'};
inline constexpr uint16_t kModelVersion = 1;

namespace detail {

inline void append_u16le(std::string& out, uint16_t v) {
  out.append(reinterpret_cast<const char*>(&v), 2);
}
inline void append_u32le(std::string& out, uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
inline void append_f32le(std::string& out, float v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

template <typename T>
void save_model(Nawenet<T>& model, const std::string& path) {
  std::string payload;
  detail::append_u16le(payload, kModelVersion);

  std::vector<std::string> lines;
  lines.push_back("config=" + format_config(model.config()));
  lines.push_back("metric=" + to_string(model.metric));
  lines.push_back(std::string("mapper=") +
                  (model.mapper.kind == TargetMapper::Kind::Affine ? "affine" : "zscore"));
  lines.push_back("mapper_scale=" + detail::format_double(model.mapper.scale));
  lines.push_back("mapper_shift=" + detail::format_double(model.mapper.shift));
  lines.push_back("mapper_mean=" + detail::format_double(model.mapper.mean));
  lines.push_back("mapper_std=" + detail::format_double(model.mapper.stddev));
  lines.push_back("seed=" + std::to_string(model.seed()));
  lines.push_back("config_hash=" + std::to_string(config_hash(model.config())));
  detail::append_u32le(payload, static_cast<uint32_t>(lines.size()));
  for (const auto& line : lines) {
    detail::append_u32le(payload, static_cast<uint32_t>(line.size()));
    payload.append(line);
  }

  auto groups = model.parameters();
  for (auto& b : model.buffers()) groups.push_back(b);
  for (const auto& g : groups) {
    detail::append_u32le(payload, static_cast<uint32_t>(g.value->numel()));
    for (const T& x : g.value->v) detail::append_f32le(payload, static_cast<float>(x));
  }

  const uint32_t crc = static_cast<uint32_t>(crc32(
      0, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open model file for writing: " + path);
  os.write(kModelMagic, sizeof(kModelMagic));
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  write_u32le(os, crc);
  if (!os) throw DataError("write failed: " + path);
}

inline Nawenet<float> load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open model file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kModelMagic) + 4 ||
      std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw DataError("bad magic: not a WENET1 model file: " + path);
  }
  const size_t payload_len = bytes.size() - sizeof(kModelMagic) - 4;
  const char* payload = bytes.data() + sizeof(kModelMagic);
  uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  const uint32_t crc = static_cast<uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(payload), static_cast<uInt>(payload_len)));
  if (crc != stored_crc) {
    throw DataError("checksum failure: model file corrupt or truncated: " + path);
  }

  size_t pos = 0;
  auto need = [&](size_t n, const char* what) {
    if (pos + n > payload_len) {
      throw DataError(std::string("truncated model file while reading ") + what);
    }
  };
  auto take_u16 = [&](const char* what) {
    need(2, what);
    uint16_t v;
    std::memcpy(&v, payload + pos, 2);
    pos += 2;
    return v;
  };
  auto take_u32 = [&](const char* what) {
    need(4, what);
    uint32_t v;
    std::memcpy(&v, payload + pos, 4);
    pos += 4;
    return v;
  };

  const uint16_t version = take_u16("version");
  if (version != kModelVersion) {
    throw DataError("unsupported model version " + std::to_string(version));
  }

  std::map<std::string, std::string> meta;
  const uint32_t n_lines = take_u32("metadata count");
  for (uint32_t i = 0; i < n_lines; ++i) {
    const uint32_t len = take_u32("metadata length");
    need(len, "metadata line");
    const std::string line(payload + pos, len);
    pos += len;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed metadata line: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto require_key = [&](const std::string& k) -> const std::string& {
    auto it = meta.find(k);
    if (it == meta.end()) throw DataError("model metadata missing key: " + k);
    return it->second;
  };

  NetworkConfig cfg = parse_config(require_key("config"));
  const uint64_t seed = std::stoull(require_key("seed"));
  Nawenet<float> model(cfg, seed);
  model.metric = target_metric_from_string(require_key("metric"));
  if (require_key("mapper") == "affine") {
    model.mapper.kind = TargetMapper::Kind::Affine;
  } else {
    model.mapper.kind = TargetMapper::Kind::ZScore;
  }
  model.mapper.scale = std::stod(require_key("mapper_scale"));
  model.mapper.shift = std::stod(require_key("mapper_shift"));
  model.mapper.mean = std::stod(require_key("mapper_mean"));
  model.mapper.stddev = std::stod(require_key("mapper_std"));

  auto groups = model.parameters();
  for (auto& b : model.buffers()) groups.push_back(b);
  for (auto& g : groups) {
    const uint32_t count = take_u32("group length");
    if (count != g.value->numel()) {
      throw DataError("group " + g.name + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(g.value->numel()));
    }
    need(count * sizeof(float), "group data");
    std::memcpy(g.value->data(), payload + pos, count * sizeof(float));
    pos += count * sizeof(float);
  }
  if (pos != payload_len) {
    throw DataError("trailing bytes in model file: " + path);
  }
  return model;
}

}  // namespace wenets::model
