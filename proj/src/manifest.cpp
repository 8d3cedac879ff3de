#include "wenets/corpus/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "wenets/dsp/segment.hpp"

namespace fs = std::filesystem;

namespace wenets::corpus {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_optional(const std::string& s, const char* what) {
  if (s.empty()) return std::nullopt;
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("manifest: bad ") + what + " value '" + s + "'");
  }
}

std::string format_optional(const std::optional<double>& v) {
  if (!v.has_value()) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

constexpr const char* kManifestHeader =
    "segment_path,record_index,source_dataset,pesq,polqa,stoi";

}  // namespace

std::string Manifest::resolve_path(const ManifestEntry& e) const {
  fs::path p(e.segment_path);
  if (p.is_absolute() || base_dir.empty()) return e.segment_path;
  return (fs::path(base_dir) / p).string();
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest: " + path);
  Manifest m;
  m.base_dir = fs::path(path).parent_path().string();

  std::string line;
  if (!std::getline(is, line)) throw DataError("empty manifest: " + path);
  if (split_csv_line(line) != split_csv_line(kManifestHeader)) {
    throw DataError("manifest header mismatch in " + path);
  }
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw DataError("manifest line " + std::to_string(lineno) + ": want 6 fields, got " +
                      std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.segment_path = fields[0];
    try {
      e.record_index = static_cast<uint32_t>(std::stoul(fields[1]));
    } catch (const std::exception&) {
      throw DataError("manifest line " + std::to_string(lineno) + ": bad record index '" +
                      fields[1] + "'");
    }
    e.source_dataset = fields[2];
    e.pesq = parse_optional(fields[3], "pesq");
    e.polqa = parse_optional(fields[4], "polqa");
    e.stoi = parse_optional(fields[5], "stoi");
    if (e.pesq && (*e.pesq < 1.0 || *e.pesq > 4.5)) {
      throw DataError("manifest line " + std::to_string(lineno) + ": pesq out of [1,4.5]");
    }
    if (e.polqa && (*e.polqa < 1.0 || *e.polqa > 4.5)) {
      throw DataError("manifest line " + std::to_string(lineno) + ": polqa out of [1,4.5]");
    }
    if (e.stoi && (*e.stoi < 0.0 || *e.stoi > 1.0)) {
      throw DataError("manifest line " + std::to_string(lineno) + ": stoi out of [0,1]");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write manifest: " + path);
  os << kManifestHeader << '\n';
  for (const auto& e : m.entries) {
    os << e.segment_path << ',' << e.record_index << ',' << e.source_dataset << ','
       << format_optional(e.pesq) << ',' << format_optional(e.polqa) << ','
       << format_optional(e.stoi) << '\n';
  }
  if (!os) throw DataError("manifest write failed: " + path);
}

std::string to_string(SplitLabel l) {
  switch (l) {
    case SplitLabel::Train: return "train";
    case SplitLabel::Test: return "test";
    case SplitLabel::Validation: return "validation";
  }
  return "?";
}

SplitLabel split_label_from_string(const std::string& s) {
  if (s == "train") return SplitLabel::Train;
  if (s == "test") return SplitLabel::Test;
  if (s == "validation") return SplitLabel::Validation;
  throw DataError("unknown split label '" + s + "'");
}

SplitAssignment split(const Manifest& m, std::array<double, 3> fractions,
                      uint64_t seed, std::ostream* warn) {
  if (m.entries.empty()) throw DataError("split: empty manifest");
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("split: fractions must sum to 1");

  std::map<std::string, std::vector<size_t>> by_dataset;
  for (size_t i = 0; i < m.entries.size(); ++i) {
    by_dataset[m.entries[i].source_dataset].push_back(i);
  }

  SplitAssignment out;
  out.seed = seed;
  out.labels.assign(m.entries.size(), SplitLabel::Train);

  // Draw order is train -> test -> validation within each dataset.
  for (auto& [name, ids] : by_dataset) {
    const size_t n = ids.size();
    if (n < 3) {
      if (warn) {
        *warn << "split: dataset '" << name << "' has " << n
              << " segment(s); assigning all to train\n";
      }
      continue;
    }
    Rng rng(mix_seed(seed, 0x5F17, fnv1a(name)));
    rng.shuffle(ids.begin(), ids.end());
    const size_t n_train = static_cast<size_t>(std::lround(fractions[0] * static_cast<double>(n)));
    const size_t n_test = static_cast<size_t>(std::lround(fractions[1] * static_cast<double>(n)));
    if (n_train + n_test > n) {
      throw DataError("split: rounded fractions exceed dataset size for '" + name + "'");
    }
    for (size_t i = 0; i < n; ++i) {
      out.labels[ids[i]] = i < n_train                ? SplitLabel::Train
                           : i < n_train + n_test     ? SplitLabel::Test
                                                      : SplitLabel::Validation;
    }
  }
  return out;
}

SplitAssignment read_split(const std::string& path, size_t manifest_size) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open split file: " + path);
  SplitAssignment out;
  out.labels.assign(manifest_size, SplitLabel::Train);
  std::vector<bool> seen(manifest_size, false);

  std::string line;
  if (!std::getline(is, line) || split_csv_line(line)[0] != "entry_id") {
    throw DataError("split file header mismatch in " + path);
  }
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw DataError("split line " + std::to_string(lineno) + ": want 3 fields");
    }
    size_t id;
    try {
      id = std::stoull(fields[0]);
    } catch (const std::exception&) {
      throw DataError("split line " + std::to_string(lineno) + ": bad entry id");
    }
    if (id >= manifest_size) {
      throw DataError("split line " + std::to_string(lineno) + ": entry id " +
                      std::to_string(id) + " out of range");
    }
    if (seen[id]) {
      throw DataError("split line " + std::to_string(lineno) + ": duplicate entry id");
    }
    seen[id] = true;
    out.labels[id] = split_label_from_string(fields[1]);
    out.seed = std::stoull(fields[2]);
  }
  for (size_t i = 0; i < manifest_size; ++i) {
    if (!seen[i]) {
      throw DataError("split file misses entry " + std::to_string(i) + ": " + path);
    }
  }
  return out;
}

void write_split(const SplitAssignment& s, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write split file: " + path);
  os << "entry_id,label,seed\n";
  for (size_t i = 0; i < s.labels.size(); ++i) {
    os << i << ',' << to_string(s.labels[i]) << ',' << s.seed << '\n';
  }
  if (!os) throw DataError("split write failed: " + path);
}

TargetMapper fit_mapper(TargetMetric metric, const Manifest& m,
                        const std::vector<size_t>& training_ids) {
  for (size_t id : training_ids) {
    if (!m.entries[id].target(metric).has_value()) {
      throw DataError("fit_mapper: entry " + std::to_string(id) + " has no " +
                      to_string(metric) + " target");
    }
  }
  if (metric != TargetMetric::Stoi) {
    return TargetMapper::affine_quality();
  }
  if (training_ids.size() < 2) {
    throw DataError("fit_mapper: z-score needs at least 2 training targets");
  }
  std::vector<double> ys;
  ys.reserve(training_ids.size());
  for (size_t id : training_ids) ys.push_back(*m.entries[id].target(metric));
  const double n = static_cast<double>(ys.size());
  const double mean = pairwise_sum(ys.data(), ys.size()) / n;
  std::vector<double> sq(ys.size());
  for (size_t i = 0; i < ys.size(); ++i) sq[i] = (ys[i] - mean) * (ys[i] - mean);
  const double var = pairwise_sum(sq.data(), sq.size()) / n;  // population
  if (var <= 0.0) {
    throw DataError("fit_mapper: zero variance in stoi training targets");
  }
  return TargetMapper::zscore(mean, std::sqrt(var));
}

IpaResult apply_ipa(const Manifest& m, const SplitAssignment* s,
                    const std::string& out_store_path) {
  if (s && s->labels.size() != m.entries.size()) {
    throw DataError("apply_ipa: split does not cover the manifest");
  }

  // One reader per distinct store.
  std::map<std::string, dsp::SegmentStoreReader> readers;
  auto reader_for = [&](const ManifestEntry& e) -> dsp::SegmentStoreReader& {
    const std::string path = m.resolve_path(e);
    auto it = readers.find(path);
    if (it == readers.end()) {
      it = readers.emplace(path, dsp::SegmentStoreReader(path)).first;
    }
    return it->second;
  };

  for (const auto& e : m.entries) {
    if (reader_for(e).read_header(e.record_index).phase_inverted) {
      throw DataError("apply_ipa: input already contains phase-inverted records; "
                      "refusing to double again");
    }
  }

  IpaResult out;
  out.manifest = m;
  if (s) out.split = *s;

  dsp::SegmentStoreWriter writer(out_store_path);
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    const dsp::Segment twin = dsp::invert_phase(reader_for(e).read(e.record_index));
    writer.append(twin);

    ManifestEntry te = e;  // identical targets and dataset
    te.segment_path = out_store_path;
    te.record_index = static_cast<uint32_t>(writer.count() - 1);
    out.manifest.entries.push_back(std::move(te));
    if (s) out.split.labels.push_back(s->labels[i]);
  }
  writer.flush();
  return out;
}

}  // namespace wenets::corpus
