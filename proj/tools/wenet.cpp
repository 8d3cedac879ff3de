#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "wenets/common.hpp"
#include "wenets/corpus/dataset.hpp"
#include "wenets/corpus/fixture.hpp"
#include "wenets/corpus/manifest.hpp"
#include "wenets/dsp/activity.hpp"
#include "wenets/dsp/segment.hpp"
#include "wenets/dsp/wav.hpp"
#include "wenets/gradcheck.hpp"
#include "wenets/model/config.hpp"
#include "wenets/model/network.hpp"
#include "wenets/model/serialize.hpp"
#include "wenets/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace wenets;

namespace {

// exit codes: 0 ok, 1 usage, 2 data error, 3 numerical abort
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct GlobalOptions {
  uint64_t seed = 0;
  std::string precision = "f32";
  bool parallel = false;
  int threads = 0;
  bool quiet = false;
  bool verbose = false;

  ExecMode exec() const { return parallel ? ExecMode::Parallel : ExecMode::Serial; }
  // Deterministic (serial, no wall-clock in logs) unless --parallel.
  bool deterministic() const { return !parallel; }
};

std::map<std::string, corpus::ManifestEntry> load_target_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open target CSV: " + path);
  std::map<std::string, corpus::ManifestEntry> out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("source_id,pesq,polqa,stoi", 0) != 0) {
    throw DataError("target CSV header must be source_id,pesq,polqa,stoi: " + path);
  }
  auto parse_opt = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur.push_back(ch);
      }
    }
    f.push_back(cur);
    if (f.size() != 4) throw DataError("target CSV row needs 4 fields: " + line);
    corpus::ManifestEntry e;
    e.pesq = parse_opt(f[1]);
    e.polqa = parse_opt(f[2]);
    e.stoi = parse_opt(f[3]);
    out[f[0]] = e;
  }
  return out;
}

int cmd_synth(const GlobalOptions& g, const std::string& out_dir, size_t count,
              double seconds) {
  corpus::FixtureOptions opt;
  opt.count = count;
  opt.seed = g.seed;
  corpus::synth_wav_corpus(opt, seconds, out_dir);
  if (!g.quiet) {
    std::cout << "wrote " << count << " clips (" << seconds << " s each) and targets.csv to "
              << out_dir << "\n";
  }
  return kExitOk;
}

int cmd_prepare(const GlobalOptions& g, const std::string& wav_dir,
                const std::string& store_path, const std::string& manifest_path,
                double min_activity, int passes, const std::string& target_csv,
                std::string dataset_name) {
  std::vector<std::string> wavs;
  if (!fs::is_directory(wav_dir)) throw DataError("not a directory: " + wav_dir);
  for (const auto& entry : fs::directory_iterator(wav_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      wavs.push_back(entry.path().string());
    }
  }
  std::sort(wavs.begin(), wavs.end());
  if (dataset_name.empty()) dataset_name = fs::path(wav_dir).filename().string();
  if (dataset_name.empty()) dataset_name = "default";

  std::map<std::string, corpus::ManifestEntry> targets;
  if (!target_csv.empty()) targets = load_target_csv(target_csv);

  dsp::SegmentStoreWriter writer(store_path);
  corpus::Manifest manifest;
  manifest.base_dir = fs::path(manifest_path).parent_path().string();
  const std::string stored_path = fs::path(store_path).filename().string();

  Rng rng(mix_seed(g.seed, 0x9E6));
  double activity_sum = 0.0;
  size_t decode_failures = 0;
  for (const auto& path : wavs) {
    std::vector<dsp::Segment> segs;
    try {
      const dsp::AudioClip clip = dsp::load_wav(path);
      const auto norm = dsp::normalize_to_level(clip);
      segs = dsp::extract_segments(norm.clip, min_activity, passes, rng,
                                   static_cast<float>(norm.gain_db));
    } catch (const DataError& e) {
      ++decode_failures;
      std::cerr << "skipping " << path << ": " << e.what() << "\n";
      continue;
    }
    const std::string file_name = fs::path(path).filename().string();
    const auto target_it = targets.find(file_name);
    for (auto& seg : segs) {
      seg.source_id = file_name;
      writer.append(seg);
      corpus::ManifestEntry e;
      e.segment_path = stored_path;
      e.record_index = static_cast<uint32_t>(writer.count() - 1);
      e.source_dataset = dataset_name;
      if (target_it != targets.end()) {
        e.pesq = target_it->second.pesq;
        e.polqa = target_it->second.polqa;
        e.stoi = target_it->second.stoi;
      }
      activity_sum += seg.activity_factor;
      manifest.entries.push_back(std::move(e));
    }
  }
  writer.flush();
  if (writer.count() == 0) {
    std::cerr << "no segments\n";
    return kExitData;
  }
  corpus::write_manifest(manifest, manifest_path);
  if (!g.quiet) {
    std::printf("%zu segments from %zu file(s) (%zu skipped), mean activity %.3f\n",
                writer.count(), wavs.size() - decode_failures, decode_failures,
                activity_sum / static_cast<double>(writer.count()));
  }
  return kExitOk;
}

int cmd_split(const GlobalOptions& g, const std::string& manifest_path,
              const std::string& out_path, const std::string& fractions_text, bool ipa,
              const std::string& ipa_store, const std::string& ipa_manifest) {
  const corpus::Manifest manifest = corpus::read_manifest(manifest_path);

  std::array<double, 3> fractions{0.5, 0.4, 0.1};
  {
    std::vector<double> parts;
    std::string cur;
    for (char ch : fractions_text + ",") {
      if (ch == ',') {
        parts.push_back(std::stod(cur));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (parts.size() != 3) throw DataError("--fractions wants three comma-separated values");
    std::copy(parts.begin(), parts.end(), fractions.begin());
  }

  corpus::SplitAssignment assignment =
      corpus::split(manifest, fractions, g.seed, g.quiet ? nullptr : &std::cerr);

  if (ipa) {
    if (ipa_store.empty() || ipa_manifest.empty()) {
      throw DataError("--ipa needs --ipa-store and --ipa-manifest");
    }
    const auto augmented = corpus::apply_ipa(manifest, &assignment, ipa_store);
    corpus::Manifest out_manifest = augmented.manifest;
    // keep the augmented manifest relocatable next to its stores
    for (auto& e : out_manifest.entries) {
      if (e.segment_path == ipa_store) {
        e.segment_path = fs::path(ipa_store).filename().string();
      }
    }
    corpus::write_manifest(out_manifest, ipa_manifest);
    corpus::write_split(augmented.split, out_path);
    if (!g.quiet) {
      std::printf("split %zu entries (ipa doubled to %zu)\n", manifest.size(),
                  out_manifest.size());
    }
  } else {
    corpus::write_split(assignment, out_path);
    if (!g.quiet) std::printf("split %zu entries\n", manifest.size());
  }
  return kExitOk;
}

model::NetworkConfig config_for_flags(bool tiny, double width_scale, double length_scale) {
  if (!tiny && width_scale == 1.0 && length_scale == 1.0) {
    return model::NetworkConfig::canonical();
  }
  if (tiny && width_scale == 1.0 && length_scale == 1.0) {
    // default desk-scale variant: 2880-sample input, 1/16 widths
    return model::tiny_variant_config(1.0 / 16.0, 0.12);
  }
  return model::tiny_variant_config(width_scale, length_scale);
}

template <typename T>
int run_train(const GlobalOptions& g, const corpus::Manifest& manifest,
              const corpus::SplitAssignment& assignment, TargetMetric metric,
              const model::NetworkConfig& cfg, const train::TrainConfig& tcfg,
              const std::string& model_out, const std::string& log_out) {
  const auto train_ids = assignment.indices(corpus::SplitLabel::Train);
  const auto val_ids = assignment.indices(corpus::SplitLabel::Validation);

  model::Nawenet<T> net(cfg, g.seed);
  net.metric = metric;
  net.mapper = corpus::fit_mapper(metric, manifest, train_ids);

  corpus::SegmentSource source(manifest);
  const auto logs = wenets::train::train(net, source, train_ids, val_ids, tcfg);
  model::save_model(net, model_out);
  if (!log_out.empty()) train::write_epoch_log_csv(logs, log_out);
  if (!g.quiet && !logs.empty()) {
    std::printf("trained %d epochs: final val_rmse %.5f val_rho %.5f -> %s\n",
                logs.back().epoch, logs.back().val_rmse, logs.back().val_rho,
                model_out.c_str());
  }
  return kExitOk;
}

int cmd_train(const GlobalOptions& g, const std::string& manifest_path,
              const std::string& split_path, const std::string& metric_name,
              const std::string& model_out, const std::string& log_out, bool tiny,
              double width_scale, double length_scale, train::TrainConfig tcfg) {
  const corpus::Manifest manifest = corpus::read_manifest(manifest_path);
  const corpus::SplitAssignment assignment = corpus::read_split(split_path, manifest.size());
  const TargetMetric metric = target_metric_from_string(metric_name);
  const model::NetworkConfig cfg = config_for_flags(tiny, width_scale, length_scale);

  tcfg.seed = g.seed;
  tcfg.exec = g.exec();
  tcfg.log_wall_time = !g.deterministic();
  if (g.verbose) tcfg.progress = &std::cerr;

  if (g.precision == "f64") {
    return run_train<double>(g, manifest, assignment, metric, cfg, tcfg, model_out, log_out);
  }
  return run_train<float>(g, manifest, assignment, metric, cfg, tcfg, model_out, log_out);
}

int cmd_evaluate(const GlobalOptions& g, const std::string& model_path,
                 const std::string& manifest_path, const std::string& split_path,
                 const std::string& set_name, const std::string& out_dir,
                 size_t batch_size) {
  const corpus::Manifest manifest = corpus::read_manifest(manifest_path);
  const corpus::SplitAssignment assignment = corpus::read_split(split_path, manifest.size());
  model::Nawenet<float> net = model::load_model(model_path);

  const auto ids = assignment.indices(corpus::split_label_from_string(set_name));
  if (ids.empty()) throw DataError("evaluate: no entries in set '" + set_name + "'");
  for (size_t id : ids) {
    if (!manifest.entries[id].target(net.metric).has_value()) {
      throw DataError("evaluate: manifest lacks " + to_string(net.metric) +
                      " targets (metric mismatch with model)");
    }
  }

  corpus::SegmentSource source(manifest);
  const auto report = train::evaluate(net, source, ids, batch_size, g.exec());

  fs::create_directories(out_dir);
  train::write_eval_csv(report, (fs::path(out_dir) / "eval.csv").string());
  train::write_histogram_csv(report, native_range(net.metric),
                             (fs::path(out_dir) / "histogram.csv").string());
  {
    std::ofstream os(fs::path(out_dir) / "pairs.csv", std::ios::trunc);
    os << "dataset,prediction,target\n";
    char buf[120];
    for (size_t i = 0; i < report.pairs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g", report.pair_datasets[i].c_str(),
                    report.pairs[i].first, report.pairs[i].second);
      os << buf << '\n';
    }
  }
  if (!g.quiet) {
    if (report.combined.rho.has_value()) {
      std::printf("%s set: n=%zu rho=%.4f rmse=%.4f -> %s\n", set_name.c_str(),
                  report.combined.count, *report.combined.rho, report.combined.rmse_native,
                  out_dir.c_str());
    } else {
      std::printf("%s set: n=%zu rho=undefined rmse=%.4f -> %s\n", set_name.c_str(),
                  report.combined.count, report.combined.rmse_native, out_dir.c_str());
    }
  }
  return kExitOk;
}

int cmd_predict(const GlobalOptions& g, const std::string& model_path,
                const std::vector<std::string>& wav_paths) {
  model::Nawenet<float> net = model::load_model(model_path);
  const auto range = native_range(net.metric);
  const size_t L = net.config().input_length;

  size_t failures = 0;
  std::cout << "file,segment,score\n";
  for (const auto& path : wav_paths) {
    try {
      const dsp::AudioClip clip = dsp::load_wav(path);
      if (clip.samples.size() < L) {
        throw DataError("shorter than " + std::to_string(L) + " samples");
      }
      // Inference windows: stride 3 s, no offset, each normalized alone.
      std::vector<double> scores;
      const size_t n_windows = clip.samples.size() / L;
      for (size_t w = 0; w < n_windows; ++w) {
        dsp::AudioClip window;
        window.sample_rate = clip.sample_rate;
        window.source_id = clip.source_id;
        window.samples.assign(clip.samples.begin() + static_cast<ptrdiff_t>(w * L),
                              clip.samples.begin() + static_cast<ptrdiff_t>((w + 1) * L));
        const auto norm = dsp::normalize_to_level(window);
        Tensor<float> x({1, 1, L});
        std::copy(norm.clip.samples.begin(), norm.clip.samples.end(), x.data());
        const auto pred = net.forward(x, Phase::Eval, g.exec());
        const double native = net.mapper.unmap(static_cast<double>(pred[0]));
        const double clamped = std::min(std::max(native, range.lo), range.hi);
        scores.push_back(clamped);
        std::printf("%s,%zu,%.4f\n", path.c_str(), w, clamped);
      }
      const double mean = pairwise_sum(scores.data(), scores.size()) /
                          static_cast<double>(scores.size());
      std::printf("%s,mean,%.4f\n", path.c_str(), mean);
    } catch (const DataError& e) {
      ++failures;
      std::printf("%s,error,\n", path.c_str());
      std::cerr << path << ": " << e.what() << "\n";
    }
  }
  return failures == wav_paths.size() ? kExitData : kExitOk;
}

void print_architecture(const model::NetworkConfig& cfg) {
  const auto trace = cfg.trace();
  std::printf("%-4s %-28s %10s %8s %8s %8s\n", "S", "layers", "fs_hat(Hz)", "l_in",
              "s_l(ms)", "l_out");
  for (size_t s = 0; s < cfg.sections.size(); ++s) {
    const auto& sec = cfg.sections[s];
    std::string layers;
    for (const auto& c : sec.convs) {
      layers += "C-" + std::to_string(c.filters) + "-" + std::to_string(c.length) + ",";
    }
    layers += "B,P-" + std::to_string(sec.convs.back().filters) + ",";
    layers += (sec.pool == model::PoolKind::Average ? "A-" : "M-") +
              std::to_string(sec.pool_k);
    std::printf("S%-3zu %-28s %10.4g %8zu %8.4g %8zu\n", s + 1, layers.c_str(),
                trace[s].rate_in_hz, trace[s].l_in, trace[s].spacing_ms, trace[s].l_out);
  }
  std::printf("\n%-4s %10s %10s\n", "L", "d_i", "d_o");
  size_t d_in = cfg.flatten_size();
  for (size_t i = 0; i < cfg.dense_out.size(); ++i) {
    std::printf("L%-3zu %10zu %10zu\n", i + 1, d_in, cfg.dense_out[i]);
    d_in = cfg.dense_out[i];
  }

  const auto pc = model::count_params(cfg);
  std::printf("\n%-16s %12s\n", "group", "params");
  for (const auto& [name, count] : pc.groups) {
    std::printf("%-16s %12zu\n", name.c_str(), count);
  }
  std::printf("%-16s %12zu\n", "conv extractor", pc.conv_total);
  std::printf("%-16s %12zu\n", "dense head", pc.dense_total);
  std::printf("%-16s %12zu\n", "total", pc.total);
}

int cmd_inspect(const GlobalOptions&, bool arch, const std::string& model_path) {
  if (arch) {
    print_architecture(model::NetworkConfig::canonical());
    return kExitOk;
  }
  if (model_path.empty()) throw DataError("inspect: give a model file or --arch");
  model::Nawenet<float> net = model::load_model(model_path);
  std::printf("model: %s\nmetric: %s\nmapper: %s\nseed: %llu\n", model_path.c_str(),
              to_string(net.metric).c_str(),
              net.mapper.kind == TargetMapper::Kind::Affine ? "affine" : "zscore",
              static_cast<unsigned long long>(net.seed()));
  print_architecture(net.config());
  return kExitOk;
}

int cmd_gradcheck(const GlobalOptions& g, bool tiny, double tolerance, bool inject_fault) {
  const auto layer_report = gradcheck::check_layers(g.seed);
  const model::NetworkConfig cfg = tiny ? model::tiny_variant_config(1.0 / 16.0, 0.12)
                                        : model::tiny_variant_config(1.0 / 64.0, 384.0 / 24000.0);
  const auto net_report = gradcheck::check_network(cfg, g.seed, inject_fault);

  bool ok = true;
  auto print_report = [&](const char* title, const gradcheck::Report& report) {
    std::printf("%s\n", title);
    for (const auto& grp : report.groups) {
      const bool grp_ok = grp.max_rel_err < tolerance;
      ok = ok && grp_ok;
      std::printf("  %-18s max_rel_err %.3e (%zu coords) %s\n", grp.name.c_str(),
                  grp.max_rel_err, grp.coords_checked, grp_ok ? "ok" : "FAIL");
    }
  };
  print_report("layer gradients:", layer_report);
  print_report("end-to-end network gradients:", net_report);
  std::printf("max relative error: %.3e (tolerance %.1e)\n",
              std::max(layer_report.max_rel_err(), net_report.max_rel_err()), tolerance);
  return ok ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NAWEnet speech quality/intelligibility estimator pipeline"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "global rng seed (default 0)");
  app.add_option("--precision", g.precision, "f32|f64 (training precision)")
      ->check(CLI::IsMember({"f32", "f64"}));
  app.add_flag("--parallel", g.parallel,
               "OpenMP kernels (default: deterministic serial lane)");
  app.add_option("--threads", g.threads, "OpenMP thread count (with --parallel)");
  app.add_flag("-q,--quiet", g.quiet, "suppress summaries");
  app.add_flag("-v,--verbose", g.verbose, "per-epoch progress on stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic WAV corpus + targets.csv");
  std::string synth_dir;
  size_t synth_count = 16;
  double synth_seconds = 4.0;
  synth->add_option("--out-dir", synth_dir, "output directory")->required();
  synth->add_option("--count", synth_count, "number of clips");
  synth->add_option("--seconds", synth_seconds, "clip length in seconds");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "extract segments from WAV files");
  std::string prep_wav_dir, prep_store, prep_manifest, prep_targets, prep_dataset;
  double prep_min_activity = 0.75;
  int prep_passes = 1;
  prepare->add_option("--wav-dir", prep_wav_dir, "directory of 8 kHz mono PCM16 WAVs")->required();
  prepare->add_option("--store", prep_store, "output WESEG1 store")->required();
  prepare->add_option("--manifest", prep_manifest, "output manifest CSV")->required();
  prepare->add_option("--min-activity", prep_min_activity, "minimum activity factor");
  prepare->add_option("--passes", prep_passes, "augmentation passes over each file");
  prepare->add_option("--target-csv", prep_targets, "targets keyed by source file name");
  prepare->add_option("--dataset", prep_dataset, "source dataset name");

  // split
  auto* split_cmd = app.add_subcommand("split", "assign train/test/validation labels");
  std::string split_manifest, split_out, split_fractions = "0.5,0.4,0.1";
  bool split_ipa = false;
  std::string ipa_store, ipa_manifest;
  split_cmd->add_option("--manifest", split_manifest, "manifest CSV")->required();
  split_cmd->add_option("--out", split_out, "output split CSV")->required();
  split_cmd->add_option("--fractions", split_fractions, "train,test,validation");
  split_cmd->add_flag("--ipa", split_ipa, "emit inverse-phase-augmented manifest and store");
  split_cmd->add_option("--ipa-store", ipa_store, "store for the inverted twins");
  split_cmd->add_option("--ipa-manifest", ipa_manifest, "augmented manifest CSV");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_manifest, train_split, train_metric = "pesq", train_out, train_log;
  bool train_tiny = false, train_val_on_train = false, train_l2_weights_only = false;
  double train_width = 1.0, train_length = 1.0;
  train::TrainConfig tcfg;
  train_cmd->add_option("--manifest", train_manifest, "manifest CSV")->required();
  train_cmd->add_option("--split", train_split, "split CSV")->required();
  train_cmd->add_option("--metric", train_metric, "pesq|polqa|stoi")
      ->check(CLI::IsMember({"pesq", "polqa", "stoi"}));
  train_cmd->add_option("--out", train_out, "output WENET1 model file")->required();
  train_cmd->add_option("--log", train_log, "epoch log CSV");
  train_cmd->add_flag("--tiny", train_tiny, "desk-scale variant (1/16 widths, 2880 input)");
  train_cmd->add_option("--width-scale", train_width, "custom width scale");
  train_cmd->add_option("--length-scale", train_length, "custom input length scale");
  train_cmd->add_option("--epochs", tcfg.epochs, "epochs (default 30)");
  train_cmd->add_option("--lr", tcfg.lr, "learning rate (default 1e-4)");
  train_cmd->add_option("--l2", tcfg.l2, "L2 coefficient (default 1e-5)");
  train_cmd->add_option("--batch-size", tcfg.batch_size, "batch size (default 55)");
  train_cmd->add_option("--patience", tcfg.plateau_patience, "plateau patience (default 5)");
  train_cmd->add_option("--plateau-threshold", tcfg.plateau_threshold,
                        "improvement threshold (default 1e-4)");
  train_cmd->add_option("--decay-factor", tcfg.lr_decay_factor, "lr decay factor (default 0.1)");
  train_cmd->add_flag("--val-on-train", train_val_on_train,
                      "validate on the training set (capacity tests)");
  train_cmd->add_flag("--l2-weights-only", train_l2_weights_only,
                      "exclude biases, batch-norm and PReLU parameters from L2");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a model on a split");
  std::string eval_model, eval_manifest, eval_split, eval_set = "test", eval_out = "eval-out";
  size_t eval_batch = 55;
  eval_cmd->add_option("--model", eval_model, "WENET1 model file")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "manifest CSV")->required();
  eval_cmd->add_option("--split", eval_split, "split CSV")->required();
  eval_cmd->add_option("--set", eval_set, "train|test|validation (default test)")
      ->check(CLI::IsMember({"train", "test", "validation"}));
  eval_cmd->add_option("--out-dir", eval_out, "report directory");
  eval_cmd->add_option("--batch-size", eval_batch, "evaluation batch size");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "score WAV files");
  std::string predict_model;
  std::vector<std::string> predict_wavs;
  predict_cmd->add_option("--model", predict_model, "WENET1 model file")->required();
  predict_cmd->add_option("wavs", predict_wavs, "WAV files (>= 3 s each)")->required();

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "print architecture and parameter counts");
  bool inspect_arch = false;
  std::string inspect_model;
  inspect_cmd->add_flag("--arch", inspect_arch, "canonical architecture, no model file");
  inspect_cmd->add_option("model", inspect_model, "WENET1 model file");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check (f64)");
  bool grad_tiny = false, grad_fault = false;
  double grad_tol = 1e-4;
  grad_cmd->add_flag("--tiny", grad_tiny, "check the 1/16 tiny variant end to end");
  grad_cmd->add_option("--tolerance", grad_tol, "max relative error (default 1e-4)");
  grad_cmd->add_flag("--inject-fault", grad_fault, "flip one gradient sign (detector test)");

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
  if (g.deterministic()) omp_set_num_threads(1);
#endif

  try {
    if (*synth) return cmd_synth(g, synth_dir, synth_count, synth_seconds);
    if (*prepare) {
      return cmd_prepare(g, prep_wav_dir, prep_store, prep_manifest, prep_min_activity,
                         prep_passes, prep_targets, prep_dataset);
    }
    if (*split_cmd) {
      return cmd_split(g, split_manifest, split_out, split_fractions, split_ipa, ipa_store,
                       ipa_manifest);
    }
    if (*train_cmd) {
      tcfg.val_on_train = train_val_on_train;
      tcfg.l2_on_all = !train_l2_weights_only;
      return cmd_train(g, train_manifest, train_split, train_metric, train_out, train_log,
                       train_tiny, train_width, train_length, tcfg);
    }
    if (*eval_cmd) {
      return cmd_evaluate(g, eval_model, eval_manifest, eval_split, eval_set, eval_out,
                          eval_batch);
    }
    if (*predict_cmd) return cmd_predict(g, predict_model, predict_wavs);
    if (*inspect_cmd) return cmd_inspect(g, inspect_arch, inspect_model);
    if (*grad_cmd) return cmd_gradcheck(g, grad_tiny, grad_tol, grad_fault);
  } catch (const NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
