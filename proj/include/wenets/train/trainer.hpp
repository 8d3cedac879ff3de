#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/corpus/dataset.hpp"
#include "wenets/model/network.hpp"
#include "wenets/nn/adam.hpp"
#include "wenets/train/metrics.hpp"
#include "wenets/train/scheduler.hpp"

namespace wenets::train {

struct TrainConfig {
  double lr = 1e-4;
  double l2 = 1e-5;
  int epochs = 30;
  size_t batch_size = 55;
  double plateau_threshold = 1e-4;
  int plateau_patience = 5;
  double lr_decay_factor = 0.1;
  uint64_t seed = 0;
  bool l2_on_all = true;  // false: decay conv/dense weights only
  bool val_on_train = false;  // capacity tests: validate on the training set
  ExecMode exec = ExecMode::Serial;
  bool log_wall_time = true;  // false keeps epoch logs byte-reproducible
  std::ostream* progress = nullptr;
};

struct EpochLog {
  int epoch = 0;          // 1-based
  double train_rmse = 0;  // mapped space, over the epoch's training batches
  double val_rmse = 0;    // mapped space
  double val_rho = 0;     // NaN when prediction variance degenerates
  double lr = 0;          // rate in effect during this epoch
  double seconds = 0;
};

// Eval-mode predictions (mapped space) for a set of entries.
template <typename T>
std::vector<double> predict_mapped(model::Nawenet<T>& model,
                                   const corpus::SegmentSource& source,
                                   const std::vector<size_t>& ids, size_t batch_size,
                                   ExecMode exec) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (size_t at = 0; at < ids.size(); at += batch_size) {
    const size_t n = std::min(batch_size, ids.size() - at);
    const std::vector<size_t> chunk(ids.begin() + static_cast<ptrdiff_t>(at),
                                    ids.begin() + static_cast<ptrdiff_t>(at + n));
    const auto batch = corpus::load_batch<T>(source, model.metric, model.mapper, chunk,
                                             model.config().input_length);
    const auto pred = model.forward(batch.inputs, Phase::Eval, exec);
    for (T p : pred) out.push_back(static_cast<double>(p));
  }
  return out;
}

template <typename T>
std::vector<double> mapped_targets(const corpus::SegmentSource& source,
                                   TargetMetric metric, const TargetMapper& mapper,
                                   const std::vector<size_t>& ids) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (size_t id : ids) {
    const auto y = source.manifest().entries[id].target(metric);
    if (!y.has_value()) {
      throw DataError("entry " + std::to_string(id) + " has no " + to_string(metric) +
                      " target");
    }
    out.push_back(mapper.map(*y));
  }
  return out;
}

// The full loop: per batch, train-mode forward, MSE in mapped space,
// backward, one Adam step; per epoch, an eval-mode validation pass and a
// plateau-scheduler step on the validation RMSE. Batches of size 1 are
// dropped (batch-norm needs >= 2). Deterministic given config.seed.
template <typename T>
std::vector<EpochLog> train(model::Nawenet<T>& model, const corpus::SegmentSource& source,
                            const std::vector<size_t>& train_ids,
                            const std::vector<size_t>& val_ids, const TrainConfig& cfg) {
  if (train_ids.empty()) throw DataError("train: empty training split");
  const std::vector<size_t>& effective_val = cfg.val_on_train ? train_ids : val_ids;
  if (effective_val.empty()) throw DataError("train: empty validation split");

  auto params = model.parameters();
  if (!cfg.l2_on_all) {
    for (auto& p : params) {
      const bool is_weight =
          p.name.ends_with(".w");  // conv and dense kernels only
      p.apply_l2 = is_weight;
    }
  }
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.l2 = cfg.l2;
  nn::Adam<T> opt(params, adam_cfg);
  PlateauScheduler sched(cfg.lr, cfg.plateau_threshold, cfg.plateau_patience,
                         cfg.lr_decay_factor);

  std::vector<EpochLog> logs;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches =
        corpus::epoch_batches(train_ids, cfg.batch_size, cfg.seed, static_cast<size_t>(epoch));

    double sq_err_sum = 0.0;
    size_t n_seen = 0;
    size_t batch_index = 0;
    for (const auto& ids : batches) {
      ++batch_index;
      if (ids.size() < 2) continue;  // batch norm needs at least 2
      const auto batch = corpus::load_batch<T>(source, model.metric, model.mapper, ids,
                                               model.config().input_length);
      Rng dropout_rng(mix_seed(cfg.seed, 0xD80D,
                               static_cast<uint64_t>(epoch) * 1000003ull + batch_index));
      const auto pred =
          model.forward(batch.inputs, Phase::Train, cfg.exec, &dropout_rng);

      const size_t n = pred.size();
      double batch_sq = 0.0;
      std::vector<T> dpred(n);
      for (size_t i = 0; i < n; ++i) {
        const double e = static_cast<double>(pred[i]) -
                         static_cast<double>(batch.targets_mapped[i]);
        batch_sq += e * e;
        dpred[i] = static_cast<T>(2.0 * e / static_cast<double>(n));
      }
      if (!std::isfinite(batch_sq)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      }
      sq_err_sum += batch_sq;
      n_seen += n;

      model.backward(dpred, cfg.exec);
      opt.step(params, cfg.exec);
    }
    if (n_seen == 0) {
      throw DataError("train: no usable batches (all smaller than 2)");
    }

    // validation pass, eval mode: no dropout, running statistics only
    const auto val_pred =
        predict_mapped(model, source, effective_val, cfg.batch_size, cfg.exec);
    const auto val_tgt =
        mapped_targets<T>(source, model.metric, model.mapper, effective_val);
    const double val_rmse = rmse(val_pred, val_tgt);
    double val_rho = std::numeric_limits<double>::quiet_NaN();
    if (effective_val.size() >= 2) {
      try {
        val_rho = pearson(val_pred, val_tgt);
      } catch (const DataError&) {
        // constant predictions: leave NaN
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_rmse = std::sqrt(sq_err_sum / static_cast<double>(n_seen));
    log.val_rmse = val_rmse;
    log.val_rho = val_rho;
    log.lr = opt.lr();  // rate used for this epoch's updates
    if (cfg.log_wall_time) {
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    logs.push_back(log);
    if (cfg.progress) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "epoch %3d  train_rmse %.5f  val_rmse %.5f  val_rho %.5f  lr %.2e",
                    epoch, log.train_rmse, log.val_rmse, log.val_rho, log.lr);
      *cfg.progress << buf << std::endl;
    }

    sched.step(val_rmse);
    opt.set_lr(sched.lr());
  }
  return logs;
}

struct DatasetMetrics {
  std::string dataset;
  size_t count = 0;
  std::optional<double> rho;  // absent when prediction/target variance is zero
  double rmse_native = 0;
};

struct EvalReport {
  std::vector<DatasetMetrics> per_dataset;
  DatasetMetrics combined;
  // native-unit (prediction, target) pairs in evaluation order
  std::vector<std::pair<double, double>> pairs;
  std::vector<std::string> pair_datasets;
};

// Eval-mode pass over a labeled set; predictions unmapped to native units
// via the model's stored mapper. Combined metrics are recomputed from the
// pooled pairs, never averaged across datasets.
template <typename T>
EvalReport evaluate(model::Nawenet<T>& model, const corpus::SegmentSource& source,
                    const std::vector<size_t>& ids, size_t batch_size, ExecMode exec) {
  if (ids.empty()) throw DataError("evaluate: empty id set");
  const auto pred_mapped = predict_mapped(model, source, ids, batch_size, exec);

  EvalReport report;
  report.pairs.reserve(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto& e = source.manifest().entries[ids[i]];
    const auto y = e.target(model.metric);
    if (!y.has_value()) {
      throw DataError("evaluate: entry " + std::to_string(ids[i]) + " has no " +
                      to_string(model.metric) + " target");
    }
    report.pairs.emplace_back(model.mapper.unmap(pred_mapped[i]), *y);
    report.pair_datasets.push_back(e.source_dataset);
  }

  auto metrics_for = [&](const std::vector<size_t>& rows, const std::string& name) {
    DatasetMetrics dm;
    dm.dataset = name;
    dm.count = rows.size();
    std::vector<double> p(rows.size()), t(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      p[i] = report.pairs[rows[i]].first;
      t[i] = report.pairs[rows[i]].second;
    }
    dm.rmse_native = rmse(p, t);
    if (rows.size() >= 2) {
      try {
        dm.rho = pearson(p, t);
      } catch (const DataError&) {
        dm.rho = std::nullopt;
      }
    }
    return dm;
  };

  std::map<std::string, std::vector<size_t>> by_dataset;
  for (size_t i = 0; i < ids.size(); ++i) {
    by_dataset[report.pair_datasets[i]].push_back(i);
  }
  for (const auto& [name, rows] : by_dataset) {
    report.per_dataset.push_back(metrics_for(rows, name));
  }
  std::vector<size_t> all(ids.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  report.combined = metrics_for(all, "combined");
  return report;
}

// ---- CSV emitters ----

inline void write_epoch_log_csv(const std::vector<EpochLog>& logs, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write epoch log: " + path);
  os << "epoch,train_rmse,val_rmse,val_rho,lr,seconds\n";
  char buf[200];
  for (const auto& l : logs) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.3f", l.epoch, l.train_rmse,
                  l.val_rmse, l.val_rho, l.lr, l.seconds);
    os << buf << '\n';
  }
  if (!os) throw DataError("epoch log write failed: " + path);
}

inline void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write eval report: " + path);
  os << "dataset,n,rho,rmse\n";
  char buf[160];
  auto row = [&](const DatasetMetrics& dm) {
    if (dm.rho.has_value()) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.9g,%.9g", dm.dataset.c_str(), dm.count,
                    *dm.rho, dm.rmse_native);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%zu,,%.9g", dm.dataset.c_str(), dm.count,
                    dm.rmse_native);
    }
    os << buf << '\n';
  };
  for (const auto& dm : report.per_dataset) row(dm);
  row(report.combined);
  if (!os) throw DataError("eval report write failed: " + path);
}

// Fig. 2-style 2-D histogram over the metric's native range, 50x50 bins,
// predictions clamped into range at report time; only non-empty bins are
// written.
inline void write_histogram_csv(const EvalReport& report, MetricRange range,
                                const std::string& path, size_t bins = 50) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write histogram: " + path);
  os << "pred_bin,target_bin,count\n";
  std::map<std::pair<size_t, size_t>, size_t> counts;
  auto bin_of = [&](double v) {
    const double clamped = std::min(std::max(v, range.lo), range.hi);
    const double rel = (clamped - range.lo) / (range.hi - range.lo);
    return std::min(bins - 1, static_cast<size_t>(rel * static_cast<double>(bins)));
  };
  for (const auto& [pred, target] : report.pairs) {
    counts[{bin_of(pred), bin_of(target)}]++;
  }
  for (const auto& [bin, count] : counts) {
    os << bin.first << ',' << bin.second << ',' << count << '\n';
  }
  if (!os) throw DataError("histogram write failed: " + path);
}

}  // namespace wenets::train
