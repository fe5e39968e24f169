// Copyright 2026 The merc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "merc/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "merc/metrics.h"

namespace merc {

template <typename T>
std::vector<int> predict_classes(const Tensor<T>& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

template std::vector<int> predict_classes(const Tensor<float>&);
template std::vector<int> predict_classes(const Tensor<double>&);

EvalMetrics score_predictions(std::span<const int> golds, std::span<const int> preds,
                              std::size_t classes) {
  const ConfusionMatrix cm = confusion(golds, preds, classes);
  return EvalMetrics{accuracy(cm), weighted_f1(cm), macro_f1(cm)};
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw Error(ErrorKind::kConfig, "early stopping patience must be >= 1");
}

bool EarlyStopping::update(int epoch, double metric) {
  if (!std::isfinite(metric)) {
    throw Error(ErrorKind::kNumeric, "early stopping: non-finite metric");
  }
  if (best_epoch_ == 0 || metric > best_metric_) {
    best_metric_ = metric;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return true;
  }
  bad_epochs_ += 1;
  return false;
}

TrainHistory run_training_loop(const LoopConfig& config, const LoopHooks& hooks) {
  if (config.max_epochs < 1) throw Error(ErrorKind::kConfig, "max_epochs must be >= 1");
  EarlyStopping stopper(config.early_stop_patience);
  std::optional<PlateauScheduler> scheduler;
  if (config.plateau) {
    scheduler.emplace(config.initial_lr, config.plateau->factor, config.plateau->patience,
                      MetricMode::kMaximize);
  }

  TrainHistory history;
  double lr = config.initial_lr;
  history.stop_reason = "max_epochs";
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    record.train_loss = hooks.train_epoch(epoch, lr);
    if (!std::isfinite(record.train_loss)) {
      throw Error(ErrorKind::kNumeric,
                  "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    record.val = hooks.evaluate();
    history.epochs.push_back(record);
    history.epochs_run = epoch;

    const double metric = record.val.get(config.selection);
    if (stopper.update(epoch, metric) && hooks.on_best) hooks.on_best(epoch);
    if (scheduler) lr = scheduler->step(metric);
    if (stopper.should_stop()) {
      history.stop_reason = "early_stop";
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  history.best_metric = stopper.best_metric();
  return history;
}

void write_history_csv(const TrainHistory& history, SelectionMetric metric, std::ostream& os) {
  os << "epoch,train_loss,val_accuracy,"
     << (metric == SelectionMetric::kMacroF1 ? "val_macro_f1" : "val_weighted_f1") << ",lr\n";
  char line[256];
  for (const EpochRecord& r : history.epochs) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                  r.val.accuracy, r.val.get(metric), r.lr);
    os << line;
  }
}

}  // namespace merc
