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

#ifndef MERC_TRAINING_H_
#define MERC_TRAINING_H_

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "merc/optim.h"
#include "merc/tensor.h"

namespace merc {

enum class SelectionMetric { kMacroF1, kWeightedF1 };

struct EvalMetrics {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;

  double get(SelectionMetric m) const {
    return m == SelectionMetric::kMacroF1 ? macro_f1 : weighted_f1;
  }
};

// Row-wise argmax; ties go to the lower class index.
template <typename T>
std::vector<int> predict_classes(const Tensor<T>& logits);

// Accuracy, weighted and macro F1 of `preds` against `golds`.
EvalMetrics score_predictions(std::span<const int> golds, std::span<const int> preds,
                              std::size_t classes);

// Epochs are numbered from 1.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  EvalMetrics val;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_metric = -std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  std::string stop_reason;
};

// Patience counter on a maximized metric. should_stop() turns true once
// `patience` consecutive epochs fail to improve on the best value.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  // Returns true when `metric` is a new best.
  bool update(int epoch, double metric);

  bool should_stop() const { return bad_epochs_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }
  int bad_epochs() const { return bad_epochs_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_metric_ = -std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

struct PlateauConfig {
  double factor = 0.1;
  int patience = 5;
};

struct LoopConfig {
  int max_epochs = 100;
  int early_stop_patience = 10;
  SelectionMetric selection = SelectionMetric::kWeightedF1;
  double initial_lr = 1e-3;
  std::optional<PlateauConfig> plateau;
};

struct LoopHooks {
  // Runs one epoch at learning rate `lr`; returns the mean training loss.
  std::function<double(int epoch, double lr)> train_epoch;
  std::function<EvalMetrics()> evaluate;
  // Called after an epoch that set a new best validation metric.
  std::function<void(int epoch)> on_best;
};

// Epoch driver shared by adapter and fusion training: evaluate after every
// epoch, checkpoint on improvement, step the optional plateau scheduler on the
// selection metric, stop on patience or max_epochs.
TrainHistory run_training_loop(const LoopConfig& config, const LoopHooks& hooks);

// CSV columns: epoch,train_loss,val_accuracy,val_<metric>,lr
void write_history_csv(const TrainHistory& history, SelectionMetric metric, std::ostream& os);

}  // namespace merc

#endif  // MERC_TRAINING_H_
