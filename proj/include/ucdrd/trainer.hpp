#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ucdrd/config.hpp"
#include "ucdrd/contrastive.hpp"
#include "ucdrd/cross_attention.hpp"
#include "ucdrd/data_model.hpp"
#include "ucdrd/model.hpp"
#include "ucdrd/pseudo_label.hpp"

namespace ucdrd {

/// Dataset ready for training: precomputed path sets plus labels (held-out
/// for the target domain, -1 when absent).
struct PreparedSet {
  std::vector<PathSet> pathsets;
  std::vector<int> labels;
  std::vector<std::string> ids;
  size_t size() const { return pathsets.size(); }
};

PreparedSet prepare(const std::vector<PropagationTree>& trees,
                    const EmbeddingTable& table, int max_paths);

struct Optimizer {
  std::string kind = "adam";
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8,
         weight_decay = 0.0;
  long t = 0;
  std::vector<Matrix> m, v;  // adam moments, aligned with named_tensors order

  void init(const Model& model);
  void step(Model& model);
};

struct StepReport {
  double ce = 0, icl = 0, ccl_ts = 0, ccl_st = 0, proto_ts = 0, cl = 0,
         ca = 0, total = 0;
  double pseudo_accuracy = -1;  // -1 when target labels are unknown
  int pairs = 0;
};

/// Instrumentation: how often each optional subsystem actually ran.
struct StepCounters {
  long pseudo_label_calls = 0;
  long cam_calls = 0;
};

struct EvalReport {
  double accuracy = 0;
  std::vector<double> f1;  // per class
  std::vector<int> predictions;
};

struct TrainState {
  Model model;
  Optimizer opt;
  long step = 0;
  int epoch = 0;
  std::mt19937_64 rng;
  StepCounters counters;
};

/// Batch views index into a PreparedSet.
struct BatchView {
  const PreparedSet* set;
  std::vector<size_t> indices;
};

/// One joint step: encode both batches, pseudo-label the target, assemble
/// the composite objective, backward, optimizer update. Throws NumericError
/// with a component dump if the loss goes non-finite.
StepReport train_step(TrainState& state, const BatchView& source,
                      const BatchView& target, const RunConfig& cfg);

struct TrainOptions {
  std::ostream* metrics = nullptr;       // one line per step when set
  std::string checkpoint_dir;            // periodic checkpoints when set
  std::function<void(int)> on_epoch_end;
};

TrainState init_train_state(const RunConfig& cfg);

void train(TrainState& state, const PreparedSet& source,
           const PreparedSet& target, const RunConfig& cfg,
           const TrainOptions& opts = {});

/// Accuracy plus per-class F1 from the standard confusion matrix; a class
/// with zero predicted and zero actual positives gets F1 = 0.
EvalReport evaluate(const PreparedSet& test_set, const Model& model);

Checkpoint make_checkpoint(const TrainState& state, const RunConfig& cfg);
TrainState restore_train_state(const Checkpoint& ckpt, const RunConfig& cfg);

}  // namespace ucdrd
