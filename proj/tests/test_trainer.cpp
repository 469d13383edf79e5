#include <doctest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"
#include "ucdrd/trainer.hpp"

using namespace ucdrd;
using testutil::random_matrix;

namespace {

RunConfig tiny_cfg() {
  RunConfig cfg;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.ffn_dim = 12;
  cfg.num_classes = 2;
  cfg.batch_source = 4;
  cfg.batch_target = 4;
  cfg.epochs = 1;
  cfg.seed = 5;
  return cfg;
}

// Two well-separated classes: class-c paths cluster around +/- 1 per axis.
PreparedSet separable_set(std::mt19937_64& rng, int n, int dim,
                          bool with_labels = true) {
  PreparedSet out;
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < n; ++i) {
    int cls = i % 2;
    Matrix paths(3, dim);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < dim; ++c)
        paths(r, c) = (cls ? 1.0 : -1.0) + noise(rng);
    out.pathsets.push_back(PathSet{"s" + std::to_string(i), Tensor(paths)});
    out.labels.push_back(with_labels ? cls : -1);
    out.ids.push_back("s" + std::to_string(i));
  }
  return out;
}

BatchView all_of(const PreparedSet& set) {
  BatchView view{&set, {}};
  for (size_t i = 0; i < set.size(); ++i) view.indices.push_back(i);
  return view;
}

}  // namespace

TEST_CASE("ce-only weights never touch pseudo labeling or cross attention") {
  RunConfig cfg = tiny_cfg();
  cfg.weights = LossWeights{1.0, 0.0, 0.0};
  std::mt19937_64 rng(81);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 8, cfg.dim, false);
  TrainState state = init_train_state(cfg);
  for (int i = 0; i < 3; ++i) train_step(state, all_of(src), all_of(tgt), cfg);
  CHECK(state.counters.pseudo_label_calls == 0);
  CHECK(state.counters.cam_calls == 0);
  CHECK(state.step == 3);
}

TEST_CASE("full objective exercises every subsystem and reports components") {
  RunConfig cfg = tiny_cfg();
  std::mt19937_64 rng(82);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 8, cfg.dim);  // labeled: pseudo_accuracy known
  TrainState state = init_train_state(cfg);
  StepReport r = train_step(state, all_of(src), all_of(tgt), cfg);
  CHECK(state.counters.pseudo_label_calls == 1);
  CHECK(state.counters.cam_calls == 1);
  CHECK(r.pseudo_accuracy >= 0.0);
  CHECK(r.total == doctest::Approx(0.8 * r.ce + 0.1 * r.cl + 0.1 * r.ca));
  CHECK(std::isfinite(r.total));
}

TEST_CASE("training reduces the loss on a separable toy") {
  RunConfig cfg = tiny_cfg();
  cfg.weights = LossWeights{1.0, 0.0, 0.0};
  cfg.lr = 1e-2;
  std::mt19937_64 rng(83);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 8, cfg.dim, false);
  TrainState state = init_train_state(cfg);
  double first = train_step(state, all_of(src), all_of(tgt), cfg).total;
  double last = first;
  for (int i = 0; i < 30; ++i)
    last = train_step(state, all_of(src), all_of(tgt), cfg).total;
  CHECK(last < first);
  CHECK(last < 0.3);
}

TEST_CASE("sgd also descends") {
  RunConfig cfg = tiny_cfg();
  cfg.weights = LossWeights{1.0, 0.0, 0.0};
  cfg.optimizer = "sgd";
  cfg.lr = 5e-2;
  std::mt19937_64 rng(84);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 8, cfg.dim, false);
  TrainState state = init_train_state(cfg);
  double first = train_step(state, all_of(src), all_of(tgt), cfg).total;
  double last = first;
  for (int i = 0; i < 30; ++i)
    last = train_step(state, all_of(src), all_of(tgt), cfg).total;
  CHECK(last < first);
}

TEST_CASE("identical seeds give bitwise identical parameters") {
  RunConfig cfg = tiny_cfg();
  cfg.epochs = 2;
  auto run = [&] {
    std::mt19937_64 rng(85);
    auto src = separable_set(rng, 8, cfg.dim);
    auto tgt = separable_set(rng, 8, cfg.dim);
    TrainState state = init_train_state(cfg);
    train(state, src, tgt, cfg);
    return state;
  };
  TrainState a = run();
  TrainState b = run();
  auto pa = a.model.named_tensors();
  auto pb = b.model.named_tensors();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    INFO(pa[i].first);
    CHECK(pa[i].second.value() == pb[i].second.value());
  }
  CHECK(a.counters.pseudo_label_calls == b.counters.pseudo_label_calls);
}

TEST_CASE("checkpoint resume reproduces an uninterrupted run") {
  RunConfig cfg = tiny_cfg();
  std::mt19937_64 rng(86);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 8, cfg.dim);

  cfg.epochs = 4;
  TrainState straight = init_train_state(cfg);
  train(straight, src, tgt, cfg);

  cfg.epochs = 2;
  TrainState half = init_train_state(cfg);
  train(half, src, tgt, cfg);
  Checkpoint ckpt = make_checkpoint(half, cfg);

  cfg.epochs = 4;
  TrainState resumed = restore_train_state(ckpt, cfg);
  CHECK(resumed.epoch == 2);
  train(resumed, src, tgt, cfg);

  auto pa = straight.model.named_tensors();
  auto pb = resumed.model.named_tensors();
  for (size_t i = 0; i < pa.size(); ++i) {
    INFO(pa[i].first);
    CHECK(pa[i].second.value() == pb[i].second.value());
  }
  CHECK(straight.step == resumed.step);
}

TEST_CASE("one epoch over two batches runs exactly two steps") {
  RunConfig cfg = tiny_cfg();
  cfg.batch_source = 4;
  std::mt19937_64 rng(87);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 6, cfg.dim, false);  // shorter set cycles
  TrainState state = init_train_state(cfg);
  std::ostringstream metrics;
  TrainOptions opts;
  opts.metrics = &metrics;
  train(state, src, tgt, cfg, opts);
  CHECK(state.step == 2);
  CHECK(metrics.str().find("step=1") != std::string::npos);
  CHECK(metrics.str().find("step=2") != std::string::npos);
}

TEST_CASE("evaluate agrees with the confusion-matrix oracle") {
  RunConfig cfg = tiny_cfg();
  std::mt19937_64 rng(88);
  auto test_set = separable_set(rng, 10, cfg.dim);
  TrainState state = init_train_state(cfg);
  EvalReport report = evaluate(test_set, state.model);
  REQUIRE(report.predictions.size() == 10);
  auto want =
      oracle::metrics(test_set.labels, report.predictions, cfg.num_classes);
  CHECK(report.accuracy == doctest::Approx(want.accuracy));
  REQUIRE(report.f1.size() == 2);
  CHECK(report.f1[0] == doctest::Approx(want.f1[0]));
  CHECK(report.f1[1] == doctest::Approx(want.f1[1]));
}

TEST_CASE("evaluate handles a degenerate always-one-class predictor") {
  RunConfig cfg = tiny_cfg();
  std::mt19937_64 rng(89);
  auto test_set = separable_set(rng, 10, cfg.dim);  // labels alternate 0/1
  TrainState state = init_train_state(cfg);
  state.model.classifier.w.value().setZero();
  state.model.classifier.b.value() << 100.0, 0.0;  // always predicts class 0
  EvalReport report = evaluate(test_set, state.model);
  CHECK(report.accuracy == doctest::Approx(0.5));
  CHECK(report.f1[0] == doctest::Approx(2.0 / 3.0));
  CHECK(report.f1[1] == doctest::Approx(0.0));
}

TEST_CASE("unlabeled targets yield no pseudo accuracy") {
  RunConfig cfg = tiny_cfg();
  std::mt19937_64 rng(90);
  auto src = separable_set(rng, 8, cfg.dim);
  auto tgt = separable_set(rng, 8, cfg.dim, false);
  TrainState state = init_train_state(cfg);
  StepReport r = train_step(state, all_of(src), all_of(tgt), cfg);
  CHECK(r.pseudo_accuracy == doctest::Approx(-1.0));
}

TEST_CASE("empty batches and datasets are rejected") {
  RunConfig cfg = tiny_cfg();
  std::mt19937_64 rng(91);
  auto src = separable_set(rng, 4, cfg.dim);
  TrainState state = init_train_state(cfg);
  BatchView empty{&src, {}};
  CHECK_THROWS_AS(train_step(state, empty, all_of(src), cfg), ContractError);
  PreparedSet none;
  CHECK_THROWS_AS(train(state, none, src, cfg), ContractError);
}
