// End-to-end acceptance checks. Each criterion prints exactly one
// "PASS criterion-N ..." or "FAIL criterion-N ..." line; the process exits
// nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "ucdrd/gradcheck.hpp"
#include "ucdrd/synthgen.hpp"
#include "ucdrd/trainer.hpp"

using namespace ucdrd;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion-" << criterion << ": "
            << detail << std::endl;
  if (!ok) ++g_failures;
}

oracle::Mat to_oracle(const Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

// ---- criterion 1: analytic gradients of every loss component -------------

void criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  cfg.dim = 12;
  cfg.heads = 2;
  cfg.ffn_dim = 16;
  cfg.seed = 11;
  GradCheckReport rep = run_gradcheck(cfg, 4, 4);
  double worst_full = 0, worst_isolated = 0;
  for (const auto& e : rep.entries) {
    if (e.loss == "total")
      worst_full = std::max(worst_full, e.max_rel_err);
    else
      worst_isolated = std::max(worst_isolated, e.max_rel_err);
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
  std::ostringstream detail;
  detail << "gradient check, worst composite rel err " << worst_full
         << " (tol 1e-3), worst isolated " << worst_isolated
         << " (tol 1e-4), " << secs << "s";
  report(1, rep.passed() && worst_full < 1e-3 && worst_isolated < 1e-4 &&
                secs < 120.0,
         detail.str());
}

// ---- criterion 2: loss values vs independent scalar oracles --------------

void criterion2() {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> bsize(2, 8), label(0, 1);
  double worst = 0;
  ContrastiveConfig ccfg;
  for (int trial = 0; trial < 100; ++trial) {
    int bs = bsize(rng), bt = bsize(rng);
    Matrix fs = random_matrix(rng, bs, 6), ft = random_matrix(rng, bt, 6);
    std::vector<int> ys(bs), yt(bt);
    for (auto& y : ys) y = label(rng);
    for (auto& y : yt) y = label(rng);
    ys[0] = 0;
    ys[1 % bs] = 1;
    FeatureBatch src{Tensor(fs), ys}, tgt{Tensor(ft), yt};

    auto check = [&](double got, double want) {
      worst = std::max(worst, std::abs(got - want));
    };
    check(supcon_in_domain(src, ccfg).item(),
          oracle::supcon(to_oracle(fs), ys, ccfg.tau));
    check(cross_domain_instance(tgt, src, ccfg).item(),
          oracle::cross_domain(to_oracle(ft), yt, to_oracle(fs), ys, ccfg.tau));
    check(prototype_loss(tgt, src, 2, ccfg).item(),
          oracle::prototype(to_oracle(ft), yt, to_oracle(fs), ys, 2, ccfg.tau));
    check(clm_loss(src, tgt, 2, ccfg).total.item(),
          oracle::clm(to_oracle(fs), ys, to_oracle(ft), yt, 2, ccfg.tau,
                      ccfg.alpha1, ccfg.alpha2, ccfg.beta1, ccfg.beta2));

    auto cls = init_classifier(6, 2, 23 + trial);
    oracle::Mat probs;
    for (int i = 0; i < bs; ++i)
      probs.push_back(to_oracle(predict(Tensor(Matrix(fs.row(i))), cls).value())[0]);
    check(cross_entropy_source(Tensor(fs), ys, cls).item(),
          oracle::cross_entropy(probs, ys));
  }
  std::ostringstream detail;
  detail << "loss oracles over 100 random batches, worst abs diff " << worst
         << " (tol 1e-9)";
  report(2, worst < 1e-9, detail.str());
}

// ---- criterion 3: k-means behavior ---------------------------------------

void criterion3() {
  std::mt19937_64 rng(33);
  bool monotone = true, exact = true, invariant = true;
  for (int trial = 0; trial < 1000 && monotone; ++trial) {
    Matrix feats = random_matrix(rng, 20, 4);
    Matrix centers = random_matrix(rng, 3, 4);
    PrototypeSet protos{centers, {1, 1, 1}};
    auto out = kmeans_assign(feats, protos, 50, 1e-9);
    for (size_t i = 1; i < out.objective_trace.size(); ++i)
      if (out.objective_trace[i] > out.objective_trace[i - 1] + 1e-12)
        monotone = false;
  }

  // targets placed exactly on the prototypes must keep their cluster
  for (int trial = 0; trial < 50 && exact; ++trial) {
    Matrix centers = random_matrix(rng, 2, 5);
    PrototypeSet protos{centers, {1, 1}};
    Matrix feats(4, 5);
    feats << centers.row(0), centers.row(1), centers.row(0), centers.row(1);
    auto out = kmeans_assign(feats, protos);
    std::vector<int> want = {0, 1, 0, 1};
    if (out.labels != want) exact = false;
  }

  double worst_dist = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix feats = random_matrix(rng, 12, 3);
    Matrix centers = random_matrix(rng, 2, 3);
    PrototypeSet protos{centers, {1, 1}};
    auto base = kmeans_assign(feats, protos);
    Eigen::Vector3d u = Eigen::Vector3d(1, 2, 3).normalized();
    Matrix rot = Matrix::Identity(3, 3) - 2.0 * u * u.transpose();
    PrototypeSet rotated{centers * rot, {1, 1}};
    auto got = kmeans_assign(feats * rot, rotated);
    if (got.labels != base.labels) invariant = false;
    for (size_t i = 0; i < got.distances.size(); ++i)
      worst_dist = std::max(worst_dist,
                            std::abs(got.distances[i] - base.distances[i]));
  }
  std::ostringstream detail;
  detail << "k-means: objective monotone over 1000 inits, "
         << "prototype-exact assignment, rotation invariance (worst distance "
            "drift "
         << worst_dist << ", tol 1e-9)";
  report(3, monotone && exact && invariant && worst_dist < 1e-9, detail.str());
}

// ---- criterion 4: attention vs loop oracle -------------------------------

void criterion4() {
  EncoderConfig ecfg{12, 2, 16, false};
  auto params = init_encoder(ecfg, 44);
  std::mt19937_64 rng(45);
  double worst_mha = 0, worst_rows = 0, worst_dup = 0;

  for (int trial = 0; trial < 20; ++trial) {
    Matrix x = random_matrix(rng, 5, 12);
    Matrix got = mha(Tensor(x), params).value();
    oracle::Mat concat(5, oracle::Vec(12));
    for (int h = 0; h < 2; ++h) {
      auto q = oracle::matmul(to_oracle(x), to_oracle(params.w_q[h].value()));
      auto k = oracle::matmul(to_oracle(x), to_oracle(params.w_k[h].value()));
      auto v = oracle::matmul(to_oracle(x), to_oracle(params.w_v[h].value()));
      auto head = oracle::attention(q, k, v, params.head_dim());
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 6; ++j) concat[i][6 * h + j] = head[i][j];
    }
    auto want = oracle::matmul(concat, to_oracle(params.w_o.value()));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 12; ++j)
        worst_mha = std::max(worst_mha, std::abs(got(i, j) - want[i][j]));

    // attention rows are distributions
    for (int h = 0; h < 2; ++h) {
      Tensor q = matmul(Tensor(x), params.w_q[h]);
      Tensor k = matmul(Tensor(x), params.w_k[h]);
      Matrix scores =
          softmax_rows(scale(matmul(q, transpose(k)),
                             1.0 / std::sqrt((double)params.head_dim())))
              .value();
      for (int i = 0; i < scores.rows(); ++i)
        worst_rows = std::max(worst_rows, std::abs(scores.row(i).sum() - 1.0));
    }

    PathSet ps{"p", Tensor(x)};
    Matrix cross = cross_attention(ps, ps, params).value();
    Matrix self = encode(ps, params).vector.value();
    worst_dup = std::max(worst_dup, (cross - self).cwiseAbs().maxCoeff());
  }
  std::ostringstream detail;
  detail << "attention: mha vs loop oracle " << worst_mha
         << " (tol 1e-10), row sums " << worst_rows
         << " (tol 1e-9), duplicated-pathset cross==self " << worst_dup
         << " (tol 1e-10)";
  report(4, worst_mha < 1e-10 && worst_rows < 1e-9 && worst_dup < 1e-10,
         detail.str());
}

// ---- criterion 5: directional synthetic transfer study -------------------

RunConfig study_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.dim = 32;
  cfg.heads = 4;
  cfg.ffn_dim = 64;
  cfg.max_paths = 16;
  cfg.epochs = 100;
  cfg.batch_source = 32;
  cfg.batch_target = 32;
  cfg.seed = seed;
  cfg.synth_samples = 400;
  cfg.synth_shift = 0.55;
  return cfg;
}

double run_study(const RunConfig& cfg, const LossWeights& weights) {
  RunConfig run = cfg;
  run.weights = weights;
  SynthOutput synth = generate(synth_config_from(run));
  EmbeddingTable table = random_embeddings(synth.vocabulary, run.seed, run.dim);
  PreparedSet src = prepare(synth.source, table, run.max_paths);
  PreparedSet tgt = prepare(synth.target, table, run.max_paths);
  TrainState state = init_train_state(run);
  train(state, src, tgt, run);
  return evaluate(tgt, state.model).accuracy;
}

void criterion5() {
  auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seeds[] = {101, 102, 103, 104, 105};
  double ce = 0, cl = 0, full = 0;
  for (std::uint64_t seed : seeds) {
    RunConfig cfg = study_config(seed);
    ce += run_study(cfg, LossWeights{1.0, 0.0, 0.0});
    cl += run_study(cfg, LossWeights{0.9, 0.1, 0.0});
    full += run_study(cfg, LossWeights{0.8, 0.1, 0.1});
  }
  ce /= 5;
  cl /= 5;
  full /= 5;
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
  std::ostringstream detail;
  detail << "transfer study over 5 seeds: ce-only " << ce << ", +contrastive "
         << cl << ", full " << full << " (need strict ordering, full >= 0.80, "
         << "gap >= 0.10), " << secs << "s (budget 1200)";
  report(5,
         ce < cl && cl < full && full >= 0.80 && full - ce >= 0.10 &&
             secs < 1200.0,
         detail.str());
}

// ---- criterion 6: cosine-based losses ignore feature scale ---------------

void criterion6() {
  std::mt19937_64 rng(66);
  ContrastiveConfig ccfg;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix fs = random_matrix(rng, 5, 6), ft = random_matrix(rng, 4, 6);
    std::vector<int> ys = {0, 1, 0, 1, 0}, yt = {1, 0, 1, 0};
    double base = clm_loss(FeatureBatch{Tensor(fs), ys},
                           FeatureBatch{Tensor(ft), yt}, 2, ccfg)
                      .total.item();
    for (double c : {10.0, 0.1}) {
      double scaled = clm_loss(FeatureBatch{Tensor(c * fs), ys},
                               FeatureBatch{Tensor(c * ft), yt}, 2, ccfg)
                          .total.item();
      worst = std::max(worst, std::abs(scaled - base) / std::abs(base));
    }
  }
  std::ostringstream detail;
  detail << "contrastive scale invariance x10/x0.1, worst relative drift "
         << worst << " (tol 1e-9)";
  report(6, worst < 1e-9, detail.str());
}

// ---- criterion 7: determinism and checkpoint resume ----------------------

void criterion7() {
  RunConfig cfg;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.ffn_dim = 24;
  cfg.max_paths = 8;
  cfg.batch_source = 8;
  cfg.batch_target = 8;
  cfg.synth_samples = 24;
  cfg.seed = 77;
  cfg.epochs = 4;

  auto data = [&] {
    SynthOutput synth = generate(synth_config_from(cfg));
    EmbeddingTable table =
        random_embeddings(synth.vocabulary, cfg.seed, cfg.dim);
    return std::make_pair(prepare(synth.source, table, cfg.max_paths),
                          prepare(synth.target, table, cfg.max_paths));
  };

  auto run_full = [&] {
    auto [src, tgt] = data();
    TrainState state = init_train_state(cfg);
    train(state, src, tgt, cfg);
    return state;
  };
  TrainState a = run_full();
  TrainState b = run_full();

  bool identical = true;
  auto pa = a.model.named_tensors();
  auto pb = b.model.named_tensors();
  for (size_t i = 0; i < pa.size(); ++i)
    if (pa[i].second.value() != pb[i].second.value()) identical = false;

  auto [src, tgt] = data();
  RunConfig half = cfg;
  half.epochs = 2;
  TrainState partial = init_train_state(half);
  train(partial, src, tgt, half);
  Checkpoint ckpt = make_checkpoint(partial, half);
  TrainState resumed = restore_train_state(ckpt, cfg);
  train(resumed, src, tgt, cfg);
  bool resume_ok = true;
  auto pr = resumed.model.named_tensors();
  for (size_t i = 0; i < pa.size(); ++i)
    if (pa[i].second.value() != pr[i].second.value()) resume_ok = false;

  std::ostringstream detail;
  detail << "determinism: repeated seeded runs bitwise "
         << (identical ? "identical" : "DIFFER")
         << ", checkpoint resume bitwise "
         << (resume_ok ? "identical" : "DIFFERS");
  report(7, identical && resume_ok, detail.str());
}

// ---- criterion 8: invalid weight configurations are rejected -------------

void criterion8() {
  bool gamma_rejected = false, alpha_rejected = false, ok_accepted = true;
  try {
    RunConfig cfg;
    apply_overrides(cfg, {"gamma1=0.5"});  // 0.5+0.1+0.1 != 1
  } catch (const ConfigError&) {
    gamma_rejected = true;
  }
  try {
    RunConfig cfg;
    apply_overrides(cfg, {"alpha1=0.5", "alpha2=0.1"});
  } catch (const ConfigError&) {
    alpha_rejected = true;
  }
  try {
    RunConfig cfg;
    apply_overrides(cfg, {"gamma1=0.6", "gamma2=0.2", "gamma3=0.2"});
  } catch (const ConfigError&) {
    ok_accepted = false;
  }
  report(8, gamma_rejected && alpha_rejected && ok_accepted,
         "config validation: bad gamma/alpha sums rejected with ConfigError, "
         "consistent weights accepted");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  std::cout << (g_failures ? "ACCEPTANCE FAILED (" : "ACCEPTANCE PASSED (")
            << (g_failures ? std::to_string(g_failures) + " criteria failed)"
                           : std::string("8/8)"))
            << std::endl;
  return g_failures ? 1 : 0;
}
