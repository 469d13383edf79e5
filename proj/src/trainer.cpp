#include "ucdrd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ucdrd {

PreparedSet prepare(const std::vector<PropagationTree>& trees,
                    const EmbeddingTable& table, int max_paths) {
  PreparedSet out;
  out.pathsets.reserve(trees.size());
  for (const auto& tree : trees) {
    out.pathsets.push_back(build_pathset(tree, table, max_paths));
    out.labels.push_back(tree.label.value_or(-1));
    out.ids.push_back(tree.id);
  }
  return out;
}

void Optimizer::init(const Model& model) {
  m.clear();
  v.clear();
  t = 0;
  for (const auto& [name, tensor] : model.named_tensors()) {
    m.push_back(Matrix::Zero(tensor.rows(), tensor.cols()));
    v.push_back(Matrix::Zero(tensor.rows(), tensor.cols()));
  }
}

void Optimizer::step(Model& model) {
  ++t;
  auto params = model.named_tensors();
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].second;
    Matrix g = p.grad();
    if (weight_decay > 0) g += weight_decay * p.value();
    if (kind == "sgd") {
      p.value() -= lr * g;
      continue;
    }
    m[i] = beta1 * m[i] + (1 - beta1) * g;
    v[i] = beta2 * v[i] + (1 - beta2) * g.cwiseProduct(g);
    double bc1 = 1 - std::pow(beta1, t);
    double bc2 = 1 - std::pow(beta2, t);
    Matrix mhat = m[i] / bc1;
    Matrix vhat = v[i] / bc2;
    p.value() -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
  }
}

namespace {

struct EncodedBatch {
  std::vector<Tensor> embeddings;  // per sample, 1 x d
  Tensor features;                 // B x d
};

EncodedBatch encode_batch(const BatchView& batch, const EncoderParams& params,
                          Domain domain) {
  EncodedBatch out;
  out.embeddings.reserve(batch.indices.size());
  for (size_t idx : batch.indices)
    out.embeddings.push_back(
        encode(batch.set->pathsets[idx], params, domain).vector);
  out.features = stack_rows(out.embeddings);
  return out;
}

std::vector<int> gather_labels(const BatchView& batch) {
  std::vector<int> out;
  out.reserve(batch.indices.size());
  for (size_t idx : batch.indices) out.push_back(batch.set->labels[idx]);
  return out;
}

}  // namespace

TrainState init_train_state(const RunConfig& cfg) {
  TrainState state;
  state.model = init_model(cfg.encoder_config(), cfg.num_classes, cfg.seed,
                           cfg.share_cam_weights);
  state.opt.kind = cfg.optimizer;
  state.opt.lr = cfg.lr;
  state.opt.beta1 = cfg.adam_beta1;
  state.opt.beta2 = cfg.adam_beta2;
  state.opt.eps = cfg.adam_eps;
  state.opt.weight_decay = cfg.weight_decay;
  state.opt.init(state.model);
  state.rng.seed(cfg.seed);
  return state;
}

StepReport train_step(TrainState& state, const BatchView& source,
                      const BatchView& target, const RunConfig& cfg) {
  if (source.indices.empty() || target.indices.empty())
    throw ContractError("train_step: empty batch");

  Model& model = state.model;
  const auto& w = cfg.weights;
  StepReport report;

  EncodedBatch src = encode_batch(source, model.encoder, Domain::source);
  std::vector<int> src_labels = gather_labels(source);

  Tensor ce = cross_entropy_source(src.features, src_labels, model.classifier);
  Tensor cl = Tensor::scalar(0.0);
  Tensor ca = Tensor::scalar(0.0);

  const bool need_pseudo = w.gamma2 > 0 || w.gamma3 > 0;
  std::vector<int> pseudo;
  std::optional<EncodedBatch> tgt;
  if (need_pseudo) {
    tgt = encode_batch(target, model.encoder, Domain::target);
    ++state.counters.pseudo_label_calls;
    PrototypeSet protos = source_prototypes(src.features.value(), src_labels,
                                            cfg.num_classes);
    PseudoLabeledBatch assigned =
        kmeans_assign(tgt->features.value(), protos, cfg.kmeans_max_iter,
                      cfg.kmeans_tol, cfg.kmeans_cosine);
    pseudo = assigned.labels;

    const std::vector<int> held_out = gather_labels(target);
    if (std::none_of(held_out.begin(), held_out.end(),
                     [](int y) { return y < 0; })) {
      int hits = 0;
      for (size_t i = 0; i < pseudo.size(); ++i)
        if (pseudo[i] == held_out[i]) ++hits;
      report.pseudo_accuracy =
          static_cast<double>(hits) / static_cast<double>(pseudo.size());
    }
  }

  if (w.gamma2 > 0) {
    FeatureBatch fb_src{src.features, src_labels};
    FeatureBatch fb_tgt{tgt->features, pseudo};
    ClmReport clm = clm_loss(fb_src, fb_tgt, cfg.num_classes, cfg.contrastive);
    cl = clm.total;
    report.icl = clm.icl.item();
    report.ccl_ts = clm.ccl_ts.item();
    report.ccl_st = clm.ccl_st.item();
    report.proto_ts = clm.proto_ts.item();
  }

  if (w.gamma3 > 0) {
    ++state.counters.cam_calls;
    std::vector<PathSet> src_ps, tgt_ps;
    for (size_t idx : source.indices) src_ps.push_back(source.set->pathsets[idx]);
    for (size_t idx : target.indices) tgt_ps.push_back(target.set->pathsets[idx]);
    auto pairs = make_pairs(src_ps, src_labels, tgt_ps, pseudo, state.rng);
    report.pairs = static_cast<int>(pairs.size());
    ca = kl_consistency(pairs, src.embeddings, model.cam_params(),
                        model.classifier, cfg.stop_grad_kl);
  }

  Tensor total = total_loss(ce, cl, ca, w);

  report.ce = ce.item();
  report.cl = cl.item();
  report.ca = ca.item();
  report.total = total.item();
  if (!std::isfinite(report.total)) {
    std::ostringstream msg;
    msg << "train_step: non-finite loss at step " << state.step
        << " (ce=" << report.ce << " cl=" << report.cl << " ca=" << report.ca
        << ")";
    throw NumericError(msg.str());
  }

  model.zero_grad();
  backward(total);
  state.opt.step(model);
  ++state.step;
  return report;
}

namespace {

void emit_metrics(std::ostream& os, const TrainState& state,
                  const StepReport& r) {
  os << "step=" << state.step << " epoch=" << state.epoch << " ce=" << r.ce
     << " icl=" << r.icl << " ccl_ts=" << r.ccl_ts << " ccl_st=" << r.ccl_st
     << " proto_ts=" << r.proto_ts << " cl=" << r.cl << " ca=" << r.ca
     << " total=" << r.total << " pairs=" << r.pairs;
  if (r.pseudo_accuracy >= 0) os << " pseudo_acc=" << r.pseudo_accuracy;
  os << '\n';
}

}  // namespace

void train(TrainState& state, const PreparedSet& source,
           const PreparedSet& target, const RunConfig& cfg,
           const TrainOptions& opts) {
  if (source.size() == 0 || target.size() == 0)
    throw ContractError("train: empty dataset");

  const size_t steps_per_epoch =
      (source.size() + cfg.batch_source - 1) / cfg.batch_source;

  for (; state.epoch < cfg.epochs; ++state.epoch) {
    std::vector<size_t> src_order(source.size()), tgt_order(target.size());
    std::iota(src_order.begin(), src_order.end(), 0);
    std::iota(tgt_order.begin(), tgt_order.end(), 0);
    std::shuffle(src_order.begin(), src_order.end(), state.rng);
    std::shuffle(tgt_order.begin(), tgt_order.end(), state.rng);

    for (size_t s = 0; s < steps_per_epoch; ++s) {
      BatchView src{&source, {}}, tgt{&target, {}};
      for (int k = 0; k < cfg.batch_source; ++k) {
        size_t pos = s * cfg.batch_source + k;
        if (pos >= src_order.size()) break;
        src.indices.push_back(src_order[pos]);
      }
      for (int k = 0; k < cfg.batch_target; ++k) {
        // the shorter set cycles
        size_t pos = (s * cfg.batch_target + k) % tgt_order.size();
        tgt.indices.push_back(tgt_order[pos]);
      }
      StepReport r = train_step(state, src, tgt, cfg);
      if (opts.metrics) emit_metrics(*opts.metrics, state, r);
    }

    if (opts.checkpoint_dir.size() && cfg.checkpoint_every > 0 &&
        (state.epoch + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(
          opts.checkpoint_dir + "/epoch_" + std::to_string(state.epoch + 1) +
              ".ckpt",
          make_checkpoint(state, cfg));
    }
    if (opts.on_epoch_end) opts.on_epoch_end(state.epoch);
  }
}

EvalReport evaluate(const PreparedSet& test_set, const Model& model) {
  const int nc = model.classifier.num_classes();
  std::vector<std::vector<long>> confusion(nc, std::vector<long>(nc, 0));
  EvalReport report;
  long correct = 0, labeled = 0;
  for (size_t i = 0; i < test_set.size(); ++i) {
    RumorEmbedding emb =
        encode(test_set.pathsets[i], model.encoder, Domain::target);
    int pred = infer_label(emb.vector, model.classifier);
    report.predictions.push_back(pred);
    int truth = test_set.labels[i];
    if (truth < 0) continue;
    ++labeled;
    if (pred == truth) ++correct;
    ++confusion[truth][pred];
  }
  report.accuracy = labeled ? static_cast<double>(correct) / labeled : 0.0;
  for (int c = 0; c < nc; ++c) {
    long tp = confusion[c][c], fp = 0, fn = 0;
    for (int o = 0; o < nc; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    double denom = 2.0 * tp + fp + fn;
    report.f1.push_back(denom > 0 ? 2.0 * tp / denom : 0.0);
  }
  return report;
}

Checkpoint make_checkpoint(const TrainState& state, const RunConfig& cfg) {
  Checkpoint ckpt;
  store_model(ckpt, state.model);
  auto params = state.model.named_tensors();
  for (size_t i = 0; i < params.size(); ++i) {
    ckpt.tensors["opt.m." + params[i].first] = state.opt.m[i];
    ckpt.tensors["opt.v." + params[i].first] = state.opt.v[i];
  }
  ckpt.metadata["step"] = std::to_string(state.step);
  ckpt.metadata["epoch"] = std::to_string(state.epoch);
  ckpt.metadata["opt_t"] = std::to_string(state.opt.t);
  ckpt.metadata["dim"] = std::to_string(cfg.dim);
  ckpt.metadata["num_classes"] = std::to_string(cfg.num_classes);
  ckpt.metadata["heads"] = std::to_string(cfg.heads);
  ckpt.metadata["ffn_dim"] = std::to_string(cfg.ffn_dim);
  ckpt.metadata["residual"] = cfg.residual ? "1" : "0";
  ckpt.metadata["share_cam"] = cfg.share_cam_weights ? "1" : "0";
  ckpt.metadata["max_paths"] = std::to_string(cfg.max_paths);
  std::ostringstream rng_state;
  rng_state << state.rng;
  ckpt.metadata["rng"] = rng_state.str();
  return ckpt;
}

TrainState restore_train_state(const Checkpoint& ckpt, const RunConfig& cfg) {
  TrainState state = init_train_state(cfg);
  restore_model(state.model, ckpt);
  auto params = state.model.named_tensors();
  for (size_t i = 0; i < params.size(); ++i) {
    auto mi = ckpt.tensors.find("opt.m." + params[i].first);
    auto vi = ckpt.tensors.find("opt.v." + params[i].first);
    if (mi != ckpt.tensors.end()) state.opt.m[i] = mi->second;
    if (vi != ckpt.tensors.end()) state.opt.v[i] = vi->second;
  }
  state.step = std::stol(ckpt.metadata.at("step"));
  state.epoch = std::stoi(ckpt.metadata.at("epoch"));
  state.opt.t = std::stol(ckpt.metadata.at("opt_t"));
  std::istringstream rng_state(ckpt.metadata.at("rng"));
  rng_state >> state.rng;
  return state;
}

}  // namespace ucdrd
