#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ucdrd/config.hpp"
#include "ucdrd/gradcheck.hpp"
#include "ucdrd/synthgen.hpp"
#include "ucdrd/trainer.hpp"

namespace fs = std::filesystem;
using namespace ucdrd;

namespace {

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig cfg =
      config_path.empty() ? default_config() : load_config(config_path);
  apply_overrides(cfg, overrides);
  return cfg;
}

/// Sorted unique token list across both datasets, for seeded random
/// embeddings when no embedding file is configured.
std::vector<std::string> collect_vocab(
    const std::vector<const std::vector<PropagationTree>*>& sets) {
  std::set<std::string> words;
  for (const auto* trees : sets)
    for (const auto& tree : *trees)
      for (const auto& node : tree.nodes)
        for (const auto& tok : node.tokens) words.insert(tok);
  return {words.begin(), words.end()};
}

EmbeddingTable build_table(const RunConfig& cfg,
                           const std::vector<const std::vector<PropagationTree>*>& sets) {
  if (!cfg.embedding_file.empty())
    return load_embeddings(cfg.embedding_file, cfg.dim);
  return random_embeddings(collect_vocab(sets), cfg.seed, cfg.dim);
}

void write_manifest(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  out << "synth_samples=" << cfg.synth_samples << '\n'
      << "num_classes=" << cfg.num_classes << '\n'
      << "synth_stance_vocab=" << cfg.synth_stance_vocab << '\n'
      << "synth_topic_vocab=" << cfg.synth_topic_vocab << '\n'
      << "synth_shift=" << cfg.synth_shift << '\n'
      << "synth_rumor_prior=" << cfg.synth_rumor_prior << '\n'
      << "synth_branch=" << cfg.synth_branch << '\n'
      << "synth_max_depth=" << cfg.synth_max_depth << '\n'
      << "synth_min_replies=" << cfg.synth_min_replies << '\n'
      << "synth_max_replies=" << cfg.synth_max_replies << '\n'
      << "seed=" << cfg.seed << '\n';
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              const std::vector<std::string>& overrides) {
  RunConfig cfg = load_run_config(config_path, overrides);
  fs::create_directories(out_dir);
  SynthOutput data = generate(synth_config_from(cfg));
  save_dataset(out_dir + "/source.jsonl", data.source, /*write_labels=*/true);
  save_dataset(out_dir + "/target.jsonl", data.target, /*write_labels=*/true);
  write_manifest(out_dir + "/manifest.txt", cfg);
  std::cout << "wrote " << data.source.size() << " source and "
            << data.target.size() << " target trees to " << out_dir << '\n';
  return 0;
}

void print_eval(const EvalReport& report) {
  std::cout << "accuracy=" << 100.0 * report.accuracy;
  for (size_t c = 0; c < report.f1.size(); ++c)
    std::cout << " f1_class" << c << "=" << 100.0 * report.f1[c];
  std::cout << '\n';
}

void dump_predictions(const std::string& path, const PreparedSet& set,
                      const Model& model) {
  std::ofstream out(path);
  for (size_t i = 0; i < set.size(); ++i) {
    RumorEmbedding emb = encode(set.pathsets[i], model.encoder, Domain::target);
    Matrix p = predict(emb.vector, model.classifier).value();
    out << set.ids[i] << ' ' << infer_label(emb.vector, model.classifier);
    for (Eigen::Index j = 0; j < p.cols(); ++j) out << ' ' << p(0, j);
    out << '\n';
  }
}

int cmd_train(const std::string& config_path, const std::string& source_path,
              const std::string& target_path, const std::string& out_dir,
              const std::string& resume,
              const std::vector<std::string>& overrides) {
  RunConfig cfg = load_run_config(config_path, overrides);
  fs::create_directories(out_dir);

  auto source_trees = load_dataset(source_path, Domain::source);
  auto target_trees = load_dataset(target_path, Domain::target);
  EmbeddingTable table = build_table(cfg, {&source_trees, &target_trees});
  PreparedSet source = prepare(source_trees, table, cfg.max_paths);
  PreparedSet target = prepare(target_trees, table, cfg.max_paths);

  TrainState state = resume.empty()
                         ? init_train_state(cfg)
                         : restore_train_state(load_checkpoint(resume), cfg);

  std::ofstream metrics(out_dir + "/metrics.log",
                        resume.empty() ? std::ios::trunc : std::ios::app);
  TrainOptions opts;
  opts.metrics = &metrics;
  opts.checkpoint_dir = out_dir;
  train(state, source, target, cfg, opts);

  Checkpoint final = make_checkpoint(state, cfg);
  store_embeddings(final, table);
  save_checkpoint(out_dir + "/final.ckpt", final);

  bool have_labels = std::all_of(target.labels.begin(), target.labels.end(),
                                 [](int y) { return y >= 0; });
  if (have_labels && !target.labels.empty()) {
    EvalReport report = evaluate(target, state.model);
    print_eval(report);
    dump_predictions(out_dir + "/predictions.txt", target, state.model);
  }
  std::cout << "trained " << state.step << " steps; checkpoint at " << out_dir
            << "/final.ckpt\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& target_path,
             const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  RunConfig cfg = default_config();
  cfg.dim = std::stoi(ckpt.metadata.at("dim"));
  cfg.num_classes = std::stoi(ckpt.metadata.at("num_classes"));
  cfg.heads = std::stoi(ckpt.metadata.at("heads"));
  cfg.ffn_dim = std::stoi(ckpt.metadata.at("ffn_dim"));
  cfg.residual = ckpt.metadata.at("residual") == "1";
  cfg.share_cam_weights = ckpt.metadata.at("share_cam") == "1";
  cfg.max_paths = std::stoi(ckpt.metadata.at("max_paths"));

  Model model = init_model(cfg.encoder_config(), cfg.num_classes, 0,
                           cfg.share_cam_weights);
  restore_model(model, ckpt);
  EmbeddingTable table = restore_embeddings(ckpt);

  auto trees = load_dataset(target_path, Domain::target);
  PreparedSet target = prepare(trees, table, cfg.max_paths);
  EvalReport report = evaluate(target, model);
  print_eval(report);
  dump_predictions(out_path.empty() ? "predictions.txt" : out_path, target,
                   model);
  return 0;
}

int cmd_gradcheck(const std::string& config_path,
                  const std::vector<std::string>& overrides) {
  RunConfig cfg = load_run_config(config_path, overrides);
  GradCheckReport report = run_gradcheck(cfg);
  double worst = 0;
  for (const auto& e : report.entries) {
    std::cout << "loss=" << e.loss << " group=" << e.group
              << " max_rel_err=" << e.max_rel_err << '\n';
    worst = std::max(worst, e.max_rel_err);
  }
  bool ok = report.passed();
  std::cout << (ok ? "PASS" : "FAIL") << " worst=" << worst << '\n';
  return ok ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, const std::string& grid,
              const std::string& source_path, const std::string& target_path,
              const std::vector<std::string>& overrides) {
  // Grid spec: whitespace-separated cells, each cell "key=v;key=v".
  std::istringstream cells(grid);
  std::string cell;
  while (cells >> cell) {
    RunConfig cfg = load_run_config(config_path, overrides);
    std::vector<std::string> cell_overrides;
    std::istringstream pairs(cell);
    std::string kv;
    while (std::getline(pairs, kv, ';'))
      if (!kv.empty()) cell_overrides.push_back(kv);
    apply_overrides(cfg, cell_overrides);

    auto source_trees = load_dataset(source_path, Domain::source);
    auto target_trees = load_dataset(target_path, Domain::target);
    EmbeddingTable table = build_table(cfg, {&source_trees, &target_trees});
    PreparedSet source = prepare(source_trees, table, cfg.max_paths);
    PreparedSet target = prepare(target_trees, table, cfg.max_paths);

    TrainState state = init_train_state(cfg);
    train(state, source, target, cfg);
    EvalReport report = evaluate(target, state.model);
    std::cout << "cell=" << cell << " accuracy=" << 100.0 * report.accuracy;
    for (size_t c = 0; c < report.f1.size(); ++c)
      std::cout << " f1_class" << c << "=" << 100.0 * report.f1[c];
    std::cout << '\n';
  }
  return 0;
}

int cmd_inspect_pseudo(const std::string& ckpt_path,
                       const std::string& source_path,
                       const std::string& target_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  RunConfig cfg = default_config();
  cfg.dim = std::stoi(ckpt.metadata.at("dim"));
  cfg.num_classes = std::stoi(ckpt.metadata.at("num_classes"));
  cfg.heads = std::stoi(ckpt.metadata.at("heads"));
  cfg.ffn_dim = std::stoi(ckpt.metadata.at("ffn_dim"));
  cfg.residual = ckpt.metadata.at("residual") == "1";
  cfg.share_cam_weights = ckpt.metadata.at("share_cam") == "1";
  cfg.max_paths = std::stoi(ckpt.metadata.at("max_paths"));

  Model model = init_model(cfg.encoder_config(), cfg.num_classes, 0,
                           cfg.share_cam_weights);
  restore_model(model, ckpt);
  EmbeddingTable table = restore_embeddings(ckpt);

  auto source_trees = load_dataset(source_path, Domain::source);
  auto target_trees = load_dataset(target_path, Domain::target);
  PreparedSet source = prepare(source_trees, table, cfg.max_paths);
  PreparedSet target = prepare(target_trees, table, cfg.max_paths);
  if (target.size() == 0) {
    std::cout << "no target samples\n";
    return 0;
  }

  std::vector<Tensor> src_emb, tgt_emb;
  for (const auto& ps : source.pathsets)
    src_emb.push_back(encode(ps, model.encoder, Domain::source).vector);
  for (const auto& ps : target.pathsets)
    tgt_emb.push_back(encode(ps, model.encoder, Domain::target).vector);
  PrototypeSet protos = source_prototypes(stack_rows(src_emb).value(),
                                          source.labels, cfg.num_classes);
  PseudoLabeledBatch assigned =
      kmeans_assign(stack_rows(tgt_emb).value(), protos, cfg.kmeans_max_iter,
                    cfg.kmeans_tol, cfg.kmeans_cosine);

  int hits = 0, labeled = 0;
  for (size_t i = 0; i < target.size(); ++i) {
    std::cout << target.ids[i] << " pseudo=" << assigned.labels[i]
              << " distance=" << assigned.distances[i] << '\n';
    if (target.labels[i] >= 0) {
      ++labeled;
      if (assigned.labels[i] == target.labels[i]) ++hits;
    }
  }
  if (labeled > 0)
    std::cout << "pseudo_accuracy="
              << 100.0 * hits / static_cast<double>(labeled) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unsupervised cross-domain rumor detection"};
  app.require_subcommand(1);

  std::string config_path, out_dir, source_path, target_path, ckpt_path,
      resume, grid, out_path;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--set", overrides, "config overrides key=value");
  };

  auto* synth = app.add_subcommand("synth", "generate synthetic datasets");
  add_common(synth);
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd);
  train_cmd->add_option("--source", source_path)->required();
  train_cmd->add_option("--target", target_path)->required();
  train_cmd->add_option("--out", out_dir)->required();
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt_path)->required();
  eval_cmd->add_option("--target", target_path)->required();
  eval_cmd->add_option("--out", out_path, "prediction dump path");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gc);

  auto* sweep = app.add_subcommand("sweep", "hyperparameter grid");
  add_common(sweep);
  sweep->add_option("--grid", grid, "cells: \"k=v;k=v k=v;k=v\"")->required();
  sweep->add_option("--source", source_path)->required();
  sweep->add_option("--target", target_path)->required();

  auto* inspect = app.add_subcommand("inspect-pseudo", "pseudo-label report");
  inspect->add_option("--checkpoint", ckpt_path)->required();
  inspect->add_option("--source", source_path)->required();
  inspect->add_option("--target", target_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir, overrides);
    if (train_cmd->parsed())
      return cmd_train(config_path, source_path, target_path, out_dir, resume,
                       overrides);
    if (eval_cmd->parsed()) return cmd_eval(ckpt_path, target_path, out_path);
    if (gc->parsed()) return cmd_gradcheck(config_path, overrides);
    if (sweep->parsed())
      return cmd_sweep(config_path, grid, source_path, target_path, overrides);
    if (inspect->parsed())
      return cmd_inspect_pseudo(ckpt_path, source_path, target_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
