#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ucdrd/contrastive.hpp"
#include "ucdrd/encoder.hpp"
#include "ucdrd/predictor.hpp"

namespace ucdrd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration; unknown keys are rejected and the
/// alpha/beta/gamma groups must each sum to 1 within 1e-6.
struct RunConfig {
  // model
  int dim = 300;
  int heads = 4;
  int ffn_dim = 600;
  bool residual = false;
  int num_classes = 2;
  int max_paths = 64;
  std::string embedding_file;  // empty: seeded random embeddings

  // contrastive / loss weights
  ContrastiveConfig contrastive;
  LossWeights weights;

  // trainer
  int epochs = 300;
  int batch_source = 32;
  int batch_target = 32;
  std::string optimizer = "adam";  // adam | sgd
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 42;
  std::string pseudo_refresh = "step";  // step | epoch
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-4;
  bool kmeans_cosine = false;
  bool share_cam_weights = true;
  bool stop_grad_kl = false;
  int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  int patience = 0;          // 0 disables early stopping

  // synthetic data generation
  int synth_samples = 400;
  int synth_stance_vocab = 40;
  int synth_topic_vocab = 60;
  double synth_shift = 0.8;
  double synth_rumor_prior = 0.5;
  double synth_branch = 1.6;
  int synth_max_depth = 3;
  int synth_min_replies = 2;
  int synth_max_replies = 6;

  EncoderConfig encoder_config() const {
    return EncoderConfig{dim, heads, ffn_dim, residual};
  }
};

/// Parses "key=value" lines ('#' comments, blank lines allowed).
RunConfig load_config(const std::string& path);

/// Applies "key=value" override strings on top of a config, then
/// re-validates.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

/// Sum-to-one and range checks; throws ConfigError with the offending key.
void validate_config(const RunConfig& cfg);

RunConfig default_config();

}  // namespace ucdrd
