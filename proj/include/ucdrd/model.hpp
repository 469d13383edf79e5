#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ucdrd/cross_attention.hpp"
#include "ucdrd/encoder.hpp"
#include "ucdrd/predictor.hpp"

namespace ucdrd {

/// Trainable state: shared encoder, classifier head and, when CAM weight
/// sharing is disabled, a separate set of cross-attention projections.
/// The word embedding table is fixed (GloVe-style initialization, not
/// fine-tuned) and lives outside the parameter set.
struct Model {
  EncoderParams encoder;
  std::optional<EncoderParams> cam;  // present only when not weight-shared
  ClassifierParams classifier;

  const EncoderParams& cam_params() const { return cam ? *cam : encoder; }
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;
  void zero_grad();
};

Model init_model(const EncoderConfig& enc_cfg, int num_classes,
                 std::uint64_t seed, bool share_cam_weights = true);

/// Versioned binary checkpoint: named double matrices plus a string
/// metadata map (step counters, RNG state, config echoes).
struct Checkpoint {
  std::map<std::string, Matrix> tensors;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Copies model parameters into / out of a checkpoint tensor map.
void store_model(Checkpoint& ckpt, const Model& model);
void restore_model(Model& model, const Checkpoint& ckpt);

/// The fixed embedding table travels with the checkpoint so that eval and
/// diagnostics reproduce training-time features exactly.
void store_embeddings(Checkpoint& ckpt, const EmbeddingTable& table);
EmbeddingTable restore_embeddings(const Checkpoint& ckpt);

}  // namespace ucdrd
