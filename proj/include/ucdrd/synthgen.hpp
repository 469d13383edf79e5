#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ucdrd/config.hpp"
#include "ucdrd/data_model.hpp"

namespace ucdrd {

/// Paired synthetic datasets with a controllable domain shift. Stance
/// tokens are drawn from a shared vocabulary with identical class-conditional
/// distributions in both domains (the transferable signal); topic tokens
/// come from disjoint per-domain vocabularies whose usage correlates with
/// the class only within a domain (the shift). `shift` is the fraction of
/// tokens drawn from the topic vocabulary.
struct SynthConfig {
  int samples_per_domain = 400;
  int num_classes = 2;
  int stance_vocab = 40;   // shared, split evenly across classes
  int topic_vocab = 60;    // per domain, split evenly across classes
  double shift = 0.8;
  double rumor_prior = 0.5;  // class-1 prior (binary); multiclass: uniform
  double branch = 1.6;       // mean children per internal node
  int max_depth = 3;
  int min_replies = 2;
  int max_replies = 6;
  std::uint64_t seed = 7;
};

SynthConfig synth_config_from(const RunConfig& cfg);

struct SynthOutput {
  std::vector<PropagationTree> source;
  std::vector<PropagationTree> target;  // labels populated but held out
  std::vector<std::string> vocabulary;  // union, for random embeddings
};

SynthOutput generate(const SynthConfig& cfg);

/// Stance-token name for class c, index k; exposed so tests can build
/// bag-of-stance-token baselines.
std::string stance_token(int cls, int k);

}  // namespace ucdrd
