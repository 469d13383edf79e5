#include "ucdrd/synthgen.hpp"

#include <random>

namespace ucdrd {

SynthConfig synth_config_from(const RunConfig& cfg) {
  SynthConfig sc;
  sc.samples_per_domain = cfg.synth_samples;
  sc.num_classes = cfg.num_classes;
  sc.stance_vocab = cfg.synth_stance_vocab;
  sc.topic_vocab = cfg.synth_topic_vocab;
  sc.shift = cfg.synth_shift;
  sc.rumor_prior = cfg.synth_rumor_prior;
  sc.branch = cfg.synth_branch;
  sc.max_depth = cfg.synth_max_depth;
  sc.min_replies = cfg.synth_min_replies;
  sc.max_replies = cfg.synth_max_replies;
  sc.seed = cfg.seed;
  return sc;
}

std::string stance_token(int cls, int k) {
  return "stance_c" + std::to_string(cls) + "_" + std::to_string(k);
}

namespace {

std::string topic_token(char domain, int cls, int k) {
  return std::string("topic_") + domain + "_c" + std::to_string(cls) + "_" +
         std::to_string(k);
}

/// How sharply token choice concentrates on the sample's own class.
constexpr double kClassFidelity = 0.85;

class TokenSampler {
 public:
  TokenSampler(const SynthConfig& cfg, char domain)
      : cfg_(cfg), domain_(domain) {}

  std::string draw(int cls, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool topical = unit(rng) < cfg_.shift;
    int pool = topical ? cfg_.topic_vocab : cfg_.stance_vocab;
    int per_class = std::max(1, pool / cfg_.num_classes);
    int chosen_cls = cls;
    if (unit(rng) >= kClassFidelity) {
      std::uniform_int_distribution<int> any(0, cfg_.num_classes - 1);
      chosen_cls = any(rng);
    }
    std::uniform_int_distribution<int> pick(0, per_class - 1);
    int k = pick(rng);
    return topical ? topic_token(domain_, chosen_cls, k)
                   : stance_token(chosen_cls, k);
  }

 private:
  const SynthConfig& cfg_;
  char domain_;
};

PostNode make_node(const TokenSampler& sampler, int cls,
                   std::optional<int> parent, int rank,
                   std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ntok(3, 6);
  PostNode node;
  node.parent = parent;
  node.timestamp_rank = rank;
  int n = ntok(rng);
  node.tokens.reserve(n);
  for (int i = 0; i < n; ++i) node.tokens.push_back(sampler.draw(cls, rng));
  return node;
}

PropagationTree make_tree(const SynthConfig& cfg, const TokenSampler& sampler,
                          char domain, int index, int cls,
                          std::mt19937_64& rng) {
  PropagationTree tree;
  tree.id = std::string(1, domain) + std::to_string(index);
  tree.domain = domain == 's' ? Domain::source : Domain::target;
  tree.label = cls;
  tree.root = 0;
  tree.nodes.push_back(make_node(sampler, cls, std::nullopt, 0, rng));

  std::uniform_int_distribution<int> root_children(cfg.min_replies,
                                                   cfg.max_replies);
  std::poisson_distribution<int> branch(cfg.branch);

  struct Pending {
    int parent;
    int depth;
  };
  std::vector<Pending> frontier;
  int nroot = root_children(rng);
  for (int i = 0; i < nroot; ++i) frontier.push_back({0, 1});
  while (!frontier.empty()) {
    Pending cur = frontier.back();
    frontier.pop_back();
    int me = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(make_node(sampler, cls, cur.parent, me, rng));
    if (cur.depth < cfg.max_depth) {
      int kids = std::min(branch(rng), cfg.max_replies);
      for (int i = 0; i < kids; ++i) frontier.push_back({me, cur.depth + 1});
    }
  }
  return tree;
}

int draw_class(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (cfg.num_classes == 2) return unit(rng) < cfg.rumor_prior ? 1 : 0;
  std::uniform_int_distribution<int> any(0, cfg.num_classes - 1);
  return any(rng);
}

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
  SynthOutput out;
  std::mt19937_64 rng_s(cfg.seed * 2 + 1), rng_t(cfg.seed * 2 + 2);
  TokenSampler sampler_s(cfg, 's'), sampler_t(cfg, 't');

  for (int i = 0; i < cfg.samples_per_domain; ++i) {
    int cls = draw_class(cfg, rng_s);
    out.source.push_back(make_tree(cfg, sampler_s, 's', i, cls, rng_s));
  }
  for (int i = 0; i < cfg.samples_per_domain; ++i) {
    int cls = draw_class(cfg, rng_t);
    out.target.push_back(make_tree(cfg, sampler_t, 't', i, cls, rng_t));
  }

  int per_class_stance = std::max(1, cfg.stance_vocab / cfg.num_classes);
  int per_class_topic = std::max(1, cfg.topic_vocab / cfg.num_classes);
  for (int c = 0; c < cfg.num_classes; ++c) {
    for (int k = 0; k < per_class_stance; ++k)
      out.vocabulary.push_back(stance_token(c, k));
    for (int k = 0; k < per_class_topic; ++k) {
      out.vocabulary.push_back(topic_token('s', c, k));
      out.vocabulary.push_back(topic_token('t', c, k));
    }
  }
  return out;
}

}  // namespace ucdrd
