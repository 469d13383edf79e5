#include "ucdrd/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ucdrd {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "': expected boolean, got '" + v +
                    "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <typename T>
Setter numeric(T RunConfig::* field, const char* key) {
  return [field, key](RunConfig& cfg, const std::string& v) {
    std::istringstream ss(v);
    T parsed;
    if (!(ss >> parsed) || !ss.eof())
      throw ConfigError(std::string("config: key '") + key +
                        "': cannot parse '" + v + "'");
    cfg.*field = parsed;
  };
}

Setter boolean(bool RunConfig::* field, const char* key) {
  return [field, key](RunConfig& cfg, const std::string& v) {
    cfg.*field = parse_bool(v, key);
  };
}

Setter text(std::string RunConfig::* field) {
  return [field](RunConfig& cfg, const std::string& v) { cfg.*field = v; };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dim", numeric(&RunConfig::dim, "dim")},
      {"heads", numeric(&RunConfig::heads, "heads")},
      {"ffn_dim", numeric(&RunConfig::ffn_dim, "ffn_dim")},
      {"residual", boolean(&RunConfig::residual, "residual")},
      {"num_classes", numeric(&RunConfig::num_classes, "num_classes")},
      {"max_paths", numeric(&RunConfig::max_paths, "max_paths")},
      {"embedding_file", text(&RunConfig::embedding_file)},
      {"tau",
       [](RunConfig& c, const std::string& v) {
         c.contrastive.tau = std::stod(v);
       }},
      {"alpha1",
       [](RunConfig& c, const std::string& v) {
         c.contrastive.alpha1 = std::stod(v);
       }},
      {"alpha2",
       [](RunConfig& c, const std::string& v) {
         c.contrastive.alpha2 = std::stod(v);
       }},
      {"beta1",
       [](RunConfig& c, const std::string& v) {
         c.contrastive.beta1 = std::stod(v);
       }},
      {"beta2",
       [](RunConfig& c, const std::string& v) {
         c.contrastive.beta2 = std::stod(v);
       }},
      {"include_self",
       [](RunConfig& c, const std::string& v) {
         c.contrastive.include_self = parse_bool(v, "include_self");
       }},
      {"gamma1",
       [](RunConfig& c, const std::string& v) {
         c.weights.gamma1 = std::stod(v);
       }},
      {"gamma2",
       [](RunConfig& c, const std::string& v) {
         c.weights.gamma2 = std::stod(v);
       }},
      {"gamma3",
       [](RunConfig& c, const std::string& v) {
         c.weights.gamma3 = std::stod(v);
       }},
      {"epochs", numeric(&RunConfig::epochs, "epochs")},
      {"batch_source", numeric(&RunConfig::batch_source, "batch_source")},
      {"batch_target", numeric(&RunConfig::batch_target, "batch_target")},
      {"optimizer", text(&RunConfig::optimizer)},
      {"lr", numeric(&RunConfig::lr, "lr")},
      {"adam_beta1", numeric(&RunConfig::adam_beta1, "adam_beta1")},
      {"adam_beta2", numeric(&RunConfig::adam_beta2, "adam_beta2")},
      {"adam_eps", numeric(&RunConfig::adam_eps, "adam_eps")},
      {"weight_decay", numeric(&RunConfig::weight_decay, "weight_decay")},
      {"seed", numeric(&RunConfig::seed, "seed")},
      {"pseudo_refresh", text(&RunConfig::pseudo_refresh)},
      {"kmeans_max_iter",
       numeric(&RunConfig::kmeans_max_iter, "kmeans_max_iter")},
      {"kmeans_tol", numeric(&RunConfig::kmeans_tol, "kmeans_tol")},
      {"kmeans_cosine", boolean(&RunConfig::kmeans_cosine, "kmeans_cosine")},
      {"share_cam_weights",
       boolean(&RunConfig::share_cam_weights, "share_cam_weights")},
      {"stop_grad_kl", boolean(&RunConfig::stop_grad_kl, "stop_grad_kl")},
      {"checkpoint_every",
       numeric(&RunConfig::checkpoint_every, "checkpoint_every")},
      {"patience", numeric(&RunConfig::patience, "patience")},
      {"synth_samples", numeric(&RunConfig::synth_samples, "synth_samples")},
      {"synth_stance_vocab",
       numeric(&RunConfig::synth_stance_vocab, "synth_stance_vocab")},
      {"synth_topic_vocab",
       numeric(&RunConfig::synth_topic_vocab, "synth_topic_vocab")},
      {"synth_shift", numeric(&RunConfig::synth_shift, "synth_shift")},
      {"synth_rumor_prior",
       numeric(&RunConfig::synth_rumor_prior, "synth_rumor_prior")},
      {"synth_branch", numeric(&RunConfig::synth_branch, "synth_branch")},
      {"synth_max_depth",
       numeric(&RunConfig::synth_max_depth, "synth_max_depth")},
      {"synth_min_replies",
       numeric(&RunConfig::synth_min_replies, "synth_min_replies")},
      {"synth_max_replies",
       numeric(&RunConfig::synth_max_replies, "synth_max_replies")},
  };
  return table;
}

void apply_pair(RunConfig& cfg, const std::string& key,
                const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end())
    throw ConfigError("config: unknown key '" + key + "'");
  it->second(cfg, value);
}

void check_sum_to_one(double a, double b, double c, const char* group,
                      bool has_third) {
  double s = a + b + (has_third ? c : 0.0);
  if (std::abs(s - 1.0) > 1e-6)
    throw ConfigError(std::string("config: ") + group + " must sum to 1 (got " +
                      std::to_string(s) +
                      "); adjust the weights so they add up to 1");
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);

  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_pair(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate_config(cfg);
  return cfg;
}

void apply_overrides(RunConfig& cfg,
                     const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override '" + ov + "' is not key=value");
    apply_pair(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  validate_config(cfg);
}

void validate_config(const RunConfig& cfg) {
  check_sum_to_one(cfg.contrastive.alpha1, cfg.contrastive.alpha2, 0, "alpha1+alpha2",
                   false);
  check_sum_to_one(cfg.contrastive.beta1, cfg.contrastive.beta2, 0, "beta1+beta2",
                   false);
  check_sum_to_one(cfg.weights.gamma1, cfg.weights.gamma2, cfg.weights.gamma3,
                   "gamma1+gamma2+gamma3", true);
  if (cfg.contrastive.tau <= 0) throw ConfigError("config: tau must be > 0");
  if (cfg.weights.gamma1 < 0 || cfg.weights.gamma2 < 0 || cfg.weights.gamma3 < 0)
    throw ConfigError("config: gamma weights must be >= 0");
  if (cfg.heads <= 0 || cfg.dim % cfg.heads != 0)
    throw ConfigError("config: heads must divide dim");
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw ConfigError("config: optimizer must be adam or sgd");
  if (cfg.pseudo_refresh != "step" && cfg.pseudo_refresh != "epoch")
    throw ConfigError("config: pseudo_refresh must be step or epoch");
  if (cfg.num_classes < 2) throw ConfigError("config: num_classes must be >= 2");
  if (cfg.synth_shift < 0 || cfg.synth_shift > 1)
    throw ConfigError("config: synth_shift must lie in [0,1]");
  if (cfg.synth_rumor_prior < 0 || cfg.synth_rumor_prior > 1)
    throw ConfigError("config: synth_rumor_prior must lie in [0,1]");
}

RunConfig default_config() { return RunConfig{}; }

}  // namespace ucdrd
