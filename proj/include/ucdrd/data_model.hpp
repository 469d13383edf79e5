#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ucdrd/tensor.hpp"

namespace ucdrd {

enum class Domain { source, target };

struct PostNode {
  std::vector<std::string> tokens;
  std::optional<int> parent;  // none for the root
  int timestamp_rank = 0;
};

struct PropagationTree {
  std::string id;
  Domain domain = Domain::source;
  std::optional<int> label;  // source: ground truth; target: held out
  std::vector<PostNode> nodes;
  int root = 0;
};

/// Per-rumor sequence of path embeddings; row j is the elementwise max over
/// the word vectors along path j.
struct PathSet {
  std::string rumor_id;
  Tensor paths;  // |i| x d
};

struct EmbeddingTable {
  std::unordered_map<std::string, int> vocab;
  Matrix vectors;       // V x dim
  Eigen::RowVectorXd oov;
  int dim = 300;

  const Eigen::RowVectorXd lookup(const std::string& word) const {
    auto it = vocab.find(word);
    if (it == vocab.end()) return oov;
    return vectors.row(it->second);
  }
};

/// Lowercases, maps URLs / user mentions to placeholder tokens, splits on
/// whitespace. Empty text yields a single OOV placeholder.
std::vector<std::string> tokenize(const std::string& text);

/// One node-index sequence per leaf, root first, ordered by leaf
/// timestamp-rank then node index. Throws on cycles and orphans.
std::vector<std::vector<int>> extract_paths(const PropagationTree& tree);

/// Elementwise max over the embeddings of every word on the path.
Eigen::RowVectorXd embed_path(const std::vector<int>& path,
                              const PropagationTree& tree,
                              const EmbeddingTable& table);

/// Path-count cap: keeps the `max_paths` longest paths, ties by leaf order.
PathSet build_pathset(const PropagationTree& tree, const EmbeddingTable& table,
                      int max_paths = 64);

/// Line-delimited JSON records {"id", "label", "nodes":[{"text","parent"}]}.
std::vector<PropagationTree> load_dataset(const std::string& path,
                                          Domain domain);

void save_dataset(const std::string& path,
                  const std::vector<PropagationTree>& trees,
                  bool write_labels);

/// Text format: "word v1 ... v_dim" per line. OOV vector is zero.
EmbeddingTable load_embeddings(const std::string& path, int expected_dim = 300);

/// Seeded uniform(-0.1, 0.1) rows, including the OOV row.
EmbeddingTable random_embeddings(const std::vector<std::string>& vocab,
                                 std::uint64_t seed, int dim = 300);

}  // namespace ucdrd
