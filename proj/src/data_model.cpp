#include "ucdrd/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ucdrd {

namespace {

bool looks_like_url(const std::string& tok) {
  return tok.rfind("http://", 0) == 0 || tok.rfind("https://", 0) == 0 ||
         tok.rfind("www.", 0) == 0;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (looks_like_url(tok))
      out.push_back("<url>");
    else if (tok[0] == '@' && tok.size() > 1)
      out.push_back("<user>");
    else
      out.push_back(tok);
  }
  if (out.empty()) out.push_back("<oov>");
  return out;
}

std::vector<std::vector<int>> extract_paths(const PropagationTree& tree) {
  const int n = static_cast<int>(tree.nodes.size());
  if (n == 0)
    throw ContractError("extract_paths: tree " + tree.id + " has no nodes");

  std::vector<std::vector<int>> children(n);
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const auto& p = tree.nodes[i].parent;
    if (!p) {
      ++roots;
      continue;
    }
    if (*p < 0 || *p >= n)
      throw ContractError("extract_paths: tree " + tree.id + " node " +
                          std::to_string(i) + " has out-of-range parent");
    children[*p].push_back(i);
  }
  if (roots != 1)
    throw ContractError("extract_paths: tree " + tree.id + " has " +
                        std::to_string(roots) + " roots, expected 1");

  // Walk from every node to the root to reject cycles / disconnections.
  for (int i = 0; i < n; ++i) {
    int cur = i, steps = 0;
    while (tree.nodes[cur].parent) {
      cur = *tree.nodes[cur].parent;
      if (++steps > n)
        throw ContractError("extract_paths: tree " + tree.id +
                            " has a cycle through node " + std::to_string(i));
    }
    if (cur != tree.root)
      throw ContractError("extract_paths: tree " + tree.id + " node " +
                          std::to_string(i) + " not connected to the root");
  }

  std::vector<int> leaves;
  for (int i = 0; i < n; ++i)
    if (children[i].empty()) leaves.push_back(i);
  std::sort(leaves.begin(), leaves.end(), [&](int a, int b) {
    if (tree.nodes[a].timestamp_rank != tree.nodes[b].timestamp_rank)
      return tree.nodes[a].timestamp_rank < tree.nodes[b].timestamp_rank;
    return a < b;
  });

  std::vector<std::vector<int>> paths;
  paths.reserve(leaves.size());
  for (int leaf : leaves) {
    std::vector<int> path;
    for (int cur = leaf;; cur = *tree.nodes[cur].parent) {
      path.push_back(cur);
      if (!tree.nodes[cur].parent) break;
    }
    std::reverse(path.begin(), path.end());
    paths.push_back(std::move(path));
  }
  return paths;
}

Eigen::RowVectorXd embed_path(const std::vector<int>& path,
                              const PropagationTree& tree,
                              const EmbeddingTable& table) {
  if (path.empty()) throw ContractError("embed_path: empty path");
  Eigen::RowVectorXd acc;
  bool first = true;
  for (int node : path) {
    for (const auto& word : tree.nodes[node].tokens) {
      Eigen::RowVectorXd vec = table.lookup(word);
      if (first) {
        acc = vec;
        first = false;
      } else {
        acc = acc.cwiseMax(vec);
      }
    }
  }
  if (first) throw ContractError("embed_path: path has no tokens");
  return acc;
}

PathSet build_pathset(const PropagationTree& tree, const EmbeddingTable& table,
                      int max_paths) {
  auto paths = extract_paths(tree);
  if (static_cast<int>(paths.size()) > max_paths) {
    // Keep the longest paths; stable sort keeps leaf order among ties.
    std::vector<int> order(paths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return paths[a].size() > paths[b].size();
    });
    order.resize(max_paths);
    std::sort(order.begin(), order.end());  // restore leaf order
    std::vector<std::vector<int>> kept;
    kept.reserve(max_paths);
    for (int idx : order) kept.push_back(std::move(paths[idx]));
    paths = std::move(kept);
  }

  Matrix m(static_cast<Eigen::Index>(paths.size()), table.dim);
  for (size_t j = 0; j < paths.size(); ++j)
    m.row(static_cast<Eigen::Index>(j)) = embed_path(paths[j], tree, table);
  return PathSet{tree.id, Tensor(std::move(m))};
}

std::vector<PropagationTree> load_dataset(const std::string& path,
                                          Domain domain) {
  std::ifstream in(path);
  if (!in) throw ContractError("load_dataset: cannot open " + path);

  std::vector<PropagationTree> trees;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ContractError("load_dataset: " + path + ":" +
                          std::to_string(lineno) + ": " + e.what());
    }
    PropagationTree tree;
    tree.domain = domain;
    try {
      tree.id = rec.at("id").get<std::string>();
      if (rec.contains("label") && !rec["label"].is_null())
        tree.label = rec["label"].get<int>();
      int rank = 0;
      for (const auto& node : rec.at("nodes")) {
        PostNode pn;
        pn.tokens = tokenize(node.at("text").get<std::string>());
        if (node.contains("parent") && !node["parent"].is_null())
          pn.parent = node["parent"].get<int>();
        pn.timestamp_rank = rank++;
        tree.nodes.push_back(std::move(pn));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ContractError("load_dataset: " + path + ":" +
                          std::to_string(lineno) + ": " + e.what());
    }
    if (tree.nodes.empty() || tree.nodes[0].parent)
      throw ContractError("load_dataset: tree " + tree.id +
                          ": node 0 must be the root");
    tree.root = 0;
    extract_paths(tree);  // validates structure
    if (domain == Domain::source && !tree.label)
      throw ContractError("load_dataset: source tree " + tree.id +
                          " lacks a label");
    trees.push_back(std::move(tree));
  }
  return trees;
}

void save_dataset(const std::string& path,
                  const std::vector<PropagationTree>& trees,
                  bool write_labels) {
  std::ofstream out(path);
  if (!out) throw ContractError("save_dataset: cannot open " + path);
  for (const auto& tree : trees) {
    nlohmann::json rec;
    rec["id"] = tree.id;
    if (write_labels && tree.label)
      rec["label"] = *tree.label;
    else
      rec["label"] = nullptr;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      nlohmann::json jn;
      std::string text;
      for (size_t i = 0; i < node.tokens.size(); ++i) {
        if (i) text += ' ';
        text += node.tokens[i];
      }
      jn["text"] = text;
      if (node.parent)
        jn["parent"] = *node.parent;
      else
        jn["parent"] = nullptr;
      nodes.push_back(std::move(jn));
    }
    rec["nodes"] = std::move(nodes);
    out << rec.dump() << '\n';
  }
}

EmbeddingTable load_embeddings(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ContractError("load_embeddings: cannot open " + path);

  std::vector<std::string> words;
  std::vector<Eigen::RowVectorXd> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    Eigen::RowVectorXd vec(expected_dim);
    int k = 0;
    double v;
    while (ss >> v) {
      if (k >= expected_dim) break;
      vec(k++) = v;
    }
    if (k != expected_dim || (ss >> v))
      throw ContractError("load_embeddings: " + path + ":" +
                          std::to_string(lineno) + ": expected " +
                          std::to_string(expected_dim) + " values");
    words.push_back(std::move(word));
    rows.push_back(std::move(vec));
  }

  EmbeddingTable table;
  table.dim = expected_dim;
  table.vectors.resize(static_cast<Eigen::Index>(rows.size()), expected_dim);
  for (size_t i = 0; i < rows.size(); ++i) {
    table.vocab[words[i]] = static_cast<int>(i);
    table.vectors.row(static_cast<Eigen::Index>(i)) = rows[i];
  }
  table.oov = Eigen::RowVectorXd::Zero(expected_dim);
  return table;
}

EmbeddingTable random_embeddings(const std::vector<std::string>& vocab,
                                 std::uint64_t seed, int dim) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);

  EmbeddingTable table;
  table.dim = dim;
  table.vectors.resize(static_cast<Eigen::Index>(vocab.size()), dim);
  for (size_t i = 0; i < vocab.size(); ++i) {
    table.vocab[vocab[i]] = static_cast<int>(i);
    for (int j = 0; j < dim; ++j)
      table.vectors(static_cast<Eigen::Index>(i), j) = dist(rng);
  }
  table.oov.resize(dim);
  for (int j = 0; j < dim; ++j) table.oov(j) = dist(rng);
  return table;
}

}  // namespace ucdrd
