#include "ucdrd/model.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

namespace ucdrd {

namespace {
constexpr char kMagic[8] = {'U', 'C', 'D', 'R', 'D', 'C', 'K', '\0'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::pair<std::string, Tensor>> Model::named_tensors() const {
  auto out = encoder.named_tensors("encoder.");
  if (cam) {
    auto extra = cam->named_tensors("cam.");
    out.insert(out.end(), extra.begin(), extra.end());
  }
  out.emplace_back("classifier.w", classifier.w);
  out.emplace_back("classifier.b", classifier.b);
  return out;
}

void Model::zero_grad() {
  for (auto& [name, tensor] : named_tensors()) tensor.zero_grad();
}

Model init_model(const EncoderConfig& enc_cfg, int num_classes,
                 std::uint64_t seed, bool share_cam_weights) {
  Model m;
  m.encoder = init_encoder(enc_cfg, seed);
  if (!share_cam_weights) m.cam = init_encoder(enc_cfg, seed + 1);
  m.classifier = init_classifier(enc_cfg.dim, num_classes, seed + 2);
  return m;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("save_checkpoint: cannot open " + path);

  auto write_u32 = [&](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  auto write_u64 = [&](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  auto write_str = [&](const std::string& s) {
    write_u64(s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };

  out.write(kMagic, sizeof kMagic);
  write_u32(kVersion);
  write_u64(ckpt.tensors.size());
  for (const auto& [name, m] : ckpt.tensors) {
    write_str(name);
    write_u64(static_cast<std::uint64_t>(m.rows()));
    write_u64(static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  write_u64(ckpt.metadata.size());
  for (const auto& [key, value] : ckpt.metadata) {
    write_str(key);
    write_str(value);
  }
  if (!out) throw ContractError("save_checkpoint: write failed on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("load_checkpoint: cannot open " + path);

  auto read_u32 = [&]() {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  auto read_u64 = [&]() {
    std::uint64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  auto read_str = [&]() {
    std::string s(read_u64(), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
  };

  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, 7) != std::string(kMagic, 7))
    throw ContractError("load_checkpoint: " + path + " is not a checkpoint");
  if (read_u32() != kVersion)
    throw ContractError("load_checkpoint: unsupported version in " + path);

  Checkpoint ckpt;
  std::uint64_t n = read_u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = read_str();
    auto rows = static_cast<Eigen::Index>(read_u64());
    auto cols = static_cast<Eigen::Index>(read_u64());
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    ckpt.tensors.emplace(std::move(name), std::move(m));
  }
  std::uint64_t meta = read_u64();
  for (std::uint64_t i = 0; i < meta; ++i) {
    std::string key = read_str();
    ckpt.metadata.emplace(std::move(key), read_str());
  }
  if (!in) throw ContractError("load_checkpoint: truncated file " + path);
  return ckpt;
}

void store_model(Checkpoint& ckpt, const Model& model) {
  for (const auto& [name, tensor] : model.named_tensors())
    ckpt.tensors[name] = tensor.value();
}

void restore_model(Model& model, const Checkpoint& ckpt) {
  for (auto& [name, tensor] : model.named_tensors()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw ContractError("restore_model: checkpoint lacks tensor " + name);
    if (it->second.rows() != tensor.rows() ||
        it->second.cols() != tensor.cols())
      throw ContractError("restore_model: shape mismatch for " + name);
    tensor.value() = it->second;
  }
}

void store_embeddings(Checkpoint& ckpt, const EmbeddingTable& table) {
  ckpt.tensors["embedding.vectors"] = table.vectors;
  Matrix oov(1, table.dim);
  oov.row(0) = table.oov;
  ckpt.tensors["embedding.oov"] = oov;
  std::vector<std::string> words(table.vocab.size());
  for (const auto& [word, idx] : table.vocab) words[idx] = word;
  std::string joined;
  for (const auto& w : words) {
    joined += w;
    joined += '\n';
  }
  ckpt.metadata["embedding.vocab"] = joined;
}

EmbeddingTable restore_embeddings(const Checkpoint& ckpt) {
  auto vec = ckpt.tensors.find("embedding.vectors");
  auto oov = ckpt.tensors.find("embedding.oov");
  auto words = ckpt.metadata.find("embedding.vocab");
  if (vec == ckpt.tensors.end() || oov == ckpt.tensors.end() ||
      words == ckpt.metadata.end())
    throw ContractError("restore_embeddings: checkpoint has no embeddings");
  EmbeddingTable table;
  table.vectors = vec->second;
  table.dim = static_cast<int>(table.vectors.cols());
  table.oov = oov->second.row(0);
  std::istringstream in(words->second);
  std::string word;
  int idx = 0;
  while (std::getline(in, word))
    if (!word.empty()) table.vocab[word] = idx++;
  if (idx != table.vectors.rows())
    throw ContractError("restore_embeddings: vocab/matrix size mismatch");
  return table;
}

}  // namespace ucdrd
