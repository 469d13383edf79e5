#include <doctest.h>

#include "test_util.hpp"
#include "ucdrd/encoder.hpp"

using namespace ucdrd;
using testutil::random_matrix;
using testutil::to_oracle;

namespace {

EncoderConfig small_cfg() { return EncoderConfig{12, 2, 16, false}; }

PathSet pathset_from(const Matrix& m) { return PathSet{"p", Tensor(m)}; }

// Runs one attention head through the scalar-loop oracle.
oracle::Mat oracle_head(const Matrix& x, const EncoderParams& p, int h) {
  auto q = oracle::matmul(to_oracle(x), to_oracle(p.w_q[h].value()));
  auto k = oracle::matmul(to_oracle(x), to_oracle(p.w_k[h].value()));
  auto v = oracle::matmul(to_oracle(x), to_oracle(p.w_v[h].value()));
  return oracle::attention(q, k, v, p.head_dim());
}

}  // namespace

TEST_CASE("single-row attention returns the value projection") {
  auto params = init_encoder(small_cfg(), 1);
  std::mt19937_64 rng(2);
  Tensor x(random_matrix(rng, 1, 12));
  Matrix head = self_attention_head(x, params, 0).value();
  Matrix expected = x.value() * params.w_v[0].value();
  CHECK(head.isApprox(expected, 1e-12));
}

TEST_CASE("zero query weights give uniform attention") {
  auto params = init_encoder(small_cfg(), 3);
  params.w_q[0].value().setZero();
  std::mt19937_64 rng(4);
  Tensor x(random_matrix(rng, 5, 12));
  Matrix head = self_attention_head(x, params, 0).value();
  Matrix values = x.value() * params.w_v[0].value();
  Matrix mean = values.colwise().mean();
  for (int i = 0; i < 5; ++i) CHECK(head.row(i).isApprox(mean.row(0), 1e-10));
}

TEST_CASE("attention head matches naive-loop oracle") {
  auto params = init_encoder(small_cfg(), 5);
  std::mt19937_64 rng(6);
  Matrix x = random_matrix(rng, 3, 12);
  Matrix got = self_attention_head(Tensor(x), params, 0).value();
  auto want = oracle_head(x, params, 0);
  for (int i = 0; i < got.rows(); ++i)
    for (int j = 0; j < got.cols(); ++j)
      CHECK(got(i, j) == doctest::Approx(want[i][j]).epsilon(1e-10));
}

TEST_CASE("mha with one head and identity W_O equals the head") {
  EncoderConfig cfg{12, 1, 16, false};
  auto params = init_encoder(cfg, 7);
  params.w_o.value() = Matrix::Identity(12, 12);
  std::mt19937_64 rng(8);
  Tensor x(random_matrix(rng, 4, 12));
  CHECK(mha(x, params).value().isApprox(
      self_attention_head(x, params, 0).value(), 1e-12));
}

TEST_CASE("mha matches loop oracle and keeps shape") {
  auto params = init_encoder(small_cfg(), 9);
  std::mt19937_64 rng(10);
  Matrix x = random_matrix(rng, 6, 12);
  Matrix got = mha(Tensor(x), params).value();
  REQUIRE(got.rows() == 6);
  REQUIRE(got.cols() == 12);

  auto h0 = oracle_head(x, params, 0);
  auto h1 = oracle_head(x, params, 1);
  oracle::Mat concat(6, oracle::Vec(12));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      concat[i][j] = h0[i][j];
      concat[i][6 + j] = h1[i][j];
    }
  auto want = oracle::matmul(concat, to_oracle(params.w_o.value()));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 12; ++j)
      CHECK(got(i, j) == doctest::Approx(want[i][j]).epsilon(1e-10));
}

TEST_CASE("encode with uniform attention is permutation invariant") {
  auto params = init_encoder(small_cfg(), 11);
  for (auto& wq : params.w_q) wq.value().setZero();
  std::mt19937_64 rng(12);
  Matrix x = random_matrix(rng, 4, 12);
  Matrix permuted(4, 12);
  permuted << x.row(2), x.row(0), x.row(3), x.row(1);
  Matrix a = encode(pathset_from(x), params).vector.value();
  Matrix b = encode(pathset_from(permuted), params).vector.value();
  CHECK(a.isApprox(b, 1e-12));
}

TEST_CASE("encode is finite on all-zero input and survives x1000 scaling") {
  auto params = init_encoder(small_cfg(), 13);
  CHECK(encode(pathset_from(Matrix::Zero(3, 12)), params)
            .vector.value()
            .allFinite());
  std::mt19937_64 rng(14);
  Matrix x = 1000.0 * random_matrix(rng, 3, 12);
  CHECK(encode(pathset_from(x), params).vector.value().allFinite());
}

TEST_CASE("encode gradients match finite differences for every group") {
  auto params = init_encoder(small_cfg(), 15);
  std::mt19937_64 rng(16);
  Matrix x = random_matrix(rng, 3, 12);
  Tensor probe(random_matrix(rng, 1, 12));
  auto loss = [&] {
    return sum(mul(encode(pathset_from(x), params).vector, probe));
  };
  for (auto& [name, p] : params.named_tensors("")) {
    INFO(name);
    CHECK(testutil::fd_max_rel_err(p, loss) < 1e-4);
  }
}

TEST_CASE("attention rows sum to one for every head") {
  auto params = init_encoder(small_cfg(), 17);
  std::mt19937_64 rng(18);
  Tensor x(random_matrix(rng, 5, 12));
  for (int h = 0; h < 2; ++h) {
    Tensor q = matmul(x, params.w_q[h]);
    Tensor k = matmul(x, params.w_k[h]);
    Matrix scores =
        softmax_rows(scale(matmul(q, transpose(k)),
                           1.0 / std::sqrt((double)params.head_dim())))
            .value();
    for (int i = 0; i < scores.rows(); ++i)
      CHECK(scores.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("init_encoder rejects non-divisible head counts") {
  CHECK_THROWS_AS(init_encoder(EncoderConfig{10, 3, 16, false}, 1),
                  ContractError);
}
