#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "cosma/error.hpp"
#include "cosma/spectral.hpp"
#include "gradcheck.hpp"

using namespace cosma;
using Eigen::MatrixXd;

namespace {

ChebLayer random_layer(int K, int in, int out, std::mt19937_64& rng, bool with_bias = true) {
  ChebLayer l;
  for (int k = 0; k < K; ++k) l.theta.push_back(gradcheck::random_matrix(in, out, rng));
  l.bias = with_bias ? Eigen::VectorXd(gradcheck::random_matrix(out, 1, rng)) : Eigen::VectorXd::Zero(out);
  return l;
}

MatrixXd dense_oracle(const MatrixXd& x, const MatrixXd& lt, const ChebLayer& layer) {
  const int n = static_cast<int>(lt.rows());
  std::vector<MatrixXd> T{MatrixXd::Identity(n, n), lt};
  for (int k = 2; k < layer.K(); ++k) T.push_back(2 * lt * T[k - 1] - T[k - 2]);
  MatrixXd y = MatrixXd::Zero(n, layer.out());
  for (int k = 0; k < layer.K(); ++k) y += T[k] * x * layer.theta[k];
  return y.rowwise() + layer.bias.transpose();
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("path graph operator") {
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const SpectralOperator op = build_spectral_operator(3, path);
  CHECK(op.lambda_max == doctest::Approx(2.0).epsilon(1e-9));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es{MatrixXd(op.laplacian)};
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(es.eigenvalues()(0)) <= 1e-12);
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(2.0));
  CHECK(max_abs(MatrixXd(op.scaled) - (MatrixXd(op.laplacian) - MatrixXd::Identity(3, 3))) <= 1e-9);
}

TEST_CASE("operator spectrum bounds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 5 + static_cast<int>(seed);
    const auto edges = gradcheck::random_graph(n, n, seed);
    const SpectralOperator op = build_spectral_operator(n, edges);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es{MatrixXd(op.laplacian)};
    CHECK(std::abs(es.eigenvalues().maxCoeff() - op.lambda_max) <= 1e-8 * op.lambda_max);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= 2 + 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> st{MatrixXd(op.scaled)};
    CHECK(st.eigenvalues().minCoeff() >= -1 - 1e-9);
    CHECK(st.eigenvalues().maxCoeff() <= 1 + 1e-9);
    std::mt19937_64 rng(seed);
    for (int r = 0; r < 5; ++r) {
      const Eigen::VectorXd v = gradcheck::random_matrix(n, 1, rng);
      const double q = v.dot(op.scaled * v) / v.squaredNorm();
      CHECK(std::abs(q) <= 1 + 1e-9);
    }
  }
  const PaddedPatchTemplate& t = patch_template(4);
  const SpectralOperator op = build_spectral_operator(t.total_count, t.adjacency);
  CHECK(op.size() == 267);
  CHECK(op.lambda_max > 0);
  CHECK(op.lambda_max <= 2);
}

TEST_CASE("disconnected graphs are rejected") {
  const std::vector<Edge> split{{0, 1}, {2, 3}};
  const std::vector<Edge> loop{{0, 1}, {1, 1}, {1, 2}};
  for (const auto& [n, edges] : {std::pair{4, split}, std::pair{3, loop}, std::pair{3, std::vector<Edge>{{0, 1}}}}) {
    try {
      build_spectral_operator(n, edges);
      FAIL("expected DisconnectedGraph");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DisconnectedGraph);
    }
  }
}

TEST_CASE("chebyshev recursion matches the dense polynomial") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = 4 + static_cast<int>(seed % 17);
    const SpectralOperator op = build_spectral_operator(n, gradcheck::random_graph(n, n / 2, seed));
    const int K = 1 + static_cast<int>(seed % 6);
    const ChebLayer layer = random_layer(K, 3, 4, rng);
    const MatrixXd x = gradcheck::random_matrix(n, 3, rng);
    CHECK(max_abs(cheb_conv(x, op, layer) - dense_oracle(x, MatrixXd(op.scaled), layer)) <= 1e-12);
  }
  // K = 3 with the closed form T_2 = 2 L~^2 - I
  std::mt19937_64 rng(99);
  const SpectralOperator op = build_spectral_operator(10, gradcheck::random_graph(10, 6, 99));
  const ChebLayer layer = random_layer(3, 2, 2, rng);
  const MatrixXd x = gradcheck::random_matrix(10, 2, rng);
  const MatrixXd lt(op.scaled);
  const MatrixXd t2 = 2 * lt * lt - MatrixXd::Identity(10, 10);
  MatrixXd y = x * layer.theta[0] + lt * x * layer.theta[1] + t2 * x * layer.theta[2];
  y.rowwise() += layer.bias.transpose();
  CHECK(max_abs(cheb_conv(x, op, layer) - y) <= 1e-12);
}

TEST_CASE("chebyshev layer basics") {
  std::mt19937_64 rng(3);
  const SpectralOperator op = build_spectral_operator(6, gradcheck::random_graph(6, 4, 3));
  const ChebLayer k1 = random_layer(1, 3, 5, rng);
  const MatrixXd x = gradcheck::random_matrix(6, 3, rng);
  MatrixXd expected = x * k1.theta[0];
  expected.rowwise() += k1.bias.transpose();
  CHECK(max_abs(cheb_conv(x, op, k1) - expected) <= 1e-12);

  CHECK(random_layer(6, 3, 16, rng).parameter_count() == 304);

  const ChebLayer lin = random_layer(4, 3, 2, rng, false);
  const MatrixXd x2 = gradcheck::random_matrix(6, 3, rng);
  CHECK(max_abs(cheb_conv(MatrixXd(2 * x - 3 * x2), op, lin) -
                (2 * cheb_conv(x, op, lin) - 3 * cheb_conv(x2, op, lin))) <= 1e-12);

  const ChebLayer l = random_layer(4, 3, 2, rng);
  const ChebGrad<double> zero = cheb_conv_grad(x, op, l, MatrixXd::Zero(6, 2));
  CHECK(max_abs(zero.x) == 0.0);
  CHECK(zero.bias.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& t : zero.theta) CHECK(max_abs(t) == 0.0);

  const MatrixXd up = gradcheck::random_matrix(6, 2, rng);
  const ChebGrad<double> g = cheb_conv_grad(x, op, l, up);
  CHECK((g.bias - up.colwise().sum().transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  try {
    cheb_conv(MatrixXd(gradcheck::random_matrix(5, 3, rng)), op, l);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("chebyshev gradients against finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const int n = 8 + static_cast<int>(seed);
    const SpectralOperator op = build_spectral_operator(n, gradcheck::random_graph(n, n, seed));
    ChebLayer layer = random_layer(1 + static_cast<int>(seed % 6), 3, 4, rng);
    MatrixXd x = gradcheck::random_matrix(n, 3, rng);
    const MatrixXd up = gradcheck::random_matrix(n, 4, rng);
    const auto f = [&] { return cheb_conv(x, op, layer).cwiseProduct(up).sum(); };
    const ChebGrad<double> g = cheb_conv_grad(x, op, layer, up);
    CHECK(gradcheck::worst_relative_error(x, g.x, f) < 1e-6);
    for (int k = 0; k < layer.K(); ++k) CHECK(gradcheck::worst_relative_error(layer.theta[k], g.theta[k], f) < 1e-6);
    CHECK(gradcheck::worst_relative_error(layer.bias, g.bias, f) < 1e-6);
  }
}

TEST_CASE("pool and unpool maps are row stochastic") {
  for (int rl = 2; rl <= 4; ++rl) {
    const PaddedPatchTemplate& t = patch_template(rl);
    for (int level = 0; level < 2; ++level) {
      const LinearMap pool = build_pool_map(t, level);
      const LinearMap unpool = build_unpool_map(t, level);
      CHECK(pool.cols() == static_cast<int>(t.levels[level].slots.size()));
      CHECK(pool.rows() == static_cast<int>(t.levels[level + 1].slots.size()));
      CHECK(unpool.rows() == pool.cols());
      CHECK(unpool.cols() == pool.rows());
      for (const LinearMap* m : {&pool, &unpool}) {
        const MatrixXd d(m->weights);
        CHECK((d.rowwise().sum().array() - 1).abs().maxCoeff() <= 1e-12);
        CHECK(d.minCoeff() >= 0);
        const Eigen::VectorXd c = Eigen::VectorXd::Constant(m->cols(), 2.5);
        CHECK(((m->weights * c).array() - 2.5).abs().maxCoeff() <= 1e-12);
      }
    }
    const MatrixXd both = MatrixXd(build_pool_map(t, 1).weights) * MatrixXd(build_pool_map(t, 0).weights);
    CHECK(both.cols() == t.total_count);
    CHECK((both.rowwise().sum().array() - 1).abs().maxCoeff() <= 1e-12);
  }
  const PaddedPatchTemplate& t = patch_template(4);
  CHECK(build_pool_map(t, 0).rows() == 75);
  CHECK(build_pool_map(t, 1).rows() == 15);
  // an interior kept vertex has six removed neighbors
  const int slot = t.slot_of({8, 4});
  const auto& keep = t.levels[0].keep;
  const int row = static_cast<int>(std::find(keep.begin(), keep.end(), slot) - keep.begin());
  const MatrixXd pool(build_pool_map(t, 0).weights);
  int nonzero = 0;
  for (int c = 0; c < pool.cols(); ++c) {
    if (pool(row, c) != 0) {
      ++nonzero;
      CHECK(pool(row, c) == doctest::Approx(1.0 / 7));
    }
  }
  CHECK(nonzero == 7);
  for (int bad : {-1, 2}) {
    try {
      build_pool_map(t, bad);
      FAIL("expected UnsupportedLevel");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnsupportedLevel);
    }
  }
  CHECK_THROWS_AS(build_unpool_map(t, 2), Error);
}

TEST_CASE("block application") {
  std::mt19937_64 rng(5);
  const SpectralOperator op = build_spectral_operator(5, gradcheck::random_graph(5, 3, 5));
  const MatrixXd x = gradcheck::random_matrix(15, 2, rng);
  const MatrixXd y = apply_blocks<double>(op.scaled, x);
  const MatrixXd yt = apply_blocks_transposed<double>(op.scaled, x);
  for (int b = 0; b < 3; ++b) {
    CHECK(max_abs(y.middleRows(5 * b, 5) - MatrixXd(op.scaled) * x.middleRows(5 * b, 5)) <= 1e-12);
    CHECK(max_abs(yt.middleRows(5 * b, 5) - MatrixXd(op.scaled).transpose() * x.middleRows(5 * b, 5)) <= 1e-12);
  }
}

TEST_CASE("elu and dense") {
  MatrixXd z(1, 3);
  z << 0.0, -1.0, 2.0;
  const MatrixXd e = elu(z);
  CHECK(e(0, 0) == 0.0);
  CHECK(e(0, 1) == doctest::Approx(std::exp(-1.0) - 1));
  CHECK(e(0, 2) == 2.0);
  CHECK(elu_grad<double>(z, MatrixXd::Ones(1, 3))(0, 0) == 1.0);

  std::mt19937_64 rng(8);
  MatrixXd w = gradcheck::random_matrix(10, 480, rng);
  Eigen::VectorXd b = gradcheck::random_matrix(10, 1, rng);
  CHECK(w.size() + b.size() == 4810);

  MatrixXd x = gradcheck::random_matrix(3, 7, rng);
  MatrixXd w2 = gradcheck::random_matrix(4, 7, rng);
  Eigen::VectorXd b2 = gradcheck::random_matrix(4, 1, rng);
  const MatrixXd up = gradcheck::random_matrix(3, 4, rng);
  const auto f = [&] { return dense(x, w2, b2).cwiseProduct(up).sum(); };
  const DenseGrad<double> g = dense_grad(x, w2, up);
  CHECK(gradcheck::worst_relative_error(x, g.x, f) < 1e-6);
  CHECK(gradcheck::worst_relative_error(w2, g.w, f) < 1e-6);
  CHECK(gradcheck::worst_relative_error(b2, g.b, f) < 1e-6);

  MatrixXd xe = gradcheck::random_matrix(4, 5, rng);
  const MatrixXd ue = gradcheck::random_matrix(4, 5, rng);
  const auto fe = [&] { return elu(xe).cwiseProduct(ue).sum(); };
  CHECK(gradcheck::worst_relative_error(xe, elu_grad(xe, ue), fe) < 1e-6);
}
