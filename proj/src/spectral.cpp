#include "cosma/spectral.hpp"

#include <cmath>
#include <random>

#include "cosma/error.hpp"

namespace cosma {

double power_iteration(const SparseX<double>& m, double tol) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uniform(0.5, 1.5);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = (i % 2 ? -1.0 : 1.0) * uniform(rng);
  v.normalize();
  double lambda = 0.0;
  constexpr int kMaxIterations = 200000;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::VectorXd w = m * v;
    lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    if (residual <= tol * std::abs(lambda)) break;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return lambda;
}

SpectralOperator build_spectral_operator(int vertex_count, std::span<const Edge> adjacency) {
  const int n = vertex_count;
  if (n <= 0) throw Error(ErrorKind::DisconnectedGraph, "graph has no vertices");
  std::vector<std::vector<int>> nbr(n);
  for (const Edge& e : adjacency) {
    if (e.first == e.second) throw Error(ErrorKind::DisconnectedGraph, "self-loop");
    if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n) {
      throw Error(ErrorKind::ShapeMismatch, "edge index out of range");
    }
    nbr[e.first].push_back(e.second);
    nbr[e.second].push_back(e.first);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : nbr[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n || (n > 1 && adjacency.empty())) {
    throw Error(ErrorKind::DisconnectedGraph,
                std::to_string(n - reached) + " vertices unreachable from vertex 0");
  }

  SpectralOperator op;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    if (nbr[i].empty()) continue;
    trip.emplace_back(i, i, 1.0);
    for (int j : nbr[i]) {
      const double w = -1.0 / std::sqrt(static_cast<double>(nbr[i].size() * nbr[j].size()));
      trip.emplace_back(i, j, w);
    }
  }
  op.laplacian.resize(n, n);
  op.laplacian.setFromTriplets(trip.begin(), trip.end());
  op.lambda_max = n == 1 ? 0.0 : power_iteration(op.laplacian);
  SparseX<double> eye(n, n);
  eye.setIdentity();
  op.scaled = op.lambda_max > 0 ? SparseX<double>((2.0 / op.lambda_max) * op.laplacian - eye)
                                : SparseX<double>(-eye);
  op.scaled.makeCompressed();
  return op;
}

// -----------------------------------------------------------------------------
// CHEBYSHEV CONVOLUTION
// -----------------------------------------------------------------------------

template <class S>
MatrixX<S> apply_blocks(const SparseX<S>& op, const MatrixX<S>& x) {
  const Eigen::Index n = op.cols();
  if (n == 0 || x.rows() % n != 0) {
    throw Error(ErrorKind::ShapeMismatch, "feature rows " + std::to_string(x.rows()) +
                                              " are not a multiple of " + std::to_string(n));
  }
  const Eigen::Index blocks = x.rows() / n;
  MatrixX<S> y(blocks * op.rows(), x.cols());
  for (Eigen::Index b = 0; b < blocks; ++b) {
    y.middleRows(b * op.rows(), op.rows()).noalias() = op * x.middleRows(b * n, n);
  }
  return y;
}

template <class S>
MatrixX<S> apply_blocks_transposed(const SparseX<S>& op, const MatrixX<S>& x) {
  const Eigen::Index n = op.rows();
  if (n == 0 || x.rows() % n != 0) {
    throw Error(ErrorKind::ShapeMismatch, "feature rows " + std::to_string(x.rows()) +
                                              " are not a multiple of " + std::to_string(n));
  }
  const Eigen::Index blocks = x.rows() / n;
  MatrixX<S> y(blocks * op.cols(), x.cols());
  for (Eigen::Index b = 0; b < blocks; ++b) {
    y.middleRows(b * op.cols(), op.cols()).noalias() = op.transpose() * x.middleRows(b * n, n);
  }
  return y;
}

namespace {

template <class S>
void check_cheb_shapes(Eigen::Index rows, Eigen::Index cols, const SparseX<S>& scaled,
                       const ChebWeights<S>& layer) {
  if (layer.K() < 1) throw Error(ErrorKind::ShapeMismatch, "Chebyshev layer needs K >= 1");
  for (const auto& t : layer.theta) {
    if (t.rows() != layer.in() || t.cols() != layer.out()) {
      throw Error(ErrorKind::ShapeMismatch, "inconsistent Chebyshev coefficient shapes");
    }
  }
  if (cols != layer.in()) {
    throw Error(ErrorKind::ShapeMismatch, "layer expects " + std::to_string(layer.in()) +
                                              " channels, got " + std::to_string(cols));
  }
  if (scaled.rows() == 0 || rows % scaled.rows() != 0) {
    throw Error(ErrorKind::ShapeMismatch, "feature rows do not match the operator size");
  }
}

}  // namespace

template <class S>
MatrixX<S> cheb_conv(const MatrixX<S>& x, const SparseX<S>& scaled, const ChebWeights<S>& layer,
                     std::vector<MatrixX<S>>* basis) {
  check_cheb_shapes(x.rows(), x.cols(), scaled, layer);
  const int K = layer.K();
  std::vector<MatrixX<S>> local;
  std::vector<MatrixX<S>>& tx = basis ? *basis : local;
  tx.clear();
  tx.reserve(K);
  tx.push_back(x);
  if (K > 1) tx.push_back(apply_blocks(scaled, x));
  for (int k = 2; k < K; ++k) {
    tx.push_back(S(2) * apply_blocks(scaled, tx[k - 1]) - tx[k - 2]);
  }
  MatrixX<S> y = tx[0] * layer.theta[0];
  for (int k = 1; k < K; ++k) y.noalias() += tx[k] * layer.theta[k];
  y.rowwise() += layer.bias.transpose();
  return y;
}

template <class S>
ChebGrad<S> cheb_conv_grad(const std::vector<MatrixX<S>>& basis, const SparseX<S>& scaled,
                           const ChebWeights<S>& layer, const MatrixX<S>& upstream) {
  const int K = layer.K();
  if (static_cast<int>(basis.size()) != K) {
    throw Error(ErrorKind::ShapeMismatch, "Chebyshev basis size differs from K");
  }
  check_cheb_shapes(basis[0].rows(), basis[0].cols(), scaled, layer);
  if (upstream.rows() != basis[0].rows() || upstream.cols() != layer.out()) {
    throw Error(ErrorKind::ShapeMismatch, "upstream gradient shape differs from layer output");
  }
  ChebGrad<S> g;
  g.theta.resize(K);
  for (int k = 0; k < K; ++k) g.theta[k].noalias() = basis[k].transpose() * upstream;
  g.bias = upstream.colwise().sum().transpose();

  // adjoint of the recursion; L~ is symmetric so the same operator applies
  std::vector<MatrixX<S>> a(K);
  for (int k = 0; k < K; ++k) a[k].noalias() = upstream * layer.theta[k].transpose();
  for (int k = K - 1; k >= 2; --k) {
    a[k - 1] += S(2) * apply_blocks(scaled, a[k]);
    a[k - 2] -= a[k];
  }
  if (K > 1) a[0] += apply_blocks(scaled, a[1]);
  g.x = std::move(a[0]);
  return g;
}

MatrixX<double> cheb_conv(const MatrixX<double>& x, const SpectralOperator& op,
                          const ChebLayer& layer) {
  return cheb_conv<double>(x, op.scaled, layer, nullptr);
}

ChebGrad<double> cheb_conv_grad(const MatrixX<double>& x, const SpectralOperator& op,
                                const ChebLayer& layer, const MatrixX<double>& upstream) {
  std::vector<MatrixX<double>> basis;
  cheb_conv<double>(x, op.scaled, layer, &basis);
  return cheb_conv_grad<double>(basis, op.scaled, layer, upstream);
}

// -----------------------------------------------------------------------------
// POOLING
// -----------------------------------------------------------------------------

namespace {

void check_pool_level(int level) {
  if (level != 0 && level != 1) {
    throw Error(ErrorKind::UnsupportedLevel, "pooling level " + std::to_string(level) +
                                                 " (supported: 0, 1)");
  }
}

}  // namespace

LinearMap build_pool_map(const PaddedPatchTemplate& tmpl, int level) {
  check_pool_level(level);
  const TemplateLevel& fine = tmpl.levels[level];
  const TemplateLevel& coarse = tmpl.levels[level + 1];
  const int nf = static_cast<int>(fine.slots.size());
  std::vector<char> kept(nf, 0);
  for (int v : fine.keep) kept[v] = 1;
  std::vector<std::vector<int>> nbr(nf);
  for (const Edge& e : fine.adjacency) {
    nbr[e.first].push_back(e.second);
    nbr[e.second].push_back(e.first);
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < static_cast<int>(fine.keep.size()); ++j) {
    const int v = fine.keep[j];
    if (fine.slots[v] != coarse.slots[j]) {
      throw Error(ErrorKind::ShapeMismatch, "pooling keep list out of order");
    }
    std::vector<int> members{v};
    for (int w : nbr[v]) {
      if (!kept[w]) members.push_back(w);
    }
    for (int w : members) trip.emplace_back(j, w, 1.0 / static_cast<double>(members.size()));
  }
  LinearMap map;
  map.weights.resize(static_cast<int>(fine.keep.size()), nf);
  map.weights.setFromTriplets(trip.begin(), trip.end());
  return map;
}

LinearMap build_unpool_map(const PaddedPatchTemplate& tmpl, int level) {
  check_pool_level(level);
  const TemplateLevel& fine = tmpl.levels[level];
  const TemplateLevel& coarse = tmpl.levels[level + 1];
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < static_cast<int>(fine.unpool.size()); ++i) {
    const UnpoolParents& up = fine.unpool[i];
    if (up.parents.empty()) {
      trip.emplace_back(i, up.clamp, 1.0);
    } else {
      for (int p : up.parents) trip.emplace_back(i, p, 1.0 / static_cast<double>(up.parents.size()));
    }
  }
  LinearMap map;
  map.weights.resize(static_cast<int>(fine.slots.size()), static_cast<int>(coarse.slots.size()));
  map.weights.setFromTriplets(trip.begin(), trip.end());
  return map;
}

// -----------------------------------------------------------------------------
// ACTIVATION AND DENSE LAYERS
// -----------------------------------------------------------------------------

template <class S>
MatrixX<S> elu(const MatrixX<S>& x) {
  return x.unaryExpr([](S v) { return v > S(0) ? v : std::expm1(v); });
}

template <class S>
MatrixX<S> elu_grad(const MatrixX<S>& x, const MatrixX<S>& upstream) {
  if (x.rows() != upstream.rows() || x.cols() != upstream.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "elu gradient shape mismatch");
  }
  return upstream.binaryExpr(x, [](S g, S v) { return v >= S(0) ? g : g * std::exp(v); });
}

template <class S>
MatrixX<S> dense(const MatrixX<S>& x, const MatrixX<S>& w, const VectorX<S>& b) {
  if (x.cols() != w.cols() || w.rows() != b.size()) {
    throw Error(ErrorKind::ShapeMismatch, "dense layer expects " + std::to_string(w.cols()) +
                                              " inputs, got " + std::to_string(x.cols()));
  }
  MatrixX<S> y = x * w.transpose();
  y.rowwise() += b.transpose();
  return y;
}

template <class S>
DenseGrad<S> dense_grad(const MatrixX<S>& x, const MatrixX<S>& w, const MatrixX<S>& upstream) {
  if (x.cols() != w.cols() || upstream.cols() != w.rows() || upstream.rows() != x.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "dense gradient shape mismatch");
  }
  DenseGrad<S> g;
  g.x.noalias() = upstream * w;
  g.w.noalias() = upstream.transpose() * x;
  g.b = upstream.colwise().sum().transpose();
  return g;
}

#define COSMA_INSTANTIATE(S)                                                                    \
  template MatrixX<S> apply_blocks<S>(const SparseX<S>&, const MatrixX<S>&);                   \
  template MatrixX<S> apply_blocks_transposed<S>(const SparseX<S>&, const MatrixX<S>&);        \
  template MatrixX<S> cheb_conv<S>(const MatrixX<S>&, const SparseX<S>&, const ChebWeights<S>&, \
                                   std::vector<MatrixX<S>>*);                                  \
  template ChebGrad<S> cheb_conv_grad<S>(const std::vector<MatrixX<S>>&, const SparseX<S>&,    \
                                         const ChebWeights<S>&, const MatrixX<S>&);            \
  template MatrixX<S> elu<S>(const MatrixX<S>&);                                               \
  template MatrixX<S> elu_grad<S>(const MatrixX<S>&, const MatrixX<S>&);                       \
  template MatrixX<S> dense<S>(const MatrixX<S>&, const MatrixX<S>&, const VectorX<S>&);       \
  template DenseGrad<S> dense_grad<S>(const MatrixX<S>&, const MatrixX<S>&, const MatrixX<S>&);

COSMA_INSTANTIATE(float)
COSMA_INSTANTIATE(double)

#undef COSMA_INSTANTIATE

}  // namespace cosma
