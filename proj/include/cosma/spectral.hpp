#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cosma/mesh.hpp"
#include "cosma/patch.hpp"

namespace cosma {

template <class S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using SparseX = Eigen::SparseMatrix<S, Eigen::RowMajor>;

// Feature matrices hold one row per graph vertex and one column per channel.
// A batch stacks B such blocks vertically; graph operators act per block.

struct SpectralOperator {
  SparseX<double> laplacian;  // I - D^-1/2 A D^-1/2
  double lambda_max = 0.0;
  SparseX<double> scaled;     // 2 L / lambda_max - I

  int size() const { return static_cast<int>(laplacian.rows()); }
};

// Throws DisconnectedGraph for a disconnected graph or a self-loop.
SpectralOperator build_spectral_operator(int vertex_count, std::span<const Edge> adjacency);

// Largest eigenvalue of a symmetric positive semi-definite matrix by power
// iteration, to relative tolerance `tol`.
double power_iteration(const SparseX<double>& m, double tol = 1e-9);

template <class S>
struct ChebWeights {
  std::vector<MatrixX<S>> theta;  // K matrices, C_in x C_out
  VectorX<S> bias;                // C_out

  int K() const { return static_cast<int>(theta.size()); }
  int in() const { return theta.empty() ? 0 : static_cast<int>(theta[0].rows()); }
  int out() const { return static_cast<int>(bias.size()); }
  int parameter_count() const { return K() * in() * out() + out(); }
};
using ChebLayer = ChebWeights<double>;

template <class S>
struct ChebGrad {
  MatrixX<S> x;
  std::vector<MatrixX<S>> theta;
  VectorX<S> bias;
};

// y = sum_k T_k(L~) x theta_k + bias. When `basis` is given it receives the
// T_k(L~) x terms needed by cheb_conv_grad.
template <class S>
MatrixX<S> cheb_conv(const MatrixX<S>& x, const SparseX<S>& scaled, const ChebWeights<S>& layer,
                     std::vector<MatrixX<S>>* basis = nullptr);

template <class S>
ChebGrad<S> cheb_conv_grad(const std::vector<MatrixX<S>>& basis, const SparseX<S>& scaled,
                           const ChebWeights<S>& layer, const MatrixX<S>& upstream);

MatrixX<double> cheb_conv(const MatrixX<double>& x, const SpectralOperator& op,
                          const ChebLayer& layer);
ChebGrad<double> cheb_conv_grad(const MatrixX<double>& x, const SpectralOperator& op,
                                const ChebLayer& layer, const MatrixX<double>& upstream);

// Row-stochastic vertex map between two template levels.
struct LinearMap {
  SparseX<double> weights;  // rows: output vertices, cols: input vertices

  int rows() const { return static_cast<int>(weights.rows()); }
  int cols() const { return static_cast<int>(weights.cols()); }
};

// Pooling from level `level` to level + 1 and unpooling back; level is 0 or 1.
LinearMap build_pool_map(const PaddedPatchTemplate& tmpl, int level);
LinearMap build_unpool_map(const PaddedPatchTemplate& tmpl, int level);

// Applies a per-block operator to a vertically stacked batch.
template <class S>
MatrixX<S> apply_blocks(const SparseX<S>& op, const MatrixX<S>& x);

// Same with the transposed operator (the backward pass of apply_blocks).
template <class S>
MatrixX<S> apply_blocks_transposed(const SparseX<S>& op, const MatrixX<S>& x);

template <class S>
MatrixX<S> elu(const MatrixX<S>& x);

// Upstream gradient times elu'(x), with elu'(0) = 1.
template <class S>
MatrixX<S> elu_grad(const MatrixX<S>& x, const MatrixX<S>& upstream);

// Rows are samples: y = x W^T + b, W is out x in.
template <class S>
MatrixX<S> dense(const MatrixX<S>& x, const MatrixX<S>& w, const VectorX<S>& b);

template <class S>
struct DenseGrad {
  MatrixX<S> x;
  MatrixX<S> w;
  VectorX<S> b;
};

template <class S>
DenseGrad<S> dense_grad(const MatrixX<S>& x, const MatrixX<S>& w, const MatrixX<S>& upstream);

}  // namespace cosma
