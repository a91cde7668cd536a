#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cosma/autoencoder.hpp"
#include "cosma/semiregular.hpp"

namespace cosma {

struct Projection2D {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // dim x out_dims, orthonormal columns
  Eigen::VectorXd explained_variance;

  Eigen::MatrixXd project(const Eigen::MatrixXd& data) const;  // rows are samples
};

// PCA over the rows of `data`. Components are ordered by decreasing variance
// and signed so their largest-magnitude coordinate is positive. Throws
// DegenerateData when the data has no variance.
std::pair<Projection2D, Eigen::MatrixXd> pca_fit_project(const Eigen::MatrixXd& data,
                                                         int out_dims = 2);

// Zero mean and unit variance per column; constant columns are only centered.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& points);

// Symmetric chamfer distance between two densely subsampled polylines, one
// vertex per timestep. Throws TooShort for fewer than two timesteps.
double trajectory_chamfer_score(const Eigen::MatrixXd& shape_2d, const Eigen::MatrixXd& patch_2d,
                                int samples_per_segment = 20, bool standardize = true);

struct SvmConfig {
  double lambda = 1e-3;
  int epochs = 200;
  int folds = 5;
  std::uint64_t seed = 0;
};

// Linear soft-margin SVM (hinge loss plus L2) trained by stochastic
// subgradient descent on standardized features.
class LinearSvm {
 public:
  void fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, const SvmConfig& config);
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

 private:
  Eigen::VectorXd mean_, scale_, w_;
  double b_ = 0.0;
};

// Mean stratified k-fold cross-validation accuracy on labels in {0, 1}.
// Throws SingleClass when only one label occurs.
double svm_patch_score(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                       const SvmConfig& config = {});

// Two clusters by Lloyd iterations from a farthest-point start; the cluster
// holding row 0 gets label 0.
std::vector<int> two_means_labels(const Eigen::MatrixXd& data);

// Per patch latent (1 - alpha) a + alpha b and blended offsets, decoded onto
// the topology of `like`.
SemiRegularMesh latent_interpolate(const Eigen::MatrixXd& latents_a,
                                   const std::vector<Vec3>& offsets_a,
                                   const Eigen::MatrixXd& latents_b,
                                   const std::vector<Vec3>& offsets_b, double alpha,
                                   const SemiRegularMesh& like, const ModelParams& params);

struct EmbeddingRun {
  std::vector<Eigen::MatrixXd> latents;  // per timestep, patch_count x hr
  Eigen::MatrixXd shape_embedding;       // T x (patch_count * hr)
  Projection2D shape_projection;
  Eigen::MatrixXd shape_2d;              // T x 2
  std::vector<Eigen::MatrixXd> patch_2d; // per patch, T x 2

  int patch_count() const { return latents.empty() ? 0 : static_cast<int>(latents[0].rows()); }
};

// Shape embedding by concatenation and PCA; each patch trajectory is projected
// by its own PCA (a patch with constant latents maps to the origin).
EmbeddingRun embed_sequence(const std::vector<Eigen::MatrixXd>& latents);

}  // namespace cosma
