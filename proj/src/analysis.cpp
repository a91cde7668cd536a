#include "cosma/analysis.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SVD>

#include "cosma/error.hpp"

namespace cosma {

Eigen::MatrixXd Projection2D::project(const Eigen::MatrixXd& data) const {
  if (data.cols() != mean.size()) {
    throw Error(ErrorKind::ShapeMismatch, "projection expects dimension " +
                                              std::to_string(mean.size()));
  }
  return (data.rowwise() - mean.transpose()) * components;
}

std::pair<Projection2D, Eigen::MatrixXd> pca_fit_project(const Eigen::MatrixXd& data,
                                                         int out_dims) {
  const Eigen::Index n = data.rows(), d = data.cols();
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "PCA needs at least 3 samples");
  if (out_dims < 1 || d < out_dims) {
    throw Error(ErrorKind::InvalidArgument, "data dimension " + std::to_string(d) +
                                                " is below the output dimension");
  }
  Projection2D proj;
  proj.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - proj.mean.transpose();
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double magnitude = std::max(1.0, data.cwiseAbs().maxCoeff());
  if (sigma.size() == 0 || sigma[0] <= 1e-12 * magnitude * std::sqrt(static_cast<double>(n))) {
    throw Error(ErrorKind::DegenerateData, "data has zero variance");
  }
  proj.components.resize(d, out_dims);
  proj.explained_variance.resize(out_dims);
  for (int c = 0; c < out_dims; ++c) {
    Eigen::VectorXd v = c < svd.matrixV().cols() ? Eigen::VectorXd(svd.matrixV().col(c))
                                                 : Eigen::VectorXd::Zero(d);
    const double s = c < sigma.size() ? sigma[c] : 0.0;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    proj.components.col(c) = v;
    proj.explained_variance[c] = s * s / static_cast<double>(n - 1);
  }
  Eigen::MatrixXd projected = centered * proj.components;
  return {std::move(proj), std::move(projected)};
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd out = points.rowwise() - points.colwise().mean();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sd = std::sqrt(out.col(c).squaredNorm() / static_cast<double>(out.rows()));
    if (sd > 0) out.col(c) /= sd;
  }
  return out;
}

namespace {

Eigen::MatrixXd subsample_polyline(const Eigen::MatrixXd& p, int per_segment) {
  const Eigen::Index t = p.rows();
  Eigen::MatrixXd out((t - 1) * per_segment, p.cols());
  for (Eigen::Index s = 0; s + 1 < t; ++s) {
    for (int j = 0; j < per_segment; ++j) {
      const double u = static_cast<double>(j) / (per_segment - 1);
      out.row(s * per_segment + j) = (1 - u) * p.row(s) + u * p.row(s + 1);
    }
  }
  return out;
}

double one_sided(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    sum += (b.rowwise() - a.row(i)).rowwise().squaredNorm().minCoeff();
  }
  return sum / static_cast<double>(a.rows());
}

}  // namespace

double trajectory_chamfer_score(const Eigen::MatrixXd& shape_2d, const Eigen::MatrixXd& patch_2d,
                                int samples_per_segment, bool standardize) {
  if (shape_2d.rows() < 2 || patch_2d.rows() < 2) {
    throw Error(ErrorKind::TooShort, "trajectories need at least two timesteps");
  }
  if (shape_2d.cols() != patch_2d.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "trajectories differ in dimension");
  }
  if (samples_per_segment < 2) {
    throw Error(ErrorKind::InvalidArgument, "at least 2 samples per segment");
  }
  const Eigen::MatrixXd a =
      subsample_polyline(standardize ? standardize_columns(shape_2d) : shape_2d, samples_per_segment);
  const Eigen::MatrixXd b =
      subsample_polyline(standardize ? standardize_columns(patch_2d) : patch_2d, samples_per_segment);
  return one_sided(a, b) + one_sided(b, a);
}

// -----------------------------------------------------------------------------
// LINEAR SVM
// -----------------------------------------------------------------------------

void LinearSvm::fit(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                    const SvmConfig& config) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n || n == 0) {
    throw Error(ErrorKind::ShapeMismatch, "one label per sample expected");
  }
  mean_ = x.colwise().mean().transpose();
  scale_.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double sd = std::sqrt((x.col(c).array() - mean_[c]).square().sum() / static_cast<double>(n));
    scale_[c] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  const Eigen::MatrixXd z = (x.rowwise() - mean_.transpose()) * scale_.asDiagonal();

  // Pegasos on the features augmented with a constant 1; the last half of the
  // iterates is averaged
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1), avg = Eigen::VectorXd::Zero(d + 1);
  std::mt19937_64 rng(config.seed);
  const long total = static_cast<long>(config.epochs) * n;
  const double radius = 1.0 / std::sqrt(config.lambda);
  long averaged = 0;
  for (long t = 1; t <= total; ++t) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
    const double y = labels[i] ? 1.0 : -1.0;
    const double eta = 1.0 / (config.lambda * static_cast<double>(t));
    const double margin = y * (z.row(i).dot(w.head(d)) + w[d]);
    w *= 1.0 - eta * config.lambda;
    if (margin < 1) {
      w.head(d) += eta * y * z.row(i).transpose();
      w[d] += eta * y;
    }
    const double norm = w.norm();
    if (norm > radius) w *= radius / norm;
    if (2 * t > total) {
      avg += w;
      ++averaged;
    }
  }
  if (averaged > 0) w = avg / static_cast<double>(averaged);
  w_ = w.head(d);
  b_ = w[d];
}

std::vector<int> LinearSvm::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean_.size()) throw Error(ErrorKind::ShapeMismatch, "feature dimension differs");
  const Eigen::VectorXd s = ((x.rowwise() - mean_.transpose()) * scale_.asDiagonal()) * w_;
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = s[i] + b_ > 0 ? 1 : 0;
  return out;
}

double svm_patch_score(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                       const SvmConfig& config) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "one label per sample expected");
  }
  std::array<std::vector<int>, 2> members;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
    members[labels[i]].push_back(i);
  }
  if (members[0].empty() || members[1].empty()) {
    throw Error(ErrorKind::SingleClass, "both classes need samples");
  }
  if (config.folds < 2) throw Error(ErrorKind::InvalidArgument, "at least 2 folds");

  // stratified assignment: shuffle each class, deal round-robin into folds
  std::mt19937_64 rng(config.seed);
  std::vector<int> fold(labels.size());
  for (auto& m : members) {
    for (size_t i = m.size(); i > 1; --i) std::swap(m[i - 1], m[rng() % i]);
    for (size_t i = 0; i < m.size(); ++i) fold[m[i]] = static_cast<int>(i % config.folds);
  }
  double sum = 0.0;
  int used = 0;
  for (int f = 0; f < config.folds; ++f) {
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) (fold[i] == f ? test_idx : train_idx).push_back(i);
    if (test_idx.empty()) continue;
    std::vector<int> train_labels;
    for (int i : train_idx) train_labels.push_back(labels[i]);
    LinearSvm svm;
    svm.fit(features(train_idx, Eigen::all), train_labels, config);
    const auto pred = svm.predict(features(test_idx, Eigen::all));
    int correct = 0;
    for (size_t j = 0; j < test_idx.size(); ++j) correct += pred[j] == labels[test_idx[j]];
    sum += static_cast<double>(correct) / static_cast<double>(test_idx.size());
    ++used;
  }
  return sum / used;
}

std::vector<int> two_means_labels(const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "2-means needs at least 2 samples");
  Eigen::Index far = 0;
  (data.rowwise() - data.row(0)).rowwise().squaredNorm().maxCoeff(&far);
  Eigen::RowVectorXd c0 = data.row(0), c1 = data.row(far);
  std::vector<int> labels(n, 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = (data.row(i) - c1).squaredNorm() < (data.row(i) - c0).squaredNorm() ? 1 : 0;
      changed |= l != labels[i];
      labels[i] = l;
    }
    Eigen::RowVectorXd s0 = Eigen::RowVectorXd::Zero(data.cols()), s1 = s0;
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[i]) {
        s1 += data.row(i);
        ++n1;
      } else {
        s0 += data.row(i);
        ++n0;
      }
    }
    if (n0 > 0) c0 = s0 / n0;
    if (n1 > 0) c1 = s1 / n1;
    if (!changed && it > 0) break;
  }
  if (labels[0] == 1) {
    for (int& l : labels) l = 1 - l;
  }
  return labels;
}

SemiRegularMesh latent_interpolate(const Eigen::MatrixXd& latents_a,
                                   const std::vector<Vec3>& offsets_a,
                                   const Eigen::MatrixXd& latents_b,
                                   const std::vector<Vec3>& offsets_b, double alpha,
                                   const SemiRegularMesh& like, const ModelParams& params) {
  if (latents_a.rows() != latents_b.rows() || latents_a.cols() != latents_b.cols() ||
      offsets_a.size() != offsets_b.size()) {
    throw Error(ErrorKind::ShapeMismatch, "latent sets differ in shape");
  }
  if (!(alpha >= 0 && alpha <= 1)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
  const Eigen::MatrixXd z = (1 - alpha) * latents_a + alpha * latents_b;
  std::vector<Vec3> offsets(offsets_a.size());
  for (size_t p = 0; p < offsets.size(); ++p) offsets[p] = (1 - alpha) * offsets_a[p] + alpha * offsets_b[p];
  return decode_frame(z, offsets, like, params);
}

EmbeddingRun embed_sequence(const std::vector<Eigen::MatrixXd>& latents) {
  if (latents.size() < 3) throw Error(ErrorKind::TooShort, "embedding needs at least 3 timesteps");
  EmbeddingRun run;
  run.latents = latents;
  const Eigen::Index t = static_cast<Eigen::Index>(latents.size());
  const Eigen::Index k = latents[0].rows(), hr = latents[0].cols();
  run.shape_embedding.resize(t, k * hr);
  for (Eigen::Index s = 0; s < t; ++s) {
    if (latents[s].rows() != k || latents[s].cols() != hr) {
      throw Error(ErrorKind::ShapeMismatch, "latent shape changes over time");
    }
    for (Eigen::Index p = 0; p < k; ++p) run.shape_embedding.block(s, p * hr, 1, hr) = latents[s].row(p);
  }
  auto [proj, pts] = pca_fit_project(run.shape_embedding, 2);
  run.shape_projection = std::move(proj);
  run.shape_2d = std::move(pts);
  for (Eigen::Index p = 0; p < k; ++p) {
    Eigen::MatrixXd traj(t, hr);
    for (Eigen::Index s = 0; s < t; ++s) traj.row(s) = latents[s].row(p);
    try {
      run.patch_2d.push_back(pca_fit_project(traj, 2).second);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateData) throw;
      run.patch_2d.push_back(Eigen::MatrixXd::Zero(t, 2));
    }
  }
  return run;
}

}  // namespace cosma
