#include "cosma/remesh.hpp"

#include <cmath>
#include <random>

#include "cosma/bvh.hpp"
#include "cosma/error.hpp"
#include "cosma/parallel.hpp"

namespace cosma {

void validate_config(const RemeshConfig& config) {
  if (config.rl < 2 || config.rl > 4) {
    throw Error(ErrorKind::UnsupportedLevel,
                "refinement level " + std::to_string(config.rl) + " (supported: 2, 3, 4)");
  }
  if (config.iterations <= 0) throw Error(ErrorKind::InvalidArgument, "iterations must be positive");
  if (!(config.step_size >= 0)) throw Error(ErrorKind::InvalidArgument, "negative step size");
  if (config.samples_per_face < 0) throw Error(ErrorKind::InvalidArgument, "negative sample count");
  if (!(config.regularizer_weight >= 0)) {
    throw Error(ErrorKind::InvalidArgument, "negative regularizer weight");
  }
}

namespace {

// Nearest neighbor of every query point; results in query order.
std::vector<AabbTree::Hit> nearest_all(const PointIndex& index, std::span<const Vec3> queries) {
  std::vector<AabbTree::Hit> hits(queries.size());
  const int n = static_cast<int>(queries.size());
  constexpr int kChunk = 512;
  parallel_for((n + kChunk - 1) / kChunk, [&](int c) {
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) hits[i] = index.nearest(queries[i]);
  });
  return hits;
}

}  // namespace

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySet, "chamfer of an empty point set");
  const PointIndex ia(a), ib(b);
  double sum_ab = 0, sum_ba = 0;
  for (const auto& h : nearest_all(ib, a)) sum_ab += h.distance2;
  for (const auto& h : nearest_all(ia, b)) sum_ba += h.distance2;
  return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

std::vector<SurfaceSample> sample_barycentric(const TriMesh& mesh, int samples_per_face,
                                              std::uint64_t seed) {
  if (samples_per_face < 0) throw Error(ErrorKind::InvalidArgument, "negative sample count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<SurfaceSample> samples;
  samples.reserve(mesh.faces.size() * samples_per_face);
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    for (int s = 0; s < samples_per_face; ++s) {
      const double r1 = std::sqrt(uniform(rng));
      const double r2 = uniform(rng);
      samples.push_back({f, Vec3(1 - r1, r1 * (1 - r2), r1 * r2)});
    }
  }
  return samples;
}

std::vector<Vec3> evaluate_samples(const TriMesh& mesh, std::span<const SurfaceSample> samples) {
  std::vector<Vec3> points;
  points.reserve(samples.size());
  for (const SurfaceSample& s : samples) {
    const Face& t = mesh.faces[s.face];
    points.push_back(s.bary[0] * mesh.vertices[t[0]] + s.bary[1] * mesh.vertices[t[1]] +
                     s.bary[2] * mesh.vertices[t[2]]);
  }
  return points;
}

std::vector<Vec3> sample_surface(const TriMesh& mesh, int samples_per_face, std::uint64_t seed) {
  std::vector<Vec3> points = mesh.vertices;
  const auto samples = sample_barycentric(mesh, samples_per_face, seed);
  const auto extra = evaluate_samples(mesh, samples);
  points.insert(points.end(), extra.begin(), extra.end());
  return points;
}

namespace {

class ChamferFitter {
 public:
  ChamferFitter(const TriMesh& fine, const TriMesh& target, const RemeshConfig& config)
      : config_(config),
        fine_(fine),
        samples_(sample_barycentric(fine, config.samples_per_face, config.seed)),
        target_points_(sample_surface(target, config.samples_per_face, config.seed)),
        target_index_(target_points_),
        edges_(mesh_edges(fine)) {}

  // Chamfer at the current positions; fills `grad` (per vertex) when given.
  double evaluate(std::vector<Vec3>* grad) const {
    std::vector<Vec3> points = fine_.vertices;
    const auto extra = evaluate_samples(fine_, samples_);
    points.insert(points.end(), extra.begin(), extra.end());
    const double np = static_cast<double>(points.size());
    const double nq = static_cast<double>(target_points_.size());

    const PointIndex fine_index(points);
    const auto forward = nearest_all(target_index_, points);
    const auto backward = nearest_all(fine_index, target_points_);

    std::vector<Vec3> point_grad(points.size(), Vec3::Zero());
    double sum_f = 0, sum_b = 0;
    for (size_t i = 0; i < points.size(); ++i) {
      sum_f += forward[i].distance2;
      point_grad[i] += (2.0 / np) * (points[i] - target_points_[forward[i].primitive]);
    }
    for (size_t j = 0; j < target_points_.size(); ++j) {
      const int i = backward[j].primitive;
      sum_b += backward[j].distance2;
      point_grad[i] += (2.0 / nq) * (points[i] - target_points_[j]);
    }
    if (grad) {
      const size_t nv = fine_.vertices.size();
      grad->assign(point_grad.begin(), point_grad.begin() + nv);
      for (size_t s = 0; s < samples_.size(); ++s) {
        const Face& t = fine_.faces[samples_[s].face];
        for (int k = 0; k < 3; ++k) (*grad)[t[k]] += samples_[s].bary[k] * point_grad[nv + s];
      }
    }
    return sum_f / np + sum_b / nq;
  }

  // Variance of squared edge lengths, scaled by the regularizer weight.
  void add_regularizer(std::vector<Vec3>& grad) const {
    if (config_.regularizer_weight <= 0 || edges_.empty()) return;
    const double ne = static_cast<double>(edges_.size());
    double mean = 0;
    for (const Edge& e : edges_) mean += (fine_.vertices[e.first] - fine_.vertices[e.second]).squaredNorm();
    mean /= ne;
    for (const Edge& e : edges_) {
      const Vec3 d = fine_.vertices[e.first] - fine_.vertices[e.second];
      const Vec3 g = config_.regularizer_weight * (2.0 / ne) * (d.squaredNorm() - mean) * 2.0 * d;
      grad[e.first] += g;
      grad[e.second] -= g;
    }
  }

  FitReport run() {
    FitReport report;
    const size_t nv = fine_.vertices.size();
    std::vector<Vec3> m(nv, Vec3::Zero()), v(nv, Vec3::Zero()), grad;
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double b1t = 1, b2t = 1;
    for (int it = 0; it < config_.iterations; ++it) {
      const double loss = evaluate(&grad);
      if (!std::isfinite(loss)) throw Error(ErrorKind::DivergedFit, "non-finite chamfer");
      report.loss_history.push_back(loss);
      if (loss > 10.0 * report.loss_history.front() && report.loss_history.front() > 0) {
        throw Error(ErrorKind::DivergedFit, "chamfer grew more than tenfold at iteration " +
                                                std::to_string(it));
      }
      if (loss == 0.0) break;
      add_regularizer(grad);
      b1t *= beta1;
      b2t *= beta2;
      for (size_t i = 0; i < nv; ++i) {
        m[i] = beta1 * m[i] + (1 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1 - beta2) * grad[i].cwiseProduct(grad[i]);
        const Vec3 mhat = m[i] / (1 - b1t);
        const Vec3 vhat = v[i] / (1 - b2t);
        fine_.vertices[i] -= config_.step_size * mhat.cwiseQuotient(
                                                     (vhat.array().sqrt() + eps).matrix());
      }
    }
    report.final_chamfer = evaluate(nullptr);
    const auto& h = report.loss_history;
    const size_t window = std::max<size_t>(1, h.size() / 10);
    const double ref = h[h.size() - window];
    report.converged = report.final_chamfer == 0.0 ||
                       std::abs(ref - report.final_chamfer) <= 1e-3 * std::max(ref, 1e-300);
    return report;
  }

  const TriMesh& fine() const { return fine_; }

 private:
  RemeshConfig config_;
  TriMesh fine_;
  std::vector<SurfaceSample> samples_;
  std::vector<Vec3> target_points_;
  PointIndex target_index_;
  std::vector<Edge> edges_;
};

}  // namespace

std::pair<SemiRegularMesh, FitReport> fit_semiregular(const TriMesh& base, const TriMesh& target,
                                                      const RemeshConfig& config) {
  validate_config(config);
  validate_mesh(base);
  return refit_semiregular(SemiRegularMesh::from_base(base, config.rl), target, config);
}

std::pair<SemiRegularMesh, FitReport> refit_semiregular(const SemiRegularMesh& init,
                                                        const TriMesh& target,
                                                        const RemeshConfig& config) {
  validate_config(config);
  if (init.rl != config.rl) {
    throw Error(ErrorKind::LevelMismatch, "initial mesh has refinement level " +
                                              std::to_string(init.rl));
  }
  if (target.faces.empty()) throw Error(ErrorKind::EmptyMesh, "target mesh has no faces");
  ChamferFitter fitter(init.fine, target, config);
  FitReport report = fitter.run();
  return {init.with_positions(fitter.fine().vertices), std::move(report)};
}

}  // namespace cosma
