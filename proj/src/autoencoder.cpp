#include "cosma/autoencoder.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "cosma/error.hpp"
#include "cosma/spectral.hpp"

namespace cosma {

void validate_model_config(const ModelConfig& config) {
  if (config.rl < 2 || config.rl > 4) {
    throw Error(ErrorKind::UnsupportedLevel,
                "refinement level " + std::to_string(config.rl) + " (supported: 2, 3, 4)");
  }
  if (config.K < 1 || config.hr < 1 || config.channels1 < 1 || config.channels2 < 1) {
    throw Error(ErrorKind::InvalidArgument, "K, hr and channel counts must be positive");
  }
}

int embedding_vertex_count(int rl) {
  return static_cast<int>(patch_template(rl).levels[2].slots.size());
}

const LayerSpec& ModelParams::layer(const std::string& name) const {
  for (const LayerSpec& l : layers) {
    if (l.name == name) return l;
  }
  throw Error(ErrorKind::InvalidArgument, "no layer named " + name);
}

ModelParams model_layout(const ModelConfig& config) {
  validate_model_config(config);
  const int flat = embedding_vertex_count(config.rl) * config.channels2;
  const int c1 = config.channels1, c2 = config.channels2, K = config.K;
  ModelParams p;
  p.config = config;
  p.layers = {
      {"enc_conv1", LayerKind::cheb, K, 3, c1, 0},
      {"enc_conv2", LayerKind::cheb, K, c1, c2, 0},
      {"enc_fc", LayerKind::dense, 1, flat, config.hr, 0},
      {"dec_fc", LayerKind::dense, 1, config.hr, flat, 0},
      {"dec_conv1", LayerKind::cheb, K, c2, c2, 0},
      {"dec_conv2", LayerKind::cheb, K, c2, c1, 0},
      {"dec_conv3", LayerKind::cheb, K, c1, 3, 0},
  };
  int offset = 0;
  for (LayerSpec& l : p.layers) {
    l.offset = offset;
    offset += l.parameter_count();
  }
  p.values.assign(offset, 0.0);
  return p;
}

ModelParams build_model(const ModelConfig& config) {
  ModelParams p = model_layout(config);
  std::mt19937_64 rng(config.seed);
  for (const LayerSpec& l : p.layers) {
    const double fan_in = static_cast<double>(l.K * l.in);
    const double limit = std::sqrt(6.0 / (fan_in + l.out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (int i = 0; i < l.weight_count(); ++i) p.values[l.offset + i] = uniform(rng);
  }
  return p;
}

double surface_aware_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          const Eigen::VectorXd& weights) {
  const Eigen::Index m = weights.size();
  if (m == 0 || x.cols() != y.cols() || x.rows() < m || y.rows() < m) {
    throw Error(ErrorKind::ShapeMismatch, "loss inputs must cover the interior vertices");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) sum += weights[i] * (x.row(i) - y.row(i)).squaredNorm();
  return sum / static_cast<double>(m);
}

PatchSample rotate_sample(const PatchSample& sample, const PaddedPatchTemplate& tmpl, int r) {
  if (r % 3 == 0) return sample;
  const std::vector<int>& perm = tmpl.rotations[r % 3];
  PatchSample out;
  out.features = permute_rows(sample.features, perm);
  out.weights.resize(sample.weights.size());
  for (Eigen::Index i = 0; i < sample.weights.size(); ++i) out.weights[perm[i]] = sample.weights[i];
  return out;
}

namespace {

// Graph operators shared by every model of one refinement level.
struct TemplateOps {
  std::array<SpectralOperator, 2> spectral;  // template levels 0 and 1
  std::array<LinearMap, 2> pool;
  std::array<LinearMap, 2> unpool;
  int v0 = 0, v1 = 0, v2 = 0;
};

const TemplateOps& template_ops(int rl) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<TemplateOps>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[rl];
  if (!slot) {
    const PaddedPatchTemplate& t = patch_template(rl);
    auto ops = std::make_unique<TemplateOps>();
    for (int l = 0; l < 2; ++l) {
      ops->spectral[l] = build_spectral_operator(static_cast<int>(t.levels[l].slots.size()),
                                                 t.levels[l].adjacency);
      ops->pool[l] = build_pool_map(t, l);
      ops->unpool[l] = build_unpool_map(t, l);
    }
    ops->v0 = static_cast<int>(t.levels[0].slots.size());
    ops->v1 = static_cast<int>(t.levels[1].slots.size());
    ops->v2 = static_cast<int>(t.levels[2].slots.size());
    slot = std::move(ops);
  }
  return *slot;
}

template <class S>
class Network {
 public:
  explicit Network(const ModelParams& params) : config_(params.config) {
    validate_model_config(config_);
    const TemplateOps& ops = template_ops(config_.rl);
    v0_ = ops.v0;
    v1_ = ops.v1;
    v2_ = ops.v2;
    lt0_ = ops.spectral[0].scaled.cast<S>();
    lt1_ = ops.spectral[1].scaled.cast<S>();
    pool0_ = ops.pool[0].weights.cast<S>();
    pool1_ = ops.pool[1].weights.cast<S>();
    unpool0_ = ops.unpool[0].weights.cast<S>();
    unpool1_ = ops.unpool[1].weights.cast<S>();
    layers_ = params.layers;
    load(params.values);
  }

  void load(const std::vector<double>& values) {
    if (values.size() != static_cast<size_t>(layers_.back().offset + layers_.back().parameter_count())) {
      throw Error(ErrorKind::ShapeMismatch, "parameter vector size differs from layout");
    }
    ec1_ = cheb(values, layers_[0]);
    ec2_ = cheb(values, layers_[1]);
    unpack_dense(values, layers_[2], we_, be_);
    unpack_dense(values, layers_[3], wd_, bd_);
    dc1_ = cheb(values, layers_[4]);
    dc2_ = cheb(values, layers_[5]);
    dc3_ = cheb(values, layers_[6]);
  }

  int total_count() const { return v0_; }

  struct Cache {
    std::vector<MatrixX<S>> b_ec1, b_ec2, b_dc1, b_dc2, b_dc3;
    MatrixX<S> p0, p1, z, latent, c1, c2;
  };

  MatrixX<S> encode(const MatrixX<S>& x, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.p0 = apply_blocks(pool0_, cheb_conv(x, lt0_, ec1_, &c.b_ec1));
    c.p1 = apply_blocks(pool1_, cheb_conv(elu(c.p0), lt1_, ec2_, &c.b_ec2));
    c.z = flatten(elu(c.p1), v2_);
    return dense(c.z, we_, be_);
  }

  MatrixX<S> decode(const MatrixX<S>& latent, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    const MatrixX<S> d = unflatten(dense(latent, wd_, bd_), v2_);
    c.c1 = cheb_conv(apply_blocks(unpool1_, d), lt1_, dc1_, &c.b_dc1);
    c.c2 = cheb_conv(apply_blocks(unpool0_, elu(c.c1)), lt0_, dc2_, &c.b_dc2);
    return cheb_conv(elu(c.c2), lt0_, dc3_, &c.b_dc3);
  }

  // Gradient of the parameters given dLoss/dOutput, in flat layout.
  std::vector<double> backward(const Cache& c, const MatrixX<S>& gy) const {
    std::vector<double> grad(layers_.back().offset + layers_.back().parameter_count(), 0.0);
    ChebGrad<S> g3 = cheb_conv_grad(c.b_dc3, lt0_, dc3_, gy);
    pack_cheb(g3, layers_[6], grad);
    ChebGrad<S> g2 = cheb_conv_grad(c.b_dc2, lt0_, dc2_, elu_grad(c.c2, g3.x));
    pack_cheb(g2, layers_[5], grad);
    const MatrixX<S> ge1 = apply_blocks_transposed(unpool0_, g2.x);
    ChebGrad<S> g1 = cheb_conv_grad(c.b_dc1, lt1_, dc1_, elu_grad(c.c1, ge1));
    pack_cheb(g1, layers_[4], grad);
    const MatrixX<S> gd = flatten(apply_blocks_transposed(unpool1_, g1.x), v2_);
    DenseGrad<S> dd = dense_grad(c.latent, wd_, gd);
    pack_dense(dd, layers_[3], grad);
    DenseGrad<S> de = dense_grad(c.z, we_, dd.x);
    pack_dense(de, layers_[2], grad);
    const MatrixX<S> gp1 = elu_grad(c.p1, unflatten(de.x, v2_));
    ChebGrad<S> e2 = cheb_conv_grad(c.b_ec2, lt1_, ec2_, apply_blocks_transposed(pool1_, gp1));
    pack_cheb(e2, layers_[1], grad);
    const MatrixX<S> gp0 = elu_grad(c.p0, e2.x);
    ChebGrad<S> e1 = cheb_conv_grad(c.b_ec1, lt0_, ec1_, apply_blocks_transposed(pool0_, gp0));
    pack_cheb(e1, layers_[0], grad);
    return grad;
  }

 private:
  static ChebWeights<S> cheb(const std::vector<double>& v, const LayerSpec& l) {
    ChebWeights<S> w;
    w.theta.assign(l.K, MatrixX<S>(l.in, l.out));
    for (int k = 0; k < l.K; ++k) {
      for (int i = 0; i < l.in; ++i) {
        for (int o = 0; o < l.out; ++o) {
          w.theta[k](i, o) = static_cast<S>(v[l.offset + (k * l.in + i) * l.out + o]);
        }
      }
    }
    w.bias.resize(l.out);
    for (int o = 0; o < l.out; ++o) w.bias[o] = static_cast<S>(v[l.offset + l.weight_count() + o]);
    return w;
  }

  static void unpack_dense(const std::vector<double>& v, const LayerSpec& l, MatrixX<S>& w,
                           VectorX<S>& b) {
    w.resize(l.out, l.in);
    for (int o = 0; o < l.out; ++o) {
      for (int i = 0; i < l.in; ++i) w(o, i) = static_cast<S>(v[l.offset + o * l.in + i]);
    }
    b.resize(l.out);
    for (int o = 0; o < l.out; ++o) b[o] = static_cast<S>(v[l.offset + l.weight_count() + o]);
  }

  static void pack_cheb(const ChebGrad<S>& g, const LayerSpec& l, std::vector<double>& out) {
    for (int k = 0; k < l.K; ++k) {
      for (int i = 0; i < l.in; ++i) {
        for (int o = 0; o < l.out; ++o) out[l.offset + (k * l.in + i) * l.out + o] = g.theta[k](i, o);
      }
    }
    for (int o = 0; o < l.out; ++o) out[l.offset + l.weight_count() + o] = g.bias[o];
  }

  static void pack_dense(const DenseGrad<S>& g, const LayerSpec& l, std::vector<double>& out) {
    for (int o = 0; o < l.out; ++o) {
      for (int i = 0; i < l.in; ++i) out[l.offset + o * l.in + i] = g.w(o, i);
    }
    for (int o = 0; o < l.out; ++o) out[l.offset + l.weight_count() + o] = g.b[o];
  }

  // (B*V) x C -> B x (V*C), vertex-major
  static MatrixX<S> flatten(const MatrixX<S>& h, int v) {
    const Eigen::Index c = h.cols(), b = h.rows() / v;
    MatrixX<S> z(b, v * c);
    for (Eigen::Index s = 0; s < b; ++s) {
      for (int i = 0; i < v; ++i) z.block(s, i * c, 1, c) = h.row(s * v + i);
    }
    return z;
  }

  static MatrixX<S> unflatten(const MatrixX<S>& z, int v) {
    const Eigen::Index c = z.cols() / v, b = z.rows();
    MatrixX<S> h(b * v, c);
    for (Eigen::Index s = 0; s < b; ++s) {
      for (int i = 0; i < v; ++i) h.row(s * v + i) = z.block(s, i * c, 1, c);
    }
    return h;
  }

  ModelConfig config_;
  std::vector<LayerSpec> layers_;
  int v0_ = 0, v1_ = 0, v2_ = 0;
  SparseX<S> lt0_, lt1_, pool0_, pool1_, unpool0_, unpool1_;
  ChebWeights<S> ec1_, ec2_, dc1_, dc2_, dc3_;
  MatrixX<S> we_, wd_;
  VectorX<S> be_, bd_;
};

template <class S>
MatrixX<S> stack(const std::vector<const Eigen::MatrixXd*>& features, int rows) {
  MatrixX<S> x(static_cast<Eigen::Index>(features.size()) * rows, 3);
  for (size_t s = 0; s < features.size(); ++s) {
    if (features[s]->rows() != rows || features[s]->cols() != 3) {
      throw Error(ErrorKind::ShapeMismatch, "patch features must be " + std::to_string(rows) +
                                                " x 3, got " + std::to_string(features[s]->rows()) +
                                                " x " + std::to_string(features[s]->cols()));
    }
    x.middleRows(static_cast<Eigen::Index>(s) * rows, rows) = features[s]->template cast<S>();
  }
  return x;
}

// Mean loss of a batch and its gradient with respect to the network output.
template <class S>
double batch_loss(const std::vector<const PatchSample*>& batch, const MatrixX<S>& y, int rows,
                  LossKind kind, MatrixX<S>* gy) {
  if (gy) gy->setZero(y.rows(), y.cols());
  double total = 0.0;
  const double nb = static_cast<double>(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    const PatchSample& p = *batch[s];
    const Eigen::Index m = p.weights.size();
    const Eigen::Index base = static_cast<Eigen::Index>(s) * rows;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = kind == LossKind::surface_aware ? p.weights[i] : 1.0;
      const Eigen::RowVector3d diff = y.row(base + i).template cast<double>() - p.features.row(i);
      sum += w * diff.squaredNorm();
      if (gy) gy->row(base + i) = (2.0 * w / (static_cast<double>(m) * nb) * diff).template cast<S>();
    }
    total += sum / static_cast<double>(m);
  }
  return total / nb;
}

template <class S>
LossGradient loss_and_gradient_impl(Network<S>& net, const std::vector<const PatchSample*>& batch,
                                    LossKind kind, bool want_gradient) {
  std::vector<const Eigen::MatrixXd*> features;
  for (const PatchSample* p : batch) features.push_back(&p->features);
  const MatrixX<S> x = stack<S>(features, net.total_count());
  typename Network<S>::Cache cache;
  cache.latent = net.encode(x, &cache);
  const MatrixX<S> y = net.decode(cache.latent, &cache);
  LossGradient out;
  MatrixX<S> gy;
  out.loss = batch_loss<S>(batch, y, net.total_count(), kind, want_gradient ? &gy : nullptr);
  if (want_gradient) out.gradient = net.backward(cache, gy);
  return out;
}

template <class S>
MatrixX<double> encode_impl(const std::vector<const Eigen::MatrixXd*>& features,
                            const ModelParams& params) {
  Network<S> net(params);
  return net.encode(stack<S>(features, net.total_count()), nullptr).template cast<double>();
}

template <class S>
std::vector<Eigen::MatrixXd> decode_impl(const Eigen::MatrixXd& latents, const ModelParams& params) {
  if (latents.cols() != params.config.hr) {
    throw Error(ErrorKind::ShapeMismatch, "latent size " + std::to_string(latents.cols()) +
                                              " differs from hr " + std::to_string(params.config.hr));
  }
  Network<S> net(params);
  const MatrixX<S> y = net.decode(latents.cast<S>(), nullptr);
  std::vector<Eigen::MatrixXd> out(latents.rows());
  const int rows = net.total_count();
  for (Eigen::Index s = 0; s < latents.rows(); ++s) {
    out[s] = y.middleRows(s * rows, rows).template cast<double>();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd encode_batch(const std::vector<Eigen::MatrixXd>& features,
                             const ModelParams& params) {
  std::vector<const Eigen::MatrixXd*> ptrs;
  for (const auto& f : features) ptrs.push_back(&f);
  return params.config.precision == Precision::f32 ? encode_impl<float>(ptrs, params)
                                                   : encode_impl<double>(ptrs, params);
}

std::vector<Eigen::MatrixXd> decode_batch(const Eigen::MatrixXd& latents,
                                          const ModelParams& params) {
  return params.config.precision == Precision::f32 ? decode_impl<float>(latents, params)
                                                   : decode_impl<double>(latents, params);
}

Eigen::VectorXd encode(const Eigen::MatrixXd& features, const ModelParams& params) {
  return encode_batch({features}, params).row(0).transpose();
}

Eigen::MatrixXd decode(const Eigen::VectorXd& latent, const ModelParams& params) {
  return decode_batch(latent.transpose(), params)[0];
}

LossGradient loss_and_gradient(const ModelParams& params, const std::vector<PatchSample>& samples,
                               LossKind loss, const std::vector<int>& rotations) {
  if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "no samples");
  if (!rotations.empty() && rotations.size() != samples.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one rotation per sample expected");
  }
  const PaddedPatchTemplate& tmpl = patch_template(params.config.rl);
  std::vector<PatchSample> rotated;
  std::vector<const PatchSample*> batch;
  if (!rotations.empty()) {
    rotated.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) rotated.push_back(rotate_sample(samples[i], tmpl, rotations[i]));
    for (const auto& s : rotated) batch.push_back(&s);
  } else {
    for (const auto& s : samples) batch.push_back(&s);
  }
  if (params.config.precision == Precision::f32) {
    Network<float> net(params);
    return loss_and_gradient_impl(net, batch, loss, true);
  }
  Network<double> net(params);
  return loss_and_gradient_impl(net, batch, loss, true);
}

// -----------------------------------------------------------------------------
// TRAINING
// -----------------------------------------------------------------------------

void validate_train_config(const TrainConfig& c) {
  if (!(c.learning_rate > 0) || c.epochs < 0 || c.batch_size < 1 || !(c.beta1 >= 0 && c.beta1 < 1) ||
      !(c.beta2 >= 0 && c.beta2 < 1) || !(c.epsilon > 0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid training configuration");
  }
}

std::vector<PatchSample> frame_samples(const SemiRegularMesh& frame) {
  const PatchSet set = extract_patches(frame);
  const PaddedPatchTemplate& tmpl = patch_template(frame.rl);
  std::vector<PatchSample> out;
  for (int p = 0; p < set.patch_count(); ++p) {
    out.push_back({set.features[p], set.topology->interior_weights(p, tmpl)});
  }
  return out;
}

Dataset make_dataset(const std::vector<std::vector<SemiRegularMesh>>& sequences,
                     double validation_fraction) {
  if (!(validation_fraction >= 0 && validation_fraction < 1)) {
    throw Error(ErrorKind::InvalidArgument, "validation fraction must lie in [0, 1)");
  }
  Dataset data;
  for (const auto& seq : sequences) {
    const int t = static_cast<int>(seq.size());
    const int n_val = static_cast<int>(std::floor(validation_fraction * t));
    std::shared_ptr<const PatchTopology> topo;
    for (int f = 0; f < t; ++f) {
      if (!topo || topo->vertex_count != seq[f].vertex_count() || !same_topology(seq[f], seq[0])) {
        topo = std::make_shared<const PatchTopology>(build_patch_topology(seq[f]));
      }
      const PatchSet set = extract_patches(seq[f], topo);
      const PaddedPatchTemplate& tmpl = patch_template(seq[f].rl);
      auto& dst = f < t - n_val ? data.train : data.validation;
      for (int p = 0; p < set.patch_count(); ++p) {
        dst.push_back({set.features[p], topo->interior_weights(p, tmpl)});
      }
    }
  }
  return data;
}

namespace {

template <class S>
TrainResult train_impl(const Dataset& data, ModelParams params, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  const PaddedPatchTemplate& tmpl = patch_template(params.config.rl);
  const int rotations = config.augment_rotations ? 3 : 1;
  std::vector<std::vector<PatchSample>> views(rotations);
  for (int r = 0; r < rotations; ++r) {
    views[r].reserve(data.train.size());
    for (const PatchSample& s : data.train) {
      if (s.features.rows() != tmpl.total_count || s.weights.size() != tmpl.interior_count) {
        throw Error(ErrorKind::ShapeMismatch, "training sample does not match the template");
      }
      views[r].push_back(rotate_sample(s, tmpl, r));
    }
  }

  Network<S> net(params);
  const size_t np = params.values.size();
  std::vector<double> m(np, 0.0), v(np, 0.0);
  double b1t = 1.0, b2t = 1.0;
  std::mt19937_64 rng(config.seed);
  std::vector<std::pair<int, int>> order;  // (rotation, sample)
  for (int r = 0; r < rotations; ++r) {
    for (int i = 0; i < static_cast<int>(data.train.size()); ++i) order.push_back({r, i});
  }

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double epoch_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const PatchSample*> batch;
      for (size_t i = start; i < end; ++i) batch.push_back(&views[order[i].first][order[i].second]);
      const LossGradient lg = loss_and_gradient_impl(net, batch, config.loss, true);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", step " +
                                                  std::to_string(result.steps) + ": loss " +
                                                  std::to_string(lg.loss));
      }
      epoch_sum += lg.loss * static_cast<double>(batch.size());
      b1t *= config.beta1;
      b2t *= config.beta2;
      for (size_t k = 0; k < np; ++k) {
        const double g = lg.gradient[k];
        m[k] = config.beta1 * m[k] + (1 - config.beta1) * g;
        v[k] = config.beta2 * v[k] + (1 - config.beta2) * g * g;
        params.values[k] -= config.learning_rate * (m[k] / (1 - b1t)) /
                            (std::sqrt(v[k] / (1 - b2t)) + config.epsilon);
      }
      net.load(params.values);
      ++result.steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_sum / static_cast<double>(order.size());
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    if (!data.validation.empty()) {
      double sum = 0.0;
      for (size_t start = 0; start < data.validation.size(); start += config.batch_size) {
        const size_t end = std::min(data.validation.size(), start + config.batch_size);
        std::vector<const PatchSample*> batch;
        for (size_t i = start; i < end; ++i) batch.push_back(&data.validation[i]);
        sum += loss_and_gradient_impl(net, batch, config.loss, false).loss *
               static_cast<double>(batch.size());
      }
      rec.val_loss = sum / static_cast<double>(data.validation.size());
    }
    result.history.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
  }
  result.params = std::move(params);
  return result;
}

}  // namespace

TrainResult train(const Dataset& data, ModelParams initial, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate_train_config(config);
  validate_model_config(initial.config);
  if (data.train.empty()) throw Error(ErrorKind::EmptyDataset, "no training patches");
  if (initial.config.precision == Precision::f32) {
    return train_impl<float>(data, std::move(initial), config, on_epoch);
  }
  return train_impl<double>(data, std::move(initial), config, on_epoch);
}

TrainResult train(const Dataset& data, const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate_train_config(config);
  if (data.train.empty()) throw Error(ErrorKind::EmptyDataset, "no training patches");
  return train(data, build_model(model), config, on_epoch);
}

// -----------------------------------------------------------------------------
// RECONSTRUCTION
// -----------------------------------------------------------------------------

SemiRegularMesh decode_frame(const Eigen::MatrixXd& latents, const std::vector<Vec3>& offsets,
                             const SemiRegularMesh& like, const ModelParams& params) {
  if (like.rl != params.config.rl) {
    throw Error(ErrorKind::LevelMismatch, "mesh level " + std::to_string(like.rl) +
                                              ", model level " + std::to_string(params.config.rl));
  }
  if (latents.rows() != like.patch_count() || offsets.size() != static_cast<size_t>(like.patch_count())) {
    throw Error(ErrorKind::ShapeMismatch, "one latent row and offset per patch expected");
  }
  PatchSet set;
  set.features = decode_batch(latents, params);
  set.offsets = offsets;
  set.topology = std::make_shared<const PatchTopology>(build_patch_topology(like));
  return like.with_positions(reassemble(set));
}

std::vector<FrameReconstruction> reconstruct_sequence(const std::vector<SemiRegularMesh>& frames,
                                                      const ModelParams& params) {
  std::vector<FrameReconstruction> out;
  std::shared_ptr<const PatchTopology> topo;
  const SemiRegularMesh* topo_frame = nullptr;
  for (const SemiRegularMesh& frame : frames) {
    if (frame.rl != params.config.rl) {
      throw Error(ErrorKind::LevelMismatch, "frame level " + std::to_string(frame.rl) +
                                                ", model level " + std::to_string(params.config.rl));
    }
    if (!topo || !same_topology(frame, *topo_frame)) {
      topo = std::make_shared<const PatchTopology>(build_patch_topology(frame));
      topo_frame = &frame;
    }
    PatchSet set = extract_patches(frame, topo);
    FrameReconstruction rec;
    rec.latents = encode_batch(set.features, params);
    rec.offsets = set.offsets;
    set.features = decode_batch(rec.latents, params);
    rec.mesh = frame.with_positions(reassemble(set));
    out.push_back(std::move(rec));
  }
  return out;
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }
std::string to_string(LossKind k) {
  return k == LossKind::surface_aware ? "surface_aware" : "patch_mse";
}

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw Error(ErrorKind::InvalidArgument, "precision must be f32 or f64, got " + s);
}

LossKind loss_from_string(const std::string& s) {
  if (s == "surface_aware") return LossKind::surface_aware;
  if (s == "patch_mse") return LossKind::patch_mse;
  throw Error(ErrorKind::InvalidArgument, "loss must be surface_aware or patch_mse, got " + s);
}

}  // namespace cosma
