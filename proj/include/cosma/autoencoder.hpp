#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cosma/patch.hpp"
#include "cosma/semiregular.hpp"

namespace cosma {

enum class Precision { f32, f64 };

struct ModelConfig {
  int rl = 4;
  int K = 6;
  int hr = 10;
  int channels1 = 16;
  int channels2 = 32;
  std::uint64_t seed = 0;
  Precision precision = Precision::f64;
};

// Throws UnsupportedLevel for rl outside {2, 3, 4}, InvalidArgument otherwise.
void validate_model_config(const ModelConfig& config);

enum class LayerKind { cheb, dense };

// One layer inside the flat parameter vector. Chebyshev layers store theta as
// [K][in][out] followed by the bias; dense layers store W as [out][in]
// followed by the bias. All row-major.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::cheb;
  int K = 1;  // 1 for dense layers
  int in = 0;
  int out = 0;
  int offset = 0;

  int weight_count() const { return K * in * out; }
  int parameter_count() const { return weight_count() + out; }
};

struct ModelParams {
  ModelConfig config;
  std::vector<LayerSpec> layers;  // enc_conv1, enc_conv2, enc_fc, dec_fc, dec_conv1..3
  std::vector<double> values;

  int parameter_count() const { return static_cast<int>(values.size()); }
  const LayerSpec& layer(const std::string& name) const;
};

// Layer table for a configuration, with zeroed values.
ModelParams model_layout(const ModelConfig& config);

// Seeded fan-based uniform initialization of weights; biases start at zero.
ModelParams build_model(const ModelConfig& config);

// Vertex count of the double-pooled embedding lattice (15 at rl=4, 6 at rl=3).
int embedding_vertex_count(int rl);

// One training sample: padded features and the 1/|P_i| weights of the
// interior vertices.
struct PatchSample {
  Eigen::MatrixXd features;  // total_count x 3
  Eigen::VectorXd weights;   // interior_count
};

enum class LossKind { surface_aware, patch_mse };

// (1/m) sum_i w_i |x_i - y_i|^2 over the interior rows.
double surface_aware_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          const Eigen::VectorXd& weights);

Eigen::VectorXd encode(const Eigen::MatrixXd& features, const ModelParams& params);
Eigen::MatrixXd decode(const Eigen::VectorXd& latent, const ModelParams& params);

// Batched forms; latents are one row per patch.
Eigen::MatrixXd encode_batch(const std::vector<Eigen::MatrixXd>& features,
                             const ModelParams& params);
std::vector<Eigen::MatrixXd> decode_batch(const Eigen::MatrixXd& latents,
                                          const ModelParams& params);

// Mean loss over the samples (each optionally rotated) and its gradient with
// respect to every parameter, in the layout of params.values.
struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};
LossGradient loss_and_gradient(const ModelParams& params, const std::vector<PatchSample>& samples,
                               LossKind loss = LossKind::surface_aware,
                               const std::vector<int>& rotations = {});

// Rotated copy of a sample (r in 0..2); rows and weights permute together.
PatchSample rotate_sample(const PatchSample& sample, const PaddedPatchTemplate& tmpl, int r);

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 150;
  int batch_size = 100;
  bool augment_rotations = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossKind loss = LossKind::surface_aware;
  std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without validation data
};

struct Dataset {
  std::vector<PatchSample> train;
  std::vector<PatchSample> validation;
};

// Patch samples of every frame; the last `validation_fraction` of each
// sequence's frames go to validation.
Dataset make_dataset(const std::vector<std::vector<SemiRegularMesh>>& sequences,
                     double validation_fraction = 0.3);
std::vector<PatchSample> frame_samples(const SemiRegularMesh& frame);

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  long steps = 0;
};

// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Adam over shuffled mini-batches of patches. Throws EmptyDataset and
// NonFiniteLoss.
TrainResult train(const Dataset& data, const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Continues from existing parameters.
TrainResult train(const Dataset& data, ModelParams initial, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct FrameReconstruction {
  SemiRegularMesh mesh;
  Eigen::MatrixXd latents;   // patch_count x hr
  std::vector<Vec3> offsets; // per patch translation
};

// Per frame: extract, encode, decode and reassemble. Throws LevelMismatch.
std::vector<FrameReconstruction> reconstruct_sequence(const std::vector<SemiRegularMesh>& frames,
                                                      const ModelParams& params);

// Decodes latents with the given offsets onto the topology of `like`.
SemiRegularMesh decode_frame(const Eigen::MatrixXd& latents, const std::vector<Vec3>& offsets,
                             const SemiRegularMesh& like, const ModelParams& params);

// -----------------------------------------------------------------------------
// CHECKPOINTS
// -----------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  ModelParams params;
  std::vector<EpochRecord> history;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// epoch,train_loss,val_loss
void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

std::string to_string(Precision p);
std::string to_string(LossKind k);
Precision precision_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

}  // namespace cosma
