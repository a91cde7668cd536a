#include "cosma/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cosma/analysis.hpp"
#include "cosma/autoencoder.hpp"
#include "cosma/error.hpp"
#include "cosma/metrics.hpp"
#include "cosma/synth.hpp"

namespace cosma {

using nlohmann::json;

NormalizationMode normalization_from_string(const std::string& s) {
  if (s == "aspect_preserving") return NormalizationMode::aspect_preserving;
  if (s == "per_axis") return NormalizationMode::per_axis;
  throw Error(ErrorKind::InvalidArgument, "normalization must be aspect_preserving or per_axis");
}

std::string to_string(NormalizationMode m) {
  return m == NormalizationMode::aspect_preserving ? "aspect_preserving" : "per_axis";
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string frame_name(const char* prefix, int t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d.obj", prefix, t);
  return buf;
}

}  // namespace

// -----------------------------------------------------------------------------
// MANIFESTS
// -----------------------------------------------------------------------------

DatasetManifest load_manifest(const fs::path& path) {
  const json j = read_json(path);
  DatasetManifest m;
  try {
    m.rl = j.value("rl", 0);
    m.normalization = normalization_from_string(j.value("normalization", "aspect_preserving"));
    for (const json& s : j.at("sequences")) {
      SequenceEntry e;
      e.id = s.at("id").get<std::string>();
      e.frames = s.at("frames").get<std::vector<std::string>>();
      e.base = s.value("base", "auto");
      e.branch = s.value("branch_label", "");
      e.split = s.value("split", "train");
      if (e.split != "train" && e.split != "test") {
        throw Error(ErrorKind::ParseError, "sequence " + e.id + ": split must be train or test");
      }
      e.originals = s.value("originals", std::vector<std::string>{});
      if (s.contains("normalization")) {
        NormalizationTransform t;
        const auto tr = s["normalization"].at("translation").get<std::vector<double>>();
        const auto sc = s["normalization"].at("scale").get<std::vector<double>>();
        if (tr.size() != 3 || sc.size() != 3) throw Error(ErrorKind::ParseError, "bad normalization");
        t.translation = Vec3(tr[0], tr[1], tr[2]);
        t.scale = Vec3(sc[0], sc[1], sc[2]);
        e.normalization = t;
      }
      m.sequences.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["rl"] = m.rl;
  j["normalization"] = to_string(m.normalization);
  j["sequences"] = json::array();
  for (const SequenceEntry& e : m.sequences) {
    json s;
    s["id"] = e.id;
    s["frames"] = e.frames;
    s["base"] = e.base;
    if (!e.branch.empty()) s["branch_label"] = e.branch;
    s["split"] = e.split;
    if (!e.originals.empty()) s["originals"] = e.originals;
    if (e.normalization) {
      const Vec3& t = e.normalization->translation;
      const Vec3& c = e.normalization->scale;
      s["normalization"] = {{"translation", {t.x(), t.y(), t.z()}}, {"scale", {c.x(), c.y(), c.z()}}};
    }
    j["sequences"].push_back(s);
  }
  write_text(path, j.dump(1) + "\n");
}

std::vector<std::pair<SemiRegularMesh, FitReport>> remesh_sequence(
    const TriMesh& base, const std::vector<TriMesh>& targets, const RemeshConfig& config,
    int refit_iterations, const std::function<void(int, const FitReport&)>& on_frame) {
  validate_config(config);
  std::vector<std::pair<SemiRegularMesh, FitReport>> out;
  RemeshConfig refit = config;
  if (refit_iterations > 0) refit.iterations = refit_iterations;
  for (size_t t = 0; t < targets.size(); ++t) {
    out.push_back(t == 0 ? fit_semiregular(base, targets[0], config)
                         : refit_semiregular(out.back().first, targets[t], refit));
    if (on_frame) on_frame(static_cast<int>(t), out.back().second);
  }
  return out;
}

namespace {

// -----------------------------------------------------------------------------
// RUN CONTEXT
// -----------------------------------------------------------------------------

// Files written by a command, recorded in <out>/artifacts.json.
class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  fs::path path(const std::string& rel) {
    files_.push_back(rel);
    const fs::path p = root_ / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }

  void finish(const std::string& command) const {
    json j{{"command", command}, {"files", files_}};
    write_text(root_ / "artifacts.json", j.dump(1) + "\n");
  }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

void log(const std::string& cmd, const std::string& msg) { std::cerr << cmd << ": " << msg << '\n'; }

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string manifest;
  std::string checkpoint;
  std::string split = "all";

  // synth
  std::optional<std::string> kind, branch, base_style, id, seq_split;
  std::optional<int> timesteps, base_resolution, frame_resolution;
  std::optional<double> amplitude;

  // remesh
  std::optional<int> rl, iterations, refit_iterations, samples_per_face, base_faces;
  std::optional<double> step_size, regularizer;
  std::optional<std::string> normalization;

  // model and training
  std::optional<int> K, hr, epochs, batch_size;
  std::optional<double> lr, validation_fraction;
  std::optional<std::string> precision, loss;
  bool no_augment = false;

  // analysis
  std::optional<double> svm_lambda;
  std::optional<int> svm_epochs, samples_per_segment;
  bool no_standardize = false;
  std::string seq_a, seq_b;
  int frame_a = 0;
  std::optional<int> frame_b;
  std::vector<double> alphas{0.0, 0.5, 1.0};
};

json config_section(const Options& o, const char* name) {
  if (o.config_path.empty()) return json::object();
  const json j = read_json(o.config_path);
  return j.contains(name) ? j.at(name) : json::object();
}

template <class T>
void take(const json& section, const char* key, T& dst) {
  if (section.contains(key)) {
    try {
      dst = section.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("config key ") + key + ": " + e.what());
    }
  }
}

template <class T, class U>
void flag(const std::optional<T>& v, U& dst) {
  if (v) dst = *v;
}

SyntheticSpec synth_spec(const Options& o) {
  SyntheticSpec s;
  const json c = config_section(o, "synth");
  std::string kind = to_string(s.kind), branch(1, s.branch), style = to_string(s.base_style);
  take(c, "kind", kind);
  take(c, "timesteps", s.timesteps);
  take(c, "amplitude", s.amplitude);
  take(c, "branch", branch);
  take(c, "base_resolution", s.base_resolution);
  take(c, "base_style", style);
  take(c, "frame_resolution", s.frame_resolution);
  take(c, "seed", s.seed);
  flag(o.kind, kind);
  flag(o.branch, branch);
  flag(o.base_style, style);
  flag(o.timesteps, s.timesteps);
  flag(o.amplitude, s.amplitude);
  flag(o.base_resolution, s.base_resolution);
  flag(o.frame_resolution, s.frame_resolution);
  flag(o.seed, s.seed);
  s.kind = synth_kind_from_string(kind);
  if (branch.size() != 1) throw Error(ErrorKind::InvalidSpec, "branch must be A or B");
  s.branch = branch[0];
  s.base_style = base_style_from_string(style);
  validate_spec(s);
  return s;
}

RemeshConfig remesh_config(const Options& o, int& refit_iterations, int& base_faces,
                           NormalizationMode& mode) {
  RemeshConfig r;
  const json c = config_section(o, "remesh");
  std::string norm = to_string(mode);
  take(c, "rl", r.rl);
  take(c, "iterations", r.iterations);
  take(c, "step_size", r.step_size);
  take(c, "samples_per_face", r.samples_per_face);
  take(c, "regularizer_weight", r.regularizer_weight);
  take(c, "seed", r.seed);
  take(c, "refit_iterations", refit_iterations);
  take(c, "base_faces", base_faces);
  take(c, "normalization", norm);
  flag(o.rl, r.rl);
  flag(o.iterations, r.iterations);
  flag(o.step_size, r.step_size);
  flag(o.samples_per_face, r.samples_per_face);
  flag(o.regularizer, r.regularizer_weight);
  flag(o.seed, r.seed);
  flag(o.refit_iterations, refit_iterations);
  flag(o.base_faces, base_faces);
  flag(o.normalization, norm);
  mode = normalization_from_string(norm);
  validate_config(r);
  return r;
}

ModelConfig model_config(const Options& o, int rl) {
  ModelConfig m;
  m.rl = rl;
  const json c = config_section(o, "model");
  std::string precision = to_string(m.precision);
  take(c, "K", m.K);
  take(c, "hr", m.hr);
  if (c.contains("channels")) {
    std::vector<int> ch;
    take(c, "channels", ch);
    if (ch.size() != 2) throw Error(ErrorKind::InvalidArgument, "model.channels needs two values");
    m.channels1 = ch[0];
    m.channels2 = ch[1];
  }
  take(c, "seed", m.seed);
  take(c, "precision", precision);
  flag(o.K, m.K);
  flag(o.hr, m.hr);
  flag(o.seed, m.seed);
  flag(o.precision, precision);
  m.precision = precision_from_string(precision);
  validate_model_config(m);
  return m;
}

TrainConfig train_config(const Options& o, double& validation_fraction) {
  TrainConfig t;
  const json c = config_section(o, "train");
  std::string loss = to_string(t.loss);
  take(c, "learning_rate", t.learning_rate);
  take(c, "epochs", t.epochs);
  take(c, "batch_size", t.batch_size);
  take(c, "augment_rotations", t.augment_rotations);
  take(c, "beta1", t.beta1);
  take(c, "beta2", t.beta2);
  take(c, "epsilon", t.epsilon);
  take(c, "loss", loss);
  take(c, "seed", t.seed);
  take(c, "validation_fraction", validation_fraction);
  flag(o.lr, t.learning_rate);
  flag(o.epochs, t.epochs);
  flag(o.batch_size, t.batch_size);
  flag(o.loss, loss);
  flag(o.seed, t.seed);
  flag(o.validation_fraction, validation_fraction);
  if (o.no_augment) t.augment_rotations = false;
  t.loss = loss_from_string(loss);
  validate_train_config(t);
  return t;
}

SvmConfig svm_config(const Options& o, int& samples_per_segment, bool& standardize) {
  SvmConfig s;
  const json c = config_section(o, "analysis");
  take(c, "svm_lambda", s.lambda);
  take(c, "svm_epochs", s.epochs);
  take(c, "seed", s.seed);
  take(c, "samples_per_segment", samples_per_segment);
  take(c, "standardize", standardize);
  flag(o.svm_lambda, s.lambda);
  flag(o.svm_epochs, s.epochs);
  flag(o.seed, s.seed);
  flag(o.samples_per_segment, samples_per_segment);
  if (o.no_standardize) standardize = false;
  if (!(s.lambda > 0) || s.epochs < 1) throw Error(ErrorKind::InvalidArgument, "invalid SVM settings");
  return s;
}

fs::path manifest_dir(const Options& o) { return fs::path(o.manifest).parent_path(); }

bool selected(const SequenceEntry& e, const std::string& split) {
  return split == "all" || e.split == split;
}

std::vector<SemiRegularMesh> load_semiregular(const DatasetManifest& m, const SequenceEntry& e,
                                              const fs::path& dir) {
  if (m.rl < 2 || m.rl > 4) {
    throw Error(ErrorKind::UnsupportedLevel, "manifest is not a remeshed dataset (rl " +
                                                 std::to_string(m.rl) + ")");
  }
  std::vector<SemiRegularMesh> frames;
  for (const std::string& f : e.frames) {
    const TriMesh mesh = load_mesh(dir / f);
    if (!frames.empty() && mesh.faces == frames[0].fine.faces) {
      frames.push_back(frames[0].with_positions(mesh.vertices));
    } else {
      frames.push_back(SemiRegularMesh::from_mesh(mesh, m.rl));
    }
  }
  return frames;
}

void check_split(const std::string& split) {
  if (split != "all" && split != "train" && split != "test") {
    throw Error(ErrorKind::InvalidArgument, "split must be all, train or test");
  }
}

void write_latents_csv(const fs::path& path, const std::vector<FrameReconstruction>& recon) {
  std::ostringstream s;
  s << "timestep,patch";
  const Eigen::Index hr = recon.empty() ? 0 : recon[0].latents.cols();
  for (Eigen::Index c = 0; c < hr; ++c) s << ",z" << c;
  s << '\n';
  for (size_t t = 0; t < recon.size(); ++t) {
    for (Eigen::Index p = 0; p < recon[t].latents.rows(); ++p) {
      s << t << ',' << p;
      for (Eigen::Index c = 0; c < hr; ++c) s << ',' << fmt(recon[t].latents(p, c));
      s << '\n';
    }
  }
  write_text(path, s.str());
}

// -----------------------------------------------------------------------------
// COMMANDS
// -----------------------------------------------------------------------------

void cmd_synth(const Options& o) {
  const SyntheticSpec spec = synth_spec(o);
  const SyntheticSequence seq = generate_synthetic(spec);
  Artifacts art(o.out);
  SequenceEntry e;
  e.id = o.id.value_or(seq.id);
  e.branch = seq.branch;
  e.split = o.seq_split.value_or("train");
  if (e.split != "train" && e.split != "test") throw Error(ErrorKind::InvalidSpec, "split must be train or test");
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const std::string rel = "frames/" + frame_name("frame", static_cast<int>(t));
    save_mesh(seq.frames[t], art.path(rel));
    e.frames.push_back(rel);
  }
  save_mesh(seq.base, art.path("base.obj"));
  e.base = "base.obj";
  DatasetManifest m;
  m.sequences.push_back(e);
  save_manifest(m, art.path("manifest.json"));
  art.finish("synth");
  log("synth", e.id + ": " + std::to_string(seq.frames.size()) + " frames, base " +
                   std::to_string(seq.base.faces.size()) + " faces");
}

void cmd_remesh(const Options& o) {
  int refit_iterations = 0, base_faces = 16;
  NormalizationMode mode = NormalizationMode::aspect_preserving;
  const RemeshConfig config = remesh_config(o, refit_iterations, base_faces, mode);
  const DatasetManifest in = load_manifest(o.manifest);
  const fs::path dir = manifest_dir(o);
  Artifacts art(o.out);
  DatasetManifest out;
  out.rl = config.rl;
  out.normalization = mode;
  for (const SequenceEntry& e : in.sequences) {
    std::vector<TriMesh> raw;
    for (const std::string& f : e.frames) raw.push_back(load_mesh(dir / f));
    if (raw.empty()) throw Error(ErrorKind::EmptyDataset, "sequence " + e.id + " has no frames");
    for (const TriMesh& f : raw) {
      if (f.faces != raw[0].faces || f.vertices.size() != raw[0].vertices.size()) {
        throw Error(ErrorKind::ConnectivityMismatch, "sequence " + e.id + " changes topology");
      }
    }
    auto [frames, transform] = normalize_to_unit_range(raw, mode);
    TriMesh base;
    if (e.base == "auto") {
      base = decimate_to_base(frames[0], base_faces);
      log("remesh", e.id + ": base auto, " + std::to_string(base.faces.size()) + " faces");
    } else {
      base = transform.apply(load_mesh(dir / e.base));
      log("remesh", e.id + ": base " + e.base + ", " + std::to_string(base.faces.size()) + " faces");
    }
    SequenceEntry r;
    r.id = e.id;
    r.branch = e.branch;
    r.split = e.split;
    r.normalization = transform;
    r.base = e.id + "/base.obj";
    save_mesh(base, art.path(r.base));
    const auto fits = remesh_sequence(base, frames, config, refit_iterations,
                                      [&](int t, const FitReport& rep) {
                                        log("remesh", e.id + " frame " + std::to_string(t) +
                                                          ": chamfer " + fmt(rep.loss_history.front()) +
                                                          " -> " + fmt(rep.final_chamfer));
                                      });
    for (size_t t = 0; t < fits.size(); ++t) {
      const int ti = static_cast<int>(t);
      const std::string sr = e.id + "/" + frame_name("sr", ti);
      const std::string orig = e.id + "/" + frame_name("orig", ti);
      save_mesh(fits[t].first.fine, art.path(sr));
      save_mesh(frames[t], art.path(orig));
      const FitReport& rep = fits[t].second;
      json report{{"loss_history", rep.loss_history},
                  {"final_chamfer", rep.final_chamfer},
                  {"converged", rep.converged}};
      char name[64];
      std::snprintf(name, sizeof name, "/fit_%03d.json", ti);
      write_text(art.path(e.id + name), report.dump(1) + "\n");
      r.frames.push_back(sr);
      r.originals.push_back(orig);
    }
    out.sequences.push_back(std::move(r));
  }
  save_manifest(out, art.path("manifest.json"));
  art.finish("remesh");
}

void cmd_train(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const fs::path dir = manifest_dir(o);
  double validation_fraction = 0.3;
  const TrainConfig tc = train_config(o, validation_fraction);
  if (o.rl && *o.rl != m.rl) {
    throw Error(ErrorKind::LevelMismatch, "manifest has rl " + std::to_string(m.rl));
  }
  std::vector<std::vector<SemiRegularMesh>> seqs;
  for (const SequenceEntry& e : m.sequences) {
    if (e.split == "train") seqs.push_back(load_semiregular(m, e, dir));
  }
  if (seqs.empty()) throw Error(ErrorKind::EmptyDataset, "manifest has no train sequences");
  const ModelConfig mc = model_config(o, m.rl);
  const Dataset data = make_dataset(seqs, validation_fraction);
  log("train", std::to_string(data.train.size()) + " training patches, " +
                   std::to_string(data.validation.size()) + " validation patches");
  const TrainResult result = train(data, mc, tc, [](const EpochRecord& r) {
    log("train", "epoch " + std::to_string(r.epoch) + " train " + fmt(r.train_loss) + " val " +
                     fmt(r.val_loss));
    return true;
  });
  Artifacts art(o.out);
  save_checkpoint({kCheckpointVersion, result.params, result.history}, art.path("checkpoint.json"));
  save_history_csv(result.history, art.path("history.csv"));
  art.finish("train");
}

struct Reconstructed {
  const SequenceEntry* entry;
  std::vector<SemiRegularMesh> truth;
  std::vector<FrameReconstruction> recon;
};

std::vector<Reconstructed> reconstruct_manifest(const Options& o, const DatasetManifest& m,
                                                const ModelParams& params) {
  check_split(o.split);
  if (m.rl != params.config.rl) {
    throw Error(ErrorKind::LevelMismatch, "manifest rl " + std::to_string(m.rl) +
                                              ", checkpoint rl " + std::to_string(params.config.rl));
  }
  std::vector<Reconstructed> out;
  for (const SequenceEntry& e : m.sequences) {
    if (!selected(e, o.split)) continue;
    Reconstructed r{&e, load_semiregular(m, e, manifest_dir(o)), {}};
    r.recon = reconstruct_sequence(r.truth, params);
    out.push_back(std::move(r));
  }
  return out;
}

void write_reconstructions(Artifacts& art, const std::vector<Reconstructed>& all) {
  for (const Reconstructed& r : all) {
    for (size_t t = 0; t < r.recon.size(); ++t) {
      save_mesh(r.recon[t].mesh.fine, art.path(r.entry->id + "/" + frame_name("recon", static_cast<int>(t))));
    }
    write_latents_csv(art.path(r.entry->id + "/latents.csv"), r.recon);
  }
}

void cmd_reconstruct(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto all = reconstruct_manifest(o, m, ck.params);
  Artifacts art(o.out);
  write_reconstructions(art, all);
  art.finish("reconstruct");
  log("reconstruct", std::to_string(all.size()) + " sequences");
}

void cmd_evaluate(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto all = reconstruct_manifest(o, m, ck.params);
  Artifacts art(o.out);
  write_reconstructions(art, all);
  std::vector<MetricRecord> records;
  for (const Reconstructed& r : all) {
    const SequenceEntry& e = *r.entry;
    const bool uniform = e.normalization && e.normalization->is_uniform();
    double p2s_sum = 0.0;
    for (size_t t = 0; t < r.recon.size(); ++t) {
      const int ti = static_cast<int>(t);
      const auto& recon = r.recon[t].mesh.fine.vertices;
      const auto& truth = r.truth[t].fine.vertices;
      records.push_back({"vertex_mse", vertex_mse(recon, truth), "normalized^2", e.id, ti});
      if (uniform) {
        std::vector<double> d(recon.size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = (recon[i] - truth[i]).norm();
        records.push_back({"vertex_euclidean", euclidean_error_units(d, *e.normalization), "model", e.id, ti});
      }
      if (t < e.originals.size()) {
        const TriMesh original = load_mesh(manifest_dir(o) / e.originals[t]);
        const SurfaceIndex surface(original);
        const auto d2 = p2s_squared_distances(recon, surface);
        double mean = 0.0;
        std::vector<double> d(d2.size());
        for (size_t i = 0; i < d2.size(); ++i) {
          mean += d2[i];
          d[i] = std::sqrt(d2[i]);
        }
        mean /= static_cast<double>(d2.size());
        p2s_sum += mean;
        records.push_back({"p2s", mean, "normalized^2", e.id, ti});
        if (uniform) {
          records.push_back({"p2s_euclidean", euclidean_error_units(d, *e.normalization), "model", e.id, ti});
        }
      }
    }
    if (!e.originals.empty()) {
      log("evaluate", e.id + ": mean p2s " + fmt(p2s_sum / static_cast<double>(r.recon.size())));
    }
  }
  write_text(art.path("metrics.json"), metrics_to_json(records) + "\n");
  art.finish("evaluate");
}

void cmd_embed(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto all = reconstruct_manifest(o, m, ck.params);
  Artifacts art(o.out);
  for (const Reconstructed& r : all) {
    std::vector<Eigen::MatrixXd> latents;
    for (const auto& f : r.recon) latents.push_back(f.latents);
    const EmbeddingRun run = embed_sequence(latents);
    const std::string& id = r.entry->id;
    std::ostringstream shape, patch;
    shape << "timestep,pc1,pc2\n";
    patch << "timestep,patch,pc1,pc2\n";
    for (Eigen::Index t = 0; t < run.shape_2d.rows(); ++t) {
      shape << t << ',' << fmt(run.shape_2d(t, 0)) << ',' << fmt(run.shape_2d(t, 1)) << '\n';
      for (int p = 0; p < run.patch_count(); ++p) {
        patch << t << ',' << p << ',' << fmt(run.patch_2d[p](t, 0)) << ',' << fmt(run.patch_2d[p](t, 1))
              << '\n';
      }
    }
    write_text(art.path(id + "/shape_embedding.csv"), shape.str());
    write_text(art.path(id + "/patch_embedding.csv"), patch.str());
    write_latents_csv(art.path(id + "/latents.csv"), r.recon);
    const auto& ev = run.shape_projection.explained_variance;
    json proj{{"sequence", id},
              {"timesteps", run.shape_2d.rows()},
              {"patches", run.patch_count()},
              {"explained_variance", {ev[0], ev[1]}}};
    write_text(art.path(id + "/projection.json"), proj.dump(1) + "\n");
  }
  art.finish("embed");
}

void cmd_score(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  int samples_per_segment = 20;
  bool standardize = true;
  const SvmConfig svm = svm_config(o, samples_per_segment, standardize);
  const auto all = reconstruct_manifest(o, m, ck.params);
  if (all.size() < 2) throw Error(ErrorKind::SingleClass, "scoring needs at least two sequences");
  const Eigen::Index k = all[0].recon.at(0).latents.rows();
  std::vector<EmbeddingRun> runs;
  for (const Reconstructed& r : all) {
    if (r.recon.at(0).latents.rows() != k) {
      throw Error(ErrorKind::ShapeMismatch, "sequences differ in patch count");
    }
    std::vector<Eigen::MatrixXd> latents;
    for (const auto& f : r.recon) latents.push_back(f.latents);
    runs.push_back(embed_sequence(latents));
  }

  // one label per sequence: manifest branches, else 2-means of final shapes
  std::vector<int> seq_label(all.size());
  bool have_branches = true;
  for (const Reconstructed& r : all) have_branches &= !r.entry->branch.empty();
  if (have_branches) {
    std::set<std::string> names;
    for (const Reconstructed& r : all) names.insert(r.entry->branch);
    if (names.size() != 2) throw Error(ErrorKind::SingleClass, "scoring needs exactly two branch labels");
    for (size_t s = 0; s < all.size(); ++s) seq_label[s] = all[s].entry->branch == *names.begin() ? 0 : 1;
  } else {
    Eigen::MatrixXd finals(static_cast<Eigen::Index>(all.size()), runs[0].shape_embedding.cols());
    for (size_t s = 0; s < all.size(); ++s) {
      finals.row(s) = runs[s].shape_embedding.row(runs[s].shape_embedding.rows() - 1);
    }
    seq_label = two_means_labels(finals);
    log("score", "branch labels derived by 2-means");
  }

  Artifacts art(o.out);
  std::ostringstream csv;
  csv << "patch,svm_accuracy,trajectory_chamfer\n";
  json scores = json::array();
  for (Eigen::Index p = 0; p < k; ++p) {
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<int> labels;
    double chamfer = 0.0;
    for (size_t s = 0; s < all.size(); ++s) {
      for (const auto& f : all[s].recon) {
        rows.push_back(f.latents.row(p));
        labels.push_back(seq_label[s]);
      }
      chamfer += trajectory_chamfer_score(runs[s].shape_2d, runs[s].patch_2d[p], samples_per_segment,
                                          standardize);
    }
    chamfer /= static_cast<double>(all.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) x.row(i) = rows[i];
    const double acc = svm_patch_score(x, labels, svm);
    csv << p << ',' << fmt(acc) << ',' << fmt(chamfer) << '\n';
    scores.push_back({{"patch", p}, {"svm_accuracy", acc}, {"trajectory_chamfer", chamfer}});
  }
  write_text(art.path("scores.csv"), csv.str());
  write_text(art.path("scores.json"), scores.dump(1) + "\n");
  art.finish("score");
}

void cmd_interpolate(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const fs::path dir = manifest_dir(o);
  const auto find = [&](const std::string& id) -> const SequenceEntry& {
    for (const SequenceEntry& e : m.sequences) {
      if (e.id == id) return e;
    }
    throw Error(ErrorKind::InvalidArgument, "no sequence " + id);
  };
  const std::string id_a = o.seq_a.empty() ? m.sequences.at(0).id : o.seq_a;
  const std::string id_b = o.seq_b.empty() ? id_a : o.seq_b;
  const auto seq_a = load_semiregular(m, find(id_a), dir);
  const auto seq_b = load_semiregular(m, find(id_b), dir);
  const int fa = o.frame_a, fb = o.frame_b.value_or(static_cast<int>(seq_b.size()) - 1);
  if (fa < 0 || fa >= static_cast<int>(seq_a.size()) || fb < 0 || fb >= static_cast<int>(seq_b.size())) {
    throw Error(ErrorKind::InvalidArgument, "frame index out of range");
  }
  if (!same_topology(seq_a[fa], seq_b[fb])) {
    throw Error(ErrorKind::ShapeMismatch, "interpolation needs a shared base topology");
  }
  const auto ra = reconstruct_sequence({seq_a[fa]}, ck.params);
  const auto rb = reconstruct_sequence({seq_b[fb]}, ck.params);
  Artifacts art(o.out);
  for (double alpha : o.alphas) {
    const SemiRegularMesh mesh = latent_interpolate(ra[0].latents, ra[0].offsets, rb[0].latents,
                                                    rb[0].offsets, alpha, seq_a[fa], ck.params);
    char name[64];
    std::snprintf(name, sizeof name, "interp_%.3f.obj", alpha);
    save_mesh(mesh.fine, art.path(name));
  }
  art.finish("interpolate");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Semi-regular mesh autoencoder toolkit"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* c, bool needs_out = true) {
    c->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "seed for every random stream");
    auto* out = c->add_option("--out", o.out, "output directory");
    if (needs_out) out->required();
  };
  const auto manifest = [&](CLI::App* c) {
    c->add_option("--manifest", o.manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  };
  const auto checkpoint = [&](CLI::App* c) {
    c->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
    c->add_option("--split", o.split, "sequences to process: all, train or test");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic deforming sequence");
  common(synth);
  synth->add_option("--kind", o.kind, "wavy_sheet or crush_tube");
  synth->add_option("--timesteps", o.timesteps);
  synth->add_option("--amplitude", o.amplitude);
  synth->add_option("--branch", o.branch, "crush_tube fold branch, A or B");
  synth->add_option("--base-resolution", o.base_resolution);
  synth->add_option("--base-style", o.base_style, "fan or diagonal");
  synth->add_option("--frame-resolution", o.frame_resolution);
  synth->add_option("--id", o.id, "sequence id");
  synth->add_option("--split", o.seq_split, "manifest split tag, train or test");

  auto* remesh = app.add_subcommand("remesh", "fit semi-regular meshes to every frame");
  common(remesh);
  manifest(remesh);
  remesh->add_option("--rl", o.rl, "refinement level (2, 3 or 4)");
  remesh->add_option("--iterations", o.iterations);
  remesh->add_option("--refit-iterations", o.refit_iterations, "iterations for frames after the first");
  remesh->add_option("--step-size", o.step_size);
  remesh->add_option("--samples-per-face", o.samples_per_face);
  remesh->add_option("--regularizer", o.regularizer);
  remesh->add_option("--base-faces", o.base_faces, "decimation target for base \"auto\"");
  remesh->add_option("--normalization", o.normalization, "aspect_preserving or per_axis");

  auto* train_cmd = app.add_subcommand("train", "train the autoencoder");
  common(train_cmd);
  manifest(train_cmd);
  train_cmd->add_option("--rl", o.rl, "expected refinement level");
  train_cmd->add_option("--K", o.K);
  train_cmd->add_option("--hr", o.hr);
  train_cmd->add_option("--precision", o.precision, "f32 or f64");
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--lr", o.lr);
  train_cmd->add_option("--batch-size", o.batch_size);
  train_cmd->add_option("--loss", o.loss, "surface_aware or patch_mse");
  train_cmd->add_option("--validation-fraction", o.validation_fraction);
  train_cmd->add_flag("--no-augment", o.no_augment, "disable rotation augmentation");

  auto* recon = app.add_subcommand("reconstruct", "reconstruct sequences with a checkpoint");
  common(recon);
  manifest(recon);
  checkpoint(recon);

  auto* evaluate = app.add_subcommand("evaluate", "reconstruct and compute error metrics");
  common(evaluate);
  manifest(evaluate);
  checkpoint(evaluate);

  auto* embed = app.add_subcommand("embed", "project latent codes to 2D");
  common(embed);
  manifest(embed);
  checkpoint(embed);

  auto* score = app.add_subcommand("score", "per-patch localization scores");
  common(score);
  manifest(score);
  checkpoint(score);
  score->add_option("--svm-lambda", o.svm_lambda);
  score->add_option("--svm-epochs", o.svm_epochs);
  score->add_option("--samples-per-segment", o.samples_per_segment);
  score->add_flag("--no-standardize", o.no_standardize, "compare raw 2D trajectories");

  auto* interp = app.add_subcommand("interpolate", "decode blended latent codes");
  common(interp);
  manifest(interp);
  checkpoint(interp);
  interp->add_option("--seq-a", o.seq_a);
  interp->add_option("--frame-a", o.frame_a);
  interp->add_option("--seq-b", o.seq_b);
  interp->add_option("--frame-b", o.frame_b, "defaults to the last frame");
  interp->add_option("--alphas", o.alphas)->delimiter(',');

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::InvalidArgument);
  }

  try {
    if (*synth) cmd_synth(o);
    else if (*remesh) cmd_remesh(o);
    else if (*train_cmd) cmd_train(o);
    else if (*recon) cmd_reconstruct(o);
    else if (*evaluate) cmd_evaluate(o);
    else if (*embed) cmd_embed(o);
    else if (*score) cmd_score(o);
    else if (*interp) cmd_interpolate(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << '\n';
    return exit_code(ErrorKind::IoError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace cosma
