#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cosma/autoencoder.hpp"
#include "cosma/error.hpp"

namespace cosma {

using nlohmann::json;

namespace {

json config_to_json(const ModelConfig& c) {
  return {{"rl", c.rl},
          {"K", c.K},
          {"hr", c.hr},
          {"channels", {c.channels1, c.channels2}},
          {"seed", c.seed},
          {"precision", to_string(c.precision)}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.rl = j.at("rl").get<int>();
  c.K = j.at("K").get<int>();
  c.hr = j.at("hr").get<int>();
  const auto ch = j.at("channels").get<std::vector<int>>();
  if (ch.size() != 2) throw Error(ErrorKind::ParseError, "channels must list two values");
  c.channels1 = ch[0];
  c.channels2 = ch[1];
  c.seed = j.at("seed").get<std::uint64_t>();
  c.precision = precision_from_string(j.at("precision").get<std::string>());
  return c;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_nullable(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ck) {
  json j;
  j["format_version"] = ck.format_version;
  j["model_config"] = config_to_json(ck.params.config);
  json layers = json::array();
  for (const LayerSpec& l : ck.params.layers) {
    const auto begin = ck.params.values.begin() + l.offset;
    json jl;
    jl["name"] = l.name;
    jl["kind"] = l.kind == LayerKind::cheb ? "cheb" : "dense";
    jl["shape"] = l.kind == LayerKind::cheb ? json{l.K, l.in, l.out} : json{l.out, l.in};
    jl["weights"] = std::vector<double>(begin, begin + l.weight_count());
    jl["bias"] = std::vector<double>(begin + l.weight_count(), begin + l.parameter_count());
    layers.push_back(jl);
  }
  j["layers"] = layers;
  json history = json::array();
  for (const EpochRecord& r : ck.history) {
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", nullable(r.train_loss)},
                       {"val_loss", nullable(r.val_loss)}});
  }
  j["history"] = history;
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("checkpoint: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.format_version = j.at("format_version").get<int>();
    if (ck.format_version != kCheckpointVersion) {
      throw Error(ErrorKind::VersionMismatch, "checkpoint format " +
                                                  std::to_string(ck.format_version) + ", expected " +
                                                  std::to_string(kCheckpointVersion));
    }
    ck.params = model_layout(config_from_json(j.at("model_config")));
    const json& layers = j.at("layers");
    if (layers.size() != ck.params.layers.size()) {
      throw Error(ErrorKind::ParseError, "checkpoint has " + std::to_string(layers.size()) +
                                             " layers, expected " +
                                             std::to_string(ck.params.layers.size()));
    }
    for (size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& l = ck.params.layers[i];
      const json& jl = layers[i];
      const auto w = jl.at("weights").get<std::vector<double>>();
      const auto b = jl.at("bias").get<std::vector<double>>();
      if (jl.at("name").get<std::string>() != l.name ||
          static_cast<int>(w.size()) != l.weight_count() || static_cast<int>(b.size()) != l.out) {
        throw Error(ErrorKind::ParseError, "layer " + l.name + " does not match the model config");
      }
      std::copy(w.begin(), w.end(), ck.params.values.begin() + l.offset);
      std::copy(b.begin(), b.end(), ck.params.values.begin() + l.offset + l.weight_count());
    }
    for (const json& r : j.at("history")) {
      ck.history.push_back({r.at("epoch").get<int>(), from_nullable(r.at("train_loss")),
                            from_nullable(r.at("val_loss"))});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << checkpoint_to_json(checkpoint) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  char buf[128];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_loss);
    out << buf;
  }
}

}  // namespace cosma
