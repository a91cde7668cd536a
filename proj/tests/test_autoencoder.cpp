#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "cosma/autoencoder.hpp"
#include "cosma/error.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace cosma;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

SemiRegularMesh jittered(const TriMesh& base, int rl, std::uint64_t seed, double amount = 0.05) {
  SemiRegularMesh m = SemiRegularMesh::from_base(base, rl);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amount);
  for (Vec3& p : m.fine.vertices) p += Vec3(g(rng), g(rng), g(rng));
  return m;
}

ModelConfig tiny(int rl = 2, std::uint64_t seed = 0) {
  ModelConfig c;
  c.rl = rl;
  c.K = 3;
  c.hr = 4;
  c.channels1 = 4;
  c.channels2 = 5;
  c.seed = seed;
  return c;
}

// default widths on the smallest lattice
ModelConfig standard(int rl, std::uint64_t seed) {
  ModelConfig c;
  c.rl = rl;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("parameter counts") {
  ModelConfig c;
  const ModelParams p = build_model(c);
  CHECK(p.parameter_count() == 23053);
  const std::vector<int> expected{304, 3104, 4810, 5280, 6176, 3088, 291};
  const std::vector<std::string> names{"enc_conv1", "enc_conv2", "enc_fc", "dec_fc", "dec_conv1", "dec_conv2", "dec_conv3"};
  REQUIRE(p.layers.size() == 7);
  int offset = 0;
  for (size_t i = 0; i < 7; ++i) {
    CHECK(p.layers[i].name == names[i]);
    CHECK(p.layers[i].parameter_count() == expected[i]);
    CHECK(p.layers[i].offset == offset);
    offset += p.layers[i].parameter_count();
  }
  c.rl = 3;
  c.hr = 8;
  const ModelParams q = model_layout(c);
  CHECK(q.parameter_count() == 16235);
  CHECK(q.layer("enc_fc").parameter_count() == 1544);
  CHECK(q.layer("dec_fc").parameter_count() == 1728);
  CHECK(embedding_vertex_count(4) == 15);
  CHECK(embedding_vertex_count(3) == 6);
  CHECK(embedding_vertex_count(2) == 3);

  c.rl = 5;
  CHECK(kind_of([&] { build_model(c); }) == ErrorKind::UnsupportedLevel);
  c.rl = 4;
  c.K = 0;
  CHECK(kind_of([&] { build_model(c); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("initialization") {
  ModelConfig c;
  c.seed = 7;
  const ModelParams a = build_model(c), b = build_model(c);
  CHECK(a.values == b.values);
  c.seed = 8;
  CHECK(build_model(c).values != a.values);
  for (const LayerSpec& l : a.layers) {
    const double bound = std::sqrt(6.0 / (l.K * l.in + l.out));
    double largest = 0;
    for (int i = 0; i < l.weight_count(); ++i) largest = std::max(largest, std::abs(a.values[l.offset + i]));
    CHECK(largest <= bound);
    CHECK(largest > 0.5 * bound);
    for (int i = l.weight_count(); i < l.parameter_count(); ++i) CHECK(a.values[l.offset + i] == 0.0);
  }
}

TEST_CASE("forward shapes and the zero input") {
  const ModelConfig c = tiny(3, 4);
  ModelParams p = build_model(c);
  const PaddedPatchTemplate& t = patch_template(3);
  const MatrixXd x = MatrixXd::Random(t.total_count, 3);
  const VectorXd z = encode(x, p);
  CHECK(z.size() == c.hr);
  const MatrixXd y = decode(z, p);
  CHECK(y.rows() == x.rows());
  CHECK(y.cols() == 3);

  const LayerSpec& fc = p.layer("enc_fc");
  for (int i = 0; i < fc.out; ++i) p.values[fc.offset + fc.weight_count() + i] = 0.1 * (i + 1);
  const VectorXd z0 = encode(MatrixXd::Zero(t.total_count, 3), p);
  for (int i = 0; i < fc.out; ++i) CHECK(z0(i) == doctest::Approx(0.1 * (i + 1)).epsilon(1e-15));

  CHECK(kind_of([&] { encode(MatrixXd::Zero(10, 3), p); }) == ErrorKind::ShapeMismatch);
  CHECK(kind_of([&] { decode(VectorXd::Zero(c.hr + 1), p); }) == ErrorKind::ShapeMismatch);

  // batched and single forms agree
  const std::vector<MatrixXd> xs{x, 2 * x, -x};
  const MatrixXd zs = encode_batch(xs, p);
  const auto ys = decode_batch(zs, p);
  for (int i = 0; i < 3; ++i) {
    CHECK((zs.row(i).transpose() - encode(xs[i], p)).norm() <= 1e-12);
    CHECK((ys[i] - decode(zs.row(i).transpose(), p)).norm() <= 1e-12);
  }
}

TEST_CASE("single precision follows double precision") {
  ModelConfig c = tiny(2, 2);
  const ModelParams p64 = build_model(c);
  ModelParams p32 = p64;
  p32.config.precision = Precision::f32;
  const MatrixXd x = MatrixXd::Random(patch_template(2).total_count, 3);
  const VectorXd a = encode(x, p64), b = encode(x, p32);
  CHECK((a - b).norm() <= 1e-4 * (1 + a.norm()));
  const MatrixXd ya = decode(a, p64), yb = decode(a, p32);
  CHECK((ya - yb).norm() <= 1e-4 * (1 + ya.norm()));
}

TEST_CASE("surface aware loss") {
  MatrixXd x = MatrixXd::Zero(3, 3), y = MatrixXd::Zero(3, 3);
  y(0, 0) = std::sqrt(0.1);
  y(1, 1) = std::sqrt(0.2);
  y(2, 0) = std::sqrt(0.15);
  y(2, 2) = std::sqrt(0.15);
  const VectorXd w = (VectorXd(3) << 1.0, 0.5, 0.5).finished();
  CHECK(surface_aware_loss(x, y, w) == doctest::Approx(0.35 / 3).epsilon(1e-14));
  CHECK(surface_aware_loss(y, y, w) == 0.0);
  const VectorXd ones = VectorXd::Ones(3);
  CHECK(surface_aware_loss(x, y, ones) == doctest::Approx((x - y).squaredNorm() / 3));
  // rows past the interior are ignored
  MatrixXd xp = MatrixXd::Zero(5, 3), yp = MatrixXd::Zero(5, 3);
  yp.topRows(3) = y;
  yp.bottomRows(2).setOnes();
  CHECK(surface_aware_loss(xp, yp, w) == doctest::Approx(0.35 / 3));
  CHECK(kind_of([&] { surface_aware_loss(x, MatrixXd::Zero(2, 3), w); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("patch-averaged loss equals the multiplicity-normalized vertex error") {
  const std::vector<TriMesh> bases{fixtures::random_grid(2, 1), fixtures::octahedron(), fixtures::hexagon()};
  std::uint64_t seed = 0;
  for (const TriMesh& base : bases) {
    for (int rl = 2; rl <= 3; ++rl) {
      const SemiRegularMesh m = jittered(base, rl, ++seed);
      const SemiRegularMesh r = jittered(base, rl, ++seed);
      const PatchSet ps = extract_patches(m);
      const auto samples = frame_samples(m);
      const PaddedPatchTemplate& t = patch_template(rl);
      double patchwise = 0;
      for (int p = 0; p < ps.patch_count(); ++p) {
        MatrixXd y(t.total_count, 3);
        for (int s = 0; s < t.total_count; ++s) {
          y.row(s) = (r.fine.vertices[ps.topology->slot_vertex[p][s]] - ps.offsets[p]).transpose();
        }
        patchwise += surface_aware_loss(samples[p].features, y, samples[p].weights);
      }
      patchwise /= ps.patch_count();
      double global = 0;
      for (int v = 0; v < m.vertex_count(); ++v) global += (m.fine.vertices[v] - r.fine.vertices[v]).squaredNorm();
      global /= static_cast<double>(ps.patch_count()) * t.interior_count;
      CHECK(std::abs(patchwise - global) <= 1e-12);
    }
  }
}

TEST_CASE("rotations leave the loss unchanged") {
  const SemiRegularMesh m = jittered(fixtures::random_grid(2, 3), 3, 3);
  const SemiRegularMesh r = jittered(fixtures::random_grid(2, 3), 3, 4);
  const auto xs = frame_samples(m), ys = frame_samples(r);
  const PaddedPatchTemplate& t = patch_template(3);
  for (size_t p = 0; p < xs.size(); ++p) {
    const double base = surface_aware_loss(xs[p].features, ys[p].features, xs[p].weights);
    for (int rot = 1; rot < 3; ++rot) {
      const PatchSample a = rotate_sample(xs[p], t, rot), b = rotate_sample(ys[p], t, rot);
      CHECK(a.weights.sum() == doctest::Approx(xs[p].weights.sum()));
      CHECK(surface_aware_loss(a.features, b.features, a.weights) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("whole-model gradient against finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ModelParams p = build_model(tiny(2, seed));
    std::mt19937_64 rng(seed);
    for (double& v : p.values) v += 0.01 * gradcheck::random_matrix(1, 1, rng)(0, 0);
    const auto samples = frame_samples(jittered(fixtures::random_grid(1, seed), 2, seed, 0.1));
    for (LossKind kind : {LossKind::surface_aware, LossKind::patch_mse}) {
      const std::vector<int> rot{0, 1};
      const LossGradient lg = loss_and_gradient(p, samples, kind, rot);
      Eigen::Map<MatrixXd> values(p.values.data(), p.parameter_count(), 1);
      const MatrixXd analytic = Eigen::Map<const MatrixXd>(lg.gradient.data(), p.parameter_count(), 1);
      const auto f = [&] { return loss_and_gradient(p, samples, kind, rot).loss; };
      const MatrixXd numeric = gradcheck::numeric_gradient(values, f);
      for (const LayerSpec& l : p.layers) {
        CAPTURE(l.name);
        CHECK(gradcheck::norm_relative_error(analytic.middleRows(l.offset, l.parameter_count()),
                                             numeric.middleRows(l.offset, l.parameter_count())) < 1e-5);
      }
      CHECK(gradcheck::norm_relative_error(analytic, numeric) < 1e-7);
    }
  }
}

TEST_CASE("training") {
  const auto all = frame_samples(jittered(fixtures::single_triangle(), 2, 1, 0.1));
  Dataset one{{all[0]}, {}};
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 200;
  tc.batch_size = 1;
  const TrainResult r = train(one, standard(2, 1), tc);
  CHECK(r.history.size() == 200);
  CHECK(r.steps == 600);  // three rotations of one patch per epoch
  CHECK(r.history.back().train_loss < 0.01 * r.history.front().train_loss);
  CHECK(std::isnan(r.history.back().val_loss));

  const TrainResult again = train(one, standard(2, 1), tc);
  CHECK(again.params.values == r.params.values);
  for (size_t i = 0; i < r.history.size(); ++i) CHECK(again.history[i].train_loss == r.history[i].train_loss);

  tc.augment_rotations = false;
  tc.epochs = 5;
  CHECK(train(one, tiny(2, 1), tc).steps == 5);

  // small steps never increase the loss
  tc.learning_rate = 1e-5;
  tc.epochs = 30;
  const TrainResult slow = train(one, tiny(2, 5), tc);
  for (size_t i = 1; i < slow.history.size(); ++i) {
    CHECK(slow.history[i].train_loss <= slow.history[i - 1].train_loss + 1e-9);
  }

  // early stop through the callback
  int calls = 0;
  const TrainResult stopped = train(one, tiny(2, 1), tc, [&](const EpochRecord&) { return ++calls < 3; });
  CHECK(stopped.history.size() == 3);

  Dataset bad = one;
  bad.train[0].features(0, 0) = std::nan("");
  CHECK(kind_of([&] { train(bad, tiny(2, 1), tc); }) == ErrorKind::NonFiniteLoss);
  CHECK(kind_of([&] { train(Dataset{}, tiny(2, 1), tc); }) == ErrorKind::EmptyDataset);
  tc.batch_size = 0;
  CHECK(kind_of([&] { train(one, tiny(2, 1), tc); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("datasets split the tail of each sequence") {
  std::vector<SemiRegularMesh> seq;
  for (int t = 0; t < 10; ++t) seq.push_back(jittered(fixtures::random_grid(1, 0), 2, t));
  const Dataset d = make_dataset({seq, std::vector<SemiRegularMesh>(seq.begin(), seq.begin() + 4)});
  // 10 frames: 7 train, 3 validation; 4 frames: 3 train, 1 validation; 2 patches each
  CHECK(d.train.size() == 2 * (7 + 3));
  CHECK(d.validation.size() == 2 * (3 + 1));
  const Dataset all = make_dataset({seq}, 0.0);
  CHECK(all.train.size() == 20);
  CHECK(all.validation.empty());
}

TEST_CASE("reconstruction") {
  const ModelParams p = build_model(tiny(2, 3));
  const std::vector<SemiRegularMesh> frames{jittered(fixtures::octahedron(), 2, 1), jittered(fixtures::octahedron(), 2, 2)};
  const auto rec = reconstruct_sequence(frames, p);
  REQUIRE(rec.size() == 2);
  CHECK(rec[0].latents.rows() == 8);
  CHECK(rec[0].latents.cols() == 4);
  CHECK(rec[0].offsets.size() == 8);
  CHECK(same_topology(rec[0].mesh, frames[0]));
  const SemiRegularMesh again = decode_frame(rec[1].latents, rec[1].offsets, frames[1], p);
  CHECK(again.fine.vertices == rec[1].mesh.fine.vertices);

  // a different base mesh works with the same parameters
  const std::vector<SemiRegularMesh> other{jittered(fixtures::hexagon(), 2, 5)};
  CHECK(reconstruct_sequence(other, p)[0].latents.rows() == 6);

  const std::vector<SemiRegularMesh> wrong{jittered(fixtures::octahedron(), 3, 1)};
  CHECK(kind_of([&] { reconstruct_sequence(wrong, p); }) == ErrorKind::LevelMismatch);
}

TEST_CASE("checkpoints") {
  const auto dir = fixtures::temp_dir("ckpt");
  Checkpoint ck;
  ck.params = build_model(tiny(3, 9));
  ck.params.values[0] = 1.0 / 3.0;
  ck.history = {{0, 0.5, 0.25}, {1, 0.125, std::nan("")}};
  save_checkpoint(ck, dir / "a.json");
  const Checkpoint back = load_checkpoint(dir / "a.json");
  CHECK(back.params.values == ck.params.values);
  CHECK(back.params.config.rl == 3);
  CHECK(back.params.config.hr == 4);
  CHECK(back.params.config.K == 3);
  CHECK(back.history.size() == 2);
  CHECK(std::isnan(back.history[1].val_loss));
  CHECK(back.history[0].val_loss == 0.25);
  save_checkpoint(back, dir / "b.json");
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  const std::string text = slurp(dir / "a.json");
  std::ofstream(dir / "trunc.json") << text.substr(0, text.size() / 2);
  CHECK(kind_of([&] { load_checkpoint(dir / "trunc.json"); }) == ErrorKind::ParseError);
  auto j = checkpoint_to_json(ck);
  const auto pos = j.find("\"format_version\"");
  REQUIRE(pos != std::string::npos);
  const auto colon = j.find(':', pos);
  const auto comma = j.find_first_of(",}", colon);
  j.replace(colon + 1, comma - colon - 1, " 2");
  CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::VersionMismatch);
  CHECK(kind_of([&] { load_checkpoint(dir / "none.json"); }) == ErrorKind::IoError);

  // an rl=3 checkpoint cannot reconstruct rl=4 frames
  const std::vector<SemiRegularMesh> fine{SemiRegularMesh::from_base(fixtures::single_triangle(), 4)};
  CHECK(kind_of([&] { reconstruct_sequence(fine, back.params); }) == ErrorKind::LevelMismatch);

  save_history_csv(ck.history, dir / "h.csv");
  std::ifstream in(dir / "h.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,train_loss,val_loss");
  CHECK(row == "0,0.5,0.25");
}
