#include "previs/camera.hpp"
#include "previs/error.hpp"
#include "previs/features.hpp"
#include "previs/ranker.hpp"
#include "previs/shot.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace previs;

namespace {

StoryParams standing(int T)
{
  StoryParams s;
  s.character_id = "Anna";
  s.clip.duration_frames = T;
  s.path.waypoints.assign(T, Vec3::Zero());
  return s;
}

RankerConfig tiny_config(std::uint64_t seed = 7)
{
  RankerConfig c;
  c.input_dim = 6;
  c.hidden = 8;
  c.embed = 4;
  c.queue_size = 16;
  c.seed = seed;
  return c;
}

TrainSample random_sample(int dim, std::mt19937_64& rng, int frames = 8)
{
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> mv(0, kMovementClasses - 1), three(0, 2), bit(0, 1);
  TrainSample s;
  s.view_a = Eigen::MatrixXd::NullaryExpr(frames, dim, [&] { return n(rng); });
  s.view_b = Eigen::MatrixXd::NullaryExpr(frames, dim, [&] { return n(rng); });
  s.y = bit(rng);
  s.labels = {mv(rng), three(rng), three(rng)};
  return s;
}

double block_sum(const Eigen::VectorXd& p, int start, int n) { return p.segment(start, n).sum(); }

}  // namespace

TEST_CASE("feature views")
{
  CHECK(view_indices(80, 8, false) == std::vector<int>{5, 15, 25, 35, 45, 55, 65, 75});
  CHECK(view_indices(80, 8, true) == std::vector<int>{0, 10, 20, 30, 40, 50, 60, 70});
  const auto short_a = view_indices(5, 8, false);
  CHECK(short_a.size() == 8);
  for (int i : short_a) CHECK((i >= 0 && i < 5));

  const StoryParams s = standing(40);
  const auto p = simulate_shot(s, gen_static(s, {}, Reference::Start), kPreviewSize, "x");
  const FeatureConfig fc;
  const ShotFeatures f = extract_features(SceneMesh{}, p, fc);
  CHECK(f.view_a.rows() == 8);
  CHECK(f.view_a.cols() == fc.dim());
  CHECK(f.view_b.rows() == 8);
  CHECK_FALSE(f.overlapping);
  CHECK(f.view_a.allFinite());
  // Static shot: camera speed column all zeros.
  CHECK(f.view_a.col(fc.dim() - 1).isZero(0.0));
  CHECK(f.view_b.col(fc.dim() - 1).isZero(0.0));
  const ShotFeatures g = extract_features(SceneMesh{}, p, fc);
  CHECK(f.view_a == g.view_a);
  CHECK(f.view_b == g.view_b);

  const StoryParams tiny = standing(12);
  const auto q = simulate_shot(tiny, gen_static(tiny, {}, Reference::Start), kPreviewSize, "y");
  CHECK(extract_features(SceneMesh{}, q, fc).overlapping);

  const auto no_b = extract_features(SceneMesh{}, p, fc, false);
  CHECK(no_b.view_b.size() == 0);
}

TEST_CASE("luminance grid")
{
  Frame f;
  f.width = 64;
  f.height = 32;
  f.rgb.assign(3 * 64 * 32, 255);
  const auto white = luminance_grid(f, 4);
  CHECK(white.size() == 16);
  for (int i = 0; i < 16; ++i) CHECK(white[i] == doctest::Approx(1.0));
  // Left half black.
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) f.rgb[3 * (y * 64 + x) + c] = 0;
  const auto half = luminance_grid(f, 4);
  CHECK(half[0] == doctest::Approx(0.0));
  CHECK(half[3] == doctest::Approx(1.0));
}

TEST_CASE("forward outputs")
{
  RankerConfig cfg = tiny_config();
  cfg.zero_heads = true;
  RankerModel zero(cfg);
  std::mt19937_64 rng(1);
  const auto s = random_sample(cfg.input_dim, rng);
  const auto out = zero.forward(s.view_a);
  CHECK(out.p_b == doctest::Approx(0.5).epsilon(1e-12));
  for (int i = 0; i < kMovementClasses; ++i) CHECK(out.class_probs[i] == doctest::Approx(1.0 / 11));
  for (int i = kMovementClasses; i < kClassOutputs; ++i) CHECK(out.class_probs[i] == doctest::Approx(1.0 / 3));

  for (int draw = 0; draw < 100; ++draw) {
    RankerModel m(tiny_config(100 + draw));
    const auto o = m.forward(random_sample(cfg.input_dim, rng).view_a);
    CHECK(o.p_b > 0.0);
    CHECK(o.p_b < 1.0);
    CHECK(block_sum(o.class_probs, 0, 11) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(block_sum(o.class_probs, 11, 3) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(block_sum(o.class_probs, 14, 3) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(o.z.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Doubling the projection keeps z; doubling the binary head moves p_b.
  RankerModel m(tiny_config(3));
  const auto base = m.forward(s.view_a);
  const auto& L = m.layout();
  m.params().segment(L.Wp, L.bp + L.dz - L.Wp) *= 2.0;
  m.params().segment(L.wb, L.bb + 1 - L.wb) *= 2.0;
  const auto scaled = m.forward(s.view_a);
  CHECK((scaled.z - base.z).norm() < 1e-12);
  CHECK(scaled.z.norm() == doctest::Approx(1.0));
  CHECK(scaled.p_b != base.p_b);
}

TEST_CASE("loss values")
{
  CHECK(loss_binary(0.5, 1) == doctest::Approx(std::log(2.0)));
  CHECK(loss_binary(0.5, 1) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(loss_binary(1.0, 1) < 1e-6);
  CHECK(loss_binary(0.9, 0) == doctest::Approx(-std::log(0.1)));
  CHECK(loss_binary(0.9, 0) == doctest::Approx(2.3026).epsilon(1e-4));
  CHECK(std::isfinite(loss_binary(0.0, 1)));
  CHECK(loss_binary(0.0, 1) == doctest::Approx(-std::log(1e-7)));

  Eigen::VectorXd uniform(kClassOutputs);
  uniform.head(11).setConstant(1.0 / 11);
  uniform.tail(6).setConstant(1.0 / 3);
  const double ln_sum = std::log(11.0) + 2 * std::log(3.0);
  CHECK(loss_class(uniform, {4, 1, 2}) == doctest::Approx(ln_sum));
  CHECK(ln_sum == doctest::Approx(4.5951).epsilon(1e-4));
  Eigen::VectorXd onehot = Eigen::VectorXd::Zero(kClassOutputs);
  onehot[4] = 1;
  onehot[11 + 1] = 1;
  onehot[14 + 2] = 1;
  CHECK(loss_class(onehot, {4, 1, 2}) < 1e-6);
  Eigen::VectorXd mixed = uniform;
  mixed.head(11).setZero();
  mixed[4] = 1;
  CHECK(loss_class(mixed, {4, 1, 2}) == doctest::Approx(2 * std::log(3.0)));
  CHECK(2 * std::log(3.0) == doctest::Approx(2.1972).epsilon(1e-4));

  // Uniform similarities: ln K with the positive among the K entries.
  const int K = 64;
  Eigen::VectorXd q = Eigen::VectorXd::Unit(4, 0);
  Eigen::MatrixXd perp = Eigen::MatrixXd::Zero(K - 1, 4);
  perp.col(1).setOnes();
  CHECK(loss_contrastive(q, Eigen::VectorXd::Unit(4, 1), perp, 0.07) == doctest::Approx(std::log(K)));

  const int K2 = 4096;
  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(K2 - 1, 4);
  neg.col(2).setOnes();
  const double tau = 0.07;
  const double oracle = -std::log(std::exp(1 / tau) / (std::exp(1 / tau) + (K2 - 1)));
  const double lq = loss_contrastive(q, q, neg, tau);
  CHECK(lq == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(lq == doctest::Approx(2.6e-4).epsilon(0.05));
  CHECK(lq >= 0.0);

  // Positive at the maximum: a smaller tau lowers the loss.
  Eigen::MatrixXd gaps(3, 4);
  gaps << 0.6, 0.8, 0, 0, 0.2, 0.9798, 0, 0, -0.5, 0.866, 0, 0;
  CHECK(loss_contrastive(q, q, gaps, 0.07) < loss_contrastive(q, q, gaps, 0.2));
}

TEST_CASE("composite gradient matches finite differences")
{
  for (std::uint64_t seed : {1, 2, 3}) {
    RankerConfig cfg = tiny_config(seed);
    RankerModel m(cfg);
    REQUIRE(m.params().size() <= 1000);
    std::mt19937_64 rng(seed);
    std::vector<TrainSample> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(random_sample(cfg.input_dim, rng));
    std::vector<TrainSample> fit = samples;
    m.fit_standardization(fit);
    std::vector<const TrainSample*> batch;
    std::vector<int> slots;
    for (const auto& s : samples) {
      batch.push_back(&s);
      slots.push_back(m.enqueue(m.key(s.view_b)));
    }
    Eigen::VectorXd g;
    composite_loss(m, batch, slots, &g);
    const double h = 1e-6;
    Eigen::VectorXd fd(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double keep = m.params()[i];
      m.params()[i] = keep + h;
      const double up = composite_loss(m, batch, slots, nullptr).total();
      m.params()[i] = keep - h;
      const double down = composite_loss(m, batch, slots, nullptr).total();
      m.params()[i] = keep;
      fd[i] = (up - down) / (2 * h);
    }
    CHECK((g - fd).norm() / std::max(g.norm(), fd.norm()) < 1e-4);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      CHECK(std::abs(g[i] - fd[i]) <= 1e-4 * std::max(1.0, std::abs(fd[i])));
  }
}

TEST_CASE("momentum rule and queue")
{
  std::mt19937_64 rng(9);
  std::vector<TrainSample> samples;
  for (int i = 0; i < 4; ++i) samples.push_back(random_sample(6, rng));
  std::vector<const TrainSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);

  RankerConfig frozen = tiny_config();
  frozen.momentum = 1.0;
  RankerModel a(frozen);
  const Eigen::VectorXd k0 = a.key_params();
  AdamState sa;
  train_step(a, batch, sa);
  CHECK(a.key_params() == k0);
  CHECK(a.params() != k0);

  RankerConfig copy = tiny_config();
  copy.momentum = 0.0;
  RankerModel b(copy);
  AdamState sb;
  train_step(b, batch, sb);
  CHECK(b.key_params() == b.params());

  // K / B steps replace the whole initial fill; queue length stays K.
  RankerModel c(tiny_config());
  const Eigen::MatrixXd initial = c.queue();
  AdamState sc;
  for (int step = 0; step < 16 / 4; ++step) {
    train_step(c, batch, sc);
    CHECK(c.queue().rows() == 16);
  }
  for (int r = 0; r < 16; ++r) {
    CHECK(c.queue().row(r) != initial.row(r));
    CHECK(c.queue().row(r).norm() == doctest::Approx(1.0));
  }
  CHECK(c.queue_head() == 0);

  RankerConfig small = tiny_config();
  small.queue_size = 2;
  RankerModel d(small);
  AdamState sd;
  CHECK_THROWS_AS(train_step(d, batch, sd), Error);
}

TEST_CASE("a single step lowers the loss on a fixed batch")
{
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RankerConfig cfg = tiny_config(seed + 50);
    cfg.lr = 1e-3;
    RankerModel m(cfg);
    std::mt19937_64 rng(seed);
    std::vector<TrainSample> samples;
    for (int i = 0; i < 8; ++i) samples.push_back(random_sample(cfg.input_dim, rng));
    std::vector<const TrainSample*> batch;
    std::vector<int> slots;
    for (const auto& s : samples) batch.push_back(&s);
    AdamState st;
    train_step(m, batch, st);
    // Same queue and positives before and after a second step.
    for (int i = 0; i < 8; ++i) slots.push_back((m.queue_head() - 8 + i + cfg.queue_size) % cfg.queue_size);
    const double before = composite_loss(m, batch, slots, nullptr).total();
    RankerModel probe = m;
    const Eigen::MatrixXd q = probe.queue();
    const int head = probe.queue_head();
    Eigen::VectorXd g;
    composite_loss(probe, batch, slots, &g);
    probe.params() -= cfg.lr * g;
    probe.queue() = q;
    probe.restore_queue_head(head);
    const double after = composite_loss(probe, batch, slots, nullptr).total();
    if (after < before) ++decreased;
  }
  CHECK(decreased >= 19);
}

TEST_CASE("rank order and AUC")
{
  CHECK(rank_order({0.9, 0.2, 0.7}, {0, 0, 0}, {"a", "b", "c"}) == std::vector<std::size_t>{0, 2, 1});
  const auto dup = rank_order({0.5, 0.8, 0.5, 0.5}, {0.1, 0, 0.1, 0.05}, {"z", "m", "a", "q"});
  CHECK(dup == std::vector<std::size_t>{1, 3, 2, 0});

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> sc(200), jk(200);
  std::vector<std::string> ids(200);
  for (int i = 0; i < 200; ++i) {
    sc[i] = std::round(u(rng) * 10) / 10;
    jk[i] = std::round(u(rng) * 3);
    ids[i] = "p" + std::to_string(i);
  }
  const auto order = rank_order(sc, jk, ids);
  CHECK(std::set<std::size_t>(order.begin(), order.end()).size() == 200);
  CHECK(order == rank_order(sc, jk, ids));
  for (std::size_t r = 1; r < order.size(); ++r) CHECK(sc[order[r - 1]] >= sc[order[r]]);

  CHECK(auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
  CHECK(auc({0.1, 0.2, 0.9, 0.8}, {1, 1, 0, 0}) == 0.0);
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
  // Brute-force pair count oracle.
  std::vector<int> lab(200);
  for (int i = 0; i < 200; ++i) lab[i] = u(rng) < 0.3;
  double wins = 0, pairs = 0;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j)
      if (lab[i] && !lab[j]) {
        pairs += 1;
        wins += sc[i] > sc[j] ? 1.0 : sc[i] == sc[j] ? 0.5 : 0.0;
      }
  CHECK(auc(sc, lab) == doctest::Approx(wins / pairs).epsilon(1e-12));
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), Error);
}

TEST_CASE("checkpoint round trip and training")
{
  std::mt19937_64 rng(21);
  std::vector<TrainSample> samples;
  for (int i = 0; i < 40; ++i) {
    auto s = random_sample(6, rng);
    s.view_a.col(0).array() += s.y ? 2.0 : -2.0;  // separable signal
    samples.push_back(s);
  }
  RankerConfig cfg = tiny_config();
  cfg.lr = 1e-2;
  RankerModel m(cfg);
  TrainOptions opts;
  opts.epochs = 30;
  opts.batch = 8;
  int calls = 0;
  opts.on_epoch = [&](int, const LossBreakdown&) { ++calls; };
  const auto log = train_ranker(m, samples, opts);
  CHECK(calls == 30);
  REQUIRE(log.size() == 30);
  CHECK(log.back().binary < log.front().binary);
  std::vector<double> sc;
  std::vector<int> y;
  for (const auto& s : samples) {
    sc.push_back(m.forward(s.view_a).p_b);
    y.push_back(s.y);
  }
  CHECK(auc(sc, y) > 0.95);

  std::ostringstream tl;
  write_training_log(tl, log);
  CHECK(tl.str().find('\n') != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "previs_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "m.pvrk";
  save_checkpoint(m, file);
  const RankerModel back = load_checkpoint(file);
  CHECK(back == m);
  CHECK(back.config() == m.config());
  for (const auto& s : samples) CHECK(back.forward(s.view_a).p_b == m.forward(s.view_a).p_b);

  {
    std::ofstream bad(dir / "bad.pvrk", std::ios::binary);
    bad << "NOPE1234";
  }
  try {
    load_checkpoint(dir / "bad.pvrk");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::Schema));
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.pvrk"), Error);
  std::filesystem::remove_all(dir);
}
