#include <doctest.h>

#include <fstream>
#include <sstream>

#include "agewave/trainer.hpp"
#include "fixtures.hpp"

using namespace agewave;
using agewave::testing::bitwise_equal;
using agewave::testing::ScratchDir;
using agewave::testing::snapshot;
using agewave::testing::tiny_dataset;
using agewave::testing::tiny_train_config;

TEST_CASE("train config: validation and key-value round trip") {
  auto c = tiny_train_config();
  c.pixel_critic_mode = PixelCriticMode::SeparateStep;
  c.wpt_levels = {2, 3};
  auto back = TrainConfig::from_key_values(c.to_key_values());
  CHECK(back.to_key_values() == c.to_key_values());
  CHECK(back.pixel_critic_mode == PixelCriticMode::SeparateStep);

  auto kv = c.to_key_values();
  kv.erase("train.lr");
  CHECK_THROWS_WITH(TrainConfig::from_key_values(kv), doctest::Contains("train.lr"));

  c.pixel_critic_period = 0;
  CHECK_THROWS(c.validate());
  c = tiny_train_config();
  c.target_group = AgeGroup::Under30;
  CHECK_THROWS(c.validate());
  CHECK(parse_pixel_critic_mode("term") == PixelCriticMode::Term);
  CHECK_THROWS(parse_pixel_critic_mode("critic"));
}

TEST_CASE("train config: defaults") {
  TrainConfig c;
  CHECK(c.batch_size == 16);
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.pixel_critic_period == 5);
  CHECK(c.beta1 == 0.5);
  CHECK(c.beta2 == 0.999);
  CHECK(c.epsilon == 1e-8);
  CHECK(c.warmup_iterations == 50);
  CHECK(c.residual_blocks == 4);
  CHECK(c.wpt_levels == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("trainer: pixel critic cadence and update counts") {
  const auto ds = tiny_dataset();
  Trainer t(tiny_train_config(), ds);
  auto records = t.run_until(10);
  REQUIRE(records.size() == 10);
  std::vector<std::uint64_t> fired;
  for (const auto& r : records) {
    if (r.pixel_step) {
      fired.push_back(r.iteration);
      CHECK(r.applied_lambda_pix == 0.01);
      CHECK(r.l_g == doctest::Approx(r.gan_g + 0.01 * r.pix + 0.1 * r.id).epsilon(1e-5));
    } else {
      CHECK(r.applied_lambda_pix == 0.0);
      CHECK(r.l_g == doctest::Approx(r.gan_g + 0.1 * r.id).epsilon(1e-5));
    }
  }
  CHECK(fired == std::vector<std::uint64_t>{5, 10});
  CHECK(t.discriminator_updates() == 10);
  CHECK(t.generator_updates() == 10);
}

TEST_CASE("trainer: separate-step pixel critic adds generator updates") {
  const auto ds = tiny_dataset();
  auto c = tiny_train_config();
  c.pixel_critic_mode = PixelCriticMode::SeparateStep;
  Trainer t(c, ds);
  auto records = t.run_until(10);
  CHECK(t.discriminator_updates() == 10);
  CHECK(t.generator_updates() == 12);
  for (const auto& r : records)
    CHECK(r.l_g == doctest::Approx(r.gan_g + 0.1 * r.id).epsilon(1e-5));
}

TEST_CASE("trainer: every record carries all five losses") {
  const auto ds = tiny_dataset();
  Trainer t(tiny_train_config(), ds);
  for (const auto& r : t.run_until(6)) {
    for (double v : {r.l_g, r.gan_g, r.pix, r.id, r.l_d}) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
    std::istringstream row(loss_csv_row(r));
    std::string field;
    int fields = 0;
    while (std::getline(row, field, ',')) ++fields;
    CHECK(fields == 6);
  }
  CHECK(std::string(kLossCsvHeader) == "iteration,L_G,L_GAN_G,L_pix,L_id,L_D");
}

TEST_CASE("trainer: detachment and exclusive updates") {
  const auto ds = tiny_dataset();
  Trainer t(tiny_train_config(), ds);
  std::vector<float> g_before, d_before;
  std::size_t d_checks = 0, g_checks = 0;
  auto capture = [&](const Trainer& tr) {
    g_before = snapshot(tr.generator().parameters());
    d_before = snapshot(tr.discriminator().parameters());
  };
  capture(t);
  t.after_discriminator_step = [&](const Trainer& tr) {
    for (const auto& [name, p] : tr.generator().parameters().entries()) {
      INFO(name);
      bool all_zero = true;
      for (float g : p.grad()) all_zero &= g == 0.f;
      CHECK(all_zero);
    }
    CHECK(bitwise_equal(snapshot(tr.generator().parameters()), g_before));
    CHECK_FALSE(bitwise_equal(snapshot(tr.discriminator().parameters()), d_before));
    capture(tr);
    ++d_checks;
  };
  t.after_generator_step = [&](const Trainer& tr) {
    CHECK(bitwise_equal(snapshot(tr.discriminator().parameters()), d_before));
    CHECK_FALSE(bitwise_equal(snapshot(tr.generator().parameters()), g_before));
    capture(tr);
    ++g_checks;
  };
  t.run_until(5);
  CHECK(d_checks == 5);
  CHECK(g_checks == 5);
}

TEST_CASE("trainer: frozen tensors stay bitwise unchanged") {
  const auto ds = tiny_dataset();
  Trainer t(tiny_train_config(), ds);
  const auto wpt = snapshot(t.discriminator().buffers());
  const auto phi = snapshot(t.encoder().parameters());
  REQUIRE_FALSE(wpt.empty());
  REQUIRE_FALSE(phi.empty());
  t.run_until(12);
  CHECK(bitwise_equal(snapshot(t.discriminator().buffers()), wpt));
  CHECK(bitwise_equal(snapshot(t.encoder().parameters()), phi));
  for (const auto& [name, b] : t.discriminator().buffers().entries()) CHECK_FALSE(b.has_grad());
  for (const auto& [name, p] : t.encoder().parameters().entries()) CHECK_FALSE(p.has_grad());
}

TEST_CASE("trainer: auto-scaling freezes lambdas after the warm-up") {
  const auto ds = tiny_dataset();
  auto c = tiny_train_config();
  c.auto_scale = true;
  c.warmup_iterations = 4;
  Trainer t(c, ds);
  auto records = t.run_until(4);
  for (const auto& r : records) CHECK(r.l_g == doctest::Approx(r.gan_g).epsilon(1e-6));
  REQUIRE(t.weights().frozen);
  WarmupAccumulator acc;
  for (const auto& r : records) acc.add(r.gan_g, r.pix, r.id);
  const auto expected = auto_scale_lambdas(acc.stats());
  CHECK(t.weights().lambda_pix == expected.lambda_pix);
  CHECK(t.weights().lambda_id == expected.lambda_id);
  const auto frozen = t.weights();
  auto later = t.run_until(10);
  CHECK(t.weights().lambda_pix == frozen.lambda_pix);
  CHECK(t.weights().lambda_id == frozen.lambda_id);
  CHECK(later.back().applied_lambda_pix == frozen.lambda_pix);
}

TEST_CASE("trainer: seeds drive the trajectory") {
  const auto ds = tiny_dataset();
  auto c = tiny_train_config();
  Trainer a(c, ds), b(c, ds);
  c.seed = 2;
  Trainer other(c, ds);
  auto ra = a.run_until(3), rb = b.run_until(3), ro = other.run_until(3);
  CHECK(ra.back().l_g == rb.back().l_g);
  CHECK(ra.back().l_d == rb.back().l_d);
  CHECK(ra.back().l_g != ro.back().l_g);
}

TEST_CASE("trainer: resume continues the trajectory bitwise") {
  ScratchDir dir("trainer-resume");
  const auto ds = tiny_dataset();
  auto c = tiny_train_config();
  c.auto_scale = true;
  c.warmup_iterations = 3;

  Trainer straight(c, ds);
  auto full = straight.run_until(8);

  Trainer first(c, ds);
  first.run_until(4);
  first.save_state(dir.path() / "state.agwc");
  auto resumed = Trainer::resume(dir.path() / "state.agwc", ds);
  CHECK(resumed.iteration() == 4);
  auto rest = resumed.run_until(8);

  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rest[i].l_g == full[4 + i].l_g);
    CHECK(rest[i].l_d == full[4 + i].l_d);
  }
  CHECK(bitwise_equal(snapshot(resumed.generator().parameters()),
                      snapshot(straight.generator().parameters())));
  CHECK(bitwise_equal(snapshot(resumed.discriminator().parameters()),
                      snapshot(straight.discriminator().parameters())));
  CHECK(resumed.weights().lambda_pix == straight.weights().lambda_pix);
  CHECK(resumed.generator_updates() == 8);
}

TEST_CASE("trainer: resume rejects a dataset of the wrong resolution") {
  ScratchDir dir("trainer-resume-res");
  const auto ds = tiny_dataset();
  Trainer t(tiny_train_config(), ds);
  t.run_until(1);
  t.save_state(dir.path() / "state.agwc");
  const auto other = tiny_dataset(64, 1);
  CHECK_THROWS(Trainer::resume(dir.path() / "state.agwc", other));
}

TEST_CASE("train: writes checkpoints and loss csv, and resumes from disk") {
  ScratchDir dir("train-run");
  const auto ds = tiny_dataset();
  auto c = tiny_train_config();
  c.iterations = 6;
  c.checkpoint_every = 3;
  auto result = train(c, ds, dir.path() / "a");
  CHECK(result.records.size() == 6);
  CHECK(std::filesystem::exists(dir.path() / "a" / "generator.agwc"));
  CHECK(std::filesystem::exists(dir.path() / "a" / "discriminator.agwc"));
  CHECK(std::filesystem::exists(result.state_path));
  const auto g = load_checkpoint(dir.path() / "a" / "generator.agwc");
  CHECK(g.value("schema") == ds.config.schema.to_string());
  CHECK(g.value("target_group") == "G51plus");

  std::ifstream csv(result.loss_csv_path);
  std::string line;
  std::getline(csv, line);
  CHECK(line == kLossCsvHeader);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 6);

  // 3 iterations, then resume to 6: same final generator as the straight run.
  auto short_cfg = c;
  short_cfg.iterations = 3;
  train(short_cfg, ds, dir.path() / "b");
  auto resumed = train(c, ds, dir.path() / "b", dir.path() / "b" / "state.agwc");
  CHECK(resumed.records.size() == 3);
  const auto ga = load_checkpoint(dir.path() / "a" / "generator.agwc");
  const auto gb = load_checkpoint(dir.path() / "b" / "generator.agwc");
  REQUIRE(ga.tensors.size() == gb.tensors.size());
  for (std::size_t i = 0; i < ga.tensors.size(); ++i)
    CHECK(bitwise_equal(ga.tensors[i].second.data(), gb.tensors[i].second.data()));
  std::ifstream csv_b(dir.path() / "b" / "losses.csv");
  rows = -1;
  while (std::getline(csv_b, line)) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("train: a diverging run names the iteration and the last checkpoint") {
  ScratchDir dir("train-nan");
  const auto ds = tiny_dataset();
  auto c = tiny_train_config();
  c.iterations = 50;
  c.checkpoint_every = 1;
  // Finite through iteration 1, overflows at iteration 2.
  c.learning_rate = 1e15;
  try {
    train(c, ds, dir.path());
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    const std::string what = e.what();
    CHECK(what.find("iteration 2") != std::string::npos);
    CHECK(what.find((dir.path() / "state.agwc").string()) != std::string::npos);
    CHECK(Trainer::resume(dir.path() / "state.agwc", ds).iteration() == 1);
  }
}

TEST_CASE("trainer: degenerate old == young run settles near the three-term optimum") {
  // With positives identical to negatives, D can at best output 1/2 on that
  // image, so L_D is bounded below by 1/2 (plus the fake term).
  Dataset ds = tiny_dataset(32, 1);
  const auto proto = ds.samples.front();
  ds.samples.clear();
  for (auto g : {AgeGroup::Under30, AgeGroup::G51plus}) {
    auto s = proto;
    s.age_group = g;
    ds.samples.push_back(s);
  }
  auto c = tiny_train_config();
  c.lambda_pix = 0.0;
  c.lambda_id = 0.0;
  c.use_fae = false;
  c.batch_size = 1;
  c.learning_rate = 1e-3;
  Trainer t(c, ds);
  auto records = t.run_until(400);
  double tail = 0.0;
  for (std::size_t i = 350; i < 400; ++i) tail += records[i].l_d / 50.0;
  for (const auto& r : records) CHECK(r.l_d >= 0.5 - 1e-4);
  MESSAGE("mean L_D over the last 50 iterations: " << tail);
  CHECK(tail < 0.75);
}
