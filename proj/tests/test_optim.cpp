#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "edkit/optim.hpp"
#include "support/test_util.hpp"

using namespace edkit;
using test::close;

namespace {

AdamConfig plain(double lr) {
  AdamConfig c;
  c.lr = lr;
  c.weight_decay = 0.0;
  c.clip_norm = 0.0;
  c.warmup_steps = 0;
  c.decay = LrDecay::None;
  return c;
}

ParamSlot slot(const std::string& name, Tensor t, bool decay = true) {
  t.set_requires_grad(true);
  return {name, t, decay, "g"};
}

}  // namespace

TEST_CASE("zero gradients and zero weight decay leave parameters unchanged") {
  Tensor p = Tensor::from_data({3}, {1, -2, 3});
  AdamW opt({slot("p", p)}, plain(0.1));
  p.ensure_grad();
  opt.step();
  CHECK(p.to_vector() == std::vector<float>{1, -2, 3});
}

TEST_CASE("single-scalar Adam step matches the hand-evaluated recurrence") {
  // g=1, lr=0.1: bias correction gives m_hat/sqrt(v_hat) = 1/(1+eps)
  Tensor p = Tensor::from_data({1}, {1.0f});
  AdamConfig cfg = plain(0.1);
  cfg.eps = 1e-6;
  AdamW opt({slot("p", p)}, cfg);
  p.grad()[0] = 1.0f;
  opt.step();
  CHECK(close(p.at(0), 1.0 - 0.0999999000001, 1e-6));
}

TEST_CASE("global norm clipping scales the effective gradient") {
  // gradient [6,8] has norm 10; clip 1.0 must behave exactly like feeding
  // gradients pre-scaled by 0.1 with clipping disabled
  Tensor p1 = Tensor::from_data({2}, {0.5f, -0.5f});
  Tensor p2 = Tensor::from_data({2}, {0.5f, -0.5f});
  AdamConfig clipped = plain(0.05);
  clipped.clip_norm = 1.0;
  AdamConfig manual = plain(0.05);
  AdamW o1({slot("p", p1)}, clipped);
  AdamW o2({slot("p", p2)}, manual);
  p1.grad()[0] = 6.0f;
  p1.grad()[1] = 8.0f;
  p2.grad()[0] = 0.6f;
  p2.grad()[1] = 0.8f;
  o1.step();
  o2.step();
  CHECK(close(o1.last_grad_norm(), 10.0, 1e-6));
  CHECK(close(p1.at(0), p2.at(0), 1e-7));
  CHECK(close(p1.at(1), p2.at(1), 1e-7));
}

TEST_CASE("decoupled weight decay skips flagged-off tensors") {
  Tensor w = Tensor::from_data({1}, {2.0f});
  Tensor b = Tensor::from_data({1}, {2.0f});
  AdamConfig cfg = plain(0.1);
  cfg.weight_decay = 0.5;
  AdamW opt({slot("w", w, true), slot("b", b, false)}, cfg);
  w.ensure_grad();
  b.ensure_grad();
  opt.step();
  CHECK(close(w.at(0), 2.0 - 0.1 * 0.5 * 2.0, 1e-6));
  CHECK(b.at(0) == 2.0f);
}

TEST_CASE("frozen tensors are not updated") {
  Tensor p = Tensor::from_data({2}, {1, 1});
  ParamSlot s = slot("p", p);
  s.tensor.set_requires_grad(false);
  AdamW opt({s}, plain(0.1));
  p.ensure_grad();
  p.grad()[0] = 5.0f;
  opt.step();
  CHECK(p.to_vector() == std::vector<float>{1, 1});
}

TEST_CASE("non-finite gradients abort with the tensor name") {
  Tensor p = Tensor::from_data({1}, {1.0f});
  AdamW opt({slot("mep.w", p)}, plain(0.1));
  p.grad()[0] = std::nanf("");
  CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("mep.w"), std::runtime_error);
}

TEST_CASE("learning-rate schedule peaks after warmup and hits zero at the end") {
  AdamConfig cfg;
  cfg.lr = 2.0;
  cfg.warmup_steps = 10;
  cfg.total_steps = 50;
  cfg.decay = LrDecay::Linear;
  CHECK(close(scheduled_lr(cfg, 1), 0.2, 1e-12));
  CHECK(close(scheduled_lr(cfg, 5), 1.0, 1e-12));
  CHECK(scheduled_lr(cfg, 10) == 2.0);
  CHECK(close(scheduled_lr(cfg, 30), 1.0, 1e-12));
  CHECK(scheduled_lr(cfg, 50) == 0.0);
  // linear in between
  for (int s = 11; s < 50; ++s) {
    double expect = 2.0 * double(50 - s) / 40.0;
    CHECK(close(scheduled_lr(cfg, s), expect, 1e-12));
  }
  cfg.decay = LrDecay::None;
  CHECK(scheduled_lr(cfg, 50) == 2.0);
  CHECK(scheduled_lr(cfg, 10000) == 2.0);
}
