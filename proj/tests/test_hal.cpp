#include "hrlf/errors.hpp"
#include "hrlf/hal.hpp"
#include "hrlf/ops.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace hrlf;
using namespace hrlf::hal;
using hrlf::test::random_matrix;
using ag::Matrix;

namespace {

const double kLog2 = std::log(2.0);

fusion::ScaleStack random_stack(Index batch, Index d, Rng& rng, bool trainable = false) {
  fusion::ScaleStack s;
  s.e1 = Var(random_matrix(batch, 3 * d, rng), trainable);
  s.e2 = Var(random_matrix(batch, 2 * d, rng), trainable);
  s.e3 = Var(random_matrix(batch, d, rng), trainable);
  return s;
}

void zero_head(Discriminator& d) {
  auto& head = d.net.layers().back();
  head.weight().mutable_value().setZero();
  head.bias().mutable_value().setZero();
}

Matrix prob_oracle(const Discriminator& d, const Matrix& x) {
  Matrix p = test::mlp_oracle(d.net, x, false);
  for (Index i = 0; i < p.size(); ++i) {
    const double v = 1.0 / (1.0 + std::exp(-p.data()[i]));
    p.data()[i] = std::clamp(v, kProbEpsilon, 1.0 - kProbEpsilon);
  }
  return p;
}

}  // namespace

TEST_CASE("a discriminator stuck at one half gives -6 log 2 and 3 log 2") {
  Rng rng(1);
  ScaleDiscriminators discs(4, rng);
  for (auto& d : discs.discs) zero_head(d);
  const auto t = random_stack(5, 4, rng);
  const auto s = random_stack(5, 4, rng);
  CHECK(std::abs(loss_hal_discriminator(t, s, discs).item() + 6.0 * kLog2) < 1e-6);
  const double gen = loss_hal_generator(s, discs).item();
  CHECK(std::abs(gen - 3.0 * kLog2) < 1e-6);
  CHECK(std::abs(gen - 2.079442) < 1e-6);
}

TEST_CASE("losses equal a per-row oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const ScaleDiscriminators discs(3, rng);
    const auto t = random_stack(4, 3, rng);
    const auto s = random_stack(4, 3, rng);
    double disc = 0.0;
    double gen = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const Matrix pt = prob_oracle(discs.discs[i], t.scale(i).value());
      const Matrix ps = prob_oracle(discs.discs[i], s.scale(i).value());
      for (Index b = 0; b < 4; ++b) {
        disc += (std::log(1.0 - ps(b, 0)) + std::log(pt(b, 0))) / 4.0;
        gen += -std::log(ps(b, 0)) / 4.0;
      }
    }
    CHECK(loss_hal_discriminator(t, s, discs).item() == doctest::Approx(disc).epsilon(1e-9));
    CHECK(loss_hal_generator(s, discs).item() == doctest::Approx(gen).epsilon(1e-9));
  }
}

TEST_CASE("generator loss sends gradient to the student only") {
  Rng rng(2);
  const ScaleDiscriminators discs(3, rng);
  const auto s = random_stack(4, 3, rng, true);
  loss_hal_generator(s, discs).backward();
  for (const auto& p : discs.parameters()) {
    CHECK(p.requires_grad());
    CHECK_FALSE(p.has_grad());
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.scale(i).has_grad());
}

TEST_CASE("discriminator loss detaches both stacks") {
  Rng rng(3);
  const ScaleDiscriminators discs(3, rng);
  const auto t = random_stack(4, 3, rng, true);
  const auto s = random_stack(4, 3, rng, true);
  loss_hal_discriminator(t, s, discs).backward();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_FALSE(t.scale(i).has_grad());
    CHECK_FALSE(s.scale(i).has_grad());
  }
  bool any = false;
  for (const auto& p : discs.parameters()) any = any || p.has_grad();
  CHECK(any);
}

TEST_CASE("saturated discriminators stay finite") {
  Rng rng(4);
  ScaleDiscriminators discs(2, rng);
  for (auto& d : discs.discs) {
    zero_head(d);
    d.net.layers().back().bias().mutable_value().setConstant(-1e3);
  }
  const auto t = random_stack(3, 2, rng);
  const auto s = random_stack(3, 2, rng);
  CHECK(std::isfinite(loss_hal_discriminator(t, s, discs).item()));
  CHECK(loss_hal_generator(s, discs).item() == doctest::Approx(-3.0 * std::log(kProbEpsilon)));
}

TEST_CASE("generator and discriminator gradients match finite differences") {
  Rng rng(5);
  const ScaleDiscriminators discs(4, rng);
  const auto t = random_stack(4, 4, rng);
  const auto s = random_stack(4, 4, rng, true);
  std::vector<Var> student{s.e1, s.e2, s.e3};
  CHECK(test::check_gradients([&] { return loss_hal_generator(s, discs); }, student).max_error < 1e-6);
  auto params = discs.parameters();
  CHECK(test::check_gradients([&] { return loss_hal_discriminator(t, s, discs); }, params).max_error < 1e-6);
}
