// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "radmot/train/losses.hpp"
#include "test_util.hpp"

using namespace radmot;
using namespace radmot::train;

TEST_CASE("flow loss examples") {
  const Matrix gt = test::make_matrix(2, 3, {0.1, 0.2, 0.3, -1, 0, 2});
  CHECK(loss_flow(gt, gt) == 0.0);
  CHECK(loss_flow(test::make_matrix(1, 3, {1, 0, 0}), Matrix(1, 3)) == 1.0);
  CHECK(loss_flow(test::make_matrix(2, 3, {1, 0, 0, 0, 2, 0}), Matrix(2, 3)) == 2.5);
  const auto before = empty_loss_warnings();
  CHECK(loss_flow(Matrix(0, 3), Matrix(0, 3)) == 0.0);
  CHECK(empty_loss_warnings() == before + 1);
}

TEST_CASE("segmentation loss examples") {
  const double eps = 1e-7;
  CHECK(loss_seg({1.0, 0.0}, {1, 0}, 0.4, eps) <= -std::log(1.0 - eps) + 1e-15);
  CHECK(std::abs(loss_seg({0.5, 0.5, 0.5}, {1, 0, 0}, 0.4) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(loss_seg({0.9, 0.1}, {1, 0}, 0.4) - 0.10536051565782628) < 1e-12);
  // Absent class contributes 0.
  CHECK(std::abs(loss_seg({0.5, 0.5}, {0, 0}, 0.4) - 0.4 * std::log(2.0)) < 1e-12);
}

TEST_CASE("segmentation loss is invariant to the class ratio at fixed per-class errors") {
  const double a = loss_seg({0.8, 0.3}, {1, 0}, 0.4);
  std::vector<double> s{0.8};
  std::vector<std::uint8_t> m{1};
  for (int i = 0; i < 99; ++i) {
    s.push_back(0.3);
    m.push_back(0);
  }
  CHECK(loss_seg(s, m, 0.4) == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("affinity loss examples") {
  CHECK(loss_aff(test::make_matrix(2, 2, {1, 0, 0, 1}), test::make_matrix(2, 2, {1, 0, 0, 1})) < 1e-6);
  CHECK(std::abs(loss_aff(test::make_matrix(1, 1, {0.5}), test::make_matrix(1, 1, {1})) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(loss_aff(test::make_matrix(2, 1, {0.9, 0.2}), test::make_matrix(2, 1, {1, 0})) -
                 0.16425203348601893) < 1e-12);
  CHECK(loss_aff(Matrix(0, 2), Matrix(0, 2)) == 0.0);
}

TEST_CASE("total loss weights the parts") {
  LossConfig cfg;
  CHECK(loss_total({0, 0, 0}, cfg) == 0.0);
  CHECK(loss_total({2, 1, 1}, cfg) == 2.5);
  cfg.alpha_aff = 0.0;
  CHECK(loss_total({2, 1, 5}, cfg) == loss_total({2, 1, 100}, cfg));
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(2);
  const Matrix pred = test::random_matrix(rng, 5, 3);
  const Matrix gt = test::random_matrix(rng, 5, 3);
  Matrix g;
  loss_flow(pred, gt, &g);
  Matrix p = pred;
  for (std::size_t i = 0; i < p.storage().size(); ++i) {
    p.storage()[i] += 1e-6;
    const double up = loss_flow(p, gt);
    p.storage()[i] -= 2e-6;
    const double down = loss_flow(p, gt);
    p.storage()[i] += 1e-6;
    CHECK(g.storage()[i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-6));
  }

  std::vector<double> s{0.2, 0.7, 0.4, 0.9, 0.05};
  const std::vector<std::uint8_t> m{1, 0, 1, 0, 0};
  std::vector<double> gs;
  loss_seg(s, m, 0.4, 1e-7, &gs);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] += 1e-7;
    const double up = loss_seg(s, m, 0.4);
    s[i] -= 2e-7;
    const double down = loss_seg(s, m, 0.4);
    s[i] += 1e-7;
    CHECK(gs[i] == doctest::Approx((up - down) / 2e-7).epsilon(1e-5));
  }

  Matrix a = test::random_matrix(rng, 2, 3, 0.05, 0.95);
  const Matrix y = test::make_matrix(2, 3, {1, 0, 0, 0, 0, 1});
  Matrix ga;
  loss_aff(a, y, 1e-7, &ga);
  for (std::size_t i = 0; i < a.storage().size(); ++i) {
    a.storage()[i] += 1e-7;
    const double up = loss_aff(a, y);
    a.storage()[i] -= 2e-7;
    const double down = loss_aff(a, y);
    a.storage()[i] += 1e-7;
    CHECK(ga.storage()[i] == doctest::Approx((up - down) / 2e-7).epsilon(1e-5));
  }
}

TEST_CASE("losses are non-negative on random inputs") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(8);
    std::vector<std::uint8_t> m(8);
    for (int i = 0; i < 8; ++i) {
      s[i] = u(rng);
      m[i] = u(rng) < 0.3;
    }
    CHECK(loss_seg(s, m, 0.4) >= 0.0);
    const Matrix a = test::random_matrix(rng, 2, 2, 0, 1);
    CHECK(loss_aff(a, test::make_matrix(2, 2, {1, 0, 0, 0})) >= 0.0);
  }
}
