// Copyright 2026 The TrialNER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trialner/numcore.h"

#include <cmath>

#include <gtest/gtest.h>

#include "trialner/errors.h"
#include "trialner/rng.h"

namespace trialner {
namespace {

DenseArray RandomMatrix(size_t r, size_t c, Rng& rng) {
  DenseArray m = DenseArray::Matrix(r, c);
  for (double& v : m.values()) v = rng.Uniform(-2.0, 2.0);
  return m;
}

// Textbook triple loop, summing k in increasing order.
DenseArray NaiveMatmul(const DenseArray& a, const DenseArray& b) {
  DenseArray out = DenseArray::Matrix(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

TEST(DenseArrayTest, ShapeAndIndexing) {
  DenseArray m = DenseArray::FromRows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m[4], 5.0);
  EXPECT_EQ(m.ShapeString(), "[2x3]");
  EXPECT_THROW(DenseArray({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(DenseArray::FromRows({{1, 2}, {3}}), ShapeError);
}

TEST(DenseArrayTest, CheckFiniteNamesTheArray) {
  DenseArray m = DenseArray::Vector(3);
  m[1] = std::nan("");
  EXPECT_FALSE(m.AllFinite());
  try {
    m.CheckFinite("emissions");
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("emissions"), std::string::npos);
  }
}

TEST(MatmulTest, MatchesTripleLoop) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 1 + rng.Below(6), k = 1 + rng.Below(6), m = 1 + rng.Below(6);
    const DenseArray a = RandomMatrix(n, k, rng), b = RandomMatrix(k, m, rng);
    const DenseArray want = NaiveMatmul(a, b);
    EXPECT_EQ(Matmul(a, b), want);
    const DenseArray got_tb = MatmulTransposedB(a, Transpose(b));
    const DenseArray got_ta = MatmulTransposedA(Transpose(a), b);
    for (size_t i = 0; i < want.size(); ++i) {
      EXPECT_NEAR(got_tb[i], want[i], 1e-12);
      EXPECT_NEAR(got_ta[i], want[i], 1e-12);
    }
  }
}

TEST(MatmulTest, IdentityIsNeutral) {
  Rng rng(4);
  const DenseArray a = RandomMatrix(4, 5, rng);
  EXPECT_EQ(Matmul(a, DenseArray::Identity(5)), a);
  EXPECT_EQ(Matmul(DenseArray::Identity(4), a), a);
}

TEST(MatmulTest, ShapeMismatchThrows) {
  EXPECT_THROW(Matmul(DenseArray::Matrix(2, 3), DenseArray::Matrix(2, 3)), ShapeError);
  EXPECT_THROW(MatmulTransposedB(DenseArray::Matrix(2, 3), DenseArray::Matrix(2, 4)),
               ShapeError);
}

TEST(LogSumExpTest, MatchesDirectSumAndIsStable) {
  std::vector<double> v = {0.5, -1.0, 2.0};
  double direct = std::log(std::exp(0.5) + std::exp(-1.0) + std::exp(2.0));
  EXPECT_NEAR(LogSumExp(v), direct, 1e-14);
  std::vector<double> big = {1000.0, 1000.0};
  EXPECT_NEAR(LogSumExp(big), 1000.0 + std::log(2.0), 1e-12);
  std::vector<double> tiny = {-1000.0, -1000.0};
  EXPECT_NEAR(LogSumExp(tiny), -1000.0 + std::log(2.0), 1e-12);
}

TEST(SoftmaxTest, SumsToOneAndPreservesOrder) {
  Rng rng(5);
  const DenseArray a = RandomMatrix(4, 6, rng);
  for (size_t r = 0; r < a.rows(); ++r) {
    const std::vector<double> s = SoftmaxRow(a.row(r));
    double sum = 0.0;
    for (size_t c = 0; c < s.size(); ++c) {
      sum += s[c];
      for (size_t d = 0; d < s.size(); ++d) {
        if (a(r, c) < a(r, d)) {
          EXPECT_LT(s[c], s[d]);
        }
      }
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
  }
}

TEST(GradCheckTest, ExactGradientOfCubicPasses) {
  // f(x) = sum x_i^3 + x_0 x_1, gradient known in closed form.
  auto f = [](const DenseArray& x) {
    double s = x[0] * x[1];
    for (double v : x.values()) s += v * v * v;
    return s;
  };
  DenseArray x({3}, {0.3, -1.2, 2.0});
  DenseArray g({3}, {3 * 0.09 + -1.2, 3 * 1.44 + 0.3, 3 * 4.0});
  EXPECT_LT(GradCheck(f, x, g), 1e-8);
  DenseArray wrong = g;
  wrong[2] += 0.01;
  EXPECT_GT(GradCheck(f, x, wrong), 1e-4);
}

TEST(RngTest, DeterministicPerSeedAndStream) {
  Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 10; ++i) {
    const uint64_t x = a.Next();
    EXPECT_EQ(x, b.Next());
    EXPECT_NE(x, c.Next());
  }
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.Uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.Below(7), 7u);
  }
}

TEST(RngTest, ShuffleIsAPermutation) {
  Rng r(11);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  r.Shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

}  // namespace
}  // namespace trialner
