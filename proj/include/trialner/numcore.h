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

#ifndef TRIALNER_NUMCORE_H_
#define TRIALNER_NUMCORE_H_

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace trialner {

// Row-major dense array of doubles. Rank 1 (vectors) and rank 2 (matrices)
// are the only ranks the model uses, but the shape is unrestricted.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<size_t> shape);
  DenseArray(std::vector<size_t> shape, std::vector<double> data);

  static DenseArray Matrix(size_t rows, size_t cols) {
    return DenseArray({rows, cols});
  }
  static DenseArray Vector(size_t n) { return DenseArray({n}); }
  static DenseArray FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static DenseArray Identity(size_t n);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix accessors; rows() of a rank-1 array is its length.
  size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& operator()(size_t r, size_t c) { return data_[r * cols() + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void Fill(double value);
  bool SameShape(const DenseArray& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;

  // Throws NumericError naming `what` if any entry is NaN or infinite.
  void CheckFinite(const std::string& what) const;

  std::string ShapeString() const;

  friend bool operator==(const DenseArray& a, const DenseArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

DenseArray ZerosLike(const DenseArray& a);

// Standard matrix product. Each output element sums over the inner
// dimension strictly left to right, so results are reproducible bit for bit.
DenseArray Matmul(const DenseArray& a, const DenseArray& b);

// a * b^T and a^T * b without materializing the transpose. Same summation
// order guarantee as Matmul.
DenseArray MatmulTransposedB(const DenseArray& a, const DenseArray& b);
DenseArray MatmulTransposedA(const DenseArray& a, const DenseArray& b);

DenseArray Transpose(const DenseArray& a);

// log(sum(exp(v))) evaluated with a max shift.
double LogSumExp(std::span<const double> v);
double LogSumExp(const DenseArray& v);

std::vector<double> SoftmaxRow(std::span<const double> v);
DenseArray SoftmaxRow(const DenseArray& v);

double Dot(std::span<const double> a, std::span<const double> b);

inline double Sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Central-difference gradient check. Perturbs the listed coordinates (all of
// them when `coords` is empty) by +/- epsilon and returns the maximum of
// |g_num - g_ana| / max(1e-8, |g_num| + |g_ana|).
double GradCheck(const std::function<double(const DenseArray&)>& f,
                 const DenseArray& point, const DenseArray& analytic_grad,
                 double epsilon = 1e-5, std::span<const size_t> coords = {});

}  // namespace trialner

#endif  // TRIALNER_NUMCORE_H_
