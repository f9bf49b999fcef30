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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "trialner/errors.h"

namespace trialner {
namespace {

size_t Product(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

void RequireMatrix(const DenseArray& a, const char* op) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " +
                     a.ShapeString());
  }
}

}  // namespace

DenseArray::DenseArray(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(Product(shape_), 0.0) {}

DenseArray::DenseArray(std::vector<size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (Product(shape_) != data_.size()) {
    throw ShapeError("shape " + ShapeString() + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

DenseArray DenseArray::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const size_t r = rows.size();
  const size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in FromRows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseArray({r, c}, std::move(data));
}

DenseArray DenseArray::Identity(size_t n) {
  DenseArray out = Matrix(n, n);
  for (size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

void DenseArray::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool DenseArray::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void DenseArray::CheckFinite(const std::string& what) const {
  for (size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(what + ": non-finite value at flat index " +
                         std::to_string(i));
    }
  }
}

std::string DenseArray::ShapeString() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

DenseArray ZerosLike(const DenseArray& a) { return DenseArray(a.shape()); }

DenseArray Matmul(const DenseArray& a, const DenseArray& b) {
  RequireMatrix(a, "Matmul");
  RequireMatrix(b, "Matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("Matmul: inner dimensions differ: " + a.ShapeString() +
                     " x " + b.ShapeString());
  }
  const size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseArray c = DenseArray::Matrix(m, n);
  for (size_t i = 0; i < m; ++i) {
    double* out = &c(i, 0);
    for (size_t p = 0; p < k; ++p) {
      const double s = a(i, p);
      const double* brow = b.data().data() + p * n;
      for (size_t j = 0; j < n; ++j) out[j] += s * brow[j];
    }
  }
  c.CheckFinite("Matmul");
  return c;
}

DenseArray MatmulTransposedB(const DenseArray& a, const DenseArray& b) {
  RequireMatrix(a, "MatmulTransposedB");
  RequireMatrix(b, "MatmulTransposedB");
  if (a.cols() != b.cols()) {
    throw ShapeError("MatmulTransposedB: inner dimensions differ: " +
                     a.ShapeString() + " x " + b.ShapeString() + "^T");
  }
  const size_t m = a.rows(), n = b.rows();
  DenseArray c = DenseArray::Matrix(m, n);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) c(i, j) = Dot(a.row(i), b.row(j));
  }
  c.CheckFinite("MatmulTransposedB");
  return c;
}

DenseArray MatmulTransposedA(const DenseArray& a, const DenseArray& b) {
  RequireMatrix(a, "MatmulTransposedA");
  RequireMatrix(b, "MatmulTransposedA");
  if (a.rows() != b.rows()) {
    throw ShapeError("MatmulTransposedA: inner dimensions differ: " +
                     a.ShapeString() + "^T x " + b.ShapeString());
  }
  const size_t k = a.rows(), m = a.cols(), n = b.cols();
  DenseArray c = DenseArray::Matrix(m, n);
  for (size_t p = 0; p < k; ++p) {
    const double* brow = b.data().data() + p * n;
    for (size_t i = 0; i < m; ++i) {
      const double s = a(p, i);
      double* out = &c(i, 0);
      for (size_t j = 0; j < n; ++j) out[j] += s * brow[j];
    }
  }
  c.CheckFinite("MatmulTransposedA");
  return c;
}

DenseArray Transpose(const DenseArray& a) {
  RequireMatrix(a, "Transpose");
  DenseArray t = DenseArray::Matrix(a.cols(), a.rows());
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double LogSumExp(std::span<const double> v) {
  if (v.empty()) throw ContractError("LogSumExp: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) throw NumericError("LogSumExp: non-finite input");
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double LogSumExp(const DenseArray& v) { return LogSumExp(v.data()); }

std::vector<double> SoftmaxRow(std::span<const double> v) {
  if (v.empty()) throw ContractError("SoftmaxRow: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) throw NumericError("SoftmaxRow: non-finite input");
  std::vector<double> out(v.size());
  double s = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    s += out[i];
  }
  for (double& x : out) x /= s;
  return out;
}

DenseArray SoftmaxRow(const DenseArray& v) {
  return DenseArray({v.size()}, SoftmaxRow(v.data()));
}

double GradCheck(const std::function<double(const DenseArray&)>& f,
                 const DenseArray& point, const DenseArray& analytic_grad,
                 double epsilon, std::span<const size_t> coords) {
  if (!(epsilon > 0)) throw ContractError("GradCheck: epsilon must be > 0");
  if (!point.SameShape(analytic_grad)) {
    throw ShapeError("GradCheck: gradient shape " + analytic_grad.ShapeString() +
                     " != point shape " + point.ShapeString());
  }
  std::vector<size_t> all;
  if (coords.empty()) {
    all.resize(point.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    coords = all;
  }
  DenseArray probe = point;
  double worst = 0.0;
  for (size_t i : coords) {
    const double x = point[i];
    probe[i] = x + epsilon;
    const double up = f(probe);
    probe[i] = x - epsilon;
    const double down = f(probe);
    probe[i] = x;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("GradCheck: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * epsilon);
    const double ana = analytic_grad[i];
    const double rel = std::abs(numeric - ana) /
                       std::max(1e-8, std::abs(numeric) + std::abs(ana));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace trialner
