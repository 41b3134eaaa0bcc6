// gtc/matrix.hpp

// Copyright 2026  The GTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gtc/error.hpp"
#include "gtc/wfst.hpp"

namespace gtc {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// T x |U| matrix of per-frame symbol posteriors. Rows sum to one.
class PosteriorMatrix {
 public:
  static constexpr double kRowTolerance = 1e-9;

  explicit PosteriorMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1) throw Error("posteriors: at least one frame required");
    if (values_.cols() < 1) throw Error("posteriors: empty alphabet");
    for (std::size_t t = 0; t < values_.rows(); ++t) {
      double sum = 0.0;
      for (double y : values_.row(t)) {
        if (!(y >= 0.0 && y <= 1.0)) throw Error("posteriors: entry outside [0, 1] in frame " + std::to_string(t + 1));
        sum += y;
      }
      if (std::abs(sum - 1.0) > kRowTolerance)
        throw Error("posteriors: frame " + std::to_string(t + 1) + " does not sum to 1");
    }
  }

  std::size_t frames() const { return values_.rows(); }
  std::size_t num_symbols() const { return values_.cols(); }
  double operator()(std::size_t t, std::size_t k) const { return values_(t, k); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// T x |U| matrix of unnormalized network outputs.
class LogitMatrix {
 public:
  explicit LogitMatrix(Matrix values) : values_(std::move(values)) {
    for (double u : values_.data())
      if (!std::isfinite(u)) throw Error("logits: non-finite entry");
  }

  std::size_t frames() const { return values_.rows(); }
  std::size_t num_symbols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

  PosteriorMatrix softmax() const {
    Matrix y(values_.rows(), values_.cols());
    for (std::size_t t = 0; t < values_.rows(); ++t) {
      auto u = values_.row(t);
      const double hi = *std::max_element(u.begin(), u.end());
      double z = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) z += (y(t, k) = std::exp(u[k] - hi));
      for (std::size_t k = 0; k < u.size(); ++k) y(t, k) /= z;
    }
    return PosteriorMatrix(std::move(y));
  }

 private:
  Matrix values_;
};

/// TSV matrix: a header row of alphabet tokens, then one row per frame.
inline Matrix read_matrix_tsv(std::istream& in, std::vector<std::string>& header,
                              const std::string& source = "matrix") {
  std::string line;
  std::size_t lineno = 0;
  header.clear();
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string tok; std::getline(fields, tok, '\t');) f.push_back(tok);
    if (header.empty()) {
      header = f;
      continue;
    }
    if (f.size() != header.size())
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(f.size()));
    for (const auto& tok : f) data.push_back(parse_weight(tok, source, lineno));
    ++rows;
  }
  if (header.empty()) throw ParseError(source, 0, "missing header row");
  Matrix m(rows, header.size());
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

inline void write_matrix_tsv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "\t" : "") << header[k];
  out << '\n';
  for (std::size_t t = 0; t < m.rows(); ++t) {
    for (std::size_t k = 0; k < m.cols(); ++k) out << (k ? "\t" : "") << format_weight(m(t, k));
    out << '\n';
  }
}

}  // namespace gtc
