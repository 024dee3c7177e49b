#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace nuacdm {

struct SparseEntry {
  Index col;
  double value;
};

/// Compressed row-major matrix with cached per-row norms. Column indices are
/// strictly ascending within each row.
class SparseRowMatrix {
 public:
  SparseRowMatrix() = default;

  // Builds from per-row entry lists. Explicit zeros are kept.
  SparseRowMatrix(Index cols, const std::vector<std::vector<SparseEntry>>& rows) : cols_(cols) {
    require(cols >= 0, "matrix: negative column count");
    row_ptr_.reserve(rows.size() + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Index prev = -1;
      for (const auto& e : rows[r]) {
        require(e.col >= 0 && e.col < cols, "matrix: row " + std::to_string(r) +
                                                " has column index " + std::to_string(e.col) +
                                                " outside [0, " + std::to_string(cols) + ")");
        require(e.col > prev, "matrix: column indices of row " + std::to_string(r) +
                                  " are not strictly ascending");
        require(std::isfinite(e.value), "matrix: non-finite entry in row " + std::to_string(r));
        prev = e.col;
        entries_.push_back(e);
      }
      row_ptr_.push_back(static_cast<Index>(entries_.size()));
    }
    refresh_norms();
  }

  static SparseRowMatrix from_dense(const Eigen::MatrixXd& dense) {
    std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(dense.rows()));
    for (Index r = 0; r < dense.rows(); ++r) {
      for (Index c = 0; c < dense.cols(); ++c) {
        if (dense(r, c) != 0.0) rows[static_cast<std::size_t>(r)].push_back({c, dense(r, c)});
      }
    }
    return SparseRowMatrix(dense.cols(), rows);
  }

  Index rows() const { return static_cast<Index>(row_ptr_.size()) - 1; }
  Index cols() const { return cols_; }
  Index nonzeros() const { return static_cast<Index>(entries_.size()); }

  std::span<const SparseEntry> row(Index r) const {
    const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r)]);
    const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1]);
    return {entries_.data() + b, e - b};
  }

  double row_norm(Index r) const { return norm_[r]; }
  double row_norm_sq(Index r) const { return norm_sq_[r]; }
  const Vector& row_norms() const { return norm_; }
  const Vector& row_norms_sq() const { return norm_sq_; }

  // <a_r, x>
  double row_dot(Index r, const Vector& x) const {
    double s = 0.0;
    for (const auto& e : row(r)) s += e.value * x[e.col];
    return s;
  }

  // out += alpha * a_r
  void add_row(Index r, double alpha, Vector& out) const {
    for (const auto& e : row(r)) out[e.col] += alpha * e.value;
  }

  void scale_row(Index r, double factor) {
    const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r)]);
    const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1]);
    for (std::size_t k = b; k < e; ++k) entries_[k].value *= factor;
    norm_sq_[r] = 0.0;
    for (std::size_t k = b; k < e; ++k) norm_sq_[r] += entries_[k].value * entries_[k].value;
    norm_[r] = std::sqrt(norm_sq_[r]);
  }

  // A x
  Vector multiply(const Vector& x) const {
    require(x.size() == cols_, "matrix: multiply dimension mismatch");
    Vector out(rows());
    for (Index r = 0; r < rows(); ++r) out[r] = row_dot(r, x);
    return out;
  }

  // A^T y
  Vector multiply_transpose(const Vector& y) const {
    require(y.size() == rows(), "matrix: transpose multiply dimension mismatch");
    Vector out = Vector::Zero(cols_);
    for (Index r = 0; r < rows(); ++r) {
      if (y[r] != 0.0) add_row(r, y[r], out);
    }
    return out;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows(), cols_);
    for (Index r = 0; r < rows(); ++r) {
      for (const auto& e : row(r)) d(r, e.col) = e.value;
    }
    return d;
  }

  SparseRowMatrix permute_rows(const std::vector<Index>& order) const {
    std::vector<std::vector<SparseEntry>> rows_out;
    rows_out.reserve(order.size());
    for (Index r : order) {
      auto rr = row(r);
      rows_out.emplace_back(rr.begin(), rr.end());
    }
    return SparseRowMatrix(cols_, rows_out);
  }

 private:
  void refresh_norms() {
    norm_ = Vector::Zero(rows());
    norm_sq_ = Vector::Zero(rows());
    for (Index r = 0; r < rows(); ++r) {
      double s = 0.0;
      for (const auto& e : row(r)) s += e.value * e.value;
      norm_sq_[r] = s;
      norm_[r] = std::sqrt(s);
    }
  }

  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<SparseEntry> entries_;
  Vector norm_;
  Vector norm_sq_;
};

}  // namespace nuacdm
