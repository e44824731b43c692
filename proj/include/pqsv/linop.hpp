#pragma once

// Matrix-free linear operators: only apply / apply_adjoint are required, the
// matrix itself is never formed. Operators are immutable after construction
// and safe to share across threads.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "pqsv/parallel.hpp"
#include "pqsv/rng.hpp"

namespace pqsv {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

class LinearMap {
 public:
  virtual ~LinearMap() = default;

  virtual std::size_t in_dim() const = 0;
  virtual std::size_t out_dim() const = 0;

  // out must not alias v
  virtual void apply(std::span<const double> v, std::span<double> out) const = 0;
  virtual void apply_adjoint(std::span<const double> u, std::span<double> out) const = 0;

  std::vector<double> apply(std::span<const double> v) const {
    check_in(v.size());
    std::vector<double> out(out_dim());
    apply(v, out);
    return out;
  }

  std::vector<double> apply_adjoint(std::span<const double> u) const {
    check_out(u.size());
    std::vector<double> out(in_dim());
    apply_adjoint(u, out);
    return out;
  }

 protected:
  void check_in(std::size_t n) const {
    if (n != in_dim()) throw std::invalid_argument("LinearMap: input length does not match in_dim");
  }
  void check_out(std::size_t m) const {
    if (m != out_dim()) throw std::invalid_argument("LinearMap: input length does not match out_dim");
  }
};

// Explicit row-major matrix; the oracle substrate for the exact (1,1)/(inf,inf)
// algorithms and for tests.
class DenseMap final : public LinearMap {
 public:
  DenseMap(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows_ == 0 || cols_ == 0)
      throw std::invalid_argument("DenseMap: dimensions must be positive");
    if (entries_.size() != rows_ * cols_)
      throw std::invalid_argument("DenseMap: entry count does not match rows*cols");
  }

  static DenseMap identity(std::size_t n) {
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
    return DenseMap(n, n, std::move(e));
  }

  static DenseMap random(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> e(rows * cols);
    for (double& x : e) x = rng.normal();
    return DenseMap(rows, cols, std::move(e));
  }

  std::size_t in_dim() const override { return cols_; }
  std::size_t out_dim() const override { return rows_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double entry(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> entries() const { return entries_; }

  void apply(std::span<const double> v, std::span<double> out) const override {
    check_in(v.size());
    check_out(out.size());
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = entries_.data() + i * cols_;
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += row[j] * v[j];
      out[i] = s;
    }
  }

  void apply_adjoint(std::span<const double> u, std::span<double> out) const override {
    check_out(u.size());
    check_in(out.size());
    for (std::size_t j = 0; j < cols_; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = entries_.data() + i * cols_;
      const double ui = u[i];
      for (std::size_t j = 0; j < cols_; ++j) out[j] += row[j] * ui;
    }
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> entries_;
};

// Vertical stack of operators sharing in_dim. apply concatenates block
// outputs; apply_adjoint sums block adjoints. Blocks may be evaluated
// concurrently, but the adjoint sum is always reduced in block order, so the
// result does not depend on the worker count.
class StackedMap final : public LinearMap {
 public:
  explicit StackedMap(std::vector<std::shared_ptr<const LinearMap>> blocks,
                      unsigned workers = 1)
      : blocks_(std::move(blocks)), workers_(workers) {
    if (blocks_.empty()) throw std::invalid_argument("StackedMap: block list is empty");
    in_dim_ = blocks_.front()->in_dim();
    out_dim_ = 0;
    offsets_.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      if (!b) throw std::invalid_argument("StackedMap: null block");
      if (b->in_dim() != in_dim_)
        throw std::invalid_argument("StackedMap: blocks disagree on in_dim");
      offsets_.push_back(out_dim_);
      out_dim_ += b->out_dim();
    }
  }

  std::size_t in_dim() const override { return in_dim_; }
  std::size_t out_dim() const override { return out_dim_; }
  std::size_t block_count() const { return blocks_.size(); }
  const LinearMap& block(std::size_t j) const { return *blocks_[j]; }
  std::size_t block_offset(std::size_t j) const { return offsets_[j]; }

  void apply(std::span<const double> v, std::span<double> out) const override {
    check_in(v.size());
    check_out(out.size());
    parallel_for(blocks_.size(), workers_, [&](std::size_t j) {
      blocks_[j]->apply(v, out.subspan(offsets_[j], blocks_[j]->out_dim()));
    });
  }

  void apply_adjoint(std::span<const double> u, std::span<double> out) const override {
    check_out(u.size());
    check_in(out.size());
    std::vector<std::vector<double>> partial(blocks_.size());
    parallel_for(blocks_.size(), workers_, [&](std::size_t j) {
      partial[j].resize(in_dim_);
      blocks_[j]->apply_adjoint(u.subspan(offsets_[j], blocks_[j]->out_dim()), partial[j]);
    });
    for (std::size_t i = 0; i < in_dim_; ++i) out[i] = 0.0;
    for (std::size_t j = 0; j < blocks_.size(); ++j)  // fixed reduction order
      for (std::size_t i = 0; i < in_dim_; ++i) out[i] += partial[j][i];
  }

 private:
  std::vector<std::shared_ptr<const LinearMap>> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t in_dim_ = 0, out_dim_ = 0;
  unsigned workers_;
};

// Max over seeded random probes of |<Av,u> - <v,A'u>| / (|Av| |u| + tiny).
inline double check_adjoint(const LinearMap& map, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_adjoint: trials must be >= 1");
  Rng rng(seed);
  double worst = 0.0;
  std::vector<double> v(map.in_dim()), u(map.out_dim());
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& x : v) x = rng.normal();
    for (double& x : u) x = rng.normal();
    const std::vector<double> av = map.apply(v);
    const std::vector<double> atu = map.apply_adjoint(u);
    const double num = std::abs(dot(av, u) - dot(v, atu));
    const double den = norm2(av) * norm2(u) + 1e-300;
    const double rel = num / den;
    if (rel > worst) worst = rel;
  }
  return worst;
}

}  // namespace pqsv
