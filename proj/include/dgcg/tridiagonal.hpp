#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dgcg {

/// Symmetric-or-not tridiagonal matrix with a cached LU factorization (no pivoting; used for the
/// SPD mass and stiffness matrices and their positive combinations).
class Tridiagonal {
public:
  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower_(n, 0.0), diag_(n, 0.0), upper_(n, 0.0) {}

  std::size_t size() const { return diag_.size(); }

  double& lower(std::size_t i) { return lower_[i]; }  // A(i, i-1)
  double& diag(std::size_t i) { return diag_[i]; }
  double& upper(std::size_t i) { return upper_[i]; }  // A(i, i+1)
  double lower(std::size_t i) const { return lower_[i]; }
  double diag(std::size_t i) const { return diag_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }

  std::vector<double> apply(std::span<const double> x) const
  {
    const std::size_t n = size();
    if (x.size() != n) throw std::invalid_argument("tridiagonal apply: dimension mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag_[i] * x[i];
      if (i > 0) s += lower_[i] * x[i - 1];
      if (i + 1 < n) s += upper_[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  double quadratic_form(std::span<const double> x, std::span<const double> y) const
  {
    const auto ax = apply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) s += ax[i] * y[i];
    return s;
  }

  void factorize()
  {
    const std::size_t n = size();
    pivot_.assign(n, 0.0);
    mult_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double d = diag_[i];
      if (i > 0) {
        mult_[i] = lower_[i] / pivot_[i - 1];
        d -= mult_[i] * upper_[i - 1];
      }
      if (d == 0.0) throw std::runtime_error("tridiagonal factorization: zero pivot");
      pivot_[i] = d;
    }
    factored_ = true;
  }

  std::vector<double> solve(std::span<const double> b) const
  {
    const std::size_t n = size();
    if (!factored_) throw std::logic_error("tridiagonal solve before factorize");
    if (b.size() != n) throw std::invalid_argument("tridiagonal solve: dimension mismatch");
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 1; i < n; ++i) x[i] -= mult_[i] * x[i - 1];
    for (std::size_t i = n; i-- > 0;) {
      if (i + 1 < n) x[i] -= upper_[i] * x[i + 1];
      x[i] /= pivot_[i];
    }
    return x;
  }

private:
  std::vector<double> lower_, diag_, upper_;
  std::vector<double> pivot_, mult_;
  bool factored_ = false;
};

}  // namespace dgcg
