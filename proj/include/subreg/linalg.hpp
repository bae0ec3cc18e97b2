#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "subreg/errors.hpp"

namespace subreg {

inline constexpr std::size_t kMaxDim = 3;

// Small dense vector, dimension 1..3. Fixed capacity keeps the probe loops
// allocation-free.
class Vec {
 public:
  Vec() : n_(0), a_{0, 0, 0} {}
  explicit Vec(std::size_t n, double fill = 0.0) : n_(n), a_{fill, fill, fill} {
    check_dim(n);
  }
  Vec(std::initializer_list<double> xs) : n_(xs.size()), a_{0, 0, 0} {
    check_dim(n_);
    std::size_t i = 0;
    for (double x : xs) a_[i++] = x;
  }
  static Vec from(const std::vector<double>& xs) {
    check_dim(xs.size());
    Vec v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) v.a_[i] = xs[i];
    return v;
  }

  std::size_t dim() const { return n_; }
  double operator[](std::size_t i) const { return a_[i]; }
  double& operator[](std::size_t i) { return a_[i]; }

  std::vector<double> to_std() const { return std::vector<double>(a_.begin(), a_.begin() + n_); }

  friend Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i) r.a_[i] = a.a_[i] + b.a_[i];
    return r;
  }
  friend Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i) r.a_[i] = a.a_[i] - b.a_[i];
    return r;
  }
  friend Vec operator*(double s, const Vec& a) {
    Vec r(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i) r.a_[i] = s * a.a_[i];
    return r;
  }
  Vec operator-() const { return -1.0 * *this; }

  friend bool operator==(const Vec& a, const Vec& b) {
    return a.n_ == b.n_ && std::equal(a.a_.begin(), a.a_.begin() + a.n_, b.a_.begin());
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < n_; ++i) {
      if (i) s += ", ";
      s += std::to_string(a_[i]);
    }
    return s + ")";
  }

 private:
  static void check_dim(std::size_t n) {
    if (n < 1 || n > kMaxDim)
      throw ArgumentError("Vec: dimension " + std::to_string(n) + " out of range [1, 3]");
  }
  std::size_t n_;
  std::array<double, kMaxDim> a_;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

inline double norm_inf(const Vec& a) {
  double m = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

// Symmetric matrix, same capacity rules as Vec.
class Mat {
 public:
  Mat() : n_(0) { m_.fill(0); }
  explicit Mat(std::size_t n) : n_(n) {
    if (n < 1 || n > kMaxDim)
      throw ArgumentError("Mat: dimension " + std::to_string(n) + " out of range [1, 3]");
    m_.fill(0);
  }

  std::size_t dim() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return m_[i * kMaxDim + j]; }
  double& operator()(std::size_t i, std::size_t j) { return m_[i * kMaxDim + j]; }

  friend Mat operator+(const Mat& a, const Mat& b) {
    Mat r(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t j = 0; j < a.n_; ++j) r(i, j) = a(i, j) + b(i, j);
    return r;
  }
  friend Mat operator*(double s, const Mat& a) {
    Mat r(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t j = 0; j < a.n_; ++j) r(i, j) = s * a(i, j);
    return r;
  }

  friend Vec operator*(const Mat& m, const Vec& v) {
    Vec r(m.n_);
    for (std::size_t i = 0; i < m.n_; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < m.n_; ++j) s += m(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }

  static Mat identity(std::size_t n) {
    Mat r(n);
    for (std::size_t i = 0; i < n; ++i) r(i, i) = 1;
    return r;
  }

 private:
  std::size_t n_;
  std::array<double, kMaxDim * kMaxDim> m_;
};

// Eigenvalues of a symmetric matrix (ascending), cyclic Jacobi sweeps.
// Dimensions up to 3, so a handful of sweeps reaches machine precision.
inline std::vector<double> sym_eigenvalues(Mat a) {
  const std::size_t n = a.dim();
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        Mat b = a;
        for (std::size_t k = 0; k < n; ++k) {
          b(p, k) = c * a(p, k) - s * a(q, k);
          b(q, k) = s * a(p, k) + c * a(q, k);
        }
        a = b;
        b = a;
        for (std::size_t k = 0; k < n; ++k) {
          b(k, p) = c * a(k, p) - s * a(k, q);
          b(k, q) = s * a(k, p) + c * a(k, q);
        }
        a = b;
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Axis-aligned box, the domain-of-interest attached to every function.
struct Box {
  std::vector<std::array<double, 2>> bounds;  // bounds[i] = {lo, hi}

  std::size_t dim() const { return bounds.size(); }
  bool contains(const Vec& x, double slack = 0.0) const {
    for (std::size_t i = 0; i < dim(); ++i)
      if (x[i] < bounds[i][0] - slack || x[i] > bounds[i][1] + slack) return false;
    return true;
  }
  Vec clamp(const Vec& x) const {
    Vec r = x;
    for (std::size_t i = 0; i < dim(); ++i)
      r[i] = std::clamp(x[i], bounds[i][0], bounds[i][1]);
    return r;
  }
  double max_extent() const {
    double m = 0;
    for (const auto& b : bounds) m = std::max(m, b[1] - b[0]);
    return m;
  }
};

}  // namespace subreg
