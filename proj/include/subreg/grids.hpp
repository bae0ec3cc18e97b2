#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "subreg/linalg.hpp"

namespace subreg {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * h);
  if (!out.empty()) out.back() = hi;
  return out;
}

// Symmetric grid around c: c + k*h for k in [-m, m]. Hits c exactly, which
// matters for equality guards.
inline std::vector<double> centered_grid(double c, double h, std::size_t m) {
  std::vector<double> out;
  out.reserve(2 * m + 1);
  for (long k = -static_cast<long>(m); k <= static_cast<long>(m); ++k)
    out.push_back(c + static_cast<double>(k) * h);
  return out;
}

// Full box grid, row-major order (deterministic).
inline std::vector<Vec> box_grid(const Box& box, std::size_t per_dim) {
  const std::size_t n = box.dim();
  std::vector<std::vector<double>> axes;
  for (std::size_t i = 0; i < n; ++i)
    axes.push_back(linspace(box.bounds[i][0], box.bounds[i][1], per_dim));
  std::vector<Vec> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= per_dim;
  out.reserve(total);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = axes[i][idx[i]];
    out.push_back(x);
    for (std::size_t i = n; i-- > 0;) {
      if (++idx[i] < per_dim) break;
      idx[i] = 0;
    }
  }
  return out;
}

// Lattice points center + step*Z^n restricted to the closed ball of the given
// radius, in lexicographic order.
inline std::vector<Vec> ball_lattice(const Vec& center, double radius, double step) {
  const std::size_t n = center.dim();
  const long m = static_cast<long>(std::floor(radius / step + 1e-12));
  std::vector<Vec> out;
  std::vector<long> k(n, -m);
  bool done = false;
  while (!done) {
    Vec x(n);
    double r2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(k[i]) * step;
      x[i] = center[i] + d;
      r2 += d * d;
    }
    if (r2 <= radius * radius * (1 + 1e-12)) out.push_back(x);
    done = true;
    for (std::size_t i = n; i-- > 0;) {
      if (++k[i] <= m) {
        done = false;
        break;
      }
      k[i] = -m;
    }
  }
  return out;
}

// Points on the sphere of the given radius. 1-D: the two endpoints. 2-D: a
// uniform angular grid starting at angle 0 (so axes are always probed).
// 3-D: latitude-longitude grid with poles.
inline std::vector<Vec> sphere_points(const Vec& center, double radius, std::size_t count) {
  const std::size_t n = center.dim();
  std::vector<Vec> out;
  if (n == 1) {
    out.push_back(Vec{center[0] - radius});
    out.push_back(Vec{center[0] + radius});
    return out;
  }
  if (n == 2) {
    const std::size_t m = std::max<std::size_t>(count, 8);
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(m);
      out.push_back(Vec{center[0] + radius * std::cos(th), center[1] + radius * std::sin(th)});
    }
    return out;
  }
  const std::size_t m = std::max<std::size_t>(static_cast<std::size_t>(std::sqrt(static_cast<double>(count))), 6);
  for (std::size_t i = 0; i <= m; ++i) {
    const double phi = M_PI * static_cast<double>(i) / static_cast<double>(m);
    const std::size_t ring = (i == 0 || i == m) ? 1 : 2 * m;
    for (std::size_t j = 0; j < ring; ++j) {
      const double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(ring);
      out.push_back(Vec{center[0] + radius * std::sin(phi) * std::cos(th),
                        center[1] + radius * std::sin(phi) * std::sin(th),
                        center[2] + radius * std::cos(phi)});
    }
  }
  return out;
}

// Points with norm distance to center in [t/2, t]: several spheres.
inline std::vector<Vec> annulus_points(const Vec& center, double t, std::size_t n_dirs,
                                       std::size_t n_shells) {
  std::vector<Vec> out;
  for (std::size_t s = 0; s < n_shells; ++s) {
    const double r = t * (0.5 + 0.5 * static_cast<double>(s) / static_cast<double>(std::max<std::size_t>(n_shells - 1, 1)));
    auto pts = sphere_points(center, r, n_dirs);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

// Default geometric radius schedule t_k = eps * 2^-k, k = 0..steps.
inline std::vector<double> geometric_radii(double eps, std::size_t steps = 12) {
  std::vector<double> out;
  out.reserve(steps + 1);
  double t = eps;
  for (std::size_t k = 0; k <= steps; ++k) {
    out.push_back(t);
    t *= 0.5;
  }
  return out;
}

// Thread count: explicit argument wins, then SUBREG_THREADS, then 1.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SUBREG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

// Chunked parallel map over [0, n). Results must be written to preallocated
// per-index slots by fn; reductions stay with the caller so output order is
// deterministic regardless of the thread count.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2 * threads) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex err_mu;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace subreg
