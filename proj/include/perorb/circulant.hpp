#ifndef PERORB_CIRCULANT_HPP
#define PERORB_CIRCULANT_HPP

// Solvers for the periodic Helmholtz-type system (Id - Delta_h) x = b on a
// uniform grid of N points on the unit circle, where
//   (Delta_h x)_i = N^2 (x_{i+1} - 2 x_i + x_{i-1}).
// Power-of-two sizes are diagonalized with FFTW; all other sizes use the
// cyclic tridiagonal (Sherman-Morrison) elimination.

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "perorb/error.hpp"

namespace perorb {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Eigenvalue of -Delta_h for Fourier mode m on N points.
inline double laplacian_eigenvalue(std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n);
  return nn * nn * (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) / nn));
}

namespace detail {

// The FFTW planner is not thread-safe; plans are created once per size under
// a lock and executed through the new-array interface, which is.
struct FftwPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

inline const FftwPlans& fftw_plans(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, FftwPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int ni = static_cast<int>(n);
  auto* r = fftw_alloc_real(n);
  auto* c = fftw_alloc_complex(n / 2 + 1);
  FftwPlans p;
  p.forward = fftw_plan_dft_r2c_1d(ni, r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.backward = fftw_plan_dft_c2r_1d(ni, c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(r);
  fftw_free(c);
  if (!p.forward || !p.backward) throw Error(ErrorCode::SolveFailure, "fftw planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace detail

inline std::vector<double> helmholtz_solve_fft(std::span<const double> rhs) {
  const std::size_t n = rhs.size();
  if (n < 2) throw Error(ErrorCode::DimensionMismatch, "fft solve needs at least 2 points");
  const auto& plans = detail::fftw_plans(n);
  std::vector<double> buf(rhs.begin(), rhs.end());
  std::vector<fftw_complex> spec(n / 2 + 1);
  fftw_execute_dft_r2c(plans.forward, buf.data(), spec.data());
  for (std::size_t m = 0; m <= n / 2; ++m) {
    const double s = 1.0 / ((1.0 + laplacian_eigenvalue(n, m)) * static_cast<double>(n));
    spec[m][0] *= s;
    spec[m][1] *= s;
  }
  // c2r destroys its input, which is a local copy here.
  fftw_execute_dft_c2r(plans.backward, spec.data(), buf.data());
  return buf;
}

inline std::vector<double> helmholtz_solve_cyclic(std::span<const double> rhs) {
  const std::size_t n = rhs.size();
  if (n < 3) throw Error(ErrorCode::DimensionMismatch, "cyclic solve needs at least 3 points");
  const double nn = static_cast<double>(n);
  const double off = -nn * nn;
  const double diag = 1.0 + 2.0 * nn * nn;
  // Sherman-Morrison: A = T + u v^T with T tridiagonal.
  const double gamma = -diag;
  std::vector<double> bb(n, diag);
  bb[0] = diag - gamma;
  bb[n - 1] = diag - off * off / gamma;

  auto tridiag = [&](std::span<const double> r, std::vector<double>& x) {
    std::vector<double> c_prime(n);
    x.assign(n, 0.0);
    double beta = bb[0];
    if (beta == 0.0) throw Error(ErrorCode::SolveFailure, "zero pivot in cyclic solve");
    x[0] = r[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
      c_prime[i] = off / beta;
      beta = bb[i] - off * c_prime[i];
      if (beta == 0.0) throw Error(ErrorCode::SolveFailure, "zero pivot in cyclic solve");
      x[i] = (r[i] - off * x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c_prime[i + 1] * x[i + 1];
  };

  std::vector<double> x;
  tridiag(rhs, x);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = off;
  std::vector<double> z;
  tridiag(u, z);
  const double fact = (x[0] + off * x[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
  return x;
}

inline std::vector<double> helmholtz_solve(std::span<const double> rhs) {
  return is_power_of_two(rhs.size()) ? helmholtz_solve_fft(rhs) : helmholtz_solve_cyclic(rhs);
}

}  // namespace perorb

#endif  // PERORB_CIRCULANT_HPP
