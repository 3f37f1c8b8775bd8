#pragma once

// Fourier tools on the uniform periodic grid theta_j = 2*pi*j/N.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "quadshape/errors.hpp"

namespace quadshape {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double grid_theta(Eigen::Index j, Eigen::Index n) {
  return kTwoPi * static_cast<double>(j) / static_cast<double>(n);
}

// Signed wavenumber of FFT bin k on an N-point grid (Nyquist bin maps to +N/2).
inline Eigen::Index wavenumber(Eigen::Index k, Eigen::Index n) {
  return k <= n / 2 ? k : k - n;
}

namespace detail {

inline void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw ValidationError(std::string(what) + ": non-finite sample");
}

inline std::vector<std::complex<double>> forward_fft(const Vec& samples) {
  Eigen::FFT<double> fft;
  std::vector<double> in(samples.data(), samples.data() + samples.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

inline Vec inverse_fft_real(const std::vector<std::complex<double>>& spectrum) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out;
  fft.inv(out, spectrum);
  Vec result(static_cast<Eigen::Index>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) result[static_cast<Eigen::Index>(i)] = out[i].real();
  return result;
}

}  // namespace detail

/// d^order/dtheta^order of the trigonometric interpolant, evaluated at the nodes.
/// For odd orders the Nyquist mode is dropped (its derivative is not real).
inline Vec spectral_derivative(const Vec& samples, int order) {
  const Eigen::Index n = samples.size();
  if (n < 2 || n % 2 != 0) throw ValidationError("spectral_derivative: sample count must be even");
  if (order < 0) throw ValidationError("spectral_derivative: negative order");
  detail::require_finite(samples, "spectral_derivative");
  if (order == 0) return samples;

  auto spec = detail::forward_fft(samples);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index m = wavenumber(k, n);
    if (m == n / 2 && order % 2 == 1) {
      spec[static_cast<std::size_t>(k)] = 0.0;
      continue;
    }
    const std::complex<double> ik(0.0, static_cast<double>(m));
    spec[static_cast<std::size_t>(k)] *= std::pow(ik, order);
  }
  return detail::inverse_fft_real(spec);
}

/// Trigonometric interpolant of periodic samples; evaluates anywhere on the circle.
class TrigInterpolant {
 public:
  TrigInterpolant() = default;

  explicit TrigInterpolant(const Vec& samples) {
    n_ = samples.size();
    if (n_ < 2 || n_ % 2 != 0) throw ValidationError("TrigInterpolant: sample count must be even");
    detail::require_finite(samples, "TrigInterpolant");
    const auto spec = detail::forward_fft(samples);
    const Eigen::Index half = n_ / 2;
    mean_ = spec[0].real() / static_cast<double>(n_);
    cos_.setZero(half + 1);
    sin_.setZero(half + 1);
    for (Eigen::Index m = 1; m <= half; ++m) {
      const auto c = spec[static_cast<std::size_t>(m)] / static_cast<double>(n_);
      // Nyquist bin is shared between +N/2 and -N/2: it contributes once.
      const double fold = (m == half) ? 1.0 : 2.0;
      cos_[m] = fold * c.real();
      sin_[m] = -fold * c.imag();
    }
  }

  Eigen::Index size() const { return n_; }
  double mean() const { return mean_; }

  double operator()(double theta) const {
    double v = mean_;
    for (Eigen::Index m = 1; m < cos_.size(); ++m) {
      const double a = static_cast<double>(m) * theta;
      v += cos_[m] * std::cos(a) + sin_[m] * std::sin(a);
    }
    return v;
  }

  double derivative(double theta) const {
    double v = 0.0;
    for (Eigen::Index m = 1; m < cos_.size(); ++m) {
      const double fm = static_cast<double>(m);
      const double a = fm * theta;
      v += fm * (-cos_[m] * std::sin(a) + sin_[m] * std::cos(a));
    }
    return v;
  }

  // Antiderivative with the mean removed: P(theta) with P' = f - mean, P periodic.
  double periodic_antiderivative(double theta) const {
    double v = 0.0;
    for (Eigen::Index m = 1; m < cos_.size(); ++m) {
      const double fm = static_cast<double>(m);
      const double a = fm * theta;
      v += (cos_[m] * std::sin(a) - sin_[m] * std::cos(a)) / fm;
    }
    return v;
  }

  // Largest coefficient magnitude among wavenumbers above N/4, relative to the largest overall.
  double tail_ratio() const {
    double head = std::abs(mean_), tail = 0.0;
    for (Eigen::Index m = 1; m < cos_.size(); ++m) {
      const double mag = std::hypot(cos_[m], sin_[m]);
      head = std::max(head, mag);
      if (m > n_ / 4) tail = std::max(tail, mag);
    }
    return head > 0.0 ? tail / head : 0.0;
  }

 private:
  Eigen::Index n_ = 0;
  double mean_ = 0.0;
  Vec cos_, sin_;
};

}  // namespace quadshape
