#pragma once

#include <cmath>
#include <functional>

#include "rulsif/estimator.hpp"
#include "rulsif/synthdata.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

// Two estimators of the alpha-relative Pearson divergence
//   PE_alpha = (1/2) E_{q_alpha}[(r_alpha - 1)^2],
// evaluated from fitted ratio values r at the sample points:
//   pe_hat   = -(alpha/2n) sum r(x_i)^2 - ((1-alpha)/2n') sum r(x'_j)^2
//              + (1/n) sum r(x_i) - 1/2
//   pe_tilde = (1/2n) sum r(x_i) - 1/2

inline double pe_hat_from_ratios(const Eigen::Ref<const Vector>& r_numerator,
                                 const Eigen::Ref<const Vector>& r_denominator,
                                 double alpha) {
  require(r_numerator.size() > 0 && r_denominator.size() > 0, "pe_hat: empty sets");
  const double n = static_cast<double>(r_numerator.size());
  const double np = static_cast<double>(r_denominator.size());
  return -0.5 * alpha * r_numerator.squaredNorm() / n -
         0.5 * (1.0 - alpha) * r_denominator.squaredNorm() / np +
         r_numerator.sum() / n - 0.5;
}

inline double pe_tilde_from_ratios(const Eigen::Ref<const Vector>& r_numerator) {
  require(r_numerator.size() > 0, "pe_tilde: empty set");
  return 0.5 * r_numerator.sum() / static_cast<double>(r_numerator.size()) - 0.5;
}

inline double pe_hat(const RulsifModel& model, const SampleSet& numerator,
                     const SampleSet& denominator) {
  return pe_hat_from_ratios(predict(model, numerator), predict(model, denominator),
                            model.alpha);
}

inline double pe_tilde(const RulsifModel& model, const SampleSet& numerator) {
  return pe_tilde_from_ratios(predict(model, numerator));
}

struct DivergenceEstimate {
  double alpha = 0.0;
  double pe_hat = 0.0;
  double pe_tilde = 0.0;
  Index n = 0;
  Index n_prime = 0;
};

/// Both estimators at once. By default callers pass the fitting samples;
/// held-out sets work the same way for diagnostics.
inline DivergenceEstimate estimate_divergence(const RulsifModel& model,
                                              const SampleSet& numerator,
                                              const SampleSet& denominator) {
  const Vector r_num = predict(model, numerator);
  const Vector r_den = predict(model, denominator);
  return {model.alpha, pe_hat_from_ratios(r_num, r_den, model.alpha),
          pe_tilde_from_ratios(r_num), numerator.size(), denominator.size()};
}

namespace detail {

// Adaptive Simpson with the standard 15x error criterion.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double fa, double fm, double fb, double whole,
                               double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                 double b, double tol) {
  constexpr int kInitialPanels = 32;
  const double width = (b - a) / kInitialPanels;
  double total = 0.0;
  for (int p = 0; p < kInitialPanels; ++p) {
    const double lo = a + p * width;
    const double hi = lo + width;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo);
    const double fmid = f(mid);
    const double fhi = f(hi);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, tol / kInitialPanels, 40);
  }
  return total;
}

/// Integration range covering every component of both specs out to 12 sd.
inline std::pair<double, double> integration_range(const GaussianMixtureSpec& p,
                                                   const GaussianMixtureSpec& p_prime) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* spec : {&p, &p_prime}) {
    for (const auto& c : spec->components()) {
      const double sd = std::sqrt(c.variance[0]);
      lo = std::min(lo, c.mean[0] - 12.0 * sd);
      hi = std::max(hi, c.mean[0] + 12.0 * sd);
    }
  }
  return {lo, hi};
}

}  // namespace detail

/// Ground-truth PE_alpha for 1-D Gaussian-mixture pairs by adaptive
/// quadrature of (1/2) (r_alpha - 1)^2 q_alpha, absolute tolerance 1e-6.
inline double true_pe_oracle(const GaussianMixtureSpec& p,
                             const GaussianMixtureSpec& p_prime, double alpha) {
  require(p.dim() == 1 && p_prime.dim() == 1, "true_pe_oracle: 1-D specs only");
  require(alpha >= 0.0 && alpha < 1.0, "true_pe_oracle: alpha must be in [0, 1)");
  const auto range = detail::integration_range(p, p_prime);
  auto integrand = [&](double t) {
    const Vector point = Vector::Constant(1, t);
    const double pd = density(p, point);
    const double qd = alpha * pd + (1.0 - alpha) * density(p_prime, point);
    if (qd <= 0.0) return 0.0;
    const double rel = pd / qd - 1.0;
    return 0.5 * rel * rel * qd;
  };
  return detail::integrate_adaptive(integrand, range.first, range.second, 1e-6);
}

}  // namespace rulsif
