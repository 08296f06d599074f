#include "demoaug/bandit.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <stdexcept>

namespace demoaug {

double beta_mean_log_likelihood(double alpha, double beta, double mean_log_x, double mean_log_1mx) {
  const double log_b = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  return (alpha - 1.0) * mean_log_x + (beta - 1.0) * mean_log_1mx - log_b;
}

BetaMle fit_beta_mle(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("fit_beta_mle needs samples");
  double s1 = 0.0;
  double s2 = 0.0;
  double mean = 0.0;
  for (double x : samples) {
    if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("beta samples must lie in (0, 1)");
    s1 += std::log(x);
    s2 += std::log1p(-x);
    mean += x;
  }
  const double n = static_cast<double>(samples.size());
  s1 /= n;
  s2 /= n;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= n;

  double alpha = 1.0;
  double beta = 1.0;
  if (var > 0.0) {
    const double common = mean * (1.0 - mean) / var - 1.0;
    if (common > 0.0) {
      alpha = mean * common;
      beta = (1.0 - mean) * common;
    }
  }

  using boost::math::digamma;
  using boost::math::trigamma;
  double u = std::log(alpha);
  double w = std::log(beta);
  double ll = beta_mean_log_likelihood(alpha, beta, s1, s2);
  int it = 0;
  for (; it < 200; ++it) {
    alpha = std::exp(u);
    beta = std::exp(w);
    const double psi_ab = digamma(alpha + beta);
    const double ga = s1 - digamma(alpha) + psi_ab;
    const double gb = s2 - digamma(beta) + psi_ab;
    // Gradient and Hessian with respect to (log alpha, log beta).
    const double gu = alpha * ga;
    const double gw = beta * gb;
    if (std::hypot(gu, gw) < 1e-12) break;
    const double t_ab = trigamma(alpha + beta);
    const double huu = alpha * alpha * (t_ab - trigamma(alpha)) + gu;
    const double hww = beta * beta * (t_ab - trigamma(beta)) + gw;
    const double huw = alpha * beta * t_ab;
    const double det = huu * hww - huw * huw;

    double du = gu;
    double dw = gw;
    if (huu < 0.0 && det > 0.0) {
      du = -(hww * gu - huw * gw) / det;
      dw = -(-huw * gu + huu * gw) / det;
    }
    // Keep single steps moderate in log space.
    const double len = std::hypot(du, dw);
    if (len > 2.0) {
      du *= 2.0 / len;
      dw *= 2.0 / len;
    }
    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving) {
      const double cand = beta_mean_log_likelihood(std::exp(u + step * du), std::exp(w + step * dw), s1, s2);
      if (cand >= ll) {
        u += step * du;
        w += step * dw;
        improved = cand > ll;
        ll = cand;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return {std::exp(u), std::exp(w), ll, it};
}

}  // namespace demoaug
