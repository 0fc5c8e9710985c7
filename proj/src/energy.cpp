#include "rhe/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUnderflow = 1e-300;
constexpr int kMaxNewton = 100;

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("energy: epsilon must be positive");
}

// h'(e^w), evaluated so that large w overflows to +inf instead of NaN.
double h_prime_exp(const EnergyModel& model, double w) {
  if (model.kind() == EnergyModel::Kind::boltzmann) return w;
  return model.coefficient() * model.exponent() * std::exp((model.exponent() - 1.0) * w);
}

// d/dw h'(e^w) = e^w h''(e^w).
double h_prime_exp_slope(const EnergyModel& model, double w) {
  if (model.kind() == EnergyModel::Kind::boltzmann) return 1.0;
  const double m = model.exponent();
  return model.coefficient() * m * (m - 1.0) * std::exp((m - 1.0) * w);
}

// Starting point for power models. With K = c m / eps and p = m - 1 the
// root is w = L - W(p K e^{pL}) / p, W the Lambert function; two terms of
// its asymptotic series are close enough for Newton to take over.
double power_guess(const EnergyModel& model, double epsilon, double log_eta) {
  const double p = model.exponent() - 1.0;
  const double x = std::log(p * model.coefficient() * model.exponent() / epsilon) + p * log_eta;
  double W = 0.0;
  if (x < 1.0) {
    const double e = std::exp(x);
    W = e * (1.0 - e);
    if (W <= 0.0) W = e / (1.0 + e);
  } else {
    W = x - std::log(x) + std::log(x) / x;
  }
  return log_eta - W / p;
}

}  // namespace

EnergyModel EnergyModel::power(double m, double c) {
  if (!(m > 1.0)) throw InvalidArgument("energy: power exponent must exceed 1");
  if (!(c > 0.0)) throw InvalidArgument("energy: power coefficient must be positive");
  return EnergyModel(Kind::power, m, c);
}

EnergyModel EnergyModel::boltzmann() { return EnergyModel(Kind::boltzmann, 1.0, 1.0); }

double EnergyModel::h(double z) const {
  if (z < 0.0) throw InvalidArgument("energy: negative density");
  if (kind_ == Kind::boltzmann) return z == 0.0 ? 0.0 : z * (std::log(z) - 1.0);
  return c_ * std::pow(z, m_);
}

double EnergyModel::h_prime(double z) const {
  if (z < 0.0) throw InvalidArgument("energy: negative density");
  if (kind_ == Kind::boltzmann) return z == 0.0 ? -kInf : std::log(z);
  return c_ * m_ * std::pow(z, m_ - 1.0);
}

double EnergyModel::h_second(double z) const {
  if (z < 0.0) throw InvalidArgument("energy: negative density");
  if (kind_ == Kind::boltzmann) return 1.0 / z;
  return c_ * m_ * (m_ - 1.0) * std::pow(z, m_ - 2.0);
}

double H_eps(const EnergyModel& model, double epsilon, double z) {
  check_epsilon(epsilon);
  if (z < 0.0) throw InvalidArgument("H_eps: negative argument");
  if (z == 0.0) return 0.0;
  return std::exp(log_H_eps(model, epsilon, std::log(z)));
}

double log_H_eps(const EnergyModel& model, double epsilon, double log_z) {
  if (log_z == -kInf) return -kInf;
  return log_z + h_prime_exp(model, log_z) / epsilon;
}

double log_H_eps_inverse_newton(const EnergyModel& model, double epsilon, double log_eta) {
  check_epsilon(epsilon);
  if (std::isnan(log_eta)) throw InvalidArgument("H_eps_inverse: NaN argument");
  if (log_eta == -kInf) return -kInf;
  if (log_eta == kInf) return kInf;
  const auto F = [&](double w) { return w + h_prime_exp(model, w) / epsilon - log_eta; };

  // Bracket [lo, hi] with F(lo) <= 0 <= F(hi), grown from log eta by
  // doubling steps so its width stays comparable to the distance to the root.
  double hi = log_eta;
  for (double step = 1.0; F(hi) < 0.0; step *= 2.0) hi = log_eta + step;
  double lo = std::min(hi, log_eta) - 1.0;
  for (double step = 2.0; F(lo) > 0.0; step *= 2.0) lo = std::min(hi, log_eta) - step;

  double w = model.kind() == EnergyModel::Kind::power ? power_guess(model, epsilon, log_eta) : hi;
  if (!(w > lo && w < hi)) w = hi;
  double dx_old = hi - lo;
  double dx = dx_old;
  for (int it = 0; it < kMaxNewton; ++it) {
    const double f = F(w);
    if (f == 0.0) return w;
    if (f < 0.0) {
      lo = w;
    } else {
      hi = w;
    }
    const double slope = 1.0 + h_prime_exp_slope(model, w) / epsilon;
    double next = w - f / slope;
    // Bisect when Newton leaves the bracket or fails to halve the step.
    if (!(next > lo && next < hi) || std::abs(2.0 * f) > std::abs(dx_old * slope)) {
      next = 0.5 * (lo + hi);
    }
    dx_old = dx;
    dx = next - w;
    if (std::abs(dx) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(w))) {
      return next;
    }
    w = next;
  }
  return w;
}

double log_H_eps_inverse(const EnergyModel& model, double epsilon, double log_eta) {
  check_epsilon(epsilon);
  if (model.kind() == EnergyModel::Kind::boltzmann) {
    // z^(1 + 1/eps) = eta.
    if (std::isnan(log_eta)) throw InvalidArgument("H_eps_inverse: NaN argument");
    return log_eta * (epsilon / (1.0 + epsilon));
  }
  return log_H_eps_inverse_newton(model, epsilon, log_eta);
}

double H_eps_inverse(const EnergyModel& model, double epsilon, double eta) {
  check_epsilon(epsilon);
  if (!(eta >= 0.0)) throw InvalidArgument("H_eps_inverse: eta must be nonnegative");
  if (eta < kUnderflow) return 0.0;
  return std::exp(log_H_eps_inverse(model, epsilon, std::log(eta)));
}

double H_eps_inverse_newton(const EnergyModel& model, double epsilon, double eta) {
  check_epsilon(epsilon);
  if (!(eta >= 0.0)) throw InvalidArgument("H_eps_inverse: eta must be nonnegative");
  if (eta < kUnderflow) return 0.0;
  return std::exp(log_H_eps_inverse_newton(model, epsilon, std::log(eta)));
}

void log_H_eps_inverse(const EnergyModel& model, double epsilon, std::span<const double> log_eta,
                       std::span<double> log_z) {
  if (log_eta.size() != log_z.size()) throw InvalidArgument("H_eps_inverse: size mismatch");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(log_eta.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t j = 0; j < n; ++j) log_z[j] = log_H_eps_inverse(model, epsilon, log_eta[j]);
}

double discrete_energy(const EnergyModel& model, std::span<const double> r,
                       std::span<const double> volumes) {
  double e = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) e += volumes[j] * model.h(r[j]);
  return e;
}

}  // namespace rhe
