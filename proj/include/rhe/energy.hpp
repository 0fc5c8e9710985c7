#pragma once

#include <span>

namespace rhe {

/// Internal energy density h: power law c * r^m (m > 1) or Boltzmann
/// r (log r - 1).
class EnergyModel {
 public:
  enum class Kind { power, boltzmann };

  static EnergyModel power(double m, double c = 1.0);
  static EnergyModel boltzmann();

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return m_; }
  double coefficient() const noexcept { return c_; }

  double h(double z) const;
  double h_prime(double z) const;
  double h_second(double z) const;

 private:
  EnergyModel(Kind k, double m, double c) : kind_(k), m_(m), c_(c) {}
  Kind kind_ = Kind::power;
  double m_ = 2.0;
  double c_ = 0.5;
};

/// H_eps(z) = z exp(h'(z) / eps), with H_eps(0) = 0.
double H_eps(const EnergyModel& model, double epsilon, double z);

/// log H_eps(z) = log z + h'(z) / eps, evaluated without forming exp.
double log_H_eps(const EnergyModel& model, double epsilon, double log_z);

/// Unique z >= 0 with H_eps(z) = eta. Boltzmann uses the closed form
/// eta^(eps / (1 + eps)); power laws use the safeguarded Newton solve.
/// eta below 1e-300 maps to 0.
double H_eps_inverse(const EnergyModel& model, double epsilon, double eta);

/// Same relation solved in log coordinates: returns log z given log eta.
/// -inf maps to -inf; no underflow cutoff is applied.
double log_H_eps_inverse(const EnergyModel& model, double epsilon, double log_eta);

/// Generic Newton path for any model, bypassing closed forms:
/// solves w + h'(e^w) / eps = log eta for w = log z, bracketed by bisection.
double log_H_eps_inverse_newton(const EnergyModel& model, double epsilon, double log_eta);
double H_eps_inverse_newton(const EnergyModel& model, double epsilon, double eta);

/// Componentwise inverse in log space over a batch.
void log_H_eps_inverse(const EnergyModel& model, double epsilon, std::span<const double> log_eta,
                       std::span<double> log_z);

/// Discrete energy sum_j |Q_j| h(r_j).
double discrete_energy(const EnergyModel& model, std::span<const double> r,
                       std::span<const double> volumes);

}  // namespace rhe
