#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace gme {

// Residuals and all scale parameters are in gray levels (0..255 scale).

struct L1 {};
struct L2 {};
struct Huber {
  double k = 20.0;
};
struct Tukey {
  double k = 20.0;
};
struct Cauchy {
  double c = 20.0;
};
/// Classic Student-t negative log-density with `v` degrees of freedom and scale `sigma`.
struct StudentTClassic {
  double v = 10.0;
  double sigma = 1.0;
};
/// Student-t re-parameterised so that its influence function peaks at
/// x = nu with height tau:
///   rho(x) = tau*nu*ln(1 + x^2/nu^2) - ln[Gamma(tau*nu) / (sqrt(pi)*nu*Gamma(tau*nu - 1/2))]
///   psi(x) = 2*tau*nu*x / (nu^2 + x^2)
/// Large tau = nu approaches L2 (up to the constant), and for a fixed nu the
/// influence has the Cauchy-Lorentzian shape with c = nu.
struct StudentT {
  double tau = 20.0;
  double nu = 20.0;
};

using CostFunction = std::variant<L1, L2, Huber, Tukey, Cauchy, StudentTClassic, StudentT>;

/// Throws ParameterError unless every parameter is finite and strictly
/// positive and, for StudentT, tau*nu > 1/2.
void validate(const CostFunction& f);

/// Cost. Includes the log-normaliser for the Student-t variants.
double rho(const CostFunction& f, double x);
/// Influence, d rho / dx.
double psi(const CostFunction& f, double x);
/// Curvature, d psi / dx. L1 returns 0 everywhere (undefined at 0).
double psi_prime(const CostFunction& f, double x);
/// IRLS weight psi(x)/x, continuously extended at 0 (L1: 1 at 0).
double weight(const CostFunction& f, double x);

/// rho(f, 0): the additive constant of the cost (0 except for Student-t).
double rho_offset(const CostFunction& f);
/// rho(f, x) - rho(f, 0), cheaper than rho for the Student-t variants.
double rho_shape(const CostFunction& f, double x);

/// Parses the command-line mini-grammar:
///   l1 | l2 | huber[:k=K] | tukey[:k=K] | cauchy[:c=C]
///   | stc[:v=V,sigma=S] | stu[:tau=T,nu=N]
/// Missing parameters take the struct defaults. Throws ParseError or ParameterError.
CostFunction parse_cost(std::string_view text);

/// Canonical string that parse_cost accepts back, e.g. "stu:tau=20,nu=20".
std::string to_string(const CostFunction& f);

}  // namespace gme
