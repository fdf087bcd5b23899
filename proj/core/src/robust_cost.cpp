#include "gme/robust_cost.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "gme/error.hpp"

namespace gme {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// -ln[ Gamma((v+1)/2) / (sqrt(v*pi) * sigma * Gamma(v/2)) ]
double classic_log_norm(const StudentTClassic& s) {
  return -(std::lgamma(0.5 * (s.v + 1.0)) - 0.5 * std::log(s.v * std::numbers::pi) -
           std::log(s.sigma) - std::lgamma(0.5 * s.v));
}

// -ln[ Gamma(tau*nu) / (sqrt(pi) * nu * Gamma(tau*nu - 1/2)) ]
double student_log_norm(const StudentT& s) {
  const double tn = s.tau * s.nu;
  return -(std::lgamma(tn) - 0.5 * std::log(std::numbers::pi) - std::log(s.nu) -
           std::lgamma(tn - 0.5));
}

}  // namespace

void validate(const CostFunction& f) {
  std::visit(overloaded{
                 [](const L1&) {},
                 [](const L2&) {},
                 [](const Huber& h) {
                   if (!positive(h.k)) throw ParameterError("huber: k must be > 0");
                 },
                 [](const Tukey& t) {
                   if (!positive(t.k)) throw ParameterError("tukey: k must be > 0");
                 },
                 [](const Cauchy& c) {
                   if (!positive(c.c)) throw ParameterError("cauchy: c must be > 0");
                 },
                 [](const StudentTClassic& s) {
                   if (!positive(s.v) || !positive(s.sigma)) {
                     throw ParameterError("stc: v and sigma must be > 0");
                   }
                 },
                 [](const StudentT& s) {
                   if (!positive(s.tau) || !positive(s.nu)) {
                     throw ParameterError("stu: tau and nu must be > 0");
                   }
                   if (!(s.tau * s.nu > 0.5)) throw ParameterError("stu: tau*nu must exceed 1/2");
                 },
             },
             f);
}

double rho_offset(const CostFunction& f) {
  validate(f);
  if (const auto* s = std::get_if<StudentT>(&f)) return student_log_norm(*s);
  if (const auto* s = std::get_if<StudentTClassic>(&f)) return classic_log_norm(*s);
  return 0.0;
}

double rho_shape(const CostFunction& f, double x) {
  return std::visit(
      overloaded{
          [x](const L1&) { return std::abs(x); },
          [x](const L2&) { return x * x; },
          [x](const Huber& h) {
            const double a = std::abs(x);
            return a <= h.k ? 0.5 * x * x : h.k * a - 0.5 * h.k * h.k;
          },
          [x](const Tukey& t) {
            const double c = t.k * t.k / 6.0;
            if (std::abs(x) > t.k) return c;
            const double u = 1.0 - (x / t.k) * (x / t.k);
            return c * (1.0 - u * u * u);
          },
          [x](const Cauchy& c) {
            const double r = x / c.c;
            return 0.5 * c.c * c.c * std::log1p(r * r);
          },
          [x](const StudentTClassic& s) {
            return 0.5 * (s.v + 1.0) * std::log1p(x * x / (s.v * s.sigma * s.sigma));
          },
          [x](const StudentT& s) {
            const double r = x / s.nu;
            return s.tau * s.nu * std::log1p(r * r);
          },
      },
      f);
}

double rho(const CostFunction& f, double x) {
  return rho_shape(f, x) + rho_offset(f);
}

double psi(const CostFunction& f, double x) {
  validate(f);
  return std::visit(overloaded{
                        [x](const L1&) { return sign(x); },
                        [x](const L2&) { return 2.0 * x; },
                        [x](const Huber& h) { return std::abs(x) <= h.k ? x : h.k * sign(x); },
                        [x](const Tukey& t) {
                          if (std::abs(x) > t.k) return 0.0;
                          const double u = 1.0 - (x / t.k) * (x / t.k);
                          return x * u * u;
                        },
                        [x](const Cauchy& c) {
                          const double r = x / c.c;
                          return x / (1.0 + r * r);
                        },
                        [x](const StudentTClassic& s) {
                          return (s.v + 1.0) * x / (s.v * s.sigma * s.sigma + x * x);
                        },
                        [x](const StudentT& s) {
                          return 2.0 * s.tau * s.nu * x / (s.nu * s.nu + x * x);
                        },
                    },
                    f);
}

double psi_prime(const CostFunction& f, double x) {
  validate(f);
  return std::visit(overloaded{
                        [](const L1&) { return 0.0; },
                        [](const L2&) { return 2.0; },
                        [x](const Huber& h) { return std::abs(x) <= h.k ? 1.0 : 0.0; },
                        [x](const Tukey& t) {
                          if (std::abs(x) > t.k) return 0.0;
                          const double r2 = (x / t.k) * (x / t.k);
                          return (1.0 - r2) * (1.0 - 5.0 * r2);
                        },
                        [x](const Cauchy& c) {
                          const double r2 = (x / c.c) * (x / c.c);
                          return (1.0 - r2) / ((1.0 + r2) * (1.0 + r2));
                        },
                        [x](const StudentTClassic& s) {
                          const double a = s.v * s.sigma * s.sigma;
                          const double d = a + x * x;
                          return (s.v + 1.0) * (a - x * x) / (d * d);
                        },
                        [x](const StudentT& s) {
                          const double n2 = s.nu * s.nu;
                          const double d = n2 + x * x;
                          return 2.0 * s.tau * s.nu * (n2 - x * x) / (d * d);
                        },
                    },
                    f);
}

double weight(const CostFunction& f, double x) {
  return std::visit(overloaded{
                        [x](const L1&) { return x == 0.0 ? 1.0 : 1.0 / std::abs(x); },
                        [](const L2&) { return 2.0; },
                        [x](const Huber& h) {
                          const double a = std::abs(x);
                          return a <= h.k ? 1.0 : h.k / a;
                        },
                        [x](const Tukey& t) {
                          if (std::abs(x) > t.k) return 0.0;
                          const double u = 1.0 - (x / t.k) * (x / t.k);
                          return u * u;
                        },
                        [x](const Cauchy& c) {
                          const double r = x / c.c;
                          return 1.0 / (1.0 + r * r);
                        },
                        [x](const StudentTClassic& s) {
                          return (s.v + 1.0) / (s.v * s.sigma * s.sigma + x * x);
                        },
                        [x](const StudentT& s) {
                          return 2.0 * s.tau * s.nu / (s.nu * s.nu + x * x);
                        },
                    },
                    f);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::map<std::string, double> parse_params(std::string_view name, std::string_view body) {
  std::map<std::string, double> out;
  while (!body.empty()) {
    const auto comma = body.find(',');
    const std::string_view item = trim(body.substr(0, comma));
    body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("cost '" + std::string(name) + "': expected key=value, got '" +
                       std::string(item) + "'");
    }
    const std::string key(trim(item.substr(0, eq)));
    const std::string_view val = trim(item.substr(eq + 1));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || ptr != val.data() + val.size()) {
      throw ParseError("cost '" + std::string(name) + "': bad number '" + std::string(val) + "'");
    }
    out[key] = v;
  }
  return out;
}

double take(std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  params.erase(it);
  return v;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

CostFunction parse_cost(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  const std::string name(text.substr(0, colon));
  auto params = colon == std::string_view::npos ? std::map<std::string, double>{}
                                                : parse_params(name, text.substr(colon + 1));
  CostFunction f;
  if (name == "l1") {
    f = L1{};
  } else if (name == "l2") {
    f = L2{};
  } else if (name == "huber") {
    f = Huber{take(params, "k", Huber{}.k)};
  } else if (name == "tukey") {
    f = Tukey{take(params, "k", Tukey{}.k)};
  } else if (name == "cauchy") {
    f = Cauchy{take(params, "c", Cauchy{}.c)};
  } else if (name == "stc") {
    const double v = take(params, "v", StudentTClassic{}.v);
    f = StudentTClassic{v, take(params, "sigma", StudentTClassic{}.sigma)};
  } else if (name == "stu") {
    const double tau = take(params, "tau", StudentT{}.tau);
    f = StudentT{tau, take(params, "nu", StudentT{}.nu)};
  } else {
    throw ParseError("unknown cost function '" + name + "'");
  }
  if (!params.empty()) {
    throw ParseError("cost '" + name + "': unknown parameter '" + params.begin()->first + "'");
  }
  validate(f);
  return f;
}

std::string to_string(const CostFunction& f) {
  return std::visit(overloaded{
                        [](const L1&) { return std::string("l1"); },
                        [](const L2&) { return std::string("l2"); },
                        [](const Huber& h) { return "huber:k=" + num(h.k); },
                        [](const Tukey& t) { return "tukey:k=" + num(t.k); },
                        [](const Cauchy& c) { return "cauchy:c=" + num(c.c); },
                        [](const StudentTClassic& s) {
                          return "stc:v=" + num(s.v) + ",sigma=" + num(s.sigma);
                        },
                        [](const StudentT& s) {
                          return "stu:tau=" + num(s.tau) + ",nu=" + num(s.nu);
                        },
                    },
                    f);
}

}  // namespace gme
