#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace ednet {

// Parameter conventions follow the common simulation-package syntax:
// EXPO(mean), WEIB(scale, shape), GAMM(scale, shape), LOGN(mean, stddev)
// with the moments of the lognormal itself, and c * BETA(a1, a2).

struct Exponential {
  double mean = 1.0;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct Weibull {
  double scale = 1.0;
  double shape = 1.0;
  friend bool operator==(const Weibull&, const Weibull&) = default;
};

struct Gamma {
  double scale = 1.0;
  double shape = 1.0;
  friend bool operator==(const Gamma&, const Gamma&) = default;
};

struct LogNormal {
  double mean = 1.0;
  double stddev = 1.0;
  friend bool operator==(const LogNormal&, const LogNormal&) = default;
};

struct ScaledBeta {
  double scale = 1.0;
  double shape1 = 1.0;
  double shape2 = 1.0;
  friend bool operator==(const ScaledBeta&, const ScaledBeta&) = default;
};

using DistributionLaw = std::variant<Exponential, Weibull, Gamma, LogNormal, ScaledBeta>;

/// A service-time law in minutes: offset + one draw from `law`.
struct DistributionSpec {
  DistributionLaw law = Exponential{};
  double offset = 0.0;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

/// True when every parameter is finite and strictly positive and offset >= 0.
bool is_valid(const DistributionSpec& spec);

/// Analytic mean of offset + law.
double mean(const DistributionSpec& spec);

/// Parses expressions such as "0.999 + EXPO(197)", "17 + EXPO(210)",
/// "0.999 + 5.86e+03 * BETA(0.113, 2.24)" or "WEIB(205, 0.935)".
/// The multiplication sign may be '*' or the UTF-8 middle dot. Throws ConfigError.
DistributionSpec parse_distribution(std::string_view text);

/// Canonical text form; parse_distribution(format_distribution(d)) == d.
std::string format_distribution(const DistributionSpec& spec);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

}  // namespace ednet
