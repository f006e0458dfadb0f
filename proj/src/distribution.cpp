#include "ednet/distribution.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ednet/model.hpp"

namespace ednet {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

struct LawValidator {
  bool operator()(const Exponential& d) const { return positive(d.mean); }
  bool operator()(const Weibull& d) const { return positive(d.scale) && positive(d.shape); }
  bool operator()(const Gamma& d) const { return positive(d.scale) && positive(d.shape); }
  bool operator()(const LogNormal& d) const { return positive(d.mean) && positive(d.stddev); }
  bool operator()(const ScaledBeta& d) const {
    return positive(d.scale) && positive(d.shape1) && positive(d.shape2);
  }
};

struct LawMean {
  double operator()(const Exponential& d) const { return d.mean; }
  double operator()(const Weibull& d) const { return d.scale * std::tgamma(1.0 + 1.0 / d.shape); }
  double operator()(const Gamma& d) const { return d.scale * d.shape; }
  double operator()(const LogNormal& d) const { return d.mean; }
  double operator()(const ScaledBeta& d) const { return d.scale * d.shape1 / (d.shape1 + d.shape2); }
};

struct LawFormatter {
  std::string operator()(const Exponential& d) const { return "EXPO(" + format_number(d.mean) + ")"; }
  std::string operator()(const Weibull& d) const {
    return "WEIB(" + format_number(d.scale) + ", " + format_number(d.shape) + ")";
  }
  std::string operator()(const Gamma& d) const {
    return "GAMM(" + format_number(d.scale) + ", " + format_number(d.shape) + ")";
  }
  std::string operator()(const LogNormal& d) const {
    return "LOGN(" + format_number(d.mean) + ", " + format_number(d.stddev) + ")";
  }
  std::string operator()(const ScaledBeta& d) const {
    return format_number(d.scale) + " * BETA(" + format_number(d.shape1) + ", " +
           format_number(d.shape2) + ")";
  }
};

// Recursive-descent reader over: term ('+' term)*, where a term is a number,
// a law call, or number '*' BETA(...).
class ExpressionReader {
 public:
  explicit ExpressionReader(std::string_view text) : text_(text) {}

  DistributionSpec read() {
    std::optional<double> offset;
    std::optional<DistributionLaw> law;
    do {
      read_term(offset, law);
    } while (consume('+'));
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing text");
    if (!law) fail("no distribution law");
    DistributionSpec spec{*law, offset.value_or(0.0)};
    if (!is_valid(spec)) fail("parameters out of range");
    return spec;
  }

 private:
  void read_term(std::optional<double>& offset, std::optional<DistributionLaw>& law) {
    skip_space();
    if (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      set_law(law, read_call(1.0, false));
      return;
    }
    const double number = read_number();
    if (consume_multiply()) {
      set_law(law, read_call(number, true));
      return;
    }
    if (offset) fail("more than one constant term");
    offset = number;
  }

  void set_law(std::optional<DistributionLaw>& law, DistributionLaw value) {
    if (law) fail("more than one distribution term");
    law = value;
  }

  DistributionLaw read_call(double factor, bool scaled) {
    skip_space();
    std::string name;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text_[pos_]))));
      ++pos_;
    }
    if (!consume('(')) fail("expected '(' after " + name);
    std::vector<double> args{read_number()};
    while (consume(',')) args.push_back(read_number());
    if (!consume(')')) fail("expected ')'");

    auto expect_args = [&](std::size_t n) {
      if (args.size() != n) fail(name + " expects " + std::to_string(n) + " arguments");
    };
    if (scaled && name != "BETA") fail("only BETA may carry a scale factor");
    if (name == "EXPO") {
      expect_args(1);
      return Exponential{args[0]};
    }
    if (name == "WEIB") {
      expect_args(2);
      return Weibull{args[0], args[1]};
    }
    if (name == "GAMM") {
      expect_args(2);
      return Gamma{args[0], args[1]};
    }
    if (name == "LOGN") {
      expect_args(2);
      return LogNormal{args[0], args[1]};
    }
    if (name == "BETA") {
      expect_args(2);
      return ScaledBeta{factor, args[0], args[1]};
    }
    fail("unknown distribution '" + name + "'");
  }

  double read_number() {
    skip_space();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr == begin) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  bool consume_multiply() {
    skip_space();
    if (consume('*')) return true;
    // U+00B7 MIDDLE DOT.
    if (text_.substr(pos_, 2) == "\xC2\xB7") {
      pos_ += 2;
      return true;
    }
    return false;
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("bad distribution expression '" + std::string(text_) + "': " + why);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_valid(const DistributionSpec& spec) {
  return std::isfinite(spec.offset) && spec.offset >= 0.0 && std::visit(LawValidator{}, spec.law);
}

double mean(const DistributionSpec& spec) { return spec.offset + std::visit(LawMean{}, spec.law); }

DistributionSpec parse_distribution(std::string_view text) { return ExpressionReader(text).read(); }

std::string format_distribution(const DistributionSpec& spec) {
  std::string law = std::visit(LawFormatter{}, spec.law);
  if (spec.offset == 0.0) return law;
  return format_number(spec.offset) + " + " + law;
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace ednet
