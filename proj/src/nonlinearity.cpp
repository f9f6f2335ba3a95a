#include "subgauss/nonlinearity.hpp"

#include "subgauss/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace subgauss {
namespace {

constexpr double kTailCutoff = 14.0;  // Gaussian mass beyond 14 sd is ~1e-44

double gaussian_density(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void check_variance(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    std::ostringstream os;
    os << "smoothing variance must be positive, got " << a;
    throw DomainError(os.str());
  }
}

double parse_number(std::string_view text, std::string_view name) {
  const std::string s(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(value))
    throw UnknownMap("cannot parse parameter of map '" + std::string(name) + "'");
  return value;
}

// Breakpoints mapped into standardised coordinates z = (b - x) / sqrt(a).
std::vector<double> standardised_breakpoints(const BoundedMap& map, double a, double x) {
  std::vector<double> out;
  const double root = std::sqrt(a);
  for (double b : map.breakpoints()) out.push_back((b - x) / root);
  return out;
}

}  // namespace

BoundedMap::BoundedMap(std::string name, Eval eval, double sup_bound, std::vector<double> breakpoints,
                       Smoothed closed_form_mean, Smoothed closed_form_derivative)
    : name_(std::move(name)),
      eval_(std::move(eval)),
      sup_bound_(sup_bound),
      breakpoints_(std::move(breakpoints)),
      mean_(std::move(closed_form_mean)),
      derivative_(std::move(closed_form_derivative)) {
  if (!eval_) throw DomainError("map '" + name_ + "' has no evaluation function");
  if (!(sup_bound_ >= 0.0 && sup_bound_ <= 1.0)) throw BoundViolation("map '" + name_ + "' declares sup bound outside [0, 1]");
}

Eigen::MatrixXd BoundedMap::apply(const Eigen::MatrixXd& x) const {
  return x.unaryExpr([this](double v) { return eval_(v); });
}

BoundedMap sgn_map() {
  return BoundedMap(
      "sgn", [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, 1.0, {0.0},
      [](double a, double x) { return std::erf(x / std::sqrt(2.0 * a)); },
      [](double a, double x) { return std::sqrt(2.0 / (std::numbers::pi * a)) * std::exp(-x * x / (2.0 * a)); });
}

BoundedMap clamp_map() {
  return BoundedMap("clamp", [](double x) { return std::clamp(x, -1.0, 1.0); }, 1.0, {-1.0, 1.0});
}

BoundedMap threshold_map(double level) {
  std::ostringstream name;
  name << "threshold:" << level;
  return BoundedMap(
      name.str(), [level](double x) { return x >= level ? 1.0 : 0.0; }, 1.0, {level},
      [level](double a, double x) { return normal_cdf((x - level) / std::sqrt(a)); },
      [level](double a, double x) {
        const double root = std::sqrt(a);
        return gaussian_density((x - level) / root) / root;
      });
}

BoundedMap cos_map() {
  return BoundedMap(
      "cos", [](double x) { return std::cos(x); }, 1.0, {},
      [](double a, double x) { return std::exp(-0.5 * a) * std::cos(x); },
      [](double a, double x) { return -std::exp(-0.5 * a) * std::sin(x); });
}

BoundedMap constant_map(double value) {
  if (std::abs(value) > 1.0) throw BoundViolation("constant map value exceeds 1 in magnitude");
  std::ostringstream name;
  name << "const:" << value;
  return BoundedMap(
      name.str(), [value](double) { return value; }, std::abs(value), {},
      [value](double, double) { return value; }, [](double, double) { return 0.0; });
}

BoundedMap make_map(std::string_view name) {
  if (name == "sgn") return sgn_map();
  if (name == "clamp") return clamp_map();
  if (name == "cos") return cos_map();
  constexpr std::string_view threshold = "threshold:";
  constexpr std::string_view constant = "const:";
  if (name.starts_with(threshold)) return threshold_map(parse_number(name.substr(threshold.size()), name));
  if (name.starts_with(constant)) return constant_map(parse_number(name.substr(constant.size()), name));
  throw UnknownMap("unknown map '" + std::string(name) + "' (known: sgn, clamp, threshold:<t>, cos, const:<c>)");
}

std::vector<std::string> builtin_map_names() { return {"sgn", "clamp", "threshold:<t>", "cos", "const:<c>"}; }

void validate_bounded_map(const BoundedMap& map) {
  const double limit = std::min(1.0, map.sup_bound());
  auto probe = [&](double x) {
    const double v = map(x);
    if (!(std::abs(v) <= limit)) {
      std::ostringstream os;
      os << "map '" << map.name() << "' has |phi(" << x << ")| = " << std::abs(v) << " > " << limit;
      throw BoundViolation(os.str());
    }
  };
  constexpr int kGrid = 100001;
  for (int i = 0; i < kGrid; ++i) probe(-50.0 + 100.0 * i / (kGrid - 1));
  for (double b : map.breakpoints())
    for (double d : {0.0, 1e-12, 1e-9, 1e-6, 1e-3}) {
      probe(b - d);
      probe(b + d);
    }
}

double lipschitz_bound(double a) {
  check_variance(a);
  return std::sqrt(2.0 / (std::numbers::pi * a));
}

double smoothed_mean(const BoundedMap& map, double a, double x, SmoothingMethod method,
                     const QuadratureOptions& options) {
  check_variance(a);
  if (method == SmoothingMethod::automatic && map.closed_form_mean()) return map.closed_form_mean()(a, x);
  const double root = std::sqrt(a);
  const auto cuts = standardised_breakpoints(map, a, x);
  const auto integrand = [&](double z) { return map(root * z + x) * gaussian_density(z); };
  return integrate_piecewise(integrand, -kTailCutoff, kTailCutoff, cuts, options).value;
}

double smoothed_mean_derivative(const BoundedMap& map, double a, double x, SmoothingMethod method,
                                const QuadratureOptions& options) {
  check_variance(a);
  if (method == SmoothingMethod::automatic && map.closed_form_derivative()) return map.closed_form_derivative()(a, x);
  const double root = std::sqrt(a);
  const auto cuts = standardised_breakpoints(map, a, x);
  const auto integrand = [&](double z) { return z * map(root * z + x) * gaussian_density(z); };
  return integrate_piecewise(integrand, -kTailCutoff, kTailCutoff, cuts, options).value / root;
}

SmoothedMean::SmoothedMean(BoundedMap map, double a) : map_(std::move(map)), a_(a) { check_variance(a_); }

LipschitzCertificate lipschitz_certificate(const BoundedMap& map, double a, SmoothingMethod method) {
  const double bound = lipschitz_bound(a);
  const double half_width = 10.0 * std::sqrt(a);
  LipschitzCertificate cert{0.0, bound, 0.0};
  for (int i = 0; i < kCertificateGridPoints; ++i) {
    const double x = -half_width + 2.0 * half_width * i / (kCertificateGridPoints - 1);
    const double d = std::abs(smoothed_mean_derivative(map, a, x, method));
    if (d > cert.max_abs_derivative) {
      cert.max_abs_derivative = d;
      cert.argmax = x;
    }
  }
  if (cert.max_abs_derivative > bound + kCertificateSlack) {
    std::ostringstream os;
    os << "map '" << map.name() << "': max |mu'| = " << cert.max_abs_derivative << " exceeds sqrt(2/(pi a)) = "
       << bound << " at x = " << cert.argmax;
    throw BoundViolation(os.str());
  }
  return cert;
}

}  // namespace subgauss
