#pragma once

#include "subgauss/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace subgauss {

// A coordinate-wise map phi with sup |phi| <= 1. Discontinuities and kinks
// must be declared in `breakpoints`; quadrature never integrates across them.
class BoundedMap {
 public:
  using Eval = std::function<double(double)>;
  // (a, x) -> E phi(sqrt(a) Z + x), or its x-derivative.
  using Smoothed = std::function<double(double, double)>;

  BoundedMap(std::string name, Eval eval, double sup_bound, std::vector<double> breakpoints,
             Smoothed closed_form_mean = {}, Smoothed closed_form_derivative = {});

  const std::string& name() const noexcept { return name_; }
  double operator()(double x) const { return eval_(x); }
  double sup_bound() const noexcept { return sup_bound_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  bool has_closed_form() const noexcept { return static_cast<bool>(mean_); }
  const Smoothed& closed_form_mean() const noexcept { return mean_; }
  const Smoothed& closed_form_derivative() const noexcept { return derivative_; }

  // Elementwise phi over a matrix.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

 private:
  std::string name_;
  Eval eval_;
  double sup_bound_;
  std::vector<double> breakpoints_;
  Smoothed mean_;
  Smoothed derivative_;
};

BoundedMap sgn_map();
BoundedMap clamp_map();
// Indicator of [level, inf).
BoundedMap threshold_map(double level);
BoundedMap cos_map();
BoundedMap constant_map(double value);

// Registry lookup: "sgn", "clamp", "threshold:<t>", "cos", "const:<c>".
// Throws UnknownMap.
BoundedMap make_map(std::string_view name);
std::vector<std::string> builtin_map_names();

// Probes |phi| on a dense grid over [-50, 50] plus breakpoint neighbourhoods.
// Throws BoundViolation if any probe exceeds the declared bound or 1.
void validate_bounded_map(const BoundedMap& map);

enum class SmoothingMethod { automatic, quadrature };

// sqrt(2 / (pi a)), the Lipschitz constant of every smoothed mean.
double lipschitz_bound(double a);

// E phi(sqrt(a) Z + x). Closed form when the map has one (automatic), else
// breakpoint-split adaptive Gauss-Kronrod against the Gaussian density.
double smoothed_mean(const BoundedMap& map, double a, double x, SmoothingMethod method = SmoothingMethod::automatic,
                     const QuadratureOptions& options = {});

// (1/sqrt(a)) E[Z phi(sqrt(a) Z + x)].
double smoothed_mean_derivative(const BoundedMap& map, double a, double x,
                                SmoothingMethod method = SmoothingMethod::automatic,
                                const QuadratureOptions& options = {});

class SmoothedMean {
 public:
  SmoothedMean(BoundedMap map, double a);

  double value(double x) const { return smoothed_mean(map_, a_, x, method_); }
  double derivative(double x) const { return smoothed_mean_derivative(map_, a_, x, method_); }
  double lipschitz_constant() const { return lipschitz_bound(a_); }
  double a() const noexcept { return a_; }
  const BoundedMap& map() const noexcept { return map_; }
  void set_method(SmoothingMethod method) { method_ = method; }

 private:
  BoundedMap map_;
  double a_;
  SmoothingMethod method_ = SmoothingMethod::automatic;
};

struct LipschitzCertificate {
  double max_abs_derivative;
  double bound;
  double argmax;
};

inline constexpr int kCertificateGridPoints = 2001;
inline constexpr double kCertificateSlack = 1e-9;

// max |mu'| over 2001 uniform points on [-10 sqrt(a), 10 sqrt(a)]. Throws
// BoundViolation when the maximum exceeds sqrt(2/(pi a)) + 1e-9.
LipschitzCertificate lipschitz_certificate(const BoundedMap& map, double a,
                                           SmoothingMethod method = SmoothingMethod::automatic);

}  // namespace subgauss
