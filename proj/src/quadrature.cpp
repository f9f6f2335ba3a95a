#include "subgauss/quadrature.hpp"

#include "subgauss/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

namespace subgauss {
namespace {

constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod(const std::function<double(double)>& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kNodes[static_cast<std::size_t>(i)];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[static_cast<std::size_t>(i)] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(i / 2)] * pair;
  }
  return Panel{lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

QuadratureResult refine(const std::function<double(double)>& f, std::vector<Panel> heap,
                        const QuadratureOptions& options) {
  auto error_sum = [&heap] {
    double e = 0.0;
    for (const Panel& p : heap) e += p.error;
    return e;
  };

  std::make_heap(heap.begin(), heap.end());
  double error = error_sum();
  int subdivisions = 0;
  while (error > options.abs_tol) {
    if (subdivisions >= options.max_subdivisions) {
      std::ostringstream os;
      os << "adaptive quadrature did not reach tolerance " << options.abs_tol << " after " << subdivisions
         << " subdivisions (estimated error " << error << ")";
      throw QuadratureNonConvergence(os.str());
    }
    std::pop_heap(heap.begin(), heap.end());
    const Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    for (const Panel& half : {gauss_kronrod(f, worst.lo, mid), gauss_kronrod(f, mid, worst.hi)}) {
      heap.push_back(half);
      std::push_heap(heap.begin(), heap.end());
    }
    ++subdivisions;
    error = error_sum();
  }

  double value = 0.0;
  for (const Panel& p : heap) value += p.value;
  return QuadratureResult{value, error, static_cast<int>(heap.size())};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                                    const QuadratureOptions& options) {
  return integrate_piecewise(f, lo, hi, {}, options);
}

QuadratureResult integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                                     std::span<const double> breakpoints, const QuadratureOptions& options) {
  if (!(lo < hi)) return {};
  std::vector<double> cuts{lo};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Panel> panels;
  panels.reserve(cuts.size() - 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) panels.push_back(gauss_kronrod(f, cuts[i], cuts[i + 1]));
  return refine(f, std::move(panels), options);
}

}  // namespace subgauss
