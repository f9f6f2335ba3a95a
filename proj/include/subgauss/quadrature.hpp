#pragma once

#include <functional>
#include <span>

namespace subgauss {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

// Globally adaptive 7/15-point Gauss-Kronrod on [lo, hi]: the panel with the
// largest |K15 - G7| is bisected until the summed estimate drops below
// abs_tol. Throws QuadratureNonConvergence when the subdivision budget runs out.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                                    const QuadratureOptions& options = {});

// Same, but the interval is first cut at every breakpoint strictly inside it so
// that no panel straddles a jump. The tolerance is shared across pieces.
QuadratureResult integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                                     std::span<const double> breakpoints, const QuadratureOptions& options = {});

}  // namespace subgauss
