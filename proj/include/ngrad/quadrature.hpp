#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ngrad/common.hpp"

namespace ngrad::quad {

inline constexpr int kDefaultOrder = 64;

/// Gauss-Hermite rule in the probabilists' convention: expect(f) ~ E[f(v)]
/// for v ~ N(0,1). Nodes and weights via Golub-Welsch; weights sum to 1.
class GaussHermite {
 public:
  explicit GaussHermite(int n);

  const Vec& nodes() const { return nodes_; }
  const Vec& weights() const { return weights_; }

  template <typename F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes_.size(); ++i)
      acc += weights_[i] * f(nodes_[i]);
    return acc;
  }

 private:
  Vec nodes_, weights_;
};

/// Expectation of g under N(0,1) by composite Gauss-Legendre.
///
/// Plain Gauss-Hermite loses accuracy once the integrand varies on a scale
/// finer than the node spacing (g(tau*v) with large tau). Here the panels
/// refine geometrically from `feature_width` around `feature_pos`, so the
/// result is converged to ~1e-14 for any order >= 16 and widths >= 1e-8.
/// With `split = true` the feature point is a hard panel boundary, which
/// makes step discontinuities there (ReLU derivative) integrate exactly.
class GaussianExpectation {
 public:
  explicit GaussianExpectation(int order = kDefaultOrder);

  int order() const { return order_; }

  template <typename F>
  double expect(F&& g, double feature_pos = 0.0, double feature_width = 1.0,
                bool split = false) const {
    const std::vector<double> edges = panel_edges(feature_pos, feature_width, split);
    constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    double acc = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
      const double mid = 0.5 * (edges[p] + edges[p + 1]);
      const double half = 0.5 * (edges[p + 1] - edges[p]);
      double panel = 0.0;
      for (Eigen::Index i = 0; i < gl_nodes_.size(); ++i) {
        const double v = mid + half * gl_nodes_[i];
        panel += gl_weights_[i] * g(v) * std::exp(-0.5 * v * v);
      }
      acc += half * panel;
    }
    return inv_sqrt_2pi * acc;
  }

 private:
  std::vector<double> panel_edges(double pos, double width, bool split) const;

  int order_;
  Vec gl_nodes_, gl_weights_;  // on [-1, 1], weights sum to 2
};

/// Gauss-Legendre rule on [-1, 1]; weights sum to 2.
std::pair<Vec, Vec> legendre_rule(int n);

}  // namespace ngrad::quad
