#include "ngrad/quadrature.hpp"

#include <algorithm>
#include <set>

namespace ngrad::quad {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix, weights are mu0 * (first eigenvector component)^2.
std::pair<Vec, Vec> golub_welsch(const Vec& offdiag, double mu0) {
  const Eigen::Index n = offdiag.size() + 1;
  Mat jacobi = Mat::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  Vec nodes = es.eigenvalues();
  Vec weights(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
  return {std::move(nodes), std::move(weights)};
}

}  // namespace

GaussHermite::GaussHermite(int n) {
  if (n < 1) throw ConfigError("GaussHermite: node count must be >= 1");
  Vec off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  auto [x, w] = golub_welsch(off, 1.0);  // normalized so weights sum to 1
  nodes_ = std::move(x);
  weights_ = std::move(w);
}

std::pair<Vec, Vec> legendre_rule(int n) {
  if (n < 1) throw ConfigError("legendre_rule: node count must be >= 1");
  Vec off(n - 1);
  for (int k = 1; k < n; ++k)
    off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(off, 2.0);
}

GaussianExpectation::GaussianExpectation(int order) : order_(order) {
  if (order < 2) throw ConfigError("GaussianExpectation: order must be >= 2");
  auto [x, w] = legendre_rule(order);
  gl_nodes_ = std::move(x);
  gl_weights_ = std::move(w);
}

std::vector<double> GaussianExpectation::panel_edges(double pos, double width,
                                                     bool split) const {
  constexpr double vmax = 12.0;  // N(0,1) mass beyond is ~1e-32
  const double h = std::clamp(width, 1e-8, 1.0);

  std::set<double> edges{-vmax, vmax};
  if (split && pos > -vmax && pos < vmax) edges.insert(pos);
  for (double step = h; step < 2.0 * vmax + std::abs(pos); step *= 2.0) {
    for (double e : {pos - step, pos + step})
      if (e > -vmax && e < vmax) edges.insert(e);
  }

  // Cap panel length so the Gaussian factor itself stays well resolved.
  constexpr double max_len = 2.0;
  std::vector<double> out;
  auto it = edges.begin();
  double prev = *it++;
  out.push_back(prev);
  for (; it != edges.end(); ++it) {
    const double len = *it - prev;
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_len)));
    for (int k = 1; k <= pieces; ++k) out.push_back(prev + len * k / pieces);
    prev = *it;
  }
  return out;
}

}  // namespace ngrad::quad
