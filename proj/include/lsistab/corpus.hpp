#pragma once

// Seeded random mixtures used as a shared test corpus.

#include <cmath>
#include <cstdint>
#include <vector>

#include "lsistab/gaussmix.hpp"
#include "lsistab/linalg.hpp"
#include "lsistab/rng.hpp"

namespace lsistab {

struct CorpusOptions {
  int count = 200;
  Index min_dim = 1, max_dim = 3;
  int min_components = 1, max_components = 4;
  double min_eigenvalue = 0.1, max_eigenvalue = 10.0;
  double mean_radius = 5.0;  // means uniform in [-r, r]^n
  std::uint64_t seed = kDefaultSeed;
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of R's diagonal moved into Q.
inline MatrixXd random_rotation(Index n, Rng& rng) {
  MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

/// Member i depends only on (seed, i). Eigenvalues are log-uniform.
inline GaussianMixture corpus_member(const CorpusOptions& o, int i) {
  Rng rng(derive_seed(o.seed, 0xC0), static_cast<std::uint64_t>(i));
  auto pick = [&](auto lo, auto hi) { return lo + static_cast<decltype(lo)>(rng.uniform() * static_cast<double>(hi - lo + 1)); };
  const Index n = std::min(pick(o.min_dim, o.max_dim), o.max_dim);
  const int k = std::min(pick(o.min_components, o.max_components), o.max_components);
  const double llo = std::log(o.min_eigenvalue), lhi = std::log(o.max_eigenvalue);
  std::vector<ComponentSpec> specs;
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    ComponentSpec c;
    c.weight = 0.1 + 0.9 * rng.uniform();
    total += c.weight;
    c.mean.resize(n);
    for (Index d = 0; d < n; ++d) c.mean[d] = o.mean_radius * (2.0 * rng.uniform() - 1.0);
    VectorXd lam(n);
    for (Index d = 0; d < n; ++d) lam[d] = std::exp(llo + (lhi - llo) * rng.uniform());
    const MatrixXd u = random_rotation(n, rng);
    c.cov = symmetrize(u * lam.asDiagonal() * u.transpose());
    specs.push_back(std::move(c));
  }
  for (auto& c : specs) c.weight /= total;
  return GaussianMixture::normalized(n, specs);
}

inline std::vector<GaussianMixture> random_corpus(const CorpusOptions& o = {}) {
  std::vector<GaussianMixture> out;
  out.reserve(static_cast<std::size_t>(o.count));
  for (int i = 0; i < o.count; ++i) out.push_back(corpus_member(o, i));
  return out;
}

}  // namespace lsistab
