// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "onedatum/core/rng.hpp"
#include "onedatum/lens/lens.hpp"

namespace onedatum::lens {

namespace {

// Row-wise conditional probabilities with the bandwidth tuned by binary
// search so every row's entropy matches log(perplexity).
void conditional_probs(const std::vector<double>& d2, int n, double perplexity,
                       std::vector<double>& p) {
  double target = std::log(perplexity);
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, beta_lo = 0.0, beta_hi = 1e12;
    const double* row = d2.data() + static_cast<std::size_t>(i) * n;
    double* prow = p.data() + static_cast<std::size_t>(i) * n;
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0, acc = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) {
          prow[j] = 0.0;
          continue;
        }
        double v = std::exp(-beta * row[j]);
        prow[j] = v;
        sum += v;
        acc += beta * row[j] * v;
      }
      if (sum <= 0.0) {
        beta = (beta_lo + beta) / 2.0;
        continue;
      }
      double entropy = std::log(sum) + acc / sum;
      if (std::fabs(entropy - target) < 1e-5) break;
      if (entropy > target) {
        beta_lo = beta;
        beta = beta_hi > 1e11 ? beta * 2.0 : (beta + beta_hi) / 2.0;
      } else {
        beta_hi = beta;
        beta = (beta + beta_lo) / 2.0;
      }
    }
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += prow[j];
    if (sum > 0.0) {
      for (int j = 0; j < n; ++j) prow[j] /= sum;
    }
  }
}

}  // namespace

std::vector<std::array<double, 2>> embed_2d(const FeatureMatrix& features,
                                            std::uint64_t seed,
                                            const TsneConfig& cfg) {
  const int n = features.rows;
  if (n < 5) throw ConfigError("embed_2d needs at least 5 rows");

  // pairwise squared distances
  std::vector<double> d2(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int c = 0; c < features.cols; ++c) {
        double d = static_cast<double>(features.at(i, c)) - features.at(j, c);
        acc += d * d;
      }
      d2[static_cast<std::size_t>(i) * n + j] = acc;
      d2[static_cast<std::size_t>(j) * n + i] = acc;
    }
  }

  double perplexity = std::min(cfg.perplexity, (n - 1) / 3.0);
  std::vector<double> p(static_cast<std::size_t>(n) * n, 0.0);
  conditional_probs(d2, n, perplexity, p);
  // symmetrize
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double v = (p[static_cast<std::size_t>(i) * n + j] +
                  p[static_cast<std::size_t>(j) * n + i]) /
                 (2.0 * n);
      p[static_cast<std::size_t>(i) * n + j] = v;
      p[static_cast<std::size_t>(j) * n + i] = v;
    }
  }

  rng::Stream rs(seed);
  std::vector<std::array<double, 2>> y(static_cast<std::size_t>(n));
  for (auto& pt : y) {
    pt[0] = rs.normal() * 1e-2;
    pt[1] = rs.normal() * 1e-2;
  }
  std::vector<std::array<double, 2>> vel(static_cast<std::size_t>(n),
                                         {0.0, 0.0});
  std::vector<double> q(static_cast<std::size_t>(n) * n, 0.0);

  for (int iter = 0; iter < cfg.iters; ++iter) {
    double exag = iter < cfg.exaggeration_iters ? cfg.exaggeration : 1.0;
    double momentum = iter < 250 ? 0.5 : 0.8;

    double qsum = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double dx = y[i][0] - y[j][0];
        double dy = y[i][1] - y[j][1];
        double v = 1.0 / (1.0 + dx * dx + dy * dy);
        q[static_cast<std::size_t>(i) * n + j] = v;
        q[static_cast<std::size_t>(j) * n + i] = v;
        qsum += 2.0 * v;
      }
    }
    qsum = std::max(qsum, 1e-12);

    for (int i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double w = q[static_cast<std::size_t>(i) * n + j];
        double coeff =
            (exag * p[static_cast<std::size_t>(i) * n + j] - w / qsum) * w;
        gx += coeff * (y[i][0] - y[j][0]);
        gy += coeff * (y[i][1] - y[j][1]);
      }
      vel[i][0] = momentum * vel[i][0] - cfg.learning_rate * 4.0 * gx;
      vel[i][1] = momentum * vel[i][1] - cfg.learning_rate * 4.0 * gy;
    }
    for (int i = 0; i < n; ++i) {
      y[i][0] += vel[i][0];
      y[i][1] += vel[i][1];
    }
  }
  return y;
}

}  // namespace onedatum::lens
