// SPDX-License-Identifier: Apache-2.0
#include "onedatum/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace onedatum::nn {

namespace {
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;

int conv_out(int in, int k, int stride, int p0, int p1) {
  return (in + p0 + p1 - k) / stride + 1;
}
}  // namespace

// --- Conv2d -----------------------------------------------------------------

Conv2d::Conv2d(int cin, int cout, int kh, int kw, int stride, int pad,
               bool bias)
    : Conv2d(cin, cout, kh, kw, stride, pad, pad, pad, pad, bias) {}

Conv2d::Conv2d(int cin, int cout, int kh, int kw, int stride, int pt, int pb,
               int pl, int pr, bool bias)
    : weight(cout, cin, kh, kw),
      dweight(cout, cin, kh, kw),
      cin_(cin), cout_(cout), kh_(kh), kw_(kw), stride_(stride),
      pt_(pt), pb_(pb), pl_(pl), pr_(pr), has_bias_(bias) {
  if (bias) {
    this->bias = Tensor(cout, 1, 1, 1);
    dbias = Tensor(cout, 1, 1, 1);
  }
}

void Conv2d::init(rng::Stream& rs) {
  // He normal, fan-out mode
  double std = std::sqrt(2.0 / (static_cast<double>(kh_) * kw_ * cout_));
  for (auto& v : weight.data) v = static_cast<float>(rs.normal() * std);
  if (has_bias_) bias.fill(0.0f);
}

Tensor Conv2d::forward(const Tensor& x, bool /*train*/) {
  if (x.c() != cin_) {
    throw RuntimeFailure("conv input channels " + std::to_string(x.c()) +
                         " != " + std::to_string(cin_));
  }
  x_ = x;
  const int oh = conv_out(x.h(), kh_, stride_, pt_, pb_);
  const int ow = conv_out(x.w(), kw_, stride_, pl_, pr_);
  const int K = cin_ * kh_ * kw_;
  const int L = oh * ow;
  Tensor y(x.n(), cout_, oh, ow);
  CMapRow w_m(weight.data.data(), cout_, K);

#pragma omp parallel
  {
    RowMat cols(K, L);
#pragma omp for
    for (int n = 0; n < x.n(); ++n) {
      const float* xp = x.sample(n);
      for (int c = 0; c < cin_; ++c) {
        for (int ky = 0; ky < kh_; ++ky) {
          for (int kx = 0; kx < kw_; ++kx) {
            float* row = cols.data() +
                         static_cast<std::size_t>((c * kh_ + ky) * kw_ + kx) * L;
            for (int oy = 0; oy < oh; ++oy) {
              int iy = oy * stride_ + ky - pt_;
              if (iy < 0 || iy >= x.h()) {
                std::memset(row + oy * ow, 0, sizeof(float) * ow);
                continue;
              }
              const float* src = xp + (static_cast<std::size_t>(c) * x.h() +
                                       iy) * x.w();
              for (int ox = 0; ox < ow; ++ox) {
                int ix = ox * stride_ + kx - pl_;
                row[oy * ow + ox] =
                    (ix >= 0 && ix < x.w()) ? src[ix] : 0.0f;
              }
            }
          }
        }
      }
      MapRow y_m(y.sample(n), cout_, L);
      y_m.noalias() = w_m * cols;
      if (has_bias_) {
        for (int co = 0; co < cout_; ++co) {
          y_m.row(co).array() += bias.data[co];
        }
      }
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const Tensor& x = x_;
  const int oh = dy.h(), ow = dy.w();
  const int K = cin_ * kh_ * kw_;
  const int L = oh * ow;
  Tensor dx(x.n(), x.c(), x.h(), x.w());
  dweight.fill(0.0f);
  if (has_bias_) dbias.fill(0.0f);
  CMapRow w_m(weight.data.data(), cout_, K);

  int nthreads = 1;
#ifdef _OPENMP
  nthreads = omp_get_max_threads();
#endif
  std::vector<RowMat> dw_local(static_cast<std::size_t>(nthreads),
                               RowMat::Zero(cout_, K));
  std::vector<Eigen::VectorXf> db_local(
      static_cast<std::size_t>(nthreads), Eigen::VectorXf::Zero(cout_));

#pragma omp parallel
  {
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    RowMat cols(K, L);
    RowMat dcols(K, L);
#pragma omp for
    for (int n = 0; n < x.n(); ++n) {
      // rebuild im2col for this sample (cheaper than caching for large
      // batches)
      const float* xp = x.sample(n);
      for (int c = 0; c < cin_; ++c) {
        for (int ky = 0; ky < kh_; ++ky) {
          for (int kx = 0; kx < kw_; ++kx) {
            float* row = cols.data() +
                         static_cast<std::size_t>((c * kh_ + ky) * kw_ + kx) * L;
            for (int oy = 0; oy < oh; ++oy) {
              int iy = oy * stride_ + ky - pt_;
              if (iy < 0 || iy >= x.h()) {
                std::memset(row + oy * ow, 0, sizeof(float) * ow);
                continue;
              }
              const float* src = xp + (static_cast<std::size_t>(c) * x.h() +
                                       iy) * x.w();
              for (int ox = 0; ox < ow; ++ox) {
                int ix = ox * stride_ + kx - pl_;
                row[oy * ow + ox] =
                    (ix >= 0 && ix < x.w()) ? src[ix] : 0.0f;
              }
            }
          }
        }
      }
      CMapRow dy_m(dy.sample(n), cout_, L);
      dw_local[tid].noalias() += dy_m * cols.transpose();
      if (has_bias_) db_local[tid] += dy_m.rowwise().sum();

      dcols.noalias() = w_m.transpose() * dy_m;
      // col2im scatter-add
      float* dxp = dx.sample(n);
      for (int c = 0; c < cin_; ++c) {
        for (int ky = 0; ky < kh_; ++ky) {
          for (int kx = 0; kx < kw_; ++kx) {
            const float* row =
                dcols.data() +
                static_cast<std::size_t>((c * kh_ + ky) * kw_ + kx) * L;
            for (int oy = 0; oy < oh; ++oy) {
              int iy = oy * stride_ + ky - pt_;
              if (iy < 0 || iy >= x.h()) continue;
              float* dst = dxp + (static_cast<std::size_t>(c) * x.h() + iy) *
                                     x.w();
              for (int ox = 0; ox < ow; ++ox) {
                int ix = ox * stride_ + kx - pl_;
                if (ix >= 0 && ix < x.w()) dst[ix] += row[oy * ow + ox];
              }
            }
          }
        }
      }
    }
  }
  MapRow dw_m(dweight.data.data(), cout_, K);
  for (const auto& local : dw_local) dw_m += local;
  if (has_bias_) {
    for (const auto& local : db_local) {
      for (int co = 0; co < cout_; ++co) dbias.data[co] += local[co];
    }
  }
  return dx;
}

void Conv2d::collect_params(const std::string& prefix,
                            std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &dweight, true, true});
  if (has_bias_) {
    out.push_back({prefix + ".bias", &bias, &dbias, false, false});
  }
}

// --- Linear -----------------------------------------------------------------

Linear::Linear(int in, int out, bool /*zero_bias_init*/)
    : weight(out, in, 1, 1), bias(out, 1, 1, 1),
      dweight(out, in, 1, 1), dbias(out, 1, 1, 1), in_(in), out_(out) {}

void Linear::init(rng::Stream& rs) {
  double std = std::sqrt(2.0 / static_cast<double>(in_));
  for (auto& v : weight.data) v = static_cast<float>(rs.normal() * std);
  bias.fill(0.0f);  // final-layer bias starts at zero
}

Tensor Linear::forward(const Tensor& x, bool /*train*/) {
  if (static_cast<int>(x.sample_size()) != in_) {
    throw RuntimeFailure("linear expects " + std::to_string(in_) +
                         " features, got " + std::to_string(x.sample_size()));
  }
  x_ = x;
  Tensor y(x.n(), out_, 1, 1);
  CMapRow x_m(x.data.data(), x.n(), in_);
  CMapRow w_m(weight.data.data(), out_, in_);
  MapRow y_m(y.data.data(), x.n(), out_);
  y_m.noalias() = x_m * w_m.transpose();
  for (int i = 0; i < x.n(); ++i) {
    for (int o = 0; o < out_; ++o) y_m(i, o) += bias.data[o];
  }
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  CMapRow dy_m(dy.data.data(), dy.n(), out_);
  CMapRow x_m(x_.data.data(), x_.n(), in_);
  CMapRow w_m(weight.data.data(), out_, in_);

  MapRow dw_m(dweight.data.data(), out_, in_);
  dw_m.noalias() = dy_m.transpose() * x_m;
  Eigen::VectorXf db = dy_m.colwise().sum();
  for (int o = 0; o < out_; ++o) dbias.data[o] = db[o];

  Tensor dx = Tensor::zeros_like(x_);
  MapRow dx_m(dx.data.data(), x_.n(), in_);
  dx_m.noalias() = dy_m * w_m;
  return dx;
}

void Linear::collect_params(const std::string& prefix,
                            std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &dweight, true, true});
  out.push_back({prefix + ".bias", &bias, &dbias, false, false});
}

// --- BatchNorm2d ------------------------------------------------------------

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : gamma(channels, 1, 1, 1), beta(channels, 1, 1, 1),
      dgamma(channels, 1, 1, 1), dbeta(channels, 1, 1, 1),
      running_mean(channels, 1, 1, 1), running_var(channels, 1, 1, 1),
      c_(channels), momentum_(momentum), eps_(eps) {
  gamma.fill(1.0f);
  running_var.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  if (x.c() != c_) throw RuntimeFailure("batchnorm channel mismatch");
  Tensor y = Tensor::zeros_like(x);
  const int hw = x.h() * x.w();
  const std::size_t m = static_cast<std::size_t>(x.n()) * hw;
  last_train_ = train;

  if (train) {
    x_ = x;
    mean_.assign(c_, 0.0f);
    inv_std_.assign(c_, 0.0f);
    for (int c = 0; c < c_; ++c) {
      double sum = 0.0, sq = 0.0;
      for (int n = 0; n < x.n(); ++n) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) {
          sum += p[i];
          sq += static_cast<double>(p[i]) * p[i];
        }
      }
      double mu = sum / static_cast<double>(m);
      double var = sq / static_cast<double>(m) - mu * mu;
      var = std::max(var, 0.0);
      mean_[c] = static_cast<float>(mu);
      inv_std_[c] = static_cast<float>(1.0 / std::sqrt(var + eps_));
      running_mean.data[c] = static_cast<float>(
          (1.0 - momentum_) * running_mean.data[c] + momentum_ * mu);
      double unbiased = m > 1 ? var * static_cast<double>(m) / (m - 1) : var;
      running_var.data[c] = static_cast<float>(
          (1.0 - momentum_) * running_var.data[c] + momentum_ * unbiased);
    }
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < c_; ++c) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
        float* q = y.sample(n) + static_cast<std::size_t>(c) * hw;
        float g = gamma.data[c] * inv_std_[c];
        float b = beta.data[c] - g * mean_[c];
        for (int i = 0; i < hw; ++i) q[i] = g * p[i] + b;
      }
    }
  } else {
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < c_; ++c) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
        float* q = y.sample(n) + static_cast<std::size_t>(c) * hw;
        float inv = 1.0f / std::sqrt(running_var.data[c] +
                                     static_cast<float>(eps_));
        float g = gamma.data[c] * inv;
        float b = beta.data[c] - g * running_mean.data[c];
        for (int i = 0; i < hw; ++i) q[i] = g * p[i] + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  if (!last_train_) {
    throw RuntimeFailure("batchnorm backward requires a train-mode forward");
  }
  const Tensor& x = x_;
  const int hw = x.h() * x.w();
  const double m = static_cast<double>(x.n()) * hw;
  Tensor dx = Tensor::zeros_like(x);

  for (int c = 0; c < c_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const float* xp = x.sample(n) + static_cast<std::size_t>(c) * hw;
      const float* dp = dy.sample(n) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) {
        float xhat = (xp[i] - mean_[c]) * inv_std_[c];
        sum_dy += dp[i];
        sum_dy_xhat += static_cast<double>(dp[i]) * xhat;
      }
    }
    dbeta.data[c] = static_cast<float>(sum_dy);
    dgamma.data[c] = static_cast<float>(sum_dy_xhat);
    float g_inv_m = static_cast<float>(gamma.data[c] * inv_std_[c] / m);
    for (int n = 0; n < x.n(); ++n) {
      const float* xp = x.sample(n) + static_cast<std::size_t>(c) * hw;
      const float* dp = dy.sample(n) + static_cast<std::size_t>(c) * hw;
      float* dxp = dx.sample(n) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) {
        float xhat = (xp[i] - mean_[c]) * inv_std_[c];
        dxp[i] = g_inv_m * (static_cast<float>(m) * dp[i] -
                            static_cast<float>(sum_dy) -
                            xhat * static_cast<float>(sum_dy_xhat));
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect_params(const std::string& prefix,
                                 std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &dgamma, false, false});
  out.push_back({prefix + ".beta", &beta, &dbeta, false, false});
}

void BatchNorm2d::collect_state(const std::string& prefix,
                                std::vector<StateRef>& out) {
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

// --- GroupNorm --------------------------------------------------------------

GroupNorm::GroupNorm(int groups, int channels, double eps)
    : gamma(channels, 1, 1, 1), beta(channels, 1, 1, 1),
      dgamma(channels, 1, 1, 1), dbeta(channels, 1, 1, 1),
      groups_(std::min(groups, channels)), c_(channels), eps_(eps) {
  if (channels % groups_ != 0) {
    throw ConfigError("group count must divide channels");
  }
  gamma.fill(1.0f);
}

Tensor GroupNorm::forward(const Tensor& x, bool /*train*/) {
  if (x.c() != c_) throw RuntimeFailure("groupnorm channel mismatch");
  x_ = x;
  const int cg = c_ / groups_;
  const int hw = x.h() * x.w();
  const std::size_t m = static_cast<std::size_t>(cg) * hw;
  mean_.assign(static_cast<std::size_t>(x.n()) * groups_, 0.0f);
  inv_std_.assign(static_cast<std::size_t>(x.n()) * groups_, 0.0f);
  Tensor y = Tensor::zeros_like(x);
  for (int n = 0; n < x.n(); ++n) {
    for (int g = 0; g < groups_; ++g) {
      double sum = 0.0, sq = 0.0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) {
          sum += p[i];
          sq += static_cast<double>(p[i]) * p[i];
        }
      }
      double mu = sum / static_cast<double>(m);
      double var = std::max(sq / static_cast<double>(m) - mu * mu, 0.0);
      float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
      mean_[static_cast<std::size_t>(n) * groups_ + g] =
          static_cast<float>(mu);
      inv_std_[static_cast<std::size_t>(n) * groups_ + g] = inv;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
        float* q = y.sample(n) + static_cast<std::size_t>(c) * hw;
        float gm = gamma.data[c] * inv;
        float bs = beta.data[c] - gm * static_cast<float>(mu);
        for (int i = 0; i < hw; ++i) q[i] = gm * p[i] + bs;
      }
    }
  }
  return y;
}

Tensor GroupNorm::backward(const Tensor& dy) {
  const Tensor& x = x_;
  const int cg = c_ / groups_;
  const int hw = x.h() * x.w();
  const double m = static_cast<double>(cg) * hw;
  Tensor dx = Tensor::zeros_like(x);
  dgamma.fill(0.0f);
  dbeta.fill(0.0f);

  for (int n = 0; n < x.n(); ++n) {
    for (int g = 0; g < groups_; ++g) {
      float mu = mean_[static_cast<std::size_t>(n) * groups_ + g];
      float inv = inv_std_[static_cast<std::size_t>(n) * groups_ + g];
      double s1 = 0.0, s2 = 0.0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const float* xp = x.sample(n) + static_cast<std::size_t>(c) * hw;
        const float* dp = dy.sample(n) + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) {
          float xhat = (xp[i] - mu) * inv;
          float dxhat = dp[i] * gamma.data[c];
          s1 += dxhat;
          s2 += static_cast<double>(dxhat) * xhat;
          dgamma.data[c] += dp[i] * xhat;
          dbeta.data[c] += dp[i];
        }
      }
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const float* xp = x.sample(n) + static_cast<std::size_t>(c) * hw;
        const float* dp = dy.sample(n) + static_cast<std::size_t>(c) * hw;
        float* dxp = dx.sample(n) + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) {
          float xhat = (xp[i] - mu) * inv;
          float dxhat = dp[i] * gamma.data[c];
          dxp[i] = inv * (dxhat - static_cast<float>(s1 / m) -
                          xhat * static_cast<float>(s2 / m));
        }
      }
    }
  }
  return dx;
}

void GroupNorm::collect_params(const std::string& prefix,
                               std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &dgamma, false, false});
  out.push_back({prefix + ".beta", &beta, &dbeta, false, false});
}

// --- elementwise / pooling ---------------------------------------------------

Tensor ReLU::forward(const Tensor& x, bool /*train*/) {
  shape_ = x.shape;
  mask_.resize(x.numel());
  Tensor y = x;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    bool pos = y.data[i] > 0.0f;
    mask_[i] = pos;
    if (!pos) y.data[i] = 0.0f;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    if (!mask_[i]) dx.data[i] = 0.0f;
  }
  return dx;
}

MaxPool2d::MaxPool2d(int k, int stride) : k_(k), stride_(stride) {}

Tensor MaxPool2d::forward(const Tensor& x, bool /*train*/) {
  in_shape_ = x.shape;
  int oh = x.h() <= k_ ? 1 : (x.h() - k_ + stride_ - 1) / stride_ + 1;
  int ow = x.w() <= k_ ? 1 : (x.w() - k_ + stride_ - 1) / stride_ + 1;
  Tensor y(x.n(), x.c(), oh, ow);
  argmax_.resize(y.numel());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float* p = x.sample(n) + static_cast<std::size_t>(c) * x.h() * x.w();
      float* q = y.sample(n) + static_cast<std::size_t>(c) * oh * ow;
      std::int32_t* am =
          argmax_.data() +
          (static_cast<std::size_t>(n) * x.c() + c) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int y0 = oy * stride_, x0 = ox * stride_;
          int y1 = std::min(y0 + k_, x.h()), x1 = std::min(x0 + k_, x.w());
          float best = -std::numeric_limits<float>::infinity();
          std::int32_t best_i = y0 * x.w() + x0;
          for (int yy = y0; yy < y1; ++yy) {
            for (int xx = x0; xx < x1; ++xx) {
              float v = p[yy * x.w() + xx];
              if (v > best) {
                best = v;
                best_i = yy * x.w() + xx;
              }
            }
          }
          q[oy * ow + ox] = best;
          am[oy * ow + ox] = best_i;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
  Tensor dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  int ohw = dy.h() * dy.w();
  int ihw = in_shape_[2] * in_shape_[3];
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      const float* dp = dy.sample(n) + static_cast<std::size_t>(c) * ohw;
      float* dxp = dx.sample(n) + static_cast<std::size_t>(c) * ihw;
      const std::int32_t* am =
          argmax_.data() + (static_cast<std::size_t>(n) * dy.c() + c) * ohw;
      for (int i = 0; i < ohw; ++i) dxp[am[i]] += dp[i];
    }
  }
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*train*/) {
  in_shape_ = x.shape;
  Tensor y(x.n(), x.c(), 1, 1);
  int hw = x.h() * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
      double sum = 0.0;
      for (int i = 0; i < hw; ++i) sum += p[i];
      y.at(n, c, 0, 0) = static_cast<float>(sum / hw);
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  Tensor dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  int hw = in_shape_[2] * in_shape_[3];
  float inv = 1.0f / static_cast<float>(hw);
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      float g = dy.at(n, c, 0, 0) * inv;
      float* p = dx.sample(n) + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) p[i] = g;
    }
  }
  return dx;
}

Tensor GlobalMaxPool::forward(const Tensor& x, bool /*train*/) {
  in_shape_ = x.shape;
  Tensor y(x.n(), x.c(), 1, 1);
  int hw = x.h() * x.w();
  argmax_.resize(static_cast<std::size_t>(x.n()) * x.c());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
      int best = 0;
      for (int i = 1; i < hw; ++i) {
        if (p[i] > p[best]) best = i;
      }
      argmax_[static_cast<std::size_t>(n) * x.c() + c] = best;
      y.at(n, c, 0, 0) = p[best];
    }
  }
  return y;
}

Tensor GlobalMaxPool::backward(const Tensor& dy) {
  Tensor dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  int hw = in_shape_[2] * in_shape_[3];
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      float* p = dx.sample(n) + static_cast<std::size_t>(c) * hw;
      p[argmax_[static_cast<std::size_t>(n) * dy.c() + c]] =
          dy.at(n, c, 0, 0);
    }
  }
  return dx;
}

Dropout2d::Dropout2d(double p, std::uint64_t seed) : p_(p), rs_(seed) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
}

Tensor Dropout2d::forward(const Tensor& x, bool train) {
  shape_ = x.shape;
  active_ = train && p_ > 0.0;
  if (!active_) return x;
  keep_.resize(static_cast<std::size_t>(x.n()) * x.c());
  Tensor y = x;
  int hw = x.h() * x.w();
  float scale = static_cast<float>(1.0 / (1.0 - p_));
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      bool keep = !rs_.bernoulli(p_);
      keep_[static_cast<std::size_t>(n) * x.c() + c] = keep;
      float* p = y.sample(n) + static_cast<std::size_t>(c) * hw;
      if (keep) {
        for (int i = 0; i < hw; ++i) p[i] *= scale;
      } else {
        std::memset(p, 0, sizeof(float) * hw);
      }
    }
  }
  return y;
}

Tensor Dropout2d::backward(const Tensor& dy) {
  if (!active_) return dy;
  Tensor dx = dy;
  int hw = shape_[2] * shape_[3];
  float scale = static_cast<float>(1.0 / (1.0 - p_));
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      float* p = dx.sample(n) + static_cast<std::size_t>(c) * hw;
      if (keep_[static_cast<std::size_t>(n) * dy.c() + c]) {
        for (int i = 0; i < hw; ++i) p[i] *= scale;
      } else {
        std::memset(p, 0, sizeof(float) * hw);
      }
    }
  }
  return dx;
}

// --- containers ---------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, bool train) {
  Tensor cur = x;
  for (auto& layer : layers_) cur = layer->forward(cur, train);
  return cur;
}

Tensor Sequential::backward(const Tensor& dy) {
  Tensor cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    cur = (*it)->backward(cur);
  }
  return cur;
}

void Sequential::collect_params(const std::string& prefix,
                                std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_params(prefix + "." + std::to_string(i), out);
  }
}

void Sequential::collect_state(const std::string& prefix,
                               std::vector<StateRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_state(prefix + "." + std::to_string(i), out);
  }
}

Tensor Sequential::forward_taps(
    const Tensor& x, std::vector<std::pair<std::string, Tensor>>& taps,
    const std::string& prefix) const {
  Tensor cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    cur = layers_[i]->forward(cur, false);
    if (layers_[i]->is_tap()) {
      taps.emplace_back(prefix + layers_[i]->kind() + "." + std::to_string(i),
                        cur);
    }
  }
  return cur;
}

// --- BasicBlock ---------------------------------------------------------------

BasicBlock::BasicBlock(int cin, int cout, int stride, std::uint64_t init_seed)
    : project_(stride != 1 || cin != cout),
      conv1_(cin, cout, 3, 3, stride, 1, false),
      conv2_(cout, cout, 3, 3, 1, 1, false),
      bn1_(cout), bn2_(cout) {
  rng::Stream rs(init_seed);
  conv1_.init(rs);
  conv2_.init(rs);
  if (project_) {
    short_conv_ = std::make_unique<Conv2d>(cin, cout, 1, 1, stride, 0, false);
    short_bn_ = std::make_unique<BatchNorm2d>(cout);
    short_conv_->init(rs);
  }
}

Tensor BasicBlock::forward(const Tensor& x, bool train) {
  x_ = x;
  Tensor a = relu1_.forward(bn1_.forward(conv1_.forward(x, train), train),
                            train);
  Tensor b = bn2_.forward(conv2_.forward(a, train), train);
  Tensor s = project_
                 ? short_bn_->forward(short_conv_->forward(x, train), train)
                 : x;
  if (!b.same_shape(s)) throw RuntimeFailure("residual shape mismatch");
  sum_ = b;
  for (std::size_t i = 0; i < sum_.data.size(); ++i) sum_.data[i] += s.data[i];
  Tensor y = sum_;
  for (auto& v : y.data) {
    if (v < 0.0f) v = 0.0f;
  }
  return y;
}

Tensor BasicBlock::backward(const Tensor& dy) {
  Tensor dsum = dy;
  for (std::size_t i = 0; i < dsum.data.size(); ++i) {
    if (sum_.data[i] <= 0.0f) dsum.data[i] = 0.0f;
  }
  Tensor dmain =
      conv1_.backward(bn1_.backward(relu1_.backward(
          conv2_.backward(bn2_.backward(dsum)))));
  Tensor dshort = project_
                      ? short_conv_->backward(short_bn_->backward(dsum))
                      : dsum;
  for (std::size_t i = 0; i < dmain.data.size(); ++i) {
    dmain.data[i] += dshort.data[i];
  }
  return dmain;
}

void BasicBlock::collect_params(const std::string& prefix,
                                std::vector<ParamRef>& out) {
  conv1_.collect_params(prefix + ".conv1", out);
  bn1_.collect_params(prefix + ".bn1", out);
  conv2_.collect_params(prefix + ".conv2", out);
  bn2_.collect_params(prefix + ".bn2", out);
  if (project_) {
    short_conv_->collect_params(prefix + ".short_conv", out);
    short_bn_->collect_params(prefix + ".short_bn", out);
  }
}

void BasicBlock::collect_state(const std::string& prefix,
                               std::vector<StateRef>& out) {
  bn1_.collect_state(prefix + ".bn1", out);
  bn2_.collect_state(prefix + ".bn2", out);
  if (project_) short_bn_->collect_state(prefix + ".short_bn", out);
}

// --- PreActBlock ----------------------------------------------------------------

PreActBlock::PreActBlock(int cin, int cout, int stride,
                         std::uint64_t init_seed)
    : equal_in_out_(stride == 1 && cin == cout),
      bn1_(cin), bn2_(cout),
      conv1_(cin, cout, 3, 3, stride, 1, false),
      conv2_(cout, cout, 3, 3, 1, 1, false) {
  rng::Stream rs(init_seed);
  conv1_.init(rs);
  conv2_.init(rs);
  if (!equal_in_out_) {
    short_conv_ = std::make_unique<Conv2d>(cin, cout, 1, 1, stride, 0, false);
    short_conv_->init(rs);
  }
}

Tensor PreActBlock::forward(const Tensor& x, bool train) {
  x_ = x;
  Tensor a = relu1_.forward(bn1_.forward(x, train), train);
  Tensor out = conv2_.forward(
      relu2_.forward(bn2_.forward(conv1_.forward(a, train), train), train),
      train);
  Tensor s = equal_in_out_ ? x : short_conv_->forward(a, train);
  if (!out.same_shape(s)) throw RuntimeFailure("residual shape mismatch");
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += s.data[i];
  return out;
}

Tensor PreActBlock::backward(const Tensor& dy) {
  Tensor da = conv1_.backward(
      bn2_.backward(relu2_.backward(conv2_.backward(dy))));
  if (!equal_in_out_) {
    Tensor ds = short_conv_->backward(dy);
    for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += ds.data[i];
  }
  Tensor dx = bn1_.backward(relu1_.backward(da));
  if (equal_in_out_) {
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dy.data[i];
  }
  return dx;
}

void PreActBlock::collect_params(const std::string& prefix,
                                 std::vector<ParamRef>& out) {
  bn1_.collect_params(prefix + ".bn1", out);
  conv1_.collect_params(prefix + ".conv1", out);
  bn2_.collect_params(prefix + ".bn2", out);
  conv2_.collect_params(prefix + ".conv2", out);
  if (!equal_in_out_) short_conv_->collect_params(prefix + ".short_conv", out);
}

void PreActBlock::collect_state(const std::string& prefix,
                                std::vector<StateRef>& out) {
  bn1_.collect_state(prefix + ".bn1", out);
  bn2_.collect_state(prefix + ".bn2", out);
}

// --- AudioBlock ----------------------------------------------------------------

AudioBlock::AudioBlock(int cin, int cout, std::uint64_t init_seed)
    : conv_time_(cin, cout, 4, 1, 1, 1, 2, 0, 0, true),
      conv_freq_(cin, cout, 1, 4, 1, 0, 0, 1, 2, true),
      fuse_(2 * cout, cout, 1, 1, 1, 0, true),
      gn_(8, cout), cout_(cout) {
  rng::Stream rs(init_seed);
  conv_time_.init(rs);
  conv_freq_.init(rs);
  fuse_.init(rs);
}

Tensor AudioBlock::forward(const Tensor& x, bool train) {
  Tensor t = conv_time_.forward(x, train);
  Tensor f = conv_freq_.forward(x, train);
  Tensor cat(x.n(), 2 * cout_, t.h(), t.w());
  std::size_t half = static_cast<std::size_t>(cout_) * t.h() * t.w();
  for (int n = 0; n < x.n(); ++n) {
    std::memcpy(cat.sample(n), t.sample(n), half * sizeof(float));
    std::memcpy(cat.sample(n) + half, f.sample(n), half * sizeof(float));
  }
  return relu_.forward(gn_.forward(fuse_.forward(cat, train), train), train);
}

Tensor AudioBlock::backward(const Tensor& dy) {
  Tensor dcat = fuse_.backward(gn_.backward(relu_.backward(dy)));
  Tensor dt(dcat.n(), cout_, dcat.h(), dcat.w());
  Tensor df(dcat.n(), cout_, dcat.h(), dcat.w());
  std::size_t half = static_cast<std::size_t>(cout_) * dcat.h() * dcat.w();
  for (int n = 0; n < dcat.n(); ++n) {
    std::memcpy(dt.sample(n), dcat.sample(n), half * sizeof(float));
    std::memcpy(df.sample(n), dcat.sample(n) + half, half * sizeof(float));
  }
  Tensor dx = conv_time_.backward(dt);
  Tensor dx2 = conv_freq_.backward(df);
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dx2.data[i];
  return dx;
}

void AudioBlock::collect_params(const std::string& prefix,
                                std::vector<ParamRef>& out) {
  conv_time_.collect_params(prefix + ".conv_time", out);
  conv_freq_.collect_params(prefix + ".conv_freq", out);
  fuse_.collect_params(prefix + ".fuse", out);
  gn_.collect_params(prefix + ".gn", out);
}

}  // namespace onedatum::nn
