// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Core>
#include <cmath>

#include <nlohmann/json.hpp>

#include "onedatum/lens/lens.hpp"

using json = nlohmann::json;

namespace onedatum::lens {

double linear_cka(const FeatureMatrix& x, const FeatureMatrix& y) {
  if (x.rows != y.rows) {
    throw ConfigError("linear_cka: row counts differ (" +
                      std::to_string(x.rows) + " vs " +
                      std::to_string(y.rows) + ")");
  }
  if (x.rows < 2) throw ConfigError("linear_cka needs at least 2 rows");

  using Mat = Eigen::MatrixXd;
  Mat X(x.rows, x.cols), Y(y.rows, y.cols);
  for (int r = 0; r < x.rows; ++r) {
    for (int c = 0; c < x.cols; ++c) X(r, c) = x.at(r, c);
  }
  for (int r = 0; r < y.rows; ++r) {
    for (int c = 0; c < y.cols; ++c) Y(r, c) = y.at(r, c);
  }
  X.rowwise() -= X.colwise().mean();
  Y.rowwise() -= Y.colwise().mean();

  double cross = (Y.transpose() * X).squaredNorm();
  double nx = (X.transpose() * X).norm();
  double ny = (Y.transpose() * Y).norm();
  if (nx <= 0.0 || ny <= 0.0) return 0.0;
  return cross / (nx * ny);
}

std::vector<FeatureMatrix> collect_features(nn::Model& model,
                                            const nn::Tensor& probe,
                                            int batch_size) {
  std::vector<FeatureMatrix> features;
  const int N = probe.n();
  for (int at = 0; at < N; at += batch_size) {
    int take = std::min(batch_size, N - at);
    nn::Tensor batch(take, probe.c(), probe.h(), probe.w());
    std::copy(probe.sample(at), probe.sample(at + take - 1) +
                                    probe.sample_size(),
              batch.data.begin());
    std::vector<std::pair<std::string, nn::Tensor>> taps;
    model.forward_taps(batch, taps);
    if (features.empty()) {
      for (const auto& [name, t] : taps) {
        FeatureMatrix fm(N, t.c());
        fm.layer_tag = name;
        features.push_back(std::move(fm));
      }
    }
    if (taps.size() != features.size()) {
      throw RuntimeFailure("tap count changed between batches");
    }
    for (std::size_t ti = 0; ti < taps.size(); ++ti) {
      const nn::Tensor& t = taps[ti].second;
      int hw = t.h() * t.w();
      for (int n = 0; n < take; ++n) {
        for (int c = 0; c < t.c(); ++c) {
          const float* p = t.sample(n) + static_cast<std::size_t>(c) * hw;
          double mean = 0.0;
          for (int i = 0; i < hw; ++i) mean += p[i];
          features[ti].at(at + n, c) = static_cast<float>(mean / hw);
        }
      }
    }
  }
  return features;
}

CkaHeatmap cka_heatmap(nn::Model& model_a, nn::Model& model_b,
                       const nn::Tensor& probe) {
  auto fa = collect_features(model_a, probe);
  auto fb = collect_features(model_b, probe);
  CkaHeatmap out;
  for (const auto& f : fa) out.taps_a.push_back(f.layer_tag);
  for (const auto& f : fb) out.taps_b.push_back(f.layer_tag);
  out.values.resize(fa.size() * fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    for (std::size_t j = 0; j < fb.size(); ++j) {
      out.values[i * fb.size() + j] = linear_cka(fa[i], fb[j]);
    }
  }
  return out;
}

std::string CkaHeatmap::to_json() const {
  json j;
  j["taps_a"] = taps_a;
  j["taps_b"] = taps_b;
  json rows = json::array();
  for (std::size_t i = 0; i < taps_a.size(); ++i) {
    json row = json::array();
    for (std::size_t jj = 0; jj < taps_b.size(); ++jj) {
      row.push_back(at(i, jj));
    }
    rows.push_back(row);
  }
  j["cka"] = rows;
  return j.dump(2);
}

Histogram Histogram::regular(double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("invalid histogram spec");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    h.edges[i] = lo + (hi - lo) * i / bins;
  }
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  return h;
}

void Histogram::add(double v) {
  int bins = static_cast<int>(counts.size());
  double lo = edges.front(), hi = edges.back();
  int idx = static_cast<int>((v - lo) / (hi - lo) * bins);
  idx = std::max(0, std::min(bins - 1, idx));
  counts[idx]++;
  total++;
}

std::string Histogram::to_json() const {
  json j{{"edges", edges}, {"counts", counts}, {"total", total}};
  return j.dump();
}

Histogram confidence_histogram(nn::Model& model, const nn::Tensor& inputs,
                               double tau, int bins, int batch_size) {
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  Histogram h = Histogram::regular(0.0, 1.0, bins);
  const int N = inputs.n();
  for (int at = 0; at < N; at += batch_size) {
    int take = std::min(batch_size, N - at);
    nn::Tensor batch(take, inputs.c(), inputs.h(), inputs.w());
    std::copy(inputs.sample(at),
              inputs.sample(at + take - 1) + inputs.sample_size(),
              batch.data.begin());
    nn::Tensor logits = model.forward(batch, false);
    for (int n = 0; n < take; ++n) {
      std::span<const float> l(logits.sample(n), logits.c());
      auto p = distillery::soften(l, tau);
      h.add(*std::max_element(p.begin(), p.end()));
    }
  }
  return h;
}

PerClassReport per_class_report(
    const std::vector<distillery::EpochMetrics>& history, nn::Model& teacher,
    const patchforge::PatchDataset& data, int batch_size) {
  if (history.empty()) {
    throw ConfigError("per-class report needs a metrics history");
  }
  for (const auto& m : history) {
    if (m.per_class.empty()) {
      throw ConfigError(
          "metrics lack per-class accuracies; re-run training with "
          "per-class tracking enabled (--per-class)");
    }
  }
  PerClassReport out;
  std::size_t classes = history.front().per_class.size();
  out.accuracy_curves.assign(classes, {});
  for (const auto& m : history) {
    for (std::size_t c = 0; c < classes; ++c) {
      out.accuracy_curves[c].push_back(m.per_class[c]);
    }
  }

  out.teacher_top1_freq.assign(classes, 0);
  const int P = data.patch_size;
  for (std::int64_t at = 0; at < data.count(); at += batch_size) {
    std::int64_t take =
        std::min<std::int64_t>(batch_size, data.count() - at);
    nn::Tensor batch(static_cast<int>(take), 3, P, P);
    for (std::int64_t i = 0; i < take; ++i) {
      distillery::record_to_input(data.record(at + i), P, P, 3,
                                  batch.sample(static_cast<int>(i)));
    }
    nn::Tensor logits = teacher.forward(batch, false);
    for (std::int64_t i = 0; i < take; ++i) {
      const float* l = logits.sample(static_cast<int>(i));
      int arg = 0;
      for (int c = 1; c < logits.c(); ++c) {
        if (l[c] > l[arg]) arg = c;
      }
      if (arg < static_cast<int>(classes)) out.teacher_top1_freq[arg]++;
    }
  }
  return out;
}

std::string PerClassReport::to_json() const {
  json j;
  j["teacher_top1_freq"] = teacher_top1_freq;
  j["accuracy_curves"] = accuracy_curves;
  return j.dump(2);
}

}  // namespace onedatum::lens
