// Copyright 2026 The ordhash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ordhash/lossgrad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "ordhash/error.hpp"

namespace ordhash {
namespace {

void CheckRepresentations(const RealMat& h_i, const RealMat& h_j) {
  if (h_i.rows() != h_j.rows() || h_i.cols() != h_j.cols()) {
    Fail(ErrorCode::kDimensionMismatch, "agreement: representations differ in shape");
  }
}

HeadForward Forward(const HashHeadParams& params, const SampleRef& s) {
  if (s.z == nullptr || s.v == nullptr || s.pi == nullptr) {
    Fail(ErrorCode::kInvalidArgument, "sample reference has null members");
  }
  return OrdinalRepresentation(params, *s.z, *s.v, *s.pi);
}

double Agreement(const RealVec& a, const RealVec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Pushes dL/dd (for one endpoint of one code position) through the fused
// score into both branches.
void Backprop(const BlockForward& f, const RealVec& dd, const SampleRef& s, HeadBlock& g) {
  const std::size_t K = dd.size();
  const std::size_t n = f.xi.cols();
  const FeatureMap& z = *s.z;
  const RealVec& v = *s.v;
  const std::vector<double>& pi = s.pi->pi;
  for (std::size_t k = 0; k < K; ++k) {
    // Global branch: d_k = l_k * (w_gk . v + b_gk).
    const double dg = dd[k] * f.l[k];
    g.bg[k] += dg;
    for (std::size_t m = 0; m < v.size(); ++m) g.Wg(m, k) += dg * v[m];

    // Local branch: dl_k/domega^k_loc = xi^k_loc (pi_loc - l_k).
    const double dl = dd[k] * f.g[k];
    double db = 0.0;
    for (std::size_t loc = 0; loc < n; ++loc) {
      const double e = dl * f.xi(k, loc) * (pi[loc] - f.l[k]);
      db += e;
      for (std::size_t m = 0; m < z.channels(); ++m) g.Ws(m, k) += e * z.at(m, loc);
    }
    g.bs[k] += db;
  }
}

// Visits the four parameter groups of every block: 0=Ws, 1=bs, 2=Wg, 3=bg.
template <typename Blocks, typename Fn>
void ForEachGroup(Blocks& blocks, Fn&& fn) {
  for (auto& b : blocks) {
    fn(0, b.Ws.data());
    fn(1, std::span(b.bs));
    fn(2, b.Wg.data());
    fn(3, std::span(b.bg));
  }
}

// Extended-precision batch loss written straight from the definitions, used
// only by the finite-difference oracle. It shares no code with the forward
// pass in hashhead.cpp.
void ReferenceRepresentationRow(const HeadBlock& b, const SampleRef& s,
                                       std::vector<long double>& h) {
  const FeatureMap& z = *s.z;
  const std::size_t K = b.Ws.cols();
  const std::size_t n = z.locations();
  std::vector<long double> d(K);
  std::vector<long double> omega(n);
  for (std::size_t k = 0; k < K; ++k) {
    long double mx = -std::numeric_limits<long double>::infinity();
    for (std::size_t loc = 0; loc < n; ++loc) {
      long double w = b.bs[k];
      for (std::size_t m = 0; m < z.channels(); ++m) {
        w += static_cast<long double>(b.Ws(m, k)) * z.at(m, loc);
      }
      omega[loc] = w;
      mx = std::max(mx, w);
    }
    long double norm = 0.0L;
    for (std::size_t loc = 0; loc < n; ++loc) norm += std::exp(omega[loc] - mx);
    long double l = 0.0L;
    for (std::size_t loc = 0; loc < n; ++loc) {
      l += static_cast<long double>(s.pi->pi[loc]) * std::exp(omega[loc] - mx) / norm;
    }
    long double g = b.bg[k];
    for (std::size_t m = 0; m < s.v->size(); ++m) {
      g += static_cast<long double>(b.Wg(m, k)) * (*s.v)[m];
    }
    d[k] = l * g;
  }
  const long double mx = *std::max_element(d.begin(), d.end());
  long double norm = 0.0L;
  h.assign(K, 0.0L);
  for (std::size_t k = 0; k < K; ++k) {
    h[k] = std::exp(d[k] - mx);
    norm += h[k];
  }
  for (auto& x : h) x /= norm;
}

long double ReferenceBatchLoss(const HashHeadParams& params, std::span<const PairExample> batch) {
  long double total = 0.0L;
  std::vector<long double> hi;
  std::vector<long double> hj;
  for (const auto& pair : batch) {
    long double eps = 0.0L;
    for (const auto& b : params.blocks) {
      ReferenceRepresentationRow(b, pair.a, hi);
      ReferenceRepresentationRow(b, pair.b, hj);
      for (std::size_t k = 0; k < hi.size(); ++k) eps += hi[k] * hj[k];
    }
    eps /= static_cast<long double>(params.R());
    const long double diff = eps - static_cast<long double>(pair.s);
    total += 0.5L * diff * diff;
  }
  return total / static_cast<long double>(batch.size());
}

}  // namespace

double PairAgreement(const RealMat& h_i, const RealMat& h_j, std::size_t r) {
  CheckRepresentations(h_i, h_j);
  if (r >= h_i.rows()) Fail(ErrorCode::kInvalidArgument, "agreement: code position out of range");
  double s = 0.0;
  for (std::size_t k = 0; k < h_i.cols(); ++k) s += h_i(r, k) * h_j(r, k);
  return s;
}

double SequenceAgreement(const RealMat& h_i, const RealMat& h_j) {
  CheckRepresentations(h_i, h_j);
  if (h_i.rows() == 0) Fail(ErrorCode::kInvalidArgument, "agreement: empty representation");
  double s = 0.0;
  for (std::size_t r = 0; r < h_i.rows(); ++r) s += PairAgreement(h_i, h_j, r);
  return s / static_cast<double>(h_i.rows());
}

double PairLoss(double agreement, int similar) noexcept {
  const double diff = agreement - static_cast<double>(similar);
  return 0.5 * diff * diff;
}

double BatchLoss(std::span<const double> pair_losses) {
  if (pair_losses.empty()) Fail(ErrorCode::kInvalidArgument, "batch loss: empty batch");
  return std::accumulate(pair_losses.begin(), pair_losses.end(), 0.0) /
         static_cast<double>(pair_losses.size());
}

double HeadGradients::Norm() const {
  double s = 0.0;
  for (const auto& b : blocks) {
    for (double x : b.Ws.data()) s += x * x;
    for (double x : b.bs) s += x * x;
    for (double x : b.Wg.data()) s += x * x;
    for (double x : b.bg) s += x * x;
  }
  return std::sqrt(s);
}

HeadGradients ZeroGradients(const HashHeadParams& params) {
  HeadGradients g;
  g.blocks.assign(params.R(), HeadBlock{RealMat(params.M, params.K), RealVec(params.K, 0.0),
                                        RealMat(params.M, params.K), RealVec(params.K, 0.0)});
  return g;
}

double BatchLossValue(const HashHeadParams& params, std::span<const PairExample> batch) {
  std::vector<double> losses;
  losses.reserve(batch.size());
  for (const auto& pair : batch) {
    const RealMat hi = Forward(params, pair.a).Representation();
    const RealMat hj = Forward(params, pair.b).Representation();
    losses.push_back(PairLoss(SequenceAgreement(hi, hj), pair.s));
  }
  return BatchLoss(losses);
}

LossAndGradients AnalyticGradients(const HashHeadParams& params,
                                   std::span<const PairExample> batch) {
  if (batch.empty()) Fail(ErrorCode::kInvalidArgument, "gradients: empty batch");
  LossAndGradients out;
  out.grads = ZeroGradients(params);
  const std::size_t R = params.R();
  const std::size_t K = params.K;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double inv_r = 1.0 / static_cast<double>(R);

  double loss_sum = 0.0;
  RealVec dd_i(K);
  RealVec dd_j(K);
  for (const auto& pair : batch) {
    const HeadForward fi = Forward(params, pair.a);
    const HeadForward fj = Forward(params, pair.b);
    std::vector<double> phi(R);
    double eps = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      phi[r] = Agreement(fi.blocks[r].h, fj.blocks[r].h);
      eps += phi[r];
    }
    eps *= inv_r;
    loss_sum += PairLoss(eps, pair.s);

    const double coef = (eps - static_cast<double>(pair.s)) * inv_r * inv_n;
    if (coef == 0.0) continue;
    for (std::size_t r = 0; r < R; ++r) {
      const RealVec& hi = fi.blocks[r].h;
      const RealVec& hj = fj.blocks[r].h;
      // Softmax Jacobian contracted with the partner's row.
      for (std::size_t k = 0; k < K; ++k) {
        dd_i[k] = coef * hi[k] * (hj[k] - phi[r]);
        dd_j[k] = coef * hj[k] * (hi[k] - phi[r]);
      }
      Backprop(fi.blocks[r], dd_i, pair.a, out.grads.blocks[r]);
      Backprop(fj.blocks[r], dd_j, pair.b, out.grads.blocks[r]);
    }
  }
  out.loss = loss_sum * inv_n;
  return out;
}

std::vector<double> CentralDifference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> x, double step) {
  if (!(step > 0.0)) Fail(ErrorCode::kInvalidArgument, "finite difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

HeadGradients FiniteDifferenceGradients(const HashHeadParams& params,
                                        std::span<const PairExample> batch, double step) {
  if (!(step > 0.0)) Fail(ErrorCode::kInvalidArgument, "finite difference step must be positive");
  if (batch.empty()) Fail(ErrorCode::kInvalidArgument, "gradients: empty batch");
  for (const auto& pair : batch) {
    for (const SampleRef* s : {&pair.a, &pair.b}) {
      if (s->z == nullptr || s->v == nullptr || s->pi == nullptr) {
        Fail(ErrorCode::kInvalidArgument, "sample reference has null members");
      }
      // Shape checks come from the regular forward pass.
      (void)OrdinalRepresentation(params, *s->z, *s->v, *s->pi);
    }
  }
  HashHeadParams probe = params;
  HeadGradients out = ZeroGradients(params);

  std::vector<std::span<double>> targets;
  ForEachGroup(out.blocks, [&](int, std::span<double> s) { targets.push_back(s); });
  std::size_t t = 0;
  ForEachGroup(probe.blocks, [&](int, std::span<double> values) {
    std::span<double> dst = targets[t++];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + step;
      const long double up = ReferenceBatchLoss(probe, batch);
      values[i] = orig - step;
      const long double down = ReferenceBatchLoss(probe, batch);
      values[i] = orig;
      dst[i] = static_cast<double>((up - down) / (2.0L * static_cast<long double>(step)));
    }
  });
  return out;
}

double BlockErrors::Max() const noexcept { return std::max({Ws, bs, Wg, bg}); }

BlockErrors MaxRelativeError(const HeadGradients& analytic, const HeadGradients& numeric) {
  if (analytic.blocks.size() != numeric.blocks.size()) {
    Fail(ErrorCode::kDimensionMismatch, "gradient sets differ in block count");
  }
  std::vector<std::pair<int, std::span<const double>>> a;
  std::vector<std::span<const double>> f;
  ForEachGroup(analytic.blocks,
               [&](int group, std::span<const double> s) { a.emplace_back(group, s); });
  ForEachGroup(numeric.blocks, [&](int, std::span<const double> s) { f.push_back(s); });

  double worst[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t g = 0; g < a.size(); ++g) {
    const auto& [group, av] = a[g];
    const auto& fv = f[g];
    if (av.size() != fv.size()) Fail(ErrorCode::kDimensionMismatch, "gradient shapes differ");
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double denom = std::max({std::abs(av[i]), std::abs(fv[i]), 1e-8});
      worst[group] = std::max(worst[group], std::abs(av[i] - fv[i]) / denom);
    }
  }
  return {worst[0], worst[1], worst[2], worst[3]};
}

std::vector<GradCheckRow> RunGradCheck(const GradCheckConfig& config) {
  if (config.k_min < 2 || config.k_max < config.k_min || config.r_min < 1 ||
      config.r_max < config.r_min || config.draws == 0 || config.pairs == 0 || config.C < 2 ||
      config.M == 0 || config.X == 0 || config.Y == 0) {
    Fail(ErrorCode::kInvalidArgument, "gradcheck: invalid configuration");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n_records = 2 * config.pairs;

  std::vector<GradCheckRow> rows;
  for (std::size_t K = config.k_min; K <= config.k_max; ++K) {
    for (std::size_t R = config.r_min; R <= config.r_max; ++R) {
      GradCheckRow row{K, R, {}};
      for (std::size_t draw = 0; draw < config.draws; ++draw) {
        std::vector<FeatureMap> zs;
        std::vector<RealVec> vs;
        for (std::size_t i = 0; i < n_records; ++i) {
          FeatureMap z(config.M, config.X, config.Y);
          for (double& x : z.data()) x = normal(rng);
          RealVec v(config.M);
          for (double& x : v) x = normal(rng);
          zs.push_back(std::move(z));
          vs.push_back(std::move(v));
        }
        const AttentionModel attn = InitClassifier(config.M, config.C, rng());
        std::vector<AttentionMap> pis;
        for (const auto& z : zs) pis.push_back(ComputeAttentionMap(attn, z));

        HashHeadParams params = InitHeadParams(config.M, K, R, rng());
        for (auto& b : params.blocks) {
          for (double& x : b.bs) x = 0.5 * normal(rng);
          for (double& x : b.bg) x = 0.5 * normal(rng);
        }

        std::vector<PairExample> batch;
        for (std::size_t p = 0; p < config.pairs; ++p) {
          const std::size_t i = 2 * p;
          const std::size_t j = 2 * p + 1;
          batch.push_back({{&zs[i], &vs[i], &pis[i]},
                           {&zs[j], &vs[j], &pis[j]},
                           static_cast<int>(rng() & 1U)});
        }

        const auto analytic = AnalyticGradients(params, batch);
        const auto numeric = FiniteDifferenceGradients(params, batch, config.step);
        const BlockErrors e = MaxRelativeError(analytic.grads, numeric);
        row.errors.Ws = std::max(row.errors.Ws, e.Ws);
        row.errors.bs = std::max(row.errors.bs, e.bs);
        row.errors.Wg = std::max(row.errors.Wg, e.Wg);
        row.errors.bg = std::max(row.errors.bg, e.bg);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string GradCheckCsv(const std::vector<GradCheckRow>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << std::scientific;
  out << "K,R,block,max_rel_err\n";
  for (const auto& row : rows) {
    out << row.K << ',' << row.R << ",W_s," << row.errors.Ws << '\n';
    out << row.K << ',' << row.R << ",b_s," << row.errors.bs << '\n';
    out << row.K << ',' << row.R << ",W_g," << row.errors.Wg << '\n';
    out << row.K << ',' << row.R << ",b_g," << row.errors.bg << '\n';
  }
  return out.str();
}

}  // namespace ordhash
