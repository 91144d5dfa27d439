#pragma once

// Test-side reference computations. Written from the model definitions
// directly; nothing here calls into the library under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

inline std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
  std::vector<double> out(logits.size());
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - m) / temperature);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LossInputs {
  std::vector<double> key_logits;
  std::vector<double> slot_logits;  // 3 entries
  double bias_logit = 0.0;
  std::vector<double> slot_weights;  // 3 entries, logit scale
  std::vector<double> affinity;
  std::vector<double> key_noise;
  std::vector<double> slot_noise;
  double temperature = 1.0;
  double l1 = 0.1, l2 = 0.01, l3 = 0.05, l4 = 0.01, l5 = 0.01, sign = 1.0;
};

// L = -P_route P_t + l1 sum p(1-a) + l2 rho + sign l3 P_t - l4 H(p) - l5 H(q)
inline double loss(const LossInputs& in) {
  std::vector<double> zk(in.key_logits.size());
  for (std::size_t i = 0; i < zk.size(); ++i) zk[i] = in.key_logits[i] + in.key_noise[i];
  std::vector<double> zs(3);
  for (std::size_t t = 0; t < 3; ++t) zs[t] = in.slot_logits[t] + in.slot_noise[t];
  const auto p = softmax(zk, in.temperature);
  const auto q = softmax(zs, in.temperature);
  const double rho = sigmoid(in.bias_logit);
  double route = 0.0, off = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    route += p[i] * in.affinity[i];
    off += p[i] * (1.0 - in.affinity[i]);
  }
  route *= rho;
  double pt = 0.0;
  for (std::size_t t = 0; t < 3; ++t) pt += q[t] * sigmoid(in.slot_weights[t]);
  return -route * pt + in.l1 * off + in.l2 * rho + in.sign * in.l3 * pt - in.l4 * entropy(p) -
         in.l5 * entropy(q);
}

// Probability that the key-bearing segment reaches the compromised agent.
// p_star is the clipped per-draw mass on a*.
inline double reach_star(double p_star) { return p_star; }
inline double reach_chain(double p_star, int hops) { return 1.0 - std::pow(1.0 - p_star, hops); }
// Layered DAG where a* is offered at the source and after every non-final
// layer: one offer per layer.
inline double reach_layered_dag(double p_star, int nonempty_layers) {
  return 1.0 - std::pow(1.0 - p_star, nonempty_layers);
}

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
