#ifndef D2S_TESTS_ORACLE_H_
#define D2S_TESTS_ORACLE_H_

// Straight-line scalar re-implementations used as test oracles. They only
// read parameter values; none of the library's kernels are called.

#include <cmath>
#include <vector>

#include "d2s/models.h"
#include "d2s/nn.h"

namespace d2s::oracle {

using V = std::vector<double>;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline V affine(const Tensor& w, const Tensor& b, const V& x) {
  size_t rows = w.shape[0], cols = w.shape[1];
  V y(rows);
  for (size_t r = 0; r < rows; ++r) {
    double s = b.value[r];
    for (size_t c = 0; c < cols; ++c) s += w.value[r * cols + c] * x[c];
    y[r] = s;
  }
  return y;
}

inline V mean_rows(const Tensor& table, const std::vector<int>& ids) {
  size_t d = table.shape[1];
  V out(d, 0.0);
  for (int id : ids) {
    for (size_t j = 0; j < d; ++j) out[j] += table.value[static_cast<size_t>(id) * d + j];
  }
  if (!ids.empty()) {
    for (double& v : out) v /= static_cast<double>(ids.size());
  }
  return out;
}

// Hidden state per sequence position.
inline std::vector<V> lstm(const std::vector<V>& seq, const LstmParams& p, bool reverse) {
  size_t H = p.wh.shape[1], in = p.wx.shape[1];
  V h(H, 0.0), c(H, 0.0);
  std::vector<V> out(seq.size());
  for (size_t step = 0; step < seq.size(); ++step) {
    size_t t = reverse ? seq.size() - 1 - step : step;
    const V& x = seq[t];
    V hn(H), cn(H);
    for (size_t u = 0; u < H; ++u) {
      double z[4];
      for (int gate = 0; gate < 4; ++gate) {
        size_t row = gate * H + u;
        double s = p.b.value[row];
        for (size_t k = 0; k < in; ++k) s += p.wx.value[row * in + k] * x[k];
        for (size_t k = 0; k < H; ++k) s += p.wh.value[row * H + k] * h[k];
        z[gate] = s;
      }
      double ig = sig(z[0]), fg = sig(z[1]), gg = std::tanh(z[2]), og = sig(z[3]);
      cn[u] = fg * c[u] + ig * gg;
      hn[u] = og * std::tanh(cn[u]);
    }
    h = hn;
    c = cn;
    out[t] = h;
  }
  return out;
}

inline std::vector<V> bilstm(const std::vector<V>& seq, const BiLstmParams& p) {
  std::vector<V> f = lstm(seq, p.fwd, false), b = lstm(seq, p.bwd, true);
  std::vector<V> out(seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    out[t] = f[t];
    out[t].insert(out[t].end(), b[t].begin(), b[t].end());
  }
  return out;
}

struct Attn {
  V alpha, context;
};

inline Attn attention(const std::vector<V>& states, const AttentionParams& p) {
  size_t n = states.size(), s = states[0].size();
  V score(n);
  for (size_t t = 0; t < n; ++t) {
    double acc = 0;
    if (p.kind == AttentionKind::kAdditive) {
      size_t A = p.w.shape[0];
      for (size_t a = 0; a < A; ++a) {
        double u = 0;
        for (size_t k = 0; k < s; ++k) u += p.w.value[a * s + k] * states[t][k];
        acc += p.v.value[a] * std::tanh(u);
      }
    } else {
      for (size_t k = 0; k < s; ++k) acc += p.v.value[k] * states[t][k];
    }
    score[t] = acc;
  }
  double mx = score[0];
  for (double v : score) mx = std::max(mx, v);
  double z = 0;
  Attn r;
  r.alpha.resize(n);
  for (size_t t = 0; t < n; ++t) z += (r.alpha[t] = std::exp(score[t] - mx));
  for (double& a : r.alpha) a /= z;
  r.context.assign(s, 0.0);
  for (size_t t = 0; t < n; ++t) {
    for (size_t k = 0; k < s; ++k) r.context[k] += r.alpha[t] * states[t][k];
  }
  return r;
}

inline V head_features(const HeadModel& h, const std::vector<int>& ids) {
  V pre = affine(h.hidden.w, h.hidden.b, mean_rows(h.encoder.table, ids));
  for (double& v : pre) v = std::max(0.0, v);
  return pre;
}

// Eval-mode class probabilities of the temporal model.
inline V temporal_probs(const TemporalExample& ex, const TemporalSUDModel& m) {
  const size_t dh = m.opt.dims.d_h;
  V context;
  if (m.variant != AblationVariant::kNoHistory && !ex.tau.empty()) {
    std::vector<V> steps;
    for (size_t k = 0; k < ex.tau.size(); ++k) {
      V es = m.opt.finetune_extractors ? head_features(m.sentiment, ex.s_ids[k]) : ex.e_s[k];
      V ee = m.opt.finetune_extractors ? head_features(m.emotion, ex.e_ids[k]) : ex.e_e[k];
      V x = es;
      x.insert(x.end(), ee.begin(), ee.end());
      x.push_back(ex.tau[k]);
      steps.push_back(x);
    }
    if (m.variant == AblationVariant::kNoAttention) {
      context.assign(2 * dh, 0.0);
      for (const V& x : steps) {
        for (size_t j = 0; j < 2 * dh; ++j) context[j] += x[j] / static_cast<double>(steps.size());
      }
    } else {
      context = attention(bilstm(steps, m.lstm), m.attn).context;
    }
  } else {
    context.assign(m.context_dim(), 0.0);
  }
  V in = context;
  V enc = mean_rows(m.target.table, ex.target_ids);
  in.insert(in.end(), enc.begin(), enc.end());
  V hid = affine(m.fuse.w, m.fuse.b, in);
  for (double& v : hid) v = std::max(0.0, v);
  V logits = affine(m.out.w, m.out.b, hid);
  double mx = std::max(logits[0], logits[1]);
  double a = std::exp(logits[0] - mx), b = std::exp(logits[1] - mx);
  return {a / (a + b), b / (a + b)};
}

}  // namespace d2s::oracle

#endif  // D2S_TESTS_ORACLE_H_
