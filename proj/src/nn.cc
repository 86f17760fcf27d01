#include "d2s/nn.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "d2s/error.h"
#include "d2s/text.h"

namespace d2s {
namespace {

void check_dim(size_t got, size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected size " + std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

// y += W x for W [rows, cols].
void matvec_acc(const Tensor& w, std::span<const double> x, double* y) {
  const size_t r = w.rows(), c = w.cols();
  const double* a = w.value.data();
  for (size_t i = 0; i < r; ++i) {
    double s = 0.0;
    const double* wr = a + i * c;
    for (size_t j = 0; j < c; ++j) s += wr[j] * x[j];
    y[i] += s;
  }
}

// dx += W^T dy.
void matvec_t_acc(const Tensor& w, std::span<const double> dy, double* dx) {
  const size_t r = w.rows(), c = w.cols();
  const double* a = w.value.data();
  for (size_t i = 0; i < r; ++i) {
    const double d = dy[i];
    if (d == 0.0) continue;
    const double* wr = a + i * c;
    for (size_t j = 0; j < c; ++j) dx[j] += wr[j] * d;
  }
}

// dW += dy x^T.
void outer_acc(Tensor& w, std::span<const double> dy, std::span<const double> x) {
  const size_t r = w.rows(), c = w.cols();
  double* g = w.grad.data();
  for (size_t i = 0; i < r; ++i) {
    const double d = dy[i];
    if (d == 0.0) continue;
    double* gr = g + i * c;
    for (size_t j = 0; j < c; ++j) gr[j] += d * x[j];
  }
}

void add_to(Tensor& b, std::span<const double> d) {
  for (size_t i = 0; i < d.size(); ++i) b.grad[i] += d[i];
}

}  // namespace

Tensor::Tensor(std::vector<size_t> s) : shape(std::move(s)) {
  size_t n = std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
  value.assign(n, 0.0);
  grad.assign(n, 0.0);
}

void Tensor::zero_grad() { grad.assign(value.size(), 0.0); }

std::string Tensor::shape_string() const {
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

void init_uniform(Tensor& t, Rng& rng, double scale) {
  if (scale <= 0.0) {
    double fan = static_cast<double>(t.rows() + t.cols());
    scale = std::sqrt(6.0 / std::max(fan, 1.0));
  }
  for (double& v : t.value) v = rng.uniform(-scale, scale);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Vec softmax(std::span<const double> z) {
  Vec p(z.begin(), z.end());
  if (p.empty()) return p;
  double m = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

double cross_entropy(std::span<const double> probs, size_t label) {
  if (label >= probs.size()) throw DimensionError("cross_entropy: label out of range");
  return -std::log(std::max(probs[label], kProbFloor));
}

Vec softmax_xent_grad(std::span<const double> probs, size_t label) {
  if (label >= probs.size()) throw DimensionError("cross_entropy: label out of range");
  Vec g(probs.begin(), probs.end());
  g[label] -= 1.0;
  return g;
}

Vec embed_mean(std::span<const int> ids, const Tensor& table) {
  const size_t d = table.cols();
  Vec out(d, 0.0);
  if (ids.empty()) return out;
  for (int id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= table.rows()) {
      throw DimensionError("embed_mean: token id " + std::to_string(id) + " out of range");
    }
    const double* r = table.row(static_cast<size_t>(id));
    for (size_t j = 0; j < d; ++j) out[j] += r[j];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& v : out) v *= inv;
  return out;
}

void embed_mean_backward(std::span<const int> ids, std::span<const double> dout, Tensor& table) {
  if (ids.empty()) return;
  const size_t d = table.cols();
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) {
    double* g = table.grad.data() + static_cast<size_t>(id) * d;
    for (size_t j = 0; j < d; ++j) g[j] += dout[j] * inv;
  }
}

Dense::Dense(size_t in, size_t out) : w({out, in}), b({out}) {}

void Dense::init(Rng& rng) {
  init_uniform(w, rng);
  std::fill(b.value.begin(), b.value.end(), 0.0);
}

Vec Dense::forward(std::span<const double> x) const {
  check_dim(x.size(), in(), "dense input");
  Vec y(b.value);
  matvec_acc(w, x, y.data());
  return y;
}

Vec Dense::backward(std::span<const double> x, std::span<const double> dy) {
  outer_acc(w, dy, x);
  add_to(b, dy);
  Vec dx(in(), 0.0);
  matvec_t_acc(w, dy, dx.data());
  return dx;
}

Vec relu(std::span<const double> x) {
  Vec y(x.begin(), x.end());
  for (double& v : y) v = v > 0 ? v : 0.0;
  return y;
}

Vec relu_backward(std::span<const double> pre, std::span<const double> dy) {
  Vec dx(dy.begin(), dy.end());
  for (size_t i = 0; i < dx.size(); ++i) {
    if (!(pre[i] > 0)) dx[i] = 0.0;
  }
  return dx;
}

Vec dense_relu(std::span<const double> x, const Dense& layer) { return relu(layer.forward(x)); }

DropoutResult dropout(std::span<const double> x, double p, bool train, Rng* rng) {
  DropoutResult r;
  r.out.assign(x.begin(), x.end());
  if (!train || p <= 0.0) return r;
  if (p >= 1.0) throw InputError("dropout probability must be in [0, 1)");
  const double keep = 1.0 / (1.0 - p);
  r.mask.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    r.mask[i] = rng->bernoulli(p) ? 0.0 : keep;
    r.out[i] *= r.mask[i];
  }
  return r;
}

Vec dropout_backward(const Vec& mask, std::span<const double> dy) {
  Vec dx(dy.begin(), dy.end());
  if (mask.empty()) return dx;
  for (size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
  return dx;
}

// ---------------------------------------------------------------------------
// LSTM

LstmParams::LstmParams(size_t in, size_t hidden)
    : wx({4 * hidden, in}), wh({4 * hidden, hidden}), b({4 * hidden}) {}

void LstmParams::init(Rng& rng) {
  init_uniform(wx, rng);
  init_uniform(wh, rng);
  const size_t h = hidden();
  std::fill(b.value.begin(), b.value.end(), 0.0);
  // Forget gate starts open.
  for (size_t j = h; j < 2 * h; ++j) b.value[j] = 1.0;
}

LstmTrace lstm_forward(const std::vector<Vec>& seq, const LstmParams& p, bool reverse) {
  const size_t n = seq.size();
  const size_t h = p.hidden();
  LstmTrace tr;
  tr.reverse = reverse;
  tr.x = seq;
  for (auto* v : {&tr.i, &tr.f, &tr.g, &tr.o, &tr.c, &tr.tc, &tr.h}) v->resize(n);
  Vec hp(h, 0.0), cp(h, 0.0), z(4 * h);
  for (size_t k = 0; k < n; ++k) {
    const Vec& x = seq[reverse ? n - 1 - k : k];
    check_dim(x.size(), p.input_size(), "lstm input");
    std::copy(p.b.value.begin(), p.b.value.end(), z.begin());
    matvec_acc(p.wx, x, z.data());
    matvec_acc(p.wh, hp, z.data());
    Vec i(h), f(h), g(h), o(h), c(h), tc(h), hn(h);
    for (size_t j = 0; j < h; ++j) {
      i[j] = sigmoid(z[j]);
      f[j] = sigmoid(z[h + j]);
      g[j] = std::tanh(z[2 * h + j]);
      o[j] = sigmoid(z[3 * h + j]);
      c[j] = f[j] * cp[j] + i[j] * g[j];
      tc[j] = std::tanh(c[j]);
      hn[j] = o[j] * tc[j];
    }
    hp = hn;
    cp = c;
    tr.i[k] = std::move(i);
    tr.f[k] = std::move(f);
    tr.g[k] = std::move(g);
    tr.o[k] = std::move(o);
    tr.c[k] = std::move(c);
    tr.tc[k] = std::move(tc);
    tr.h[k] = std::move(hn);
  }
  return tr;
}

std::vector<Vec> lstm_backward(const LstmTrace& tr, LstmParams& p, const std::vector<Vec>& dh) {
  const size_t n = tr.h.size();
  const size_t h = p.hidden();
  check_dim(dh.size(), n, "lstm_backward steps");
  std::vector<Vec> dx(n, Vec(p.input_size(), 0.0));
  Vec dh_next(h, 0.0), dc_next(h, 0.0), dz(4 * h);
  const Vec zero(h, 0.0);
  for (size_t k = n; k-- > 0;) {
    const size_t pos = tr.reverse ? n - 1 - k : k;
    const Vec& cprev = k > 0 ? tr.c[k - 1] : zero;
    const Vec& hprev = k > 0 ? tr.h[k - 1] : zero;
    const Vec &i = tr.i[k], &f = tr.f[k], &g = tr.g[k], &o = tr.o[k], &tc = tr.tc[k];
    Vec dc_prev(h);
    for (size_t j = 0; j < h; ++j) {
      double dhj = dh[pos][j] + dh_next[j];
      double dc = dc_next[j] + dhj * o[j] * (1.0 - tc[j] * tc[j]);
      dz[j] = dc * g[j] * i[j] * (1.0 - i[j]);
      dz[h + j] = dc * cprev[j] * f[j] * (1.0 - f[j]);
      dz[2 * h + j] = dc * i[j] * (1.0 - g[j] * g[j]);
      dz[3 * h + j] = dhj * tc[j] * o[j] * (1.0 - o[j]);
      dc_prev[j] = dc * f[j];
    }
    outer_acc(p.wx, dz, tr.x[pos]);
    outer_acc(p.wh, dz, hprev);
    add_to(p.b, dz);
    matvec_t_acc(p.wx, dz, dx[pos].data());
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    matvec_t_acc(p.wh, dz, dh_next.data());
    dc_next = std::move(dc_prev);
  }
  return dx;
}

void BiLstmParams::init(Rng& rng) {
  fwd.init(rng);
  bwd.init(rng);
}

std::vector<Tensor*> BiLstmParams::params() {
  return {&fwd.wx, &fwd.wh, &fwd.b, &bwd.wx, &bwd.wh, &bwd.b};
}

BiLstmTrace bilstm_forward(const std::vector<Vec>& seq, const BiLstmParams& p) {
  if (seq.empty()) throw DimensionError("bilstm_forward: empty sequence");
  BiLstmTrace tr;
  tr.fwd = lstm_forward(seq, p.fwd, false);
  tr.bwd = lstm_forward(seq, p.bwd, true);
  const size_t h = p.hidden();
  tr.out.resize(seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    Vec o(2 * h);
    const Vec& a = tr.fwd.output(t);
    const Vec& b = tr.bwd.output(t);
    std::copy(a.begin(), a.end(), o.begin());
    std::copy(b.begin(), b.end(), o.begin() + static_cast<long>(h));
    tr.out[t] = std::move(o);
  }
  return tr;
}

std::vector<Vec> bilstm_backward(const BiLstmTrace& tr, BiLstmParams& p,
                                 const std::vector<Vec>& dout) {
  const size_t n = tr.out.size();
  const size_t h = p.hidden();
  check_dim(dout.size(), n, "bilstm_backward steps");
  std::vector<Vec> df(n), db(n);
  for (size_t t = 0; t < n; ++t) {
    df[t].assign(dout[t].begin(), dout[t].begin() + static_cast<long>(h));
    db[t].assign(dout[t].begin() + static_cast<long>(h), dout[t].end());
  }
  std::vector<Vec> dx = lstm_backward(tr.fwd, p.fwd, df);
  std::vector<Vec> dxb = lstm_backward(tr.bwd, p.bwd, db);
  for (size_t t = 0; t < n; ++t) {
    for (size_t j = 0; j < dx[t].size(); ++j) dx[t][j] += dxb[t][j];
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Elman RNN

RnnParams::RnnParams(size_t in, size_t hidden) : wx({hidden, in}), wh({hidden, hidden}), b({hidden}) {}

void RnnParams::init(Rng& rng) {
  init_uniform(wx, rng);
  init_uniform(wh, rng);
  std::fill(b.value.begin(), b.value.end(), 0.0);
}

RnnTrace rnn_forward(const std::vector<Vec>& seq, const RnnParams& p) {
  RnnTrace tr;
  tr.x = seq;
  const size_t h = p.hidden();
  Vec hp(h, 0.0);
  for (const Vec& x : seq) {
    check_dim(x.size(), p.wx.cols(), "rnn input");
    Vec z(p.b.value);
    matvec_acc(p.wx, x, z.data());
    matvec_acc(p.wh, hp, z.data());
    for (double& v : z) v = sigmoid(v);
    hp = z;
    tr.h.push_back(std::move(z));
  }
  return tr;
}

std::vector<Vec> rnn_backward(const RnnTrace& tr, RnnParams& p, const std::vector<Vec>& dh) {
  const size_t n = tr.h.size();
  const size_t h = p.hidden();
  check_dim(dh.size(), n, "rnn_backward steps");
  std::vector<Vec> dx(n, Vec(p.wx.cols(), 0.0));
  Vec dh_next(h, 0.0), dz(h);
  const Vec zero(h, 0.0);
  for (size_t t = n; t-- > 0;) {
    const Vec& ht = tr.h[t];
    for (size_t j = 0; j < h; ++j) dz[j] = (dh[t][j] + dh_next[j]) * ht[j] * (1.0 - ht[j]);
    outer_acc(p.wx, dz, tr.x[t]);
    outer_acc(p.wh, dz, t > 0 ? tr.h[t - 1] : zero);
    add_to(p.b, dz);
    matvec_t_acc(p.wx, dz, dx[t].data());
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    matvec_t_acc(p.wh, dz, dh_next.data());
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Attention

AttentionParams::AttentionParams(size_t state, size_t attn, AttentionKind k) : kind(k) {
  if (k == AttentionKind::kAdditive) {
    w = Tensor({attn, state});
    v = Tensor({attn});
  } else {
    v = Tensor({state});
  }
}

void AttentionParams::init(Rng& rng) {
  if (kind == AttentionKind::kAdditive) init_uniform(w, rng);
  init_uniform(v, rng, 1.0 / std::sqrt(static_cast<double>(v.size())));
}

std::vector<Tensor*> AttentionParams::params() {
  if (kind == AttentionKind::kAdditive) return {&w, &v};
  return {&v};
}

AttentionTrace attention_forward(const std::vector<Vec>& states, const AttentionParams& p) {
  if (states.empty()) throw DimensionError("attention: empty state list");
  AttentionTrace tr;
  tr.states = states;
  const size_t s = states[0].size();
  tr.scores.resize(states.size());
  for (size_t t = 0; t < states.size(); ++t) {
    check_dim(states[t].size(), s, "attention state");
    if (p.kind == AttentionKind::kAdditive) {
      check_dim(s, p.w.cols(), "attention state");
      Vec u(p.w.rows(), 0.0);
      matvec_acc(p.w, states[t], u.data());
      double sc = 0.0;
      for (size_t a = 0; a < u.size(); ++a) {
        u[a] = std::tanh(u[a]);
        sc += p.v[a] * u[a];
      }
      tr.scores[t] = sc;
      tr.u.push_back(std::move(u));
    } else {
      check_dim(s, p.v.size(), "attention state");
      double sc = 0.0;
      for (size_t j = 0; j < s; ++j) sc += p.v[j] * states[t][j];
      tr.scores[t] = sc;
    }
  }
  tr.alpha = softmax(tr.scores);
  tr.context.assign(s, 0.0);
  for (size_t t = 0; t < states.size(); ++t) {
    for (size_t j = 0; j < s; ++j) tr.context[j] += tr.alpha[t] * states[t][j];
  }
  return tr;
}

std::vector<Vec> attention_backward(const AttentionTrace& tr, AttentionParams& p,
                                    std::span<const double> dcontext) {
  const size_t n = tr.states.size();
  const size_t s = tr.context.size();
  Vec dalpha(n, 0.0);
  for (size_t t = 0; t < n; ++t) {
    for (size_t j = 0; j < s; ++j) dalpha[t] += dcontext[j] * tr.states[t][j];
  }
  double mean = 0.0;
  for (size_t t = 0; t < n; ++t) mean += tr.alpha[t] * dalpha[t];
  std::vector<Vec> ds(n, Vec(s, 0.0));
  for (size_t t = 0; t < n; ++t) {
    const double dscore = tr.alpha[t] * (dalpha[t] - mean);
    for (size_t j = 0; j < s; ++j) ds[t][j] = tr.alpha[t] * dcontext[j];
    if (p.kind == AttentionKind::kAdditive) {
      const Vec& u = tr.u[t];
      Vec dpre(u.size());
      for (size_t a = 0; a < u.size(); ++a) {
        p.v.grad[a] += dscore * u[a];
        dpre[a] = dscore * p.v[a] * (1.0 - u[a] * u[a]);
      }
      outer_acc(p.w, dpre, tr.states[t]);
      matvec_t_acc(p.w, dpre, ds[t].data());
    } else {
      for (size_t j = 0; j < s; ++j) {
        p.v.grad[j] += dscore * tr.states[t][j];
        ds[t][j] += dscore * p.v[j];
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Optimization

void adam_step(const std::vector<Tensor*>& params, AdamState& st, const AdamConfig& cfg) {
  if (st.m.empty()) {
    for (Tensor* t : params) {
      st.m.emplace_back(t->size(), 0.0);
      st.v.emplace_back(t->size(), 0.0);
    }
  }
  if (st.m.size() != params.size()) throw DimensionError("adam: parameter list changed");
  ++st.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor& t = *params[k];
    Vec& m = st.m[k];
    Vec& v = st.v[k];
    if (m.size() != t.size() || t.grad.size() != t.size()) {
      throw DimensionError("adam: shape mismatch for parameter " + std::to_string(k));
    }
    for (size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      t.value[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
}

void zero_grads(const std::vector<Tensor*>& params) {
  for (Tensor* t : params) t->zero_grad();
}

void scale_grads(const std::vector<Tensor*>& params, double s) {
  for (Tensor* t : params) {
    for (double& g : t->grad) g *= s;
  }
}

GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<std::pair<std::string, Tensor*>>& params,
                           double eps) {
  GradCheckResult r;
  for (const auto& [name, t] : params) {
    for (size_t i = 0; i < t->size(); ++i) {
      const double saved = t->value[i];
      t->value[i] = saved + eps;
      const double lp = loss();
      t->value[i] = saved - eps;
      const double lm = loss();
      t->value[i] = saved;
      const double gn = (lp - lm) / (2 * eps);
      const double ga = t->grad[i];
      const double rel = std::abs(ga - gn) / std::max(1e-8, std::abs(ga) + std::abs(gn));
      ++r.checked;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

double grad_check(const std::function<double(const Vec&)>& f, const Vec& grad, const Vec& x,
                  double eps) {
  check_dim(grad.size(), x.size(), "grad_check gradient");
  double worst = 0.0;
  Vec probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    double lp = f(probe);
    probe[i] = x[i] - eps;
    double lm = f(probe);
    probe[i] = x[i];
    double gn = (lp - lm) / (2 * eps);
    worst = std::max(worst, std::abs(grad[i] - gn) / std::max(1e-8, std::abs(grad[i]) + std::abs(gn)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string* Checkpoint::get_meta(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

void Checkpoint::add(const std::string& name, const Tensor& t) {
  Tensor copy;
  copy.shape = t.shape;
  copy.value = t.value;
  sections.emplace_back(name, std::move(copy));
}

void Checkpoint::load_into(std::string_view name, Tensor& t) const {
  for (const auto& [n, s] : sections) {
    if (n != name) continue;
    if (s.shape != t.shape) {
      throw InputError("checkpoint section '" + std::string(name) + "' has shape " +
                       s.shape_string() + ", architecture expects " + t.shape_string());
    }
    t.value = s.value;
    t.zero_grad();
    return;
  }
  throw InputError("checkpoint has no section '" + std::string(name) + "'");
}

void Checkpoint::write(std::ostream& out) const {
  out << "d2s-ckpt v1\n";
  for (const auto& [k, v] : meta) out << '@' << k << ' ' << escape_field(v) << '\n';
  char buf[40];
  for (const auto& [name, t] : sections) {
    out << name;
    for (size_t d : t.shape) out << ' ' << d;
    out << '\n';
    for (size_t i = 0; i < t.value.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t.value[i]);
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  write(out);
}

Checkpoint Checkpoint::read(std::istream& in, std::string_view source) {
  Checkpoint ck;
  std::string line;
  size_t lineno = 1;
  auto where = [&] { return std::string(source) + ":" + std::to_string(lineno) + ": "; };
  if (!std::getline(in, line) || trim(line) != "d2s-ckpt v1") {
    throw InputError(where() + "not a d2s checkpoint (missing 'd2s-ckpt v1' header)");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (line[0] == '@') {
      size_t sp = line.find(' ');
      if (sp == std::string::npos) {
        ck.meta.emplace_back(line.substr(1), "");
      } else {
        ck.meta.emplace_back(line.substr(1, sp - 1), unescape_field(line.substr(sp + 1)));
      }
      continue;
    }
    std::vector<std::string_view> head = split(trim(line), ' ');
    Tensor t;
    for (size_t k = 1; k < head.size(); ++k) {
      size_t d = 0;
      auto [p, ec] = std::from_chars(head[k].data(), head[k].data() + head[k].size(), d);
      if (ec != std::errc() || p != head[k].data() + head[k].size()) {
        throw InputError(where() + "bad section shape '" + std::string(line) + "'");
      }
      t.shape.push_back(d);
    }
    size_t n = std::accumulate(t.shape.begin(), t.shape.end(), size_t{1}, std::multiplies<>());
    std::string values;
    if (!std::getline(in, values)) throw InputError(where() + "section without values");
    ++lineno;
    t.value.reserve(n);
    const char* c = values.data();
    const char* end = c + values.size();
    while (c < end) {
      while (c < end && *c == ' ') ++c;
      if (c == end) break;
      double v = 0;
      auto [p, ec] = std::from_chars(c, end, v);
      if (ec != std::errc()) throw InputError(where() + "bad float in section " + std::string(head[0]));
      t.value.push_back(v);
      c = p;
    }
    if (t.value.size() != n) {
      throw InputError(where() + "section " + std::string(head[0]) + " declares " +
                       std::to_string(n) + " values, found " + std::to_string(t.value.size()));
    }
    ck.sections.emplace_back(std::string(head[0]), std::move(t));
  }
  return ck;
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return read(in, path.string());
}

}  // namespace d2s
