#ifndef D2S_NN_H_
#define D2S_NN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "d2s/rng.h"

namespace d2s {

using Vec = std::vector<double>;

// Dense row-major float64 tensor with a gradient buffer of the same shape.
struct Tensor {
  std::vector<size_t> shape;
  Vec value;
  Vec grad;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);

  size_t size() const { return value.size(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& operator[](size_t i) { return value[i]; }
  double operator[](size_t i) const { return value[i]; }
  double& at(size_t r, size_t c) { return value[r * cols() + c]; }
  double at(size_t r, size_t c) const { return value[r * cols() + c]; }
  const double* row(size_t r) const { return value.data() + r * cols(); }

  void zero_grad();
  std::string shape_string() const;  // "3x4"
};

// Glorot-uniform fill, or plain uniform in [-scale, scale] if scale > 0.
void init_uniform(Tensor& t, Rng& rng, double scale = 0.0);

// ---------------------------------------------------------------------------
// Elementwise and small ops

double sigmoid(double x);
Vec softmax(std::span<const double> logits);
// -ln(max(p[label], 1e-12)).
double cross_entropy(std::span<const double> probs, size_t label);
inline constexpr double kProbFloor = 1e-12;
// d loss / d logits for softmax followed by cross_entropy.
Vec softmax_xent_grad(std::span<const double> probs, size_t label);

Vec embed_mean(std::span<const int> ids, const Tensor& table);
void embed_mean_backward(std::span<const int> ids, std::span<const double> dout, Tensor& table);

// y = W x + b with W [out, in].
struct Dense {
  Tensor w, b;
  Dense() = default;
  Dense(size_t in, size_t out);
  size_t in() const { return w.cols(); }
  size_t out() const { return w.rows(); }
  void init(Rng& rng);
  Vec forward(std::span<const double> x) const;
  // Accumulates dW, db; returns dx.
  Vec backward(std::span<const double> x, std::span<const double> dy);
  std::vector<Tensor*> params() { return {&w, &b}; }
};

Vec relu(std::span<const double> x);
// dx = dy where pre > 0.
Vec relu_backward(std::span<const double> pre, std::span<const double> dy);
Vec dense_relu(std::span<const double> x, const Dense& layer);

// Inverted dropout: survivors scaled by 1/(1-p). The returned mask holds the
// per-element multiplier (0 or 1/(1-p)); in eval mode it is empty.
struct DropoutResult {
  Vec out;
  Vec mask;
};
DropoutResult dropout(std::span<const double> x, double p, bool train, Rng* rng);
Vec dropout_backward(const Vec& mask, std::span<const double> dy);

// ---------------------------------------------------------------------------
// Recurrences

// Gate rows are stacked in the order input, forget, cell, output.
struct LstmParams {
  Tensor wx;  // [4H, in]
  Tensor wh;  // [4H, H]
  Tensor b;   // [4H]
  LstmParams() = default;
  LstmParams(size_t in, size_t hidden);
  size_t input_size() const { return wx.cols(); }
  size_t hidden() const { return wh.cols(); }
  void init(Rng& rng);
  std::vector<Tensor*> params() { return {&wx, &wh, &b}; }
};

struct LstmTrace {
  bool reverse = false;
  std::vector<Vec> x;                   // per step, in sequence order
  std::vector<Vec> i, f, g, o, c, tc;   // per processing step
  std::vector<Vec> h;                   // per processing step
  // Hidden state per sequence position.
  const Vec& output(size_t t) const { return h[reverse ? h.size() - 1 - t : t]; }
};

LstmTrace lstm_forward(const std::vector<Vec>& seq, const LstmParams& p, bool reverse = false);
// dh[t] is the loss gradient w.r.t. the hidden output at sequence position t.
// Accumulates parameter gradients and returns dx per position.
std::vector<Vec> lstm_backward(const LstmTrace& tr, LstmParams& p, const std::vector<Vec>& dh);

struct BiLstmParams {
  LstmParams fwd, bwd;
  BiLstmParams() = default;
  BiLstmParams(size_t in, size_t hidden) : fwd(in, hidden), bwd(in, hidden) {}
  size_t hidden() const { return fwd.hidden(); }
  void init(Rng& rng);
  std::vector<Tensor*> params();
};

struct BiLstmTrace {
  LstmTrace fwd, bwd;
  std::vector<Vec> out;  // [h_fwd_t ; h_bwd_t]
};

BiLstmTrace bilstm_forward(const std::vector<Vec>& seq, const BiLstmParams& p);
std::vector<Vec> bilstm_backward(const BiLstmTrace& tr, BiLstmParams& p,
                                 const std::vector<Vec>& dout);

// Elman recurrence with logistic activation: h_t = sigmoid(Wx x_t + Wh h_{t-1} + b).
struct RnnParams {
  Tensor wx, wh, b;
  RnnParams() = default;
  RnnParams(size_t in, size_t hidden);
  size_t hidden() const { return wh.cols(); }
  void init(Rng& rng);
  std::vector<Tensor*> params() { return {&wx, &wh, &b}; }
};

struct RnnTrace {
  std::vector<Vec> x, h;
};

RnnTrace rnn_forward(const std::vector<Vec>& seq, const RnnParams& p);
std::vector<Vec> rnn_backward(const RnnTrace& tr, RnnParams& p, const std::vector<Vec>& dh);

// ---------------------------------------------------------------------------
// Attention

enum class AttentionKind {
  kAdditive,  // score_t = v . tanh(W s_t)
  kDot,       // score_t = v . s_t (W unused)
};

struct AttentionParams {
  AttentionKind kind = AttentionKind::kAdditive;
  Tensor w;  // [A, S]
  Tensor v;  // [A] (additive) or [S] (dot)
  AttentionParams() = default;
  AttentionParams(size_t state, size_t attn, AttentionKind kind = AttentionKind::kAdditive);
  void init(Rng& rng);
  std::vector<Tensor*> params();
};

struct AttentionTrace {
  std::vector<Vec> states;
  std::vector<Vec> u;  // tanh(W s_t), additive only
  Vec scores, alpha, context;
};

AttentionTrace attention_forward(const std::vector<Vec>& states, const AttentionParams& p);
std::vector<Vec> attention_backward(const AttentionTrace& tr, AttentionParams& p,
                                    std::span<const double> dcontext);

// ---------------------------------------------------------------------------
// Optimization

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Vec> m, v;
  int64_t t = 0;
};

// One bias-corrected Adam update of every tensor from its grad buffer.
// Grad buffers are left untouched.
void adam_step(const std::vector<Tensor*>& params, AdamState& state, const AdamConfig& cfg);

void zero_grads(const std::vector<Tensor*>& params);
void scale_grads(const std::vector<Tensor*>& params, double s);

struct GradCheckResult {
  double max_rel_error = 0;
  size_t checked = 0;
  std::string worst;  // "param[index]"
};

// Central differences of `loss` against the analytic gradients stored in each
// tensor's grad buffer. `loss` must read the current parameter values.
// rel = |ga - gn| / max(1e-8, |ga| + |gn|).
GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<std::pair<std::string, Tensor*>>& params,
                           double eps = 1e-5);
double grad_check(const std::function<double(const Vec&)>& f, const Vec& grad, const Vec& x,
                  double eps = 1e-5);

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Tensor>> sections;

  void set_meta(const std::string& key, const std::string& value);
  const std::string* get_meta(std::string_view key) const;
  void add(const std::string& name, const Tensor& t);
  // Copies the named section into `t`; throws InputError if absent or if the
  // stored shape differs from t.shape.
  void load_into(std::string_view name, Tensor& t) const;

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Checkpoint read(std::istream& in, std::string_view source = "<input>");
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace d2s

#endif  // D2S_NN_H_
