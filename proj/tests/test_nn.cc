#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "d2s/error.h"
#include "d2s/nn.h"
#include "oracle.h"

using namespace d2s;

namespace {

Tensor filled(std::vector<size_t> shape, std::vector<double> v) {
  Tensor t(std::move(shape));
  t.value = std::move(v);
  return t;
}

std::vector<Vec> random_seq(Rng& rng, size_t n, size_t d) {
  std::vector<Vec> s(n, Vec(d));
  for (auto& x : s) {
    for (double& v : x) v = rng.uniform(-1, 1);
  }
  return s;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t({3, 4});
  CHECK(t.size() == 12);
  CHECK(t.grad.size() == 12);
  CHECK(t.shape_string() == "3x4");
  t.at(1, 2) = 5;
  CHECK(t[6] == 5);
  t.grad[0] = 1;
  t.zero_grad();
  CHECK(t.grad[0] == 0);
}

TEST_CASE("embed_mean") {
  Tensor table = filled({2, 2}, {1, 3, 3, 1});
  CHECK(embed_mean(std::vector<int>{0}, table) == Vec{1, 3});
  CHECK(embed_mean(std::vector<int>{0, 1}, table) == Vec{2, 2});
  CHECK(embed_mean(std::vector<int>{}, table) == Vec{0, 0});
  CHECK_THROWS_AS(embed_mean(std::vector<int>{2}, table), DimensionError);
  CHECK_THROWS_AS(embed_mean(std::vector<int>{-1}, table), DimensionError);
  embed_mean_backward(std::vector<int>{0, 1, 1}, Vec{3, 6}, table);
  CHECK(table.grad == Vec{1, 2, 2, 4});
}

TEST_CASE("dense relu") {
  Dense eye(2, 2);
  eye.w.value = {1, 0, 0, 1};
  CHECK(dense_relu(Vec{-1, 2}, eye) == Vec{0, 2});
  eye.b.value = {-3, 5};
  CHECK(dense_relu(Vec{0, 0}, eye) == Vec{0, 5});
  CHECK_THROWS_AS(eye.forward(Vec{1, 2, 3}), DimensionError);

  Rng rng(3, "dense");
  Dense d(5, 4);
  d.init(rng);
  init_uniform(d.b, rng, 0.5);
  Vec x(5);
  for (double& v : x) v = rng.uniform(-1, 1);
  Vec got = dense_relu(x, d);
  Vec want = oracle::affine(d.w, d.b, x);
  for (double& v : want) v = std::max(0.0, v);
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

TEST_CASE("softmax and cross entropy") {
  CHECK(softmax(Vec{0, 0}) == Vec{0.5, 0.5});
  Vec p = softmax(Vec{std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(2.0 / 6).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(3.0 / 6).epsilon(1e-14));

  Rng rng(8, "softmax");
  for (int trial = 0; trial < 100; ++trial) {
    Vec z(1 + rng.below(6));
    for (double& v : z) v = rng.uniform(-30, 30);
    Vec a = softmax(z);
    Vec shifted = z;
    double c = rng.uniform(-500, 500);
    for (double& v : shifted) v += c;
    Vec b = softmax(shifted);
    double sum = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] > 0);
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
      sum += a[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  CHECK(softmax(Vec{1000, 0})[0] == 1.0);

  CHECK(cross_entropy(Vec{1, 0}, 0) == 0.0);
  CHECK(cross_entropy(Vec{0.5, 0.5}, 1) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(cross_entropy(Vec{1, 0}, 1) == doctest::Approx(-std::log(1e-12)).epsilon(1e-14));
  CHECK_THROWS_AS(cross_entropy(Vec{1, 0}, 2), DimensionError);
  CHECK(softmax_xent_grad(Vec{0.25, 0.75}, 1) == Vec{0.25, -0.25});
}

TEST_CASE("dropout") {
  Vec x = {1, 2, 3, 4};
  Rng rng(1, "drop");
  CHECK(dropout(x, 0.2, false, &rng).out == x);
  CHECK(dropout(x, 0.2, false, nullptr).mask.empty());
  CHECK(dropout(x, 0.0, true, &rng).out == x);
  CHECK_THROWS_AS(dropout(x, 1.0, true, &rng), InputError);

  Rng a(9, "drop"), b(9, "drop");
  CHECK(dropout(x, 0.5, true, &a).mask == dropout(x, 0.5, true, &b).mask);

  // expectation over 10k draws
  Vec ones(1, 1.0);
  double sum = 0;
  for (uint64_t s = 0; s < 10000; ++s) {
    Rng r(s, "drop.mc");
    DropoutResult d = dropout(ones, 0.2, true, &r);
    CHECK((d.out[0] == 0.0 || std::abs(d.out[0] - 1.25) < 1e-15));
    sum += d.out[0];
  }
  CHECK(std::abs(sum / 10000 - 1.0) < 0.02);

  Rng r(4, "drop.bw");
  DropoutResult d = dropout(x, 0.5, true, &r);
  Vec dy = {1, 1, 1, 1};
  CHECK(dropout_backward(d.mask, dy) == d.mask);
  CHECK(dropout_backward({}, dy) == dy);
}

TEST_CASE("lstm against the scalar oracle") {
  Rng rng(11, "lstm");
  BiLstmParams p(4, 3);
  p.init(rng);
  init_uniform(p.fwd.b, rng, 0.3);
  init_uniform(p.bwd.b, rng, 0.3);
  std::vector<Vec> seq = random_seq(rng, 3, 4);
  BiLstmTrace tr = bilstm_forward(seq, p);
  std::vector<Vec> want = oracle::bilstm(seq, p);
  REQUIRE(tr.out.size() == 3);
  for (size_t t = 0; t < 3; ++t) {
    REQUIRE(tr.out[t].size() == 6);
    for (size_t k = 0; k < 6; ++k) CHECK(tr.out[t][k] == doctest::Approx(want[t][k]).epsilon(1e-13));
  }

  BiLstmParams zero(4, 3);
  for (const Vec& h : bilstm_forward(seq, zero).out) {
    for (double v : h) CHECK(v == 0.0);
  }

  std::vector<Vec> one = {seq[0]};
  BiLstmTrace single = bilstm_forward(one, p);
  std::vector<Vec> f = oracle::lstm(one, p.fwd, false), b = oracle::lstm(one, p.bwd, false);
  for (size_t k = 0; k < 3; ++k) {
    CHECK(single.out[0][k] == doctest::Approx(f[0][k]).epsilon(1e-13));
    CHECK(single.out[0][3 + k] == doctest::Approx(b[0][k]).epsilon(1e-13));
  }

  CHECK_THROWS_AS(bilstm_forward({}, p), DimensionError);
  CHECK_THROWS_AS(bilstm_forward({Vec(5, 0.0)}, p), DimensionError);
}

TEST_CASE("bilstm reversal symmetry") {
  Rng rng(12, "lstm.rev");
  BiLstmParams p(3, 2);
  p.init(rng);
  std::vector<Vec> seq = random_seq(rng, 5, 3);
  BiLstmParams swapped(3, 2);
  swapped.fwd = p.bwd;
  swapped.bwd = p.fwd;
  std::vector<Vec> rev(seq.rbegin(), seq.rend());
  auto a = bilstm_forward(seq, p).out;
  auto b = bilstm_forward(rev, swapped).out;
  for (size_t t = 0; t < seq.size(); ++t) {
    const Vec& x = a[t];
    const Vec& y = b[seq.size() - 1 - t];
    for (size_t k = 0; k < 2; ++k) {
      CHECK(x[k] == doctest::Approx(y[2 + k]).epsilon(1e-14));
      CHECK(x[2 + k] == doctest::Approx(y[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("attention") {
  Rng rng(13, "attn");
  AttentionParams p(4, 3);
  p.init(rng);
  Vec s = {0.1, -0.2, 0.3, 0.4};
  AttentionTrace one = attention_forward({s}, p);
  CHECK(one.alpha == Vec{1.0});
  CHECK(one.context == s);
  AttentionTrace two = attention_forward({s, s}, p);
  CHECK(two.alpha[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(two.alpha[1] == doctest::Approx(0.5).epsilon(1e-15));

  for (AttentionKind kind : {AttentionKind::kAdditive, AttentionKind::kDot}) {
    AttentionParams q(4, 3, kind);
    q.init(rng);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec> states = random_seq(rng, 1 + rng.below(5), 4);
      AttentionTrace tr = attention_forward(states, q);
      oracle::Attn want = oracle::attention(states, q);
      double sum = 0;
      for (size_t t = 0; t < states.size(); ++t) {
        CHECK(tr.alpha[t] >= 0);
        CHECK(tr.alpha[t] == doctest::Approx(want.alpha[t]).epsilon(1e-13));
        sum += tr.alpha[t];
      }
      CHECK(std::abs(sum - 1) < 1e-12);
      for (size_t k = 0; k < 4; ++k) {
        CHECK(tr.context[k] == doctest::Approx(want.context[k]).epsilon(1e-13));
        double lo = 1e9, hi = -1e9;
        for (const Vec& st : states) {
          lo = std::min(lo, st[k]);
          hi = std::max(hi, st[k]);
        }
        CHECK(tr.context[k] >= lo - 1e-12);
        CHECK(tr.context[k] <= hi + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(attention_forward({}, p), DimensionError);
}

TEST_CASE("adam") {
  Tensor w = filled({1}, {0.0});
  w.grad = {1.0};
  AdamState st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  adam_step({&w}, st, cfg);
  CHECK(st.t == 1);
  CHECK(w[0] == doctest::Approx(-0.1 * 1.0 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(st.v[0][0] >= 0);

  Tensor z = filled({2}, {0.3, -0.7});
  AdamState zs;
  adam_step({&z}, zs, cfg);
  CHECK(z.value == Vec{0.3, -0.7});
  CHECK(zs.t == 1);

  Tensor a = filled({3}, {1, 2, 3}), b = a;
  AdamState sa, sb;
  for (int k = 0; k < 5; ++k) {
    a.grad = b.grad = {0.1 * k, -0.2, 0.3};
    adam_step({&a}, sa, cfg);
    adam_step({&b}, sb, cfg);
  }
  CHECK(a.value == b.value);

  Tensor other({4});
  CHECK_THROWS_AS(adam_step({&other}, sa, cfg), DimensionError);
  CHECK_THROWS_AS(adam_step({&a, &b}, sa, cfg), DimensionError);
}

TEST_CASE("gradient check helper") {
  Vec w = {3.0};
  double err = grad_check([](const Vec& x) { return x[0] * x[0]; }, Vec{6.0}, w);
  CHECK(err < 1e-8);
  CHECK(grad_check([](const Vec& x) { return x[0] * x[0]; }, Vec{5.0}, w) > 0.05);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(21, "grad");
  const size_t D = 4, H = 3, A = 3, V = 6;
  Tensor table({V, D});
  init_uniform(table, rng, 0.5);
  BiLstmParams lstm(D, H);
  lstm.init(rng);
  init_uniform(lstm.fwd.b, rng, 0.2);
  init_uniform(lstm.bwd.b, rng, 0.2);
  AttentionParams attn(2 * H, A);
  attn.init(rng);
  Dense fuse(2 * H, 5), out(5, 2);
  fuse.init(rng);
  out.init(rng);
  init_uniform(fuse.b, rng, 0.3);
  RnnParams rnn(D, H);
  rnn.init(rng);
  std::vector<std::vector<int>> ids = {{0, 1}, {2}, {3, 4, 5}};
  const size_t label = 1;

  auto forward = [&](bool backward) {
    std::vector<Vec> seq;
    for (const auto& s : ids) seq.push_back(embed_mean(s, table));
    BiLstmTrace lt = bilstm_forward(seq, lstm);
    AttentionTrace at = attention_forward(lt.out, attn);
    Vec pre = fuse.forward(at.context);
    Vec act = relu(pre);
    Vec logits = out.forward(act);
    Vec probs = softmax(logits);
    RnnTrace rt = rnn_forward(seq, rnn);
    double loss = cross_entropy(probs, label) + dot(rt.h.back(), Vec(H, 0.7));
    if (backward) {
      for (double v : pre) REQUIRE(std::abs(v) > 1e-4);  // away from the kink
      Vec dl = softmax_xent_grad(probs, label);
      Vec dact = out.backward(act, dl);
      Vec dpre = relu_backward(pre, dact);
      Vec dctx = fuse.backward(at.context, dpre);
      std::vector<Vec> dstates = attention_backward(at, attn, dctx);
      std::vector<Vec> dseq = bilstm_backward(lt, lstm, dstates);
      std::vector<Vec> dh(seq.size(), Vec(H, 0.0));
      dh.back() = Vec(H, 0.7);
      std::vector<Vec> dseq2 = rnn_backward(rt, rnn, dh);
      for (size_t k = 0; k < ids.size(); ++k) {
        for (size_t j = 0; j < D; ++j) dseq[k][j] += dseq2[k][j];
        embed_mean_backward(ids[k], dseq[k], table);
      }
    }
    return loss;
  };

  std::vector<std::pair<std::string, Tensor*>> named = {
      {"table", &table},   {"fwd.wx", &lstm.fwd.wx}, {"fwd.wh", &lstm.fwd.wh},
      {"fwd.b", &lstm.fwd.b}, {"bwd.wx", &lstm.bwd.wx}, {"bwd.wh", &lstm.bwd.wh},
      {"bwd.b", &lstm.bwd.b}, {"attn.w", &attn.w},     {"attn.v", &attn.v},
      {"fuse.w", &fuse.w}, {"fuse.b", &fuse.b},       {"out.w", &out.w},
      {"out.b", &out.b},   {"rnn.wx", &rnn.wx},       {"rnn.wh", &rnn.wh},
      {"rnn.b", &rnn.b}};
  for (auto& [n, t] : named) t->zero_grad();
  forward(true);
  GradCheckResult r = grad_check([&] { return forward(false); }, named);
  CAPTURE(r.worst);
  CHECK(r.checked > 100);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("dot attention gradients") {
  Rng rng(22, "grad.dot");
  AttentionParams attn(3, 2, AttentionKind::kDot);
  attn.init(rng);
  std::vector<Vec> states = random_seq(rng, 4, 3);
  Vec w = {0.3, -0.5, 0.9};
  auto loss = [&] { return dot(attention_forward(states, attn).context, w); };
  attn.v.zero_grad();
  attention_backward(attention_forward(states, attn), attn, w);
  GradCheckResult r = grad_check(loss, {{"v", &attn.v}});
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("checkpoint round-trip") {
  Checkpoint ck;
  ck.set_meta("task", "sud");
  ck.set_meta("note", "two words");
  Tensor t = filled({2, 3}, {0.1, -2.5e-7, 3, 1.0 / 3.0, 1e300, -0.0});
  ck.add("layer.w", t);
  std::ostringstream out;
  ck.write(out);
  CHECK(out.str().rfind("d2s-ckpt v1\n", 0) == 0);
  std::istringstream in(out.str());
  Checkpoint back = Checkpoint::read(in);
  CHECK(*back.get_meta("task") == "sud");
  CHECK(*back.get_meta("note") == "two words");
  CHECK(back.get_meta("missing") == nullptr);
  Tensor u({2, 3});
  back.load_into("layer.w", u);
  CHECK(u.value == t.value);
  Tensor wrong({3, 2});
  CHECK_THROWS_AS(back.load_into("layer.w", wrong), InputError);
  CHECK_THROWS_AS(back.load_into("nope", u), InputError);

  std::istringstream bad("not a checkpoint\n");
  CHECK_THROWS_AS(Checkpoint::read(bad), InputError);
  std::string truncated = out.str().substr(0, out.str().size() - 8);
  std::istringstream tr(truncated);
  CHECK_THROWS_AS(Checkpoint::read(tr), InputError);
}
