#include "d2s/eval_stats.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "d2s/error.h"

namespace d2s {

ConfusionMatrix::ConfusionMatrix(size_t k) : k_(k), counts_(k * k, 0) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::vector<int64_t>> counts)
    : k_(counts.size()), counts_(k_ * k_, 0) {
  for (size_t i = 0; i < k_; ++i) {
    if (counts[i].size() != k_) throw InputError("confusion matrix must be square");
    for (size_t j = 0; j < k_; ++j) {
      if (counts[i][j] < 0) throw InputError("confusion matrix counts must be non-negative");
      counts_[i * k_ + j] = counts[i][j];
    }
  }
}

void ConfusionMatrix::add(size_t actual, size_t predicted, int64_t n) {
  if (actual >= k_ || predicted >= k_) throw InputError("class index out of range");
  counts_[actual * k_ + predicted] += n;
}

int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), int64_t{0});
}

ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<int>& predicted,
                          size_t k) {
  if (actual.size() != predicted.size()) throw InputError("label vectors differ in length");
  ConfusionMatrix cm(k);
  for (size_t i = 0; i < actual.size(); ++i) {
    cm.add(static_cast<size_t>(actual[i]), static_cast<size_t>(predicted[i]));
  }
  return cm;
}

PRF prf(const ConfusionMatrix& cm) {
  const size_t k = cm.classes();
  if (k == 0 || cm.total() <= 0) throw InputError("prf: empty confusion matrix");
  PRF out;
  out.per_class.resize(k);
  int64_t diag = 0;
  for (size_t c = 0; c < k; ++c) {
    int64_t tp = cm.at(c, c);
    int64_t pred = 0, act = 0;
    for (size_t o = 0; o < k; ++o) {
      pred += cm.at(o, c);
      act += cm.at(c, o);
    }
    diag += tp;
    ClassMetrics& m = out.per_class[c];
    m.precision = pred > 0 ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    m.recall = act > 0 ? static_cast<double>(tp) / static_cast<double>(act) : 0.0;
    // 2PR/(P+R) from the counts, so hand examples come out exact
    m.f1 = pred + act > 0 ? static_cast<double>(2 * tp) / static_cast<double>(pred + act) : 0.0;
    out.macro_precision += m.precision;
    out.macro_recall += m.recall;
    out.macro_f1 += m.f1;
  }
  out.macro_precision /= static_cast<double>(k);
  out.macro_recall /= static_cast<double>(k);
  out.macro_f1 /= static_cast<double>(k);
  out.accuracy = static_cast<double>(diag) / static_cast<double>(cm.total());
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty list");
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::string_view wilcoxon_method_name(WilcoxonMethod m) {
  return m == WilcoxonMethod::kExact ? "exact" : "normal_approx";
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                    ZeroHandling zeros) {
  if (x.size() != y.size()) throw InputError("wilcoxon: samples differ in length");
  if (x.empty()) throw InputError("wilcoxon: empty samples");
  std::vector<double> d;
  for (size_t i = 0; i < x.size(); ++i) {
    double di = x[i] - y[i];
    if (di != 0.0 || zeros == ZeroHandling::kPratt) d.push_back(di);
  }
  WilcoxonResult r;
  size_t nonzero = std::count_if(d.begin(), d.end(), [](double v) { return v != 0.0; });
  if (nonzero == 0) return r;  // W = 0, p = 1

  // Doubled average ranks keep tied ranks integral.
  std::vector<size_t> order(d.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<int64_t> rank2(d.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    int64_t r2 = static_cast<int64_t>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (size_t k = i; k < j; ++k) rank2[order[k]] = r2;
    i = j;
  }
  std::vector<int64_t> signed_ranks;  // doubled ranks of the nonzero differences
  int64_t plus2 = 0, minus2 = 0;
  for (size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) plus2 += rank2[i];
    if (d[i] < 0) minus2 += rank2[i];
    if (d[i] != 0) signed_ranks.push_back(rank2[i]);
  }
  r.w_plus = plus2 / 2.0;
  r.w_minus = minus2 / 2.0;
  r.w = std::min(r.w_plus, r.w_minus);
  r.n_effective = nonzero;
  const int64_t total2 = plus2 + minus2;
  const int64_t w2 = std::min(plus2, minus2);

  if (nonzero <= kWilcoxonExactMax) {
    r.method = WilcoxonMethod::kExact;
    // count[s] = number of sign assignments whose positive doubled-rank sum is s.
    std::vector<double> count(static_cast<size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    int64_t reach = 0;
    for (int64_t rk : signed_ranks) {
      for (int64_t s = reach; s >= 0; --s) {
        if (count[s] != 0.0) count[s + rk] += count[s];
      }
      reach += rk;
    }
    double hits = 0.0;
    for (int64_t s = 0; s <= total2; ++s) {
      if (std::min(s, total2 - s) <= w2) hits += count[s];
    }
    r.p_value = std::min(1.0, hits / std::ldexp(1.0, static_cast<int>(nonzero)));
    return r;
  }

  r.method = WilcoxonMethod::kNormalApprox;
  double mean = total2 / 4.0;
  double var = 0.0;
  for (int64_t rk : signed_ranks) var += (rk / 2.0) * (rk / 2.0);
  var /= 4.0;
  double num = r.w - mean + 0.5;
  if (num >= 0 || var <= 0) {
    r.p_value = 1.0;
  } else {
    double z = num / std::sqrt(var);
    r.p_value = std::min(1.0, std::erfc(-z / std::sqrt(2.0)));
  }
  return r;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InputError("cohen_kappa: label lists differ in length");
  if (a.empty()) throw InputError("cohen_kappa: empty label lists");
  std::map<int, size_t> ca, cb;
  size_t agree = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    agree += a[i] == b[i] ? 1 : 0;
  }
  const double n = static_cast<double>(a.size());
  double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, na] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) pe += (na / n) * (it->second / n);
  }
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

}  // namespace d2s
