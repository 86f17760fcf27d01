#ifndef D2S_EVAL_STATS_H_
#define D2S_EVAL_STATS_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace d2s {

// K x K counts; rows are actual classes, columns predicted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(size_t k);
  ConfusionMatrix(std::vector<std::vector<int64_t>> counts);

  void add(size_t actual, size_t predicted, int64_t n = 1);
  int64_t at(size_t actual, size_t predicted) const { return counts_[actual * k_ + predicted]; }
  size_t classes() const { return k_; }
  int64_t total() const;

 private:
  size_t k_;
  std::vector<int64_t> counts_;
};

ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<int>& predicted,
                          size_t k);

struct ClassMetrics {
  double precision = 0, recall = 0, f1 = 0;
};

struct PRF {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double accuracy = 0;
};

// Zero denominators give 0. Throws InputError on an empty matrix.
PRF prf(const ConfusionMatrix& cm);

// Mean of the two middle values for even lengths. Throws on empty input.
double median(std::vector<double> values);

enum class WilcoxonMethod { kExact, kNormalApprox };
enum class ZeroHandling { kWilcox, kPratt };

struct WilcoxonResult {
  double w = 0;  // min(W+, W-)
  double w_plus = 0, w_minus = 0;
  size_t n_effective = 0;
  double p_value = 1.0;  // two-sided
  WilcoxonMethod method = WilcoxonMethod::kExact;
};

std::string_view wilcoxon_method_name(WilcoxonMethod m);

inline constexpr size_t kWilcoxonExactMax = 25;

// Paired signed-rank test on d = x - y. Ties in |d| get average ranks. The
// exact null distribution is enumerated (as a count over sign assignments) for
// n_effective <= 25; larger samples use the tie-corrected normal
// approximation with continuity correction.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                    ZeroHandling zeros = ZeroHandling::kWilcox);

// Chance-corrected agreement of two label sequences.
double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace d2s

#endif  // D2S_EVAL_STATS_H_
