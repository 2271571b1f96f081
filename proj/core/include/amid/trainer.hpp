#pragma once
// Desk-scale training loops: full-gradient Adam over student logits, the
// 1-D Gaussian toy fit, and token-level tabular distillation with
// student-generated-output strategies. Every loop is single threaded and
// deterministic per seed; sweeps fan cells out to independent tasks and
// merge by cell order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amid/divergence.hpp"
#include "amid/grad.hpp"
#include "amid/mixture.hpp"
#include "amid/simplex.hpp"

namespace amid {

struct AdamConfig {
  double lr = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int steps = 5000;
};

void validate(const AdamConfig& config);

// Plain Adam with bias correction. step() applies one update in place.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, const AdamConfig& config);
  void step(std::span<const double> grad, std::span<double> params);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
};

// Gradient entries below this magnitude are treated as zero inside training
// loops: central differences cannot resolve anything smaller in double
// precision, and Adam would otherwise rescale pure rounding noise into
// full-size steps and random-walk away from an optimum it already reached.
inline constexpr double kGradNoiseFloor = 1e-9;

struct FitRecord {
  int step{};
  double loss{};
  double tv{};
};

struct FitResult {
  std::vector<FitRecord> trajectory;  // one record per step, final state last
  std::vector<double> final_theta;
  bool diverged{};
  std::string failure;  // non-empty when diverged or the gradient failed
  int steps_run{};
};

// Full-gradient Adam on the assistant-mixture loss over student logits.
// Teacher-side losses use the analytic gradient, student-side central
// differences. A non-finite loss stops the run and is reported in-place,
// never thrown. stop_tv > 0 enables early exit once TV(p, q) drops below it.
FitResult fit_simplex(const LogCategorical& p, const StudentLogits& theta0,
                      const AlphaLambda& params, const FGenerator& gen,
                      Direction direction, const AdamConfig& opt,
                      double stop_tv = 0.0);

struct ToyStudent1D {
  double mu{};
  double log_sigma{};
};

struct GridSpec {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n = 2048;
};

struct ToyRecord {
  int step{};
  double loss{};
  double mu{};
  double sigma{};
};

struct ToyResult {
  ToyStudent1D final_student{};
  std::vector<ToyRecord> trajectory;
  bool diverged{};
  std::string failure;
};

// Fits a single Gaussian student against a mixture teacher by minimizing
// the quadrature KL from the teacher to the alpha-mixture on the grid.
// Gradients over (mu, log sigma) are central differences with step 1e-5.
ToyResult toy_gaussian_fit(const GaussianMixture1D& teacher,
                           const ToyStudent1D& init, const AlphaLambda& params,
                           const GridSpec& grid, const AdamConfig& opt);

// A toy order-1 autoregressive model: a start distribution plus one
// transition row per token, all stored as logits.
struct TabularLM {
  std::size_t vocab_size{};
  std::size_t max_len{};
  std::vector<double> start_logits;       // V entries
  std::vector<double> transition_logits;  // V*V entries, row major

  LogCategorical conditional(std::size_t context_row) const;
  static constexpr std::size_t kStartRow = 0;
  std::size_t rows() const { return vocab_size + 1; }
};

void validate(const TabularLM& model);
TabularLM uniform_tabular_lm(std::size_t vocab_size, std::size_t max_len);
// Rows drawn from Dirichlet(0.5); reproducible and non-degenerate, with some
// near-zero entries to exercise stability.
TabularLM random_tabular_lm(std::size_t vocab_size, std::size_t max_len,
                            std::uint64_t seed);

// Ancestral sampling: y_1 from the start row, y_{l+1} from the transition
// row of y_l. Deterministic per seed.
std::vector<std::vector<std::size_t>> generate(const TabularLM& model,
                                               std::uint64_t seed,
                                               std::size_t count,
                                               std::size_t len);

struct SGOStrategy {
  enum class Kind { kFixed, kOnPolicy, kMixed, kAdaptiveOffPolicy };
  Kind kind = Kind::kOnPolicy;
  double mix_prob = 0.5;          // Mixed: probability of a teacher sequence
  std::size_t buffer_size = 256;  // AdaptiveOffPolicy replay buffer
  int refresh_interval = 100;     // AdaptiveOffPolicy: full refresh period

  static std::optional<SGOStrategy> parse(std::string_view name);
  std::string name() const;
};

struct DistillRecord {
  int step{};
  double loss{};
  double mean_tv{};  // mean conditional TV over contexts visited so far
};

struct DistillResult {
  TabularLM student;
  std::vector<DistillRecord> trajectory;
  bool diverged{};
  std::string failure;
};

// Token-level distillation: each step draws a batch of sequences per the
// strategy, sums the per-position assistant-mixture loss along each
// sequence, and applies one Adam update to all student logit rows.
DistillResult distill_tabular(const TabularLM& teacher,
                              const TabularLM& student0,
                              const SGOStrategy& strategy,
                              const AlphaLambda& params, const FGenerator& gen,
                              Direction direction, const AdamConfig& opt,
                              std::size_t batch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweep over (divergence, direction, alpha, lambda) cells of fit_simplex.

struct SweepSpec {
  std::vector<std::string> divergences{"kl"};
  std::vector<Direction> directions{Direction::kTeacher, Direction::kStudent};
  std::vector<double> alphas{-5.0, -1.0, 0.0, 0.5};
  std::vector<double> lambdas{0.1, 0.5, 0.9};
  std::size_t k = 10;
  int teachers_per_cell = 5;
  AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 5000};
  double tv_threshold = 1e-3;
  std::uint64_t seed = 1;
  bool parallel = true;
};

struct SweepCellResult {
  std::string divergence;
  Direction direction{};
  double alpha{};
  double lambda{};
  // Worst case over the cell's teachers.
  double final_loss{};
  double final_tv{};
  int steps_to_threshold{};  // -1 when some teacher never got there
  bool stable{};
  std::string failure;  // first failure reason, if any
};

// Runs every cell on teachers_per_cell seeded teachers. Cells pairing the
// rkl generator with alpha >= 1 draw teachers carrying several extreme
// low-probability entries; with the support of the mixture collapsing to
// (nearly) the teacher support there, the expectation that drives the
// gradient goes blind to the student's excess mass and the fit stalls.
// Those are the configurations expected to come back flagged unstable.
std::vector<SweepCellResult> run_fit_sweep(const SweepSpec& spec);

}  // namespace amid
