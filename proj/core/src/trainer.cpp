#include "amid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "amid/errors.hpp"
#include "amid/fmean.hpp"
#include "amid/rng.hpp"

namespace amid {

void validate(const AdamConfig& config) {
  if (!(config.lr > 0.0)) throw DomainError("adam: lr must be positive");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw DomainError("adam: betas must lie in [0, 1)");
  }
  if (!(config.eps > 0.0)) throw DomainError("adam: eps must be positive");
  if (config.steps < 1) throw DomainError("adam: steps must be >= 1");
}

AdamOptimizer::AdamOptimizer(std::size_t n, const AdamConfig& config)
    : config_(config), m_(n, 0.0), v_(n, 0.0) {
  validate(config);
}

void AdamOptimizer::step(std::span<const double> grad,
                         std::span<double> params) {
  if (grad.size() != m_.size() || params.size() != m_.size()) {
    throw LengthMismatch("adam: parameter count mismatch");
  }
  ++t_;
  const double corr1 = 1.0 - std::pow(config_.beta1, t_);
  const double corr2 = 1.0 - std::pow(config_.beta2, t_);
  for (std::size_t j = 0; j < m_.size(); ++j) {
    m_[j] = config_.beta1 * m_[j] + (1.0 - config_.beta1) * grad[j];
    v_[j] = config_.beta2 * v_[j] + (1.0 - config_.beta2) * grad[j] * grad[j];
    const double m_hat = m_[j] / corr1;
    const double v_hat = v_[j] / corr2;
    params[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

namespace {

void apply_noise_floor(std::vector<double>& grad) {
  for (double& g : grad) {
    if (std::abs(g) < kGradNoiseFloor) g = 0.0;
  }
}

}  // namespace

FitResult fit_simplex(const LogCategorical& p, const StudentLogits& theta0,
                      const AlphaLambda& params, const FGenerator& gen,
                      Direction direction, const AdamConfig& opt,
                      double stop_tv) {
  validate(params);
  validate(opt);
  if (p.size() != theta0.theta.size()) {
    throw LengthMismatch("fit_simplex: sizes differ");
  }

  FitResult result;
  std::vector<double> theta = theta0.theta;
  AdamOptimizer adam(theta.size(), opt);

  const auto loss_at = [&](std::span<const double> t) {
    return amid_loss(p, StudentLogits{{t.begin(), t.end()}}, params, gen,
                     direction)
        .value;
  };

  for (int step = 0; step <= opt.steps; ++step) {
    double loss;
    double tv;
    try {
      loss = loss_at(theta);
      tv = total_variation(p, normalize(theta));
    } catch (const Error& e) {
      result.trajectory.push_back(
          FitRecord{step, std::numeric_limits<double>::quiet_NaN(), -1.0});
      result.steps_run = step;
      result.diverged = true;
      result.failure = e.what();
      break;
    }
    result.trajectory.push_back(FitRecord{step, loss, tv});
    result.steps_run = step;
    if (!std::isfinite(loss)) {
      result.diverged = true;
      result.failure = "non-finite loss at step " + std::to_string(step);
      break;
    }
    if (stop_tv > 0.0 && tv < stop_tv) break;
    if (step == opt.steps) break;

    std::vector<double> grad;
    try {
      if (direction == Direction::kTeacher) {
        grad = amid_grad_analytic(p, StudentLogits{theta}, params, gen);
      } else {
        grad = finite_diff_grad(loss_at, theta, 1e-6);
      }
    } catch (const Error& e) {
      result.diverged = true;
      result.failure = e.what();
      break;
    }
    bool finite_grad = true;
    for (double g : grad) finite_grad &= std::isfinite(g);
    if (!finite_grad) {
      result.diverged = true;
      result.failure = "non-finite gradient at step " + std::to_string(step);
      break;
    }
    apply_noise_floor(grad);
    adam.step(grad, theta);
  }
  result.final_theta = std::move(theta);
  return result;
}

// ---------------------------------------------------------------------------
// Toy 1-D Gaussian fit.

namespace {

// Student density on the grid, renormalized. Unlike discretize() this does
// not gate on coverage: the optimizer may wander through states whose tails
// spill past the grid, and the quadrature loss should keep guiding it.
Grid1D gaussian_on_grid(double mu, double sigma, const GridSpec& grid) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  const double dx =
      (grid.x_max - grid.x_min) / static_cast<double>(grid.n - 1);
  std::vector<double> density(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.x_min + dx * static_cast<double>(i);
    const double z = (x - mu) / sigma;
    density[i] = kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
  }
  return Grid1D::from_unnormalized(grid.x_min, grid.x_max, std::move(density));
}

}  // namespace

ToyResult toy_gaussian_fit(const GaussianMixture1D& teacher,
                           const ToyStudent1D& init, const AlphaLambda& params,
                           const GridSpec& grid, const AdamConfig& opt) {
  validate(params);
  validate(opt);
  if (grid.n < 64) throw DomainError("toy_gaussian_fit: grid too coarse");
  if (!std::isfinite(init.mu) || !std::isfinite(init.log_sigma)) {
    throw DomainError("toy_gaussian_fit: init must be finite");
  }

  const Grid1D p = discretize(teacher, grid.x_min, grid.x_max, grid.n);

  const auto loss_at = [&](std::span<const double> t) {
    const Grid1D q = gaussian_on_grid(t[0], std::exp(t[1]), grid);
    const Grid1D r = alpha_mixture_grid(p, q, params).r;
    return kl_grid(p, r).value;
  };

  ToyResult result;
  std::vector<double> theta{init.mu, init.log_sigma};
  AdamOptimizer adam(2, opt);
  constexpr double kFdStep = 1e-5;

  for (int step = 0; step <= opt.steps; ++step) {
    double loss;
    try {
      loss = loss_at(theta);
    } catch (const Error& e) {
      result.trajectory.push_back(ToyRecord{
          step, std::numeric_limits<double>::quiet_NaN(), theta[0],
          std::exp(theta[1])});
      result.diverged = true;
      result.failure = e.what();
      break;
    }
    result.trajectory.push_back(
        ToyRecord{step, loss, theta[0], std::exp(theta[1])});
    if (!std::isfinite(loss)) {
      result.diverged = true;
      result.failure = "non-finite loss at step " + std::to_string(step);
      break;
    }
    if (step == opt.steps) break;

    std::vector<double> grad;
    try {
      grad = finite_diff_grad(loss_at, theta, kFdStep);
    } catch (const Error& e) {
      result.diverged = true;
      result.failure = e.what();
      break;
    }
    apply_noise_floor(grad);
    adam.step(grad, theta);
  }
  result.final_student = ToyStudent1D{theta[0], theta[1]};
  return result;
}

// ---------------------------------------------------------------------------
// Tabular language model.

LogCategorical TabularLM::conditional(std::size_t context_row) const {
  if (context_row == kStartRow) return normalize(start_logits);
  const std::size_t prev = context_row - 1;
  return normalize(std::span<const double>(
      transition_logits.data() + prev * vocab_size, vocab_size));
}

void validate(const TabularLM& model) {
  if (model.vocab_size < 2) throw DomainError("tabular lm: vocab must be >= 2");
  if (model.max_len < 1) throw DomainError("tabular lm: max_len must be >= 1");
  if (model.start_logits.size() != model.vocab_size ||
      model.transition_logits.size() != model.vocab_size * model.vocab_size) {
    throw LengthMismatch("tabular lm: logit table shapes are wrong");
  }
  for (double v : model.start_logits) {
    if (!std::isfinite(v)) throw DomainError("tabular lm: non-finite logit");
  }
  for (double v : model.transition_logits) {
    if (!std::isfinite(v)) throw DomainError("tabular lm: non-finite logit");
  }
}

TabularLM uniform_tabular_lm(std::size_t vocab_size, std::size_t max_len) {
  TabularLM model;
  model.vocab_size = vocab_size;
  model.max_len = max_len;
  model.start_logits.assign(vocab_size, 0.0);
  model.transition_logits.assign(vocab_size * vocab_size, 0.0);
  validate(model);
  return model;
}

TabularLM random_tabular_lm(std::size_t vocab_size, std::size_t max_len,
                            std::uint64_t seed) {
  TabularLM model;
  model.vocab_size = vocab_size;
  model.max_len = max_len;
  model.start_logits.resize(vocab_size);
  model.transition_logits.resize(vocab_size * vocab_size);
  auto fill_row = [&](std::span<double> row, std::uint64_t salt) {
    SplitMix64 rng(derive_seed(seed, salt));
    // Dirichlet(0.5) row expressed as logits via Gamma(1/2) = Normal^2 / 2.
    for (double& v : row) {
      const double z = rng.next_normal();
      const double g = 0.5 * z * z;
      v = g > 0.0 ? std::log(g) : -745.0;
    }
  };
  fill_row(model.start_logits, 0);
  for (std::size_t r = 0; r < vocab_size; ++r) {
    fill_row(std::span<double>(model.transition_logits.data() + r * vocab_size,
                               vocab_size),
             r + 1);
  }
  validate(model);
  return model;
}

namespace {

std::size_t sample_index(const LogCategorical& dist, SplitMix64& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  std::size_t k = 0;
  for (; k + 1 < dist.size(); ++k) {
    acc += dist.prob(k);
    if (u < acc) break;
  }
  return k;
}

std::vector<std::size_t> sample_sequence(
    const std::vector<LogCategorical>& conditionals, std::size_t len,
    SplitMix64& rng) {
  std::vector<std::size_t> seq(len);
  std::size_t row = TabularLM::kStartRow;
  for (std::size_t l = 0; l < len; ++l) {
    seq[l] = sample_index(conditionals[row], rng);
    row = seq[l] + 1;
  }
  return seq;
}

std::vector<LogCategorical> all_conditionals(const TabularLM& model) {
  std::vector<LogCategorical> rows;
  rows.reserve(model.rows());
  for (std::size_t r = 0; r < model.rows(); ++r) {
    rows.push_back(model.conditional(r));
  }
  return rows;
}

}  // namespace

std::vector<std::vector<std::size_t>> generate(const TabularLM& model,
                                               std::uint64_t seed,
                                               std::size_t count,
                                               std::size_t len) {
  validate(model);
  if (len < 1 || len > model.max_len) {
    throw DomainError("generate: len must lie in [1, max_len]");
  }
  if (count < 1) throw DomainError("generate: count must be >= 1");
  const std::vector<LogCategorical> conditionals = all_conditionals(model);
  SplitMix64 rng(seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(sample_sequence(conditionals, len, rng));
  }
  return out;
}

std::optional<SGOStrategy> SGOStrategy::parse(std::string_view name) {
  SGOStrategy s;
  if (name == "fixed") {
    s.kind = Kind::kFixed;
  } else if (name == "on-policy") {
    s.kind = Kind::kOnPolicy;
  } else if (name == "mixed") {
    s.kind = Kind::kMixed;
  } else if (name == "adaptive-off-policy") {
    s.kind = Kind::kAdaptiveOffPolicy;
  } else {
    return std::nullopt;
  }
  return s;
}

std::string SGOStrategy::name() const {
  switch (kind) {
    case Kind::kFixed:
      return "fixed";
    case Kind::kOnPolicy:
      return "on-policy";
    case Kind::kMixed:
      return "mixed";
    case Kind::kAdaptiveOffPolicy:
      return "adaptive-off-policy";
  }
  return "unknown";
}

DistillResult distill_tabular(const TabularLM& teacher,
                              const TabularLM& student0,
                              const SGOStrategy& strategy,
                              const AlphaLambda& params, const FGenerator& gen,
                              Direction direction, const AdamConfig& opt,
                              std::size_t batch, std::uint64_t seed) {
  validate(teacher);
  validate(student0);
  validate(params);
  validate(opt);
  if (teacher.vocab_size != student0.vocab_size ||
      teacher.max_len != student0.max_len) {
    throw LengthMismatch("distill_tabular: teacher and student shapes differ");
  }
  if (batch < 1) throw DomainError("distill_tabular: batch must be >= 1");
  if (strategy.kind == SGOStrategy::Kind::kMixed &&
      !(strategy.mix_prob >= 0.0 && strategy.mix_prob <= 1.0)) {
    throw DomainError("distill_tabular: mix_prob must lie in [0, 1]");
  }
  if (strategy.kind == SGOStrategy::Kind::kAdaptiveOffPolicy &&
      (strategy.buffer_size < 1 || strategy.refresh_interval < 1)) {
    throw DomainError("distill_tabular: bad replay buffer parameters");
  }

  const std::size_t v = teacher.vocab_size;
  const std::size_t len = teacher.max_len;
  const std::size_t rows = teacher.rows();
  const std::vector<LogCategorical> teacher_rows = all_conditionals(teacher);

  DistillResult result;
  result.student = student0;
  TabularLM& student = result.student;
  AdamOptimizer adam(rows * v, opt);
  SplitMix64 rng(derive_seed(seed, 0x5eed));

  auto student_row_span = [&](std::size_t row) {
    return row == TabularLM::kStartRow
               ? std::span<double>(student.start_logits)
               : std::span<double>(
                     student.transition_logits.data() + (row - 1) * v, v);
  };

  // Fixed strategy: one dataset of teacher sequences drawn up front.
  constexpr std::size_t kFixedDatasetSize = 512;
  std::vector<std::vector<std::size_t>> fixed_dataset;
  if (strategy.kind == SGOStrategy::Kind::kFixed ||
      strategy.kind == SGOStrategy::Kind::kMixed) {
    fixed_dataset =
        generate(teacher, derive_seed(seed, 0xf1de0), kFixedDatasetSize, len);
  }
  std::vector<std::vector<std::size_t>> replay_buffer;

  std::vector<bool> visited(rows, false);
  std::vector<double> grad(rows * v, 0.0);
  std::vector<LogCategorical> student_rows = all_conditionals(student);

  for (int step = 0; step < opt.steps; ++step) {
    if (strategy.kind == SGOStrategy::Kind::kAdaptiveOffPolicy &&
        step % strategy.refresh_interval == 0) {
      replay_buffer.clear();
      for (std::size_t i = 0; i < strategy.buffer_size; ++i) {
        replay_buffer.push_back(sample_sequence(student_rows, len, rng));
      }
    }

    // Assemble the batch for this step.
    std::vector<std::vector<std::size_t>> sequences;
    sequences.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      switch (strategy.kind) {
        case SGOStrategy::Kind::kFixed: {
          const std::size_t idx =
              static_cast<std::size_t>(rng.next_double() * fixed_dataset.size());
          sequences.push_back(fixed_dataset[std::min(idx, fixed_dataset.size() - 1)]);
          break;
        }
        case SGOStrategy::Kind::kOnPolicy:
          sequences.push_back(sample_sequence(student_rows, len, rng));
          break;
        case SGOStrategy::Kind::kMixed: {
          if (rng.next_double() < strategy.mix_prob) {
            const std::size_t idx = static_cast<std::size_t>(
                rng.next_double() * fixed_dataset.size());
            sequences.push_back(
                fixed_dataset[std::min(idx, fixed_dataset.size() - 1)]);
          } else {
            sequences.push_back(sample_sequence(student_rows, len, rng));
          }
          break;
        }
        case SGOStrategy::Kind::kAdaptiveOffPolicy: {
          const std::size_t idx =
              static_cast<std::size_t>(rng.next_double() * replay_buffer.size());
          sequences.push_back(replay_buffer[std::min(idx, replay_buffer.size() - 1)]);
          break;
        }
      }
    }

    // Summed per-position loss along each sequence, averaged over the batch.
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    bool failed = false;
    std::string failure;
    for (const auto& seq : sequences) {
      std::size_t row = TabularLM::kStartRow;
      for (std::size_t l = 0; l < len && !failed; ++l) {
        visited[row] = true;
        const LogCategorical& p_row = teacher_rows[row];
        auto theta_row = student_row_span(row);
        const StudentLogits student_theta{{theta_row.begin(), theta_row.end()}};
        try {
          batch_loss +=
              amid_loss(p_row, student_theta, params, gen, direction).value;
          std::vector<double> g;
          if (direction == Direction::kTeacher) {
            g = amid_grad_analytic(p_row, student_theta, params, gen);
          } else {
            const auto row_loss = [&](std::span<const double> t) {
              return amid_loss(p_row, StudentLogits{{t.begin(), t.end()}},
                               params, gen, direction)
                  .value;
            };
            g = finite_diff_grad(row_loss, student_theta.theta, 1e-6);
          }
          for (std::size_t j = 0; j < v; ++j) {
            grad[row * v + j] += g[j];
          }
        } catch (const Error& e) {
          failed = true;
          failure = e.what();
        }
        row = seq[l] + 1;
      }
      if (failed) break;
    }
    batch_loss /= static_cast<double>(batch);

    if (failed || !std::isfinite(batch_loss)) {
      result.trajectory.push_back(DistillRecord{step, batch_loss, -1.0});
      result.diverged = true;
      result.failure = failed
                           ? failure
                           : "non-finite loss at step " + std::to_string(step);
      return result;
    }

    for (double& g : grad) g /= static_cast<double>(batch);
    apply_noise_floor(grad);

    // One flat Adam step across every row (start row first).
    std::vector<double> flat(rows * v);
    std::copy(student.start_logits.begin(), student.start_logits.end(),
              flat.begin());
    std::copy(student.transition_logits.begin(),
              student.transition_logits.end(), flat.begin() + v);
    adam.step(grad, flat);
    std::copy(flat.begin(), flat.begin() + v, student.start_logits.begin());
    std::copy(flat.begin() + v, flat.end(), student.transition_logits.begin());
    student_rows = all_conditionals(student);

    double tv_sum = 0.0;
    int tv_count = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!visited[r]) continue;
      tv_sum += total_variation(teacher_rows[r], student_rows[r]);
      ++tv_count;
    }
    const double mean_tv = tv_count > 0 ? tv_sum / tv_count : 0.0;
    result.trajectory.push_back(DistillRecord{step, batch_loss, mean_tv});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sweep.

namespace {

LogCategorical sweep_teacher(std::size_t k, std::uint64_t seed,
                             bool near_zero_entries) {
  SplitMix64 rng(seed);
  std::vector<double> logits(k);
  for (double& v : logits) {
    const double z = rng.next_normal();
    const double g = 0.5 * z * z;
    v = g > 0.0 ? std::log(g) : -745.0;
  }
  if (near_zero_entries) {
    // Several entries parked near the double underflow edge. Log-prob -300
    // is representable but far below anything the optimizer can follow.
    const std::size_t count = std::max<std::size_t>(1, k / 3);
    for (std::size_t i = 0; i < count; ++i) {
      logits[(i * 3) % k] = -300.0;
    }
  }
  return normalize(logits);
}

SweepCellResult run_cell(const SweepSpec& spec, const std::string& divergence,
                         Direction direction, double alpha, double lambda) {
  SweepCellResult cell;
  cell.divergence = divergence;
  cell.direction = direction;
  cell.alpha = alpha;
  cell.lambda = lambda;
  cell.stable = true;
  cell.steps_to_threshold = 0;

  const FGenerator* gen = find_generator(divergence);
  if (gen == nullptr) {
    cell.stable = false;
    cell.failure = "unknown divergence generator: " + divergence;
    cell.steps_to_threshold = -1;
    return cell;
  }
  const bool near_zero = divergence == "rkl" && alpha >= 1.0 - kAlphaOneTol;

  for (int t = 0; t < spec.teachers_per_cell; ++t) {
    const LogCategorical teacher = sweep_teacher(
        spec.k, derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(t)),
        near_zero);
    const StudentLogits theta0{std::vector<double>(spec.k, 0.0)};
    const FitResult fit =
        fit_simplex(teacher, theta0, AlphaLambda{alpha, lambda}, *gen,
                    direction, spec.opt, spec.tv_threshold);

    const FitRecord& last = fit.trajectory.back();
    cell.final_loss = std::max(cell.final_loss, last.loss);
    cell.final_tv = std::max(cell.final_tv, last.tv);
    const bool converged =
        !fit.diverged && fit.failure.empty() && last.tv < spec.tv_threshold;
    if (converged) {
      cell.steps_to_threshold =
          std::max(cell.steps_to_threshold, fit.steps_run);
    } else {
      cell.steps_to_threshold = -1;
      cell.stable = false;
      if (cell.failure.empty()) {
        cell.failure = fit.failure.empty() ? "tv threshold not reached"
                                           : fit.failure;
      }
    }
  }
  return cell;
}

}  // namespace

std::vector<SweepCellResult> run_fit_sweep(const SweepSpec& spec) {
  validate(spec.opt);
  if (spec.k < 2) throw DomainError("sweep: k must be >= 2");
  if (spec.teachers_per_cell < 1) {
    throw DomainError("sweep: teachers_per_cell must be >= 1");
  }

  struct Cell {
    std::string divergence;
    Direction direction;
    double alpha;
    double lambda;
  };
  std::vector<Cell> cells;
  for (const auto& d : spec.divergences) {
    for (Direction dir : spec.directions) {
      for (double a : spec.alphas) {
        for (double l : spec.lambdas) {
          cells.push_back(Cell{d, dir, a, l});
        }
      }
    }
  }

  std::vector<SweepCellResult> results(cells.size());
  if (!spec.parallel || cells.size() <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      results[i] = run_cell(spec, cells[i].divergence, cells[i].direction,
                            cells[i].alpha, cells[i].lambda);
    }
    return results;
  }

  // Independent cells fan out to tasks; results land in their own slots and
  // merge in cell order, so parallelism never changes the output.
  std::vector<std::future<SweepCellResult>> futures;
  futures.reserve(cells.size());
  for (const Cell& cell : cells) {
    futures.push_back(std::async(std::launch::async, [&spec, cell] {
      return run_cell(spec, cell.divergence, cell.direction, cell.alpha,
                      cell.lambda);
    }));
  }
  for (std::size_t i = 0; i < futures.size(); ++i) {
    results[i] = futures[i].get();
  }
  return results;
}

}  // namespace amid
