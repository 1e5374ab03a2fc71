#include "gmcs/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "solve_driver.hpp"

namespace gmcs {

namespace {

// Variance of the predicted measurement h(x) under the state covariance,
// floored so the density stays proper. Coincident points have no Jacobian;
// the floor stands in for the (vanishing) predicted variance there.
double predicted_variance(const StateEstimate& state, const MixtureConstraint& c) {
  if (distance_h(state.mean, c.i, c.j) < kDegenerateDistance) return kVarianceFloor;
  const Vector h_row = distance_jacobian(state.mean, c.i, c.j);
  return std::max(h_row.dot(state.cov * h_row), kVarianceFloor);
}

}  // namespace

std::size_t fan_group_size(const std::vector<MixtureConstraint>& pending,
                           std::size_t start, int branch_cap, int batch_size) {
  if (start >= pending.size())
    throw std::invalid_argument("fan_group_size: start past end of list");
  std::size_t taken = 1;  // the first constraint is always taken
  std::size_t product = pending[start].components.size();
  while (start + taken < pending.size() &&
         taken < static_cast<std::size_t>(batch_size)) {
    const std::size_t m = pending[start + taken].components.size();
    if (product * m > static_cast<std::size_t>(branch_cap)) break;
    product *= m;
    ++taken;
  }
  return taken;
}

std::vector<Branch> fan(const std::vector<MixtureConstraint>& group, int branch_cap) {
  if (group.empty()) throw std::invalid_argument("fan: empty group");
  (void)branch_cap;  // the cap shapes group selection; a chosen group fans fully

  std::size_t total = 1;
  for (const auto& c : group) total *= c.components.size();

  std::vector<Branch> branches;
  branches.reserve(total);
  std::vector<int> assignment(group.size(), 0);
  for (std::size_t b = 0; b < total; ++b) {
    Branch br;
    br.assignment = assignment;
    br.prior_weight = 1.0;
    for (std::size_t t = 0; t < group.size(); ++t)
      br.prior_weight *=
          group[t].components[static_cast<std::size_t>(assignment[t])].weight;
    branches.push_back(std::move(br));
    // odometer, last constraint fastest
    for (std::size_t t = group.size(); t-- > 0;) {
      if (++assignment[t] < static_cast<int>(group[t].components.size())) break;
      assignment[t] = 0;
    }
  }
  return branches;
}

double branch_fit_log_likelihood(const StateEstimate& state,
                                 const MixtureConstraint& c, int component_index) {
  if (component_index < 0 ||
      component_index >= static_cast<int>(c.components.size()))
    throw std::invalid_argument("branch_fit_log_likelihood: bad component index");
  const auto& comp = c.components[static_cast<std::size_t>(component_index)];
  const double pred_mean = distance_h(state.mean, c.i, c.j);
  const double pred_var = predicted_variance(state, c);
  const double residual = comp.mean - pred_mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * pred_var) -
         0.5 * residual * residual / pred_var - 0.5 * comp.variance / pred_var;
}

double branch_fit_likelihood(const StateEstimate& state, const MixtureConstraint& c,
                             int component_index) {
  return std::exp(branch_fit_log_likelihood(state, c, component_index));
}

std::vector<double> posterior_weights(const StateEstimate& prior_state,
                                      const std::vector<Branch>& branches,
                                      const std::vector<MixtureConstraint>& group,
                                      bool* underflow_fallback) {
  if (branches.empty()) throw std::invalid_argument("posterior_weights: no branches");
  if (underflow_fallback) *underflow_fallback = false;

  std::vector<double> log_w(branches.size());
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& br = branches[b];
    if (br.assignment.size() != group.size())
      throw std::invalid_argument("posterior_weights: assignment/group mismatch");
    double lw = std::log(br.prior_weight);
    for (std::size_t t = 0; t < group.size(); ++t)
      lw += branch_fit_log_likelihood(prior_state, group[t], br.assignment[t]);
    log_w[b] = lw;
  }

  // below this even the best branch's weight is zero in direct space
  static const double log_underflow = std::log(std::numeric_limits<double>::min());
  const double peak = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(peak) || peak < log_underflow) {
    // every branch underflowed: fall back to (renormalized) prior weights
    if (underflow_fallback) *underflow_fallback = true;
    std::vector<double> w(branches.size());
    double total = 0.0;
    for (std::size_t b = 0; b < branches.size(); ++b) total += branches[b].prior_weight;
    for (std::size_t b = 0; b < branches.size(); ++b)
      w[b] = branches[b].prior_weight / total;
    return w;
  }

  std::vector<double> w(branches.size());
  double total = 0.0;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    w[b] = std::exp(log_w[b] - peak);
    total += w[b];
  }
  for (auto& x : w) x /= total;
  return w;
}

StateEstimate recombine(const std::vector<StateEstimate>& states,
                        const std::vector<double>& weights) {
  if (states.empty() || states.size() != weights.size())
    throw std::invalid_argument("recombine: state/weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("recombine: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("recombine: weights are not normalized");
  for (const auto& s : states)
    if (s.mean.size() != states[0].mean.size())
      throw std::invalid_argument("recombine: dimension mismatch across branches");
  if (states.size() == 1) return states[0];

  StateEstimate out = states[0];
  out.mean = Vector::Zero(states[0].mean.size());
  for (std::size_t b = 0; b < states.size(); ++b)
    out.mean += weights[b] * states[b].mean;
  out.cov = Matrix::Zero(out.mean.size(), out.mean.size());
  for (std::size_t b = 0; b < states.size(); ++b) {
    const Vector d = states[b].mean - out.mean;
    out.cov += weights[b] * (states[b].cov + d * d.transpose());
  }
  symmetrize_psd(out.cov);
  return out;
}

namespace {

// Solve every branch of one fan stage against the stage-entry state. Each
// branch owns a private copy; results land in index order regardless of
// scheduling, so the parallel path is bit-identical to the serial one.
void run_branches(const StateEstimate& stage_state,
                  const std::vector<MixtureConstraint>& group,
                  std::vector<Branch>& branches, int threads,
                  std::vector<std::string>& failures) {
  failures.assign(branches.size(), {});
  auto solve_one = [&](std::size_t b) {
    std::vector<MixtureConstraint> batch;
    batch.reserve(group.size());
    for (std::size_t t = 0; t < group.size(); ++t) {
      const auto& chosen =
          group[t].components[static_cast<std::size_t>(branches[b].assignment[t])];
      MixtureConstraint u;
      u.i = group[t].i;
      u.j = group[t].j;
      u.components.emplace_back(1.0, chosen.mean, chosen.variance);
      batch.push_back(std::move(u));
    }
    try {
      branches[b].state = kalman_update(stage_state, batch);
    } catch (const std::exception& e) {
      branches[b].failed = true;
      failures[b] = e.what();
    }
  };

#ifdef _OPENMP
  if (threads > 1) {
    const auto n = static_cast<std::ptrdiff_t>(branches.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t b = 0; b < n; ++b) solve_one(static_cast<std::size_t>(b));
    return;
  }
#else
  (void)threads;
#endif
  for (std::size_t b = 0; b < branches.size(); ++b) solve_one(b);
}

}  // namespace

MixtureSolveResult solve_multicomponent(const StateEstimate& init,
                                        const std::vector<MixtureConstraint>& constraints,
                                        const SolverConfig& config,
                                        const Coordinates* reference,
                                        bool record_stages) {
  MixtureSolveResult result;
  int cycle = -1;

  auto introduce = [&](const StateEstimate& entering,
                       const std::vector<MixtureConstraint>& ordered) {
    ++cycle;
    StateEstimate stage_state = entering;
    int stage = 0;
    std::size_t pos = 0;
    while (pos < ordered.size()) {
      const std::size_t take =
          fan_group_size(ordered, pos, config.branch_cap, config.batch_size);
      const std::vector<MixtureConstraint> group(
          ordered.begin() + static_cast<std::ptrdiff_t>(pos),
          ordered.begin() + static_cast<std::ptrdiff_t>(pos + take));

      std::vector<Branch> branches = fan(group, config.branch_cap);
      std::vector<std::string> failures;
      run_branches(stage_state, group, branches, config.threads, failures);

      std::vector<Branch> survivors;
      survivors.reserve(branches.size());
      std::string first_failure;
      for (std::size_t b = 0; b < branches.size(); ++b) {
        if (branches[b].failed) {
          if (first_failure.empty()) first_failure = failures[b];
          continue;
        }
        survivors.push_back(std::move(branches[b]));
      }
      if (survivors.empty())
        throw NumericalError("solve_multicomponent: all branches failed at cycle " +
                             std::to_string(cycle) + " stage " +
                             std::to_string(stage) + ": " + first_failure);
      double prior_total = 0.0;
      for (const auto& br : survivors) prior_total += br.prior_weight;
      for (auto& br : survivors) br.prior_weight /= prior_total;

      bool fallback = false;
      const std::vector<double> weights =
          posterior_weights(stage_state, survivors, group, &fallback);

      if (record_stages) {
        StageRecord rec;
        rec.cycle = cycle;
        rec.stage = stage;
        rec.branch_count = static_cast<int>(survivors.size());
        for (const auto& br : survivors) rec.prior_weights.push_back(br.prior_weight);
        rec.posterior_weights = weights;
        rec.underflow_fallback = fallback;
        rec.dropped_branches = static_cast<int>(branches.size() - survivors.size());
        result.stages.push_back(std::move(rec));
      }

      if (survivors.size() == 1) {
        stage_state = std::move(survivors[0].state);
      } else {
        std::vector<StateEstimate> states;
        states.reserve(survivors.size());
        for (auto& br : survivors) states.push_back(std::move(br.state));
        stage_state = recombine(states, weights);
      }
      pos += take;
      ++stage;
    }
    return stage_state;
  };

  SolveResult solved =
      detail::run_cycles(init, constraints, config, reference, introduce);
  result.state = std::move(solved.state);
  result.trace = std::move(solved.trace);
  return result;
}

StateEstimate warm_start(const std::vector<MixtureConstraint>& constraints,
                         const StateEstimate& init, const SolverConfig& config) {
  std::vector<MixtureConstraint> collapsed;
  collapsed.reserve(constraints.size());
  for (const auto& c : constraints) collapsed.push_back(collapse_mixture(c));
  return solve_unimodal(init, collapsed, config).state;
}

MixtureSolveResult solve_pipeline(const StateEstimate& init,
                                  const std::vector<MixtureConstraint>& constraints,
                                  const SolverConfig& config,
                                  const Coordinates* reference,
                                  bool record_stages, int warm_cycles) {
  SolverConfig warm_config = config;
  warm_config.max_cycles =
      warm_cycles > 0 ? warm_cycles : std::max(1, config.max_cycles / 2);

  std::vector<MixtureConstraint> collapsed;
  collapsed.reserve(constraints.size());
  for (const auto& c : constraints) collapsed.push_back(collapse_mixture(c));
  const SolveResult warm = solve_unimodal(init, collapsed, warm_config, reference);

  SolverConfig refine_config = config;
  refine_config.max_cycles = std::max(1, config.max_cycles - warm_config.max_cycles);
  refine_config.initial_variance = config.refine_variance;
  refine_config.reheat_always = true;

  MixtureSolveResult result =
      solve_multicomponent(reheat(warm.state, refine_config), constraints,
                           refine_config, reference, record_stages);

  ConvergenceTrace trace = warm.trace;
  const int offset = static_cast<int>(trace.rows.size());
  for (auto row : result.trace.rows) {
    row.cycle += offset;
    trace.rows.push_back(row);
  }
  for (auto& rec : result.stages) rec.cycle += offset;
  result.trace = std::move(trace);
  return result;
}

}  // namespace gmcs
