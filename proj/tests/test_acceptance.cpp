// End-to-end acceptance suite. Each test case prints one [PASS]/[FAIL] line
// so the overall status is readable straight from the ctest log.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <vector>

#include "gmcs/ekf.hpp"
#include "gmcs/metrics.hpp"
#include "gmcs/mixture.hpp"
#include "gmcs/model.hpp"
#include "gmcs/rng.hpp"
#include "gmcs/synth.hpp"

using namespace gmcs;
namespace fs = std::filesystem;

namespace {

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
}

struct Dataset {
  GroundTruth truth;
  SynthesisOutput synth;
};

Dataset make_dataset(std::uint64_t seed, const char* experiment) {
  Dataset d;
  d.truth = generate_ground_truth(21, seed);
  ExperimentSpec spec = std::string(experiment) == "exp1" ? exp1_spec(seed)
                                                          : exp2b_spec(seed);
  d.synth = synthesize_constraints(d.truth, spec);
  return d;
}

std::vector<MixtureConstraint> collapsed_all(
    const std::vector<MixtureConstraint>& cs) {
  std::vector<MixtureConstraint> out;
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(collapse_mixture(c));
  return out;
}

// Numeric-integration moments of a 1-D mixture density, independent of the
// closed forms used by the library.
std::pair<double, double> mixture_moments_quadrature(
    const std::vector<GaussianComponent>& comps) {
  double lo = 1e300, hi = -1e300;
  for (const auto& g : comps) {
    const double sd = std::sqrt(g.variance);
    lo = std::min(lo, g.mean - 10.0 * sd);
    hi = std::max(hi, g.mean + 10.0 * sd);
  }
  const int n = 40000;
  const double step = (hi - lo) / n;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double x = lo + k * step;
    double f = 0.0;
    for (const auto& g : comps)
      f += g.weight / std::sqrt(2.0 * M_PI * g.variance) *
           std::exp(-0.5 * (x - g.mean) * (x - g.mean) / g.variance);
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    m0 += w * f;
    m1 += w * f * x;
    m2 += w * f * x * x;
  }
  m0 *= step;
  m1 *= step;
  m2 *= step;
  const double mean = m1 / m0;
  return {mean, m2 / m0 - mean * mean};
}

std::vector<GaussianComponent> random_mixture(rng::Engine& g) {
  const int m = rng::uniform_int(g, 1, 4);
  std::vector<double> weights(static_cast<std::size_t>(m));
  double total = 0.0;
  for (auto& w : weights) {
    w = rng::uniform(g, 0.05, 1.0);
    total += w;
  }
  std::vector<GaussianComponent> comps;
  for (int k = 0; k < m; ++k)
    comps.emplace_back(weights[static_cast<std::size_t>(k)] / total,
                       rng::uniform(g, 0.0, 20.0), rng::uniform(g, 0.05, 9.0));
  return comps;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GMCS_CLI_PATH) + " " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("criterion 1: experiment-1 reproduction") {
  int within_band = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = make_dataset(seed, "exp1");
    SolverConfig cfg;
    cfg.rng_seed = seed;
    const auto result = solve_pipeline(random_start(21, cfg), d.synth.constraints,
                                       cfg, &d.truth.coords);
    const double avg = error_summary(result.state, d.synth.constraints).average;
    const double rmsd =
        rmsd_superposed(result.state.coordinates(), d.truth.coords).rmsd;
    if (avg <= 0.15 && rmsd <= 0.3) ++within_band;
    std::printf("  exp1 seed %llu: avg %.4f SD, rmsd %.4f A\n",
                static_cast<unsigned long long>(seed), avg, rmsd);
  }
  const bool pass = within_band >= 8;
  report(1, pass,
         "multicomponent pipeline reaches <=0.15 SD and <=0.3 A in " +
             std::to_string(within_band) + "/10 seeds (need >=8)");
  CHECK(pass);
}

TEST_CASE("criterion 2: unimodal gap on collapsed constraints") {
  int within_band = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = make_dataset(seed, "exp1");
    SolverConfig cfg;
    cfg.rng_seed = seed;
    cfg.max_cycles = 20;  // the same budget the pipeline's warm phase gets
    const auto result = solve_unimodal(random_start(21, cfg),
                                       collapsed_all(d.synth.constraints), cfg,
                                       &d.truth.coords);
    // score the plateau against the original mixtures: the information the
    // collapse threw away is exactly what this error measures
    const double avg = error_summary(result.state, d.synth.constraints).average;
    const double rmsd =
        rmsd_superposed(result.state.coordinates(), d.truth.coords).rmsd;
    if (avg >= 1.0 && rmsd >= 5.0) ++within_band;
    std::printf("  collapsed seed %llu: avg %.3f SD, rmsd %.2f A\n",
                static_cast<unsigned long long>(seed), avg, rmsd);
  }
  const bool pass = within_band >= 8;
  report(2, pass,
         "collapsed-only solving stays >=1.0 SD and >=5 A off in " +
             std::to_string(within_band) + "/10 seeds (need >=8)");
  CHECK(pass);
}

TEST_CASE("criterion 3: experiment-2B robustness") {
  int within_band = 0;
  double max_weight_fraction = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = make_dataset(seed, "exp2b");
    SolverConfig cfg;
    cfg.rng_seed = seed;
    const auto result = solve_pipeline(random_start(21, cfg), d.synth.constraints,
                                       cfg, &d.truth.coords);
    const double avg = error_summary(result.state, d.synth.constraints).average;
    if (avg <= 0.15) ++within_band;

    // share of multi-component constraints whose real component carries the
    // weight majority -- the reading under which a 0.3 floor gives the
    // reported ~30% minority rate and a 0.1 floor gives ~half
    int majority = 0, multimodal = 0;
    for (std::size_t k = 0; k < d.synth.constraints.size(); ++k) {
      const auto& c = d.synth.constraints[k];
      if (c.components.size() < 2) continue;
      ++multimodal;
      if (c.components[static_cast<std::size_t>(d.synth.answer_key[k])].weight >=
          0.5)
        ++majority;
    }
    max_weight_fraction +=
        static_cast<double>(majority) / static_cast<double>(multimodal);
    std::printf("  exp2b seed %llu: avg %.4f SD\n",
                static_cast<unsigned long long>(seed), avg);
  }
  max_weight_fraction /= 10.0;
  const bool frac_ok = max_weight_fraction >= 0.4 && max_weight_fraction <= 0.6;
  const bool pass = within_band >= 7 && frac_ok;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "converges to <=0.15 SD in %d/10 seeds (need >=7); "
                "real-majority fraction %.3f (need [0.4, 0.6])",
                within_band, max_weight_fraction);
  report(3, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 4: exact-data convergence") {
  int within_band = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto truth = generate_ground_truth(21, seed);
    const auto cs = exact_constraints(truth, 1e-4);
    SolverConfig cfg;
    cfg.rng_seed = seed;
    cfg.reheat_always = true;  // exact data needs a mobile covariance each cycle
    const auto result =
        solve_unimodal(random_start(21, cfg), cs, cfg, &truth.coords);
    const double rmsd =
        rmsd_superposed(result.state.coordinates(), truth.coords).rmsd;
    if (rmsd <= 0.1) ++within_band;
    std::printf("  exact seed %llu: rmsd %.5f A\n",
                static_cast<unsigned long long>(seed), rmsd);
  }
  const bool pass = within_band >= 9;
  report(4, pass,
         "210 exact distances pin the structure to <=0.1 A in " +
             std::to_string(within_band) + "/10 seeds (need >=9)");
  CHECK(pass);
}

TEST_CASE("criterion 5: kalman oracle equivalence") {
  bool pass = true;

  auto g = rng::make_engine(101, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const double prior_mean = rng::uniform(g, -10, 10);
    const double prior_var = rng::uniform(g, 0.1, 20);
    const double z = rng::uniform(g, -10, 10);
    const double r = rng::uniform(g, 0.05, 5);

    StateEstimate s;
    s.n_points = 1;
    s.mean = Vector::Zero(3);
    s.mean(0) = prior_mean;
    s.cov = Matrix::Identity(3, 3);
    s.cov(0, 0) = prior_var;
    Matrix H = Matrix::Zero(1, 3);
    H(0, 0) = 1.0;
    Vector innovation(1), noise(1);
    innovation << z - prior_mean;
    noise << r;
    const auto post = gaussian_update(s, H, innovation, noise);

    const double expect_var = 1.0 / (1.0 / prior_var + 1.0 / r);
    const double expect_mean = expect_var * (prior_mean / prior_var + z / r);
    if (std::abs(post.mean(0) - expect_mean) > 1e-10 * std::abs(expect_mean) ||
        std::abs(post.cov(0, 0) - expect_var) > 1e-10 * expect_var)
      pass = false;
  }

  // two points on the x-axis, tight distance constraint, vs. a dense 2-D
  // quadrature of the exact posterior over the two x-coordinates
  auto s = make_state({{0, 0, 0}, {4, 0, 0}}, 1.0);
  MixtureConstraint c;
  c.i = 0;
  c.j = 1;
  const double z = 5.0, r = 0.01;
  c.components.emplace_back(1.0, z, r);
  const auto post = kalman_update(s, {c});

  const int n = 800;
  const double half = 4.0;
  double m0 = 0.0, mx0 = 0.0, mx1 = 0.0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      const double x0 = -half + 2 * half * a / n;
      const double x1 = 4.0 - half + 2 * half * b / n;
      const double density =
          std::exp(-0.5 * (x0 * x0 + (x1 - 4.0) * (x1 - 4.0))) *
          std::exp(-0.5 * std::pow(std::abs(x1 - x0) - z, 2) / r);
      m0 += density;
      mx0 += density * x0;
      mx1 += density * x1;
    }
  const Eigen::Vector2d quad_mean(mx0 / m0, mx1 / m0);
  const Eigen::Vector2d ekf_mean(post.mean(0), post.mean(3));
  const double rel = (ekf_mean - quad_mean).norm() / quad_mean.norm();
  if (rel >= 0.02) pass = false;

  char buf[120];
  std::snprintf(buf, sizeof buf,
                "scalar conjugate form to 1e-10; quadrature posterior mean "
                "within %.3f%% (need <2%%)",
                100.0 * rel);
  report(5, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 6: moment-matching oracle equivalence") {
  bool pass = true;
  auto g = rng::make_engine(202, 0);

  // collapse vs. numeric integration
  for (int trial = 0; trial < 100; ++trial) {
    MixtureConstraint c;
    c.i = 0;
    c.j = 1;
    c.components = random_mixture(g);
    const auto flat = collapse_mixture(c);
    const auto [q_mean, q_var] = mixture_moments_quadrature(c.components);
    if (std::abs(flat.components[0].mean - q_mean) >
            1e-6 * std::max(1.0, std::abs(q_mean)) ||
        std::abs(flat.components[0].variance - q_var) > 1e-6 * q_var)
      pass = false;
  }

  // recombine vs. an independently coded moment accumulation
  for (int trial = 0; trial < 100; ++trial) {
    const int k = rng::uniform_int(g, 1, 5);
    std::vector<StateEstimate> states;
    std::vector<double> weights(static_cast<std::size_t>(k));
    double total = 0.0;
    for (auto& w : weights) {
      w = rng::uniform(g, 0.05, 1.0);
      total += w;
    }
    for (auto& w : weights) w /= total;
    for (int b = 0; b < k; ++b) {
      StateEstimate s;
      s.n_points = 2;
      s.mean = Vector::Zero(6);
      for (int d = 0; d < 6; ++d) s.mean(d) = rng::uniform(g, -5, 5);
      Matrix a = Matrix::Zero(6, 6);
      for (int r = 0; r < 6; ++r)
        for (int col = 0; col < 6; ++col) a(r, col) = rng::uniform(g, -1, 1);
      s.cov = a * a.transpose() + 0.01 * Matrix::Identity(6, 6);
      states.push_back(std::move(s));
    }
    const auto merged = recombine(states, weights);

    // oracle: cov = E[x x^T] - E[x] E[x]^T accumulated per branch
    Vector mean = Vector::Zero(6);
    Matrix second = Matrix::Zero(6, 6);
    for (int b = 0; b < k; ++b) {
      const auto& s = states[static_cast<std::size_t>(b)];
      mean += weights[static_cast<std::size_t>(b)] * s.mean;
      second += weights[static_cast<std::size_t>(b)] *
                (s.cov + s.mean * s.mean.transpose());
    }
    const Matrix cov = second - mean * mean.transpose();
    if ((merged.mean - mean).norm() > 1e-9 || (merged.cov - cov).norm() > 1e-8)
      pass = false;
  }

  // Monte Carlo sanity on the collapsed moments
  for (int trial = 0; trial < 3; ++trial) {
    MixtureConstraint c;
    c.i = 0;
    c.j = 1;
    c.components = random_mixture(g);
    const auto flat = collapse_mixture(c);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < n; ++s) {
      const double u = rng::uniform01(g);
      double acc = 0.0;
      const GaussianComponent* pick = &c.components.back();
      for (const auto& comp : c.components) {
        acc += comp.weight;
        if (u < acc) {
          pick = &comp;
          break;
        }
      }
      const double x = rng::normal(g, pick->mean, std::sqrt(pick->variance));
      sum += x;
      sum2 += x * x;
    }
    const double mc_mean = sum / n;
    const double mc_var = sum2 / n - mc_mean * mc_mean;
    // rough 3-sigma bands: se(mean) = sd/sqrt(n); se(var) bounded by
    // sqrt(3) * var * sqrt(2/n) (mixture kurtosis is modest here)
    const double se_mean = std::sqrt(flat.components[0].variance / n);
    const double se_var =
        std::sqrt(3.0) * flat.components[0].variance * std::sqrt(2.0 / n);
    if (std::abs(mc_mean - flat.components[0].mean) > 3.0 * se_mean ||
        std::abs(mc_var - flat.components[0].variance) > 3.0 * se_var)
      pass = false;
  }

  report(6, pass,
         "collapse/recombine match quadrature, independent accumulation, and "
         "Monte Carlo moments");
  CHECK(pass);
}

TEST_CASE("criterion 7: jacobian finite-difference check") {
  bool pass = true;
  double worst = 0.0;
  auto g = rng::make_engine(303, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng::uniform_int(g, 2, 8);
    Vector mean(3 * n);
    for (int k = 0; k < mean.size(); ++k) mean(k) = rng::uniform(g, -10, 10);
    const int i = rng::uniform_int(g, 0, n - 1);
    int j = rng::uniform_int(g, 0, n - 2);
    if (j >= i) ++j;
    if ((mean.segment<3>(3 * i) - mean.segment<3>(3 * j)).norm() < 0.1) continue;

    const Vector analytic = distance_jacobian(mean, i, j);
    const double eps = 1e-6;
    for (int d = 0; d < mean.size(); ++d) {
      Vector hi = mean, lo = mean;
      hi(d) += eps;
      lo(d) -= eps;
      const double fd = (distance_h(hi, i, j) - distance_h(lo, i, j)) / (2 * eps);
      const double rel = std::abs(analytic(d) - fd) /
                         std::max(1.0, std::abs(fd));
      worst = std::max(worst, rel);
      if (rel >= 1e-5) pass = false;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "analytic vs central differences, worst relative error %.2e "
                "(need <1e-5)", worst);
  report(7, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 8: degeneracy-to-unimodal equivalence") {
  const auto d = make_dataset(1, "exp1");
  std::vector<MixtureConstraint> reduced;
  for (std::size_t k = 0; k < d.synth.constraints.size(); ++k) {
    const auto& real = d.synth.constraints[k].components[static_cast<std::size_t>(
        d.synth.answer_key[k])];
    MixtureConstraint c;
    c.i = d.synth.constraints[k].i;
    c.j = d.synth.constraints[k].j;
    c.components.emplace_back(1.0, real.mean, real.variance);
    reduced.push_back(std::move(c));
  }

  SolverConfig cfg;
  cfg.rng_seed = 1;
  cfg.max_cycles = 12;
  const auto init = random_start(21, cfg);
  const auto uni = solve_unimodal(init, reduced, cfg, &d.truth.coords);
  const auto mc = solve_multicomponent(init, reduced, cfg, &d.truth.coords);

  bool pass = uni.trace.rows.size() == mc.trace.rows.size() &&
              uni.state.mean == mc.state.mean && uni.state.cov == mc.state.cov;
  if (pass)
    for (std::size_t k = 0; k < uni.trace.rows.size(); ++k) {
      const auto& a = uni.trace.rows[k];
      const auto& b = mc.trace.rows[k];
      if (a.cycle != b.cycle || a.avg_error_sd != b.avg_error_sd ||
          a.max_error_sd != b.max_error_sd || a.reheated != b.reheated ||
          a.rmsd_angstrom != b.rmsd_angstrom)
        pass = false;
    }
  report(8, pass,
         "weight-1 mixtures give bit-identical traces and states in both "
         "solvers (" + std::to_string(uni.trace.rows.size()) + " cycles)");
  CHECK(pass);
}

TEST_CASE("criterion 9: invariant suite") {
  bool pass = true;
  std::string failure;

  // full exp1 multicomponent run with the stage log on
  const auto d = make_dataset(2, "exp1");
  SolverConfig cfg;
  cfg.rng_seed = 2;
  cfg.max_cycles = 4;
  cfg.initial_variance = cfg.refine_variance;
  cfg.reheat_always = true;
  const auto result = solve_multicomponent(make_state(d.truth.coords, 1.0),
                                           d.synth.constraints, cfg,
                                           &d.truth.coords, true);
  for (const auto& stage : result.stages) {
    double prior_sum = 0.0, post_sum = 0.0;
    for (double w : stage.prior_weights) prior_sum += w;
    for (double w : stage.posterior_weights) post_sum += w;
    if (std::abs(prior_sum - 1.0) > 1e-9 || std::abs(post_sum - 1.0) > 1e-9) {
      pass = false;
      failure = "stage weights do not sum to 1";
    }
    if (stage.branch_count > cfg.branch_cap) {
      pass = false;
      failure = "branch count exceeds the cap";
    }
  }
  if (result.stages.empty()) {
    pass = false;
    failure = "stage log empty";
  }

  const Matrix& cov = result.state.cov;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    pass = false;
    failure = "final covariance not symmetric";
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    pass = false;
    failure = "final covariance not PSD";
  }

  // manifest replay through the CLI must be bit-exact
  const fs::path tmp = fs::temp_directory_path() /
                       ("gmcs_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);
  const std::string gen = (tmp / "gen").string();
  const std::string run = (tmp / "run").string();
  if (run_cli("generate --experiment exp1 --seed 3 --out " + gen) != 0 ||
      run_cli("solve --mode pipeline --constraints " + gen +
              "/constraints.json --truth " + gen + "/truth.json --seed 3 "
              "--max-cycles 10 --out " + run) != 0) {
    pass = false;
    failure = "cli generate/solve failed";
  } else if (run_cli("replay " + gen + "/manifest.json --out " +
                     (tmp / "gen2").string()) != 0 ||
             run_cli("replay " + run + "/manifest.json --out " +
                     (tmp / "run2").string()) != 0) {
    pass = false;
    failure = "manifest replay did not reproduce the artifacts";
  }
  std::error_code ec;
  fs::remove_all(tmp, ec);

  report(9, pass,
         pass ? "PSD covariance, unit weight sums, capped branches, bit-exact "
                "manifest replay"
              : failure);
  CHECK(pass);
}

TEST_CASE("criterion 10: local-minimum escape") {
  // Run the refinement phase explicitly so its trace is separable from the
  // warm start, then look for the escape signature: the average error rises
  // on some cycle and a later cycle still sets a new minimum.
  int with_pattern = 0;
  int escapes_without_pattern = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = make_dataset(seed, "exp1");
    SolverConfig warm_cfg;
    warm_cfg.rng_seed = seed;
    warm_cfg.max_cycles = 20;
    const auto warm = solve_unimodal(random_start(21, warm_cfg),
                                     collapsed_all(d.synth.constraints),
                                     warm_cfg, &d.truth.coords);
    SolverConfig refine_cfg = warm_cfg;
    refine_cfg.initial_variance = refine_cfg.refine_variance;
    refine_cfg.reheat_always = true;
    const auto mc = solve_multicomponent(reheat(warm.state, refine_cfg),
                                         d.synth.constraints, refine_cfg,
                                         &d.truth.coords);

    const auto& rows = mc.trace.rows;
    bool pattern = false;
    bool escape = false;
    double running_min = rows.empty() ? 0.0 : rows[0].avg_error_sd;
    bool rose = false;
    for (std::size_t t = 1; t < rows.size(); ++t) {
      const double prev = rows[t - 1].avg_error_sd;
      const double cur = rows[t].avg_error_sd;
      if (cur > prev) rose = true;
      if (rose && cur < running_min) pattern = true;
      // a reheat that fired while progress had stalled above threshold is
      // the escape mechanism acting
      if (rows[t].reheated && prev - cur < refine_cfg.convergence_tol &&
          cur > refine_cfg.reheat_threshold)
        escape = true;
      running_min = std::min(running_min, prev);
    }
    if (pattern) ++with_pattern;
    if (!pattern && escape) ++escapes_without_pattern;
    std::printf("  escape seed %llu: pattern=%d escape_reheat=%d\n",
                static_cast<unsigned long long>(seed), pattern ? 1 : 0,
                escape ? 1 : 0);
  }

  if (with_pattern >= 5) {
    report(10, true,
           "rise-then-new-minimum pattern in " + std::to_string(with_pattern) +
               "/10 runs (need >=5)");
    CHECK(with_pattern >= 5);
  } else if (escapes_without_pattern == 0) {
    // qualitative criterion's stated soft-out: traces descend monotonically
    // because the stall-while-hot escape never needed to fire
    report(10, true,
           "pattern in " + std::to_string(with_pattern) +
               "/10 runs; remaining runs never triggered a stall escape "
               "(reported, per the criterion's soft-out)");
    CHECK(escapes_without_pattern == 0);
  } else {
    report(10, false,
           std::to_string(escapes_without_pattern) +
               " runs escaped without ever setting a new minimum");
    CHECK(escapes_without_pattern == 0);
  }
}
