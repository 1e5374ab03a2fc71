// Command-line harness: generate experiment data sets, solve them, evaluate
// results against ground truth, and replay recorded runs.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gmcs/ekf.hpp"
#include "gmcs/io.hpp"
#include "gmcs/metrics.hpp"
#include "gmcs/mixture.hpp"
#include "gmcs/model.hpp"
#include "gmcs/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestSchema = "gmcs-manifest-v1";

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GMCS_SEED")) return std::stoull(env);
  return 1;
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw gmcs::io::IoError("cannot create output directory: " + dir.string());
}

struct GenerateParams {
  std::string experiment = "exp1";
  std::string out_dir = ".";
  std::uint64_t seed = default_seed();
  int n_points = 21;
  gmcs::ExperimentSpec custom;  // used when experiment == "custom"
};

struct SolveParams {
  std::string mode = "pipeline";
  std::string constraints_path;
  std::string out_dir = ".";
  std::string init_path;   // optional starting structure
  std::string truth_path;  // optional, enables RMSD in the trace
  bool stage_log = false;
  int warm_cycles = -1;  // pipeline only; -1 means max_cycles / 2
  gmcs::SolverConfig config;
};

gmcs::ExperimentSpec spec_for(const GenerateParams& p) {
  if (p.experiment == "exp1") return gmcs::exp1_spec(p.seed);
  if (p.experiment == "exp2a") return gmcs::exp2a_spec(p.seed);
  if (p.experiment == "exp2b") return gmcs::exp2b_spec(p.seed);
  if (p.experiment == "custom") {
    gmcs::ExperimentSpec s = p.custom;
    s.seed = p.seed;
    return s;
  }
  throw std::invalid_argument("unknown experiment: " + p.experiment);
}

json spec_to_json(const gmcs::ExperimentSpec& s) {
  return {{"real_weight_min", s.real_weight_min},
          {"real_weight_max", s.real_weight_max},
          {"real_variance", s.real_variance},
          {"noise_count_min", s.noise_count_min},
          {"noise_count_max", s.noise_count_max},
          {"noise_mean_lo", s.noise_mean_lo},
          {"noise_mean_hi", s.noise_mean_hi},
          {"noise_variance_lo", s.noise_variance_lo},
          {"noise_variance_hi", s.noise_variance_hi},
          {"seed", s.seed}};
}

gmcs::ExperimentSpec spec_from_json(const json& j) {
  gmcs::ExperimentSpec s;
  s.real_weight_min = j.at("real_weight_min").get<double>();
  s.real_weight_max = j.at("real_weight_max").get<double>();
  s.real_variance = j.at("real_variance").get<double>();
  s.noise_count_min = j.at("noise_count_min").get<int>();
  s.noise_count_max = j.at("noise_count_max").get<int>();
  s.noise_mean_lo = j.at("noise_mean_lo").get<double>();
  s.noise_mean_hi = j.at("noise_mean_hi").get<double>();
  s.noise_variance_lo = j.at("noise_variance_lo").get<double>();
  s.noise_variance_hi = j.at("noise_variance_hi").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

json config_to_json(const gmcs::SolverConfig& c) {
  return {{"batch_size", c.batch_size},
          {"branch_cap", c.branch_cap},
          {"max_cycles", c.max_cycles},
          {"convergence_tol", c.convergence_tol},
          {"reheat_threshold", c.reheat_threshold},
          {"initial_variance", c.initial_variance},
          {"refine_variance", c.refine_variance},
          {"coordinate_range", c.coordinate_range},
          {"rng_seed", c.rng_seed},
          {"threads", c.threads},
          {"reheat_always", c.reheat_always}};
}

gmcs::SolverConfig config_from_json(const json& j) {
  gmcs::SolverConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.branch_cap = j.at("branch_cap").get<int>();
  c.max_cycles = j.at("max_cycles").get<int>();
  c.convergence_tol = j.at("convergence_tol").get<double>();
  c.reheat_threshold = j.at("reheat_threshold").get<double>();
  c.initial_variance = j.at("initial_variance").get<double>();
  c.refine_variance = j.at("refine_variance").get<double>();
  c.coordinate_range = j.at("coordinate_range").get<double>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.reheat_always = j.at("reheat_always").get<bool>();
  return c;
}

void add_checksums(json& manifest, const char* section, const fs::path& dir,
                   const std::vector<std::string>& files) {
  for (const auto& f : files)
    manifest[section][f] = gmcs::io::file_checksum(dir / f);
}

void run_generate(const GenerateParams& p) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path dir(p.out_dir);
  ensure_output_dir(dir);

  const gmcs::ExperimentSpec spec = spec_for(p);
  const gmcs::GroundTruth truth = gmcs::generate_ground_truth(p.n_points, p.seed);
  const gmcs::SynthesisOutput synth = gmcs::synthesize_constraints(truth, spec);

  std::vector<gmcs::MixtureConstraint> collapsed;
  collapsed.reserve(synth.constraints.size());
  for (const auto& c : synth.constraints)
    collapsed.push_back(gmcs::collapse_mixture(c));

  gmcs::io::write_json(dir / "truth.json",
                       gmcs::io::structure_to_json(
                           gmcs::make_state(truth.coords, 0.0), false));
  gmcs::io::write_json(dir / "constraints.json",
                       gmcs::io::constraints_to_json(synth.constraints));
  gmcs::io::write_json(dir / "collapsed.json",
                       gmcs::io::constraints_to_json(collapsed));
  gmcs::io::write_json(dir / "answer_key.json",
                       gmcs::io::answer_key_to_json(synth.answer_key));

  json manifest;
  manifest["schema"] = kManifestSchema;
  manifest["command"] = "generate";
  manifest["experiment"] = p.experiment;
  manifest["n_points"] = p.n_points;
  manifest["seed"] = p.seed;
  manifest["spec"] = spec_to_json(spec);
  add_checksums(manifest, "outputs", dir,
                {"truth.json", "constraints.json", "collapsed.json", "answer_key.json"});
  manifest["timings"]["total_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  gmcs::io::write_json(dir / "manifest.json", manifest);
  std::cout << "generated " << synth.constraints.size() << " constraints for "
            << p.n_points << " points in " << dir.string() << "\n";
}

void run_solve(const SolveParams& p) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path dir(p.out_dir);
  p.config.validate();

  const auto constraints =
      gmcs::io::constraints_from_json(gmcs::io::read_json(p.constraints_path));
  if (constraints.empty()) throw std::invalid_argument("constraint file is empty");
  int n_points = 0;
  for (const auto& c : constraints)
    n_points = std::max({n_points, c.i + 1, c.j + 1});

  std::optional<gmcs::Coordinates> reference;
  if (!p.truth_path.empty())
    reference = gmcs::io::structure_from_json(gmcs::io::read_json(p.truth_path))
                    .coordinates();

  gmcs::StateEstimate init;
  if (!p.init_path.empty())
    init = gmcs::io::structure_from_json(gmcs::io::read_json(p.init_path),
                                         p.config.initial_variance);
  else
    init = gmcs::random_start(n_points, p.config);

  ensure_output_dir(dir);
  const gmcs::Coordinates* ref = reference ? &*reference : nullptr;

  gmcs::ConvergenceTrace trace;
  gmcs::StateEstimate final_state;
  std::vector<gmcs::StageRecord> stages;

  if (p.mode == "unimodal") {
    auto result = gmcs::solve_unimodal(init, constraints, p.config, ref);
    final_state = std::move(result.state);
    trace = std::move(result.trace);
  } else if (p.mode == "multicomponent") {
    auto result = gmcs::solve_multicomponent(init, constraints, p.config, ref,
                                             p.stage_log);
    final_state = std::move(result.state);
    trace = std::move(result.trace);
    stages = std::move(result.stages);
  } else if (p.mode == "pipeline") {
    auto result = gmcs::solve_pipeline(init, constraints, p.config, ref,
                                       p.stage_log, p.warm_cycles);
    final_state = std::move(result.state);
    trace = std::move(result.trace);
    stages = std::move(result.stages);
  } else {
    throw std::invalid_argument("unknown solve mode: " + p.mode);
  }

  gmcs::io::write_json(dir / "structure.json",
                       gmcs::io::structure_to_json(final_state));
  gmcs::io::write_text(dir / "trace.csv", gmcs::io::trace_to_csv(trace));
  gmcs::io::write_json(dir / "ellipsoids.json",
                       gmcs::io::ellipsoids_to_json(gmcs::ellipsoid_report(final_state)));
  if (p.stage_log)
    gmcs::io::write_json(dir / "stage_log.json", gmcs::io::stage_log_to_json(stages));

  json manifest;
  manifest["schema"] = kManifestSchema;
  manifest["command"] = "solve";
  manifest["mode"] = p.mode;
  manifest["warm_cycles"] = p.warm_cycles;
  manifest["stage_log"] = p.stage_log;
  manifest["config"] = config_to_json(p.config);
  manifest["inputs"]["constraints"] = {
      {"path", fs::absolute(p.constraints_path).string()},
      {"checksum", gmcs::io::file_checksum(p.constraints_path)}};
  if (!p.truth_path.empty())
    manifest["inputs"]["truth"] = {
        {"path", fs::absolute(p.truth_path).string()},
        {"checksum", gmcs::io::file_checksum(p.truth_path)}};
  if (!p.init_path.empty())
    manifest["inputs"]["init"] = {
        {"path", fs::absolute(p.init_path).string()},
        {"checksum", gmcs::io::file_checksum(p.init_path)}};
  std::vector<std::string> outputs = {"structure.json", "trace.csv",
                                      "ellipsoids.json"};
  if (p.stage_log) outputs.push_back("stage_log.json");
  add_checksums(manifest, "outputs", dir, outputs);
  manifest["timings"]["total_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  gmcs::io::write_json(dir / "manifest.json", manifest);

  const auto& last = trace.rows.back();
  std::cout << "solved in " << trace.rows.size() << " cycles; final avg error "
            << last.avg_error_sd << " SD, max " << last.max_error_sd << " SD";
  if (last.rmsd_angstrom) std::cout << ", rmsd " << *last.rmsd_angstrom << " A";
  std::cout << "\n";
}

void run_evaluate(const std::string& structure_path, const std::string& truth_path,
                  const std::string& constraints_path, const std::string& key_path,
                  const std::string& report_path) {
  const auto state = gmcs::io::structure_from_json(
      gmcs::io::read_json(structure_path));
  const auto constraints =
      gmcs::io::constraints_from_json(gmcs::io::read_json(constraints_path));
  const gmcs::ErrorSummary errs = gmcs::error_summary(state, constraints);

  json report;
  report["avg_error_sd"] = errs.average;
  report["max_error_sd"] = errs.maximum;

  if (!truth_path.empty()) {
    const auto truth =
        gmcs::io::structure_from_json(gmcs::io::read_json(truth_path)).coordinates();
    const auto proper = gmcs::rmsd_superposed(state.coordinates(), truth, false);
    const auto either = gmcs::rmsd_superposed(state.coordinates(), truth, true);
    report["rmsd_proper_angstrom"] = proper.rmsd;
    report["rmsd_best_angstrom"] = either.rmsd;
    report["rmsd_mirrored"] = either.mirrored;
  }
  if (!key_path.empty()) {
    const auto key = gmcs::io::answer_key_from_json(gmcs::io::read_json(key_path));
    report["component_identification_rate"] =
        gmcs::component_identification_rate(state, constraints, key);
  }

  std::cout << report.dump(2) << "\n";
  if (!report_path.empty()) gmcs::io::write_json(report_path, report);
}

int run_replay(const std::string& manifest_path, const std::string& out_dir) {
  const json manifest = gmcs::io::read_json(manifest_path);
  if (manifest.value("schema", "") != kManifestSchema)
    throw std::invalid_argument("not a recognized manifest: " + manifest_path);
  const std::string command = manifest.at("command").get<std::string>();

  if (command == "generate") {
    GenerateParams p;
    p.experiment = manifest.at("experiment").get<std::string>();
    p.out_dir = out_dir;
    p.seed = manifest.at("seed").get<std::uint64_t>();
    p.n_points = manifest.at("n_points").get<int>();
    if (p.experiment == "custom") p.custom = spec_from_json(manifest.at("spec"));
    run_generate(p);
  } else if (command == "solve") {
    SolveParams p;
    p.mode = manifest.at("mode").get<std::string>();
    p.out_dir = out_dir;
    p.warm_cycles = manifest.at("warm_cycles").get<int>();
    p.stage_log = manifest.at("stage_log").get<bool>();
    p.config = config_from_json(manifest.at("config"));
    const auto& inputs = manifest.at("inputs");
    p.constraints_path = inputs.at("constraints").at("path").get<std::string>();
    if (inputs.contains("truth"))
      p.truth_path = inputs.at("truth").at("path").get<std::string>();
    if (inputs.contains("init"))
      p.init_path = inputs.at("init").at("path").get<std::string>();
    for (const auto& [name, entry] : inputs.items()) {
      const auto path = entry.at("path").get<std::string>();
      if (gmcs::io::file_checksum(path) != entry.at("checksum").get<std::string>())
        throw std::invalid_argument("replay: input " + name + " at " + path +
                                    " no longer matches the manifest checksum");
    }
    run_solve(p);
  } else {
    throw std::invalid_argument("manifest has unknown command: " + command);
  }

  // verify the re-run reproduced the recorded artifacts
  int mismatches = 0;
  for (const auto& [file, checksum] : manifest.at("outputs").items()) {
    const std::string now = gmcs::io::file_checksum(fs::path(out_dir) / file);
    const bool ok = now == checksum.get<std::string>();
    std::cout << (ok ? "  match    " : "  MISMATCH ") << file << "\n";
    if (!ok) ++mismatches;
  }
  if (mismatches > 0) {
    std::cerr << "replay failed: " << mismatches << " artifact(s) differ\n";
    return 3;
  }
  std::cout << "replay reproduced all artifacts\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-position estimation from uncertain distance constraints "
               "with Gaussian and Gaussian-mixture noise"};
  app.require_subcommand(1);

  GenerateParams gen;
  auto* cmd_gen = app.add_subcommand("generate", "Generate a synthetic experiment data set");
  cmd_gen->add_option("--experiment", gen.experiment, "exp1|exp2a|exp2b|custom")
      ->check(CLI::IsMember({"exp1", "exp2a", "exp2b", "custom"}));
  cmd_gen->add_option("--out", gen.out_dir, "Output directory")->required();
  cmd_gen->add_option("--seed", gen.seed, "RNG seed");
  cmd_gen->add_option("--n-points", gen.n_points, "Chain length");
  cmd_gen->add_option("--real-weight-min", gen.custom.real_weight_min);
  cmd_gen->add_option("--real-weight-max", gen.custom.real_weight_max);
  cmd_gen->add_option("--real-variance", gen.custom.real_variance);
  cmd_gen->add_option("--noise-count-min", gen.custom.noise_count_min);
  cmd_gen->add_option("--noise-count-max", gen.custom.noise_count_max);
  cmd_gen->add_option("--noise-mean-min", gen.custom.noise_mean_lo);
  cmd_gen->add_option("--noise-mean-max", gen.custom.noise_mean_hi);
  cmd_gen->add_option("--noise-variance-min", gen.custom.noise_variance_lo);
  cmd_gen->add_option("--noise-variance-max", gen.custom.noise_variance_hi);

  SolveParams sol;
  auto* cmd_sol = app.add_subcommand("solve", "Solve a constraint set");
  cmd_sol->add_option("--mode", sol.mode, "unimodal|multicomponent|pipeline")
      ->check(CLI::IsMember({"unimodal", "multicomponent", "pipeline"}));
  cmd_sol->add_option("--constraints", sol.constraints_path, "Constraint file")
      ->required();
  cmd_sol->add_option("--out", sol.out_dir, "Output directory")->required();
  cmd_sol->add_option("--init", sol.init_path, "Starting structure (default: random)");
  cmd_sol->add_option("--truth", sol.truth_path, "Reference structure for RMSD trace");
  cmd_sol->add_option("--batch-size", sol.config.batch_size);
  cmd_sol->add_option("--branches", sol.config.branch_cap, "Branch cap per fan stage");
  cmd_sol->add_option("--max-cycles", sol.config.max_cycles);
  cmd_sol->add_option("--tol", sol.config.convergence_tol);
  cmd_sol->add_option("--reheat-threshold", sol.config.reheat_threshold);
  cmd_sol->add_option("--initial-variance", sol.config.initial_variance);
  cmd_sol->add_option("--refine-variance", sol.config.refine_variance,
                      "Covariance reset used by the pipeline refinement phase");
  cmd_sol->add_option("--coordinate-range", sol.config.coordinate_range);
  cmd_sol->add_flag("--reheat-always", sol.config.reheat_always,
                    "Reheat on every hot cycle, not only on stall");
  cmd_sol->add_option("--seed", sol.config.rng_seed);
  cmd_sol->add_option("--threads", sol.config.threads, "Branch parallelism degree");
  cmd_sol->add_option("--warm-cycles", sol.warm_cycles,
                      "Pipeline warm-start cycle budget (default: max-cycles/2)");
  cmd_sol->add_flag("--stage-log", sol.stage_log, "Write per-stage weight log");
  sol.config.rng_seed = default_seed();

  std::string eval_structure, eval_truth, eval_constraints, eval_key, eval_report;
  auto* cmd_eval = app.add_subcommand("evaluate", "Score a structure");
  cmd_eval->add_option("--structure", eval_structure)->required();
  cmd_eval->add_option("--constraints", eval_constraints)->required();
  cmd_eval->add_option("--truth", eval_truth);
  cmd_eval->add_option("--answer-key", eval_key);
  cmd_eval->add_option("--out", eval_report, "Report JSON path");

  std::string replay_manifest, replay_out;
  auto* cmd_replay = app.add_subcommand("replay", "Re-run a recorded manifest");
  cmd_replay->add_option("manifest", replay_manifest)->required();
  cmd_replay->add_option("--out", replay_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
    if (cmd_gen->parsed()) run_generate(gen);
    if (cmd_sol->parsed()) run_solve(sol);
    if (cmd_eval->parsed())
      run_evaluate(eval_structure, eval_truth, eval_constraints, eval_key, eval_report);
    if (cmd_replay->parsed()) return run_replay(replay_manifest, replay_out);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gmcs::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const gmcs::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
