#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "noisyrd/curvature.hpp"
#include "noisyrd/inference.hpp"
#include "noisyrd/io.hpp"
#include "noisyrd/simulation.hpp"

namespace {

using nlohmann::json;
using namespace noisyrd;

struct CommonFlags {
  std::string config_path;
  std::string output_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON configuration file");
  cmd->add_option("--output", flags.output_path, "Output path (default stdout)");
  cmd->add_option("--seed", [&flags](const CLI::results_t& r) {
    flags.seed = std::stoull(r[0]);
    return true;
  }, "RNG seed");
  cmd->add_option("--alpha", [&flags](const CLI::results_t& r) {
    flags.alpha = std::stod(r[0]);
    return true;
  }, "Significance level (default 0.05)");
  cmd->add_option("--jobs", [&flags](const CLI::results_t& r) {
    flags.jobs = std::stoi(r[0]);
    return true;
  }, "Worker threads for simulate");
}

RunSettings load_settings(const CommonFlags& flags) {
  RunSettings settings;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw DataError("cannot open config: " + flags.config_path);
    json doc = json::parse(in);
    settings = parse_config(doc);
  }
  if (flags.seed) settings.seed = *flags.seed;
  if (flags.alpha) settings.pipeline.alpha = *flags.alpha;
  if (flags.jobs) settings.jobs = *flags.jobs;
  return settings;
}

void emit(const json& doc, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << doc.dump(2) << std::endl;
  } else {
    std::ofstream out(output_path);
    if (!out) throw DataError("cannot write output: " + output_path);
    out << doc.dump(2) << std::endl;
  }
}

struct AnalyzeFlags {
  std::string input_path;
  std::string fbar_csv;
  std::string gamma_csv;
  std::optional<double> cutoff;
  std::optional<double> nu;
  std::optional<int> trials;
  std::optional<std::string> target_kind;
  std::optional<double> m_bound;
  std::optional<double> m_prime;
  std::optional<double> c_prime;
  std::optional<double> nu_prime;
};

void add_model_flags(CLI::App* cmd, AnalyzeFlags& a) {
  auto opt_d = [](std::optional<double>& slot) {
    return [&slot](const CLI::results_t& r) {
      slot = std::stod(r[0]);
      return true;
    };
  };
  cmd->add_option("--cutoff", opt_d(a.cutoff), "Treatment cutoff c");
  cmd->add_option("--nu", opt_d(a.nu), "Gaussian noise scale");
  cmd->add_option("--trials", [&a](const CLI::results_t& r) {
    a.trials = std::stoi(r[0]);
    return true;
  }, "Binomial trial count");
  cmd->add_option("--target", [&a](const CLI::results_t& r) {
    a.target_kind = r[0];
    return true;
  }, "Target kind: constant | rd_param | cutoff_change | noise_change");
  cmd->add_option("--M", opt_d(a.m_bound), "Bound on the control-response range");
  cmd->add_option("--M-prime", opt_d(a.m_prime), "Bound on the effect range");
  cmd->add_option("--c-prime", opt_d(a.c_prime), "Alternative cutoff c'");
  cmd->add_option("--nu-prime", opt_d(a.nu_prime), "Alternative noise scale nu'");
  cmd->add_option("--fbar-csv", a.fbar_csv,
                  "CSV (z,density) supplying the pilot marginal density");
  cmd->add_option("--gamma-csv", a.gamma_csv,
                  "CSV (z,gamma) supplying the weights (skips the QP)");
}

void apply_model_flags(const AnalyzeFlags& a, RunSettings& settings) {
  if (a.cutoff) settings.cutoff = *a.cutoff;
  if (a.nu) settings.noise = NoiseModel::gaussian(*a.nu);
  if (a.trials) settings.noise = NoiseModel::binomial(*a.trials);
  if (a.target_kind) {
    const std::string& k = *a.target_kind;
    if (k == "constant")
      settings.target.kind = TargetSpec::Kind::ConstantEffect;
    else if (k == "rd_param")
      settings.target.kind = TargetSpec::Kind::RDParamAt;
    else if (k == "cutoff_change")
      settings.target.kind = TargetSpec::Kind::CutoffChange;
    else if (k == "noise_change")
      settings.target.kind = TargetSpec::Kind::NoiseChange;
    else
      throw DataError("unknown target kind '" + k + "'");
  }
  if (a.m_bound) {
    settings.target.M = *a.m_bound;
    settings.pipeline.M = *a.m_bound;
  }
  if (a.m_prime) {
    settings.target.M_prime = *a.m_prime;
    settings.pipeline.M_prime = *a.m_prime;
  }
  if (a.c_prime) settings.target.c_prime = *a.c_prime;
  if (a.nu_prime) settings.target.nu_prime = *a.nu_prime;
  if (!a.fbar_csv.empty()) settings.fbar_csv = a.fbar_csv;
  if (!a.gamma_csv.empty()) settings.gamma_csv = a.gamma_csv;
}

void load_bypass_inputs(RunSettings& settings) {
  if (settings.fbar_csv) {
    CsvTable t = read_csv(*settings.fbar_csv);
    settings.pipeline.user_fbar =
        std::make_pair(t.column("z"), t.column("density"));
  }
  if (settings.gamma_csv) {
    CsvTable t = read_csv(*settings.gamma_csv);
    settings.pipeline.user_gamma = t.column("gamma");
  }
}

int cmd_analyze(const CommonFlags& common, const AnalyzeFlags& a) {
  RunSettings settings = load_settings(common);
  apply_model_flags(a, settings);
  if (!settings.cutoff) throw DataError("analyze: cutoff is required");
  if (!settings.noise)
    throw DataError("analyze: a noise model is required (--nu or --trials)");
  load_bypass_inputs(settings);

  SampleBatch batch = load_batch_csv(a.input_path, *settings.cutoff);
  EstimateReport report =
      run_pipeline(batch, *settings.noise, settings.target, settings.pipeline);
  json doc = report_to_json(report, settings_to_json(settings));
  doc["input"] = a.input_path;
  doc["n"] = batch.size();
  emit(doc, common.output_path);
  return 0;
}

int cmd_weights(const CommonFlags& common, const AnalyzeFlags& a,
                std::optional<Index> n_override,
                std::optional<double> sigma2_override) {
  RunSettings settings = load_settings(common);
  apply_model_flags(a, settings);
  if (sigma2_override) settings.pipeline.sigma2 = *sigma2_override;
  if (!settings.cutoff) throw DataError("weights: cutoff is required");
  if (!settings.noise)
    throw DataError("weights: a noise model is required (--nu or --trials)");
  load_bypass_inputs(settings);

  SampleBatch batch;
  if (!a.input_path.empty()) {
    batch = load_batch_csv(a.input_path, *settings.cutoff);
  } else {
    // weight design without outcomes: needs the pilot curve, sigma2, n
    if (!settings.pipeline.user_fbar || !settings.pipeline.sigma2 ||
        !n_override)
      throw DataError(
          "weights: without --input supply --fbar-csv, --sigma2 and --n");
    batch.cutoff = *settings.cutoff;
    batch.z = Vector::Zero(*n_override);
    batch.y = Vector::Zero(*n_override);
    batch.w = Vector::Zero(*n_override);
    for (Index i = 0; i < batch.z.size(); ++i) {
      batch.z[i] = *settings.cutoff - 1.0;  // placeholder; unused by the QP
      batch.w[i] = 0.0;
    }
    if (!settings.pipeline.M)
      throw DataError("weights: --M is required without outcome data");
  }

  PipelineContext ctx = prepare_pipeline(batch, *settings.noise,
                                         settings.target, settings.pipeline);

  std::string prefix =
      common.output_path.empty() ? std::string("weights") : common.output_path;
  write_csv(prefix + "_gamma.csv", {"z", "gamma"},
            {ctx.grids.running.points, ctx.weights.gamma});
  write_csv(prefix + "_h.csv", {"u", "h_plus", "h_minus"},
            {ctx.grids.latent.points, ctx.h.h_plus, ctx.h.h_minus});

  json doc;
  doc["gamma_csv"] = prefix + "_gamma.csv";
  doc["h_csv"] = prefix + "_h.csv";
  doc["qp"] = {{"objective", ctx.weights.diagnostics.objective},
               {"t", ctx.weights.diagnostics.t},
               {"max_abs_gamma", ctx.weights.diagnostics.max_abs_gamma},
               {"iterations", ctx.weights.diagnostics.iterations}};
  doc["resolved_config"] = settings_to_json(settings);
  std::cout << doc.dump(2) << std::endl;
  return 0;
}

int cmd_simulate(const CommonFlags& common, int setup, Index n, double noise,
                 Index reps, std::optional<double> m_bound, bool oracle_m,
                 bool no_reuse) {
  RunSettings settings = load_settings(common);

  SetupSpec spec;
  spec.id = setup;
  spec.n = n;
  if (setup <= 2)
    spec.nu2 = noise;
  else
    spec.K = static_cast<int>(noise);

  MCOptions mc;
  mc.alpha = settings.pipeline.alpha;
  mc.grid = settings.pipeline.grid;
  mc.jobs = settings.jobs;
  mc.reuse_weights = !no_reuse;
  if (oracle_m)
    mc.M = spec.oracle_M();
  else if (m_bound)
    mc.M = *m_bound;

  MCResult res = run_mc(spec, mc, reps, settings.seed);

  json doc;
  doc["setup"] = setup;
  doc["n"] = n;
  doc[setup <= 2 ? "nu2" : "K"] = noise;
  doc["M"] = mc.M.value_or(1.0);
  doc["reps"] = reps;
  doc["base_seed"] = settings.seed;
  doc["coverage"] = res.coverage;
  doc["mean_length"] = res.mean_length;
  doc["mae"] = res.mae;
  doc["mean_B_hat"] = res.mean_B_hat;
  doc["replications"] = res.replications;
  doc["failures"] = res.failures;
  doc["weights_reused"] = res.weights_reused;
  doc["resolved_config"] = settings_to_json(settings);

  std::string csv_path =
      common.output_path.empty() ? "" : common.output_path + ".csv";
  std::string json_path =
      common.output_path.empty() ? "" : common.output_path + ".json";
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "setup,n,noise,M,reps,seed,coverage,mean_length,mae,mean_B_hat,"
           "failures,weights_reused\n";
    csv << setup << "," << n << "," << noise << "," << mc.M.value_or(1.0)
        << "," << reps << "," << settings.seed << "," << res.coverage << ","
        << res.mean_length << "," << res.mae << "," << res.mean_B_hat << ","
        << res.failures << "," << (res.weights_reused ? 1 : 0) << "\n";
  }
  emit(doc, json_path);
  return 0;
}

int cmd_curvature(const CommonFlags& common, double m_bound, double nu,
                  double rho) {
  CurvatureQuery q{m_bound, nu, rho};
  DerivativeBounds closed = derivative_bounds_closed_form(q);
  SharpenedUpperBounds sharp = sharpened_upper_bounds(q);
  double d2_lo_sharp = sharpened_lower_bound_d2(q);

  json doc;
  doc["M"] = m_bound;
  doc["nu"] = nu;
  doc["rho"] = rho;
  doc["d1_lo"] = closed.d1_lo;
  doc["d1_hi"] = closed.d1_hi;
  doc["d2_lo"] = closed.d2_lo;
  doc["d2_hi"] = closed.d2_hi;
  doc["d1_hi_sharp"] = sharp.d1_hi_sharp;
  doc["d2_hi_sharp"] = sharp.d2_hi_sharp;
  doc["d2_lo_sharp"] = d2_lo_sharp;
  emit(doc, common.output_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-based regression discontinuity inference with a noisy "
               "running variable"};
  app.require_subcommand(1);

  CommonFlags common;
  AnalyzeFlags analyze_flags;
  AnalyzeFlags weight_flags;
  std::optional<Index> weights_n;
  std::optional<double> weights_sigma2;
  int sim_setup = 1;
  Index sim_n = 1000;
  double sim_noise = 1.0;
  Index sim_reps = 500;
  std::optional<double> sim_m;
  bool sim_oracle_m = false;
  bool sim_no_reuse = false;
  double curv_m = 1.0, curv_nu = 1.0, curv_rho = 0.1;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Confidence interval for a treatment effect from a CSV");
  add_common(analyze, common);
  analyze->add_option("-i,--input", analyze_flags.input_path,
                      "CSV with columns z,y and optional w")
      ->required();
  add_model_flags(analyze, analyze_flags);

  CLI::App* weights = app.add_subcommand(
      "weights", "Export solved estimator weights and balance functions");
  add_common(weights, common);
  weights->add_option("-i,--input", weight_flags.input_path,
                      "CSV with columns z,y and optional w");
  add_model_flags(weights, weight_flags);
  weights->add_option("--n", [&weights_n](const CLI::results_t& r) {
    weights_n = std::stoll(r[0]);
    return true;
  }, "Sample size (when no --input)");
  weights->add_option("--sigma2", [&weights_sigma2](const CLI::results_t& r) {
    weights_sigma2 = std::stod(r[0]);
    return true;
  }, "Outcome residual variance (when no --input)");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo coverage experiment on a synthetic design");
  add_common(simulate, common);
  simulate->add_option("--setup", sim_setup, "Design id 1..4")->required();
  simulate->add_option("--n", sim_n, "Sample size per replication");
  simulate
      ->add_option("--noise", sim_noise,
                   "Noise variance (setups 1-2) or trial count K (3-4)")
      ->required();
  simulate->add_option("--reps", sim_reps, "Replications");
  simulate->add_option("--M", [&sim_m](const CLI::results_t& r) {
    sim_m = std::stod(r[0]);
    return true;
  }, "Response-range bound (default 1)");
  simulate->add_flag("--oracle-M", sim_oracle_m,
                     "Use the design's true response range");
  simulate->add_flag("--no-reuse-weights", sim_no_reuse,
                     "Refit pilot and weights on every replication");

  CLI::App* curvature = app.add_subcommand(
      "curvature", "Noise-implied derivative bounds (Gaussian errors)");
  add_common(curvature, common);
  curvature->add_option("--M", curv_m, "Response-range bound")->required();
  curvature->add_option("--nu", curv_nu, "Noise scale")->required();
  curvature->add_option("--rho", curv_rho, "Density lower bound")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(common, analyze_flags);
    if (weights->parsed())
      return cmd_weights(common, weight_flags, weights_n, weights_sigma2);
    if (simulate->parsed())
      return cmd_simulate(common, sim_setup, sim_n, sim_noise, sim_reps, sim_m,
                          sim_oracle_m, sim_no_reuse);
    if (curvature->parsed())
      return cmd_curvature(common, curv_m, curv_nu, curv_rho);
  } catch (const noisyrd::DataError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const noisyrd::StageError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
