// smdlab: experiment harness for spherical motion dynamics — the coupled
// weight-norm / angular-update evolution of scale-invariant weights trained
// with SGD(M) plus weight decay.
//
// Subcommands: predict, simulate, train, verify-transition.
// Exit codes: 0 success, 1 config error, 2 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smd/harness.hpp"

namespace {

struct CommonFlags {
  double eta = 0.1;
  double lambda = 1e-3;
  double alpha = 0.9;
  std::string mode = "sgd";
  std::int64_t iters = 1000;
  int trials = 1;
  std::uint64_t seed = 0;
  int window = 200;
  std::string schedule_file;
  bool rescale_on_drop = false;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_run_flags) {
  cmd->add_option("--eta", f.eta, "learning rate");
  cmd->add_option("--lambda", f.lambda, "weight decay coefficient");
  cmd->add_option("--alpha", f.alpha, "momentum coefficient (sgdm mode)");
  cmd->add_option("--mode", f.mode, "sgd|sgdm")
      ->check(CLI::IsMember({"sgd", "sgdm"}));
  if (with_run_flags) {
    cmd->add_option("--iters", f.iters, "number of iterations");
    cmd->add_option("--trials", f.trials, "number of Monte Carlo trials");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--window", f.window, "averaging window");
    cmd->add_option("--schedule", f.schedule_file, "schedule file");
    cmd->add_flag("--rescale-on-drop", f.rescale_on_drop,
                  "divide the weight norm by k^(1/4) at each /k lr drop");
    cmd->add_option("--out", f.out_dir, "output directory for traces + summary");
  }
}

smd::HyperParams hp_of(const CommonFlags& f) {
  return {f.eta, f.lambda, f.mode == "sgdm" ? f.alpha : 0.0};
}

smd::GradNormProcess make_process(const std::string& name, double base,
                                  double noise_width, double period,
                                  std::uint64_t seed) {
  if (name == "constant") return smd::GradNormProcess::constant(base);
  if (name == "noisy") return smd::GradNormProcess::noisy(base, noise_width, seed);
  if (name == "sine") return smd::GradNormProcess::sinusoidal(base, period);
  return smd::GradNormProcess::noisy_sinusoidal(base, noise_width, period, seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherical motion dynamics laboratory"};
  app.require_subcommand(1);

  // predict
  CommonFlags pf;
  double predict_L = 10.0;
  auto* predict_cmd = app.add_subcommand(
      "predict", "closed-form equilibrium report for a hyperparameter set");
  add_common(predict_cmd, pf, false);
  predict_cmd->add_option("--L", predict_L, "expected forcing statistic");
  std::string predict_out;
  predict_cmd->add_option("--out", predict_out, "write report to file");

  // simulate
  CommonFlags sf;
  std::string process_name = "constant";
  double base = 10.0, noise_width = 3.0, period = 1e5, x0 = 10.0;
  auto* sim_cmd =
      app.add_subcommand("simulate", "run the norm-dynamics iterative map");
  add_common(sim_cmd, sf, true);
  sim_cmd->add_option("--process", process_name, "forcing process")
      ->check(CLI::IsMember({"constant", "noisy", "sine", "noisy-sine"}));
  sim_cmd->add_option("--base", base, "process base level");
  sim_cmd->add_option("--noise-width", noise_width, "uniform noise half-width");
  sim_cmd->add_option("--period", period, "sinusoid period scale");
  sim_cmd->add_option("--x0", x0, "initial squared weight norm");

  // train
  CommonFlags tf;
  std::string model_name = "normlin";
  int dim = 100, samples = 10000, batch = 32;
  double gamma = 1.0, noise_sigma = 0.5, train_x0 = 10.0;
  auto* train_cmd =
      app.add_subcommand("train", "train a scale-invariant toy model");
  add_common(train_cmd, tf, true);
  train_cmd->add_option("--model", model_name, "toy model")
      ->check(CLI::IsMember({"rayleigh", "normlin"}));
  train_cmd->add_option("--dim", dim, "weight dimension");
  train_cmd->add_option("--samples", samples, "dataset size (normlin)");
  train_cmd->add_option("--batch", batch, "minibatch size (normlin)");
  train_cmd->add_option("--gamma", gamma, "fixed gain (normlin)");
  train_cmd->add_option("--noise-sigma", noise_sigma, "target noise std dev");
  train_cmd->add_option("--x0", train_x0, "initial squared weight norm");

  // verify-transition
  CommonFlags vf;
  std::string vproc_name = "constant";
  double vbase = 10.0, vnoise = 3.0, vperiod = 1e5, vx0 = 10.0;
  std::int64_t drop_at = 10000;
  double drop_k = 10.0;
  auto* verify_cmd = app.add_subcommand(
      "verify-transition",
      "simulate through an lr drop and compare the measured transition time "
      "with the theoretical lower bound");
  add_common(verify_cmd, vf, true);
  verify_cmd->add_option("--process", vproc_name, "forcing process")
      ->check(CLI::IsMember({"constant", "noisy", "sine", "noisy-sine"}));
  verify_cmd->add_option("--base", vbase, "process base level");
  verify_cmd->add_option("--noise-width", vnoise, "uniform noise half-width");
  verify_cmd->add_option("--period", vperiod, "sinusoid period scale");
  verify_cmd->add_option("--x0", vx0, "initial squared weight norm");
  verify_cmd->add_option("--drop-at", drop_at, "iteration of the lr drop");
  verify_cmd->add_option("--k", drop_k, "lr division factor");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*predict_cmd) {
      const auto report = smd::predict(hp_of(pf), predict_L, pf.mode == "sgdm");
      std::cout << report.dump(2) << std::endl;
      if (!predict_out.empty()) {
        std::ofstream out(predict_out);
        out << report.dump(2) << '\n';
      }
      return 0;
    }

    if (*sim_cmd || *verify_cmd) {
      const CommonFlags& f = *sim_cmd ? sf : vf;
      smd::ExperimentConfig config;
      config.mode = f.mode == "sgdm" ? smd::Mode::simulate_sgdm
                                     : smd::Mode::simulate_sgd;
      config.hp = hp_of(f);
      config.process = *sim_cmd
                           ? make_process(process_name, base, noise_width,
                                          period, f.seed)
                           : make_process(vproc_name, vbase, vnoise, vperiod, f.seed);
      config.x0 = *sim_cmd ? x0 : vx0;
      config.iterations = f.iters;
      config.trials = f.trials;
      config.seed = f.seed;
      config.window = f.window;
      config.out_dir = f.out_dir;
      if (!f.schedule_file.empty())
        config.schedule = smd::Schedule::parse_file(f.schedule_file);
      if (f.rescale_on_drop) config.schedule.rescale_on_drop = true;
      if (*verify_cmd)
        config.schedule.stages.push_back({drop_at, drop_k});

      const auto result = smd::run_experiment(config);
      if (*verify_cmd) {
        smd::HyperParams post = config.hp;
        post.eta = config.schedule.lr_at(config.iterations - 1, config.hp.eta);
        const auto check = smd::verify_transition(result.traces.front(),
                                                  drop_at, drop_k, post);
        nlohmann::json j = {{"predicted_lower_bound", check.predicted},
                            {"measured", check.measured},
                            {"lower_bound_holds", check.predicted <= check.measured}};
        std::cout << j.dump(2) << std::endl;
      } else {
        std::cout << result.summary.dump(2) << std::endl;
      }
      return 0;
    }

    if (*train_cmd) {
      smd::ExperimentConfig config;
      config.mode =
          tf.mode == "sgdm" ? smd::Mode::train_sgdm : smd::Mode::train_sgd;
      config.hp = hp_of(tf);
      config.model = model_name == "rayleigh" ? smd::ModelKind::rayleigh
                                              : smd::ModelKind::normlin;
      config.model_dim = dim;
      config.dataset_size = samples;
      config.batch_size = batch;
      config.gamma = gamma;
      config.noise_sigma = noise_sigma;
      config.x0 = train_x0;
      config.iterations = tf.iters;
      config.trials = tf.trials;
      config.seed = tf.seed;
      config.window = tf.window;
      config.out_dir = tf.out_dir;
      if (!tf.schedule_file.empty())
        config.schedule = smd::Schedule::parse_file(tf.schedule_file);
      if (tf.rescale_on_drop) config.schedule.rescale_on_drop = true;

      const auto result = smd::run_experiment(config);
      std::cout << result.summary.dump(2) << std::endl;
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
