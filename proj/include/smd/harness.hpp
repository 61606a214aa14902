#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smd/dynamics.hpp"
#include "smd/models.hpp"
#include "smd/optim.hpp"
#include "smd/theory.hpp"

namespace smd {

struct ScheduleStage {
  std::int64_t start_iteration;
  double lr_divisor;
};

// Piecewise-constant learning rate schedule with optional norm rescaling at
// each drop: w <- w / k^rescale_exponent when the lr is divided by k.
struct Schedule {
  std::vector<ScheduleStage> stages;
  bool rescale_on_drop = false;
  double rescale_exponent = 0.25;

  void validate() const;
  double lr_at(std::int64_t t, double eta0) const;
  // Divisor of the stage starting exactly at t, if any.
  std::optional<double> drop_at(std::int64_t t) const;

  // Text format, one directive per line ('#' comments allowed):
  //   drop <start_iteration> <divisor>
  //   rescale on|off
  //   rescale_exponent <value>
  static Schedule parse(std::istream& in);
  static Schedule parse_file(const std::string& path);
};

enum class Mode { simulate_sgd, simulate_sgdm, train_sgd, train_sgdm };

enum class ModelKind { rayleigh, normlin };

struct ExperimentConfig {
  Mode mode = Mode::simulate_sgd;
  HyperParams hp;

  // simulate-* forcing process
  GradNormProcess process = GradNormProcess::constant(10.0);
  double x0 = 10.0;  // initial squared weight norm

  // train-* model
  ModelKind model = ModelKind::normlin;
  int model_dim = 100;
  int dataset_size = 10000;
  int batch_size = 32;
  double gamma = 1.0;
  double noise_sigma = 0.5;

  Schedule schedule;
  std::int64_t iterations = 1;
  int trials = 1;
  std::uint64_t seed = 0;
  int window = 200;  // averaging window for moment estimates and overlays
  std::string out_dir;  // empty: no files written

  bool is_simulation() const {
    return mode == Mode::simulate_sgd || mode == Mode::simulate_sgdm;
  }
  bool uses_momentum() const {
    return mode == Mode::simulate_sgdm || mode == Mode::train_sgdm;
  }
  void validate() const;
};

// One trace row; column order matches the CSV schema.
struct TraceRecord {
  std::int64_t iteration;
  double lr;
  double weight_norm;
  double weight_norm_theoretical;
  double angular_update;
  double angular_update_theoretical;
  double unit_grad_norm_sq;
  std::optional<double> h_tilde;  // empty for SGD
};

using Trace = std::vector<TraceRecord>;

// Runs one trial of the dynamics-module map (mode simulate-*).
Trace run_simulation(const ExperimentConfig& config, int trial = 0);

// Runs one trial of the vector optimizer on the configured model
// (mode train-*).
Trace run_training(const ExperimentConfig& config, int trial = 0);

struct EstimatedMoments {
  double L_hat;  // windowed mean of the forcing statistic
  double V_hat;  // windowed variance
  double l_hat;  // running minimum over the whole trace
  double B_hat;  // max over early iterations of rate^{-t} (x_t - x*)^2
};

// The statistic is h_tilde when momentum is set, unit_grad_norm_sq
// otherwise; hp is needed to place x* and the contraction rate for B_hat.
EstimatedMoments estimate_moments(const Trace& trace, int window,
                                  const HyperParams& hp, bool momentum);

struct TransitionCheck {
  std::int64_t predicted;  // closed-form lower bound at the post-drop lr
  std::int64_t measured;   // first iteration after the drop within 5% of x*
};

// hp_after_drop carries the learning rate in effect after the drop.
// Throws std::runtime_error("equilibrium-not-reached") when the trace never
// comes within 5% of the new equilibrium.
TransitionCheck verify_transition(const Trace& trace,
                                  std::int64_t drop_iteration, double k,
                                  const HyperParams& hp_after_drop);

// Machine-readable equilibrium report: w*, x*, delta*, rate, and the
// transition-iteration table for k in {2, 5, 10}.
nlohmann::json predict(const HyperParams& hp, double L, bool momentum);

// Header row mandatory; floats in shortest round-trip form.
void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

struct ExperimentResult {
  std::vector<Trace> traces;  // one per trial
  nlohmann::json summary;
};

// Runs all trials; when config.out_dir is set, writes trace_<trial>.csv per
// trial plus summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace smd
