#include "smd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "smd/rng.hpp"

namespace smd {

namespace {

using nlohmann::json;

// Windowed running mean with O(1) push.
class RollingMean {
 public:
  explicit RollingMean(int window) : buf_(window, 0.0) {}

  void push(double v) {
    if (count_ < buf_.size()) {
      buf_[count_++] = v;
      sum_ += v;
    } else {
      sum_ += v - buf_[head_];
      buf_[head_] = v;
      head_ = (head_ + 1) % buf_.size();
    }
  }

  double mean() const { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }

 private:
  std::vector<double> buf_;
  std::size_t count_ = 0;
  std::size_t head_ = 0;
  double sum_ = 0.0;
};

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

// Equilibrium formulas evaluated at the in-effect learning rate. The
// overlay is a pure function of (windowed L_hat, hp), recomputable from the
// trace file alone.
double theoretical_w(double L_hat, double lr, const HyperParams& hp,
                     bool momentum) {
  if (momentum) {
    const double le = hp.lambda * lr;
    const double x = std::sqrt(L_hat * lr /
                               (hp.lambda * (1.0 - hp.alpha) *
                                (2.0 - le / (1.0 + hp.alpha))));
    return std::sqrt(x);
  }
  return std::pow(L_hat * lr / (2.0 * hp.lambda), 0.25);
}

double theoretical_delta(double lr, const HyperParams& hp, bool momentum) {
  const double le = 2.0 * hp.lambda * lr;
  return momentum ? std::sqrt(le / (1.0 + hp.alpha)) : std::sqrt(le);
}

void check_finite(double x) {
  if (!std::isfinite(x))
    throw std::runtime_error("numerical-failure: trajectory diverged");
}

double stat_of(const TraceRecord& r, bool momentum) {
  return momentum && r.h_tilde ? *r.h_tilde : r.unit_grad_norm_sq;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::simulate_sgd: return "simulate-sgd";
    case Mode::simulate_sgdm: return "simulate-sgdm";
    case Mode::train_sgd: return "train-sgd";
    case Mode::train_sgdm: return "train-sgdm";
  }
  return "?";
}

}  // namespace

void Schedule::validate() const {
  std::int64_t prev = -1;
  for (const auto& s : stages) {
    if (s.start_iteration <= prev)
      throw std::invalid_argument(
          "config-invalid: schedule start iterations must be strictly increasing");
    if (!(s.lr_divisor > 1.0))
      throw std::invalid_argument("config-invalid: schedule divisors must be > 1");
    prev = s.start_iteration;
  }
  if (!(rescale_exponent > 0.0))
    throw std::invalid_argument("config-invalid: rescale_exponent must be > 0");
}

double Schedule::lr_at(std::int64_t t, double eta0) const {
  double lr = eta0;
  for (const auto& s : stages)
    if (t >= s.start_iteration) lr /= s.lr_divisor;
  return lr;
}

std::optional<double> Schedule::drop_at(std::int64_t t) const {
  for (const auto& s : stages)
    if (s.start_iteration == t) return s.lr_divisor;
  return std::nullopt;
}

Schedule Schedule::parse(std::istream& in) {
  Schedule sched;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string key;
    if (!(row >> key)) continue;
    if (key == "drop") {
      ScheduleStage s{};
      if (!(row >> s.start_iteration >> s.lr_divisor))
        throw std::invalid_argument("config-invalid: malformed drop line: " + line);
      sched.stages.push_back(s);
    } else if (key == "rescale") {
      std::string flag;
      if (!(row >> flag) || (flag != "on" && flag != "off"))
        throw std::invalid_argument("config-invalid: rescale expects on|off");
      sched.rescale_on_drop = flag == "on";
    } else if (key == "rescale_exponent") {
      if (!(row >> sched.rescale_exponent))
        throw std::invalid_argument("config-invalid: malformed rescale_exponent");
    } else {
      throw std::invalid_argument("config-invalid: unknown schedule directive: " + key);
    }
  }
  sched.validate();
  return sched;
}

Schedule Schedule::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config-invalid: cannot open schedule file: " + path);
  return parse(in);
}

void ExperimentConfig::validate() const {
  hp.validate();
  schedule.validate();
  if (iterations < 1) throw std::invalid_argument("config-invalid: iterations must be >= 1");
  if (trials < 1) throw std::invalid_argument("config-invalid: trials must be >= 1");
  if (window < 1) throw std::invalid_argument("config-invalid: window must be >= 1");
  if (!(x0 > 0.0)) throw std::invalid_argument("config-invalid: x0 must be > 0");
  if (uses_momentum() && !(hp.alpha > 0.0))
    throw std::invalid_argument("config-invalid: sgdm mode requires alpha > 0");
  if (!uses_momentum() && hp.alpha != 0.0)
    throw std::invalid_argument("config-invalid: sgd mode requires alpha == 0");
  if (!is_simulation()) {
    if (model_dim < 2) throw std::invalid_argument("config-invalid: model dim must be >= 2");
    if (model == ModelKind::normlin &&
        (dataset_size < 1 || batch_size < 1 || noise_sigma < 0.0))
      throw std::invalid_argument("config-invalid: bad normlin parameters");
  }
}

Trace run_simulation(const ExperimentConfig& config, int trial) {
  config.validate();
  if (!config.is_simulation())
    throw std::invalid_argument("config-invalid: mode is not simulate-*");

  const GradNormProcess proc =
      config.process.with_seed(derive_seed(config.seed, static_cast<std::uint64_t>(trial)));
  const bool momentum = config.uses_momentum();
  RollingMean roll(config.window);
  Trace trace;
  trace.reserve(static_cast<std::size_t>(config.iterations));

  double x = config.x0;
  SgdmNormState state{config.x0, config.x0, config.x0};

  for (std::int64_t t = 0; t < config.iterations; ++t) {
    const double lr = config.schedule.lr_at(t, config.hp.eta);
    if (const auto div = config.schedule.drop_at(t);
        div && config.schedule.rescale_on_drop) {
      const double c = std::pow(*div, -config.schedule.rescale_exponent);
      if (momentum) {
        state.x *= c * c;
        state.ip *= c;
      } else {
        x *= c * c;
      }
    }
    const double L_t = proc.value(t);
    roll.push(L_t);
    const double L_hat = roll.mean();
    const HyperParams cur{lr, config.hp.lambda, config.hp.alpha};

    TraceRecord rec{};
    rec.iteration = t;
    rec.lr = lr;
    rec.weight_norm_theoretical = theoretical_w(L_hat, lr, cur, momentum);
    rec.angular_update_theoretical = theoretical_delta(lr, cur, momentum);
    rec.unit_grad_norm_sq = L_t;

    if (momentum) {
      rec.weight_norm = std::sqrt(state.x);
      rec.h_tilde = L_t;
      const SgdmNormState next = sgdm_norm_step(state, L_t, cur);
      check_finite(next.x);
      rec.angular_update =
          std::acos(clamp_cos(next.ip / std::sqrt(next.x * state.x)));
      state = next;
    } else {
      rec.weight_norm = std::sqrt(x);
      const double x_next = sgd_norm_step({x}, L_t, cur).x;
      check_finite(x_next);
      rec.angular_update = std::acos(
          clamp_cos((1.0 - cur.lambda * cur.eta) * std::sqrt(x / x_next)));
      x = x_next;
    }
    trace.push_back(rec);
  }
  return trace;
}

Trace run_training(const ExperimentConfig& config, int trial) {
  config.validate();
  if (config.is_simulation())
    throw std::invalid_argument("config-invalid: mode is not train-*");

  const bool momentum = config.uses_momentum();

  std::optional<RayleighModel> rayleigh;
  std::optional<NormalizedLinearModel> normlin;
  if (config.model == ModelKind::rayleigh) {
    rayleigh = RayleighModel::random(config.model_dim,
                                     derive_seed(config.seed, 101));
  } else {
    Dataset ds = make_synthetic_dataset(config.dataset_size, config.model_dim,
                                        config.gamma, config.noise_sigma,
                                        derive_seed(config.seed, 202));
    normlin.emplace(std::move(ds), config.gamma, config.batch_size,
                    derive_seed(derive_seed(config.seed, 303),
                                static_cast<std::uint64_t>(trial)));
  }

  SplitMix64 init_rng(derive_seed(derive_seed(config.seed, 404),
                                  static_cast<std::uint64_t>(trial)));
  Vec w(config.model_dim);
  for (auto& v : w) v = init_rng.gaussian();
  const double scale = std::sqrt(config.x0) / norm(w);
  for (auto& v : w) v *= scale;
  Vec vbuf(config.model_dim, 0.0);

  RollingMean roll(config.window);
  Trace trace;
  trace.reserve(static_cast<std::size_t>(config.iterations));

  for (std::int64_t t = 0; t < config.iterations; ++t) {
    const double lr = config.schedule.lr_at(t, config.hp.eta);
    if (const auto div = config.schedule.drop_at(t);
        div && config.schedule.rescale_on_drop) {
      const double c = std::pow(*div, -config.schedule.rescale_exponent);
      for (auto& v : w) v *= c;
    }

    const Vec g = rayleigh ? rayleigh->grad(w) : normlin->minibatch_grad(w, t).g;
    const double ugns = unit_gradient_norm_sq(w, g);
    double h_tilde = 0.0;
    if (momentum) h_tilde = h_statistic(g, vbuf, w, config.hp.alpha).second;
    roll.push(momentum ? h_tilde : ugns);
    const double L_hat = roll.mean();

    const HyperParams cur{lr, config.hp.lambda, config.hp.alpha};
    Vec w_next;
    if (momentum) {
      auto [wn, vn] = sgdm_step(w, vbuf, g, cur);
      w_next = std::move(wn);
      vbuf = std::move(vn);
    } else {
      w_next = sgd_step(w, g, cur);
    }
    const double x_next = norm_sq(w_next);
    check_finite(x_next);
    if (!(x_next > 0.0))
      throw std::runtime_error("numerical-failure: weight norm collapsed");

    TraceRecord rec{};
    rec.iteration = t;
    rec.lr = lr;
    rec.weight_norm = norm(w);
    rec.weight_norm_theoretical = theoretical_w(L_hat, lr, cur, momentum);
    rec.angular_update = angular_update(w, w_next);
    rec.angular_update_theoretical = theoretical_delta(lr, cur, momentum);
    rec.unit_grad_norm_sq = ugns;
    if (momentum) rec.h_tilde = h_tilde;
    trace.push_back(rec);

    w = std::move(w_next);
  }
  return trace;
}

EstimatedMoments estimate_moments(const Trace& trace, int window,
                                  const HyperParams& hp, bool momentum) {
  if (window < 1) throw std::invalid_argument("config-invalid: window must be >= 1");
  if (trace.size() < static_cast<std::size_t>(window))
    throw std::invalid_argument("trace-too-short");

  EstimatedMoments m{};
  const std::size_t start = trace.size() - static_cast<std::size_t>(window);
  double sum = 0.0;
  for (std::size_t i = start; i < trace.size(); ++i)
    sum += stat_of(trace[i], momentum);
  m.L_hat = sum / window;
  double var = 0.0;
  for (std::size_t i = start; i < trace.size(); ++i) {
    const double d = stat_of(trace[i], momentum) - m.L_hat;
    var += d * d;
  }
  m.V_hat = var / window;

  m.l_hat = stat_of(trace.front(), momentum);
  for (const auto& r : trace) m.l_hat = std::min(m.l_hat, stat_of(r, momentum));

  const Equilibrium eq =
      momentum ? equilibrium_sgdm(m.L_hat, hp) : equilibrium_sgd(m.L_hat, hp);
  const auto early = std::min<std::int64_t>(
      static_cast<std::int64_t>(trace.size()),
      static_cast<std::int64_t>(std::ceil(1.0 / (1.0 - eq.rate))));
  double growth = 1.0;
  m.B_hat = 0.0;
  for (std::int64_t t = 0; t < early; ++t) {
    const double x = trace[static_cast<std::size_t>(t)].weight_norm *
                     trace[static_cast<std::size_t>(t)].weight_norm;
    const double gap = x - eq.x_star;
    m.B_hat = std::max(m.B_hat, growth * gap * gap);
    growth /= eq.rate;
  }
  return m;
}

TransitionCheck verify_transition(const Trace& trace,
                                  std::int64_t drop_iteration, double k,
                                  const HyperParams& hp_after_drop) {
  if (k == 1.0) return {0, 0};
  if (!(k > 1.0)) throw std::invalid_argument("invalid-argument: k must be >= 1");
  if (drop_iteration < 0 ||
      static_cast<std::size_t>(drop_iteration) >= trace.size())
    throw std::invalid_argument("invalid-argument: drop_iteration outside trace");

  const bool momentum = hp_after_drop.alpha > 0.0;
  // Forcing expectation from the window immediately before the drop.
  const std::int64_t lo = std::max<std::int64_t>(0, drop_iteration - 200);
  const std::int64_t n = std::max<std::int64_t>(1, drop_iteration - lo);
  double sum = 0.0;
  for (std::int64_t i = lo; i < lo + n; ++i)
    sum += stat_of(trace[static_cast<std::size_t>(i)], momentum);
  const double L_hat = sum / static_cast<double>(n);

  const Equilibrium eq = momentum ? equilibrium_sgdm(L_hat, hp_after_drop)
                                  : equilibrium_sgd(L_hat, hp_after_drop);
  for (std::size_t t = static_cast<std::size_t>(drop_iteration); t < trace.size(); ++t) {
    const double x = trace[t].weight_norm * trace[t].weight_norm;
    if (std::abs(x - eq.x_star) / eq.x_star < 0.05)
      return {transition_iterations(k, hp_after_drop),
              static_cast<std::int64_t>(t) - drop_iteration};
  }
  throw std::runtime_error("equilibrium-not-reached");
}

nlohmann::json predict(const HyperParams& hp, double L, bool momentum) {
  const Equilibrium eq = momentum ? equilibrium_sgdm(L, hp) : equilibrium_sgd(L, hp);
  json j;
  j["mode"] = momentum ? "sgdm" : "sgd";
  j["hyperparams"] = {{"eta", hp.eta}, {"lambda", hp.lambda}, {"alpha", hp.alpha}};
  j["L"] = L;
  j["w_star"] = eq.w_star;
  j["x_star"] = eq.x_star;
  j["delta_star"] = eq.delta_star;
  j["rate"] = eq.rate;
  j["lambda_eta_marginal"] = hp.marginal_coupling();
  json table = json::object();
  for (double k : {2.0, 5.0, 10.0}) {
    HyperParams post = hp;
    post.eta = hp.eta / k;
    table[format_double(k)] = transition_iterations(k, post);
  }
  j["transition_iterations_after_drop"] = table;
  return j;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out << "iteration,lr,weight_norm,weight_norm_theoretical,angular_update,"
         "angular_update_theoretical,unit_grad_norm_sq,h_tilde\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << format_double(r.lr) << ','
        << format_double(r.weight_norm) << ','
        << format_double(r.weight_norm_theoretical) << ','
        << format_double(r.angular_update) << ','
        << format_double(r.angular_update_theoretical) << ','
        << format_double(r.unit_grad_norm_sq) << ',';
    if (r.h_tilde) out << format_double(*r.h_tilde);
    out << '\n';
  }
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file");
  Trace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (cells.size() != 8) throw std::runtime_error("malformed trace row: " + line);
    TraceRecord r{};
    r.iteration = std::stoll(cells[0]);
    r.lr = std::stod(cells[1]);
    r.weight_norm = std::stod(cells[2]);
    r.weight_norm_theoretical = std::stod(cells[3]);
    r.angular_update = std::stod(cells[4]);
    r.angular_update_theoretical = std::stod(cells[5]);
    r.unit_grad_norm_sq = std::stod(cells[6]);
    if (!cells[7].empty()) r.h_tilde = std::stod(cells[7]);
    trace.push_back(r);
  }
  return trace;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult res;
  res.traces.reserve(static_cast<std::size_t>(config.trials));
  for (int trial = 0; trial < config.trials; ++trial)
    res.traces.push_back(config.is_simulation() ? run_simulation(config, trial)
                                                : run_training(config, trial));

  const bool momentum = config.uses_momentum();
  json summary;
  summary["config"] = {
      {"mode", mode_name(config.mode)},
      {"hyperparams",
       {{"eta", config.hp.eta}, {"lambda", config.hp.lambda}, {"alpha", config.hp.alpha}}},
      {"iterations", config.iterations},
      {"trials", config.trials},
      {"seed", config.seed},
      {"window", config.window},
      {"x0", config.x0},
  };
  json stages = json::array();
  for (const auto& s : config.schedule.stages)
    stages.push_back({{"start_iteration", s.start_iteration},
                      {"divisor", s.lr_divisor}});
  summary["config"]["schedule"] = {
      {"stages", stages},
      {"rescale_on_drop", config.schedule.rescale_on_drop},
      {"rescale_exponent", config.schedule.rescale_exponent}};

  json per_trial = json::array();
  bool all_equilibrated = true;
  double mean_final_x = 0.0;
  for (const auto& trace : res.traces) {
    json tj;
    const auto& last = trace.back();
    const double x_final = last.weight_norm * last.weight_norm;
    mean_final_x += x_final / config.trials;
    tj["final_weight_norm"] = last.weight_norm;
    try {
      const EstimatedMoments m =
          estimate_moments(trace, config.window, config.hp, momentum);
      tj["moments"] = {{"L_hat", m.L_hat},
                       {"V_hat", m.V_hat},
                       {"l_hat", m.l_hat},
                       {"B_hat", m.B_hat}};
      // Final gap against the equilibrium implied by the final lr.
      HyperParams hp_final = config.hp;
      hp_final.eta = config.schedule.lr_at(config.iterations - 1, config.hp.eta);
      const Equilibrium eq = momentum ? equilibrium_sgdm(m.L_hat, hp_final)
                                      : equilibrium_sgd(m.L_hat, hp_final);
      const double gap = std::abs(x_final - eq.x_star) / eq.x_star;
      tj["final_gap_relative"] = gap;
      if (gap >= 0.05) all_equilibrated = false;
    } catch (const std::exception& e) {
      tj["moments_error"] = e.what();
      all_equilibrated = false;
    }
    per_trial.push_back(tj);
  }
  summary["trials_detail"] = per_trial;
  summary["mean_final_squared_norm"] = mean_final_x;

  json transitions = json::array();
  bool transitions_ok = true;
  double lr = config.hp.eta;
  for (const auto& s : config.schedule.stages) {
    lr /= s.lr_divisor;
    json tr = {{"start_iteration", s.start_iteration}, {"divisor", s.lr_divisor}};
    try {
      HyperParams post = config.hp;
      post.eta = lr;
      const TransitionCheck c =
          verify_transition(res.traces.front(), s.start_iteration, s.lr_divisor, post);
      tr["predicted_lower_bound"] = c.predicted;
      tr["measured"] = c.measured;
      const bool ok = config.schedule.rescale_on_drop || c.predicted <= c.measured;
      tr["lower_bound_holds"] = ok;
      if (!ok) transitions_ok = false;
    } catch (const std::exception& e) {
      tr["error"] = e.what();
      transitions_ok = false;
    }
    transitions.push_back(tr);
  }
  summary["transitions"] = transitions;
  summary["checks"] = {{"equilibrium_reached", all_equilibrated},
                       {"transition_lower_bound_ok", transitions_ok}};
  res.summary = std::move(summary);

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    for (int trial = 0; trial < config.trials; ++trial) {
      char name[32];
      std::snprintf(name, sizeof(name), "trace_%03d.csv", trial);
      write_trace_csv(res.traces[static_cast<std::size_t>(trial)],
                      (std::filesystem::path(config.out_dir) / name).string());
    }
    std::ofstream out(std::filesystem::path(config.out_dir) / "summary.json");
    out << res.summary.dump(2) << '\n';
  }
  return res;
}

}  // namespace smd
