// amid: assistant-mixture distillation experiments at desk scale.
//
// Subcommands: mixture, divergence, grad-check, fit-simplex, toy, sweep,
// distill. Configuration comes from built-in defaults, then an optional
// JSON --config file (unknown keys rejected), then flag overrides. Every
// output embeds the resolved config, so a run can be reproduced
// bit-identically from its own echo.
//
// Exit codes: 0 success, 1 verification failure, 2 bad config, 3 numerical
// failure.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "amid/errors.hpp"
#include "commands.hpp"
#include "util.hpp"

namespace {

using amid::cli::ConfigError;
using nlohmann::json;

json defaults_for(const std::string& command) {
  json d;
  d["seed"] = 1;
  if (command == "grad-check") {
    d["seed"] = 20240817;
    d["rel_tol"] = 1e-5;
    d["zero_tol"] = 1e-9;
    d["negative_control"] = false;
  } else if (command == "fit-simplex") {
    d["k"] = 10;
    d["divergence"] = "kl";
    d["direction"] = "teacher";
    d["steps"] = 5000;
    d["lr"] = 0.1;
    d["stop_tv"] = 0.0;
  } else if (command == "toy") {
    d["alpha"] = -3.0;
    d["lambda"] = 0.3;
    d["steps"] = 5000;
    d["lr"] = 5e-2;
    d["x_min"] = -10.0;
    d["x_max"] = 10.0;
    d["grid_n"] = 2048;
    d["teacher"] = json::array({json::array({0.7, -3.0, 2.0}),
                                json::array({0.3, 3.0, 0.8})});
    d["init_mu"] = 0.0;
    d["init_sigma"] = 1.0;
    d["gaussian_arg_convention"] = "variance";
  } else if (command == "sweep") {
    d["alphas"] = json::array({-5.0, -1.0, 0.0, 0.5});
    d["lambdas"] = json::array({0.1, 0.5, 0.9});
    d["divergences"] = json::array({"kl"});
    d["directions"] = json::array({"teacher", "student"});
    d["k"] = 10;
    d["teachers_per_cell"] = 5;
    d["steps"] = 5000;
    d["lr"] = 0.1;
    d["tv_threshold"] = 1e-3;
    d["parallel"] = true;
  } else if (command == "distill") {
    d["vocab"] = 8;
    d["max_len"] = 6;
    d["strategy"] = "on-policy";
    d["mix_prob"] = 0.5;
    d["buffer_size"] = 256;
    d["refresh_interval"] = 100;
    d["alpha"] = -3.0;
    d["lambda"] = 0.1;
    d["divergence"] = "kl";
    d["direction"] = "teacher";
    d["steps"] = 2000;
    d["lr"] = 5e-2;
    d["batch"] = 16;
  }
  return d;
}

std::set<std::string> allowed_keys_for(const std::string& command) {
  std::set<std::string> keys{"seed", "out"};
  const json defaults = defaults_for(command);
  for (const auto& [key, value] : defaults.items()) {
    keys.insert(key);
  }
  if (command == "mixture") {
    keys.insert({"p", "q", "alpha", "lambda"});
  } else if (command == "divergence") {
    keys.insert({"p", "q", "divergence", "lambda"});
  } else if (command == "fit-simplex") {
    keys.insert({"alpha", "lambda", "teacher", "beta1", "beta2", "eps"});
  } else if (command == "toy" || command == "distill") {
    keys.insert({"beta1", "beta2", "eps"});
  } else if (command == "sweep") {
    keys.insert({"beta1", "beta2", "eps"});
  }
  return keys;
}

json parse_number_list(const std::string& text, const std::string& flag) {
  json arr = json::array();
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      const double value = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      arr.push_back(value);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": '" + item + "' is not a number");
    }
  }
  if (arr.empty()) throw ConfigError(flag + ": empty list");
  return arr;
}

json parse_string_list(const std::string& text) {
  json arr = json::array();
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) arr.push_back(item);
  return arr;
}

struct Flags {
  std::optional<double> alpha, lambda, lr, stop_tv, tv_threshold, mix_prob,
      rel_tol, x_min, x_max, init_mu, init_sigma;
  std::optional<int> steps, k, vocab, max_len, batch, teachers_per_cell,
      buffer_size, refresh_interval, grid_n;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> divergence, direction, config_path, out, p, q,
      strategy, alphas, lambdas, divergences, directions;
  bool negative_control = false;
  std::optional<bool> parallel;
};

// defaults <- config file <- flags; unknown file keys are rejected.
json resolve_config(const std::string& command, const Flags& flags) {
  json config = defaults_for(command);
  if (flags.config_path.has_value()) {
    const json file = amid::cli::read_json_file(*flags.config_path);
    if (!file.is_object()) throw ConfigError("config file must be an object");
    const auto allowed = allowed_keys_for(command);
    for (const auto& [key, value] : file.items()) {
      if (allowed.find(key) == allowed.end()) {
        throw ConfigError("unknown config key '" + key + "' for subcommand '" +
                          command + "'");
      }
      config[key] = value;
    }
  }

  const auto set_num = [&](const char* key, const std::optional<double>& v) {
    if (v.has_value()) config[key] = *v;
  };
  const auto set_int = [&](const char* key, const std::optional<int>& v) {
    if (v.has_value()) config[key] = *v;
  };
  const auto set_str = [&](const char* key,
                           const std::optional<std::string>& v) {
    if (v.has_value()) config[key] = *v;
  };

  if (command == "sweep") {
    // Singular flags select a single cell; plural flags give full lists.
    if (flags.alpha.has_value()) config["alphas"] = json::array({*flags.alpha});
    if (flags.lambda.has_value()) {
      config["lambdas"] = json::array({*flags.lambda});
    }
    if (flags.divergence.has_value()) {
      config["divergences"] = json::array({*flags.divergence});
    }
    if (flags.direction.has_value()) {
      config["directions"] = json::array({*flags.direction});
    }
    if (flags.alphas.has_value()) {
      config["alphas"] = parse_number_list(*flags.alphas, "--alphas");
    }
    if (flags.lambdas.has_value()) {
      config["lambdas"] = parse_number_list(*flags.lambdas, "--lambdas");
    }
    if (flags.divergences.has_value()) {
      config["divergences"] = parse_string_list(*flags.divergences);
    }
    if (flags.directions.has_value()) {
      config["directions"] = parse_string_list(*flags.directions);
    }
    set_int("teachers_per_cell", flags.teachers_per_cell);
    set_num("tv_threshold", flags.tv_threshold);
    if (flags.parallel.has_value()) config["parallel"] = *flags.parallel;
  } else {
    set_num("alpha", flags.alpha);
    set_num("lambda", flags.lambda);
    set_str("divergence", flags.divergence);
    set_str("direction", flags.direction);
  }

  if (flags.p.has_value()) config["p"] = parse_number_list(*flags.p, "--p");
  if (flags.q.has_value()) config["q"] = parse_number_list(*flags.q, "--q");
  if (flags.seed.has_value()) config["seed"] = *flags.seed;
  set_str("out", flags.out);
  set_int("steps", flags.steps);
  set_num("lr", flags.lr);
  set_int("k", flags.k);
  set_num("stop_tv", flags.stop_tv);
  set_num("rel_tol", flags.rel_tol);
  if (flags.negative_control) config["negative_control"] = true;
  set_str("strategy", flags.strategy);
  set_num("mix_prob", flags.mix_prob);
  set_int("buffer_size", flags.buffer_size);
  set_int("refresh_interval", flags.refresh_interval);
  set_int("vocab", flags.vocab);
  set_int("max_len", flags.max_len);
  set_int("batch", flags.batch);
  set_num("x_min", flags.x_min);
  set_num("x_max", flags.x_max);
  set_int("grid_n", flags.grid_n);
  set_num("init_mu", flags.init_mu);
  set_num("init_sigma", flags.init_sigma);

  if (command == "toy" &&
      config.value("gaussian_arg_convention", "") != "variance") {
    throw ConfigError("gaussian_arg_convention must be 'variance'");
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "amid: alpha-mixture assistant distributions, divergences and "
      "distillation trainers"};
  app.require_subcommand(1);

  Flags flags;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", flags.seed, "RNG seed (echoed in outputs)");
    sub->add_option("--config", flags.config_path, "JSON config file");
    sub->add_option("--out", flags.out,
                    "output path; writes <out>.json and, for trajectory "
                    "commands, <out>.csv");
  };

  CLI::App* mixture = app.add_subcommand(
      "mixture", "Build the assistant mixture r of p and q");
  add_common(mixture);
  mixture->add_option("--p", flags.p, "teacher probabilities, comma separated");
  mixture->add_option("--q", flags.q, "student probabilities, comma separated");
  mixture->add_option("--alpha", flags.alpha, "mixture geometry parameter");
  mixture->add_option("--lambda", flags.lambda, "interpolation weight on p");

  CLI::App* divergence = app.add_subcommand(
      "divergence", "Evaluate a named divergence between p and q");
  add_common(divergence);
  divergence->add_option("--p", flags.p, "first distribution");
  divergence->add_option("--q", flags.q, "second distribution");
  divergence->add_option(
      "--divergence", flags.divergence,
      "kl|rkl|skl|srkl|gjs|jeffreys|alpha:<a>|ab:<a>,<b>");
  divergence->add_option("--lambda", flags.lambda,
                         "skew parameter for skl/srkl/gjs");

  CLI::App* grad = app.add_subcommand(
      "grad-check", "Run the seeded analytic-vs-numeric gradient suite");
  add_common(grad);
  grad->add_option("--rel-tol", flags.rel_tol, "relative error bound");
  grad->add_flag("--negative-control", flags.negative_control,
                 "testing fixture: inject a wrong-sign gradient; the run "
                 "must then exit 1");

  CLI::App* fit = app.add_subcommand(
      "fit-simplex", "Adam on the assistant-mixture loss over a K-simplex");
  add_common(fit);
  fit->add_option("--alpha", flags.alpha, "mixture geometry parameter");
  fit->add_option("--lambda", flags.lambda, "interpolation weight on p");
  fit->add_option("--divergence", flags.divergence, "kl|rkl|jeffreys");
  fit->add_option("--direction", flags.direction, "teacher|student");
  fit->add_option("--steps", flags.steps, "Adam steps");
  fit->add_option("--lr", flags.lr, "Adam learning rate");
  fit->add_option("--k", flags.k, "teacher size when drawn from the seed");
  fit->add_option("--stop-tv", flags.stop_tv, "early-stop TV threshold");

  CLI::App* toy = app.add_subcommand(
      "toy", "Fit a 1-D Gaussian student against a mixture teacher");
  add_common(toy);
  toy->add_option("--alpha", flags.alpha, "mixture geometry parameter");
  toy->add_option("--lambda", flags.lambda, "interpolation weight on p");
  toy->add_option("--steps", flags.steps, "Adam steps");
  toy->add_option("--lr", flags.lr, "Adam learning rate");
  toy->add_option("--grid-n", flags.grid_n, "quadrature grid points");
  toy->add_option("--x-min", flags.x_min, "grid lower edge");
  toy->add_option("--x-max", flags.x_max, "grid upper edge");
  toy->add_option("--init-mu", flags.init_mu, "student initial mean");
  toy->add_option("--init-sigma", flags.init_sigma,
                  "student initial standard deviation");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Grid of fit-simplex cells over divergence/direction/alpha/"
               "lambda");
  add_common(sweep);
  sweep->add_option("--alpha", flags.alpha, "single-cell alpha");
  sweep->add_option("--lambda", flags.lambda, "single-cell lambda");
  sweep->add_option("--divergence", flags.divergence, "single-cell divergence");
  sweep->add_option("--direction", flags.direction, "single-cell direction");
  sweep->add_option("--alphas", flags.alphas, "comma list of alphas");
  sweep->add_option("--lambdas", flags.lambdas, "comma list of lambdas");
  sweep->add_option("--divergences", flags.divergences,
                    "comma list of generators");
  sweep->add_option("--directions", flags.directions,
                    "comma list of directions");
  sweep->add_option("--steps", flags.steps, "Adam steps per run");
  sweep->add_option("--lr", flags.lr, "Adam learning rate");
  sweep->add_option("--k", flags.k, "teacher size");
  sweep->add_option("--teachers-per-cell", flags.teachers_per_cell,
                    "teachers per cell");
  sweep->add_option("--tv-threshold", flags.tv_threshold,
                    "convergence TV threshold");
  sweep->add_flag("--parallel,!--no-parallel", flags.parallel,
                  "fan cells out to parallel tasks");

  CLI::App* distill = app.add_subcommand(
      "distill", "Token-level tabular distillation with an SGO strategy");
  add_common(distill);
  distill->add_option("--alpha", flags.alpha, "mixture geometry parameter");
  distill->add_option("--lambda", flags.lambda, "interpolation weight on p");
  distill->add_option("--divergence", flags.divergence, "kl|rkl|jeffreys");
  distill->add_option("--direction", flags.direction, "teacher|student");
  distill->add_option("--steps", flags.steps, "training steps");
  distill->add_option("--lr", flags.lr, "Adam learning rate");
  distill->add_option("--strategy", flags.strategy,
                      "fixed|on-policy|mixed|adaptive-off-policy");
  distill->add_option("--mix-prob", flags.mix_prob,
                      "mixed: probability of a teacher sequence");
  distill->add_option("--buffer-size", flags.buffer_size,
                      "adaptive-off-policy replay buffer size");
  distill->add_option("--refresh-interval", flags.refresh_interval,
                      "adaptive-off-policy refresh period");
  distill->add_option("--vocab", flags.vocab, "vocabulary size");
  distill->add_option("--max-len", flags.max_len, "sequence length");
  distill->add_option("--batch", flags.batch, "sequences per step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return amid::cli::kExitBadConfig;
  }

  const std::map<std::string, int (*)(nlohmann::json)> dispatch{
      {"mixture", &amid::cli::run_mixture},
      {"divergence", &amid::cli::run_divergence},
      {"grad-check", &amid::cli::run_grad_check},
      {"fit-simplex", &amid::cli::run_fit_simplex},
      {"toy", &amid::cli::run_toy},
      {"sweep", &amid::cli::run_sweep},
      {"distill", &amid::cli::run_distill},
  };

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    amid::cli::log_level();  // validate AMID_LOG_LEVEL up front
    const json config = resolve_config(command, flags);
    amid::cli::log_debug("resolved config: " + config.dump());
    return dispatch.at(command)(config);
  } catch (const ConfigError& e) {
    amid::cli::log_error(e.what());
    return amid::cli::kExitBadConfig;
  } catch (const amid::cli::NumericalFailure& e) {
    amid::cli::log_error(e.what());
    return amid::cli::kExitNumericalFailure;
  } catch (const amid::EmptySupport& e) {
    amid::cli::log_error(e.what());
    return amid::cli::kExitNumericalFailure;
  } catch (const amid::NonFiniteLoss& e) {
    amid::cli::log_error(e.what());
    return amid::cli::kExitNumericalFailure;
  } catch (const amid::Error& e) {
    amid::cli::log_error(e.what());
    return amid::cli::kExitBadConfig;
  } catch (const std::exception& e) {
    amid::cli::log_error(e.what());
    return amid::cli::kExitNumericalFailure;
  }
}
