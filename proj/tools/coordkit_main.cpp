// coordkit command-line tool.
//
// Exit codes: 0 success, 2 validation error, 3 infeasible configuration,
// 4 internal numeric failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "coordkit/binary.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/io.hpp"

using namespace coordkit;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

struct Flags {
  std::string instance;
  std::string output;
  std::uint64_t seed = 0;
  std::size_t restarts = 16;
  std::size_t max_iters = 500;
  double tol = 1e-9;
  std::size_t w_size = 0;
  std::size_t w1_size = 0;
  std::size_t w2_size = 0;
  double residual_tol = 1e-6;
  bool trace = false;
  std::string mode = "strict";
  double bsc = -1.0;
  double eps = 0.0;
  double p = 0.5;
  double gamma_lo = 0.0, gamma_hi = 1.0, gamma_step = 0.05;
  double eps_lo = 0.0, eps_hi = 0.5, eps_step = 0.05;
  double grid_step = 0.01;
  std::size_t outer_iters = 300;
  std::string aux = "x";
  std::size_t n = 100;
  std::size_t blocks = 12;
  double delta = 0.05;
  double eps_typ = 0.1;
  std::size_t trials = 50;
  std::uint64_t codeword_cap = std::uint64_t{1} << 20;
};

std::uint64_t env_seed() {
  const char* s = std::getenv("COORDKIT_SEED");
  if (!s || !*s) return 0;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigurationError(std::string("COORDKIT_SEED must be an unsigned integer, got '") + s + "'");
  }
}

/// Points lo, lo + step, ..., hi with the last point clamped to hi.
std::vector<double> grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ConfigurationError("step must be > 0");
  if (hi < lo) throw ConfigurationError("range upper end must not be below its lower end");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> out;
  for (std::size_t i = 0; i <= count; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * step));
  if (hi - out.back() > 1e-12) out.push_back(hi);
  return out;
}

/// Records every option of the subcommand, given or defaulted.
RunSpec resolve(const CLI::App& sub, const Flags& f) {
  RunSpec spec;
  spec.subcommand = sub.get_name();
  spec.instance_path = f.instance;
  spec.output_path = f.output;
  for (const auto* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& key = opt->get_lnames().front();
    if (key == "help" || key == "output" || key == "seed") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      value = r.empty() ? "" : r.back();
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) value = opt->count() > 0 ? "true" : "false";
    spec.set(key, value);
  }
  spec.set("seed", std::to_string(f.seed));
  return spec;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open output file '" + path + "'");
  out << text;
}

void emit_json(Json body, const RunSpec& spec, const std::string& path) {
  Json j;
  j["run_spec"] = spec.to_json();
  for (auto& [k, v] : body.items()) j[k] = v;
  emit(j.dump(2) + "\n", path);
}

void emit_csv(const CsvTable& t, const RunSpec& spec, const std::string& path) {
  std::ostringstream os;
  t.write(os, spec);
  emit(os.str(), path);
}

MaximizeOptions strict_options(const Flags& f) {
  MaximizeOptions o;
  o.restarts = f.restarts;
  o.max_iters = f.max_iters;
  o.tol = f.tol;
  o.seed = f.seed;
  o.record_trace = f.trace;
  if (f.w_size > 0) o.w_size = f.w_size;
  return o;
}

StrictInstance game_instance(double eps, double gamma) {
  return StrictInstance(make_source({0.5, 0.5}), binary_symmetric_channel(eps), game_family(gamma).target);
}

int run_eval(const RunSpec& spec, const Flags& f) {
  const auto file = load_instance(f.instance);
  auto opts = strict_options(f);
  if (f.w_size == 0 && file.profile.w_size) opts.w_size = file.profile.w_size;
  emit_json({{"report", to_json(maximize_strict(file.instance, opts))}}, spec, f.output);
  return 0;
}

int run_causal_eval(const RunSpec& spec, const Flags& f) {
  const auto file = load_instance(f.instance);
  CausalOptions o;
  o.restarts = f.restarts;
  o.max_iters = f.max_iters;
  o.tol = f.tol;
  o.residual_tol = f.residual_tol;
  o.seed = f.seed;
  if (f.w1_size > 0) o.w1_size = f.w1_size;
  else if (file.profile.w1_size) o.w1_size = file.profile.w1_size;
  if (f.w2_size > 0) o.w2_size = f.w2_size;
  else if (file.profile.w2_size) o.w2_size = file.profile.w2_size;
  const auto inst = causal_from_strict(file.instance);
  emit_json({{"report", to_json(maximize_causal(inst, o))},
             {"causal_upper_bound", causal_upper_bound(inst)}},
            spec, f.output);
  return 0;
}

int run_check(const RunSpec& spec, const Flags& f) {
  const auto file = load_instance(f.instance);
  const auto& inst = file.instance;
  const auto mode = f.mode == "causal" ? DecompositionMode::Causal : DecompositionMode::Strict;
  emit_json({{"decomposition", to_json(decomposition_check(inst.joint(), inst.source(), inst.channel(), mode))}},
            spec, f.output);
  return 0;
}

int run_capacity(const RunSpec& spec, const Flags& f) {
  if (f.instance.empty() == (f.bsc < 0.0))
    throw ConfigurationError("capacity: give exactly one of an instance file or --bsc");
  const auto channel = f.bsc >= 0.0 ? binary_symmetric_channel(f.bsc) : load_instance(f.instance).instance.channel();
  emit_json({{"capacity", to_json(channel_capacity(channel))}}, spec, f.output);
  return 0;
}

int run_membership(const RunSpec& spec, const Flags& f) {
  const auto file = load_instance(f.instance);
  emit_json({{"membership", to_json(membership(file.instance, strict_options(f)))}}, spec, f.output);
  return 0;
}

int run_sweep_gamma(const RunSpec& spec, const Flags& f) {
  CsvTable t{{"gamma", "lower", "upper", "certified"}, {}};
  auto opts = strict_options(f);
  for (double g : grid(f.gamma_lo, f.gamma_hi, f.gamma_step)) {
    const auto b = coordination_bounds({0.5, f.eps, g});
    const auto r = maximize_strict(game_instance(f.eps, g), opts);
    t.rows.push_back({g, b.lower, b.upper, r.value});
  }
  emit_csv(t, spec, f.output);
  return 0;
}

int run_gamma_star(const RunSpec& spec, const Flags& f) {
  CsvTable t{{"eps", "gamma_star_lower", "gamma_star_upper"}, {}};
  for (double e : grid(f.eps_lo, f.eps_hi, f.eps_step))
    t.rows.push_back({e, gamma_star(e, BoundKind::Lower), gamma_star(e, BoundKind::Upper)});
  emit_csv(t, spec, f.output);
  return 0;
}

int run_dc_region(const RunSpec& spec, const Flags& f) {
  const auto g = distortion_cost_region(f.p, f.eps, f.grid_step);
  CsvTable t{{"cost", "distortion", "constraint", "achievable"}, {}};
  for (const auto& c : g.cells) t.rows.push_back({c.cost, c.distortion, c.constraint, c.achievable ? 1.0 : 0.0});
  emit_csv(t, spec, f.output);
  return 0;
}

int run_utility_max(const RunSpec& spec, const Flags& f) {
  const auto file = load_instance(f.instance);
  if (!file.utility) throw InstanceFormatError("utility-max: instance has no utility, distortion or cost table");
  MaxUtilityOptions o;
  o.outer_iters = f.outer_iters;
  o.restarts = f.restarts;
  o.seed = f.seed;
  emit_json({{"result", to_json(max_utility_generic(file.instance.source(), file.instance.channel(),
                                                    *file.utility, o))}},
            spec, f.output);
  return 0;
}

int run_simulate(const RunSpec& spec, const Flags& f) {
  const auto file = load_instance(f.instance);
  const auto& inst = file.instance;
  CodeConfig cfg;
  cfg.n = f.n;
  cfg.blocks = f.blocks;
  cfg.delta = f.delta;
  cfg.eps_typ = f.eps_typ;
  cfg.seed = f.seed;
  cfg.codeword_cap = f.codeword_cap;

  auto aux = [&] {
    if (f.aux == "degenerate") return aux_degenerate(inst);
    if (f.aux == "optimized") {
      auto r = maximize_strict(inst, strict_options(f));
      return *r.certificate;
    }
    return aux_equal_to_x(inst);
  };
  const auto scheme = f.mode == "zero-capacity" ? SimScheme::zero_capacity(inst, cfg)
                      : f.mode == "causal"      ? SimScheme::causal(causal_embedding(inst, aux()), cfg)
                                                : SimScheme::strict(inst, aux(), cfg);
  const auto s = monte_carlo(scheme, f.trials);
  CsvTable t{{"n", "B", "delta", "eps_typ", "trials", "pe", "ci_halfwidth", "mean_tv_full", "mean_tv_trunc",
              "rate_cover_v", "rate_cover_w", "rate_packing", "rate_init", "mixing_identity_ok", "typicality_implication_ok"},
             {}};
  t.rows.push_back({static_cast<double>(cfg.n), static_cast<double>(cfg.blocks), cfg.delta, cfg.eps_typ,
                    static_cast<double>(s.trials), s.pe, s.ci_halfwidth, s.mean_tv_full, s.mean_tv_truncated,
                    s.rates.cover_v, s.rates.cover_w, s.rates.packing, s.rates.init,
                    s.mixing_identity_ok ? 1.0 : 0.0, s.typicality_implication_ok ? 1.0 : 0.0});
  emit_csv(t, spec, f.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordkit: empirical coordination constraints, regions and coding simulation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Flags f;
  std::function<int(const RunSpec&, const Flags&)> action;
  CLI::App* chosen = nullptr;

  const auto unit = CLI::Range(0.0, 1.0);
  auto add = [&](const char* name, const char* desc, auto fn) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("-o,--output", f.output, "Output file (stdout when omitted)");
    sub->add_option("--seed", f.seed, "Random seed (falls back to COORDKIT_SEED)");
    sub->callback([&, sub, fn] {
      chosen = sub;
      action = fn;
    });
    return sub;
  };
  auto restarts_flag = [&](CLI::App* sub, int restarts) {
    sub->add_option("--restarts", f.restarts, "Random restarts")->default_str(std::to_string(restarts));
  };
  auto solver_flags = [&](CLI::App* sub, int restarts) {
    restarts_flag(sub, restarts);
    sub->add_option("--max-iters", f.max_iters, "Iteration budget per start")->check(CLI::PositiveNumber);
    sub->add_option("--tol", f.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  };

  auto* eval = add("eval", "Certified strictly causal constraint (JSON)", run_eval);
  eval->add_option("instance", f.instance, "Instance JSON")->required();
  solver_flags(eval, 16);
  eval->add_option("--w-size", f.w_size, "Auxiliary alphabet size (0: default ceiling)");
  eval->add_flag("--trace", f.trace, "Record objective traces");

  auto* causal = add("causal-eval", "Causal constraint by penalty search (JSON)", run_causal_eval);
  causal->add_option("instance", f.instance, "Instance JSON")->required();
  restarts_flag(causal, 4);
  causal->add_option("--max-iters", f.max_iters, "Iteration budget per start")->check(CLI::PositiveNumber);
  causal->add_option("--tol", f.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  causal->add_option("--residual-tol", f.residual_tol, "Marginal residual accepted as exact")
      ->check(CLI::PositiveNumber);
  causal->add_option("--w1-size", f.w1_size, "W1 alphabet size (0: default ceiling)");
  causal->add_option("--w2-size", f.w2_size, "W2 alphabet size (0: default ceiling)");

  auto* check = add("check", "Factorization check of the instance joint (JSON)", run_check);
  check->add_option("instance", f.instance, "Instance JSON")->required();
  check->add_option("--mode", f.mode, "strict or causal")->check(CLI::IsMember({"strict", "causal"}));

  auto* cap = add("capacity", "Channel capacity by Blahut-Arimoto (JSON)", run_capacity);
  cap->add_option("instance", f.instance, "Instance JSON");
  cap->add_option("--bsc", f.bsc, "Use BSC(crossover) instead of an instance")->check(unit);

  auto* mem = add("membership", "Achievability verdict (JSON)", run_membership);
  mem->add_option("instance", f.instance, "Instance JSON")->required();
  solver_flags(mem, 16);

  auto* sweep = add("sweep-gamma", "Coordination game bounds and certified values over gamma (CSV)",
                    run_sweep_gamma);
  sweep->add_option("--eps", f.eps, "BSC crossover")->check(unit);
  sweep->add_option("--gamma-lo", f.gamma_lo, "First gamma")->check(unit);
  sweep->add_option("--gamma-hi", f.gamma_hi, "Last gamma")->check(unit);
  sweep->add_option("--gamma-step", f.gamma_step, "Gamma step")->check(CLI::PositiveNumber);
  solver_flags(sweep, 2);

  auto* gstar = add("gamma-star", "Boundary gamma of both bounds over a crossover range (CSV)", run_gamma_star);
  gstar->add_option("--eps-lo", f.eps_lo, "First crossover")->check(CLI::Range(0.0, 0.5));
  gstar->add_option("--eps-hi", f.eps_hi, "Last crossover")->check(CLI::Range(0.0, 0.5));
  gstar->add_option("--eps-step", f.eps_step, "Crossover step")->check(CLI::PositiveNumber);

  auto* dc = add("dc-region", "Binary distortion-cost region grid (CSV)", run_dc_region);
  dc->add_option("--p", f.p, "P(U = 0)")->check(unit);
  dc->add_option("--eps", f.eps, "BSC crossover")->check(unit);
  dc->add_option("--grid-step", f.grid_step, "Grid step")->check(CLI::Range(1e-6, 1.0));

  auto* umax = add("utility-max", "Maximize expected utility over achievable targets (JSON)", run_utility_max);
  umax->add_option("instance", f.instance, "Instance JSON with utility, distortion or cost")->required();
  umax->add_option("--outer-iters", f.outer_iters, "Projected ascent iterations")->check(CLI::PositiveNumber);
  restarts_flag(umax, 2);

  auto* sim = add("simulate", "Monte-Carlo block-Markov coding simulation (CSV)", run_simulate);
  sim->add_option("instance", f.instance, "Instance JSON")->required();
  sim->add_option("--mode", f.mode, "strict, causal or zero-capacity")
      ->check(CLI::IsMember({"strict", "causal", "zero-capacity"}));
  sim->add_option("--aux", f.aux, "Auxiliary kernel: x, degenerate or optimized")
      ->check(CLI::IsMember({"x", "degenerate", "optimized"}));
  sim->add_option("--n", f.n, "Block length")->check(CLI::PositiveNumber);
  sim->add_option("--blocks", f.blocks, "Number of blocks (>= 3)")->check(CLI::Range(3, 1000000));
  sim->add_option("--delta", f.delta, "Rate slack")->check(CLI::PositiveNumber);
  sim->add_option("--eps-typ", f.eps_typ, "Typicality tolerance")->check(CLI::PositiveNumber);
  sim->add_option("--trials", f.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
  sim->add_option("--codeword-cap", f.codeword_cap, "Largest total codebook size")->check(CLI::PositiveNumber);

  try {
    f.seed = env_seed();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  if (const auto* opt = chosen->get_option_no_throw("--restarts"); opt && opt->count() == 0)
    f.restarts = std::stoul(opt->get_default_str());

  try {
    const auto spec = resolve(*chosen, f);
    return action(spec, f);
  } catch (const InstanceFormatError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConfigurationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
