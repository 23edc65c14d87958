#include "coordkit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "coordkit/errors.hpp"

namespace coordkit {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw InstanceFormatError(msg); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) fail("instance: expected a JSON object");
  const auto it = j.find(name);
  if (it == j.end()) fail(std::string("instance: missing field '") + name + "'");
  return *it;
}

std::size_t size_field(const Json& alph, const char* name) {
  const auto& v = field(alph, name);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    fail(std::string("alphabets.") + name + ": expected a positive integer");
  return v.get<std::size_t>();
}

std::vector<double> numbers(const Json& j, const std::string& where, std::size_t expected) {
  if (!j.is_array()) fail(where + ": expected an array");
  if (j.size() != expected)
    fail(where + ": expected " + std::to_string(expected) + " entries, got " +
         std::to_string(j.size()));
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(where + "[" + std::to_string(i) + "]: expected a number");
    const double v = j[i].get<double>();
    if (!std::isfinite(v)) fail(where + "[" + std::to_string(i) + "]: non-finite entry");
    out.push_back(v);
  }
  return out;
}

std::vector<double> probability_row(const Json& j, const std::string& where, std::size_t expected) {
  auto row = numbers(j, where, expected);
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] < 0.0)
      fail(where + "[" + std::to_string(i) + "]: negative probability " + fmt(row[i]));
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > kDistTolerance)
    fail(where + ": entries sum to " + fmt(sum) + ", expected 1 within 1e-9");
  return row;
}

std::vector<double> probability_rows(const Json& j, const std::string& where, std::size_t count,
                                     std::size_t width) {
  if (!j.is_array()) fail(where + ": expected an array of rows");
  if (j.size() != count)
    fail(where + ": expected " + std::to_string(count) + " rows, got " + std::to_string(j.size()));
  std::vector<double> out;
  out.reserve(count * width);
  for (std::size_t r = 0; r < count; ++r) {
    const auto row = probability_row(j[r], where + "[" + std::to_string(r) + "]", width);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

Json axes_json(const AxisList& axes) {
  Json a = Json::array();
  for (const auto& ax : axes) a.push_back({{"name", ax.name}, {"size", ax.size}});
  return a;
}

AxisList axes_from_json(const Json& j) {
  AxisList axes;
  for (const auto& a : j) axes.push_back({a.at("name").get<std::string>(), a.at("size").get<std::size_t>()});
  return axes;
}

Json aux_json(const AuxKernelW& a) {
  return {{"w_size", a.w_size}, {"overridden", a.overridden}, {"kernel", to_json(a.kernel)}};
}

}  // namespace

// ---------------------------------------------------------------- instances

InstanceFile parse_instance(const Json& j) {
  const auto& alph = field(j, "alphabets");
  AlphabetProfile p;
  p.u_size = size_field(alph, "U");
  p.x_size = size_field(alph, "X");
  p.y_size = size_field(alph, "Y");
  p.v_size = size_field(alph, "V");
  if (alph.contains("W")) p.w_size = size_field(alph, "W");
  if (alph.contains("W1")) p.w1_size = size_field(alph, "W1");
  if (alph.contains("W2")) p.w2_size = size_field(alph, "W2");

  auto source = probability_row(field(j, "source"), "source", p.u_size);
  auto channel = probability_rows(field(j, "channel"), "channel", p.x_size, p.y_size);
  auto target = probability_rows(field(j, "target"), "target", p.u_size, p.x_size * p.v_size);
  StrictInstance inst(make_source(std::move(source)), make_channel(p.x_size, p.y_size, std::move(channel)),
                      make_target(p.u_size, p.x_size, p.v_size, std::move(target)));

  std::optional<UtilitySpec> util;
  if (j.contains("distortion") || j.contains("cost")) {
    std::vector<double> dist(p.u_size * p.v_size, 0.0), cost(p.x_size, 0.0);
    if (j.contains("distortion")) {
      const auto& d = j["distortion"];
      if (!d.is_array() || d.size() != p.u_size)
        fail("distortion: expected " + std::to_string(p.u_size) + " rows");
      for (std::size_t u = 0; u < p.u_size; ++u) {
        const auto row = numbers(d[u], "distortion[" + std::to_string(u) + "]", p.v_size);
        std::copy(row.begin(), row.end(), dist.begin() + static_cast<std::ptrdiff_t>(u * p.v_size));
      }
    }
    if (j.contains("cost")) cost = numbers(j["cost"], "cost", p.x_size);
    util = UtilitySpec::from_distortion_cost(p, std::move(dist), std::move(cost));
  }
  if (j.contains("utility")) {
    UtilitySpec u;
    u.u_size = p.u_size;
    u.x_size = p.x_size;
    u.y_size = p.y_size;
    u.v_size = p.v_size;
    u.phi = numbers(j["utility"], "utility", p.u_size * p.x_size * p.y_size * p.v_size);
    if (util) {
      u.distortion = util->distortion;
      u.cost = util->cost;
    }
    util = std::move(u);
  }
  return {std::move(inst), p, std::move(util)};
}

InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InstanceFormatError("cannot open instance file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw InstanceFormatError("instance file '" + path + "': " + e.what());
  }
  return parse_instance(j);
}

Json instance_to_json(const StrictInstance& inst) {
  const auto& p = inst.profile();
  Json j;
  j["alphabets"] = {{"U", p.u_size}, {"X", p.x_size}, {"Y", p.y_size}, {"V", p.v_size}};
  j["source"] = std::vector<double>(inst.source().table().begin(), inst.source().table().end());
  Json ch = Json::array();
  for (std::size_t x = 0; x < p.x_size; ++x) {
    const auto r = inst.channel().row(x);
    ch.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["channel"] = ch;
  Json tg = Json::array();
  for (std::size_t u = 0; u < p.u_size; ++u) {
    const auto r = inst.target().row(u);
    tg.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["target"] = tg;
  return j;
}

// ---------------------------------------------------------- distributions

Json to_json(const FiniteDist& d) {
  return {{"axes", axes_json(d.axes())},
          {"table", std::vector<double>(d.table().begin(), d.table().end())}};
}

Json to_json(const Kernel& k) {
  return {{"given", axes_json(k.given())},
          {"target", axes_json(k.target())},
          {"rows", std::vector<double>(k.data().begin(), k.data().end())}};
}

FiniteDist dist_from_json(const Json& j) {
  return FiniteDist(axes_from_json(j.at("axes")), j.at("table").get<std::vector<double>>());
}

Kernel kernel_from_json(const Json& j) {
  return Kernel(axes_from_json(j.at("given")), axes_from_json(j.at("target")),
                j.at("rows").get<std::vector<double>>());
}

// ------------------------------------------------------------------ reports

Verdict verdict_from_string(const std::string& s) {
  for (auto v : {Verdict::Achievable, Verdict::NotAchievable, Verdict::Undetermined})
    if (s == to_string(v)) return v;
  throw InstanceFormatError("unknown verdict '" + s + "'");
}

Json to_json(const ConstraintReport& r) {
  Json j;
  j["value"] = r.value;
  j["lower_bound"] = r.lower_bound;
  j["upper_bound"] = r.upper_bound;
  j["verdict"] = to_string(r.verdict);
  j["closed_form"] = r.closed_form ? Json{{"label", r.closed_form->label}, {"value", r.closed_form->value}}
                                   : Json(nullptr);
  j["restarts_used"] = r.restarts_used;
  j["iterations"] = r.iterations;
  j["best_start"] = r.best_start;
  j["marginal_residual"] = r.marginal_residual;
  j["certificate"] = r.certificate ? aux_json(*r.certificate) : Json(nullptr);
  if (r.causal_certificate) {
    const auto& c = *r.causal_certificate;
    j["causal_certificate"] = {{"source", to_json(c.source())},
                               {"channel", to_json(c.channel())},
                               {"front", to_json(c.front())},
                               {"back", to_json(c.back())}};
  } else {
    j["causal_certificate"] = nullptr;
  }
  j["traces"] = r.traces;
  return j;
}

ConstraintReport report_from_json(const Json& j) {
  try {
    ConstraintReport r;
    r.value = j.at("value").get<double>();
    r.lower_bound = j.at("lower_bound").get<double>();
    r.upper_bound = j.at("upper_bound").get<double>();
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (const auto& cf = j.at("closed_form"); !cf.is_null())
      r.closed_form = ClosedForm{cf.at("label").get<std::string>(), cf.at("value").get<double>()};
    r.restarts_used = j.at("restarts_used").get<std::size_t>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.best_start = j.at("best_start").get<std::string>();
    r.marginal_residual = j.at("marginal_residual").get<double>();
    if (const auto& c = j.at("certificate"); !c.is_null())
      r.certificate = AuxKernelW{c.at("w_size").get<std::size_t>(), kernel_from_json(c.at("kernel")),
                                 c.at("overridden").get<bool>()};
    if (const auto& c = j.at("causal_certificate"); !c.is_null())
      r.causal_certificate = CausalStructure(dist_from_json(c.at("source")), kernel_from_json(c.at("channel")),
                                             kernel_from_json(c.at("front")), kernel_from_json(c.at("back")));
    r.traces = j.at("traces").get<std::vector<std::vector<double>>>();
    return r;
  } catch (const Json::exception& e) {
    throw InstanceFormatError(std::string("report: ") + e.what());
  }
}

Json to_json(const CapacityResult& r) {
  return {{"capacity", r.capacity},
          {"argmax_input", std::vector<double>(r.argmax_input.table().begin(), r.argmax_input.table().end())},
          {"iterations", r.iterations}};
}

Json to_json(const MembershipResult& r) {
  return {{"verdict", to_string(r.verdict)},
          {"capacity", r.capacity},
          {"zero_capacity_rule", r.zero_capacity_rule},
          {"source_target_information", r.source_target_information},
          {"report", to_json(r.report)}};
}

Json to_json(const MaxUtilityResult& r) {
  Json rows = Json::array();
  for (std::size_t u = 0; u < r.target_star.given_count(); ++u) {
    const auto row = r.target_star.row(u);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"utility", r.utility},
          {"origin", r.origin},
          {"fallback", r.fallback},
          {"target", rows},
          {"report", to_json(r.report)}};
}

Json to_json(const DecompositionResult& r) {
  return {{"pass", r.pass}, {"max_deviation", r.max_deviation}};
}

Json to_json(const RatePlan& p) {
  return {{"r", p.r},
          {"r_l", p.r_l},
          {"i_source", p.i_source},
          {"i_bin", p.i_bin},
          {"i_pack", p.i_pack},
          {"capacity", p.capacity},
          {"slack", p.slack},
          {"init_margin", p.init_margin},
          {"feasible", p.feasible},
          {"violated", p.violated}};
}

Json to_json(const MonteCarloSummary& s) {
  return {{"trials", s.trials},
          {"pe", s.pe},
          {"ci_halfwidth", s.ci_halfwidth},
          {"mean_tv_full", s.mean_tv_full},
          {"mean_tv_trunc", s.mean_tv_truncated},
          {"rate_cover_v", s.rates.cover_v},
          {"rate_cover_w", s.rates.cover_w},
          {"rate_packing", s.rates.packing},
          {"rate_init", s.rates.init},
          {"mixing_identity_ok", s.mixing_identity_ok},
          {"typicality_implication_ok", s.typicality_implication_ok}};
}

// --------------------------------------------------------------------- runs

void RunSpec::set(std::string name, std::string value) {
  for (auto& [k, v] : params)
    if (k == name) {
      v = std::move(value);
      return;
    }
  params.emplace_back(std::move(name), std::move(value));
}

Json RunSpec::to_json() const {
  Json p = Json::object();
  for (const auto& [k, v] : params) p[k] = v;
  return {{"subcommand", subcommand},
          {"instance_path", instance_path},
          {"output_path", output_path},
          {"params", p}};
}

std::string format_number(double v) { return fmt(v); }

void CsvTable::write(std::ostream& os, const RunSpec& spec) const {
  os << "# run_spec: " << spec.to_json().dump() << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
    os << '\n';
  }
}

}  // namespace coordkit
