#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coordkit/binary.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/io.hpp"

namespace py = pybind11;
using namespace coordkit;

namespace {

StrictInstance instance_from(const std::string& text) { return parse_instance(Json::parse(text)).instance; }

std::string evaluate(const std::string& instance, std::size_t restarts, std::uint64_t seed) {
  MaximizeOptions o;
  o.restarts = restarts;
  o.seed = seed;
  return to_json(maximize_strict(instance_from(instance), o)).dump();
}

std::string evaluate_causal(const std::string& instance, std::size_t restarts, std::uint64_t seed) {
  CausalOptions o;
  o.restarts = restarts;
  o.seed = seed;
  return to_json(maximize_causal(causal_from_strict(instance_from(instance)), o)).dump();
}

std::string check_membership(const std::string& instance, std::size_t restarts, std::uint64_t seed) {
  MaximizeOptions o;
  o.restarts = restarts;
  o.seed = seed;
  return to_json(membership(instance_from(instance), o)).dump();
}

double capacity(std::size_t x_size, std::size_t y_size, std::vector<double> rows) {
  return channel_capacity(make_channel(x_size, y_size, std::move(rows))).capacity;
}

std::string simulate(const std::string& instance, std::size_t n, std::size_t blocks, double delta,
                     double eps_typ, std::size_t trials, std::uint64_t seed, const std::string& mode) {
  const auto inst = instance_from(instance);
  CodeConfig cfg;
  cfg.n = n;
  cfg.blocks = blocks;
  cfg.delta = delta;
  cfg.eps_typ = eps_typ;
  cfg.seed = seed;
  const auto scheme = mode == "zero-capacity" ? SimScheme::zero_capacity(inst, cfg)
                      : mode == "causal" ? SimScheme::causal(causal_embedding(inst, aux_equal_to_x(inst)), cfg)
                                         : SimScheme::strict(inst, aux_equal_to_x(inst), cfg);
  return to_json(monte_carlo(scheme, trials)).dump();
}

}  // namespace

PYBIND11_MODULE(_coordkit, m) {
  m.doc() = "Empirical coordination constraints and coding simulation";

  py::register_exception<InstanceFormatError>(m, "InstanceFormatError", PyExc_ValueError);
  py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("hb", &hb, py::arg("x"));
  m.def(
      "coordination_bounds",
      [](double eps, double gamma) {
        const auto b = coordination_bounds({0.5, eps, gamma});
        return std::make_pair(b.lower, b.upper);
      },
      py::arg("eps"), py::arg("gamma"));
  m.def(
      "gamma_star", [](double eps, bool upper) { return gamma_star(eps, upper ? BoundKind::Upper : BoundKind::Lower); },
      py::arg("eps"), py::arg("upper") = false);
  m.def("dc_constraint", &dc_constraint, py::arg("alpha"), py::arg("beta"), py::arg("p"), py::arg("eps"));
  m.def("capacity", &capacity, py::arg("x_size"), py::arg("y_size"), py::arg("rows"));
  m.def("_evaluate", &evaluate, py::arg("instance"), py::arg("restarts") = 16, py::arg("seed") = 0);
  m.def("_evaluate_causal", &evaluate_causal, py::arg("instance"), py::arg("restarts") = 4, py::arg("seed") = 0);
  m.def("_membership", &check_membership, py::arg("instance"), py::arg("restarts") = 16, py::arg("seed") = 0);
  m.def("_simulate", &simulate, py::arg("instance"), py::arg("n") = 100, py::arg("blocks") = 12,
        py::arg("delta") = 0.05, py::arg("eps_typ") = 0.1, py::arg("trials") = 10, py::arg("seed") = 0,
        py::arg("mode") = "strict");
}
