#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "colombeau/quadrature.hpp"
#include "colombeau/scenario.hpp"
#include "colombeau/testing.hpp"

namespace py = pybind11;
using namespace colombeau;

namespace {

Point to_point(const std::vector<double>& v) {
  Point p{0, 0};
  for (size_t i = 0; i < v.size() && i < kMaxDim; ++i) p[i] = v[i];
  return p;
}

MultiIndex to_multi(const std::vector<int>& v) {
  MultiIndex m(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) m[static_cast<int>(i)] = v[i];
  return m;
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const std::exception& e) {
    throw ScenarioError(what + ": " + e.what());
  }
}

// battery of model kernels (plain + shifted shape) for the given orders
KernelBattery order_battery(int n, const std::vector<int>& orders) {
  KernelBattery b;
  for (int q : orders) {
    b.add(model_kernel(build_mollifier(q, n, false)), "model_q" + std::to_string(q));
    b.add(model_kernel(build_mollifier(q, n, false, 0.6, 0.3)), "shifted_q" + std::to_string(q));
  }
  return b;
}

GenFun subject_from_string(const std::string& tree_json, int n) {
  Json j = parse_json(tree_json, "subject tree");
  return genfun_from_json(j, Domain::box(Box::cube(n, -3, 3)), TreeContext{});
}

}  // namespace

PYBIND11_MODULE(_colombeau, m) {
  m.doc() = "numerical eps-asymptotics for nonlinear generalized functions";

  py::register_exception<ScenarioError>(m, "ScenarioError");
  py::register_exception<QuadratureError>(m, "QuadratureError");
  py::register_exception<Error>(m, "NumericalError");

  py::class_<TestFunction>(m, "TestFunction")
      .def("__call__",
           [](const TestFunction& phi, const std::vector<double>& y) {
             return phi.evaluate(to_point(y));
           })
      .def("derivative",
           [](const TestFunction& phi, const std::vector<int>& alpha) {
             return phi.derivative(to_multi(alpha));
           })
      .def_property_readonly("dim", &TestFunction::dim)
      .def_property_readonly("support", [](const TestFunction& phi) {
        std::vector<std::pair<double, double>> s;
        for (int i = 0; i < phi.dim(); ++i)
          s.push_back({phi.support().iv[i].lo, phi.support().iv[i].hi});
        return s;
      });

  py::class_<Mollifier>(m, "Mollifier")
      .def_property_readonly("q", &Mollifier::order)
      .def_property_readonly("n", &Mollifier::dim)
      .def_property_readonly("symmetric", &Mollifier::symmetric)
      .def_property_readonly("support_radius", &Mollifier::support_radius)
      .def_property_readonly("phi", &Mollifier::phi)
      .def_property_readonly("coeffs",
                             [](const Mollifier& mol) {
                               std::vector<std::pair<std::vector<int>, double>> out;
                               for (auto& [idx, v] : mol.coeffs()) {
                                 std::vector<int> e(idx.e.begin(), idx.e.begin() + idx.dim);
                                 out.push_back({e, v});
                               }
                               return out;
                             })
      .def("to_json", [](const Mollifier& mol) { return mollifier_to_json(mol).dump(); });

  m.def("build_mollifier", &build_mollifier, py::arg("q"), py::arg("n"), py::arg("symmetric") = false,
        py::arg("width") = 1.0, py::arg("center") = 0.0,
        "order-q mollifier with vanishing moments 1..q, supported in the unit ball");
  m.def("verify_moments", [](const Mollifier& mol) {
    std::vector<std::pair<std::vector<int>, double>> out;
    for (auto& [beta, v] : verify_moments(mol).moments) {
      std::vector<int> e(beta.e.begin(), beta.e.begin() + beta.dim);
      out.push_back({e, v});
    }
    return out;
  });

  py::class_<SmoothingKernel>(m, "SmoothingKernel")
      .def_property_readonly("dim", &SmoothingKernel::dim)
      .def_property_readonly("order", &SmoothingKernel::order)
      .def_property_readonly("support_constant", &SmoothingKernel::support_constant)
      .def("at",
           [](const SmoothingKernel& k, double eps, const std::vector<double>& x) {
             return k.at(eps, to_point(x));
           })
      .def("evaluate",
           [](const SmoothingKernel& k, double eps, const std::vector<double>& x,
              const std::vector<double>& y) { return k.evaluate(eps, to_point(x), to_point(y)); })
      .def("dx", [](const SmoothingKernel& k, int axis) { return k.dx(axis); })
      .def("dy", [](const SmoothingKernel& k, int axis) { return k.dy(axis); });

  m.def("model_kernel", &model_kernel, py::arg("mollifier"),
        "prototypical kernel eps^{-n} phi((y-x)/eps)");

  m.def(
      "check_lsk",
      [](const SmoothingKernel& k, const std::string& which, std::pair<double, double> hull,
         const std::vector<int>& alpha, const std::vector<int>& beta, const std::string& f_json,
         double eps_min, double eps_max, int eps_points, bool two_sided) {
        LskCheck check;
        if (which == "lsk1") check = LskCheck::LSK1;
        else if (which == "lsk2") check = LskCheck::LSK2;
        else if (which == "lsk3") check = LskCheck::LSK3;
        else if (which == "lsk3p") check = LskCheck::LSK3Prime;
        else throw ScenarioError("unknown check " + which);
        LskParams p;
        p.alpha = alpha.empty() ? MultiIndex::zero(k.dim()) : to_multi(alpha);
        p.beta = beta.empty() ? MultiIndex::zero(k.dim()) : to_multi(beta);
        if (!f_json.empty()) p.f = expr_from_json(parse_json(f_json, "f"));
        p.two_sided = two_sided;
        CompactProbe K(Box::cube(k.dim(), hull.first, hull.second), k.domain());
        auto rep = check_lsk(k, check, K, p, eps_grid(eps_min, eps_max, eps_points));
        return asymptotic_report_to_json(rep).dump();
      },
      py::arg("kernel"), py::arg("which"), py::arg("hull") = std::pair<double, double>{-0.4, 0.4},
      py::arg("alpha") = std::vector<int>{}, py::arg("beta") = std::vector<int>{},
      py::arg("f") = std::string(), py::arg("eps_min") = std::pow(10.0, -2.5),
      py::arg("eps_max") = std::pow(10.0, -0.5), py::arg("eps_points") = 12,
      py::arg("two_sided") = false, "numerical LSK verifier; returns a JSON report string");

  m.def(
      "evaluate",
      [](const std::string& tree_json, const TestFunction& phi, const std::vector<double>& x) {
        GenFun R = subject_from_string(tree_json, phi.dim());
        return R.evaluate(phi, to_point(x));
      },
      py::arg("tree"), py::arg("phi"), py::arg("x"),
      "evaluate a generalized-function tree at (phi, x)");

  m.def(
      "moderateness",
      [](const std::string& tree_json, int n, const std::vector<int>& orders, int alpha_max,
         std::pair<double, double> hull) {
        GenFun R = subject_from_string(tree_json, n);
        KernelBattery b = order_battery(n, orders);
        CompactProbe K(Box::cube(n, hull.first, hull.second), R.domain());
        auto res = moderateness_test(R, b, K, alpha_max, eps_grid());
        Json out{{"pass", res.pass}, {"worst_N", res.worst_N}};
        return out.dump();
      },
      py::arg("tree"), py::arg("n") = 1, py::arg("orders") = std::vector<int>{0, 1},
      py::arg("alpha_max") = 0, py::arg("hull") = std::pair<double, double>{-0.4, 0.4});

  m.def(
      "negligibility",
      [](const std::string& tree_json, int n, const std::vector<int>& orders,
         const std::vector<int>& m_targets, std::pair<double, double> hull) {
        GenFun R = subject_from_string(tree_json, n);
        KernelBattery b = order_battery(n, orders);
        CompactProbe K(Box::cube(n, hull.first, hull.second), R.domain());
        auto res = negligibility_test(R, b, K, m_targets, true, eps_grid());
        Json out{{"pass", res.pass}};
        return out.dump();
      },
      py::arg("tree"), py::arg("n") = 1, py::arg("orders") = std::vector<int>{0},
      py::arg("m_targets") = std::vector<int>{1}, py::arg("hull") = std::pair<double, double>{-0.4, 0.4});

  m.def(
      "association",
      [](const std::string& tree_r, const std::string& tree_s, int n, const std::vector<int>& orders,
         double psi_width, double eps_min, double eps_max, int eps_points) {
        GenFun R = subject_from_string(tree_r, n);
        GenFun S = tree_s.empty() ? GenFun::scale(0.0, R) : subject_from_string(tree_s, n);
        KernelBattery b = order_battery(n, orders);
        PolyN t(1);
        t.add_term(MultiIndex(1, {1}), 1.0 / psi_width);
        TestFunction psi(Expr::scale(std::exp(1.0), Expr::bump(Expr::polynomial(t))));
        auto res = association_test(R, S, psi, b, eps_grid(eps_min, eps_max, eps_points));
        Json out{{"verdict", to_string(res.verdict)},
                 {"limit", res.limit},
                 {"divergence_order", res.divergence_order}};
        return out.dump();
      },
      py::arg("subject"), py::arg("reference") = std::string(), py::arg("n") = 1,
      py::arg("orders") = std::vector<int>{0}, py::arg("psi_width") = 0.25, py::arg("eps_min") = 6e-3,
      py::arg("eps_max") = 0.25, py::arg("eps_points") = 9);

  m.def(
      "run_scenario",
      [](const std::string& scenario_json, const std::string& out_dir, int workers) {
        ScenarioOverrides o;
        if (workers > 0) o.workers = workers;
        ScenarioResult res = run_scenario(parse_json(scenario_json, "scenario"), out_dir, o);
        return res.summary.dump();
      },
      py::arg("scenario"), py::arg("out_dir") = "out", py::arg("workers") = 0,
      "run a scenario (JSON string); returns the summary JSON string");

  m.def(
      "run_scenario_file",
      [](const std::string& path, const std::string& out_dir, int workers) {
        ScenarioOverrides o;
        if (workers > 0) o.workers = workers;
        ScenarioResult res = run_scenario_file(path, out_dir, o);
        return res.summary.dump();
      },
      py::arg("path"), py::arg("out_dir") = "out", py::arg("workers") = 0);

  m.def("set_worker_budget", &set_worker_budget, py::arg("workers"));
  m.attr("__version__") = "0.1.0";
}
