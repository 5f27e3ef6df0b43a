#include "colombeau/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "colombeau/quadrature.hpp"

namespace colombeau {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ScenarioError(what); }

const Json& need(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) bad(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

MultiIndex multi_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || j.size() > kMaxDim) bad("multi-index must be an array of 1 or 2 ints");
  MultiIndex m(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) m[static_cast<int>(i)] = j[i].get<int>();
  return m;
}

Json multi_to_json(const MultiIndex& m) {
  Json a = Json::array();
  for (int i = 0; i < m.dim; ++i) a.push_back(m[i]);
  return a;
}

Point point_from_json(const Json& j) {
  Point p{0, 0};
  for (size_t i = 0; i < j.size() && i < kMaxDim; ++i) p[i] = j[i].get<double>();
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// geometry and expression serialization

Json box_to_json(const Box& b) {
  Json lo = Json::array(), hi = Json::array();
  for (int i = 0; i < b.dim; ++i) {
    lo.push_back(b.iv[i].lo);
    hi.push_back(b.iv[i].hi);
  }
  return Json{{"lo", lo}, {"hi", hi}};
}

Box box_from_json(const Json& j) {
  const Json& lo = need(j, "lo", "box");
  const Json& hi = need(j, "hi", "box");
  if (lo.size() != hi.size() || lo.empty() || lo.size() > kMaxDim) bad("box endpoints malformed");
  Box b(static_cast<int>(lo.size()));
  for (size_t i = 0; i < lo.size(); ++i) b.iv[i] = {lo[i].get<double>(), hi[i].get<double>()};
  return b;
}

Json domain_to_json(const Domain& d) {
  Json boxes = Json::array();
  for (const Box& c : d.components()) boxes.push_back(box_to_json(c));
  return Json{{"boxes", boxes}};
}

Domain domain_from_json(const Json& j) {
  std::vector<Box> boxes;
  for (const Json& b : need(j, "boxes", "domain")) boxes.push_back(box_from_json(b));
  return Domain::boxes(std::move(boxes));
}

Json expr_to_json(const Expr& e) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      return Json{{"kind", "const"}, {"dim", n.dim}, {"value", n.value}};
    case ExprKind::Coord:
      return Json{{"kind", "coord"}, {"dim", n.dim}, {"axis", n.axis}};
    case ExprKind::Poly: {
      Json terms = Json::array();
      for (auto& [m, v] : n.poly.terms) terms.push_back(Json::array({multi_to_json(m), v}));
      return Json{{"kind", "poly"}, {"dim", n.dim}, {"terms", terms}};
    }
    case ExprKind::Bump: {
      Json out{{"kind", "bump"}, {"arg", expr_to_json(n.children[0])}};
      bool plain = n.power == 0 && n.numer.degree() == 0 && !n.numer.is_zero() && n.numer.c[0] == 1;
      if (!plain) {
        out["numer"] = n.numer.c;
        out["pole"] = n.power;
      }
      return out;
    }
    case ExprKind::SmoothStep:
      return Json{{"kind", "smoothstep"}, {"arg", expr_to_json(n.children[0])}};
    case ExprKind::Sum:
    case ExprKind::Product: {
      Json args = Json::array();
      for (auto& c : n.children) args.push_back(expr_to_json(c));
      return Json{{"kind", n.kind == ExprKind::Sum ? "sum" : "product"}, {"args", args}};
    }
    case ExprKind::Scale:
      return Json{{"kind", "scale"}, {"factor", n.value}, {"arg", expr_to_json(n.children[0])}};
    case ExprKind::IPow:
      return Json{{"kind", "ipow"}, {"k", n.power}, {"arg", expr_to_json(n.children[0])}};
    case ExprKind::Affine: {
      Json A = Json::array(), b = Json::array();
      int m = n.dim == 1 ? 1 : 4;
      for (int i = 0; i < m; ++i) A.push_back(n.A[i]);
      for (int i = 0; i < n.dim; ++i) b.push_back(n.b[i]);
      return Json{{"kind", "affine"}, {"A", A}, {"b", b}, {"arg", expr_to_json(n.children[0])}};
    }
    case ExprKind::Compose: {
      Json args = Json::array();
      for (size_t i = 1; i < n.children.size(); ++i) args.push_back(expr_to_json(n.children[i]));
      return Json{{"kind", "compose"}, {"outer", expr_to_json(n.children[0])}, {"args", args}};
    }
  }
  bad("unserializable expression");
}

Expr expr_from_json(const Json& j) {
  std::string kind = need(j, "kind", "expr").get<std::string>();
  if (kind == "const")
    return Expr::constant(need(j, "dim", "const").get<int>(), need(j, "value", "const").get<double>());
  if (kind == "coord")
    return Expr::coordinate(need(j, "dim", "coord").get<int>(), need(j, "axis", "coord").get<int>());
  if (kind == "poly") {
    int dim = need(j, "dim", "poly").get<int>();
    PolyN p(dim);
    for (const Json& t : need(j, "terms", "poly")) {
      if (!t.is_array() || t.size() != 2) bad("poly term must be [multi-index, coefficient]");
      MultiIndex m = multi_from_json(t[0]);
      if (m.dim != dim) bad("poly term dimension mismatch");
      p.add_term(m, t[1].get<double>());
    }
    return Expr::polynomial(p);
  }
  if (kind == "bump") {
    Expr arg = expr_from_json(need(j, "arg", "bump"));
    if (j.contains("numer")) {
      Poly1 numer;
      numer.c = j.at("numer").get<std::vector<double>>();
      return Expr::bump_rational(numer, j.value("pole", 0), arg);
    }
    return Expr::bump(arg);
  }
  if (kind == "smoothstep") return Expr::smoothstep(expr_from_json(need(j, "arg", "smoothstep")));
  if (kind == "sum" || kind == "product") {
    std::vector<Expr> args;
    for (const Json& a : need(j, "args", kind)) args.push_back(expr_from_json(a));
    return kind == "sum" ? Expr::sum(std::move(args)) : Expr::product(std::move(args));
  }
  if (kind == "scale")
    return Expr::scale(need(j, "factor", "scale").get<double>(), expr_from_json(need(j, "arg", "scale")));
  if (kind == "ipow")
    return Expr::ipow(expr_from_json(need(j, "arg", "ipow")), need(j, "k", "ipow").get<int>());
  if (kind == "affine") {
    Expr arg = expr_from_json(need(j, "arg", "affine"));
    std::array<double, 4> A{1, 0, 0, 1};
    std::array<double, 2> b{0, 0};
    const Json& ja = need(j, "A", "affine");
    if (arg.dim() == 1) {
      A = {ja[0].get<double>(), 0, 0, 1};
    } else {
      for (size_t i = 0; i < ja.size() && i < 4; ++i) A[i] = ja[i].get<double>();
    }
    const Json& jb = need(j, "b", "affine");
    for (size_t i = 0; i < jb.size() && i < 2; ++i) b[i] = jb[i].get<double>();
    return Expr::affine(A, b, arg);
  }
  if (kind == "compose") {
    Expr outer = expr_from_json(need(j, "outer", "compose"));
    std::vector<Expr> args;
    for (const Json& a : need(j, "args", "compose")) args.push_back(expr_from_json(a));
    return Expr::compose(outer, std::move(args));
  }
  bad("unknown expression kind \"" + kind + "\"");
}

Json distribution_to_json(const Distribution& u) {
  switch (u.kind()) {
    case DistKind::Delta: {
      Json pt = Json::array();
      for (int i = 0; i < u.dim(); ++i) pt.push_back(u.point()[i]);
      return Json{{"kind", "delta"}, {"point", pt}};
    }
    case DistKind::DeltaDerivative: {
      Json pt = Json::array();
      for (int i = 0; i < u.dim(); ++i) pt.push_back(u.point()[i]);
      return Json{{"kind", "delta_derivative"}, {"alpha", multi_to_json(u.alpha())}, {"point", pt}};
    }
    case DistKind::Heaviside:
      return Json{{"kind", "heaviside"},
                  {"dim", u.dim()},
                  {"axis", u.halfspace().axis},
                  {"threshold", u.halfspace().threshold}};
    case DistKind::LocallyIntegrable: {
      Json out{{"kind", "loc_integrable"}, {"expr", expr_to_json(u.density())}};
      if (u.has_region())
        out["halfspace"] = Json{{"axis", u.halfspace().axis},
                                {"threshold", u.halfspace().threshold},
                                {"positive", u.halfspace().positive}};
      return out;
    }
    case DistKind::PrincipalValue:
      return Json{{"kind", "pv"}};
    case DistKind::LinearCombination: {
      Json terms = Json::array();
      for (auto& [c, v] : u.terms()) terms.push_back(Json::array({c, distribution_to_json(*v)}));
      return Json{{"kind", "lincomb"}, {"terms", terms}};
    }
    case DistKind::LieDerivative:
      bad("lie-derivative distributions are built from scenario fields, not serialized");
  }
  bad("unserializable distribution");
}

Distribution distribution_from_json(const Json& j) {
  std::string kind = need(j, "kind", "distribution").get<std::string>();
  if (kind == "delta") {
    const Json& pt = need(j, "point", "delta");
    return Distribution::delta(static_cast<int>(pt.size()), point_from_json(pt));
  }
  if (kind == "delta_derivative")
    return Distribution::delta_derivative(multi_from_json(need(j, "alpha", "delta_derivative")),
                                          point_from_json(need(j, "point", "delta_derivative")));
  if (kind == "heaviside")
    return Distribution::heaviside(j.value("dim", 1), j.value("axis", 0), j.value("threshold", 0.0));
  if (kind == "loc_integrable") {
    Expr density = expr_from_json(need(j, "expr", "loc_integrable"));
    std::optional<HalfSpace> region;
    if (j.contains("halfspace")) {
      const Json& h = j.at("halfspace");
      region = HalfSpace{h.value("axis", 0), h.value("threshold", 0.0), h.value("positive", true)};
    }
    return Distribution::locally_integrable(density, region);
  }
  if (kind == "pv") return Distribution::principal_value_1_over_x();
  if (kind == "lincomb") {
    std::vector<std::pair<double, Distribution>> terms;
    for (const Json& t : need(j, "terms", "lincomb")) {
      if (!t.is_array() || t.size() != 2) bad("lincomb term must be [coefficient, distribution]");
      terms.push_back({t[0].get<double>(), distribution_from_json(t[1])});
    }
    return Distribution::linear_combination(std::move(terms));
  }
  bad("unknown distribution kind \"" + kind + "\"");
}

GenFun genfun_from_json(const Json& j, const Domain& default_domain, const TreeContext& ctx) {
  std::string op = need(j, "op", "subject tree").get<std::string>();
  Domain dom = j.contains("domain") ? domain_from_json(j.at("domain")) : default_domain;
  if (op == "iota") return GenFun::iota(distribution_from_json(need(j, "dist", "iota")), dom);
  if (op == "sigma") return GenFun::sigma(expr_from_json(need(j, "expr", "sigma")), dom);
  if (op == "sum" || op == "product") {
    std::vector<GenFun> args;
    for (const Json& a : need(j, "args", op)) args.push_back(genfun_from_json(a, default_domain, ctx));
    return op == "sum" ? GenFun::sum(std::move(args)) : GenFun::product(std::move(args));
  }
  if (op == "scale")
    return GenFun::scale(need(j, "factor", "scale").get<double>(),
                         genfun_from_json(need(j, "arg", "scale"), default_domain, ctx));
  if (op == "pullback") {
    if (!ctx.diffeo) bad("pullback node without a diffeomorphism resolver");
    Diffeomorphism mu = ctx.diffeo(need(j, "diffeo", "pullback").get<std::string>());
    return GenFun::pullback(mu, genfun_from_json(need(j, "arg", "pullback"), default_domain, ctx));
  }
  if (op == "lie") {
    if (!ctx.field) bad("lie node without a vector-field resolver");
    VectorField X = ctx.field(need(j, "field", "lie").get<std::string>());
    return GenFun::lie_derivative(X, genfun_from_json(need(j, "arg", "lie"), default_domain, ctx));
  }
  if (op == "restrict")
    return genfun_from_json(need(j, "arg", "restrict"), default_domain, ctx)
        .restrict(domain_from_json(need(j, "domain", "restrict")));
  bad("unknown subject op \"" + op + "\"");
}

Json mollifier_to_json(const Mollifier& m) {
  Json coeffs = Json::array();
  for (auto& [idx, v] : m.coeffs()) coeffs.push_back(Json::array({multi_to_json(idx), v}));
  return Json{{"q", m.order()},
              {"n", m.dim()},
              {"symmetric", m.symmetric()},
              {"coeffs", coeffs},
              {"support_radius", m.support_radius()}};
}

Json moment_report_to_json(const MomentReport& r) {
  Json moments = Json::array();
  for (auto& [beta, v] : r.moments) moments.push_back(Json::array({multi_to_json(beta), v}));
  return Json{{"order", r.order}, {"moments", moments}, {"worst_violation", r.worst_violation()}};
}

namespace {

Json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? Json("inf") : Json("-inf");
}

}  // namespace

Json asymptotic_report_to_json(const AsymptoticReport& r) {
  Json j{{"check", r.check},
         {"q", r.order_q},
         {"alpha", multi_to_json(r.alpha)},
         {"beta", multi_to_json(r.beta)},
         {"slope", finite_or_string(r.slope)},
         {"intercept", r.intercept},
         {"r_squared", r.r_squared},
         {"target_slope", r.target},
         {"tolerance", r.tolerance},
         {"verdict", to_string(r.verdict)}};
  if (r.exact_zero) j["exact_zero"] = true;
  if (!r.subject.empty()) j["subject"] = r.subject;
  Json samples = Json::array();
  for (auto& [e, s] : r.samples) samples.push_back(Json::array({e, s}));
  j["samples"] = samples;
  return j;
}

// ---------------------------------------------------------------------------
// scenario execution

namespace {

struct ScenarioContext {
  std::string name;
  std::vector<double> eps;
  double slope_tol = kSlopeTol;
  std::map<std::string, Mollifier> mollifiers;
  std::map<std::string, SmoothingKernel> kernels;
  std::map<std::string, Diffeomorphism> diffeos;
  std::map<std::string, VectorField> fields;
  std::map<std::string, GenFun> subjects;
  std::filesystem::path out_dir;
};

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

void write_json(const std::filesystem::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

std::string format_double(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_sweep_csv(const std::filesystem::path& p, const std::vector<SweepSample>& samples, int dim,
                     const std::string& quantity) {
  std::string text = "epsilon";
  for (int i = 0; i < dim; ++i) text += ",probe_x" + std::to_string(i);
  text += ",quantity,value\n";
  for (const auto& s : samples) {
    text += format_double(s.epsilon);
    for (int i = 0; i < dim; ++i) text += "," + format_double(s.x[i]);
    text += "," + quantity + "," + format_double(s.value) + "\n";
  }
  write_text(p, text);
}

void write_tagged_csv(const std::filesystem::path& p, const std::vector<SweepSample>& samples,
                      const std::vector<std::string>& tags, int dim) {
  std::string text = "epsilon";
  for (int i = 0; i < dim; ++i) text += ",probe_x" + std::to_string(i);
  text += ",quantity,value\n";
  for (size_t i = 0; i < samples.size(); ++i) {
    text += format_double(samples[i].epsilon);
    for (int d = 0; d < dim; ++d) text += "," + format_double(samples[i].x[d]);
    text += "," + tags[i] + "," + format_double(samples[i].value) + "\n";
  }
  write_text(p, text);
}

const SmoothingKernel& kernel_ref(const ScenarioContext& ctx, const std::string& id,
                                  const std::string& where) {
  auto it = ctx.kernels.find(id);
  if (it == ctx.kernels.end()) bad(where + ": undefined kernel \"" + id + "\"");
  return it->second;
}

const GenFun& subject_ref(const ScenarioContext& ctx, const std::string& id, const std::string& where) {
  auto it = ctx.subjects.find(id);
  if (it == ctx.subjects.end()) bad(where + ": undefined subject \"" + id + "\"");
  return it->second;
}

KernelBattery battery_from(const ScenarioContext& ctx, const Json& test, const std::string& where) {
  KernelBattery b;
  for (const Json& id : need(test, "kernels", where))
    b.add(kernel_ref(ctx, id.get<std::string>(), where), id.get<std::string>());
  if (b.kernels.empty()) bad(where + ": empty kernel battery");
  return b;
}

CompactProbe probe_from(const Json& test, const Domain& domain, const std::string& where) {
  if (!test.contains("probe")) bad(where + ": missing probe");
  const Json& p = test.at("probe");
  Box hull = box_from_json(need(p, "hull", where + ".probe"));
  return CompactProbe(hull, domain, p.value("points", 0));
}

std::vector<double> eps_from(const ScenarioContext& ctx, const Json& test) {
  if (!test.contains("eps")) return ctx.eps;
  const Json& e = test.at("eps");
  return eps_grid(e.value("min", std::pow(10.0, -2.5)), e.value("max", std::pow(10.0, -0.5)),
                  e.value("points", 12));
}

TestFunction psi_from(const Json& test, int dim) {
  double width = 0.25;
  if (test.contains("psi")) width = test.at("psi").value("width", 0.25);
  if (dim == 1) {
    PolyN t(1);
    t.add_term(MultiIndex(1, {1}), 1.0 / width);
    return TestFunction(Expr::scale(std::exp(1.0), Expr::bump(Expr::polynomial(t))));
  }
  PolyN r2(2);
  r2.add_term(MultiIndex(2, {2, 0}), 1.0 / (width * width));
  r2.add_term(MultiIndex(2, {0, 2}), 1.0 / (width * width));
  return TestFunction(Expr::scale(std::exp(1.0), Expr::bump(Expr::polynomial(r2))));
}

// ---- test runners ----------------------------------------------------------

Json run_lsk_check(const ScenarioContext& ctx, const Json& test, int index) {
  const std::string where = "tests[" + std::to_string(index) + "]";
  const SmoothingKernel& k = kernel_ref(ctx, need(test, "kernel", where).get<std::string>(), where);
  std::string which_s = need(test, "which", where).get<std::string>();
  LskCheck which;
  if (which_s == "lsk1")
    which = LskCheck::LSK1;
  else if (which_s == "lsk2")
    which = LskCheck::LSK2;
  else if (which_s == "lsk3")
    which = LskCheck::LSK3;
  else if (which_s == "lsk3p" || which_s == "lsk3'")
    which = LskCheck::LSK3Prime;
  else
    bad(where + ": unknown check \"" + which_s + "\"");

  LskParams params;
  params.alpha = test.contains("alpha") ? multi_from_json(test.at("alpha")) : MultiIndex::zero(k.dim());
  params.beta = test.contains("beta") ? multi_from_json(test.at("beta")) : MultiIndex::zero(k.dim());
  if (test.contains("f")) params.f = expr_from_json(test.at("f"));
  params.slope_tol = test.value("slope_tol", which == LskCheck::LSK2 ? 0.15 : ctx.slope_tol);
  params.two_sided = test.value("two_sided", false);

  CompactProbe K = probe_from(test, k.domain(), where);
  std::vector<SweepSample> log;
  AsymptoticReport rep = check_lsk(k, which, K, params, eps_from(ctx, test), &log);
  write_sweep_csv(ctx.out_dir / ("test_" + std::to_string(index) + "_" + which_s + ".csv"), log,
                  k.dim(), which_s);
  Json j = asymptotic_report_to_json(rep);
  j["test"] = "lsk-check";
  j["kernel"] = need(test, "kernel", where).get<std::string>();
  j["pass"] = rep.passed();
  return j;
}

Json run_moderate(const ScenarioContext& ctx, const Json& test, int index) {
  const std::string where = "tests[" + std::to_string(index) + "]";
  const GenFun& R = subject_ref(ctx, need(test, "subject", where).get<std::string>(), where);
  KernelBattery battery = battery_from(ctx, test, where);
  CompactProbe K = probe_from(test, R.domain(), where);
  int alpha_max = test.value("alpha_max", 1);
  std::vector<SweepSample> log;
  std::vector<std::string> log_tags;
  SweepLogger logger = [&](const std::string& kname, const MultiIndex& alpha,
                           const std::vector<SweepSample>& s) {
    for (const auto& smp : s) {
      log.push_back(smp);
      log_tags.push_back(kname + ":alpha" + alpha.str());
    }
  };
  auto res = moderateness_test(R, battery, K, alpha_max, eps_from(ctx, test), ctx.slope_tol, logger);
  write_tagged_csv(ctx.out_dir / ("test_" + std::to_string(index) + "_moderate.csv"), log, log_tags,
                   R.dim());

  bool pass = res.pass;
  if (test.contains("expect_N")) pass = pass && res.worst_N == test.at("expect_N").get<int>();

  Json per_alpha = Json::array();
  for (auto& pa : res.per_alpha) {
    Json fits = Json::array();
    for (auto& of : pa.fits)
      for (auto& rep : of.reports) fits.push_back(asymptotic_report_to_json(rep));
    per_alpha.push_back(Json{{"alpha", multi_to_json(pa.alpha)},
                             {"N_or_m", pa.N},
                             {"chosen_q", pa.chosen_q},
                             {"verdict", to_string(pa.verdict)},
                             {"fits", fits}});
  }
  Json battery_names = Json::array();
  for (auto& nm : battery.names) battery_names.push_back(nm);
  return Json{{"test", "moderate"},
              {"subject", need(test, "subject", where).get<std::string>()},
              {"kernel_battery", battery_names},
              {"per_alpha", per_alpha},
              {"worst_N", res.worst_N},
              {"overall", res.pass ? "moderate" : "not moderate"},
              {"pass", pass}};
}

Json run_negligible(const ScenarioContext& ctx, const Json& test, int index) {
  const std::string where = "tests[" + std::to_string(index) + "]";
  const GenFun& R = subject_ref(ctx, need(test, "subject", where).get<std::string>(), where);
  KernelBattery battery = battery_from(ctx, test, where);
  CompactProbe K = probe_from(test, R.domain(), where);
  std::vector<int> m_targets;
  for (const Json& m : need(test, "m_targets", where)) m_targets.push_back(m.get<int>());
  bool alpha0 = test.value("alpha0_only", true);
  std::vector<SweepSample> log;
  std::vector<std::string> log_tags;
  SweepLogger logger = [&](const std::string& kname, const MultiIndex& alpha,
                           const std::vector<SweepSample>& s) {
    for (const auto& smp : s) {
      log.push_back(smp);
      log_tags.push_back(kname + ":alpha" + alpha.str());
    }
  };
  auto res = negligibility_test(R, battery, K, m_targets, alpha0, eps_from(ctx, test), ctx.slope_tol,
                                test.value("alpha_max", 1), logger);
  write_tagged_csv(ctx.out_dir / ("test_" + std::to_string(index) + "_negligible.csv"), log, log_tags,
                   R.dim());

  std::string expect = test.value("expect", "pass");
  bool pass = expect == "fail" ? !res.pass : res.pass;

  Json per = Json::array();
  for (auto& pt : res.per_target) {
    Json fits = Json::array();
    for (auto& of : pt.fits)
      for (auto& rep : of.reports) fits.push_back(asymptotic_report_to_json(rep));
    per.push_back(Json{{"alpha", multi_to_json(pt.alpha)},
                       {"N_or_m", pt.m},
                       {"chosen_q", pt.chosen_q},
                       {"verdict", to_string(pt.verdict)},
                       {"fits", fits}});
  }
  Json battery_names = Json::array();
  for (auto& nm : battery.names) battery_names.push_back(nm);
  return Json{{"test", "negligible"},
              {"subject", need(test, "subject", where).get<std::string>()},
              {"kernel_battery", battery_names},
              {"per_alpha", per},
              {"overall", res.pass ? "negligible" : "not negligible"},
              {"pass", pass}};
}

Json run_assoc(const ScenarioContext& ctx, const Json& test, int index) {
  const std::string where = "tests[" + std::to_string(index) + "]";
  const GenFun& R = subject_ref(ctx, need(test, "subject", where).get<std::string>(), where);
  GenFun S = test.contains("reference")
                 ? subject_ref(ctx, test.at("reference").get<std::string>(), where)
                 : GenFun::scale(0.0, R);
  KernelBattery battery = battery_from(ctx, test, where);
  TestFunction psi = psi_from(test, R.dim());
  auto res = association_test(R, S, psi, battery, eps_from(ctx, test), test.value("assoc_tol", 0.0));

  std::string expect = test.value("expect", "associated");
  bool pass = false;
  if (expect == "associated")
    pass = res.verdict == Verdict::Pass;
  else if (expect == "not-associated")
    pass = res.verdict == Verdict::Fail;
  else if (expect == "any")
    pass = res.verdict != Verdict::Inconclusive;
  else
    bad(where + ": unknown expectation \"" + expect + "\"");
  if (test.contains("expect_limit")) {
    const Json& el = test.at("expect_limit");
    pass = pass && std::abs(res.limit - el.value("value", 0.0)) <= el.value("tol", 1e-3);
  }
  if (test.contains("expect_divergence")) {
    const Json& ed = test.at("expect_divergence");
    pass = pass && std::abs(res.divergence_order - ed.value("value", 1.0)) <= ed.value("tol", 0.1);
  }

  Json per = Json::array();
  for (auto& pk : res.per_kernel) {
    Json I = Json::array();
    for (auto& [e, v] : pk.I) I.push_back(Json::array({e, v}));
    per.push_back(Json{{"kernel", pk.kernel},
                       {"q", pk.q},
                       {"limit", pk.limit},
                       {"divergence_order", pk.divergence_order},
                       {"r_squared", pk.r_squared},
                       {"verdict", to_string(pk.verdict)},
                       {"detail", pk.detail},
                       {"I", I}});
  }
  std::string overall =
      res.verdict == Verdict::Pass
          ? "associated"
          : (res.verdict == Verdict::Fail
                 ? (res.divergence_order != 0
                        ? "not associated, divergence order " + std::to_string(res.divergence_order)
                        : "not associated")
                 : "inconclusive");
  return Json{{"test", "assoc"},
              {"subject", need(test, "subject", where).get<std::string>()},
              {"limit", res.limit},
              {"divergence_order", res.divergence_order},
              {"per_kernel", per},
              {"overall", overall},
              {"pass", pass}};
}

// two-interval sheaf gluing experiment: glue restrictions of the subject and
// check exact reproduction at small eps plus association with the subject
Json run_sheaf_glue(const ScenarioContext& ctx, const Json& test, int index) {
  const std::string where = "tests[" + std::to_string(index) + "]";
  const GenFun& R = subject_ref(ctx, need(test, "subject", where).get<std::string>(), where);
  const SmoothingKernel& k = kernel_ref(ctx, need(test, "kernel", where).get<std::string>(), where);
  if (R.dim() != 1) bad(where + ": the sheaf-glue experiment is one-dimensional");

  const Json& cov = need(test, "cover", where);
  if (cov.size() != 2) bad(where + ": cover must have exactly two sets");
  Domain U1 = domain_from_json(cov[0]);
  Domain U2 = domain_from_json(cov[1]);
  double a1 = U1.components()[0].iv[0].lo, b1 = U1.components()[0].iv[0].hi;
  double a2 = U2.components()[0].iv[0].lo, b2 = U2.components()[0].iv[0].hi;
  if (!(a1 < a2 && a2 < b1 && b1 < b2)) bad(where + ": cover sets must overlap left-to-right");

  auto plateau = [](double a, double b, double c, double d) {
    PolyN up(1), dn(1);
    up.add_term(MultiIndex(1, {1}), 2.0 / (b - a));
    up.add_term(MultiIndex(1, {0}), -(a + b) / (b - a));
    dn.add_term(MultiIndex(1, {1}), -2.0 / (d - c));
    dn.add_term(MultiIndex(1, {0}), (c + d) / (d - c));
    return Expr::product(
        {Expr::smoothstep(Expr::polynomial(up)), Expr::smoothstep(Expr::polynomial(dn))});
  };
  double mid = 0.5 * (a2 + b1), w = 0.25 * (b1 - a2);
  double d1 = 0.05 * (b1 - a1), d2 = 0.05 * (b2 - a2);
  // chi1 falls to 0 across the overlap, chi2 rises; they sum to 1 in between
  PolyN down(1);
  down.add_term(MultiIndex(1, {1}), -1.0 / w);
  down.add_term(MultiIndex(1, {0}), mid / w);
  Expr fall = Expr::smoothstep(Expr::polynomial(down));
  PolyN upp(1);
  upp.add_term(MultiIndex(1, {1}), 1.0 / w);
  upp.add_term(MultiIndex(1, {0}), -mid / w);
  Expr rise = Expr::smoothstep(Expr::polynomial(upp));
  Expr chi1 = Expr::product({fall, plateau(a1 + d1, a1 + 2 * d1, b1, b1 + 1)});
  Expr chi2 = Expr::product({rise, plateau(a2 - 1, a2, b2 - 2 * d2, b2 - d2)});
  Expr theta1 = plateau(a1 + 0.5 * d1, a1 + d1, mid + 1.2 * w, mid + 1.6 * w);
  Expr theta2 = plateau(mid - 1.6 * w, mid - 1.2 * w, b2 - d2, b2 - 0.5 * d2);

  GenFun glued = GenFun::sheaf_glue({R.restrict(U1), R.restrict(U2)}, {U1, U2}, {chi1, chi2},
                                    {theta1, theta2}, {0, 1});

  // exact reproduction for small eps on a probe inside the plateau region
  std::vector<double> eps = eps_from(ctx, test);
  double eps_small = eps.back();
  double worst = 0;
  for (double x = mid - 3 * w; x <= mid + 3 * w; x += w / 2) {
    double lhs = evaluate_with_kernel(glued, k, eps_small, {x, 0});
    double rhs = evaluate_with_kernel(R, k, eps_small, {x, 0});
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  bool exact_ok = worst <= 1e-10 / eps_small;

  KernelBattery battery;
  battery.add(k, need(test, "kernel", where).get<std::string>());
  TestFunction psi = psi_from(test, 1);
  auto assoc = association_test(glued, R, psi, battery, eps);

  bool pass = exact_ok && assoc.verdict == Verdict::Pass;
  return Json{{"test", "sheaf-glue"},
              {"subject", need(test, "subject", where).get<std::string>()},
              {"small_eps_max_difference", worst},
              {"exact_reproduction", exact_ok},
              {"assoc_verdict", to_string(assoc.verdict)},
              {"overall", pass ? "glued" : "gluing failed"},
              {"pass", pass}};
}

Json run_identity(const ScenarioContext& ctx, const Json& test, int index) {
  const std::string where = "tests[" + std::to_string(index) + "]";
  std::string check = need(test, "check", where).get<std::string>();
  double tol = test.value("tol", 1e-8);

  // deterministic probe battery: two mollifier shapes, a few base points
  TestFunction phi = build_mollifier(1, 1, false).phi();
  TestFunction phi2 = build_mollifier(0, 1, false, 0.6, 0.2).phi();
  std::vector<TestFunction> phis{phi, phi2};
  std::vector<double> xs{-0.35, 0.0, 0.2};

  Domain om = Domain::box(Box::cube(1, -6, 6));
  GenFun H = GenFun::iota(Distribution::heaviside(), om);
  GenFun delta = GenFun::iota(Distribution::delta(1, {0, 0}), om);
  PolyN fp(1);
  fp.add_term(MultiIndex(1, {0}), 0.4);
  fp.add_term(MultiIndex(1, {2}), 1.0);
  Expr f = Expr::polynomial(fp);

  double worst = 0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  if (check == "pullback-iota" || check == "pullback-product" || check == "pullback-sigma") {
    Diffeomorphism mu =
        ctx.diffeos.count("mu")
            ? ctx.diffeos.at("mu")
            : Diffeomorphism::affine({0.8, 0, 0, 1}, {0.1, 0}, Domain::box(Box::cube(1, -4, 4)));
    if (check == "pullback-iota") {
      // (mu^* iota(u))(phi, x) = <u, mu_* phi>: embeddings commute with mu^*
      GenFun lhs = GenFun::pullback(mu, delta);
      for (auto& p : phis)
        for (double x : xs)
          track(lhs.evaluate(p, {x, 0}), pair(Distribution::delta(1, {0, 0}), mu.pushforward(p)));
    } else if (check == "pullback-product") {
      GenFun A = H, B = GenFun::sigma(f, om);
      GenFun lhs = GenFun::pullback(mu, A * B);
      GenFun rhs = GenFun::pullback(mu, A) * GenFun::pullback(mu, B);
      for (auto& p : phis)
        for (double x : xs) track(lhs.evaluate(p, {x, 0}), rhs.evaluate(p, {x, 0}));
    } else {
      GenFun lhs = GenFun::pullback(mu, GenFun::sigma(f, om));
      GenFun rhs = GenFun::sigma(Expr::compose(f, mu.forward()), mu.source());
      for (auto& p : phis)
        for (double x : xs) track(lhs.evaluate(p, {x, 0}), rhs.evaluate(p, {x, 0}));
    }
  } else if (check == "lie-iota" || check == "lie-leibniz" || check == "lie-sigma") {
    VectorField X = ctx.fields.count("X") ? ctx.fields.at("X") : [&] {
      PolyN c(1);
      c.add_term(MultiIndex(1, {0}), 1.0);
      c.add_term(MultiIndex(1, {1}), 0.5);
      return VectorField({Expr::polynomial(c)}, om);
    }();
    if (check == "lie-iota") {
      std::vector<Distribution> dists{Distribution::delta(1, {0, 0}), Distribution::heaviside()};
      for (const Distribution& ud : dists) {
        GenFun lhs = GenFun::lie_derivative(X, GenFun::iota(ud, om));
        GenFun rhs = GenFun::iota(Distribution::lie_derivative(X, ud), om);
        for (auto& p : phis)
          for (double x : xs) track(lhs.evaluate(p, {x, 0}), rhs.evaluate(p, {x, 0}));
      }
    } else if (check == "lie-leibniz") {
      GenFun A = H, B = GenFun::sigma(f, om);
      GenFun lhs = GenFun::lie_derivative(X, A * B);
      GenFun rhs = GenFun::lie_derivative(X, A) * B + A * GenFun::lie_derivative(X, B);
      for (auto& p : phis)
        for (double x : xs) track(lhs.evaluate(p, {x, 0}), rhs.evaluate(p, {x, 0}));
    } else {
      GenFun lhs = GenFun::lie_derivative(X, GenFun::sigma(f, om));
      GenFun rhs = GenFun::sigma(Expr::product({X.components[0], f.derivative(0)}), om);
      for (auto& p : phis)
        for (double x : xs) track(lhs.evaluate(p, {x, 0}), rhs.evaluate(p, {x, 0}));
    }
  } else {
    bad(where + ": unknown identity check \"" + check + "\"");
  }
  return Json{{"test", "identity"},
              {"check", check},
              {"max_difference", worst},
              {"tol", tol},
              {"overall", worst <= tol ? "holds" : "violated"},
              {"pass", worst <= tol}};
}

}  // namespace

ScenarioResult run_scenario(const Json& scenario, const std::filesystem::path& out_dir,
                            const ScenarioOverrides& overrides) {
  if (!scenario.is_object()) bad("scenario must be a JSON object");
  ScenarioContext ctx;
  ctx.name = scenario.value("name", "scenario");
  ctx.out_dir = out_dir;
  std::filesystem::create_directories(out_dir);
  if (overrides.workers) set_worker_budget(*overrides.workers);

  double emin = std::pow(10.0, -2.5), emax = std::pow(10.0, -0.5);
  int epoints = 12;
  if (scenario.contains("eps")) {
    const Json& e = scenario.at("eps");
    emin = e.value("min", emin);
    emax = e.value("max", emax);
    epoints = e.value("points", epoints);
  }
  if (overrides.eps_min) emin = *overrides.eps_min;
  if (overrides.eps_max) emax = *overrides.eps_max;
  if (overrides.eps_points) epoints = *overrides.eps_points;
  ctx.eps = eps_grid(emin, emax, epoints);
  ctx.slope_tol = overrides.slope_tol.value_or(scenario.value("slope_tol", kSlopeTol));

  for (const Json& m : scenario.value("mollifiers", Json::array())) {
    std::string id = need(m, "id", "mollifiers").get<std::string>();
    ctx.mollifiers.emplace(id, build_mollifier(need(m, "q", "mollifier " + id).get<int>(),
                                               m.value("n", 1), m.value("symmetric", false),
                                               m.value("width", 1.0), m.value("center", 0.0)));
  }
  for (const Json& d : scenario.value("diffeos", Json::array())) {
    std::string id = need(d, "id", "diffeos").get<std::string>();
    std::string type = need(d, "type", "diffeo " + id).get<std::string>();
    Domain dom = d.contains("domain") ? domain_from_json(d.at("domain"))
                                      : Domain::box(Box::cube(d.value("n", 1), -4, 4));
    if (type == "identity") {
      ctx.diffeos.emplace(id, Diffeomorphism::identity(dom));
    } else if (type == "affine") {
      std::array<double, 4> A{1, 0, 0, 1};
      std::array<double, 2> b{0, 0};
      if (d.contains("A")) {
        const Json& ja = d.at("A");
        if (dom.dim() == 1) {
          A = {ja[0].get<double>(), 0, 0, 1};
        } else {
          for (size_t i = 0; i < ja.size() && i < 4; ++i) A[i] = ja[i].get<double>();
        }
      }
      if (d.contains("b")) {
        const Json& jb = d.at("b");
        for (size_t i = 0; i < jb.size() && i < 2; ++i) b[i] = jb[i].get<double>();
      }
      ctx.diffeos.emplace(id, Diffeomorphism::affine(A, b, dom));
    } else if (type == "shear") {
      ctx.diffeos.emplace(id, Diffeomorphism::shear(expr_from_json(need(d, "g", "shear " + id)), dom));
    } else {
      bad("diffeo " + id + ": unknown type \"" + type + "\"");
    }
  }
  for (const Json& f : scenario.value("fields", Json::array())) {
    std::string id = need(f, "id", "fields").get<std::string>();
    std::vector<Expr> comps;
    for (const Json& c : need(f, "components", "field " + id)) comps.push_back(expr_from_json(c));
    Domain dom = f.contains("domain") ? domain_from_json(f.at("domain"))
                                      : Domain::whole_space(static_cast<int>(comps.size()));
    ctx.fields.emplace(id, VectorField(std::move(comps), dom));
  }
  for (const Json& k : scenario.value("kernels", Json::array())) {
    std::string id = need(k, "id", "kernels").get<std::string>();
    std::string type = need(k, "type", "kernel " + id).get<std::string>();
    if (type == "model") {
      std::string mid = need(k, "mollifier", "kernel " + id).get<std::string>();
      auto it = ctx.mollifiers.find(mid);
      if (it == ctx.mollifiers.end()) bad("kernel " + id + ": undefined mollifier \"" + mid + "\"");
      ctx.kernels.emplace(id, model_kernel(it->second));
    } else if (type == "glued") {
      const SmoothingKernel& base =
          kernel_ref(ctx, need(k, "base", "kernel " + id).get<std::string>(), "kernel " + id);
      Domain dom = domain_from_json(need(k, "domain", "kernel " + id));
      LambdaPartition lp = lambda_partition(geometric_eps_seq(k.value("levels", 12)));
      ctx.kernels.emplace(id, glue_to_domain(base, dom, lp));
    } else if (type == "pullback") {
      const SmoothingKernel& base =
          kernel_ref(ctx, need(k, "base", "kernel " + id).get<std::string>(), "kernel " + id);
      std::string did = need(k, "diffeo", "kernel " + id).get<std::string>();
      auto it = ctx.diffeos.find(did);
      if (it == ctx.diffeos.end()) bad("kernel " + id + ": undefined diffeo \"" + did + "\"");
      ctx.kernels.emplace(id, pullback_kernel(it->second, base));
    } else if (type == "derive") {
      const SmoothingKernel& base =
          kernel_ref(ctx, need(k, "base", "kernel " + id).get<std::string>(), "kernel " + id);
      std::string fid = need(k, "field", "kernel " + id).get<std::string>();
      auto it = ctx.fields.find(fid);
      if (it == ctx.fields.end()) bad("kernel " + id + ": undefined field \"" + fid + "\"");
      ctx.kernels.emplace(id, derive_kernel(base, it->second));
    } else if (type == "lsk7") {
      const SmoothingKernel& base =
          kernel_ref(ctx, need(k, "base", "kernel " + id).get<std::string>(), "kernel " + id);
      MultiIndex delta =
          k.contains("delta") ? multi_from_json(k.at("delta")) : MultiIndex::unit(base.dim(), 0);
      std::vector<double> eseq = geometric_eps_seq(k.value("levels", 12));
      std::vector<Point> xseq(eseq.size(), Point{0, 0});
      if (k.contains("points")) {
        xseq.clear();
        for (const Json& p : k.at("points")) xseq.push_back(point_from_json(p));
        if (xseq.size() != eseq.size()) bad("kernel " + id + ": points must match the eps sequence");
      }
      std::map<MultiIndex, SmoothingKernel, bool (*)(const MultiIndex&, const MultiIndex&)> phis(
          multi_index_less);
      for (const MultiIndex& beta : multi_indices_below(delta)) {
        if (beta.order() == 0) continue;
        SmoothingKernel dk = base;
        for (int axis = 0; axis < base.dim(); ++axis)
          for (int c = 0; c < beta[axis]; ++c)
            dk = derive_kernel(dk, VectorField::coordinate_field(base.dim(), axis, base.domain()));
        phis.insert({beta, dk});
      }
      ctx.kernels.emplace(id, lsk7_build(base, phis, delta, eseq, xseq, lambda_partition(eseq)));
    } else {
      bad("kernel " + id + ": unknown type \"" + type + "\"");
    }
  }

  TreeContext tree_ctx;
  tree_ctx.diffeo = [&ctx](const std::string& id) {
    auto it = ctx.diffeos.find(id);
    if (it == ctx.diffeos.end()) bad("subject tree: undefined diffeo \"" + id + "\"");
    return it->second;
  };
  tree_ctx.field = [&ctx](const std::string& id) {
    auto it = ctx.fields.find(id);
    if (it == ctx.fields.end()) bad("subject tree: undefined field \"" + id + "\"");
    return it->second;
  };
  for (const Json& s : scenario.value("subjects", Json::array())) {
    std::string id = need(s, "id", "subjects").get<std::string>();
    Domain dom = s.contains("domain") ? domain_from_json(s.at("domain"))
                                      : Domain::box(Box::cube(s.value("n", 1), -3, 3));
    ctx.subjects.emplace(id, genfun_from_json(need(s, "tree", "subject " + id), dom, tree_ctx));
  }

  // resolve every reference up front so schema errors surface before any run
  const Json& tests = need(scenario, "tests", "scenario");
  int index = 0;
  for (const Json& t : tests) {
    std::string where = "tests[" + std::to_string(index) + "]";
    std::string type = need(t, "type", where).get<std::string>();
    if (type == "lsk-check") kernel_ref(ctx, need(t, "kernel", where).get<std::string>(), where);
    if (type == "moderate" || type == "negligible" || type == "assoc") {
      subject_ref(ctx, need(t, "subject", where).get<std::string>(), where);
      for (const Json& kid : need(t, "kernels", where)) kernel_ref(ctx, kid.get<std::string>(), where);
    }
    if (type == "assoc" && t.contains("reference"))
      subject_ref(ctx, t.at("reference").get<std::string>(), where);
    if (type == "sheaf-glue") {
      subject_ref(ctx, need(t, "subject", where).get<std::string>(), where);
      kernel_ref(ctx, need(t, "kernel", where).get<std::string>(), where);
    }
    ++index;
  }

  ScenarioResult result;
  result.all_passed = true;
  Json verdicts = Json::array();
  index = 0;
  for (const Json& t : tests) {
    std::string type = need(t, "type", "tests[" + std::to_string(index) + "]").get<std::string>();
    Json v;
    if (type == "lsk-check")
      v = run_lsk_check(ctx, t, index);
    else if (type == "moderate")
      v = run_moderate(ctx, t, index);
    else if (type == "negligible")
      v = run_negligible(ctx, t, index);
    else if (type == "assoc")
      v = run_assoc(ctx, t, index);
    else if (type == "sheaf-glue")
      v = run_sheaf_glue(ctx, t, index);
    else if (type == "identity")
      v = run_identity(ctx, t, index);
    else
      bad("tests[" + std::to_string(index) + "]: unknown test type \"" + type + "\"");
    result.all_passed = result.all_passed && v.value("pass", false);
    write_json(ctx.out_dir / ("test_" + std::to_string(index) + "_" + type + ".json"), v);
    verdicts.push_back(std::move(v));
    ++index;
  }

  result.summary = Json{{"scenario", ctx.name},
                        {"eps", Json{{"min", emin}, {"max", emax}, {"points", epoints}}},
                        {"slope_tol", ctx.slope_tol},
                        {"tests", verdicts},
                        {"all_passed", result.all_passed}};
  write_json(ctx.out_dir / "summary.json", result.summary);
  return result;
}

ScenarioResult run_scenario_file(const std::filesystem::path& file,
                                 const std::filesystem::path& out_dir,
                                 const ScenarioOverrides& overrides) {
  std::ifstream f(file);
  if (!f) bad("cannot open scenario file " + file.string());
  Json j;
  try {
    j = Json::parse(f);
  } catch (const std::exception& e) {
    bad("scenario parse error in " + file.string() + ": " + e.what());
  }
  return run_scenario(j, out_dir, overrides);
}

}  // namespace colombeau
