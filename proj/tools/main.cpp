#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "colombeau/quadrature.hpp"
#include "colombeau/scenario.hpp"

namespace fs = std::filesystem;
using namespace colombeau;

namespace {

constexpr int kExitTestFailure = 1;
constexpr int kExitSchema = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string out_dir = "out";
  int workers = 0;
  double eps_min = 0, eps_max = 0, slope_tol = 0;
  int eps_points = 0;

  void attach(CLI::App* app) {
    app->add_option("--out", out_dir, "output directory for reports and CSV sweeps");
    app->add_option("--workers", workers, "worker budget (default: COLOMBEAU_WORKERS or hardware)");
    app->add_option("--eps-min", eps_min, "smallest eps of the sweep grid");
    app->add_option("--eps-max", eps_max, "largest eps of the sweep grid");
    app->add_option("--eps-points", eps_points, "number of log-spaced eps points");
    app->add_option("--slope-tol", slope_tol, "slope tolerance for verdicts");
  }
  ScenarioOverrides overrides() const {
    ScenarioOverrides o;
    if (workers > 0) o.workers = workers;
    if (eps_min > 0) o.eps_min = eps_min;
    if (eps_max > 0) o.eps_max = eps_max;
    if (eps_points > 0) o.eps_points = eps_points;
    if (slope_tol > 0) o.slope_tol = slope_tol;
    return o;
  }
};

void print_summary(const Json& summary) {
  for (const Json& t : summary.at("tests")) {
    bool pass = t.value("pass", false);
    std::string line = std::string(pass ? "[PASS] " : "[FAIL] ") + t.value("test", "?");
    if (t.contains("subject")) line += " subject=" + t.at("subject").get<std::string>();
    if (t.contains("kernel")) line += " kernel=" + t.at("kernel").get<std::string>();
    if (t.contains("check")) line += " check=" + t.at("check").get<std::string>();
    if (t.contains("overall")) line += "  " + t.at("overall").get<std::string>();
    if (t.contains("limit") && t.at("limit").is_number()) {
      char buf[48];
      snprintf(buf, sizeof(buf), "  limit=%.4f", t.at("limit").get<double>());
      line += buf;
    }
    if (t.contains("slope") && t.at("slope").is_number()) {
      char buf[48];
      snprintf(buf, sizeof(buf), "  slope=%.3f", t.at("slope").get<double>());
      line += buf;
    }
    std::cout << line << "\n";
  }
  std::cout << (summary.value("all_passed", false) ? "all tests passed" : "some tests FAILED")
            << "\n";
}

int run_and_report(const Json& scenario, const CommonFlags& flags) {
  ScenarioResult res = run_scenario(scenario, flags.out_dir, flags.overrides());
  print_summary(res.summary);
  std::cout << "artifacts written to " << flags.out_dir << "\n";
  return res.all_passed ? 0 : kExitTestFailure;
}

fs::path locate_scenario(const std::string& name) {
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("COLOMBEAU_SCENARIO_DIR")) roots.push_back(env);
  roots.push_back("scenarios");
  roots.push_back("../scenarios");
#ifdef COLOMBEAU_SOURCE_SCENARIOS
  roots.push_back(COLOMBEAU_SOURCE_SCENARIOS);
#endif
  for (const fs::path& r : roots) {
    fs::path p = r / (name + ".json");
    if (fs::exists(p)) return p;
  }
  throw ScenarioError("no scenario file for demo \"" + name + "\" (searched scenarios/)");
}

Json parse_inline_or_file(const std::string& text, const std::string& what) {
  try {
    if (!text.empty() && text[0] == '@') {
      std::ifstream f(text.substr(1));
      if (!f) throw ScenarioError(what + ": cannot open " + text.substr(1));
      return Json::parse(f);
    }
    return Json::parse(text);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(what + ": JSON parse error: " + e.what());
  }
}

// scenario skeleton with the standard kernel set for the CLI wrappers
Json base_scenario(const std::string& name, int n, const std::vector<int>& orders,
                   const std::vector<std::string>& kinds) {
  Json mollifiers = Json::array();
  Json kernels = Json::array();
  for (int q : orders) {
    std::string mq = "m" + std::to_string(q);
    mollifiers.push_back(Json{{"id", mq}, {"q", q}, {"n", n}});
    mollifiers.push_back(
        Json{{"id", mq + "s"}, {"q", q}, {"n", n}, {"width", 0.6}, {"center", 0.3}});
    for (const std::string& kind : kinds) {
      std::string kq = kind + std::to_string(q);
      if (kind == "model") {
        kernels.push_back(Json{{"id", kq}, {"type", "model"}, {"mollifier", mq}});
      } else if (kind == "shifted") {
        kernels.push_back(Json{{"id", kq}, {"type", "model"}, {"mollifier", mq + "s"}});
      } else if (kind == "glued") {
        kernels.push_back(Json{{"id", "model_base" + std::to_string(q)},
                               {"type", "model"},
                               {"mollifier", mq}});
        Json dom{{"boxes", Json::array({Json{{"lo", Json::array({-2.0})}, {"hi", Json::array({2.0})}}})}};
        kernels.push_back(
            Json{{"id", kq}, {"type", "glued"}, {"base", "model_base" + std::to_string(q)}, {"domain", dom}});
      }
    }
  }
  return Json{{"name", name}, {"mollifiers", mollifiers}, {"kernels", kernels}};
}

Json default_probe(double r = 0.4) {
  return Json{{"hull", Json{{"lo", Json::array({-r})}, {"hi", Json::array({r})}}}, {"points", 5}};
}

std::vector<std::string> kernel_ids(const Json& scenario, const std::vector<int>& orders,
                                    const std::vector<std::string>& kinds) {
  std::vector<std::string> ids;
  for (int q : orders)
    for (const std::string& kind : kinds) ids.push_back(kind + std::to_string(q));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"colombeau: numerical eps-asymptotics for nonlinear generalized functions"};
  app.require_subcommand(1);

  // ---- run ------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "run a JSON scenario file");
  std::string scenario_path;
  run_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  CommonFlags run_flags;
  run_flags.attach(run_cmd);

  // ---- mollifier -------------------------------------------------------
  auto* mol_cmd = app.add_subcommand("mollifier", "build or verify mollifiers");
  mol_cmd->require_subcommand(1);
  int mol_q = 0, mol_n = 1;
  bool mol_sym = false;
  double mol_width = 1.0, mol_center = 0.0;
  std::string mol_out;
  for (const char* sub : {"build", "verify"}) {
    auto* c = mol_cmd->add_subcommand(sub, sub == std::string("build")
                                               ? "solve the moment system and emit the mollifier"
                                               : "report all moments up to order q+2");
    c->add_option("--q", mol_q, "vanishing-moment order (0..6)");
    c->add_option("--n", mol_n, "dimension (1 or 2)");
    c->add_flag("--symmetric", mol_sym, "even mollifier");
    c->add_option("--width", mol_width, "support radius in (0, 1]");
    c->add_option("--center", mol_center, "support center along the first axis");
    c->add_option("--out", mol_out, "write the JSON to this file instead of stdout");
  }

  // ---- kernel check -----------------------------------------------------
  auto* ker_cmd = app.add_subcommand("kernel", "smoothing-kernel verifiers");
  auto* ker_check = ker_cmd->add_subcommand("check", "run an LSK check on a kernel");
  std::string ker_which = "lsk2", ker_kind = "model", ker_f;
  int ker_q = 0, ker_n = 1;
  std::vector<int> ker_alpha, ker_beta;
  CommonFlags ker_flags;
  ker_check->add_option("--which", ker_which, "lsk1|lsk2|lsk3|lsk3p");
  ker_check->add_option("--q", ker_q, "mollifier order");
  ker_check->add_option("--n", ker_n, "dimension");
  ker_check->add_option("--alpha", ker_alpha, "alpha multi-index");
  ker_check->add_option("--beta", ker_beta, "beta multi-index");
  ker_check->add_option("--kernel", ker_kind, "model|shifted|glued|pullback|derive|lsk7");
  ker_check->add_option("--f", ker_f, "moment function f as inline JSON or @file (LSK3)");
  ker_flags.attach(ker_check);

  // ---- test moderate|negligible ------------------------------------------
  auto* test_cmd = app.add_subcommand("test", "quotient-defining tests");
  test_cmd->require_subcommand(1);
  std::string subj_text;
  std::vector<int> test_orders{0, 1};
  int alpha_max = 1;
  std::vector<int> m_targets{1};
  bool alpha0_only = true;
  CommonFlags test_flags;
  auto* t_mod = test_cmd->add_subcommand("moderate", "moderateness test");
  auto* t_neg = test_cmd->add_subcommand("negligible", "negligibility test");
  for (auto* c : {t_mod, t_neg}) {
    c->add_option("--subject", subj_text, "generalized function tree (inline JSON or @file)")
        ->required();
    c->add_option("--orders", test_orders, "kernel orders in the battery");
    test_flags.attach(c);
  }
  t_mod->add_option("--alpha-max", alpha_max, "largest derivative order");
  t_neg->add_option("--m-targets", m_targets, "rates m to certify");
  t_neg->add_flag("--alpha0-only,!--all-alpha", alpha0_only,
                  "use the simplified alpha=0 test (subject must be moderate)");

  // ---- assoc ---------------------------------------------------------------
  auto* assoc_cmd = app.add_subcommand("assoc", "association test R ~ S");
  std::string assoc_subject, assoc_reference, assoc_expect = "associated";
  double psi_width = 0.25;
  std::vector<int> assoc_orders{0};
  CommonFlags assoc_flags;
  assoc_cmd->add_option("--subject", assoc_subject, "R (inline JSON or @file)")->required();
  assoc_cmd->add_option("--reference", assoc_reference, "S (defaults to 0)");
  assoc_cmd->add_option("--expect", assoc_expect, "associated|not-associated|any");
  assoc_cmd->add_option("--psi-width", psi_width, "support half-width of the pairing function");
  assoc_cmd->add_option("--orders", assoc_orders, "kernel orders in the battery");
  assoc_flags.attach(assoc_cmd);

  // ---- glue ----------------------------------------------------------------
  auto* glue_cmd = app.add_subcommand("glue", "two-set sheaf gluing experiment");
  std::string glue_subject;
  CommonFlags glue_flags;
  glue_cmd->add_option("--subject", glue_subject,
                       "generalized function tree (defaults to iota(delta_0))");
  glue_flags.attach(glue_cmd);

  // ---- demo ----------------------------------------------------------------
  auto* demo_cmd = app.add_subcommand("demo", "run a bundled experiment");
  std::string demo_name;
  demo_cmd
      ->add_option("--name,name", demo_name,
                   "heaviside-times-delta | delta-squared | embedding-theorem | "
                   "diffeo-invariance | lie-derivative | sheaf-glue")
      ->required();
  CommonFlags demo_flags;
  demo_flags.attach(demo_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ScenarioResult res = run_scenario_file(scenario_path, run_flags.out_dir, run_flags.overrides());
      print_summary(res.summary);
      std::cout << "artifacts written to " << run_flags.out_dir << "\n";
      return res.all_passed ? 0 : kExitTestFailure;
    }

    if (*mol_cmd) {
      Mollifier m = build_mollifier(mol_q, mol_n, mol_sym, mol_width, mol_center);
      Json out = mollifier_to_json(m);
      out["moments"] = moment_report_to_json(verify_moments(m));
      std::string text = out.dump(2) + "\n";
      if (mol_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(mol_out);
        f << text;
        std::cout << "mollifier written to " << mol_out << "\n";
      }
      return 0;
    }

    if (*ker_check) {
      Json scenario = base_scenario("kernel-check", ker_n, {ker_q}, {"model", "shifted", "glued"});
      // add pullback/derive/lsk7 variants on demand
      std::string id = ker_kind + std::to_string(ker_q);
      if (ker_kind == "pullback") {
        scenario["diffeos"] = Json::array({Json{{"id", "mu"}, {"type", "affine"}, {"n", ker_n},
                                                {"A", Json::array({0.8, 0.0, 0.0, 1.0})},
                                                {"b", Json::array({0.1, 0.0})}}});
        scenario["kernels"].push_back(Json{{"id", id},
                                           {"type", "pullback"},
                                           {"base", "model" + std::to_string(ker_q)},
                                           {"diffeo", "mu"}});
      } else if (ker_kind == "derive") {
        Json comp = Json{{"kind", "poly"},
                         {"dim", ker_n},
                         {"terms", Json::array({Json::array(
                                       {Json::array({0}), 1.0})})}};
        scenario["fields"] = Json::array({Json{{"id", "X"}, {"components", Json::array({comp})}}});
        scenario["kernels"].push_back(Json{{"id", id},
                                           {"type", "derive"},
                                           {"base", "model" + std::to_string(ker_q)},
                                           {"field", "X"}});
      } else if (ker_kind == "lsk7") {
        scenario["kernels"].push_back(
            Json{{"id", id}, {"type", "lsk7"}, {"base", "model" + std::to_string(ker_q)}});
      }
      Json test{{"type", "lsk-check"}, {"kernel", id}, {"which", ker_which}, {"probe", default_probe()}};
      if (!ker_alpha.empty()) test["alpha"] = ker_alpha;
      if (!ker_beta.empty()) test["beta"] = ker_beta;
      if (!ker_f.empty()) test["f"] = parse_inline_or_file(ker_f, "--f");
      else if (ker_which == "lsk3" || ker_which == "lsk3p")
        test["f"] = Json{{"kind", "poly"},
                         {"dim", ker_n},
                         {"terms", Json::array({Json::array({Json::array({ker_q + 2}), 1.0})})}};
      scenario["tests"] = Json::array({test});
      return run_and_report(scenario, ker_flags);
    }

    if (*t_mod || *t_neg) {
      Json scenario = base_scenario("cli-test", 1, test_orders, {"model", "shifted"});
      scenario["subjects"] =
          Json::array({Json{{"id", "R"}, {"tree", parse_inline_or_file(subj_text, "--subject")}}});
      Json kernels = Json::array();
      for (const std::string& kid : kernel_ids(scenario, test_orders, {"model", "shifted"}))
        kernels.push_back(kid);
      Json test{{"subject", "R"}, {"kernels", kernels}, {"probe", default_probe()}};
      if (*t_mod) {
        test["type"] = "moderate";
        test["alpha_max"] = alpha_max;
      } else {
        test["type"] = "negligible";
        test["m_targets"] = m_targets;
        test["alpha0_only"] = alpha0_only;
      }
      scenario["tests"] = Json::array({test});
      return run_and_report(scenario, test_flags);
    }

    if (*assoc_cmd) {
      Json scenario = base_scenario("cli-assoc", 1, assoc_orders, {"model"});
      Json subjects = Json::array(
          {Json{{"id", "R"}, {"tree", parse_inline_or_file(assoc_subject, "--subject")}}});
      if (!assoc_reference.empty())
        subjects.push_back(
            Json{{"id", "S"}, {"tree", parse_inline_or_file(assoc_reference, "--reference")}});
      scenario["subjects"] = subjects;
      Json kernels = Json::array();
      for (const std::string& kid : kernel_ids(scenario, assoc_orders, {"model"}))
        kernels.push_back(kid);
      Json test{{"type", "assoc"},
                {"subject", "R"},
                {"kernels", kernels},
                {"expect", assoc_expect},
                {"psi", Json{{"width", psi_width}}}};
      if (!assoc_reference.empty()) test["reference"] = "S";
      scenario["tests"] = Json::array({test});
      return run_and_report(scenario, assoc_flags);
    }

    if (*glue_cmd) {
      Json scenario = base_scenario("cli-glue", 1, {0}, {"model"});
      Json tree = glue_subject.empty()
                      ? Json{{"op", "iota"},
                             {"dist", Json{{"kind", "delta"}, {"point", Json::array({0.0})}}}}
                      : parse_inline_or_file(glue_subject, "--subject");
      scenario["subjects"] = Json::array({Json{{"id", "R"}, {"tree", tree}}});
      Json u1{{"boxes", Json::array({Json{{"lo", Json::array({-2.0})}, {"hi", Json::array({0.4})}}})}};
      Json u2{{"boxes", Json::array({Json{{"lo", Json::array({-0.4})}, {"hi", Json::array({2.0})}}})}};
      scenario["tests"] = Json::array({Json{{"type", "sheaf-glue"},
                                            {"subject", "R"},
                                            {"kernel", "model0"},
                                            {"cover", Json::array({u1, u2})},
                                            {"eps", Json{{"min", 0.01}, {"max", 0.3}, {"points", 9}}}}});
      return run_and_report(scenario, glue_flags);
    }

    if (*demo_cmd) {
      fs::path p = locate_scenario(demo_name);
      std::cout << "running " << p << "\n";
      ScenarioResult res = run_scenario_file(p, demo_flags.out_dir, demo_flags.overrides());
      print_summary(res.summary);
      std::cout << "artifacts written to " << demo_flags.out_dir << "\n";
      return res.all_passed ? 0 : kExitTestFailure;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
