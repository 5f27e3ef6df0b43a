#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "colombeau/genfun.hpp"
#include "colombeau/mollifier.hpp"
#include "colombeau/testing.hpp"

namespace colombeau {

using Json = nlohmann::ordered_json;

// JSON forms of the domain objects (scenario files and reports)
Json box_to_json(const Box& b);
Box box_from_json(const Json& j);
Json domain_to_json(const Domain& d);
Domain domain_from_json(const Json& j);
Json expr_to_json(const Expr& e);
Expr expr_from_json(const Json& j);
Json distribution_to_json(const Distribution& u);
Distribution distribution_from_json(const Json& j);
Json mollifier_to_json(const Mollifier& m);
Json moment_report_to_json(const MomentReport& r);
Json asymptotic_report_to_json(const AsymptoticReport& r);

/// Resolves {"op": ...} trees; diffeomorphisms and vector fields referenced
/// by id are looked up through the resolver callbacks.
struct TreeContext {
  std::function<Diffeomorphism(const std::string&)> diffeo;
  std::function<VectorField(const std::string&)> field;
};
GenFun genfun_from_json(const Json& j, const Domain& default_domain, const TreeContext& ctx);

struct ScenarioOverrides {
  std::optional<double> eps_min, eps_max;
  std::optional<int> eps_points;
  std::optional<double> slope_tol;
  std::optional<int> workers;
};

struct ScenarioResult {
  bool all_passed = false;
  Json summary;
};

/// Runs every test in the scenario, writing verdict JSONs and sweep CSVs
/// under out_dir. Reference and schema problems throw ScenarioError;
/// numerical failures propagate as QuadratureError/DomainError/Error.
ScenarioResult run_scenario(const Json& scenario, const std::filesystem::path& out_dir,
                            const ScenarioOverrides& overrides = {});
ScenarioResult run_scenario_file(const std::filesystem::path& file,
                                 const std::filesystem::path& out_dir,
                                 const ScenarioOverrides& overrides = {});

}  // namespace colombeau
