#include "config.hpp"

#include <fstream>

namespace blindcal::cli {

Section::Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) {
    throw ConfigError((path_.empty() ? std::string("configuration") : "'" + path_ + "'") + " must be an object");
  }
}

bool Section::has(const std::string& key) const { return node_.contains(key); }

Section Section::child(const std::string& key) {
  used_.insert(key);
  if (!node_.contains(key)) return Section(Json::object(), path_of(key));
  return Section(node_.at(key), path_of(key));
}

void Section::finish() const {
  for (auto it = node_.begin(); it != node_.end(); ++it) {
    if (!used_.count(it.key())) throw ConfigError("unknown key '" + path_of(it.key()) + "'");
  }
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
}

SolverConfig parse_solver(Section section) {
  SolverConfig cfg;
  cfg.max_iters = section.get("max_iters", cfg.max_iters);
  cfg.tol = section.get("tol", cfg.tol);
  cfg.smoothing_eps = section.get("smoothing_eps", cfg.smoothing_eps);
  section.finish();
  return cfg;
}

AltMinConfig parse_altmin(Section section) {
  AltMinConfig cfg;
  cfg.grid_step = section.get("grid_step", cfg.grid_step);
  cfg.chi = section.get("chi", cfg.chi);
  cfg.max_outer_iters = section.get("max_outer_iters", cfg.max_outer_iters);
  cfg.num_starts = section.get("num_starts", cfg.num_starts);
  cfg.refine = section.get("refine", cfg.refine);
  cfg.threads = section.get("threads", cfg.threads);
  cfg.polish = section.get("polish", cfg.polish);
  section.finish();
  return cfg;
}

int parse_delta_u(const Json& value, const std::string& path) {
  if (value.is_string()) {
    if (value.get<std::string>() == "M") return 0;
    throw ConfigError("key '" + path + "' must be a positive integer or \"M\"");
  }
  if (!value.is_number_integer() || value.get<int>() < 1) {
    throw ConfigError("key '" + path + "' must be a positive integer or \"M\"");
  }
  return value.get<int>();
}

ExperimentSpec parse_experiment(Section& root, bool require_methods) {
  ExperimentSpec spec;
  spec.n = root.require<int>("n");
  spec.basis = parse_basis_kind(root.get<std::string>("basis", to_string(spec.basis)));
  if (root.has("s")) spec.s_list = root.get<std::vector<int>>("s", {});
  if (root.has("m")) spec.m_list = root.get<std::vector<int>>("m", {});
  spec.r = root.get("r", spec.r);
  if (root.has("delta_u")) spec.delta_u = parse_delta_u(root.get<Json>("delta_u", Json()), root.path_of("delta_u"));
  spec.noise_pct = root.get("noise_pct", spec.noise_pct);
  spec.trials = root.get("trials", spec.trials);
  spec.seed = root.get("seed", spec.seed);
  spec.lambda_factor = root.get("lambda_factor", spec.lambda_factor);
  spec.lambda_cv = root.get("lambda_cv", spec.lambda_cv);
  if (require_methods || root.has("methods")) {
    const auto names = require_methods ? root.require<std::vector<std::string>>("methods")
                                       : root.get<std::vector<std::string>>("methods", {});
    if (names.empty()) throw ConfigError("key '" + root.path_of("methods") + "' must not be empty");
    spec.methods.clear();
    for (const auto& name : names) spec.methods.push_back(parse_method(name));
  }
  spec.solver = parse_solver(root.child("solver"));
  spec.altmin = parse_altmin(root.child("altmin"));
  return spec;
}

Tomo2dSpec parse_tomo2d(Section& root) {
  Tomo2dSpec spec;
  spec.image_size = root.require<int>("image_size");
  spec.n_spokes = root.get("n_spokes", spec.n_spokes);
  spec.per_spoke = root.get("per_spoke", spec.per_spoke);
  spec.sparsity = root.get("sparsity", spec.sparsity);
  spec.angle_err_deg = root.get("angle_err_deg", spec.angle_err_deg);
  spec.noise_pct = root.get("noise_pct", spec.noise_pct);
  spec.seed = root.get("seed", spec.seed);
  spec.lambda_factor = root.get("lambda_factor", spec.lambda_factor);
  spec.solver = parse_solver(root.child("solver"));
  spec.altmin = parse_altmin(root.child("altmin"));
  return spec;
}

}  // namespace blindcal::cli
