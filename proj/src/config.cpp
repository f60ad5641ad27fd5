#include "hrom/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace hrom {

using nlohmann::json;

int RunConfig::resolved_threads() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

MaterialTable RunConfig::materials() const {
  MaterialTable t;
  for (const auto& p : phases) t[p.id] = moduli_from_E_nu(p.E, p.nu, variant);
  return t;
}

NewtonOptions RunConfig::newton_options() const {
  NewtonOptions o;
  o.tol = solver.tol;
  o.max_iter = solver.max_iter;
  o.max_bisections = solver.max_bisections;
  return o;
}

RomOptions RunConfig::rom_options() const { return {solver.tol, solver.max_iter, solver.max_bisections}; }

HyperOptions RunConfig::hyper_options() const {
  return {solver.tol, solver.max_iter, solver.max_bisections, lspg_paper_sign};
}

json to_json(const RunConfig& c) {
  json inclusions = json::array();
  for (const auto& inc : c.mesh.inclusions)
    inclusions.push_back({{"center", {inc.center.x(), inc.center.y(), inc.center.z()}},
                          {"radius", inc.radius},
                          {"material", inc.material_id}});
  json phases = json::array();
  for (const auto& p : c.phases) phases.push_back({{"id", p.id}, {"E", p.E}, {"nu", p.nu}});
  const ReductionConfig& r = c.reduction;
  return {
      {"mesh",
       {{"divisions", c.mesh.divisions},
        {"edge_length", c.mesh.edge_length},
        {"matrix_material", c.mesh.matrix_material_id},
        {"inclusions", inclusions}}},
      {"material", {{"variant", to_string(c.variant)}, {"phases", phases}}},
      {"load",
       {{"seed", c.load.seed},
        {"paths", c.load.paths},
        {"steps", c.load.steps},
        {"training_paths", c.load.training_paths},
        {"dlp", c.load.dlp},
        {"dls", c.load.dls}}},
      {"reduction",
       {{"method", to_string(r.method)},
        {"d", r.d},
        {"d_bar", r.d_bar},
        {"k", r.k},
        {"N", r.N},
        {"lle_reg", r.lle_reg},
        {"n_clusters", r.n_clusters},
        {"overlap", r.overlap},
        {"d_tilde", r.d_tilde},
        {"pm_iters", r.pm_iters},
        {"pm_tol", r.pm_tol},
        {"seed", r.seed}}},
      {"hyper",
       {{"method", to_string(c.hyper.method)},
        {"m", c.hyper.m},
        {"ridge_scale", c.hyper.ridge_scale},
        {"xi", c.xi},
        {"lspg_paper_sign", c.lspg_paper_sign}}},
      {"solver",
       {{"tol", c.solver.tol},
        {"max_iter", c.solver.max_iter},
        {"max_bisections", c.solver.max_bisections},
        {"divergence_budget", c.solver.divergence_budget}}},
      {"threads", c.threads},
  };
}

namespace {

bool same_kind(const json& value, const json& def) {
  if (def.is_number_integer()) return value.is_number_integer();
  if (def.is_number()) return value.is_number();
  return value.type() == def.type();
}

void overlay(json& target, const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!target.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& slot = target[key];
    if (!same_kind(value, slot)) throw ConfigError("config key '" + path + "' has the wrong type");
    if (slot.is_object())
      overlay(slot, value, path);
    else
      slot = value;
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' is missing or malformed");
  }
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  json merged = to_json(RunConfig{});
  overlay(merged, doc, "");

  RunConfig c;
  const json& m = merged["mesh"];
  c.mesh.divisions = get<int>(m, "divisions", "mesh");
  c.mesh.edge_length = get<double>(m, "edge_length", "mesh");
  c.mesh.matrix_material_id = get<int>(m, "matrix_material", "mesh");
  c.mesh.inclusions.clear();
  for (const json& inc : m["inclusions"]) {
    const auto center = get<std::vector<double>>(inc, "center", "mesh.inclusions");
    require(center.size() == 3, "inclusion centre needs three coordinates");
    c.mesh.inclusions.push_back(
        {Vec3(center[0], center[1], center[2]), get<double>(inc, "radius", "mesh.inclusions"),
         get<int>(inc, "material", "mesh.inclusions")});
  }
  require(c.mesh.divisions >= 1, "mesh.divisions must be >= 1");
  require(c.mesh.edge_length > 0, "mesh.edge_length must be positive");

  const json& mat = merged["material"];
  c.variant = parse_variant(get<std::string>(mat, "variant", "material"));
  c.phases.clear();
  for (const json& p : mat["phases"])
    c.phases.push_back({get<int>(p, "id", "material.phases"), get<double>(p, "E", "material.phases"),
                        get<double>(p, "nu", "material.phases")});
  std::vector<int> needed{c.mesh.matrix_material_id};
  for (const auto& inc : c.mesh.inclusions) needed.push_back(inc.material_id);
  for (int id : needed) {
    bool found = false;
    for (const auto& p : c.phases) found = found || p.id == id;
    require(found, "material phase " + std::to_string(id) + " is referenced by the mesh but not defined");
  }
  c.materials();  // validates E and nu

  const json& l = merged["load"];
  c.load = {get<std::uint64_t>(l, "seed", "load"),    get<int>(l, "paths", "load"),
            get<int>(l, "steps", "load"),             get<int>(l, "training_paths", "load"),
            get<double>(l, "dlp", "load"),            get<double>(l, "dls", "load")};
  require(c.load.paths >= 1 && c.load.steps >= 1, "load.paths and load.steps must be >= 1");
  require(c.load.training_paths >= 1, "load.training_paths must be >= 1");
  require(c.load.dlp >= 0 && c.load.dls >= 0, "load step sizes must be nonnegative");

  const json& r = merged["reduction"];
  ReductionConfig& rc = c.reduction;
  rc.method = parse_method(get<std::string>(r, "method", "reduction"));
  rc.d = get<int>(r, "d", "reduction");
  rc.d_bar = get<int>(r, "d_bar", "reduction");
  rc.k = get<int>(r, "k", "reduction");
  rc.N = get<int>(r, "N", "reduction");
  rc.lle_reg = get<double>(r, "lle_reg", "reduction");
  rc.n_clusters = get<int>(r, "n_clusters", "reduction");
  rc.overlap = get<int>(r, "overlap", "reduction");
  rc.d_tilde = get<int>(r, "d_tilde", "reduction");
  rc.pm_iters = get<int>(r, "pm_iters", "reduction");
  rc.pm_tol = get<double>(r, "pm_tol", "reduction");
  rc.seed = get<std::uint64_t>(r, "seed", "reduction");
  require(rc.d >= 1, "reduction.d must be >= 1");
  require(rc.N == 0 || rc.N >= rc.d + 1, "reduction.N must be 0 or >= d + 1");

  const json& h = merged["hyper"];
  c.hyper.method = parse_hyper_method(get<std::string>(h, "method", "hyper"));
  c.hyper.m = get<int>(h, "m", "hyper");
  c.hyper.ridge_scale = get<double>(h, "ridge_scale", "hyper");
  c.xi = get<std::string>(h, "xi", "hyper");
  c.lspg_paper_sign = get<bool>(h, "lspg_paper_sign", "hyper");
  require(c.hyper.m >= 1, "hyper.m must be >= 1");
  require(c.hyper.ridge_scale >= 0, "hyper.ridge_scale must be nonnegative");
  require(c.xi == "nnls" || c.xi == "unit", "hyper.xi must be 'nnls' or 'unit'");

  const json& s = merged["solver"];
  c.solver = {get<double>(s, "tol", "solver"), get<int>(s, "max_iter", "solver"),
              get<int>(s, "max_bisections", "solver"), get<int>(s, "divergence_budget", "solver")};
  require(c.solver.tol > 0 && c.solver.max_iter >= 1 && c.solver.max_bisections >= 0,
          "solver settings out of range");

  c.threads = merged["threads"].get<int>();
  require(c.threads >= 0, "threads must be >= 0");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

void apply_environment(RunConfig& config) {
  const char* seed = std::getenv("HYPERROM_SEED");
  if (!seed || !*seed) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(seed, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("HYPERROM_SEED is not an unsigned integer: ") + seed);
  config.load.seed = v;
}

void use_unit_xi(HyperModel& model) {
  model.xi.elements = model.domain.elements;
  model.xi.xi = Vec::Ones(model.domain.elements.size());
  model.xi.residual = std::numeric_limits<double>::quiet_NaN();
}

}  // namespace hrom
