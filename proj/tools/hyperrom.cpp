#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hrom/config.hpp"
#include "hrom/store.hpp"

using namespace hrom;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kMissing = 3, kDivergence = 4, kVerify = 5 };

class DivergenceBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class VerificationFailed : public Error {
 public:
  using Error::Error;
};

struct Stage {
  const char* dir;
  const char* kind;
  const char* command;
};

constexpr Stage kMesh{"mesh", "mesh", "mesh"};
constexpr Stage kFom{"fom", "fom", "fom run"};
constexpr Stage kReduce{"reduce", "reduce", "train reduce"};
constexpr Stage kGalerkin{"galerkin", "galerkin", "rom run --galerkin --record-residuals"};
constexpr Stage kHyper{"hyper", "hyper", "train hyper"};
constexpr Stage kRomHyper{"rom_hyper", "rom_hyper", "rom run --hyper"};
constexpr Stage kSweep{"sweep", "sweep", "sweep"};
constexpr Stage kDiag{"diag", "diag", "diag"};

struct Options {
  std::string config_file;
  std::string out = "hrom_out";
  json overrides = json::object();
};

void set_path(json& doc, const std::string& section, const std::string& key, json value) {
  doc[section][key] = std::move(value);
}

RunConfig resolve(const Options& o) {
  json doc = json::object();
  if (!o.config_file.empty()) doc = to_json(load_config(o.config_file));
  doc.merge_patch(o.overrides);
  RunConfig c = config_from_json(doc);
  apply_environment(c);
  return c;
}

Artifact open_stage(const Options& o, const Stage& s) { return Artifact::open(fs::path(o.out) / s.dir, s.kind, s.command); }

RunConfig config_of(const Artifact& a) { return config_from_json(a.manifest().at("config")); }

/// Mesh and material always come from the mesh artifact; later sections from their producing stage.
RunConfig compose(RunConfig current, const Artifact* mesh, const Artifact* fom, const Artifact* reduce,
                  const Artifact* hyper) {
  if (mesh) {
    const RunConfig m = config_of(*mesh);
    current.mesh = m.mesh;
    current.variant = m.variant;
    current.phases = m.phases;
  }
  if (fom) current.load = config_of(*fom).load;
  if (reduce) current.reduction = config_of(*reduce).reduction;
  if (hyper) {
    const RunConfig h = config_of(*hyper);
    current.hyper = h.hyper;
    current.xi = h.xi;
    current.lspg_paper_sign = h.lspg_paper_sign;
  }
  return current;
}

RveProblem make_problem(const RunConfig& c) { return RveProblem(build_rve_mesh(c.mesh), c.materials()); }

std::vector<LoadPath> make_paths(const RunConfig& c) {
  return gen_load_paths(c.load.seed, c.load.paths, c.load.steps, c.load.dlp, c.load.dls);
}

int training_paths(const RunConfig& c) { return std::min(c.load.training_paths, c.load.paths); }

void write_timings(const fs::path& dir, const CampaignResult& r) {
  json t = json::object();
  for (const auto& [k, v] : r.timings.entries()) t[k] = v;
  t["online_total"] = r.total_seconds();
  write_file(dir / "timing.json", t.dump(2) + "\n");
}

json errors_json(const CampaignErrors& e) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"states", e.total}, {"diverged", e.diverged}, {"error_u_percent", num(e.error_u)},
          {"error_P_percent", num(e.error_P)}, {"error_u_converged_percent", num(e.error_u_converged)},
          {"error_P_converged_percent", num(e.error_P_converged)}};
}

void check_budget(int diverged, const RunConfig& c) {
  if (diverged > c.solver.divergence_budget)
    throw DivergenceBudgetExceeded(std::to_string(diverged) + " diverged states exceed the budget of " +
                                   std::to_string(c.solver.divergence_budget));
}

void run_mesh(const Options& o) {
  const RunConfig c = resolve(o);
  const RveProblem problem = make_problem(c);
  const Mesh& mesh = problem.mesh();
  ArtifactWriter w(fs::path(o.out) / kMesh.dir, kMesh.kind);
  Mat X(mesh.num_nodes(), 3), conn(mesh.num_elements(), 8), mat(1, mesh.num_elements());
  for (int n = 0; n < mesh.num_nodes(); ++n) X.row(n) = mesh.node_coords[n].transpose();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int k = 0; k < 8; ++k) conn(e, k) = mesh.elements[e][k];
    mat(0, e) = mesh.element_material[e];
  }
  w.put_matrix("node_coords", X);
  w.put_matrix("connectivity", conn);
  w.put_matrix("element_material", mat);
  w.config() = to_json(c);
  w.params() = {{"divisions", mesh.divisions}, {"nodes", mesh.num_nodes()}, {"elements", mesh.num_elements()},
                {"free_dofs", problem.num_dofs()}, {"volume", mesh.volume}};
  w.commit();
  std::cout << "mesh: " << mesh.num_elements() << " elements, D = " << problem.num_dofs() << "\n";
}

void run_fom(const Options& o) {
  const Artifact mesh = open_stage(o, kMesh);
  const RunConfig c = compose(resolve(o), &mesh, nullptr, nullptr, nullptr);
  const RveProblem problem = make_problem(c);
  const auto paths = make_paths(c);
  const CampaignResult r = run_fom_campaign(problem, paths, c.newton_options(), c.resolved_threads());

  const fs::path dir = fs::path(o.out) / kFom.dir;
  ArtifactWriter w(dir, kFom.kind);
  SnapshotSet snaps;
  for (const auto& s : r.states)
    if (s.converged) snaps.append(s.u, paths[s.path].targets()[s.step], s.path, s.step);
  put_snapshots(w, snaps);
  put_campaign(w, r);
  w.config() = to_json(c);
  w.params()["snapshots"] = snaps.size();
  w.params()["training_paths"] = training_paths(c);
  w.add_input(kMesh.command, mesh.dir());
  w.commit();
  write_timings(dir, r);
  std::cout << "fom run: " << r.states.size() << " states, " << snaps.size() << " snapshots, " << r.diverged()
            << " diverged\n";
  check_budget(r.diverged(), c);
}

void run_train_reduce(const Options& o) {
  const Artifact mesh = open_stage(o, kMesh);
  const Artifact fom = open_stage(o, kFom);
  const RunConfig c = compose(resolve(o), &mesh, &fom, nullptr, nullptr);
  const auto paths = make_paths(c);
  const SnapshotSet train = get_campaign(fom).snapshots(paths, training_paths(c));
  const auto space = build_space(train, c.reduction);

  ArtifactWriter w(fs::path(o.out) / kReduce.dir, kReduce.kind);
  put_space(w, *space);
  w.config() = to_json(c);
  w.params()["training_snapshots"] = train.size();
  w.add_input(kFom.command, fom.dir());
  w.commit();
  std::cout << "train reduce: " << to_string(space->method()) << " d = " << space->dim()
            << ", dbar = " << space->intermediate_dim() << ", s = " << train.size() << "\n";
}

void run_rom_galerkin(const Options& o, bool record) {
  const Artifact mesh = open_stage(o, kMesh);
  const Artifact fom = open_stage(o, kFom);
  const Artifact reduce = open_stage(o, kReduce);
  const RunConfig c = compose(resolve(o), &mesh, &fom, &reduce, nullptr);
  const RveProblem problem = make_problem(c);
  const auto paths = make_paths(c);
  const auto space = get_space(reduce);
  const CampaignResult ref = get_campaign(fom);

  ResidualSet all;
  const CampaignResult r =
      run_galerkin_campaign(problem, *space, paths, c.rom_options(), record ? &all : nullptr, c.resolved_threads());
  const CampaignErrors e = campaign_errors(r, ref);

  const fs::path dir = fs::path(o.out) / kGalerkin.dir;
  ArtifactWriter w(dir, kGalerkin.kind);
  put_campaign(w, r);
  if (record) {
    ResidualSet training;
    for (int i = 0; i < all.size(); ++i)
      if (all.meta[i].path < training_paths(c)) training.append(all.columns[i], all.meta[i]);
    put_residuals(w, training);
  }
  w.config() = to_json(c);
  w.params()["errors"] = errors_json(e);
  w.params()["recorded_residuals"] = record;
  w.add_input(kFom.command, fom.dir());
  w.add_input(kReduce.command, reduce.dir());
  w.commit();
  write_timings(dir, r);
  std::cout << "rom run --galerkin: " << errors_json(e).dump() << "\n";
  check_budget(e.diverged, c);
}

void run_train_hyper(const Options& o) {
  const Artifact mesh = open_stage(o, kMesh);
  const Artifact fom = open_stage(o, kFom);
  const Artifact reduce = open_stage(o, kReduce);
  const Artifact gal = open_stage(o, kGalerkin);
  if (!gal.has("G"))
    throw StoreError(StoreErrorKind::missing_dependency,
                     "no residual snapshots in " + gal.dir().string() + "; run `" + kGalerkin.command + "` first");
  const RunConfig c = compose(resolve(o), &mesh, &fom, &reduce, nullptr);
  const RveProblem problem = make_problem(c);
  const auto paths = make_paths(c);
  const auto space = get_space(reduce);
  const SnapshotSet train = get_campaign(fom).snapshots(paths, training_paths(c));
  HyperModel model = train_hyper(problem, *space, get_residuals(gal).matrix(), train, c.hyper);
  if (c.xi == "unit") use_unit_xi(model);

  ArtifactWriter w(fs::path(o.out) / kHyper.dir, kHyper.kind);
  put_hyper(w, model);
  w.config() = to_json(c);
  w.add_input(kReduce.command, reduce.dir());
  w.add_input(kGalerkin.command, gal.dir());
  w.commit();
  std::cout << "train hyper: " << to_string(model.method) << " m = " << model.domain.num_magic()
            << ", |E_m| = " << model.domain.elements.size() << " of " << problem.num_elements() << "\n";
  for (const auto& warn : model.warnings) std::cout << "warning: " << warn << "\n";
}

void run_rom_hyper(const Options& o) {
  const Artifact mesh = open_stage(o, kMesh);
  const Artifact fom = open_stage(o, kFom);
  const Artifact reduce = open_stage(o, kReduce);
  const Artifact hyper = open_stage(o, kHyper);
  const RunConfig c = compose(resolve(o), &mesh, &fom, &reduce, &hyper);
  const RveProblem problem = make_problem(c);
  const auto paths = make_paths(c);
  const auto space = get_space(reduce);
  const HyperModel model = get_hyper(hyper, problem, *space);
  const CampaignResult r = run_hyper_campaign(problem, *space, model, paths, c.hyper_options(), c.resolved_threads());
  const CampaignErrors e = campaign_errors(r, get_campaign(fom));

  const fs::path dir = fs::path(o.out) / kRomHyper.dir;
  ArtifactWriter w(dir, kRomHyper.kind);
  put_campaign(w, r);
  w.config() = to_json(c);
  w.params()["errors"] = errors_json(e);
  w.add_input(kHyper.command, hyper.dir());
  w.commit();
  write_timings(dir, r);
  std::cout << "rom run --hyper: " << errors_json(e).dump() << "\n";
  if (r.full_order_ops != 0) std::cout << "warning: " << r.full_order_ops << " full-order operations online\n";
  check_budget(e.diverged, c);
}

struct SweepLists {
  std::vector<int> ds, ms;
  std::vector<std::string> methods, hypers;
};

void run_sweep(const Options& o, const SweepLists& lists) {
  const Artifact mesh = open_stage(o, kMesh);
  const Artifact fom = open_stage(o, kFom);
  const RunConfig c = compose(resolve(o), &mesh, &fom, nullptr, nullptr);
  const RveProblem problem = make_problem(c);
  const auto paths = make_paths(c);
  const CampaignResult ref = get_campaign(fom);

  SweepConfig sc;
  sc.reduction = c.reduction;
  sc.hyper = c.hyper;
  sc.rom = c.rom_options();
  sc.hyper_options = c.hyper_options();
  sc.n_training = training_paths(c);
  sc.threads = c.resolved_threads();
  sc.ds = lists.ds.empty() ? std::vector<int>{c.reduction.d} : lists.ds;
  sc.ms = lists.ms.empty() ? std::vector<int>{c.hyper.m} : lists.ms;
  sc.methods.clear();
  for (const auto& m : lists.methods) sc.methods.push_back(parse_method(m));
  if (sc.methods.empty()) sc.methods.push_back(c.reduction.method);
  sc.hypers.clear();
  for (const auto& h : lists.hypers) sc.hypers.push_back(parse_hyper_method(h));
  if (sc.hypers.empty()) sc.hypers.push_back(c.hyper.method);

  const auto cells = sweep(problem, paths, ref, sc);
  json report = json::array();
  for (const auto& cell : cells) {
    json j = errors_json(cell.errors);
    j["method"] = to_string(cell.method);
    j["hyper"] = to_string(cell.hyper);
    j["d"] = cell.d;
    j["m"] = cell.m;
    j["failure"] = cell.failure;
    report.push_back(j);
  }
  const fs::path dir = fs::path(o.out) / kSweep.dir;
  ArtifactWriter w(dir, kSweep.kind);
  w.put_text("report_csv", "sweep.csv", sweep_csv(cells));
  w.put_text("report_json", "sweep.json", report.dump(2) + "\n");
  w.config() = to_json(c);
  w.params() = {{"ds", sc.ds}, {"ms", sc.ms}, {"methods", lists.methods}, {"hypers", lists.hypers},
                {"cells", cells.size()}};
  w.add_input(kFom.command, fom.dir());
  w.commit();
  write_file(dir / "sweep_timing.csv", sweep_timing_csv(cells, ref.total_seconds()));
  std::cout << sweep_csv(cells);
}

void run_diag(const Options& o, int points) {
  const Artifact mesh = open_stage(o, kMesh);
  const Artifact fom = open_stage(o, kFom);
  const RunConfig c = compose(resolve(o), &mesh, &fom, nullptr, nullptr);
  const SnapshotSet train = get_campaign(fom).snapshots(make_paths(c), training_paths(c));
  const Vec ev = eig_decay(train.U);

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < train.size(); ++i)
    for (int j = i + 1; j < train.size(); ++j) {
      const double r = (train.U.col(i) - train.U.col(j)).norm();
      if (r > 0) lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  std::vector<double> grid;
  if (hi > 0)
    for (int i = 0; i < points; ++i) grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  const CorrelationCurve cd = correlation_dimension(train.U, grid);

  std::ostringstream eig, corr;
  eig << std::setprecision(17) << "index,eigenvalue,relative\r\n";
  for (int i = 0; i < ev.size(); ++i) eig << i + 1 << ',' << ev(i) << ',' << (ev(0) > 0 ? ev(i) / ev(0) : 0.0) << "\r\n";
  corr << std::setprecision(17) << "r,C,slope\r\n";
  for (std::size_t i = 0; i < cd.r.size(); ++i) {
    corr << cd.r[i] << ',' << cd.C[i] << ',';
    if (i >= 1 && i + 1 < cd.r.size()) corr << cd.slope[i - 1];
    corr << "\r\n";
  }
  ArtifactWriter w(fs::path(o.out) / kDiag.dir, kDiag.kind);
  w.put_text("eigenvalues", "eigenvalues.csv", eig.str());
  w.put_text("correlation", "correlation_dimension.csv", corr.str());
  w.config() = to_json(c);
  w.params()["snapshots"] = train.size();
  w.add_input(kFom.command, fom.dir());
  w.commit();
  std::cout << "diag: " << ev.size() << " eigenvalues, " << cd.r.size() << " correlation radii\n";
}

void run_verify(const Options& o) {
  int checked = 0;
  for (const Stage& s : {kMesh, kFom, kReduce, kGalerkin, kHyper, kRomHyper, kSweep, kDiag}) {
    const fs::path dir = fs::path(o.out) / s.dir;
    if (!fs::exists(dir / "manifest.json")) continue;
    const Artifact a = Artifact::open(dir, s.kind, s.command);
    a.verify();
    for (const auto& [stage, input] : a.manifest()["inputs"].items()) {
      for (const Stage& up : {kMesh, kFom, kReduce, kGalerkin, kHyper})
        if (stage == up.command && fs::exists(fs::path(o.out) / up.dir / "manifest.json") &&
            manifest_hash(fs::path(o.out) / up.dir) != input["manifest_sha256"].get<std::string>())
          throw VerificationFailed(std::string(s.dir) + " was built from a different '" + stage + "' artifact");
    }
    std::cout << "verified " << s.dir << "\n";
    ++checked;
  }
  if (checked == 0) throw StoreError(StoreErrorKind::missing_dependency, "nothing to verify in " + o.out);

  if (fs::exists(fs::path(o.out) / kFom.dir / "manifest.json")) {
    const Artifact mesh = open_stage(o, kMesh);
    const Artifact fom = open_stage(o, kFom);
    const RunConfig c = compose(config_of(fom), &mesh, &fom, nullptr, nullptr);
    const RveProblem problem = make_problem(c);
    const auto paths = make_paths(c);
    const std::vector<LoadPath> first(paths.begin(), paths.begin() + 1);
    const CampaignResult replay = run_fom_campaign(problem, first, c.newton_options(), 1);
    const CampaignResult stored = get_campaign(fom);
    for (std::size_t k = 0; k < replay.states.size(); ++k) {
      const StateRecord& a = replay.states[k];
      const StateRecord& b = stored.states[k];
      if (a.converged != b.converged || (a.converged && a.u != b.u))
        throw VerificationFailed("replay of fom path 0 step " + std::to_string(k) + " differs from the stored state");
    }
    std::cout << "replayed fom path 0 (" << replay.states.size() << " states) bit-exactly\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperreduced nonlinear model order reduction for hyperelastic RVEs"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  int threads = -1;
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", o.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("-o,--out", o.out, "Workspace directory for stage artifacts");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Load campaign seed (HYPERROM_SEED takes precedence)");

  auto* mesh = app.add_subcommand("mesh", "Build the RVE mesh");
  int divisions = 0;
  mesh->add_option("--divisions", divisions, "Elements per cube edge")->check(CLI::PositiveNumber);

  auto* fom = app.add_subcommand("fom", "Full-order model");
  fom->require_subcommand(1);
  auto* fom_run = fom->add_subcommand("run", "Solve every load path with the FOM");
  int paths = 0, steps = 0, train_paths = 0;
  double dlp = -1, dls = -1;
  fom_run->add_option("--paths", paths)->check(CLI::PositiveNumber);
  fom_run->add_option("--steps", steps)->check(CLI::PositiveNumber);
  fom_run->add_option("--training-paths", train_paths)->check(CLI::PositiveNumber);
  fom_run->add_option("--dlp", dlp)->check(CLI::NonNegativeNumber);
  fom_run->add_option("--dls", dls)->check(CLI::NonNegativeNumber);

  auto* train = app.add_subcommand("train", "Offline training");
  train->require_subcommand(1);
  auto* reduce = train->add_subcommand("reduce", "Fit the approximation space");
  std::string method;
  int d = 0, d_bar = -1, k = -1, N = -1, clusters = 0, d_tilde = -1;
  reduce->add_option("--method", method, "pod | lpod | pm | lle");
  reduce->add_option("--d", d)->check(CLI::PositiveNumber);
  reduce->add_option("--d-bar", d_bar)->check(CLI::NonNegativeNumber);
  reduce->add_option("--k", k)->check(CLI::NonNegativeNumber);
  reduce->add_option("--N", N)->check(CLI::NonNegativeNumber);
  reduce->add_option("--clusters", clusters)->check(CLI::PositiveNumber);
  reduce->add_option("--d-tilde", d_tilde)->check(CLI::NonNegativeNumber);
  auto* hyper = train->add_subcommand("hyper", "Train the hyperreduction");
  std::string hyper_method, xi;
  int m = 0;
  double ridge = -1;
  hyper->add_option("--hyper", hyper_method, "deim | lehm | lspg");
  hyper->add_option("--m", m)->check(CLI::PositiveNumber);
  hyper->add_option("--ridge-scale", ridge)->check(CLI::NonNegativeNumber);
  hyper->add_option("--xi", xi, "nnls | unit");

  auto* rom = app.add_subcommand("rom", "Online reduced solves");
  rom->require_subcommand(1);
  auto* rom_run = rom->add_subcommand("run", "Run the reduced model on every load path");
  bool galerkin = false, hyperreduced = false, record = false;
  auto* g_flag = rom_run->add_flag("--galerkin", galerkin, "Galerkin ROM (full assembly)");
  auto* h_flag = rom_run->add_flag("--hyper", hyperreduced, "Hyperreduced ROM");
  g_flag->excludes(h_flag);
  rom_run->add_flag("--record-residuals", record, "Keep Galerkin residual snapshots of the training paths")
      ->needs(g_flag);

  auto* sw = app.add_subcommand("sweep", "Grid over method x hyper x d x m");
  SweepLists lists;
  sw->add_option("--d", lists.ds)->delimiter(',');
  sw->add_option("--m", lists.ms)->delimiter(',');
  sw->add_option("--method", lists.methods)->delimiter(',');
  sw->add_option("--hyper", lists.hypers)->delimiter(',');

  auto* diag = app.add_subcommand("diag", "Eigenvalue decay and correlation dimension of the snapshots");
  int points = 30;
  diag->add_option("--points", points, "Radii in the correlation grid")->check(CLI::Range(3, 1000));

  auto* verify = app.add_subcommand("verify", "Re-check manifests and replay a FOM path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  json& ov = o.overrides;
  if (threads >= 0) ov["threads"] = threads;
  if (seed) set_path(ov, "load", "seed", *seed);
  if (divisions > 0) set_path(ov, "mesh", "divisions", divisions);
  if (paths > 0) set_path(ov, "load", "paths", paths);
  if (steps > 0) set_path(ov, "load", "steps", steps);
  if (train_paths > 0) set_path(ov, "load", "training_paths", train_paths);
  if (dlp >= 0) set_path(ov, "load", "dlp", dlp);
  if (dls >= 0) set_path(ov, "load", "dls", dls);
  if (!method.empty()) set_path(ov, "reduction", "method", method);
  if (d > 0) set_path(ov, "reduction", "d", d);
  if (d_bar >= 0) set_path(ov, "reduction", "d_bar", d_bar);
  if (k >= 0) set_path(ov, "reduction", "k", k);
  if (N >= 0) set_path(ov, "reduction", "N", N);
  if (clusters > 0) set_path(ov, "reduction", "n_clusters", clusters);
  if (d_tilde >= 0) set_path(ov, "reduction", "d_tilde", d_tilde);
  if (!hyper_method.empty()) set_path(ov, "hyper", "method", hyper_method);
  if (m > 0) set_path(ov, "hyper", "m", m);
  if (ridge >= 0) set_path(ov, "hyper", "ridge_scale", ridge);
  if (!xi.empty()) set_path(ov, "hyper", "xi", xi);

  try {
    if (*mesh)
      run_mesh(o);
    else if (*fom_run)
      run_fom(o);
    else if (*reduce)
      run_train_reduce(o);
    else if (*hyper)
      run_train_hyper(o);
    else if (*rom_run) {
      if (galerkin)
        run_rom_galerkin(o, record);
      else if (hyperreduced)
        run_rom_hyper(o);
      else
        throw ConfigError("rom run needs --galerkin or --hyper");
    } else if (*sw)
      run_sweep(o, lists);
    else if (*diag)
      run_diag(o, points);
    else if (*verify)
      run_verify(o);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const StoreError& e) {
    std::cerr << e.what() << "\n";
    if (e.kind() == StoreErrorKind::missing_dependency) return kMissing;
    if (e.kind() == StoreErrorKind::io) return kFailure;
    return kVerify;
  } catch (const DivergenceBudgetExceeded& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const VerificationFailed& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kVerify;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
