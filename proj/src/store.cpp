#include "hrom/store.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hrom/linalg.hpp"

namespace hrom {

namespace fs = std::filesystem;

std::string to_string(StoreErrorKind kind) {
  switch (kind) {
    case StoreErrorKind::io: return "io error";
    case StoreErrorKind::truncated: return "truncated file";
    case StoreErrorKind::magic_mismatch: return "magic mismatch";
    case StoreErrorKind::hash_mismatch: return "hash mismatch";
    case StoreErrorKind::format: return "format error";
    case StoreErrorKind::missing_dependency: return "missing dependency";
  }
  return "unknown";
}

namespace {

static_assert(std::endian::native == std::endian::little, "block I/O assumes a little-endian host");

constexpr std::size_t kHeaderBytes = 6 + 1 + 1 + 8 + 8;

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return v;
}

}  // namespace

std::string encode_block(const Mat& M) {
  std::string out(kBlockMagic);
  out.push_back(0);  // f64
  out.push_back(1);  // row-major
  put_u64(out, static_cast<std::uint64_t>(M.rows()));
  put_u64(out, static_cast<std::uint64_t>(M.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = M;
  out.append(reinterpret_cast<const char*>(R.data()), sizeof(double) * R.size());
  return out;
}

Mat decode_block(std::string_view bytes) {
  if (bytes.size() < kBlockMagic.size()) throw StoreError(StoreErrorKind::truncated, "block shorter than its magic");
  if (bytes.substr(0, kBlockMagic.size()) != kBlockMagic)
    throw StoreError(StoreErrorKind::magic_mismatch, "not an HRMB1 block");
  if (bytes.size() < kHeaderBytes) throw StoreError(StoreErrorKind::truncated, "block header incomplete");
  if (bytes[6] != 0) throw StoreError(StoreErrorKind::format, "unsupported dtype code");
  const bool row_major = bytes[7] != 0;
  const std::uint64_t rows = get_u64(bytes.data() + 8);
  const std::uint64_t cols = get_u64(bytes.data() + 16);
  if (cols != 0 && rows > (bytes.size() / 8) / cols + 1)
    throw StoreError(StoreErrorKind::truncated, "payload shorter than the declared shape");
  const std::uint64_t payload = 8 * rows * cols;
  if (bytes.size() - kHeaderBytes < payload)
    throw StoreError(StoreErrorKind::truncated, "payload shorter than the declared shape");
  if (bytes.size() - kHeaderBytes > payload) throw StoreError(StoreErrorKind::format, "trailing bytes after payload");
  Mat M(rows, cols);
  const char* p = bytes.data() + kHeaderBytes;
  if (row_major) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(rows, cols);
    if (payload) std::memcpy(R.data(), p, payload);
    M = R;
  } else if (payload) {
    std::memcpy(M.data(), p, payload);
  }
  return M;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError(StoreErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError(StoreErrorKind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StoreError(StoreErrorKind::io, "short write to " + path.string());
}

void write_block(const fs::path& path, const Mat& M) { write_file(path, encode_block(M)); }

Mat read_block(const fs::path& path) { return decode_block(read_file(path)); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw StoreError(StoreErrorKind::io, "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

ArtifactWriter::ArtifactWriter(fs::path dir, std::string kind) : dir_(std::move(dir)), kind_(std::move(kind)) {
  fs::create_directories(dir_);
}

void ArtifactWriter::put_matrix(const std::string& name, const Mat& M) {
  const std::string file = name + ".hrmb";
  const std::string bytes = encode_block(M);
  write_file(dir_ / file, bytes);
  files_[name] = {{"path", file}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}, {"rows", M.rows()},
                  {"cols", M.cols()}, {"type", "matrix"}};
}

void ArtifactWriter::put_text(const std::string& name, const std::string& filename, const std::string& content) {
  write_file(dir_ / filename, content);
  files_[name] = {{"path", filename}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}, {"type", "text"}};
}

void ArtifactWriter::add_input(const std::string& stage, const fs::path& dir) {
  inputs_[stage] = {{"manifest_sha256", manifest_hash(dir)}};
}

std::string ArtifactWriter::commit() {
  const Json doc = {{"schema_version", kSchemaVersion},
                    {"kind", kind_},
                    {"created_by", {{"tool", "hyperrom"}, {"version", "1.0.0"}}},
                    {"config", config_},
                    {"params", params_},
                    {"inputs", inputs_},
                    {"files", files_}};
  const std::string text = doc.dump(2) + "\n";
  write_file(dir_ / "manifest.json", text);
  return sha256_hex(text);
}

std::string manifest_hash(const fs::path& dir) { return sha256_hex(read_file(dir / "manifest.json")); }

Artifact Artifact::open(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw StoreError(StoreErrorKind::missing_dependency, "no manifest in " + dir.string());
  Artifact a;
  a.dir_ = dir;
  try {
    a.manifest_ = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw StoreError(StoreErrorKind::format, "unreadable manifest " + path.string() + ": " + e.what());
  }
  if (!a.manifest_.contains("schema_version") || a.manifest_["schema_version"] != kSchemaVersion)
    throw StoreError(StoreErrorKind::format, "unsupported manifest schema in " + dir.string());
  for (const char* key : {"kind", "params", "files"})
    if (!a.manifest_.contains(key)) throw StoreError(StoreErrorKind::format, std::string("manifest lacks ") + key);
  return a;
}

Artifact Artifact::open(const fs::path& dir, const std::string& kind, const std::string& stage) {
  if (!fs::exists(dir / "manifest.json"))
    throw StoreError(StoreErrorKind::missing_dependency,
                     "'" + stage + "' output not found in " + dir.string() + "; run `" + stage + "` first");
  Artifact a = open(dir);
  if (a.manifest_["kind"] != kind)
    throw StoreError(StoreErrorKind::missing_dependency, dir.string() + " holds a '" +
                                                             a.manifest_["kind"].get<std::string>() + "' artifact, `" +
                                                             stage + "` output expected");
  return a;
}

bool Artifact::has(const std::string& name) const { return manifest_["files"].contains(name); }

std::string Artifact::checked_bytes(const std::string& name) const {
  if (!has(name)) throw StoreError(StoreErrorKind::format, "manifest has no entry '" + name + "'");
  const Json& f = manifest_["files"][name];
  const fs::path path = dir_ / f.at("path").get<std::string>();
  if (!fs::exists(path)) throw StoreError(StoreErrorKind::io, "missing file " + path.string());
  std::string bytes = read_file(path);
  if (bytes.size() < f.at("bytes").get<std::size_t>())
    throw StoreError(StoreErrorKind::truncated, path.string() + " is shorter than recorded");
  if (sha256_hex(bytes) != f.at("sha256").get<std::string>())
    throw StoreError(StoreErrorKind::hash_mismatch, path.string());
  return bytes;
}

Mat Artifact::matrix(const std::string& name) const { return decode_block(checked_bytes(name)); }

std::string Artifact::text(const std::string& name) const { return checked_bytes(name); }

void Artifact::verify() const {
  for (const auto& [name, f] : manifest_["files"].items()) {
    const std::string bytes = checked_bytes(name);
    if (f.value("type", "") == "matrix") decode_block(bytes);
  }
}

namespace {

Mat ints_to_row(const std::vector<int>& v) {
  Mat m(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = v[i];
  return m;
}

std::vector<int> row_to_ints(const Mat& m) {
  std::vector<int> v(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) v[i] = static_cast<int>(m.data()[i]);
  return v;
}

Mat params_matrix(const std::vector<Mat3>& params) {
  Mat m(9, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) m.col(i) = to_voigt(params[i]);
  return m;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_or_nan(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

std::vector<Mat3> params_from(const Mat& m) {
  std::vector<Mat3> out;
  for (Eigen::Index i = 0; i < m.cols(); ++i) out.push_back(from_voigt(m.col(i)));
  return out;
}

}  // namespace

void put_snapshots(ArtifactWriter& w, const SnapshotSet& set) {
  w.put_matrix("U", set.U);
  w.put_matrix("params", params_matrix(set.params));
  Mat ids(2, set.size());
  ids.row(0) = ints_to_row(set.path_id);
  ids.row(1) = ints_to_row(set.step_id);
  w.put_matrix("snapshot_ids", ids);
}

SnapshotSet get_snapshots(const Artifact& a) {
  SnapshotSet set;
  set.U = a.matrix("U");
  set.params = params_from(a.matrix("params"));
  const Mat ids = a.matrix("snapshot_ids");
  set.path_id = row_to_ints(ids.row(0));
  set.step_id = row_to_ints(ids.row(1));
  if (static_cast<int>(set.params.size()) != set.size() || static_cast<int>(set.path_id.size()) != set.size())
    throw StoreError(StoreErrorKind::format, "snapshot blocks disagree in size");
  return set;
}

void put_campaign(ArtifactWriter& w, const CampaignResult& result) {
  const int n = static_cast<int>(result.states.size());
  Eigen::Index D = 0;
  for (const auto& s : result.states) D = std::max(D, s.u.size());
  Mat U = Mat::Zero(D, n), P(9, n), A(81, n), info(4, n);
  Json failures = Json::object();
  for (int i = 0; i < n; ++i) {
    const StateRecord& s = result.states[i];
    if (s.u.size()) U.col(i) = s.u;
    P.col(i) = to_voigt(s.Pbar);
    A.col(i) = Eigen::Map<const Vec>(s.Abar.data(), 81);
    info.col(i) << s.path, s.step, s.converged ? 1.0 : 0.0, s.iterations;
    if (!s.failure.empty()) failures[std::to_string(i)] = s.failure;
  }
  w.put_matrix("states_u", U);
  w.put_matrix("states_Pbar", P);
  w.put_matrix("states_Abar", A);
  w.put_matrix("states_info", info);
  w.put_text("failures", "failures.json", failures.dump(2) + "\n");
  w.params()["states"] = n;
  w.params()["diverged"] = result.diverged();
  w.params()["full_order_ops"] = result.full_order_ops;
}

CampaignResult get_campaign(const Artifact& a) {
  const Mat U = a.matrix("states_u"), P = a.matrix("states_Pbar"), A = a.matrix("states_Abar"),
            info = a.matrix("states_info");
  const Json failures = Json::parse(a.text("failures"));
  CampaignResult r;
  for (Eigen::Index i = 0; i < info.cols(); ++i) {
    StateRecord s;
    s.path = static_cast<int>(info(0, i));
    s.step = static_cast<int>(info(1, i));
    s.converged = info(2, i) != 0.0;
    s.iterations = static_cast<int>(info(3, i));
    if (s.converged) s.u = U.col(i);
    s.Pbar = from_voigt(P.col(i));
    s.Abar = Eigen::Map<const Mat9>(A.col(i).data());
    s.failure = failures.value(std::to_string(i), "");
    r.states.push_back(std::move(s));
  }
  r.full_order_ops = a.params().value("full_order_ops", std::uint64_t{0});
  return r;
}

void put_residuals(ArtifactWriter& w, const ResidualSet& set) {
  w.put_matrix("G", set.matrix());
  Mat meta(4, set.size());
  for (int i = 0; i < set.size(); ++i) {
    const ResidualRecord& r = set.meta[i];
    meta.col(i) << r.path, r.step, r.iteration, r.converged ? 1.0 : 0.0;
  }
  w.put_matrix("G_meta", meta);
  w.params()["residual_snapshots"] = set.size();
}

ResidualSet get_residuals(const Artifact& a) {
  const Mat G = a.matrix("G"), meta = a.matrix("G_meta");
  if (G.cols() != meta.cols()) throw StoreError(StoreErrorKind::format, "residual blocks disagree in size");
  ResidualSet set;
  for (Eigen::Index i = 0; i < G.cols(); ++i)
    set.append(G.col(i), {static_cast<int>(meta(0, i)), static_cast<int>(meta(1, i)), static_cast<int>(meta(2, i)),
                          meta(3, i) != 0.0});
  return set;
}

void put_space(ArtifactWriter& w, const ApproximationSpace& space) {
  w.params()["method"] = to_string(space.method());
  w.params()["d"] = space.dim();
  w.params()["d_bar"] = space.intermediate_dim();
  if (const auto* pod = dynamic_cast<const PodSpace*>(&space)) {
    w.put_matrix("pod_psi", pod->basis().psi);
    w.put_matrix("pod_sigma", pod->basis().singular_values);
    w.params()["pod_rank"] = pod->basis().rank;
  } else if (const auto* lpod = dynamic_cast<const LpodSpace*>(&space)) {
    const LpodModel& m = lpod->model();
    w.put_matrix("lpod_phibar", m.phibar);
    w.put_matrix("lpod_centroids", m.centroids);
    for (int c = 0; c < m.clusters(); ++c) w.put_matrix("lpod_basis_" + std::to_string(c), m.local_bases[c]);
    w.put_matrix("lpod_assignment", ints_to_row(m.assignment));
    w.params()["lpod_seed"] = m.seed;
    w.params()["lpod_overlap"] = m.overlap;
  } else if (const auto* pm = dynamic_cast<const PmSpace*>(&space)) {
    const PmModel& m = pm->model();
    w.put_matrix("pm_Vbar", m.Vbar);
    w.put_matrix("pm_Vtilde", m.Vtilde);
    w.put_matrix("pm_Xi", m.Xi);
    w.put_matrix("pm_Y", m.Y);
    w.put_matrix("pm_objective", Eigen::Map<const Vec>(m.objective.data(), m.objective.size()));
    w.put_matrix("pm_flagged", ints_to_row(m.flagged));
  } else if (const auto* lle = dynamic_cast<const LleSpace*>(&space)) {
    const LleModel& m = lle->model();
    int k = 0;
    for (const auto& n : m.neighbors) k = std::max<int>(k, n.size());
    Mat nb = Mat::Constant(k, m.neighbors.size(), -1.0);
    for (std::size_t i = 0; i < m.neighbors.size(); ++i)
      for (std::size_t j = 0; j < m.neighbors[i].size(); ++j) nb(j, i) = m.neighbors[i][j];
    w.put_matrix("lle_neighbors", nb);
    w.put_matrix("lle_W", m.W);
    w.put_matrix("lle_Y", m.Y);
    w.put_matrix("lle_phibar", m.phibar);
    w.put_matrix("lle_Ybar", m.Ybar);
    w.put_matrix("lle_params", params_matrix(m.params));
    w.params()["lle_N"] = lle->neighbors();
  } else {
    throw ConfigError("unknown approximation space");
  }
}

std::unique_ptr<ApproximationSpace> get_space(const Artifact& a) {
  const Method method = parse_method(a.params().at("method").get<std::string>());
  switch (method) {
    case Method::pod: {
      PodBasis b;
      b.psi = a.matrix("pod_psi");
      b.singular_values = a.matrix("pod_sigma");
      b.rank = a.params().at("pod_rank").get<int>();
      return std::make_unique<PodSpace>(std::move(b));
    }
    case Method::lpod: {
      LpodModel m;
      m.phibar = a.matrix("lpod_phibar");
      m.centroids = a.matrix("lpod_centroids");
      for (int c = 0; c < m.centroids.cols(); ++c) m.local_bases.push_back(a.matrix("lpod_basis_" + std::to_string(c)));
      m.assignment = row_to_ints(a.matrix("lpod_assignment"));
      m.seed = a.params().at("lpod_seed").get<std::uint64_t>();
      m.overlap = a.params().at("lpod_overlap").get<int>();
      return std::make_unique<LpodSpace>(std::move(m));
    }
    case Method::pm: {
      PmModel m;
      m.Vbar = a.matrix("pm_Vbar");
      m.Vtilde = a.matrix("pm_Vtilde");
      m.Xi = a.matrix("pm_Xi");
      m.Y = a.matrix("pm_Y");
      const Mat obj = a.matrix("pm_objective");
      m.objective.assign(obj.data(), obj.data() + obj.size());
      m.flagged = row_to_ints(a.matrix("pm_flagged"));
      return std::make_unique<PmSpace>(std::move(m));
    }
    case Method::lle: {
      LleModel m;
      const Mat nb = a.matrix("lle_neighbors");
      m.neighbors.resize(nb.cols());
      for (Eigen::Index i = 0; i < nb.cols(); ++i)
        for (Eigen::Index j = 0; j < nb.rows(); ++j)
          if (nb(j, i) >= 0) m.neighbors[i].push_back(static_cast<int>(nb(j, i)));
      m.W = a.matrix("lle_W");
      m.Y = a.matrix("lle_Y");
      m.phibar = a.matrix("lle_phibar");
      m.Ybar = a.matrix("lle_Ybar");
      m.params = params_from(a.matrix("lle_params"));
      return std::make_unique<LleSpace>(std::move(m), a.params().at("lle_N").get<int>());
    }
  }
  throw StoreError(StoreErrorKind::format, "unknown method");
}

void put_hyper(ArtifactWriter& w, const HyperModel& model) {
  w.params()["hyper_method"] = to_string(model.method);
  w.params()["m"] = model.domain.num_magic();
  w.params()["reduced_elements"] = model.domain.elements.size();
  w.params()["reduced_dofs"] = model.domain.dofs.size();
  w.params()["ridge"] = finite_or_null(model.ridge);
  w.params()["condition"] = finite_or_null(model.condition);
  w.params()["xi_residual"] = finite_or_null(model.xi.residual);
  w.params()["warnings"] = model.warnings;
  w.put_matrix("magic", ints_to_row(model.domain.magic));
  w.put_matrix("left", model.left);
  w.put_matrix("xi_elements", ints_to_row(model.xi.elements));
  w.put_matrix("xi", model.xi.xi);
}

HyperModel get_hyper(const Artifact& a, const RveProblem& problem, const ApproximationSpace& space) {
  HyperModel model;
  model.method = parse_hyper_method(a.params().at("hyper_method").get<std::string>());
  model.domain = build_reduced_domain(problem, row_to_ints(a.matrix("magic")));
  for (int dof : model.domain.dofs)
    if (dof >= space.full_dim()) throw StoreError(StoreErrorKind::format, "hyper model does not match the space");
  model.phibar_m = space.phibar()(model.domain.dofs, Eigen::all);
  model.left = a.matrix("left");
  if (model.method != HyperMethod::lspg &&
      (model.left.rows() != space.intermediate_dim() || model.left.cols() != model.domain.num_magic()))
    throw StoreError(StoreErrorKind::format, "hyper model does not match the space");
  model.xi.elements = row_to_ints(a.matrix("xi_elements"));
  model.xi.xi = a.matrix("xi");
  model.xi.residual = number_or_nan(a.params().at("xi_residual"));
  model.ridge = number_or_nan(a.params().at("ridge"));
  model.condition = number_or_nan(a.params().at("condition"));
  model.warnings = a.params().at("warnings").get<std::vector<std::string>>();
  return model;
}

}  // namespace hrom
