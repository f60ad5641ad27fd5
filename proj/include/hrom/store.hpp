#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hrom/bench.hpp"

namespace hrom {

using Json = nlohmann::json;

enum class StoreErrorKind { io, truncated, magic_mismatch, hash_mismatch, format, missing_dependency };

std::string to_string(StoreErrorKind kind);

class StoreError : public Error {
 public:
  StoreError(StoreErrorKind kind, const std::string& what) : Error(to_string(kind) + ": " + what), kind_(kind) {}
  StoreErrorKind kind() const { return kind_; }

 private:
  StoreErrorKind kind_;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kBlockMagic{"HRMB1\0", 6};

/// Block layout: magic (6) | dtype (1, 0 = f64) | row-major flag (1) | rows (u64 LE) | cols (u64 LE) | payload.
std::string encode_block(const Mat& M);
Mat decode_block(std::string_view bytes);
void write_block(const std::filesystem::path& path, const Mat& M);
Mat read_block(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Stage output directory: content files plus manifest.json listing each file's SHA-256.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::string kind);

  void put_matrix(const std::string& name, const Mat& M);
  void put_text(const std::string& name, const std::string& filename, const std::string& content);
  /// Hash of an upstream manifest this artifact was derived from.
  void add_input(const std::string& stage, const std::filesystem::path& dir);

  Json& params() { return params_; }
  Json& config() { return config_; }
  const std::filesystem::path& dir() const { return dir_; }

  /// Writes manifest.json; returns its SHA-256.
  std::string commit();

 private:
  std::filesystem::path dir_;
  std::string kind_;
  Json params_ = Json::object();
  Json config_ = Json::object();
  Json files_ = Json::object();
  Json inputs_ = Json::object();
};

class Artifact {
 public:
  /// Throws StoreError(missing_dependency) naming `stage` if the manifest is absent or of another kind.
  static Artifact open(const std::filesystem::path& dir, const std::string& kind, const std::string& stage);
  static Artifact open(const std::filesystem::path& dir);

  const Json& manifest() const { return manifest_; }
  const Json& params() const { return manifest_.at("params"); }
  const std::filesystem::path& dir() const { return dir_; }
  bool has(const std::string& name) const;

  /// Reads and hash-checks one entry.
  Mat matrix(const std::string& name) const;
  std::string text(const std::string& name) const;
  /// Re-hashes every listed file; throws StoreError(hash_mismatch / truncated / magic_mismatch).
  void verify() const;

 private:
  std::string checked_bytes(const std::string& name) const;

  std::filesystem::path dir_;
  Json manifest_;
};

std::string manifest_hash(const std::filesystem::path& dir);

void put_snapshots(ArtifactWriter& w, const SnapshotSet& set);
SnapshotSet get_snapshots(const Artifact& a);

/// Converged states of a campaign. Timings are not part of the artifact.
void put_campaign(ArtifactWriter& w, const CampaignResult& result);
CampaignResult get_campaign(const Artifact& a);

void put_residuals(ArtifactWriter& w, const ResidualSet& set);
ResidualSet get_residuals(const Artifact& a);

void put_space(ArtifactWriter& w, const ApproximationSpace& space);
std::unique_ptr<ApproximationSpace> get_space(const Artifact& a);

void put_hyper(ArtifactWriter& w, const HyperModel& model);
HyperModel get_hyper(const Artifact& a, const RveProblem& problem, const ApproximationSpace& space);

}  // namespace hrom
