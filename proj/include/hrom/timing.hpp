#pragma once

#include <chrono>
#include <map>
#include <string>

namespace hrom {

// Runtime categories mirrored in bench reports.
namespace category {
inline constexpr const char* kAssembly = "assembly";
inline constexpr const char* kLinearSolve = "linear_solve";
inline constexpr const char* kChart = "chart";
inline constexpr const char* kProjection = "projection";
inline constexpr const char* kHomogenization = "homogenization";
inline constexpr const char* kOther = "other";
}  // namespace category

/// Wall-clock seconds accumulated per category.
class Timings {
 public:
  void add(const std::string& key, double seconds) { seconds_[key] += seconds; }
  void merge(const Timings& other) {
    for (const auto& [k, v] : other.seconds_) seconds_[k] += v;
  }
  double get(const std::string& key) const {
    auto it = seconds_.find(key);
    return it == seconds_.end() ? 0.0 : it->second;
  }
  double total() const {
    double t = 0.0;
    for (const auto& [k, v] : seconds_) t += v;
    return t;
  }
  const std::map<std::string, double>& entries() const { return seconds_; }

 private:
  std::map<std::string, double> seconds_;
};

class ScopedTimer {
 public:
  ScopedTimer(Timings& sink, const char* key) : sink_(&sink), key_(key), start_(Clock::now()) {}
  ~ScopedTimer() { sink_->add(key_, elapsed()); }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  using Clock = std::chrono::steady_clock;
  Timings* sink_;
  const char* key_;
  Clock::time_point start_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  void reset() { start_ = Clock::now(); }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
};

}  // namespace hrom
