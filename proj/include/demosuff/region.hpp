#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <random>
#include <string>

#include "demosuff/pose.hpp"

namespace demosuff {

// Seeded generator passed by value or reference; never global. The engine is
// std::mt19937_64, whose output sequence is fixed by the standard, and the state
// round-trips through text for checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0) { return std::normal_distribution<double>(mean, stddev)(engine_); }

  std::string state() const;
  static Rng from_state(const std::string& s);

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

enum class OrientationSet { fixed, full };

// Axis-aligned position box times an orientation set. A position dimension with
// min == max is held fixed and does not contribute to the volume.
struct Region {
  Eigen::Vector3d pos_min{Eigen::Vector3d::Zero()};
  Eigen::Vector3d pos_max{Eigen::Vector3d::Zero()};
  OrientationSet orientation = OrientationSet::fixed;
  Eigen::Quaterniond fixed_q{Eigen::Quaterniond::Identity()};

  Region() = default;
  Region(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, OrientationSet o = OrientationSet::fixed,
         const Eigen::Quaterniond& q = Eigen::Quaterniond::Identity());

  /// Throws std::invalid_argument if min > max anywhere or no dimension has extent.
  void validate() const;
  bool contains(const Eigen::Vector3d& p, double slack = 0.0) const;
  Eigen::Vector3d clamp(const Eigen::Vector3d& p) const;
  Eigen::Vector3d center() const { return 0.5 * (pos_min + pos_max); }
  /// Product Lebesgue measure over the non-degenerate position dimensions
  /// (times the normalised Haar measure of the orientation set, which is 1).
  double volume() const;
  Eigen::Vector3d extent() const { return pos_max - pos_min; }
};

Pose sample_region(const Region& r, Rng& rng);

/// Uniform unit quaternion (Shoemake's subgroup algorithm).
Eigen::Quaterniond uniform_quaternion(Rng& rng);

void to_json(nlohmann::json& j, const Region& r);
void from_json(const nlohmann::json& j, Region& r);

}  // namespace demosuff
