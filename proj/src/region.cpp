#include "demosuff/region.hpp"

#include <cmath>
#include <numbers>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace demosuff {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::from_state(const std::string& s) {
  Rng r;
  std::istringstream is(s);
  is >> r.engine_;
  if (is.fail()) throw std::invalid_argument("malformed generator state");
  return r;
}

Region::Region(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, OrientationSet o, const Eigen::Quaterniond& q)
    : pos_min(lo), pos_max(hi), orientation(o), fixed_q(canonical_quaternion(q)) {
  validate();
}

void Region::validate() const {
  bool any_extent = false;
  for (int i = 0; i < 3; ++i) {
    if (!(pos_min[i] <= pos_max[i])) throw std::invalid_argument("region bound min > max");
    any_extent = any_extent || pos_max[i] > pos_min[i];
  }
  if (!any_extent) throw std::invalid_argument("region has zero volume");
}

bool Region::contains(const Eigen::Vector3d& p, double slack) const {
  return ((p.array() >= pos_min.array() - slack) && (p.array() <= pos_max.array() + slack)).all();
}

Eigen::Vector3d Region::clamp(const Eigen::Vector3d& p) const { return p.cwiseMax(pos_min).cwiseMin(pos_max); }

double Region::volume() const {
  double v = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (pos_max[i] > pos_min[i]) v *= pos_max[i] - pos_min[i];
  }
  return v;
}

Eigen::Quaterniond uniform_quaternion(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return canonical_quaternion(Eigen::Quaterniond(b * std::cos(kTwoPi * u3), a * std::sin(kTwoPi * u2),
                                                 a * std::cos(kTwoPi * u2), b * std::sin(kTwoPi * u3)));
}

Pose sample_region(const Region& r, Rng& rng) {
  Eigen::Vector3d p;
  for (int i = 0; i < 3; ++i) p[i] = r.pos_max[i] > r.pos_min[i] ? rng.uniform(r.pos_min[i], r.pos_max[i]) : r.pos_min[i];
  const Eigen::Quaterniond q = r.orientation == OrientationSet::full ? uniform_quaternion(rng) : r.fixed_q;
  return {q, p};
}

void to_json(nlohmann::json& j, const Region& r) {
  j = nlohmann::json{{"pos_min", {r.pos_min.x(), r.pos_min.y(), r.pos_min.z()}},
                     {"pos_max", {r.pos_max.x(), r.pos_max.y(), r.pos_max.z()}},
                     {"orientation", r.orientation == OrientationSet::full ? "full" : "fixed"}};
  if (r.orientation == OrientationSet::fixed) j["fixed_q"] = {r.fixed_q.w(), r.fixed_q.x(), r.fixed_q.y(), r.fixed_q.z()};
}

void from_json(const nlohmann::json& j, Region& r) {
  auto vec3 = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    if (v.size() == 2) return Eigen::Vector3d(v[0], v[1], 0.0);
    if (v.size() != 3) throw std::invalid_argument("region bounds need 2 or 3 components");
    return Eigen::Vector3d(v[0], v[1], v[2]);
  };
  const std::string o = j.value("orientation", "fixed");
  if (o != "fixed" && o != "full") throw std::invalid_argument("region orientation must be \"fixed\" or \"full\"");
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (j.contains("fixed_q")) {
    const auto v = j.at("fixed_q").get<std::vector<double>>();
    if (v.size() != 4) throw std::invalid_argument("fixed_q needs 4 components");
    q = Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
  }
  r = Region(vec3(j.at("pos_min")), vec3(j.at("pos_max")), o == "full" ? OrientationSet::full : OrientationSet::fixed, q);
}

}  // namespace demosuff
