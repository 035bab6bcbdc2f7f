#include "solidslam/sim.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/SVD>

namespace solidslam {

namespace fs = std::filesystem;

namespace {

constexpr double kHitEpsilon = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::optional<double> intersect_box(const Box& box, const Point3& o, const Eigen::Vector3d& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double t1 = (box.min[a] - o[a]) / d[a];
    double t2 = (box.max[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || t_far <= kHitEpsilon) return std::nullopt;
  return t_near > kHitEpsilon ? t_near : t_far;
}

std::optional<double> intersect_rect(const Rect& rect, const Point3& o,
                                     const Eigen::Vector3d& d) {
  const double denom = rect.normal.dot(d);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = rect.normal.dot(rect.center - o) / denom;
  if (t <= kHitEpsilon) return std::nullopt;
  const Eigen::Vector3d local = o + t * d - rect.center;
  const Eigen::Vector3d v_axis = rect.normal.cross(rect.u_axis);
  if (std::abs(local.dot(rect.u_axis)) > rect.half_u) return std::nullopt;
  if (std::abs(local.dot(v_axis)) > rect.half_v) return std::nullopt;
  return t;
}

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

Eigen::Matrix3d ypr(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace

void Scene::validate() const {
  std::set<std::string> ids;
  for (const auto& b : boxes) {
    if (!ids.insert(b.id).second) throw ValidationError(b.id, "duplicate primitive id");
    if (!((b.max - b.min).array() > 0.0).all()) {
      throw ValidationError(b.id, "box extent must be positive");
    }
  }
  for (const auto& p : planes) {
    if (!ids.insert(p.id).second) throw ValidationError(p.id, "duplicate primitive id");
    if (!(p.half_u > 0.0 && p.half_v > 0.0)) {
      throw ValidationError(p.id, "plane extent must be positive");
    }
    if (std::abs(p.normal.norm() - 1.0) > 1e-9 || std::abs(p.u_axis.norm() - 1.0) > 1e-9 ||
        std::abs(p.normal.dot(p.u_axis)) > 1e-9) {
      throw ValidationError(p.id, "plane axes must be orthonormal");
    }
  }
}

const Box* Scene::find_box(const std::string& id) const {
  const auto it = std::find_if(boxes.begin(), boxes.end(), [&](const Box& b) { return b.id == id; });
  return it == boxes.end() ? nullptr : &*it;
}

Scene Scene::default_room() {
  // Box faces sit on 5 cm leaf centers when the map frame is the start pose
  // of default_loop_waypoints().
  Scene s;
  s.boxes.push_back({"room", {-2.0, -2.0, 0.0}, {2.0, 2.0, 2.5}});
  s.boxes.push_back({"machine_a", {0.575, -1.775, 0.0}, {1.725, 0.075, 1.2}});
  s.boxes.push_back({"machine_b", {-0.225, 0.575, 0.0}, {1.725, 1.735, 1.2}});
  return s;
}

Scene parse_scene(const std::string& text) {
  Scene scene;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind.starts_with("#")) continue;
    std::string id;
    if (!(ls >> id)) throw ParseError("missing primitive id", line_no);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      double x;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(x)) {
        throw ParseError("bad number '" + tok + "'", line_no);
      }
      v.push_back(x);
    }
    if (kind == "box") {
      if (v.size() != 6) throw ParseError("box needs 6 numbers", line_no);
      scene.boxes.push_back({id, {v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    } else if (kind == "plane") {
      if (v.size() != 11) throw ParseError("plane needs 11 numbers", line_no);
      scene.planes.push_back({id,
                              {v[0], v[1], v[2]},
                              Eigen::Vector3d(v[3], v[4], v[5]).normalized(),
                              Eigen::Vector3d(v[6], v[7], v[8]).normalized(),
                              v[9],
                              v[10]});
    } else {
      throw ParseError("unknown primitive '" + kind + "'", line_no);
    }
  }
  scene.validate();
  return scene;
}

Scene read_scene(const fs::path& path) { return parse_scene(read_text(path)); }

std::string format_scene(const Scene& scene) {
  std::string out;
  const auto vec = [](const Eigen::Vector3d& v) {
    return shortest(v.x()) + " " + shortest(v.y()) + " " + shortest(v.z());
  };
  for (const auto& b : scene.boxes) out += "box " + b.id + " " + vec(b.min) + " " + vec(b.max) + "\n";
  for (const auto& p : scene.planes) {
    out += "plane " + p.id + " " + vec(p.center) + " " + vec(p.normal) + " " + vec(p.u_axis) +
           " " + shortest(p.half_u) + " " + shortest(p.half_v) + "\n";
  }
  return out;
}

void ScanSpec::validate() const {
  sensor.validate();
  if (rays_vertical < 2) throw ValidationError("rays_vertical", "must be >= 2");
  if (rays_horizontal < 2) throw ValidationError("rays_horizontal", "must be >= 2");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma", "must be >= 0");
}

std::optional<double> intersect(const Scene& scene, const Point3& origin,
                                const Eigen::Vector3d& dir) {
  std::optional<double> best;
  const auto consider = [&best](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  for (const auto& b : scene.boxes) consider(intersect_box(b, origin, dir));
  for (const auto& p : scene.planes) consider(intersect_rect(p, origin, dir));
  return best;
}

PointCloud raycast_scan(const Scene& scene, const Pose& pose, const ScanSpec& spec,
                        std::uint64_t stream) {
  PointCloud out;
  if (scene.empty()) return out;

  const SensorSpec& s = spec.sensor;
  std::vector<double> tan_alpha(spec.rays_vertical);
  std::vector<double> tan_theta(spec.rays_horizontal);
  for (int m = 0; m < spec.rays_vertical; ++m) {
    tan_alpha[m] = std::tan(s.alpha_min + (m + 0.5) * (s.alpha_max - s.alpha_min) /
                                              spec.rays_vertical);
  }
  for (int n = 0; n < spec.rays_horizontal; ++n) {
    tan_theta[n] = std::tan(s.theta_min + (n + 0.5) * (s.theta_max - s.theta_min) /
                                              spec.rays_horizontal);
  }

  std::mt19937_64 rng(splitmix64(spec.seed) ^ splitmix64(~stream));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

  const Point3& origin = pose.translation();
  out.reserve(tan_alpha.size() * tan_theta.size());
  for (int m = 0; m < spec.rays_vertical; ++m) {
    for (int n = 0; n < spec.rays_horizontal; ++n) {
      const Eigen::Vector3d dir = Eigen::Vector3d(1.0, tan_alpha[m], tan_theta[n]).normalized();
      const auto t = intersect(scene, origin, pose.rotation() * dir);
      if (!t || *t < s.range_min || *t > s.range_max) continue;
      double range = *t;
      if (spec.noise_sigma > 0.0) range += noise(rng);
      out.push_back(dir * range);
    }
  }
  return out;
}

Pose interpolate(const Trajectory& waypoints, double t) {
  if (waypoints.empty()) throw ValidationError("waypoints", "empty trajectory");
  if (t <= waypoints.front().timestamp) return waypoints.front().pose;
  if (t >= waypoints.back().timestamp) return waypoints.back().pose;
  const auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                                   [](double v, const TimedPose& p) { return v < p.timestamp; });
  const TimedPose& b = *it;
  const TimedPose& a = *(it - 1);
  const double s = (t - a.timestamp) / (b.timestamp - a.timestamp);
  const Eigen::Vector3d trans = (1.0 - s) * a.pose.translation() + s * b.pose.translation();
  const Eigen::Quaterniond q = a.pose.quaternion().slerp(s, b.pose.quaternion());
  return Pose::from_quaternion(q, trans);
}

Trajectory resample(const Trajectory& waypoints, double rate) {
  if (waypoints.empty()) throw ValidationError("waypoints", "empty trajectory");
  if (!(rate > 0.0)) throw ValidationError("rate", "must be > 0");
  const double t0 = waypoints.front().timestamp;
  const double span = waypoints.back().timestamp - t0;
  const auto count = static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1;
  Trajectory out;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + static_cast<double>(i) / rate;
    out.push_back(t, interpolate(waypoints, t));
  }
  return out;
}

std::vector<SimFrame> simulate_sequence(const Scene& scene, const Trajectory& waypoints,
                                        double rate, const ScanSpec& spec) {
  spec.validate();
  const Trajectory gt = resample(waypoints, rate);
  std::vector<SimFrame> frames;
  frames.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    frames.push_back({gt[i].timestamp, gt[i].pose, raycast_scan(scene, gt[i].pose, spec, i)});
  }
  return frames;
}

Trajectory generate_sequence(const Scene& scene, const Trajectory& waypoints, double rate,
                             const ScanSpec& spec, const fs::path& out_dir,
                             std::size_t max_frames) {
  spec.validate();
  scene.validate();
  Trajectory gt = resample(waypoints, rate);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Trajectory written;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (max_frames > 0 && i >= max_frames) break;
    const PointCloud cloud = raycast_scan(scene, gt[i].pose, spec, i);
    write_pointcloud(out_dir / frame_filename(i), cloud, gt[i].timestamp);
    written.push_back(gt[i].timestamp, gt[i].pose);
  }
  write_trajectory(written, out_dir / kGroundTruthFile);
  return written;
}

Trajectory default_loop_waypoints() {
  constexpr int kSamples = 300;
  constexpr double kDuration = 10.0;
  constexpr double kRadius = 0.4;
  const Eigen::Vector3d start(-1.2, -0.4, 1.6);
  const Eigen::Vector3d center = start + Eigen::Vector3d(kRadius, 0.0, 0.0);

  Trajectory out;
  for (int i = 0; i < kSamples; ++i) {
    const double t = static_cast<double>(i) / 30.0;
    const double phi = 2.0 * std::numbers::pi * t / kDuration;
    const Eigen::Vector3d p =
        center + Eigen::Vector3d(-kRadius * std::cos(phi), -kRadius * std::sin(phi),
                                 0.15 * std::sin(phi));
    const double yaw = 0.6 * std::sin(phi);
    const double pitch = 0.15 * (1.0 - std::cos(phi));
    const double roll = 0.05 * std::sin(2.0 * phi);
    out.push_back(t, Pose(ypr(yaw, pitch, roll), p));
  }
  return out;
}

Trajectory rotation_test_waypoints(std::uint64_t seed, double peak_rate, double duration,
                                   double rate) {
  constexpr int kTerms = 3;
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_int_distribution<int> harmonic(2, 5);
  std::uniform_real_distribution<double> amplitude(0.5, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::array<int, kTerms> k{};
  std::array<double, kTerms> a{};
  std::array<Eigen::Vector3d, kTerms> axis;
  for (int i = 0; i < kTerms; ++i) {
    k[i] = harmonic(rng);
    a[i] = amplitude(rng);
    axis[i] = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)).normalized();
  }

  const Eigen::Vector3d position(-1.2, -0.4, 1.6);
  const auto orientation = [&](double t, double scale) {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (int i = 0; i < kTerms; ++i) {
      r += scale * a[i] * std::sin(std::numbers::pi * k[i] * t / duration) * axis[i];
    }
    return exp(Twist{r, Eigen::Vector3d::Zero()}).rotation();
  };
  const auto continuous_peak = [&](double scale) {
    constexpr double dt = 1e-3;
    double peak = 0.0;
    for (double t = 0.0; t + dt <= duration; t += dt) {
      const Eigen::Matrix3d rel = orientation(t, scale).transpose() * orientation(t + dt, scale);
      peak = std::max(peak, Pose::from_rotation(rel).angle() / dt);
    }
    return peak;
  };

  // Angular rate is close to, but not exactly, linear in the amplitude.
  double scale = 1.0;
  for (int it = 0; it < 8; ++it) scale *= peak_rate / continuous_peak(scale);

  Trajectory out;
  const auto count = static_cast<std::size_t>(std::floor(duration * rate + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / rate;
    out.push_back(t, Pose(orientation(t, scale), position));
  }
  return out;
}

AteResult ate(const Trajectory& estimated, const Trajectory& ground_truth) {
  std::vector<Eigen::Vector3d> est;
  std::vector<Eigen::Vector3d> gt;
  for (const auto& e : estimated) {
    const auto it =
        std::lower_bound(ground_truth.begin(), ground_truth.end(), e.timestamp,
                         [](const TimedPose& p, double v) { return p.timestamp < v; });
    const TimedPose* best = nullptr;
    if (it != ground_truth.end()) best = &*it;
    if (it != ground_truth.begin()) {
      const TimedPose* prev = &*(it - 1);
      if (!best || std::abs(prev->timestamp - e.timestamp) <= std::abs(best->timestamp - e.timestamp)) {
        best = prev;
      }
    }
    if (best && std::abs(best->timestamp - e.timestamp) <= kAssociationWindow + 1e-12) {
      est.push_back(e.pose.translation());
      gt.push_back(best->pose.translation());
    }
  }
  if (est.size() < 3) {
    throw InsufficientOverlap("only " + std::to_string(est.size()) +
                              " associated poses, need at least 3");
  }

  const auto n = static_cast<double>(est.size());
  Eigen::Vector3d mean_est = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_gt = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    mean_est += est[i];
    mean_gt += gt[i];
  }
  mean_est /= n;
  mean_gt /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    cov += (est[i] - mean_est) * (gt[i] - mean_gt).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) fix(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixV() * fix * svd.matrixU().transpose();
  const Eigen::Vector3d t = mean_gt - r * mean_est;

  AteResult res;
  res.pairs = est.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double e = (gt[i] - (r * est[i] + t)).norm();
    sum += e * e;
    res.max = std::max(res.max, e);
  }
  res.rmse = std::sqrt(sum / n);
  return res;
}

double ate_rmse(const Trajectory& estimated, const Trajectory& ground_truth) {
  return ate(estimated, ground_truth).rmse;
}

double peak_angular_rate(const Trajectory& traj) {
  double peak = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Pose rel = traj[i - 1].pose.inverse() * traj[i].pose;
    peak = std::max(peak, rel.angle() / (traj[i].timestamp - traj[i - 1].timestamp));
  }
  return peak;
}

}  // namespace solidslam
