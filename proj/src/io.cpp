#include "solidslam/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

namespace solidslam {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

}  // namespace

void Trajectory::push_back(double timestamp, const Pose& pose) {
  if (!std::isfinite(timestamp)) throw ValidationError("timestamp", "must be finite");
  if (!poses_.empty() && !(timestamp > poses_.back().timestamp)) {
    throw ValidationError("timestamp", "timestamps must be strictly increasing");
  }
  poses_.push_back({timestamp, pose});
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

ScanFrame parse_pointcloud(const std::string& text) {
  ScanFrame frame;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::optional<std::array<std::size_t, 3>> xyz;
  std::size_t field_count = 0;
  std::optional<std::size_t> points;
  bool data = false;

  while (!data && std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0].starts_with("#")) {
      if (tok.size() >= 3 && tok[0] == "#" && upper(tok[1]) == "TIMESTAMP") {
        double t;
        if (!parse_double(tok[2], t)) throw ParseError("bad timestamp comment", line_no);
        frame.timestamp = t;
      }
      continue;
    }
    const std::string key = upper(tok[0]);
    if (key == "FIELDS") {
      std::array<std::size_t, 3> idx{};
      std::array<bool, 3> seen{};
      field_count = tok.size() - 1;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        if (tok[i] == "x") idx[0] = i - 1, seen[0] = true;
        if (tok[i] == "y") idx[1] = i - 1, seen[1] = true;
        if (tok[i] == "z") idx[2] = i - 1, seen[2] = true;
      }
      if (!(seen[0] && seen[1] && seen[2])) throw ParseError("FIELDS lacks x y z", line_no);
      xyz = idx;
    } else if (key == "POINTS") {
      std::size_t n;
      if (tok.size() != 2 || !parse_size(tok[1], n)) throw ParseError("bad POINTS", line_no);
      points = n;
    } else if (key == "DATA") {
      if (tok.size() != 2 || upper(tok[1]) != "ASCII") {
        throw ParseError("only DATA ascii is supported", line_no);
      }
      data = true;
    } else if (key == "VERSION" || key == "SIZE" || key == "TYPE" || key == "COUNT" ||
               key == "WIDTH" || key == "HEIGHT" || key == "VIEWPOINT") {
      continue;
    } else {
      throw ParseError("unexpected header entry '" + std::string(tok[0]) + "'", line_no);
    }
  }
  if (!xyz) throw MissingHeader("point cloud header has no FIELDS line");
  if (!points) throw MissingHeader("point cloud header has no POINTS line");
  if (!data) throw MissingHeader("point cloud header has no DATA line");

  frame.cloud.reserve(*points);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (rows == *points) throw ParseError("more rows than POINTS", line_no);
    if (tok.size() != field_count) throw ParseError("wrong column count", line_no);
    Point3 p;
    for (int a = 0; a < 3; ++a) {
      if (!parse_double(tok[(*xyz)[a]], p[a])) throw ParseError("bad number", line_no);
    }
    ++rows;
    if (p.allFinite()) {
      frame.cloud.push_back(p);
    } else {
      ++frame.skipped_nonfinite;
    }
  }
  if (rows != *points) throw ParseError("fewer rows than POINTS", line_no);
  return frame;
}

ScanFrame read_pointcloud(const fs::path& path) { return parse_pointcloud(read_text(path)); }

std::string format_pointcloud(const PointCloud& cloud, std::optional<double> timestamp) {
  std::string out;
  out.reserve(64 * cloud.size() + 256);
  out += "# .PCD v0.7 - Point Cloud Data file format\n";
  if (timestamp) out += "# TIMESTAMP " + shortest(*timestamp) + "\n";
  const std::string n = std::to_string(cloud.size());
  out += "VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n";
  out += "WIDTH " + n + "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " + n + "\nDATA ascii\n";
  for (const auto& p : cloud) {
    out += shortest(p.x());
    out += ' ';
    out += shortest(p.y());
    out += ' ';
    out += shortest(p.z());
    out += '\n';
  }
  return out;
}

void write_pointcloud(const fs::path& path, const PointCloud& cloud,
                      std::optional<double> timestamp) {
  write_text(path, format_pointcloud(cloud, timestamp));
}

std::string format_pose_line(double timestamp, const Pose& pose) {
  const Eigen::Quaterniond q = pose.quaternion();
  const Eigen::Vector3d& t = pose.translation();
  // + 0.0 turns -0 into 0
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.9f %.9g %.9g %.9g %.9g %.9g %.9g %.9g", timestamp + 0.0,
                t.x() + 0.0, t.y() + 0.0, t.z() + 0.0, q.x() + 0.0, q.y() + 0.0, q.z() + 0.0,
                q.w() + 0.0);
  return buf;
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  std::string out;
  for (const auto& tp : traj) {
    out += format_pose_line(tp.timestamp, tp.pose);
    out += '\n';
  }
  write_text(path, out);
}

Trajectory parse_trajectory(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with("#")) continue;
    if (tok.size() != 8) throw ParseError("expected 8 columns", line_no);
    std::array<double, 8> v{};
    for (std::size_t i = 0; i < 8; ++i) {
      if (!parse_double(tok[i], v[i]) || !std::isfinite(v[i])) {
        throw ParseError("bad number", line_no);
      }
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (q.norm() < 1e-6) throw ParseError("zero quaternion", line_no);
    try {
      traj.push_back(v[0], Pose::from_quaternion(q, {v[1], v[2], v[3]}));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return traj;
}

Trajectory read_trajectory(const fs::path& path) { return parse_trajectory(read_text(path)); }

std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.pcd", index);
  return buf;
}

Playback::Playback(const fs::path& dir, double fallback_rate)
    : dir_(dir), fallback_rate_(fallback_rate) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw EmptyDataset("not a dataset directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pcd") {
      files_.push_back(entry.path());
    }
  }
  std::sort(files_.begin(), files_.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  if (files_.empty()) throw EmptyDataset("no .pcd frames in " + dir.string());
}

std::optional<ScanFrame> Playback::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  ScanFrame frame = read_pointcloud(files_[cursor_]);
  if (!frame.timestamp) frame.timestamp = static_cast<double>(cursor_) / fallback_rate_;
  ++cursor_;
  return frame;
}

std::optional<Trajectory> Playback::groundtruth() const {
  const fs::path gt = dir_ / kGroundTruthFile;
  if (!fs::exists(gt)) return std::nullopt;
  return read_trajectory(gt);
}

}  // namespace solidslam
