#include "taskframe/trial_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "taskframe/error.hpp"

namespace taskframe {

namespace {

constexpr const char* kColumns = "t,px,py,pz,qw,qx,qy,qz,fx,fy,fz,mx,my,mz";

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void Fail(const std::string& source, size_t line, const std::string& msg) {
  ThrowInvalid(source + ":" + std::to_string(line) + ": " + msg);
}

bool ParseDouble(const std::string& s, double* v) {
  const std::string t = Trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  *v = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(*v);
}

}  // namespace

DemoTrial ReadTrialCsv(std::istream& in, const std::string& source) {
  DemoTrial trial;
  trial.name = std::filesystem::path(source).stem().string();
  bool have_pose_frame = false, have_wrench_frame = false, have_point = false;
  bool wrench_in_tool = false;
  Vec3 point = Vec3::Zero();
  bool header_done = false;

  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header_done) continue;
      const std::string body = Trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // free-text comment
      const std::string key = Trim(body.substr(0, eq));
      const std::string val = Trim(body.substr(eq + 1));
      if (key == "frame_pose") {
        if (val != "w->tl") Fail(source, line_no, "frame_pose must be 'w->tl'");
        have_pose_frame = true;
      } else if (key == "wrench_frame") {
        if (val == "w") wrench_in_tool = false;
        else if (val == "tl") wrench_in_tool = true;
        else Fail(source, line_no, "wrench_frame must be 'w' or 'tl'");
        have_wrench_frame = true;
      } else if (key == "wrench_point") {
        std::istringstream ss(val);
        std::string tok;
        int k = 0;
        while (ss >> tok) {
          double v;
          if (k >= 3 || !ParseDouble(tok, &v)) Fail(source, line_no, "wrench_point needs 3 numbers");
          point(k++) = v;
        }
        if (k != 3) Fail(source, line_no, "wrench_point needs 3 numbers");
        have_point = true;
      } else {
        Fail(source, line_no, "unknown header key '" + key + "'");
      }
      continue;
    }
    if (!header_done) {
      std::string cols;
      for (char c : line)
        if (c != ' ' && c != '\t') cols.push_back(c);
      if (cols != kColumns) Fail(source, line_no, std::string("expected column line '") + kColumns + "'");
      if (!have_pose_frame) Fail(source, line_no, "missing header frame_pose");
      if (!have_wrench_frame) Fail(source, line_no, "missing header wrench_frame");
      if (!have_point) Fail(source, line_no, "missing header wrench_point");
      header_done = true;
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double x;
      if (!ParseDouble(cell, &x)) Fail(source, line_no, "malformed number '" + Trim(cell) + "'");
      v.push_back(x);
    }
    if (v.size() != 14) Fail(source, line_no, "expected 14 columns, got " + std::to_string(v.size()));
    if (!trial.times.empty() && !(v[0] > trial.times.back()))
      Fail(source, line_no, "time not strictly increasing");
    const Eigen::Vector4d q(v[4], v[5], v[6], v[7]);
    if (std::abs(q.norm() - 1.0) > 1e-6)
      Fail(source, line_no, "quaternion norm deviates from 1 by more than 1e-6");
    const Pose pose(RotationFromQuaternion(q), Vec3(v[1], v[2], v[3]));
    Screw w = Screw::Wrench(Vec3(v[8], v[9], v[10]), Vec3(v[11], v[12], v[13]));
    w = ChangeReferencePoint(w, point, Vec3::Zero());
    if (wrench_in_tool) w = ScrewTransform(pose, w);
    trial.times.push_back(v[0]);
    trial.poses.push_back(pose);
    trial.wrenches.push_back(w);
  }
  if (!header_done) Fail(source, line_no, "missing column line");
  if (trial.times.size() < 3) Fail(source, line_no, "fewer than 3 samples");
  return trial;
}

DemoTrial ReadTrialCsvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) ThrowInvalid("cannot open trial file '" + path + "'");
  return ReadTrialCsv(in, path);
}

void WriteTrialCsv(std::ostream& out, const DemoTrial& trial, const std::string& comment) {
  if (comment.find_first_of("=\n") != std::string::npos)
    ThrowInvalid("trial comment must be a single line without '='");
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "# frame_pose=w->tl\n# wrench_frame=w\n# wrench_point=0 0 0\n" << kColumns << "\n";
  char buf[64];
  auto put = [&](double x, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf << (last ? '\n' : ',');
  };
  for (size_t i = 0; i < trial.times.size(); ++i) {
    const Pose& p = trial.poses[i];
    const Eigen::Vector4d q = QuaternionFromRotation(p.rotation);
    put(trial.times[i]);
    for (int k = 0; k < 3; ++k) put(p.position(k));
    for (int k = 0; k < 4; ++k) put(q(k));
    const Vec6 w = trial.wrenches[i].Vector();
    for (int k = 0; k < 6; ++k) put(w(k), k == 5);
  }
}

void WriteTrialCsvFile(const std::string& path, const DemoTrial& trial,
                       const std::string& comment) {
  std::ofstream out(path);
  if (!out) ThrowInvalid("cannot write '" + path + "'");
  WriteTrialCsv(out, trial, comment);
}

}  // namespace taskframe
