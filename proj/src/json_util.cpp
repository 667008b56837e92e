#include "taskframe/json_util.hpp"

#include <fstream>
#include <sstream>

namespace taskframe {

StrictObject::StrictObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) ThrowInvalid(path_ + ": expected an object");
}

std::string StrictObject::Where(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const Json& StrictObject::Raw(const std::string& key) {
  if (!j_.contains(key)) ThrowInvalid("missing field '" + Where(key) + "'");
  seen_.insert(key);
  return j_.at(key);
}

StrictObject StrictObject::Object(const std::string& key) {
  return StrictObject(Raw(key), Where(key));
}

double StrictObject::Number(const std::string& key) {
  return NumberFromJson(Raw(key), Where(key));
}

double StrictObject::Number(const std::string& key, double fallback) {
  return Has(key) ? Number(key) : fallback;
}

double StrictObject::Positive(const std::string& key) {
  const double v = Number(key);
  if (!(v > 0)) ThrowInvalid("field '" + Where(key) + "' must be > 0");
  return v;
}

double StrictObject::Positive(const std::string& key, double fallback) {
  return Has(key) ? Positive(key) : fallback;
}

double StrictObject::NonNegative(const std::string& key, double fallback) {
  const double v = Number(key, fallback);
  if (!(v >= 0)) ThrowInvalid("field '" + Where(key) + "' must be >= 0");
  return v;
}

int64_t StrictObject::Integer(const std::string& key, int64_t fallback) {
  if (!Has(key)) return fallback;
  const Json& v = Raw(key);
  if (!v.is_number_integer()) ThrowInvalid("field '" + Where(key) + "' must be an integer");
  return v.get<int64_t>();
}

bool StrictObject::Bool(const std::string& key, bool fallback) {
  if (!Has(key)) return fallback;
  const Json& v = Raw(key);
  if (!v.is_boolean()) ThrowInvalid("field '" + Where(key) + "' must be true or false");
  return v.get<bool>();
}

std::string StrictObject::String(const std::string& key) {
  const Json& v = Raw(key);
  if (!v.is_string()) ThrowInvalid("field '" + Where(key) + "' must be a string");
  return v.get<std::string>();
}

std::string StrictObject::String(const std::string& key, const std::string& fallback) {
  return Has(key) ? String(key) : fallback;
}

Vec3 StrictObject::Vector3(const std::string& key) {
  return Vec3FromJson(Raw(key), Where(key));
}

Vec3 StrictObject::Vector3(const std::string& key, const Vec3& fallback) {
  return Has(key) ? Vector3(key) : fallback;
}

void StrictObject::Finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (!seen_.count(it.key())) ThrowInvalid("unknown key '" + Where(it.key()) + "'");
}

Json ParseJson(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    ThrowInvalid(source + ": " + e.what());
  }
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) ThrowInvalid("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseJson(ss.str(), path);
}

void WriteJsonFile(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) ThrowInvalid("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

Json NumberToJson(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double NumberFromJson(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  ThrowInvalid("field '" + where + "' must be a number");
}

Json ToJson(const Vec3& v) { return Json::array({v(0), v(1), v(2)}); }

Json ToJson(const Mat3& m) {
  Json a = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

Mat3 Mat3FromJson(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 9) ThrowInvalid("field '" + where + "' must hold 9 numbers");
  Mat3 m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = NumberFromJson(j[k], where);
  return m;
}

Vec3 Vec3FromJson(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) ThrowInvalid("field '" + where + "' must hold 3 numbers");
  return {NumberFromJson(j[0], where), NumberFromJson(j[1], where), NumberFromJson(j[2], where)};
}

Json ToJson(const Pose& p) {
  return {{"position_m", ToJson(p.position)},
          {"rotation_vector_rad", ToJson(RotLog(p.rotation))}};
}

Pose PoseFromJson(const Json& j, const std::string& where) {
  StrictObject o(j, where);
  Pose p;
  p.position = o.Vector3("position_m", Vec3::Zero());
  p.rotation = RotExp(o.Vector3("rotation_vector_rad", Vec3::Zero()));
  o.Finish();
  return p;
}

}  // namespace taskframe
