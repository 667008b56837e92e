#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "json.hpp"
#include "taskframe/error.hpp"
#include "taskframe/geometry.hpp"

namespace taskframe {

using Json = nlohmann::ordered_json;

// Reads a JSON object while recording the keys consumed; Finish() rejects
// any key that was not read. Errors name the offending path.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path);

  bool Has(const std::string& key) const { return j_.contains(key); }
  const Json& Raw(const std::string& key);
  StrictObject Object(const std::string& key);

  double Number(const std::string& key);
  double Number(const std::string& key, double fallback);
  double Positive(const std::string& key);
  double Positive(const std::string& key, double fallback);
  double NonNegative(const std::string& key, double fallback);
  int64_t Integer(const std::string& key, int64_t fallback);
  bool Bool(const std::string& key, bool fallback);
  std::string String(const std::string& key);
  std::string String(const std::string& key, const std::string& fallback);
  Vec3 Vector3(const std::string& key);
  Vec3 Vector3(const std::string& key, const Vec3& fallback);

  const std::string& path() const { return path_; }
  void Finish() const;

 private:
  std::string Where(const std::string& key) const;

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Parses JSON text; syntax errors become kInvalidInput.
Json ParseJson(const std::string& text, const std::string& source);
Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& j);

// Infinite values are written as the string "inf".
Json NumberToJson(double v);
double NumberFromJson(const Json& j, const std::string& where);
Json ToJson(const Vec3& v);
Json ToJson(const Mat3& m);  // 9 values, row major
Mat3 Mat3FromJson(const Json& j, const std::string& where);
Vec3 Vec3FromJson(const Json& j, const std::string& where);
// {"position_m": [...], "rotation_vector_rad": [...]}, both optional.
Json ToJson(const Pose& p);
Pose PoseFromJson(const Json& j, const std::string& where);

}  // namespace taskframe
