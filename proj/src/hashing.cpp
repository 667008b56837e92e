#include "taskframe/hashing.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "taskframe/error.hpp"

namespace taskframe {

std::string Sha256Hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    ThrowNumerical("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string Sha256File(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowInvalid("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Sha256Hex(ss.str());
}

}  // namespace taskframe
