#pragma once

#include <cstdint>
#include <string>

namespace nqdyn {

// SHA-256 (FIPS 180-4), used to reference output files from the manifest.
class Sha256 {
 public:
  Sha256();
  void update(const void* data, std::size_t len);
  std::string hex_digest();  // finalizes; further updates are invalid

 private:
  void process_block(const std::uint8_t* p);
  std::uint32_t h_[8];
  std::uint8_t buf_[64];
  std::size_t buf_len_ = 0;
  std::uint64_t total_ = 0;
  bool done_ = false;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);  // throws ValidationError if unreadable

}  // namespace nqdyn
