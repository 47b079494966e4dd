#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eadl/encoder/model.hpp"
#include "eadl/error.hpp"

namespace eadl {

// File layout: "EADL" | u32 version | u32 metadata length | JSON metadata | f32 payload,
// integers and floats little-endian, no padding. The metadata carries the
// config, the ordered manifest of {name, shape}, and optional vocabulary/tag lists.
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class FormatCode {
  bad_magic = 10,
  bad_version = 11,
  bad_metadata = 12,
  manifest_mismatch = 13,
  truncated = 14,
  trailing_bytes = 15,
  io = 16,
};

const char* to_string(FormatCode code) noexcept;

class FormatError : public Error {
 public:
  FormatError(FormatCode code, const std::string& what)
      : Error(ErrorKind::format, std::string(to_string(code)) + ": " + what), code_(code) {}
  FormatCode code() const noexcept { return code_; }

 private:
  FormatCode code_;
};

struct Checkpoint {
  ModelConfig config;
  ModelWeights weights;
  std::vector<std::string> vocab;       // token strings by id, may be empty
  std::vector<std::string> tag_labels;  // classification labels by index, may be empty
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Nothing is returned unless the whole file validates.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint clone_checkpoint(const Checkpoint& ckpt);
bool bitwise_equal(const Checkpoint& a, const Checkpoint& b);

}  // namespace eadl
