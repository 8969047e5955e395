#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agdl {

// Base class for all codec errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates an operation's precondition.
struct InvalidParameter : Error {
  using Error::Error;
};

// Entropy-coded base-layer data cannot be decoded.
struct MalformedPayload : Error {
  using Error::Error;
};

// Container-level framing error; carries the byte offset of the problem.
struct MalformedBitstream : Error {
  MalformedBitstream(const std::string& what, std::size_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::size_t byte_offset = 0;
};

// A sampling matrix failed its full-row-rank check.
struct RankFailure : Error {
  using Error::Error;
};

// Decoder-side consistency assertion failed (should be impossible for
// bitstreams produced by this encoder).
struct IntegrityError : Error {
  using Error::Error;
};

}  // namespace agdl
