#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "malimg/common/error.hpp"

namespace malimg::binimg {

enum class DexRegion : uint8_t { Header = 0, Identifiers = 1, ClassDefs = 2, Data = 3 };

struct ByteRange {
  uint64_t begin = 0;  // inclusive
  uint64_t end = 0;    // exclusive

  uint64_t length() const { return end - begin; }
  bool contains(uint64_t off) const { return off >= begin && off < end; }
};

// Coarse section map of a DEX container, derived from the fixed header
// fields. The identifier region spans string_ids through the end of the
// method_ids table; class_defs covers the class_def table; everything not
// claimed by an earlier region counts as data.
struct DexSectionMap {
  ByteRange header;
  ByteRange identifiers;
  ByteRange class_defs;
  ByteRange data;
  uint64_t file_len = 0;

  // Total classification with precedence header > identifiers > class_defs;
  // unclaimed bytes fall into Data.
  DexRegion region_at(uint64_t offset) const;

  uint64_t region_length(DexRegion r) const;
};

// Parses the 0x70-byte DEX header. Throws:
//   TruncatedHeader     input shorter than 0x70 bytes
//   MalformedMagic      first four bytes are not "dex\n"
//   InconsistentOffsets a declared table extends past the end of the file
DexSectionMap parse_dex(std::span<const uint8_t> bytes);

const char* region_name(DexRegion r);

}  // namespace malimg::binimg
