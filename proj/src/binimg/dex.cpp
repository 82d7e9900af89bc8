#include "malimg/binimg/dex.hpp"

namespace malimg::binimg {

namespace {

constexpr uint64_t kHeaderSize = 0x70;

// Header field offsets (dex format, all u32 little-endian).
constexpr size_t kStringIdsSize = 0x38;
constexpr size_t kStringIdsOff = 0x3C;
constexpr size_t kMethodIdsSize = 0x58;
constexpr size_t kMethodIdsOff = 0x5C;
constexpr size_t kClassDefsSize = 0x60;
constexpr size_t kClassDefsOff = 0x64;
constexpr size_t kDataSize = 0x68;
constexpr size_t kDataOff = 0x6C;

constexpr uint64_t kClassDefRecord = 0x20;
constexpr uint64_t kMethodIdRecord = 8;

uint32_t read_u32(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | static_cast<uint32_t>(b[off + 1]) << 8 |
         static_cast<uint32_t>(b[off + 2]) << 16 | static_cast<uint32_t>(b[off + 3]) << 24;
}

// Table range [off, off + size*record), empty when size or off is zero.
ByteRange table_range(std::span<const uint8_t> b, size_t size_field, size_t off_field, uint64_t record,
                      uint64_t file_len, const char* what) {
  const uint64_t size = read_u32(b, size_field);
  const uint64_t off = read_u32(b, off_field);
  if (size == 0 || off == 0) return ByteRange{0, 0};
  const uint64_t end = off + size * record;
  require(off < file_len && end <= file_len, Errc::InconsistentOffsets,
          std::string(what) + " table [" + std::to_string(off) + "," + std::to_string(end) +
              ") extends past file end " + std::to_string(file_len));
  return ByteRange{off, end};
}

}  // namespace

const char* region_name(DexRegion r) {
  switch (r) {
    case DexRegion::Header: return "header";
    case DexRegion::Identifiers: return "identifiers";
    case DexRegion::ClassDefs: return "class_defs";
    case DexRegion::Data: return "data";
  }
  return "?";
}

DexRegion DexSectionMap::region_at(uint64_t offset) const {
  if (header.contains(offset)) return DexRegion::Header;
  if (identifiers.contains(offset)) return DexRegion::Identifiers;
  if (class_defs.contains(offset)) return DexRegion::ClassDefs;
  return DexRegion::Data;
}

uint64_t DexSectionMap::region_length(DexRegion r) const {
  uint64_t n = 0;
  for (uint64_t off = 0; off < file_len; ++off) {
    if (region_at(off) == r) ++n;
  }
  return n;
}

DexSectionMap parse_dex(std::span<const uint8_t> bytes) {
  require(bytes.size() >= kHeaderSize, Errc::TruncatedHeader,
          "need at least 0x70 bytes, got " + std::to_string(bytes.size()));
  require(bytes[0] == 'd' && bytes[1] == 'e' && bytes[2] == 'x' && bytes[3] == '\n',
          Errc::MalformedMagic, "first four bytes are not \"dex\\n\"");

  DexSectionMap map;
  map.file_len = bytes.size();
  map.header = ByteRange{0, kHeaderSize};

  const ByteRange string_ids =
      table_range(bytes, kStringIdsSize, kStringIdsOff, 4, map.file_len, "string_ids");
  const ByteRange method_ids =
      table_range(bytes, kMethodIdsSize, kMethodIdsOff, kMethodIdRecord, map.file_len, "method_ids");

  // Identifier span: from the start of string_ids through the end of
  // method_ids (string/type/proto/field/method tables are laid out
  // contiguously in that order by dex tooling).
  if (string_ids.length() > 0 && method_ids.length() > 0) {
    map.identifiers = ByteRange{string_ids.begin, std::max(string_ids.end, method_ids.end)};
  } else if (string_ids.length() > 0) {
    map.identifiers = string_ids;
  } else {
    map.identifiers = method_ids;
  }

  map.class_defs =
      table_range(bytes, kClassDefsSize, kClassDefsOff, kClassDefRecord, map.file_len, "class_defs");

  const ByteRange data = table_range(bytes, kDataSize, kDataOff, 1, map.file_len, "data");
  // Data extends to end of file; trailing bytes past the declared data
  // section (e.g. a map list) are still data-like.
  map.data = data.length() > 0 ? ByteRange{data.begin, map.file_len} : ByteRange{kHeaderSize, map.file_len};

  return map;
}

}  // namespace malimg::binimg
