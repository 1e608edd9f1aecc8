#include "container.hpp"

#include <bit>
#include <cstring>
#include <iterator>
#include <fstream>

#include <zlib.h>

#include "seqtag/error.hpp"

namespace seqtag::container {

namespace {

template <typename T>
void put_le(std::vector<char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::span<const char> bytes, std::size_t& offset) {
  if (offset > bytes.size() || bytes.size() - offset < sizeof(T)) {
    throw FormatError("model file is truncated");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  offset += sizeof(T);
  return value;
}

std::uint32_t crc(std::span<const char> bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace

std::vector<char> encode(const Contents& contents) {
  nlohmann::json header = contents.header;
  header["blocks"] = nlohmann::json::array();
  for (const auto& b : contents.blocks) {
    header["blocks"].push_back({{"name", b.name}, {"rows", b.value.rows()}, {"cols", b.value.cols()}});
  }
  const std::string text = header.dump();

  std::vector<char> out(kMagic, kMagic + sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& b : contents.blocks) {
    for (double v : b.value.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  put_le<std::uint32_t>(out, crc(out));
  return out;
}

Contents decode(std::span<const char> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a seqtag model file (bad magic)");
  }
  std::size_t offset = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, offset);
  if (version != kVersion) {
    throw FormatError("unsupported model version " + std::to_string(version) + " (expected " +
                      std::to_string(kVersion) + ")");
  }
  if (bytes.size() < offset + sizeof(std::uint64_t) + sizeof(std::uint32_t)) {
    throw FormatError("model file is truncated");
  }
  std::size_t tail = bytes.size() - sizeof(std::uint32_t);
  const auto stored = get_le<std::uint32_t>(bytes, tail);
  if (stored != crc(bytes.first(bytes.size() - sizeof(std::uint32_t)))) {
    throw FormatError("model file checksum mismatch (corrupted or truncated)");
  }
  const auto body = bytes.first(bytes.size() - sizeof(std::uint32_t));

  const auto header_len = get_le<std::uint64_t>(body, offset);
  if (header_len > body.size() - offset) throw FormatError("model file is truncated");
  Contents contents;
  try {
    contents.header = nlohmann::json::parse(body.begin() + static_cast<std::ptrdiff_t>(offset),
                                            body.begin() + static_cast<std::ptrdiff_t>(offset + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") + e.what());
  }
  offset += header_len;
  try {
    for (const auto& b : contents.header.at("blocks")) {
      const auto rows = b.at("rows").get<std::size_t>();
      const auto cols = b.at("cols").get<std::size_t>();
      if (rows != 0 && cols > (body.size() - offset) / sizeof(double) / rows) {
        throw FormatError("model file is truncated");
      }
      std::vector<double> values(rows * cols);
      for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(body, offset));
      contents.blocks.push_back({b.at("name").get<std::string>(), Tensor({rows, cols}, std::move(values))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  }
  if (offset != body.size()) throw FormatError("trailing bytes after model blocks");
  return contents;
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed", path.string());
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file", path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace seqtag::container
