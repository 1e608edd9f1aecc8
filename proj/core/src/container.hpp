#pragma once

// Model file container shared by the bi-LSTM and HMM taggers:
//
//   "SEQTAGMF"                 8-byte magic
//   u32 version                little-endian, currently 1
//   u64 header_length          little-endian
//   header                     UTF-8 JSON; "blocks" lists {name, rows, cols}
//   blocks                     rows*cols little-endian float64 each, in order
//   u32 crc32                  zlib CRC-32 of every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqtag/tensor.hpp"

namespace seqtag::container {

inline constexpr char kMagic[8] = {'S', 'E', 'Q', 'T', 'A', 'G', 'M', 'F'};
inline constexpr std::uint32_t kVersion = 1;

struct Block {
  std::string name;
  Tensor value;
};

struct Contents {
  nlohmann::json header;
  std::vector<Block> blocks;
};

std::vector<char> encode(const Contents& contents);
// Throws FormatError on bad magic, version mismatch, truncation or checksum failure.
Contents decode(std::span<const char> bytes);

void write_file(const std::filesystem::path& path, std::span<const char> bytes);
std::vector<char> read_file(const std::filesystem::path& path);

}  // namespace seqtag::container
