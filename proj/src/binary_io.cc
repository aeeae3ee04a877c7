// Copyright 2026 The codesearch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "codesearch/binary_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "codesearch/error.h"

namespace codesearch {
namespace {

template <typename T>
void PutLittleEndian(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

}  // namespace

void ByteWriter::U32(std::uint32_t v) { PutLittleEndian(buffer_, v); }
void ByteWriter::U64(std::uint64_t v) { PutLittleEndian(buffer_, v); }
void ByteWriter::F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::LengthPrefixed(std::string_view bytes) {
  U64(bytes.size());
  Bytes(bytes);
}

std::string_view ByteReader::Bytes(std::size_t n) {
  if (n > remaining()) {
    throw DataError(source_ + ": truncated file (wanted " + std::to_string(n) +
                    " bytes at offset " + std::to_string(pos_) + ")");
  }
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::U32() {
  const auto b = Bytes(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
  return v;
}

std::uint64_t ByteReader::U64() {
  const auto b = Bytes(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

std::string_view ByteReader::LengthPrefixed() { return Bytes(U64()); }

void ByteReader::ExpectMagic(std::string_view magic) {
  if (remaining() < magic.size() || Bytes(magic.size()) != magic) {
    throw DataError(source_ + ": bad magic, expected \"" + std::string(magic) +
                    "\"");
  }
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace codesearch
