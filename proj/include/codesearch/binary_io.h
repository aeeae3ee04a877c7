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

#ifndef CODESEARCH_BINARY_IO_H_
#define CODESEARCH_BINARY_IO_H_

// Little-endian encoding helpers shared by the embedding, checkpoint and
// index file formats.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace codesearch {

class ByteWriter {
 public:
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void Bytes(std::string_view bytes) { buffer_.append(bytes); }
  // u64 length followed by the bytes.
  void LengthPrefixed(std::string_view bytes);

  const std::string& data() const { return buffer_; }
  std::string Take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Reads from a byte buffer; every read past the end throws DataError naming
// `source`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source)
      : data_(data), source_(std::move(source)) {}

  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  std::string_view Bytes(std::size_t n);
  std::string_view LengthPrefixed();
  void ExpectMagic(std::string_view magic);

  bool AtEnd() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& source() const { return source_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace codesearch

#endif  // CODESEARCH_BINARY_IO_H_
