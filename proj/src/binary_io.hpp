// Copyright 2026 The losadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian POD streaming with offset-aware errors. Internal header.

#ifndef LOSADAPT_SRC_BINARY_IO_HPP_
#define LOSADAPT_SRC_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "losadapt/errors.hpp"
#include "losadapt/grid.hpp"

namespace losadapt::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  template <typename T>
  void pod(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    os_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void bytes(const void* data, std::size_t n) { os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

  void string(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void check() const {
    if (!os_) throw Error("write failed");
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

  template <typename T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    bytes(&value, sizeof(T));
    return value;
  }

  void bytes(void* data, std::size_t n) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw FormatError(what_ + ": truncated input", offset_ + is_.gcount());
    offset_ += static_cast<std::int64_t>(n);
  }

  std::string string(std::uint64_t max_len = 1u << 26) {
    const auto n = pod<std::uint64_t>();
    if (n > max_len) throw FormatError(what_ + ": implausible string length", offset_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  void expect_magic(const char* magic, std::size_t n) {
    std::string got(n, '\0');
    bytes(got.data(), n);
    if (std::memcmp(got.data(), magic, n) != 0) throw FormatError(what_ + ": bad magic", 0);
  }

  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(what_ + ": " + msg, offset_); }

  std::int64_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::string what_;
  std::int64_t offset_ = 0;
};

inline void write_spec(Writer& w, const GridSpec& spec) {
  for (int d : spec.dims) w.pod(static_cast<std::int32_t>(d));
  for (int a = 0; a < 3; ++a) w.pod(spec.origin[a]);
  w.pod(spec.voxel_size);
  w.pod(static_cast<std::int32_t>(spec.num_classes));
}

inline GridSpec read_spec(Reader& r) {
  GridSpec spec;
  for (int& d : spec.dims) d = r.pod<std::int32_t>();
  for (int a = 0; a < 3; ++a) spec.origin[a] = r.pod<double>();
  spec.voxel_size = r.pod<double>();
  spec.num_classes = r.pod<std::int32_t>();
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    r.fail(std::string("invalid grid spec: ") + e.what());
  }
  return spec;
}

}  // namespace losadapt::binio

#endif  // LOSADAPT_SRC_BINARY_IO_HPP_
