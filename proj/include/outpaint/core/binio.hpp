// Copyright 2026 The Outpaint Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include "outpaint/core/errors.hpp"

namespace outpaint::binio {

// Every on-disk format in this project is little-endian; the code writes host
// byte order directly and refuses to build elsewhere.
static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw DataError(std::string("truncated file while reading ") + what);
    return v;
}

template <typename T>
void put_array(std::ostream& out, const T* data, std::size_t n) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void get_array(std::istream& in, T* data, std::size_t n, const char* what) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw DataError(std::string("truncated file while reading ") + what);
}

inline void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, const char* what) {
    const auto n = get<std::uint32_t>(in, what);
    std::string s(n, '\0');
    if (n) {
        in.read(s.data(), static_cast<std::streamsize>(n));
        if (!in) throw DataError(std::string("truncated file while reading ") + what);
    }
    return s;
}

// Reads a 4-byte magic and a u32 version, raising DataError on mismatch.
inline void check_header(std::istream& in, const char magic[4], std::uint32_t version,
                         const char* what) {
    char m[4];
    in.read(m, 4);
    if (!in || std::string(m, 4) != std::string(magic, 4))
        throw DataError(std::string(what) + ": bad magic (not a " + what + " file)");
    const auto v = get<std::uint32_t>(in, "format version");
    if (v != version)
        throw DataError(std::string(what) + ": format version " + std::to_string(v) +
                        ", expected " + std::to_string(version));
}

inline void put_header(std::ostream& out, const char magic[4], std::uint32_t version) {
    out.write(magic, 4);
    put<std::uint32_t>(out, version);
}

// Replaces `path` atomically: the content lands in a sibling temp file which
// is renamed over the target only after a successful flush.
template <typename WriteFn>
void atomic_write(const std::string& path, WriteFn&& fn) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp);
        fn(out);
        out.flush();
        if (!out) throw DataError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot rename " + tmp + " to " + path);
}

}  // namespace outpaint::binio
