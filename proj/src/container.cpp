// Copyright 2026 The mpc-audio Authors.
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


#include "mpc/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;

namespace {

constexpr char kMagic[8] = {'M', 'P', 'C', 'A', 'R', 'R', 'A', 'Y'};
constexpr std::size_t kHeaderSize = 64;
constexpr std::size_t kAlign = 64;

std::size_t AlignUp(std::size_t n) { return (n + kAlign - 1) / kAlign * kAlign; }

void PutU32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void SetU64(std::string& b, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[at + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint64_t Fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Cursor {
 public:
  Cursor(const std::string& buf, std::size_t pos, std::size_t end, const std::string& file)
      : buf_(buf), pos_(pos), end_(end), file_(file) {}

  std::uint64_t U(int bytes) {
    Need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > end_ || pos_ + n < pos_) {
      throw CheckpointError(StrCat(file_, ": truncated or corrupt container"));
    }
  }

  const std::string& buf_;
  std::size_t pos_;
  std::size_t end_;
  const std::string& file_;
};

}  // namespace

const NamedArray* Container::Find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void SaveContainer(const std::filesystem::path& path, const Container& c) {
  std::string buf(kHeaderSize, '\0');
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint64_t> hashes;
  for (const auto& a : c.arrays) {
    std::size_t count = 1;
    for (std::size_t d : a.shape) count *= d;
    if (count != a.values.size()) {
      throw CheckpointError(StrCat("container: array '", a.name, "' has ", a.values.size(),
                                   " values for its shape"));
    }
    buf.resize(AlignUp(buf.size()), '\0');
    offsets.push_back(buf.size());
    const std::size_t start = buf.size();
    for (double v : a.values) PutU64(buf, std::bit_cast<std::uint64_t>(v));
    hashes.push_back(Fnv1a(buf.data() + start, buf.size() - start));
  }
  const std::string meta = c.meta.dump();
  const std::size_t meta_offset = buf.size();
  buf += meta;
  const std::size_t index_offset = buf.size();
  for (std::size_t i = 0; i < c.arrays.size(); ++i) {
    const auto& a = c.arrays[i];
    PutU32(buf, static_cast<std::uint32_t>(a.name.size()));
    buf += a.name;
    PutU32(buf, static_cast<std::uint32_t>(a.shape.size()));
    for (std::size_t d : a.shape) PutU64(buf, d);
    PutU64(buf, offsets[i]);
    PutU64(buf, a.values.size());
    PutU64(buf, hashes[i]);
  }
  std::memcpy(buf.data(), kMagic, sizeof(kMagic));
  for (int i = 0; i < 4; ++i) buf[8 + i] = static_cast<char>((kContainerVersion >> (8 * i)) & 0xFF);
  for (int i = 0; i < 4; ++i) buf[12 + i] = static_cast<char>((kHeaderSize >> (8 * i)) & 0xFF);
  SetU64(buf, 16, index_offset);
  SetU64(buf, 24, buf.size() - index_offset);
  SetU64(buf, 32, c.arrays.size());
  SetU64(buf, 40, meta_offset);
  SetU64(buf, 48, meta.size());

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(StrCat("container: cannot write ", tmp.string()));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError(StrCat("container: write failed for ", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw CheckpointError(StrCat("container: cannot move into ", path.string(), ": ",
                                 ec.message()));
  }
}

Container LoadContainer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(StrCat("container: cannot read ", path.string()));
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string file = path.string();
  if (buf.size() < kHeaderSize || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(StrCat(file, ": not a container file"));
  }
  Cursor head(buf, 8, kHeaderSize, file);
  const auto version = static_cast<std::uint32_t>(head.U(4));
  if (version != kContainerVersion) {
    throw CheckpointError(StrCat(file, ": format version ", version, ", expected ",
                                 kContainerVersion));
  }
  head.U(4);
  const std::uint64_t index_offset = head.U(8);
  const std::uint64_t index_size = head.U(8);
  const std::uint64_t count = head.U(8);
  const std::uint64_t meta_offset = head.U(8);
  const std::uint64_t meta_size = head.U(8);
  if (meta_offset > buf.size() || meta_size > buf.size() - meta_offset ||
      index_offset > buf.size() || index_size > buf.size() - index_offset) {
    throw CheckpointError(StrCat(file, ": truncated or corrupt container"));
  }

  Container c;
  try {
    c.meta = nlohmann::json::parse(buf.substr(meta_offset, meta_size));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(StrCat(file, ": bad metadata: ", e.what()));
  }
  Cursor idx(buf, index_offset, index_offset + index_size, file);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = idx.Bytes(idx.U(4));
    const auto rank = idx.U(4);
    std::size_t expect = 1;
    for (std::uint64_t d = 0; d < rank; ++d) {
      a.shape.push_back(idx.U(8));
      expect *= a.shape.back();
    }
    const std::uint64_t offset = idx.U(8);
    const std::uint64_t n = idx.U(8);
    const std::uint64_t hash = idx.U(8);
    if (n != expect || offset % kAlign != 0 || offset > buf.size() ||
        n > (buf.size() - offset) / 8) {
      throw CheckpointError(StrCat(file, ": corrupt entry for '", a.name, "'"));
    }
    if (Fnv1a(buf.data() + offset, n * 8) != hash) {
      throw CheckpointError(StrCat(file, ": payload hash mismatch for '", a.name, "'"));
    }
    Cursor data(buf, offset, offset + n * 8, file);
    a.values.resize(n);
    for (auto& v : a.values) v = std::bit_cast<double>(data.U(8));
    c.arrays.push_back(std::move(a));
  }
  return c;
}

}  // namespace mpc
