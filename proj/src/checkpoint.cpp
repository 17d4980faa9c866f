/* Copyright 2026 The kgalign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "kgalign/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace kgalign {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'A', 'L', 'N', 'C', 'P', '1'};

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string read_string(std::istream& in) {
  const uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("checkpoint: truncated string");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt) {
  if (ckpt.precision_bytes != 4 && ckpt.precision_bytes != 8) {
    throw DataError("checkpoint: precision must be 4 or 8 bytes");
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + file.string());
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<uint32_t>(ckpt.precision_bytes));
  write_string(out, ckpt.config_text);
  write_u32(out, static_cast<uint32_t>(ckpt.rng_states.size()));
  for (const auto& [name, state] : ckpt.rng_states) {
    write_string(out, name);
    write_string(out, state);
  }
  write_u64(out, static_cast<uint64_t>(ckpt.epoch));
  write_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    write_string(out, t.name);
    write_u64(out, t.rows);
    write_u64(out, t.cols);
    if (t.data.size() != t.rows * t.cols) {
      throw DataError("checkpoint: tensor '" + t.name + "' data size disagrees with shape");
    }
    if (ckpt.precision_bytes == 8) {
      for (const double v : t.data) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        write_u64(out, bits);
      }
    } else {
      for (const double v : t.data) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, sizeof(bits));
        write_u32(out, bits);
      }
    }
  }
  if (!out) throw DataError("checkpoint write failed: " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + file.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a kgalign checkpoint (bad magic or unsupported version): " +
                    file.string());
  }
  Checkpoint ckpt;
  ckpt.precision_bytes = static_cast<int32_t>(read_u32(in));
  if (ckpt.precision_bytes != 4 && ckpt.precision_bytes != 8) {
    throw DataError("checkpoint: unsupported precision " +
                    std::to_string(ckpt.precision_bytes));
  }
  ckpt.config_text = read_string(in);
  const uint32_t n_rng = read_u32(in);
  for (uint32_t i = 0; i < n_rng; ++i) {
    auto name = read_string(in);
    auto state = read_string(in);
    ckpt.rng_states.emplace_back(std::move(name), std::move(state));
  }
  ckpt.epoch = static_cast<int64_t>(read_u64(in));
  const uint32_t n_tensors = read_u32(in);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    Checkpoint::NamedTensor t;
    t.name = read_string(in);
    t.rows = read_u64(in);
    t.cols = read_u64(in);
    const uint64_t count = t.rows * t.cols;
    t.data.resize(count);
    if (ckpt.precision_bytes == 8) {
      for (uint64_t j = 0; j < count; ++j) {
        const uint64_t bits = read_u64(in);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        t.data[j] = v;
      }
    } else {
      for (uint64_t j = 0; j < count; ++j) {
        const uint32_t bits = read_u32(in);
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        t.data[j] = static_cast<double>(f);
      }
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace kgalign
