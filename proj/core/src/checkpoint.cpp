// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace srupp {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'R', 'P', 'P'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

[[noreturn]] void corrupt(const std::string& path, std::uint64_t offset,
                          const std::string& what) {
  throw IoError("checkpoint '" + path + "': " + what + " at byte offset " +
                std::to_string(offset));
}

struct Reader {
  std::ifstream in;
  std::string path;
  std::uint64_t offset = 0;

  void read_bytes(void* dst, std::uint64_t n, const char* what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in.gcount()) != n) {
      corrupt(path, offset, std::string("truncated ") + what);
    }
    offset += n;
  }

  std::uint32_t read_u32(const char* what) {
    std::uint32_t v = 0;
    read_bytes(&v, sizeof(v), what);
    return v;
  }

  std::uint64_t read_u64(const char* what) {
    std::uint64_t v = 0;
    read_bytes(&v, sizeof(v), what);
    return v;
  }
};

}  // namespace

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot write '" + tmp + "'");
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kCheckpointVersion);
    write_u64(out, tensors.size());
    for (const auto& [name, t] : tensors) {
      write_u64(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u64(out, static_cast<std::uint64_t>(t->dtype()));
      write_u64(out, static_cast<std::uint64_t>(t->rank()));
      for (auto e : t->shape()) write_u64(out, static_cast<std::uint64_t>(e));
      if (t->dtype() == Dtype::F32) {
        auto s = t->data<float>();
        out.write(reinterpret_cast<const char*>(s.data()),
                  static_cast<std::streamsize>(s.size() * sizeof(float)));
      } else {
        auto s = t->data<double>();
        out.write(reinterpret_cast<const char*>(s.data()),
                  static_cast<std::streamsize>(s.size() * sizeof(double)));
      }
    }
    if (!out) throw IoError("checkpoint: write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("checkpoint: cannot rename '" + tmp + "' to '" + path +
                  "': " + ec.message());
  }
}

void save_checkpoint(const std::string& path, const NamedTensors& tensors) {
  std::vector<std::pair<std::string, const Tensor*>> view;
  view.reserve(tensors.size());
  for (const auto& [name, t] : tensors) view.emplace_back(name, &t);
  save_checkpoint(path, view);
}

NamedTensors load_checkpoint(const std::string& path) {
  Reader rd;
  rd.path = path;
  rd.in.open(path, std::ios::binary);
  if (!rd.in) throw IoError("checkpoint: cannot open '" + path + "'");

  char magic[4] = {};
  rd.read_bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    corrupt(path, 0, "bad magic (not an SRPP checkpoint)");
  }
  const std::uint32_t version = rd.read_u32("version");
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint '" + path + "': format version " +
                  std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t count = rd.read_u64("tensor count");

  NamedTensors out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = rd.read_u64("name length");
    if (name_len > (1u << 20)) {
      corrupt(path, rd.offset - 8, "implausible name length");
    }
    std::string name(name_len, '\0');
    rd.read_bytes(name.data(), name_len, "name");
    const std::uint64_t dtype_code = rd.read_u64("dtype");
    if (dtype_code > 1) corrupt(path, rd.offset - 8, "unknown dtype code");
    const Dtype dt = dtype_code == 0 ? Dtype::F32 : Dtype::F64;
    const std::uint64_t rank = rd.read_u64("rank");
    if (rank > 8) corrupt(path, rd.offset - 8, "implausible rank");
    std::vector<std::int64_t> shape(rank);
    std::uint64_t total = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      const std::uint64_t e = rd.read_u64("extent");
      if (e == 0 || e > (1ull << 32)) {
        corrupt(path, rd.offset - 8, "implausible extent");
      }
      shape[r] = static_cast<std::int64_t>(e);
      if (total > (1ull << 40) / e) {
        corrupt(path, rd.offset - 8, "implausible tensor size");
      }
      total *= e;
    }
    Tensor t = Tensor::zeros(shape, dt);
    if (dt == Dtype::F32) {
      auto s = t.data<float>();
      rd.read_bytes(s.data(), total * sizeof(float), "payload");
    } else {
      auto s = t.data<double>();
      rd.read_bytes(s.data(), total * sizeof(double), "payload");
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace srupp
