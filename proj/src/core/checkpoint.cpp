#include "checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace gi {

namespace {

template <typename T>
void write_pod(std::ostream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& f, const std::string& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw PersistenceError("truncated checkpoint: " + path);
  return v;
}

void write_string(std::ostream& f, const std::string& s) {
  write_pod<uint32_t>(f, static_cast<uint32_t>(s.size()));
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& f, const std::string& path) {
  auto n = read_pod<uint32_t>(f, path);
  if (n > (1u << 24)) throw PersistenceError("corrupt string length: " + path);
  std::string s(n, '\0');
  f.read(s.data(), n);
  if (!f) throw PersistenceError("truncated checkpoint: " + path);
  return s;
}

void write_header(std::ostream& f, const CheckpointHeader& h) {
  if (h.magic.size() != 6) throw PersistenceError("magic must be 6 bytes");
  f.write(h.magic.data(), 6);
  write_pod<uint32_t>(f, h.version);
  write_pod<int32_t>(f, h.latent_dim);
  write_pod<int32_t>(f, h.image_h);
  write_pod<int32_t>(f, h.image_w);
  write_pod<int32_t>(f, h.image_c);
  write_string(f, h.layer_spec);
}

CheckpointHeader read_header(std::istream& f, const std::string& path,
                             const std::string& expect_magic) {
  char magic[6];
  f.read(magic, 6);
  if (!f) throw PersistenceError("truncated checkpoint: " + path);
  CheckpointHeader h;
  h.magic.assign(magic, 6);
  if (h.magic != expect_magic)
    throw PersistenceError("bad checkpoint magic in " + path + " (expected " +
                           expect_magic + ", got " + h.magic + ")");
  h.version = read_pod<uint32_t>(f, path);
  if (h.version != 1)
    throw PersistenceError("unsupported checkpoint version in " + path);
  h.latent_dim = read_pod<int32_t>(f, path);
  h.image_h = read_pod<int32_t>(f, path);
  h.image_w = read_pod<int32_t>(f, path);
  h.image_c = read_pod<int32_t>(f, path);
  h.layer_spec = read_string(f, path);
  return h;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<nn::ParamRef>& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PersistenceError("cannot open for writing: " + path);
  write_header(f, header);
  write_pod<uint32_t>(f, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    write_string(f, p.name);
    const auto& shape = p.value->shape();
    write_pod<uint32_t>(f, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_pod<int32_t>(f, d);
    f.write(reinterpret_cast<const char*>(p.value->data()),
            static_cast<std::streamsize>(p.value->size() * sizeof(float)));
  }
  if (!f) throw PersistenceError("write failed: " + path);
}

CheckpointHeader load_checkpoint_header(const std::string& path,
                                        const std::string& expect_magic) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PersistenceError("cannot open for reading: " + path);
  return read_header(f, path, expect_magic);
}

void load_checkpoint_tensors(const std::string& path,
                             const std::string& expect_magic,
                             const std::vector<nn::ParamRef>& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PersistenceError("cannot open for reading: " + path);
  read_header(f, path, expect_magic);
  auto count = read_pod<uint32_t>(f, path);
  if (count != params.size())
    throw PersistenceError("checkpoint tensor count mismatch in " + path);
  for (const auto& p : params) {
    std::string name = read_string(f, path);
    if (name != p.name)
      throw PersistenceError("checkpoint tensor name mismatch in " + path +
                             ": expected " + p.name + ", got " + name);
    auto rank = read_pod<uint32_t>(f, path);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = read_pod<int32_t>(f, path);
    if (shape != p.value->shape())
      throw ShapeError("checkpoint tensor shape mismatch for " + p.name +
                       " in " + path);
    f.read(reinterpret_cast<char*>(p.value->data()),
           static_cast<std::streamsize>(p.value->size() * sizeof(float)));
    if (!f) throw PersistenceError("truncated checkpoint: " + path);
  }
}

}  // namespace gi
