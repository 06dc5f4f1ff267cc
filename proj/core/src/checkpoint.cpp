#include "sdd/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sdd/error.hpp"
#include "sdd/rng.hpp"

namespace sdd {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string& buf, size_t& at, const std::string& path) {
  if (at + sizeof(T) > buf.size())
    throw TruncatedError(path + ": checkpoint truncated at byte " +
                         std::to_string(at));
  T v;
  std::memcpy(&v, buf.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const MlpModel& model, uint64_t config_hash,
                     const std::string& path) {
  std::string buf;
  buf.append(kMagic, sizeof kMagic);
  put(buf, kVersion);
  put(buf, config_hash);
  put(buf, static_cast<uint32_t>(model.layers.size()));
  put(buf, static_cast<uint32_t>(model.input_dim));
  put(buf, static_cast<uint32_t>(model.class_count));
  for (const auto& l : model.layers) {
    put(buf, static_cast<uint32_t>(l.out_dim()));
    put(buf, static_cast<uint32_t>(l.in_dim()));
    put(buf, static_cast<uint8_t>(l.activation));
  }
  for (const auto& l : model.layers) {
    buf.append(reinterpret_cast<const char*>(l.weight.data.data()),
               l.weight.data.size() * sizeof(double));
    buf.append(reinterpret_cast<const char*>(l.bias.data.data()),
               l.bias.data.size() * sizeof(double));
    size_t nbits = l.mask.data.size();
    std::string bits((nbits + 7) / 8, '\0');
    for (size_t i = 0; i < nbits; ++i)
      if (l.mask.data[i] != 0.0) bits[i / 8] |= static_cast<char>(1u << (i % 8));
    buf += bits;
  }
  put(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("short write on checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < sizeof kMagic + 12)
    throw TruncatedError(path + ": too short to be a checkpoint");
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw MagicError(path + ": not a checkpoint file (bad magic)");
  if (buf.size() < 8)
    throw TruncatedError(path + ": missing checksum");
  uint64_t want = 0;
  std::memcpy(&want, buf.data() + buf.size() - 8, 8);
  uint64_t got = fnv1a64(buf.data(), buf.size() - 8);
  if (want != got)
    throw NumericError(path + ": checkpoint checksum mismatch (corrupt file)");

  size_t at = sizeof kMagic;
  uint32_t version = take<uint32_t>(buf, at, path);
  if (version != kVersion)
    throw MagicError(path + ": unsupported checkpoint version " +
                     std::to_string(version));
  LoadedCheckpoint out;
  out.config_hash = take<uint64_t>(buf, at, path);
  uint32_t layers = take<uint32_t>(buf, at, path);
  out.model.input_dim = static_cast<int>(take<uint32_t>(buf, at, path));
  out.model.class_count = static_cast<int>(take<uint32_t>(buf, at, path));

  struct Dims {
    uint32_t out, in;
    uint8_t act;
  };
  std::vector<Dims> dims;
  for (uint32_t i = 0; i < layers; ++i) {
    Dims d;
    d.out = take<uint32_t>(buf, at, path);
    d.in = take<uint32_t>(buf, at, path);
    d.act = take<uint8_t>(buf, at, path);
    dims.push_back(d);
  }
  for (const Dims& d : dims) {
    DenseLayer l;
    size_t n = static_cast<size_t>(d.out) * d.in;
    l.weight = Tensor::zeros({static_cast<int>(d.out), static_cast<int>(d.in)});
    l.weight.requires_grad = true;
    if (at + n * sizeof(double) > buf.size() - 8)
      throw TruncatedError(path + ": weight payload truncated");
    std::memcpy(l.weight.data.data(), buf.data() + at, n * sizeof(double));
    at += n * sizeof(double);
    l.bias = Tensor::zeros({static_cast<int>(d.out)});
    l.bias.requires_grad = true;
    if (at + d.out * sizeof(double) > buf.size() - 8)
      throw TruncatedError(path + ": bias payload truncated");
    std::memcpy(l.bias.data.data(), buf.data() + at, d.out * sizeof(double));
    at += d.out * sizeof(double);
    size_t nbytes = (n + 7) / 8;
    if (at + nbytes > buf.size() - 8)
      throw TruncatedError(path + ": mask payload truncated");
    l.mask = Tensor::zeros({static_cast<int>(d.out), static_cast<int>(d.in)});
    for (size_t i = 0; i < n; ++i)
      l.mask.data[i] =
          (buf[at + i / 8] >> (i % 8)) & 1 ? 1.0 : 0.0;
    at += nbytes;
    l.activation = d.act == 0 ? Activation::kRelu : Activation::kNone;
    out.model.layers.push_back(std::move(l));
  }
  return out;
}

}  // namespace sdd
