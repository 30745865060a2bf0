#include "dsgan/models/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dsgan/core/error.hpp"

namespace dsgan {
namespace {

constexpr char kMagic[8] = {'D', 'S', 'G', 'A', 'N', 'C', 'K', 'P'};
constexpr std::uint8_t kFloat64 = 1;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void text(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) throw FormatError("checkpoint is truncated");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::string text() {
    const std::uint64_t n = u64();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == size_; }

 private:
  std::uint64_t le(int n) {
    const std::uint8_t* p = take(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::string meta_text(const Checkpoint& ck) {
  KeyValueText kv;
  kv.set("step", std::to_string(ck.step));
  ck.generator.to_text(kv, "generator");
  ck.discriminator.to_text(kv, "discriminator");
  for (const auto& [k, v] : ck.meta.entries()) kv.set("meta." + k, v);
  return kv.format();
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(arrays.begin(), arrays.end(),
                         [&](const NamedArray& a) { return a.name == name; });
  return it == arrays.end() ? nullptr : &*it;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.text(meta_text(ck));
  w.text(ck.config.format());
  w.u32(static_cast<std::uint32_t>(ck.arrays.size()));
  for (const NamedArray& a : ck.arrays) {
    std::uint64_t numel = 1;
    for (auto d : a.shape) numel *= d;
    if (numel != a.data.size())
      throw ValidationError("checkpoint array '" + a.name + "' has inconsistent shape");
    w.u32(static_cast<std::uint32_t>(a.name.size()));
    w.bytes(a.name.data(), a.name.size());
    w.u8(kFloat64);
    w.u8(static_cast<std::uint8_t>(a.shape.size()));
    for (auto d : a.shape) w.u64(d);
    for (double v : a.data) w.u64(std::bit_cast<std::uint64_t>(v));
  }
  auto& buf = w.buffer();
  const std::uint64_t sum = fnv1a(buf.data(), buf.size());
  w.u64(sum);
  return std::move(buf);
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a dsgan checkpoint (bad magic)");
  Reader r(bytes.data(), bytes.size() - 8);
  r.take(sizeof(kMagic));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " is not supported (expected version " +
                       std::to_string(kCheckpointVersion) + ")");
  Reader tail(bytes.data() + bytes.size() - 8, 8);
  if (tail.u64() != fnv1a(bytes.data(), bytes.size() - 8))
    throw FormatError("checkpoint checksum mismatch (file is corrupt)");

  Checkpoint ck;
  const KeyValueText meta = KeyValueText::parse(r.text());
  ck.config = KeyValueText::parse(r.text());
  try {
    ck.step = std::stoull(meta.require("step"));
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint has a malformed step counter");
  }
  ck.generator = NetworkSpec::from_text(meta, "generator");
  ck.discriminator = NetworkSpec::from_text(meta, "discriminator");
  for (const auto& [k, v] : meta.entries())
    if (k.starts_with("meta.")) ck.meta.set(k.substr(5), v);

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const std::uint32_t name_len = r.u32();
    const auto* name = r.take(name_len);
    a.name.assign(reinterpret_cast<const char*>(name), name_len);
    if (r.u8() != kFloat64) throw FormatError("array '" + a.name + "' has an unknown element type");
    const std::uint8_t rank = r.u8();
    std::uint64_t numel = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      a.shape.push_back(r.u64());
      numel *= a.shape.back();
    }
    if (numel > (bytes.size() / 8)) throw FormatError("array '" + a.name + "' is truncated");
    a.data.resize(numel);
    for (auto& v : a.data) v = std::bit_cast<double>(r.u64());
    ck.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ck);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

void store_network(Checkpoint& ck, const Network& net, const std::string& prefix) {
  for (const auto& p : net.parameters()) {
    const Shape4& s = p.value.shape();
    NamedArray a{prefix + "." + p.name, {s.n, s.c, s.h, s.w},
                 std::vector<double>(p.value.values().begin(), p.value.values().end())};
    auto it = std::find_if(ck.arrays.begin(), ck.arrays.end(),
                           [&](const NamedArray& x) { return x.name == a.name; });
    if (it != ck.arrays.end())
      *it = std::move(a);
    else
      ck.arrays.push_back(std::move(a));
  }
}

void restore_network(const Checkpoint& ck, Network& net, const std::string& prefix) {
  for (auto& p : net.parameters()) {
    const std::string name = prefix + "." + p.name;
    const NamedArray* a = ck.find(name);
    if (a == nullptr) throw ValidationError("checkpoint lacks array '" + name + "'");
    const Shape4& s = p.value.shape();
    if (a->shape != std::vector<std::uint64_t>{s.n, s.c, s.h, s.w})
      throw ValidationError("checkpoint array '" + name + "' does not match the network spec");
    std::copy(a->data.begin(), a->data.end(), p.value.data());
  }
}

Network generator_from_checkpoint(const Checkpoint& ck) {
  Network g(ck.generator);
  restore_network(ck, g, "G");
  return g;
}

}  // namespace dsgan
