#include "tio/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tio/util/error.hpp"

namespace tio::model {

namespace {

constexpr char kMagic[8] = {'T', 'I', 'O', 'C', 'K', 'P', 'T', '1'};

template <class U>
void put(std::ostream& os, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(U));
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& is, const std::filesystem::path& path) : is_(is), path_(path) {}

  template <class U>
  U get() {
    unsigned char b[sizeof(U)];
    if (!is_.read(reinterpret_cast<char*>(b), sizeof(U))) fail();
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }

  std::string string() {
    const auto n = get<std::uint64_t>();
    if (n > (1ULL << 32)) fail();
    std::string s(n, '\0');
    if (n && !is_.read(s.data(), static_cast<std::streamsize>(n))) fail();
    return s;
  }

  [[noreturn]] void fail() const { throw FormatError("truncated or corrupt checkpoint " + path_.string()); }

 private:
  std::istream& is_;
  const std::filesystem::path& path_;
};

Checkpoint pack(const std::string& kind, const ModelConfig& cfg, const ParamStore& store) {
  Checkpoint ck;
  ck.kind = kind;
  cfg.store(ck.config);
  for (const auto& p : store.all()) ck.tensors.emplace_back(p.name, p.value);
  return ck;
}

}  // namespace

const num::Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write " + tmp.string());
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, Checkpoint::kVersion);
    put_string(os, ck.kind);
    put_string(os, ck.config.str());
    put_string(os, ck.rng_state);
    put<std::uint64_t>(os, ck.tensors.size());
    for (const auto& [name, t] : ck.tensors) {
      put_string(os, name);
      put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) put<std::uint64_t>(os, d);
      for (double v : t.data()) put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyError("missing checkpoint " + path.string());
  Reader r(is, path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw FormatError(path.string() + " is not a checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version > Checkpoint::kVersion) {
    throw CompatibilityError("checkpoint version " + std::to_string(version) + " is newer than supported");
  }
  Checkpoint ck;
  ck.kind = r.string();
  ck.config = util::KeyValueConfig::parse(r.string());
  ck.rng_state = r.string();
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.string();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail();
    num::Shape shape(rank);
    for (auto& d : shape) {
      d = r.get<std::uint64_t>();
      if (d == 0 || d > (1ULL << 31)) r.fail();
    }
    num::Tensor t(shape);
    for (auto& v : t.data()) v = std::bit_cast<double>(r.get<std::uint64_t>());
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

Checkpoint to_checkpoint(const DeepTio& model) { return pack("deeptio", model.config(), model.params()); }
Checkpoint to_checkpoint(const Teacher& model) { return pack("teacher", model.config(), model.params()); }

void load_params(const Checkpoint& ck, ParamStore& store) {
  for (auto& p : store.all()) {
    const num::Tensor* t = ck.find(p.name);
    if (!t) throw CompatibilityError("checkpoint lacks parameter " + p.name);
    if (t->shape() != p.value.shape()) {
      throw CompatibilityError("parameter " + p.name + " has shape " + num::shape_string(t->shape()) +
                               " in the checkpoint but " + num::shape_string(p.value.shape()) + " in the model");
    }
    p.value = *t;
  }
}

DeepTio student_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "deeptio") throw CompatibilityError("checkpoint holds a '" + ck.kind + "', expected 'deeptio'");
  DeepTio m(ModelConfig::load(ck.config));
  load_params(ck, m.params());
  return m;
}

Teacher teacher_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "teacher") throw CompatibilityError("checkpoint holds a '" + ck.kind + "', expected 'teacher'");
  Teacher m(ModelConfig::load(ck.config));
  load_params(ck, m.params());
  return m;
}

}  // namespace tio::model
