#include "tilebench/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tilebench/core/errors.hpp"
#include "tilebench/core/io.hpp"

namespace tilebench::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename V>
  V get() {
    V v;
    read(reinterpret_cast<char*>(&v), sizeof(V));
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 24)) fail("implausible string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (!in_) fail("truncated");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_ + ": checkpoint " + what); }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Model<T>& model) {
  write_file_atomic(
      path,
      [&](std::ostream& out) {
        out.write(kMagic, 4);
        put<std::uint32_t>(out, kVersion);
        put_string(out, model.spec().to_config().to_string());
        put<std::uint32_t>(out, sizeof(T));
        const auto state = model.state();
        put<std::uint32_t>(out, static_cast<std::uint32_t>(state.size()));
        for (const auto& [name, t] : state) {
          put_string(out, name);
          put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
          for (auto d : t.shape()) put<std::int64_t>(out, d);
          out.write(reinterpret_cast<const char*>(t.values().data()),
                    static_cast<std::streamsize>(t.size() * sizeof(T)));
        }
      },
      true);
}

template <typename T>
std::unique_ptr<Model<T>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("has bad magic");
  if (r.get<std::uint32_t>() != kVersion) r.fail("has unsupported version");
  const ArchitectureSpec spec = ArchitectureSpec::from_config(KeyValueConfig::parse(r.get_string()));
  const auto width = r.get<std::uint32_t>();
  if (width != 4 && width != 8) r.fail("has unsupported value width");
  BuildOptions opt;
  opt.allow_reference = true;
  auto model = build_model<T>(spec, 0, opt);
  auto state = model->state();
  if (r.get<std::uint32_t>() != state.size()) r.fail("entry count does not match the spec");
  for (auto& [name, t] : state) {
    if (r.get_string() != name) r.fail("entry order does not match the spec at " + name);
    const auto rank = r.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::int64_t>();
    if (shape != t.shape()) r.fail("shape mismatch for " + name);
    auto& values = t.values();
    if (width == sizeof(T)) {
      r.read(reinterpret_cast<char*>(values.data()), values.size() * sizeof(T));
    } else if (width == 4) {
      for (auto& v : values) v = static_cast<T>(r.get<float>());
    } else {
      for (auto& v : values) v = static_cast<T>(r.get<double>());
    }
  }
  return model;
}

template <typename T>
StateSnapshot<T> snapshot(const Module<T>& m) {
  StateSnapshot<T> s;
  for (const auto& [name, t] : m.state()) s.push_back(t.values());
  return s;
}

template <typename T>
void restore(Module<T>& m, const StateSnapshot<T>& s) {
  auto state = m.state();
  if (state.size() != s.size()) throw InvariantViolation("snapshot does not match module");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (state[i].second.size() != s[i].size()) throw InvariantViolation("snapshot size mismatch at " + state[i].first);
    state[i].second.values() = s[i];
  }
}

template void save_checkpoint(const std::filesystem::path&, const Model<float>&);
template void save_checkpoint(const std::filesystem::path&, const Model<double>&);
template std::unique_ptr<Model<float>> load_checkpoint(const std::filesystem::path&);
template std::unique_ptr<Model<double>> load_checkpoint(const std::filesystem::path&);
template StateSnapshot<float> snapshot(const Module<float>&);
template StateSnapshot<double> snapshot(const Module<double>&);
template void restore(Module<float>&, const StateSnapshot<float>&);
template void restore(Module<double>&, const StateSnapshot<double>&);

}  // namespace tilebench::nn
