#include "undermine/checkpoint.hpp"

#include <array>
#include <fstream>

#include "undermine/errors.hpp"

#ifndef UNDERMINE_GIT_DESCRIBE
#define UNDERMINE_GIT_DESCRIBE "unknown"
#endif

namespace undermine {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return std::string("0.1.0-") + UNDERMINE_GIT_DESCRIBE; }

namespace {

constexpr std::array<char, 8> kMagic = {'U', 'N', 'D', 'W', 'T', 'S', '0', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ModelError("truncated weights file");
  return v;
}

}  // namespace

void write_weights(const fs::path& path, const nn::ParameterSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint64_t>(out, p->value.rows());
    put<std::uint64_t>(out, p->value.cols());
    out.write(reinterpret_cast<const char*>(p->value.values().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
}

void read_weights(const fs::path& path, nn::ParameterSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot read " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ModelError(path.string() + " is not a weights file");
  const auto count = get<std::uint64_t>(in);
  if (count != params.size()) throw ModelError("weights file parameter count does not match model");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    nn::Parameter* p = params.find(name);
    if (p == nullptr || p->value.rows() != rows || p->value.cols() != cols)
      throw ModelError("weights file entry " + name + " does not match model");
    in.read(reinterpret_cast<char*>(p->value.values().data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!in) throw ModelError("truncated weights file");
  }
}

void save_checkpoint(const fs::path& dir, std::string_view kind, const json& config, const Vocabulary& vocab,
                     const nn::ParameterSet& params, std::uint64_t seed, const json& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ModelError("cannot create checkpoint directory " + dir.string());
  json manifest = {{"kind", kind},
                   {"config", config},
                   {"vocab_digest", vocab.digest()},
                   {"vocab_size", vocab.size()},
                   {"seed", seed},
                   {"version", version_string()}};
  if (!extra.is_null()) manifest["extra"] = extra;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  vocab.save(dir / "vocab.txt");
  write_weights(dir / "weights.bin", params);
}

LoadedCheckpoint open_checkpoint(const fs::path& dir, std::string_view kind) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ModelError("no checkpoint manifest in " + dir.string());
  LoadedCheckpoint ck;
  try {
    ck.manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw ModelError("unreadable checkpoint manifest in " + dir.string() + ": " + e.what());
  }
  if (ck.manifest.value("kind", "") != kind)
    throw ModelError(dir.string() + " is not a " + std::string(kind) + " checkpoint");
  ck.vocab = Vocabulary::load(dir / "vocab.txt");
  if (ck.vocab.digest() != ck.manifest.value("vocab_digest", ""))
    throw ModelError("vocabulary digest mismatch in " + dir.string());
  return ck;
}

}  // namespace undermine
