#include "undermine/run_config.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "undermine/checkpoint.hpp"
#include "undermine/errors.hpp"
#include "undermine/evaluation.hpp"
#include "undermine/generator.hpp"
#include "undermine/ranker.hpp"

namespace undermine {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "corpus",     "output_dir",  "ranker_checkpoint", "pointwise_checkpoint", "generator_checkpoint",
      "backbone",   "seed",        "top_k",             "sample_top_k",         "top_p",
      "temperature", "min_tokens", "max_tokens",        "stopwords",            "variant",
      "epochs",     "lr",          "batch_size",        "max_len",              "hidden",
      "layers",     "heads",       "objective",         "mode",                 "split",
      "synth_train", "synth_valid", "synth_test"};
  return k;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  const auto size = [&] { return parse_number<std::size_t>(key, value); };
  const auto real = [&] { return parse_number<double>(key, value); };
  if (key == "corpus") corpus = std::string(value);
  else if (key == "output_dir") output_dir = std::string(value);
  else if (key == "ranker_checkpoint") ranker_checkpoint = std::string(value);
  else if (key == "pointwise_checkpoint") pointwise_checkpoint = std::string(value);
  else if (key == "generator_checkpoint") generator_checkpoint = std::string(value);
  else if (key == "backbone") {
    if (value != "tiny" && !value.starts_with("pretrained:"))
      throw ConfigError("backbone must be 'tiny' or 'pretrained:<name>'");
    backbone = std::string(value);
  } else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "top_k") top_k = size();
  else if (key == "sample_top_k") sample_top_k = size();
  else if (key == "top_p") {
    top_p = real();
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  } else if (key == "temperature") {
    temperature = real();
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  }
  else if (key == "min_tokens") min_tokens = size();
  else if (key == "max_tokens") max_tokens = size();
  else if (key == "stopwords") stopwords = std::string(value);
  else if (key == "variant") {
    parse_generator_variant(value);
    variant = std::string(value);
  } else if (key == "objective") {
    parse_rank_objective(value);
    objective = std::string(value);
  } else if (key == "mode") {
    parse_reference_mode(value);
    mode = std::string(value);
  } else if (key == "split") {
    if (value != "train" && value != "valid" && value != "test")
      throw ConfigError("split must be train, valid or test");
    split = std::string(value);
  } else if (key == "synth_train") synth_train = size();
  else if (key == "synth_valid") synth_valid = size();
  else if (key == "synth_test") synth_test = size();
  else if (key == "epochs") epochs = size();
  else if (key == "lr") {
    lr = real();
    if (!(*lr > 0.0)) throw ConfigError("lr must be positive");
  }
  else if (key == "batch_size") batch_size = size();
  else if (key == "max_len") max_len = size();
  else if (key == "hidden") hidden = size();
  else if (key == "layers") layers = size();
  else if (key == "heads") heads = size();
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(buf.str())) set(k, v);
}

json RunConfig::to_json() const {
  return {{"corpus", corpus.string()},
          {"output_dir", output_dir.string()},
          {"ranker_checkpoint", ranker_checkpoint.string()},
          {"pointwise_checkpoint", pointwise_checkpoint.string()},
          {"generator_checkpoint", generator_checkpoint.string()},
          {"backbone", backbone},
          {"seed", seed},
          {"top_k", top_k},
          {"sample_top_k", sample_top_k},
          {"top_p", top_p},
          {"temperature", temperature},
          {"min_tokens", min_tokens},
          {"max_tokens", max_tokens},
          {"stopwords", stopwords.string()},
          {"variant", variant},
          {"objective", objective},
          {"mode", mode},
          {"split", split},
          {"synth_train", synth_train},
          {"synth_valid", synth_valid},
          {"synth_test", synth_test},
          {"epochs", opt(epochs)},
          {"lr", opt(lr)},
          {"batch_size", opt(batch_size)},
          {"max_len", opt(max_len)},
          {"hidden", opt(hidden)},
          {"layers", opt(layers)},
          {"heads", opt(heads)}};
}

void require_exists(const std::filesystem::path& path, std::string_view what) {
  if (path.empty()) throw ConfigError(std::string(what) + " is not set");
  if (!std::filesystem::exists(path)) throw ConfigError(std::string(what) + " " + path.string() + " does not exist");
}

void write_run_manifest(const std::filesystem::path& dir, std::string_view command, const RunConfig& config,
                        const json& extra) {
  std::filesystem::create_directories(dir);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  json m = {{"command", std::string(command)},
            {"config", config.to_json()},
            {"seeds", {{"seed", config.seed}}},
            {"version", version_string()},
            {"timestamp", stamp}};
  if (!extra.is_null()) m["extra"] = extra;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

}  // namespace undermine
