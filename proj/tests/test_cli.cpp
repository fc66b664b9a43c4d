#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = undermine::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "undermine-cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kTinyModel = {"--epochs", "1", "--hidden", "16", "--layers", "1",
                                             "--heads",  "2", "--max-len", "96"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("help exits zero for every subcommand") {
  CHECK(cli({"--help"}).code == 0);
  for (const char* sub : {"ingest", "synth", "train-ranker", "eval-ranker", "train-generator", "generate",
                          "undermine", "evaluate", "compare"}) {
    const auto r = cli({sub, "--help"});
    CHECK_MESSAGE(r.code == 0, sub);
    CHECK_MESSAGE(r.out.find("--config") != std::string::npos, sub);
  }
}

TEST_CASE("configuration errors exit 2 with one line") {
  const auto dir = scratch("config");
  auto r = cli({"synth", "--no-such-flag", "1"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: config: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  std::ofstream(dir / "bad.conf") << "not_a_key = 1\n";
  r = cli({"synth", "--config", (dir / "bad.conf").string(), "--output-dir", dir.string()});
  CHECK(r.code == 2);

  r = cli({"undermine", "--corpus", (dir / "missing.jsonl").string(), "--output-dir", dir.string()});
  CHECK(r.code == 2);

  r = cli({"train-ranker", "--backbone", "pretrained:roberta-base", "--output-dir", dir.string()});
  CHECK(r.code != 0);
}

TEST_CASE("malformed corpus exits 3") {
  const auto dir = scratch("malformed");
  std::ofstream(dir / "corpus.jsonl") << "{\"kind\": \"post\", \"id\": 3\n";
  const auto r = cli({"ingest", "--corpus", (dir / "corpus.jsonl").string(), "--output-dir", dir.string()});
  CHECK(r.code == 3);
  CHECK(r.err.rfind("error: data: ", 0) == 0);
}

TEST_CASE("small end-to-end run") {
  const auto dir = scratch("e2e");
  const auto data = dir / "data";
  REQUIRE(cli({"synth", "--synth-train", "30", "--synth-test", "10", "--output-dir", data.string()}).code == 0);
  const auto corpus = (data / "corpus.jsonl").string();
  REQUIRE(fs::exists(corpus));

  auto r = cli({"ingest", "--corpus", corpus, "--output-dir", (dir / "ingest").string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "ingest" / "corpus_manifest.json"));

  r = cli(cat({"train-ranker", "--corpus", corpus, "--output-dir", (dir / "ranker").string()}, kTinyModel));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = cli({"eval-ranker", "--corpus", corpus, "--ranker-checkpoint", (dir / "ranker" / "checkpoint").string(),
           "--output-dir", (dir / "rank-eval").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto metrics = nlohmann::json::parse(slurp(dir / "rank-eval" / "ranker_metrics.json"));
  CHECK(metrics.dump().find("random") != std::string::npos);

  r = cli(cat({"train-generator", "--corpus", corpus, "--output-dir", (dir / "gen").string()}, kTinyModel));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto gen_ckpt = (dir / "gen" / "checkpoint").string();

  const std::vector<std::string> decode = {"--min-tokens", "2", "--max-tokens", "6", "--seed", "3"};
  auto run_undermine = [&](const fs::path& out) {
    return cli(cat({"undermine", "--corpus", corpus, "--ranker-checkpoint", (dir / "ranker" / "checkpoint").string(),
                    "--generator-checkpoint", gen_ckpt, "--top-k", "2", "--output-dir", out.string()},
                   decode));
  };
  REQUIRE(run_undermine(dir / "u1").code == 0);
  REQUIRE(run_undermine(dir / "u2").code == 0);
  CHECK(slurp(dir / "u1" / "generations.jsonl") == slurp(dir / "u2" / "generations.jsonl"));
  CHECK(slurp(dir / "u1" / "counter_results.jsonl") == slurp(dir / "u2" / "counter_results.jsonl"));

  r = cli({"evaluate", "--corpus", corpus, "--output-dir", (dir / "u1").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir / "u1" / "report.json"));
  CHECK(fs::exists(dir / "u1" / "coverage_histogram.csv"));

  r = cli({"compare", (dir / "u1").string(), (dir / "u1" / "report.json").string(), "--output-dir",
           (dir / "cmp").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto cmp = nlohmann::json::parse(slurp(dir / "cmp" / "comparison.json"));
  CHECK(cmp.dump().find("variance") != std::string::npos);

  r = cli(cat({"generate", "--corpus", corpus, "--generator-checkpoint", gen_ckpt, "--output-dir",
               (dir / "g").string()},
              decode));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir / "g" / "generations.jsonl"));
  CHECK(fs::exists(dir / "g" / "manifest.json"));
}
