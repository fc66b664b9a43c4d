#include "undermine/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "undermine/errors.hpp"
#include "undermine/text.hpp"

namespace undermine {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + std::string(name) + "'");
}

bool ArgumentPost::is_weak(std::size_t premise) const {
  return std::binary_search(weak_indices.begin(), weak_indices.end(), premise);
}

std::vector<int> ArgumentPost::labels() const {
  std::vector<int> y(premises.size(), 0);
  for (std::size_t i : weak_indices) y[i] = 1;
  return y;
}

json CorpusManifest::to_json() const {
  json j;
  for (Split s : {Split::train, Split::valid, Split::test}) {
    const SplitCounts& c = (*this)[s];
    j["splits"][std::string(to_string(s))] = {{"posts", c.posts},
                                                {"triples", c.triples},
                                                {"premises", c.premises},
                                                {"weak_premises", c.weak_premises}};
  }
  j["skipped_comments"] = skipped_comments;
  return j;
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void validate_post(const ArgumentPost& p) {
  if (p.id.empty()) throw DataError("post with empty id");
  if (blank(p.claim)) throw DataError("post " + p.id + ": empty claim");
  if (p.premises.empty()) throw DataError("post " + p.id + ": no premises");
  for (std::size_t i : p.weak_indices)
    if (i >= p.premises.size())
      throw DataError("post " + p.id + ": weak index " + std::to_string(i) + " out of range for " +
                      std::to_string(p.premises.size()) + " premises");
  if (!std::is_sorted(p.weak_indices.begin(), p.weak_indices.end()) ||
      std::adjacent_find(p.weak_indices.begin(), p.weak_indices.end()) != p.weak_indices.end())
    throw DataError("post " + p.id + ": weak indices not a sorted set");
}

}  // namespace

Corpus::Corpus(std::vector<ArgumentPost> posts, std::vector<CounterTriple> triples, std::size_t skipped_comments)
    : posts_(std::move(posts)), triples_(std::move(triples)) {
  manifest_.skipped_comments = skipped_comments;
  std::unordered_set<std::string> ids;
  for (const auto& p : posts_) {
    validate_post(p);
    if (!ids.insert(p.id).second) throw DataError("duplicate post id " + p.id);
    SplitCounts& c = manifest_.splits[static_cast<std::size_t>(p.split)];
    ++c.posts;
    c.premises += p.premises.size();
    c.weak_premises += p.weak_indices.size();
  }
  for (const auto& t : triples_) {
    const ArgumentPost* p = find_post(t.post_id);
    if (p == nullptr) throw DataError("triple references unknown post " + t.post_id);
    if (t.attacked_indices.empty()) throw DataError("post " + t.post_id + ": triple with no attacked premise");
    if (blank(t.counter)) throw DataError("post " + t.post_id + ": triple with empty counter");
    for (std::size_t i : t.attacked_indices)
      if (!p->is_weak(i))
        throw DataError("post " + t.post_id + ": attacked index " + std::to_string(i) + " not in weak set");
    ++manifest_.splits[static_cast<std::size_t>(p->split)].triples;
  }
}

const ArgumentPost* Corpus::find_post(std::string_view id) const {
  for (const auto& p : posts_)
    if (p.id == id) return &p;
  return nullptr;
}

std::vector<const ArgumentPost*> Corpus::posts_in(Split split) const {
  std::vector<const ArgumentPost*> out;
  for (const auto& p : posts_)
    if (p.split == split) out.push_back(&p);
  return out;
}

std::vector<const CounterTriple*> Corpus::triples_in(Split split) const {
  std::vector<const CounterTriple*> out;
  for (const auto& t : triples_) {
    const ArgumentPost* p = find_post(t.post_id);
    if (p != nullptr && p->split == split) out.push_back(&t);
  }
  return out;
}

std::vector<const CounterTriple*> Corpus::triples_of(std::string_view post_id) const {
  std::vector<const CounterTriple*> out;
  for (const auto& t : triples_)
    if (t.post_id == post_id) out.push_back(&t);
  return out;
}

// ---------------------------------------------------------------------------

BuiltPost build_triples(const PostRecord& record) {
  BuiltPost built;
  ArgumentPost& post = built.post;
  post.id = record.id;
  post.claim = record.title;
  post.premises = record.sentences;
  post.split = record.split;

  std::set<std::size_t> weak;
  for (const CommentRecord& c : record.comments) {
    std::set<std::size_t> quoted;
    for (long long q : c.quoted) {
      if (q < 0 || static_cast<std::size_t>(q) >= record.sentences.size())
        throw DataError("post " + record.id + ": quoted index " + std::to_string(q) + " out of range for " +
                        std::to_string(record.sentences.size()) + " premises");
      quoted.insert(static_cast<std::size_t>(q));
    }
    if (quoted.empty() || blank(c.text)) {
      ++built.skipped_comments;
      continue;
    }
    weak.insert(quoted.begin(), quoted.end());
    CounterTriple t;
    t.post_id = record.id;
    t.claim = record.title;
    t.premises = record.sentences;
    t.attacked_indices.assign(quoted.begin(), quoted.end());
    t.counter = c.text;
    t.full_comment = c.full_text;
    built.triples.push_back(std::move(t));
  }
  post.weak_indices.assign(weak.begin(), weak.end());
  validate_post(post);
  return built;
}

PostRecord parse_post_record(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  PostRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.sentences = j.at("sentences").get<std::vector<std::string>>();
    r.split = parse_split(j.at("split").get<std::string>());
    for (const json& c : j.value("comments", json::array())) {
      CommentRecord cr;
      cr.quoted = c.at("quoted").get<std::vector<long long>>();
      cr.text = c.at("text").get<std::string>();
      if (c.contains("full_text")) cr.full_text = c.at("full_text").get<std::string>();
      r.comments.push_back(std::move(cr));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
  return r;
}

json post_record_json(const ArgumentPost& post, std::span<const CounterTriple* const> triples) {
  json comments = json::array();
  for (const CounterTriple* t : triples) {
    json c = {{"quoted", t->attacked_indices}, {"text", t->counter}};
    if (t->full_comment) c["full_text"] = *t->full_comment;
    comments.push_back(std::move(c));
  }
  return json{{"id", post.id},
              {"title", post.claim},
              {"sentences", post.premises},
              {"comments", std::move(comments)},
              {"split", std::string(to_string(post.split))}};
}

Corpus read_corpus(std::istream& in) {
  std::vector<ArgumentPost> posts;
  std::vector<CounterTriple> triples;
  std::size_t skipped = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      BuiltPost built = build_triples(parse_post_record(json::parse(line)));
      skipped += built.skipped_comments;
      posts.push_back(std::move(built.post));
      for (auto& t : built.triples) triples.push_back(std::move(t));
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Corpus(std::move(posts), std::move(triples), skipped);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& post : corpus.posts()) {
    const auto triples = corpus.triples_of(post.id);
    out << post_record_json(post, triples).dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus " + path.string());
  write_corpus(corpus, out);
}

// ---------------------------------------------------------------------------

std::vector<std::string> default_synth_vocabulary(std::size_t count) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::vector<std::string> words;
  const std::size_t syllables = consonants.size() * vowels.size();
  // Two-syllable words walked with a stride coprime to the space size so the
  // list does not cluster on one leading consonant.
  const std::size_t space = syllables * syllables;
  const std::size_t stride = 97;
  const auto& stop = default_stopwords();
  for (std::size_t i = 0, k = 0; words.size() < count && i < space; ++i, k = (k + stride) % space) {
    const std::size_t a = k / syllables, b = k % syllables;
    std::string w;
    w += consonants[a / vowels.size()];
    w += vowels[a % vowels.size()];
    w += consonants[b / vowels.size()];
    w += vowels[b % vowels.size()];
    if (!stop.contains(w)) words.push_back(std::move(w));
  }
  return words;
}

Corpus synth_corpus(std::uint64_t seed, std::size_t n_posts, std::span<const std::string> vocab,
                    const SynthOptions& options) {
  if (n_posts == 0) throw DataError("synth_corpus needs at least one post");
  if (vocab.empty()) throw DataError("synth_corpus needs a non-empty vocabulary");
  for (const auto& w : vocab)
    if (w == options.marker) throw DataError("synthetic vocabulary contains the marker word");

  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto word = [&] { return vocab[uniform(0, vocab.size() - 1)]; };
  auto join = [](const std::vector<std::string>& ws) {
    std::string s;
    for (const auto& w : ws) {
      if (!s.empty()) s += ' ';
      s += w;
    }
    return s;
  };

  const auto n_test = static_cast<std::size_t>(static_cast<double>(n_posts) * options.test_fraction + 0.5);
  const auto n_valid = static_cast<std::size_t>(static_cast<double>(n_posts) * options.valid_fraction + 0.5);
  const std::size_t n_train = n_posts - std::min(n_posts, n_test + n_valid);

  std::vector<ArgumentPost> posts;
  std::vector<CounterTriple> triples;
  std::bernoulli_distribution weak_draw(options.weak_probability);
  const std::size_t width = std::to_string(n_posts).size();
  for (std::size_t p = 0; p < n_posts; ++p) {
    ArgumentPost post;
    std::string index = std::to_string(p);
    post.id = "synth-" + std::to_string(seed) + "-" + std::string(width - index.size(), '0') + index;
    post.split = p < n_train ? Split::train : (p < n_train + n_valid ? Split::valid : Split::test);

    std::vector<std::string> claim(uniform(3, 6));
    for (auto& w : claim) w = word();
    post.claim = join(claim);

    const std::size_t n_premises = uniform(3, 8);
    std::vector<bool> weak(n_premises);
    for (std::size_t i = 0; i < n_premises; ++i) weak[i] = weak_draw(rng);
    if (std::none_of(weak.begin(), weak.end(), [](bool b) { return b; })) weak[uniform(0, n_premises - 1)] = true;

    std::vector<std::vector<std::string>> premise_words(n_premises);
    constexpr std::size_t kQuotedWords = 4;  // premises have at least 5 words
    for (std::size_t i = 0; i < n_premises; ++i) {
      auto& ws = premise_words[i];
      ws.resize(uniform(5, 8));
      for (auto& w : ws) w = word();
      if (weak[i]) {
        // Replace rather than insert so weakness does not change length. The
        // marker stays clear of the quoted head of the premise.
        ws[uniform(kQuotedWords, ws.size() - 1)] = options.marker;
        post.weak_indices.push_back(i);
      }
      post.premises.push_back(join(ws) + " .");
    }

    for (std::size_t i : post.weak_indices) {
      const auto& ws = premise_words[i];
      std::vector<std::string> echo{"no", ",", options.marker};
      echo.insert(echo.end(), ws.begin(), ws.begin() + kQuotedWords);
      echo.emplace_back(".");
      CounterTriple t;
      t.post_id = post.id;
      t.claim = post.claim;
      t.premises = post.premises;
      t.attacked_indices = {i};
      t.counter = join(echo);
      std::vector<std::string> extra(uniform(4, 7));
      for (auto& w : extra) w = word();
      t.full_comment = t.counter + " " + join(extra) + " .";
      triples.push_back(std::move(t));
    }
    posts.push_back(std::move(post));
  }
  return Corpus(std::move(posts), std::move(triples));
}

}  // namespace undermine
