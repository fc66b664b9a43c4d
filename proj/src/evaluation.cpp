#include "undermine/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "undermine/errors.hpp"
#include "undermine/pipeline.hpp"

namespace undermine {

using nlohmann::json;

namespace {

using Tokens = std::vector<std::string>;

std::map<Tokens, std::size_t> ngram_counts(const Tokens& toks, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++counts[Tokens(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                                                     toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

std::vector<Tokens> tokenize_references(std::span<const std::string> references) {
  std::vector<Tokens> refs;
  for (const auto& r : references) {
    Tokens t = word_tokens(r);
    if (!t.empty()) refs.push_back(std::move(t));
  }
  if (refs.empty()) throw DataError("no non-empty reference to score against");
  return refs;
}

}  // namespace

double bleu_n(std::string_view candidate, std::span<const std::string> references, int n) {
  if (n < 1) throw ConfigError("BLEU order must be positive");
  const Tokens cand = word_tokens(candidate);
  const std::vector<Tokens> refs = tokenize_references(references);
  if (cand.empty()) {
    std::cerr << "warning: empty candidate scored as BLEU 0\n";
    return 0.0;
  }
  double log_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    const auto k = static_cast<std::size_t>(order);
    if (cand.size() < k) return 0.0;
    std::map<Tokens, std::size_t> max_ref;
    for (const auto& r : refs)
      for (const auto& [gram, c] : ngram_counts(r, k)) max_ref[gram] = std::max(max_ref[gram], c);
    std::size_t clipped = 0;
    for (const auto& [gram, c] : ngram_counts(cand, k)) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(cand.size() - k + 1));
  }
  const double c = static_cast<double>(cand.size());
  std::size_t closest = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) { return std::abs(static_cast<double>(len) - c); };
    if (d(r.size()) < d(closest) || (d(r.size()) == d(closest) && r.size() < closest)) closest = r.size();
  }
  const double r = static_cast<double>(closest);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / n);
}

// ---------------------------------------------------------------------------
// METEOR alignment

namespace {

class AlignmentSearch {
 public:
  AlignmentSearch(std::span<const std::string> cand, std::span<const std::string> ref) : cand_(cand), ref_(ref) {
    std::map<std::string, std::size_t> cc, rc;
    for (const auto& w : cand_) ++cc[w];
    for (const auto& w : ref_) ++rc[w];
    for (const auto& [w, c] : cc) {
      auto it = rc.find(w);
      const std::size_t quota = it == rc.end() ? 0 : std::min(c, it->second);
      quota_[w] = quota;
      target_ += quota;
    }
    // Candidate occurrences of each word at or after position i.
    remaining_.resize(cand_.size() + 1);
    std::map<std::string, std::size_t> tail;
    for (std::size_t i = cand_.size(); i-- > 0;) {
      ++tail[cand_[i]];
      remaining_[i] = tail[cand_[i]];
    }
    used_.assign(ref_.size(), false);
  }

  Alignment run() {
    greedy();
    std::map<std::string, std::size_t> matched;
    dfs(0, -1, 0, 0, matched);
    return {target_, best_chunks_};
  }

 private:
  static constexpr std::size_t kBudget = 200000;

  void greedy() {
    std::vector<bool> used(ref_.size(), false);
    std::map<std::string, std::size_t> matched;
    std::ptrdiff_t prev = -2;
    bool prev_aligned = false;
    std::size_t chunks = 0;
    for (std::size_t i = 0; i < cand_.size(); ++i) {
      std::ptrdiff_t pick = -1;
      if (matched[cand_[i]] < quota_[cand_[i]]) {
        const auto next = static_cast<std::size_t>(prev + 1);
        if (prev_aligned && next < ref_.size() && !used[next] && ref_[next] == cand_[i]) {
          pick = static_cast<std::ptrdiff_t>(next);
        } else {
          for (std::size_t j = 0; j < ref_.size(); ++j)
            if (!used[j] && ref_[j] == cand_[i]) {
              pick = static_cast<std::ptrdiff_t>(j);
              break;
            }
        }
      }
      if (pick >= 0) {
        if (!(prev_aligned && pick == prev + 1)) ++chunks;
        used[static_cast<std::size_t>(pick)] = true;
        ++matched[cand_[i]];
        prev = pick;
        prev_aligned = true;
      } else {
        prev_aligned = false;
      }
    }
    best_chunks_ = chunks;
  }

  // prev_ref: reference position aligned to candidate i-1, or -1 if none.
  void dfs(std::size_t i, std::ptrdiff_t prev_ref, std::size_t chunks, std::size_t matches,
           std::map<std::string, std::size_t>& matched) {
    if (++nodes_ > kBudget) return;
    // Chunk counts only grow along a path, and the greedy pass already gives a full-match bound.
    if (chunks >= best_chunks_) return;
    if (i == cand_.size()) {
      if (matches == target_) best_chunks_ = chunks;
      return;
    }
    const std::string& w = cand_[i];
    const std::size_t need = quota_[w] - matched[w];
    if (need > 0) {
      auto try_pos = [&](std::size_t j) {
        const bool extends = prev_ref >= 0 && static_cast<std::ptrdiff_t>(j) == prev_ref + 1;
        const std::size_t next_chunks = chunks + (extends ? 0 : 1);
        if (next_chunks >= best_chunks_) return;
        used_[j] = true;
        ++matched[w];
        dfs(i + 1, static_cast<std::ptrdiff_t>(j), next_chunks, matches + 1, matched);
        --matched[w];
        used_[j] = false;
      };
      const auto cont = static_cast<std::size_t>(prev_ref + 1);
      if (prev_ref >= 0 && cont < ref_.size() && !used_[cont] && ref_[cont] == w) try_pos(cont);
      for (std::size_t j = 0; j < ref_.size(); ++j)
        if (!used_[j] && ref_[j] == w && !(prev_ref >= 0 && j == cont)) try_pos(j);
    }
    // Skipping this occurrence is allowed only if later ones can fill the quota.
    if (remaining_[i] - 1 >= need) dfs(i + 1, -1, chunks, matches, matched);
  }

  std::span<const std::string> cand_;
  std::span<const std::string> ref_;
  std::map<std::string, std::size_t> quota_;
  std::vector<std::size_t> remaining_;
  std::vector<bool> used_;
  std::size_t target_ = 0;
  std::size_t best_chunks_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

Alignment meteor_align(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return AlignmentSearch(candidate, reference).run();
}

double meteor(std::string_view candidate, std::span<const std::string> references, const MeteorParams& params) {
  const Tokens cand = word_tokens(candidate);
  const std::vector<Tokens> refs = tokenize_references(references);
  if (cand.empty()) return 0.0;
  double best = 0.0;
  for (const auto& ref : refs) {
    const Alignment a = meteor_align(cand, ref);
    if (a.matches == 0) continue;
    const double m = static_cast<double>(a.matches);
    const double precision = m / static_cast<double>(cand.size());
    const double recall = m / static_cast<double>(ref.size());
    const double f = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
    best = std::max(best, f * (1.0 - penalty));
  }
  return best;
}

std::optional<double> weak_premise_coverage(std::string_view counter, std::string_view premise,
                                            const StopwordList& stopwords) {
  const auto premise_tokens = content_tokens(premise, stopwords);
  if (premise_tokens.empty()) return std::nullopt;
  return static_cast<double>(overlap_count(counter, premise, stopwords)) /
         static_cast<double>(premise_tokens.size());
}

TTest paired_t_one_tailed(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired t-test over vectors of different length");
  if (a.size() < 2) throw DataError("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DataError("paired t-test is degenerate: differences have zero variance");
  TTest out;
  out.df = n - 1;
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(out.df));
  out.p = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ReferenceMode mode) {
  return mode == ReferenceMode::counter_sentences ? "counter_sentences" : "full_comment";
}

ReferenceMode parse_reference_mode(std::string_view name) {
  if (name == "counter" || name == "counter_sentences") return ReferenceMode::counter_sentences;
  if (name == "full" || name == "full_comment") return ReferenceMode::full_comment;
  throw ConfigError("unknown reference mode '" + std::string(name) + "'");
}

std::vector<GeneratedRecord> read_generations(std::istream& in) {
  std::vector<GeneratedRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      GeneratedRecord r;
      r.post_id = j.at("post_id").get<std::string>();
      r.attacked_indices = j.at("attacked_indices").get<std::vector<std::size_t>>();
      r.counter = j.at("counter").get<std::string>();
      r.seed = j.value("seed", std::uint64_t{0});
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError("generation line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<GeneratedRecord> load_generations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generations " + path.string());
  return read_generations(in);
}

MetricMeans mean_metrics(std::span<const ExampleScores> examples) {
  MetricMeans m;
  for (const auto& e : examples) {
    m.bleu1 += e.bleu1;
    m.bleu2 += e.bleu2;
    m.meteor += e.meteor;
    if (e.coverage) {
      m.coverage += *e.coverage;
      ++m.coverage_examples;
    }
  }
  m.examples = examples.size();
  if (m.examples > 0) {
    const double n = static_cast<double>(m.examples);
    m.bleu1 /= n;
    m.bleu2 /= n;
    m.meteor /= n;
  }
  if (m.coverage_examples > 0) m.coverage /= static_cast<double>(m.coverage_examples);
  return m;
}

namespace {

std::string join_premises(const CounterTriple& t) {
  std::string s;
  for (std::size_t i : t.attacked_indices) {
    if (!s.empty()) s += ' ';
    s += t.premises[i];
  }
  return s;
}

ExampleScores score_record(const GeneratedRecord& rec, std::span<const CounterTriple* const> targets,
                           ReferenceMode mode, const StopwordList& stopwords) {
  std::vector<std::string> refs;
  for (const CounterTriple* t : targets)
    refs.push_back(mode == ReferenceMode::full_comment && t->full_comment ? *t->full_comment : t->counter);
  ExampleScores s;
  s.post_id = rec.post_id;
  s.attacked_indices = rec.attacked_indices;
  s.bleu1 = bleu_n(rec.counter, refs, 1);
  s.bleu2 = bleu_n(rec.counter, refs, 2);
  s.meteor = meteor(rec.counter, refs);
  for (const CounterTriple* t : targets) {
    const auto c = weak_premise_coverage(rec.counter, join_premises(*t), stopwords);
    if (c && (!s.coverage || *c > *s.coverage)) s.coverage = c;
  }
  return s;
}

}  // namespace

EvalReport evaluate_run(std::span<const GeneratedRecord> generated, const Corpus& gold, ReferenceMode mode,
                        const StopwordList& stopwords, bool parallel) {
  if (generated.empty()) throw DataError("no generated counters to evaluate");
  EvalReport report;
  report.mode = mode;

  std::vector<const GeneratedRecord*> resolved;
  std::vector<std::vector<const CounterTriple*>> targets;
  for (const auto& rec : generated) {
    auto all = gold.triples_of(rec.post_id);
    if (all.empty()) {
      report.unresolved.push_back(rec.post_id);
      continue;
    }
    std::vector<const CounterTriple*> exact;
    for (const CounterTriple* t : all)
      if (t->attacked_indices == rec.attacked_indices) exact.push_back(t);
    resolved.push_back(&rec);
    targets.push_back(exact.empty() ? std::move(all) : std::move(exact));
  }
  if (static_cast<double>(report.unresolved.size()) > 0.05 * static_cast<double>(generated.size()))
    throw DataError(std::to_string(report.unresolved.size()) + " of " + std::to_string(generated.size()) +
                    " generated records do not resolve to gold triples");

  std::vector<ExampleScores> scores(resolved.size());
  if (parallel) {
    std::vector<std::string> errors(resolved.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(resolved.size()); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      try {
        scores[i] = score_record(*resolved[i], targets[i], mode, stopwords);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) throw DataError(e);
  } else {
    for (std::size_t i = 0; i < resolved.size(); ++i)
      scores[i] = score_record(*resolved[i], targets[i], mode, stopwords);
  }
  std::stable_sort(scores.begin(), scores.end(), [](const ExampleScores& a, const ExampleScores& b) {
    return std::tie(a.post_id, a.attacked_indices) < std::tie(b.post_id, b.attacked_indices);
  });

  for (const auto& s : scores) {
    if (!s.coverage) {
      ++report.coverage_excluded;
      continue;
    }
    const auto bin = std::min(kCoverageBins - 1, static_cast<std::size_t>(*s.coverage * kCoverageBins));
    ++report.coverage_histogram[bin];
  }
  report.per_example = std::move(scores);
  report.aggregates = mean_metrics(report.per_example);
  return report;
}

std::vector<Significance> compare_reports(const EvalReport& a, const EvalReport& b, std::string_view name_a,
                                          std::string_view name_b) {
  using Key = std::pair<std::string, std::vector<std::size_t>>;
  auto index = [](const EvalReport& r) {
    std::map<Key, const ExampleScores*> m;
    for (const auto& e : r.per_example) m[{e.post_id, e.attacked_indices}] = &e;
    return m;
  };
  const auto ia = index(a);
  const auto ib = index(b);
  if (ia.size() != ib.size()) throw DataError("runs cover different numbers of examples");
  for (const auto& [k, _] : ia)
    if (!ib.contains(k)) throw DataError("run '" + std::string(name_b) + "' lacks an example for post " + k.first);

  struct Metric {
    const char* name;
    double ExampleScores::*field;
  };
  const Metric metrics[] = {{"bleu1", &ExampleScores::bleu1},
                            {"bleu2", &ExampleScores::bleu2},
                            {"meteor", &ExampleScores::meteor}};
  std::vector<Significance> out;
  auto run = [&](std::string name, const std::vector<double>& va, const std::vector<double>& vb) {
    Significance s{std::move(name), std::string(name_a), std::string(name_b), std::nullopt, ""};
    try {
      s.test = paired_t_one_tailed(va, vb);
    } catch (const DataError& e) {
      s.note = e.what();
      std::cerr << "warning: " << s.metric << ": " << e.what() << '\n';
    }
    out.push_back(std::move(s));
  };
  for (const Metric& m : metrics) {
    std::vector<double> va, vb;
    for (const auto& [k, ea] : ia) {
      va.push_back(ea->*m.field);
      vb.push_back(ib.at(k)->*m.field);
    }
    run(m.name, va, vb);
  }
  std::vector<double> ca, cb;
  for (const auto& [k, ea] : ia) {
    const ExampleScores* eb = ib.at(k);
    if (ea->coverage && eb->coverage) {
      ca.push_back(*ea->coverage);
      cb.push_back(*eb->coverage);
    }
  }
  run("coverage", ca, cb);
  return out;
}

// ---------------------------------------------------------------------------

json EvalReport::to_json() const {
  json examples = json::array();
  for (const auto& e : per_example) {
    json j = {{"post_id", e.post_id},
              {"attacked_indices", e.attacked_indices},
              {"bleu1", e.bleu1},
              {"bleu2", e.bleu2},
              {"meteor", e.meteor}};
    j["coverage"] = e.coverage ? json(*e.coverage) : json(nullptr);
    examples.push_back(std::move(j));
  }
  json sig = json::array();
  for (const auto& s : significance) {
    json j = {{"metric", s.metric}, {"system_a", s.system_a}, {"system_b", s.system_b}};
    if (s.test) {
      j["t"] = s.test->t;
      j["p"] = s.test->p;
      j["df"] = s.test->df;
    } else {
      j["t"] = nullptr;
      j["p"] = nullptr;
      j["degenerate"] = true;
      j["note"] = s.note;
    }
    sig.push_back(std::move(j));
  }
  return {{"mode", std::string(to_string(mode))},
          {"aggregates",
           {{std::string(to_string(mode)),
             {{"bleu1", aggregates.bleu1},
              {"bleu2", aggregates.bleu2},
              {"meteor", aggregates.meteor},
              {"coverage", aggregates.coverage},
              {"examples", aggregates.examples},
              {"coverage_examples", aggregates.coverage_examples}}}}},
          {"coverage_histogram", coverage_histogram},
          {"coverage_excluded", coverage_excluded},
          {"unresolved", unresolved},
          {"significance", std::move(sig)},
          {"per_example", std::move(examples)}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  try {
    r.mode = parse_reference_mode(j.at("mode").get<std::string>());
    for (const auto& e : j.at("per_example")) {
      ExampleScores s;
      s.post_id = e.at("post_id").get<std::string>();
      s.attacked_indices = e.at("attacked_indices").get<std::vector<std::size_t>>();
      s.bleu1 = e.at("bleu1").get<double>();
      s.bleu2 = e.at("bleu2").get<double>();
      s.meteor = e.at("meteor").get<double>();
      if (!e.at("coverage").is_null()) s.coverage = e.at("coverage").get<double>();
      r.per_example.push_back(std::move(s));
    }
    r.coverage_histogram = j.at("coverage_histogram").get<std::array<std::size_t, kCoverageBins>>();
    r.coverage_excluded = j.at("coverage_excluded").get<std::size_t>();
    r.unresolved = j.at("unresolved").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  r.aggregates = mean_metrics(r.per_example);
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << std::fixed;
  out << "reference mode: " << to_string(mode) << "  examples: " << aggregates.examples
      << "  unresolved: " << unresolved.size() << "  coverage excluded: " << coverage_excluded << '\n';
  out << std::left << std::setw(10) << "metric" << std::right << std::setw(12) << "mean" << '\n';
  out << std::left << std::setw(10) << "BLEU-1" << std::right << std::setw(12) << std::setprecision(3)
      << aggregates.bleu1 << '\n';
  out << std::left << std::setw(10) << "BLEU-2" << std::right << std::setw(12) << std::setprecision(3)
      << aggregates.bleu2 << '\n';
  out << std::left << std::setw(10) << "METEOR" << std::right << std::setw(12) << std::setprecision(4)
      << aggregates.meteor << '\n';
  out << std::left << std::setw(10) << "coverage" << std::right << std::setw(12) << std::setprecision(4)
      << aggregates.coverage << '\n';
  if (!significance.empty()) {
    out << '\n'
        << std::left << std::setw(10) << "metric" << std::setw(24) << "a > b" << std::right << std::setw(10) << "t"
        << std::setw(10) << "p" << '\n';
    for (const auto& s : significance) {
      out << std::left << std::setw(10) << s.metric << std::setw(24) << (s.system_a + " > " + s.system_b)
          << std::right;
      if (s.test)
        out << std::setw(10) << std::setprecision(3) << s.test->t << std::setw(10) << std::setprecision(4)
            << s.test->p << '\n';
      else
        out << std::setw(20) << "degenerate" << '\n';
    }
  }
  return out.str();
}

std::string EvalReport::histogram_csv() const {
  std::ostringstream out;
  out << "bin_start,bin_end,count\n";
  for (std::size_t b = 0; b < kCoverageBins; ++b)
    out << static_cast<double>(b) / kCoverageBins << ',' << static_cast<double>(b + 1) / kCoverageBins << ','
        << coverage_histogram[b] << '\n';
  return out.str();
}

}  // namespace undermine
