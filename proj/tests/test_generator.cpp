#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "undermine/errors.hpp"
#include "undermine/generator.hpp"

using namespace undermine;

namespace {

constexpr int ARG = static_cast<int>(TokenType::arg);
constexpr int WEAK = static_cast<int>(TokenType::weak);
constexpr int COUNTER = static_cast<int>(TokenType::counter);

CounterTriple fixture_triple() {
  CounterTriple t;
  t.post_id = "p";
  t.claim = "c1 c2";
  t.premises = {"a1 a2 a3 a4", "b1 b2 b3 b4", "d1 d2 d3 d4"};
  t.attacked_indices = {1};
  t.counter = "no b2 b3";
  return t;
}

Vocabulary fixture_vocab() {
  const std::vector<std::string> texts = {"c1 c2 a1 a2 a3 a4 b1 b2 b3 b4 d1 d2 d3 d4 no"};
  return Vocabulary::build(texts);
}

GeneratorModelConfig tiny(GeneratorVariant v = GeneratorVariant::without_weak_token) {
  GeneratorModelConfig c;
  c.max_len = 48;
  c.hidden = 16;
  c.layers = 1;
  c.heads = 2;
  c.variant = v;
  return c;
}

}  // namespace

TEST_CASE("sequence layout and token types") {
  const auto t = fixture_triple();
  const auto vocab = fixture_vocab();
  const auto s = build_sequence(t, t.counter, 1, GeneratorVariant::without_weak_token, vocab, 64);
  // [bos] c1 c2 | a1..a4 | b1..b4 | d1..d4 [counter] no b2 b3 [eos]
  REQUIRE(s.size() == 1 + 2 + 12 + 1 + 3 + 1);
  CHECK(s.token_ids.front() == Vocabulary::kBos);
  CHECK(s.token_ids.back() == Vocabulary::kEos);
  CHECK(std::count(s.token_ids.begin(), s.token_ids.end(), Vocabulary::kCounter) == 1);
  CHECK(s.counter_start == 15);
  CHECK(s.token_ids[s.counter_start] == Vocabulary::kCounter);
  for (std::size_t p = 0; p < s.size(); ++p) {
    CAPTURE(p);
    if (p >= 7 && p < 11) CHECK(s.token_types[p] == WEAK);
    else if (p >= s.counter_start) CHECK(s.token_types[p] == COUNTER);
    else CHECK(s.token_types[p] == ARG);
  }
  CHECK(s.lm_targets[s.counter_start] == vocab.id("no"));
  CHECK(s.lm_targets.back() == -1);

  SUBCASE("with_weak_token wraps the attacked span") {
    const auto w = build_sequence(t, t.counter, 1, GeneratorVariant::with_weak_token, vocab, 64);
    CHECK(w.size() == s.size() + 2);
    CHECK(w.token_ids[7] == Vocabulary::kWeak);
    CHECK(w.token_ids[12] == Vocabulary::kWeak);
    for (std::size_t p = 7; p <= 12; ++p) CHECK(w.token_types[p] == WEAK);
  }
  SUBCASE("counter baseline has no weak type and the same ids") {
    const auto b = counter_baseline_sequence(t, t.counter, vocab, 64);
    CHECK(std::count(b.token_types.begin(), b.token_types.end(), WEAK) == 0);
    CHECK(b.token_ids == s.token_ids);
    CHECK(b.counter_start == s.counter_start);
  }
  SUBCASE("empty attacked set types the argument ARG") {
    auto none = t;
    none.attacked_indices.clear();
    const auto n = build_sequence(none, t.counter, 1, GeneratorVariant::with_weak_token, vocab, 64);
    CHECK(std::count(n.token_types.begin(), n.token_types.end(), WEAK) == 0);
  }
  SUBCASE("toggling an attacked premise changes only its positions") {
    auto more = t;
    more.attacked_indices = {1, 2};
    const auto m = build_sequence(more, t.counter, 1, GeneratorVariant::without_weak_token, vocab, 64);
    CHECK(m.token_ids == s.token_ids);
    for (std::size_t p = 0; p < s.size(); ++p) CHECK((m.token_types[p] != s.token_types[p]) == (p >= 11 && p < 15));
  }
  SUBCASE("context limits") {
    const auto cut = build_sequence(t, t.counter, 1, GeneratorVariant::without_weak_token, vocab, 18);
    CHECK(cut.size() == 18);
    CHECK(cut.token_ids.back() == Vocabulary::kEos);
    CHECK_THROWS_AS(build_sequence(t, t.counter, 1, GeneratorVariant::without_weak_token, vocab, 16), ModelError);
  }
}

TEST_CASE("distractors") {
  const auto t = fixture_triple();
  ArgumentPost post;
  post.id = "p";
  post.claim = t.claim;
  post.premises = t.premises;
  post.weak_indices = {1};
  const auto vocab = fixture_vocab();
  std::mt19937_64 r1(4), r2(4);
  const auto d1 = make_distractor(t, post, r1, GeneratorVariant::without_weak_token, vocab, 64);
  const auto d2 = make_distractor(t, post, r2, GeneratorVariant::without_weak_token, vocab, 64);
  CHECK(d1.token_ids == d2.token_ids);
  CHECK(d1.cls_label == 0);
  CHECK(std::find(post.premises.begin(), post.premises.end(), d1.counter_text) != post.premises.end());

  const Corpus corpus({post}, {t});
  const auto triples = corpus.triples_in(Split::train);
  const auto data = augment_with_distractors(triples, corpus, GeneratorVariant::without_weak_token, vocab, 64, 1);
  CHECK(data.size() == 2 * triples.size());
  CHECK(data[0].cls_label == 1);
  CHECK(data[1].cls_label == 0);
}

TEST_CASE("joint loss") {
  const auto t = fixture_triple();
  const Vocabulary vocab = fixture_vocab();
  GeneratorModel model(vocab, tiny(), 2);

  SUBCASE("a flat LM head gives ln V per counter token") {
    model.lm_weight().value.fill(0.0);
    model.lm_bias().value.fill(0.0);
    const auto seq = model.sequence_for(t, t.counter, 1);
    const TrainingSequence batch[] = {seq};
    const JointLoss l = joint_loss(model, batch);
    CHECK(l.lm == doctest::Approx(std::log(static_cast<double>(vocab.size()))).epsilon(1e-12));
    CHECK(l.lm_tokens == 4);  // no b2 b3 [eos]
    CHECK(l.total == l.lm + l.cls);
  }
  SUBCASE("V = 11 closed form") {
    const std::vector<std::string> texts = {"c1 c2 b1"};
    const Vocabulary small = Vocabulary::build(texts);
    REQUIRE(small.size() == 11);
    GeneratorModel m(small, tiny(), 3);
    m.lm_weight().value.fill(0.0);
    m.lm_bias().value.fill(0.0);
    CounterTriple st;
    st.post_id = "s";
    st.claim = "c1";
    st.premises = {"c2 b1"};
    st.attacked_indices = {0};
    st.counter = "b1 c1";
    const TrainingSequence batch[] = {m.sequence_for(st, st.counter, 1)};
    CHECK(joint_loss(m, batch).lm == doctest::Approx(2.3979).epsilon(1e-4));
  }
  SUBCASE("argument targets never enter L1") {
    auto seq = model.sequence_for(t, t.counter, 1);
    const TrainingSequence a[] = {seq};
    const double before = joint_loss(model, a).lm;
    for (std::size_t p = 0; p < seq.counter_start; ++p) seq.lm_targets[p] = vocab.id("d4");
    const TrainingSequence b[] = {seq};
    CHECK(joint_loss(model, b).lm == before);
  }
  SUBCASE("distractors contribute only to L2") {
    const auto genuine = model.sequence_for(t, t.counter, 1);
    const auto distractor = model.sequence_for(t, t.premises[0], 0);
    const TrainingSequence g1[] = {genuine};
    const TrainingSequence g2[] = {genuine, distractor};
    CHECK(joint_loss(model, g2).lm == doctest::Approx(joint_loss(model, g1).lm).epsilon(1e-12));
    CHECK(joint_loss(model, g2).genuine == 1);
    const TrainingSequence d[] = {distractor};
    const JointLoss only = joint_loss(model, d);
    CHECK(only.lm == 0.0);
    CHECK(only.lm_tokens == 0);
  }
}

TEST_CASE("weak row of the type table") {
  const auto t = fixture_triple();
  const Vocabulary vocab = fixture_vocab();

  SUBCASE("zeroed table makes WEAK marking invisible") {
    GeneratorModel model(vocab, tiny(), 5);
    model.token_type_table().value.fill(0.0);
    auto none = t;
    none.attacked_indices.clear();
    const auto a = model.sequence_for(t, t.counter, 1);
    const auto b = model.sequence_for(none, t.counter, 1);
    nn::Graph g(false);
    const auto fa = model.forward(g, a.token_ids, a.token_types);
    const auto fb = model.forward(g, b.token_ids, b.token_types);
    const auto& la = g.value(fa.lm_logits);
    const auto& lb = g.value(fb.lm_logits);
    double delta = 0.0;
    for (std::size_t i = 0; i < la.size(); ++i) delta = std::max(delta, std::abs(la.values()[i] - lb.values()[i]));
    CHECK(delta < 1e-6);
  }
  SUBCASE("one step moves the WEAK row only when WEAK positions exist") {
    for (bool weak : {true, false}) {
      GeneratorModel model(vocab, tiny(), 6);
      auto tr = t;
      if (!weak) tr.attacked_indices.clear();
      const nn::Matrix before = model.token_type_table().value;
      const TrainingSequence batch[] = {model.sequence_for(tr, tr.counter, 1), model.sequence_for(tr, t.premises[0], 0)};
      nn::Graph g;
      g.backward(joint_loss(g, model, batch).total);
      nn::Adam({.lr = 1e-2}).step(model.parameters());
      const auto& after = model.token_type_table().value;
      bool changed = false;
      for (std::size_t c = 0; c < after.cols(); ++c) changed |= after(WEAK, c) != before(WEAK, c);
      CHECK(changed == weak);
    }
  }
}

TEST_CASE("joint loss gradient matches finite differences") {
  const auto t = fixture_triple();
  GeneratorModel model(fixture_vocab(), tiny(), 12);
  model.parameters().init_normal(12, 0.3);
  const TrainingSequence batch[] = {model.sequence_for(t, t.counter, 1), model.sequence_for(t, t.premises[2], 0)};
  model.parameters().zero_grad();
  {
    nn::Graph g;
    g.backward(joint_loss(g, model, batch).total);
  }
  std::mt19937_64 rng(1);
  for (auto& p : model.parameters()) {
    for (int probe = 0; probe < 3; ++probe) {
      const std::size_t i = rng() % p->value.size();
      double& x = p->value.values()[i];
      const double saved = x;
      x = saved + 1e-5;
      const double up = joint_loss(model, batch).total;
      x = saved - 1e-5;
      const double down = joint_loss(model, batch).total;
      x = saved;
      CAPTURE(p->name);
      CHECK(p->grad.values()[i] == doctest::Approx((up - down) / 2e-5).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("training is deterministic and epochs = 0 is a no-op") {
  const Corpus corpus = synth_corpus(2, 12, default_synth_vocabulary(), {.valid_fraction = 0, .test_fraction = 0});
  const auto triples = corpus.triples_in(Split::train);
  auto cfg = tiny();
  cfg.max_len = 96;
  auto make = [&] { return GeneratorModel(build_generator_vocabulary(corpus), cfg, 7); };
  GeneratorModel a = make(), b = make(), c = make();
  GeneratorTrainConfig tc;
  tc.epochs = 2;
  std::size_t calls = 0;
  tc.on_epoch = [&](std::size_t, const JointLoss&, const GeneratorModel&) { ++calls; };
  const auto report = train_generator(triples, corpus, a, tc);
  tc.on_epoch = nullptr;
  train_generator(triples, corpus, b, tc);
  CHECK(calls == 2);
  CHECK(report.sequences == 2 * triples.size());
  CHECK(a.parameters().same_values(b.parameters()));
  tc.epochs = 0;
  train_generator(triples, corpus, c, tc);
  CHECK(c.parameters().same_values(make().parameters()));
  CHECK_THROWS_AS(train_generator({}, corpus, c, tc), DataError);
}

TEST_CASE("sampling distribution") {
  const double logits[] = {2.0, 1.0, 0.0, -1.0};
  SamplingConfig s;
  s.top_p = 1.0;
  s.top_k = 2;
  const auto p = truncated_distribution(logits, s);
  const double z = std::exp(2.0) + std::exp(1.0);
  CHECK(p[0] == doctest::Approx(std::exp(2.0) / z));
  CHECK(p[1] == doctest::Approx(std::exp(1.0) / z));
  CHECK(p[2] == 0.0);
  CHECK(p[3] == 0.0);

  SUBCASE("nucleus keeps the smallest prefix reaching top_p") {
    SamplingConfig n;
    n.top_k = 0;
    n.top_p = 0.5;
    const auto q = truncated_distribution(logits, n);
    CHECK(q[0] == 1.0);
  }
  SUBCASE("temperature sharpens") {
    SamplingConfig cold;
    cold.top_k = 0;
    cold.top_p = 1.0;
    cold.temperature = 0.5;
    CHECK(truncated_distribution(logits, cold)[0] > truncated_distribution(logits, {.top_k = 0, .top_p = 1.0})[0]);
  }
  SUBCASE("ties at the top-k boundary keep the lower id") {
    const double tied[] = {1.0, 3.0, 1.0};
    const auto q = truncated_distribution(tied, {.top_k = 2, .top_p = 1.0});
    CHECK(q[0] > 0.0);
    CHECK(q[2] == 0.0);
  }
  SUBCASE("invalid configs") {
    CHECK_THROWS_AS(truncated_distribution(logits, {.temperature = 0.0}), ConfigError);
    CHECK_THROWS_AS(truncated_distribution(logits, {.top_p = 0.0}), ConfigError);
    CHECK_THROWS_AS(truncated_distribution(logits, {.min_tokens = 5, .max_tokens = 4}), ConfigError);
  }
}

TEST_CASE("generation bounds, determinism and persistence") {
  const Corpus corpus = synth_corpus(2, 10, default_synth_vocabulary(), {.valid_fraction = 0, .test_fraction = 0});
  auto cfg = tiny();
  cfg.max_len = 128;
  GeneratorModel model(build_generator_vocabulary(corpus), cfg, 8);
  const auto& t = corpus.triples().front();
  SamplingConfig s{.top_k = 50, .top_p = 0.95, .temperature = 1.0, .min_tokens = 5, .max_tokens = 20, .seed = 3};
  const auto a = generate_counter(model, t.claim, t.premises, t.attacked_indices, s);
  const auto b = generate_counter(model, t.claim, t.premises, t.attacked_indices, s);
  CHECK(a.text == b.text);
  CHECK(a.tokens.size() >= 5);
  CHECK(a.tokens.size() <= 20);
  for (TokenId id : a.tokens) CHECK(id >= Vocabulary::kFirstWord);

  s.max_tokens = 1000;
  CHECK_THROWS_AS(generate_counter(model, t.claim, t.premises, t.attacked_indices, s), ModelError);

  const auto dir = std::filesystem::temp_directory_path() / "undermine_gen_ckpt";
  std::filesystem::remove_all(dir);
  model.save(dir);
  const GeneratorModel back = GeneratorModel::load(dir);
  CHECK(back.parameters().same_values(model.parameters()));
  CHECK(back.config().variant == model.config().variant);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(GeneratorModel::load(dir), ModelError);

  const auto rec = generation_record("p", t.attacked_indices, "x y", 9);
  CHECK(rec.at("seed") == 9);
  CHECK(rec.at("counter") == "x y");
}

TEST_CASE("variant names") {
  CHECK(parse_generator_variant("w/") == GeneratorVariant::with_weak_token);
  CHECK(parse_generator_variant("without") == GeneratorVariant::without_weak_token);
  CHECK(parse_generator_variant("counter-baseline") == GeneratorVariant::counter_baseline);
  CHECK_THROWS_AS(parse_generator_variant("both"), ConfigError);
}
