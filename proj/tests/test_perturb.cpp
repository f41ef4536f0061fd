#include <doctest.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "oracles.hpp"
#include "test_support.hpp"
#include "typolab/error.hpp"
#include "typolab/perturb.hpp"

using namespace typolab;
using testing_support::kFrancoSentence;

namespace {

TargetCandidate franco_candidate() {
  TargetCandidate c;
  c.sample_id = "franco";
  c.text = split_words(kFrancoSentence);
  c.target_index = 4;
  c.target_word = "relationship";
  return c;
}

std::string sorted(std::string s) {
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

TEST_CASE("scramble of abcdef at SR=1 seed 42 matches the shuffle oracle") {
  const auto r = scramble_word("abcdef", 1.0, 42);
  const std::string expected = oracle::scramble("abcdef", 1.0, 42);
  REQUIRE(!expected.empty());
  CHECK(r.scrambled == expected);
  CHECK(r.scrambled.front() == 'a');
  CHECK(r.scrambled.back() == 'f');
  CHECK(r.scrambled != "abcdef");
  CHECK(r.spec.n_scrambled == 4);
  CHECK(r.spec.substring_start == 0);
}

TEST_CASE("scramble agrees with the oracle across words, levels and seeds") {
  const std::vector<std::string> words = {"relationship", "unexpectedly", "photographer",
                                          "abcdefghij", "government"};
  for (const auto& w : words)
    for (double sr : {0.25, 0.5, 0.75, 1.0})
      for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::string expected = oracle::scramble(w, sr, seed);
        try {
          CHECK(scramble_word(w, sr, seed).scrambled == expected);
        } catch (const Error& e) {
          CHECK(e.code() == ErrorCode::kDegenerateWord);
          CHECK(expected.empty());
        }
      }
}

TEST_CASE("relationship at SR=0.5 permutes a 5-character window") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = scramble_word("relationship", 0.5, seed);
    CHECK(r.spec.n_candidate == 10);
    CHECK(r.spec.n_scrambled == 5);
    CHECK(r.scrambled.size() == 12);
    CHECK(sorted(r.scrambled) == sorted("relationship"));
    const std::size_t b = 1 + r.spec.substring_start;
    CHECK(r.scrambled.substr(0, b) == std::string("relationship").substr(0, b));
    CHECK(r.scrambled.substr(b + 5) == std::string("relationship").substr(b + 5));
    CHECK(is_valid_scramble("relationship", r.scrambled, 5));
  }
  CHECK(is_valid_scramble("relationship", "relatinioshp", 5));
}

TEST_CASE("SR=0 is the identity") {
  const auto r = scramble_word("relationship", 0.0, 9);
  CHECK(r.scrambled == "relationship");
  CHECK(r.spec.n_scrambled == 0);
}

TEST_CASE("scramble preconditions and degenerate words") {
  CHECK_THROWS_AS(scramble_word("abc", 0.5, 1), Error);
  CHECK_THROWS_AS(scramble_word("abcd", 1.5, 1), Error);
  try {
    scramble_word("baaaab", 1.0, 1);
    FAIL("expected DegenerateWord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateWord);
  }
  try {
    scramble_word("abcde", 0.25, 1);  // round-half-up(0.75) = 1 character window
    FAIL("expected DegenerateWord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateWord);
  }
}

TEST_CASE("is_valid_scramble rejects anchor moves, foreign letters and wide changes") {
  CHECK_FALSE(is_valid_scramble("relationship", "elationshipr", 10));
  CHECK_FALSE(is_valid_scramble("relationship", "relationshix", 10));
  CHECK_FALSE(is_valid_scramble("relationship", "rlaetionsihp", 2));
  CHECK_FALSE(is_valid_scramble("relationship", "relationship", 3));
  CHECK(is_valid_scramble("relationship", "relationship", 0));
}

TEST_CASE("mask_context matches the masking oracle and its count rule") {
  const auto text = split_words(kFrancoSentence);
  for (double ci : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto m = mask_context(text, 4, ci, seed);
      CHECK(m.spec.masked_indices == oracle::mask_positions(text.size(), 4, ci, seed));
      CHECK(m.spec.masked_indices.size() == 6 - oracle::half_up(ci, 6));
      CHECK(m.masked[4] == "relationship");
      CHECK(m.masked.size() == text.size());
    }
}

TEST_CASE("CI=1 is identity and CI=0 masks every context word") {
  const auto text = split_words(kFrancoSentence);
  const auto full = mask_context(text, 4, 1.0, 3);
  CHECK(full.masked == text);
  CHECK(full.spec.masked_indices.empty());
  const auto none = mask_context(text, 4, 0.0, 3);
  for (std::size_t i = 0; i < text.size(); ++i)
    CHECK(none.masked[i] == (i == 4 ? text[i] : std::string("_")));
}

TEST_CASE("CI=0.5 on the Franco sentence masks three of six context words") {
  const auto text = split_words(kFrancoSentence);
  const auto m = mask_context(text, 4, 0.5, 11);
  CHECK(m.spec.n_total_context == 6);
  CHECK(m.spec.n_preserved == 3);
  CHECK(std::count(m.masked.begin(), m.masked.end(), "_") == 3);
}

TEST_CASE("masks are nested across CI levels for one seed") {
  const auto text = split_words("a b c d e f g h i j k l m n o p q r s t");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<std::size_t> prev;
    for (double ci : {1.0, 0.75, 0.5, 0.25, 0.0}) {
      const auto cur = mask_context(text, 7, ci, seed).spec.masked_indices;
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}

TEST_CASE("single-word text has no context") {
  try {
    mask_context({"relationship"}, 0, 0.5, 1);
    FAIL("expected NoContext");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoContext);
  }
  CHECK(mask_context({"relationship"}, 0, 1.0, 1).masked.size() == 1);
}

TEST_CASE("build_matrix covers 3 seeds x 5 SR x 5 CI with distinct keys") {
  const std::vector<double> levels = {0, 0.25, 0.5, 0.75, 1};
  std::vector<SkipRecord> skips;
  const auto samples = build_matrix(franco_candidate(), levels, levels, {1, 2, 3}, &skips);
  CHECK(samples.size() + skips.size() == 75);
  std::set<std::tuple<double, double, std::uint64_t>> keys;
  for (const auto& s : samples) {
    keys.insert({s.sr(), s.ci(), s.seed()});
    CHECK(validate_sample(s).empty());
  }
  CHECK(keys.size() == samples.size());
}

TEST_CASE("build_matrix with SR=0 and CI=1 reproduces the sentence") {
  const auto samples = build_matrix(franco_candidate(), {0}, {1}, {5});
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].prompt() == kFrancoSentence);
  CHECK(samples[0].baseline_prompt() == kFrancoSentence);
}

TEST_CASE("one scramble is shared by all CI levels of an (SR, seed)") {
  const std::vector<double> ci = {0, 0.5, 1};
  const auto samples = build_matrix(franco_candidate(), {0.5}, ci, {8});
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].scrambled_word == samples[1].scrambled_word);
  CHECK(samples[1].scrambled_word == samples[2].scrambled_word);
}

TEST_CASE("target_range points at the scrambled core inside the prompt") {
  TargetCandidate c = franco_candidate();
  c.text[4] = "(relationship),";
  const auto samples = build_matrix(c, {0.75}, {0.5}, {2});
  REQUIRE(samples.size() == 1);
  const auto& s = samples[0];
  const auto r = s.target_range();
  CHECK(s.prompt().substr(r.start, r.end - r.start) == s.scrambled_word);
  const auto b = s.baseline_range();
  CHECK(s.baseline_prompt().substr(b.start, b.end - b.start) == "relationship");
}

TEST_CASE("validate_sample flags tampering") {
  auto s = build_matrix(franco_candidate(), {0.5}, {0.5}, {4}).at(0);
  CHECK(validate_sample(s).empty());
  auto t = s;
  t.scrambled_word = "relationship";
  CHECK_FALSE(validate_sample(t).empty());
  t = s;
  t.mask_spec.masked_indices.push_back(4);
  CHECK_FALSE(validate_sample(t).empty());
  t = s;
  t.processed_text[0] = "Xuring";
  CHECK_FALSE(validate_sample(t).empty());
}

TEST_CASE("the documented relatinioshp instance passes the sample validator") {
  PerturbedSample s;
  s.sample_id = "franco";
  s.target_word = "relationship";
  s.scrambled_word = "relatinioshp";
  s.target_index = 4;
  s.original_text = split_words(kFrancoSentence);
  s.scramble_spec = {0.5, 10, 5, 5, 0};
  s.mask_spec.ci = 1;
  s.mask_spec.n_total_context = 6;
  s.mask_spec.n_preserved = 6;
  s.processed_text = s.original_text;
  s.processed_text[4] = "relatinioshp";
  CHECK(validate_sample(s).empty());
}

TEST_CASE("PerturbedSample JSON round trip") {
  for (const auto& s : build_matrix(franco_candidate(), {0, 0.5}, {0.25, 1}, {1})) {
    const auto back = sample_from_json(nlohmann::json::parse(to_json(s).dump()));
    CHECK(to_json(back).dump() == to_json(s).dump());
  }
  CHECK_THROWS_AS(sample_from_json(nlohmann::json::parse("{\"sample_id\": 3}")), Error);
}
