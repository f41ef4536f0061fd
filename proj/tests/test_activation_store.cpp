#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <fstream>
#include <random>

#include "test_support.hpp"
#include "typolab/activation_store.hpp"
#include "typolab/error.hpp"

using namespace typolab;
using testing_support::random_dump;
using testing_support::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kPrecondition;
}

DumpRecordMeta meta_for(const std::string& file, std::size_t span) {
  DumpRecordMeta m;
  m.sample_id = "s";
  m.file = file;
  m.prompt_token_count = span + 3;
  m.target_span = {3, 3 + span};
  return m;
}

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("file size follows the layout arithmetic") {
  const auto d = ActivationDump::zeros(4, 4, 64, 12, 1000);
  CHECK(kDumpHeaderBytes == 48);
  CHECK(d.file_bytes() == 48 + 4 * (5 * 12 * 64 + 4 * 4 * 12 + 1000));
}

TEST_CASE("FNV-1a 64 reference values") {
  CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
  const unsigned char a[] = {'a'};
  CHECK(fnv1a64(a) == 0xaf63dc4c8601ec8cULL);
  const unsigned char foobar[] = {'f', 'o', 'o', 'b', 'a', 'r'};
  CHECK(fnv1a64(foobar) == 0x85944171f73967e8ULL);
}

TEST_CASE("serialize writes the header fields little-endian") {
  std::mt19937_64 eng(1);
  const auto d = random_dump(eng, 2, 3, 4, 5, 6);
  const auto bytes = serialize_dump(d);
  REQUIRE(bytes.size() == d.file_bytes());
  CHECK(std::memcmp(bytes.data(), "ACTD", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  CHECK(bytes[16] == 3);
  CHECK(bytes[24] == 4);
  CHECK(bytes[32] == 5);
  CHECK(bytes[40] == 6);
  float first = 0;
  std::memcpy(&first, bytes.data() + 48, 4);
  CHECK(first == d.hidden[0]);
}

TEST_CASE("write then read is bit-identical") {
  TempDir dir("store_rt");
  std::mt19937_64 eng(2);
  for (int i = 0; i < 20; ++i) {
    const auto d = random_dump(eng, 3, 2, 8, 1 + i % 4, 50);
    auto meta = meta_for("d" + std::to_string(i) + ".actd", d.span_len);
    write_dump(meta, d, dir.path());
    CHECK(meta.byte_length == d.file_bytes());
    const auto back = read_dump(meta, dir.path());
    CHECK(back.hidden == d.hidden);
    CHECK(back.attn_rows == d.attn_rows);
    CHECK(back.next_token_dist == d.next_token_dist);
  }
}

TEST_CASE("corruption is rejected with the named error") {
  TempDir dir("store_bad");
  std::mt19937_64 eng(3);
  const auto d = random_dump(eng, 2, 2, 4, 3, 20);
  auto meta = meta_for("x.actd", 3);
  write_dump(meta, d, dir.path());
  const auto path = dir.path() / "x.actd";
  const auto good = slurp(path);

  SUBCASE("flipped payload byte -> checksum") {
    auto bad = good;
    bad[100] ^= 0x01;
    spit(path, bad);
    CHECK(code_of([&] { read_dump(meta, dir.path()); }) == ErrorCode::kChecksumMismatch);
  }
  SUBCASE("truncated file -> shape") {
    spit(path, {good.begin(), good.end() - 4});
    CHECK(code_of([&] { read_dump(meta, dir.path()); }) == ErrorCode::kShapeMismatch);
  }
  SUBCASE("span disagreeing with the manifest -> shape") {
    auto m = meta;
    m.target_span = {3, 5};
    CHECK(code_of([&] { read_dump(m, dir.path()); }) == ErrorCode::kShapeMismatch);
  }
  SUBCASE("bad magic -> format") {
    auto bad = good;
    bad[0] = 'X';
    spit(path, bad);
    CHECK(code_of([&] { read_dump(meta, dir.path()); }) == ErrorCode::kFormat);
  }
  SUBCASE("attention slice summing to 1.2 -> validation") {
    auto e = d;
    e.attn_row(0, 0)[0] = 0.4f;
    e.attn_row(0, 0)[1] = 0.4f;
    e.attn_row(0, 0)[2] = 0.4f;
    CHECK(code_of([&] { validate_dump(e); }) == ErrorCode::kValidation);
    // Written without validation, then read back: rejected after the checksum passes.
    auto bytes = serialize_dump(e);
    spit(path, bytes);
    auto m = meta;
    m.byte_length = bytes.size();
    m.checksum = fnv1a64(bytes);
    CHECK(code_of([&] { read_dump(m, dir.path()); }) == ErrorCode::kValidation);
  }
}

TEST_CASE("validate_dump invariants") {
  std::mt19937_64 eng(4);
  const auto d = random_dump(eng, 2, 2, 4, 3, 20);
  validate_dump(d);
  auto e = d;
  e.next_token_dist[0] += 0.01f;
  CHECK(code_of([&] { validate_dump(e); }) == ErrorCode::kValidation);
  e = d;
  e.attn_rows[0] = -0.01f;
  CHECK(code_of([&] { validate_dump(e); }) == ErrorCode::kValidation);
  e = d;
  e.hidden[5] = std::nanf("");
  CHECK(code_of([&] { validate_dump(e); }) == ErrorCode::kValidation);
  e = d;
  e.hidden.pop_back();
  CHECK(code_of([&] { validate_dump(e); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("manifest round trip and directory validation") {
  TempDir dir("store_manifest");
  std::mt19937_64 eng(5);
  DumpManifest man;
  man.model_name = "toy";
  man.n_layers = 2;
  man.n_heads = 2;
  man.d_model = 4;
  man.vocab_size = 20;
  man.metadata["prompt_template"] = "raw";
  for (int i = 0; i < 4; ++i) {
    const auto d = random_dump(eng, 2, 2, 4, 2, 20);
    auto meta = meta_for("r" + std::to_string(i) + ".actd", 2);
    meta.sr = 0.25 * i;
    meta.role = i == 0 ? "baseline" : "sample";
    write_dump(meta, d, dir.path());
    man.records.push_back(meta);
  }
  commit_manifest(man, dir.path());
  const auto back = load_manifest(dir.path());
  CHECK(to_json(back).dump() == to_json(man).dump());
  CHECK(validate_directory(dir.path()).ok());

  std::filesystem::remove(dir.path() / "r2.actd");
  const auto report = validate_directory(dir.path());
  CHECK(report.records == 4);
  CHECK(report.valid == 3);
  REQUIRE(report.issues.size() == 1);
  CHECK(report.issues[0].file == "r2.actd");

  auto j = nlohmann::json::parse(to_json(man).dump());
  j["records"][1]["file"] = "r0.actd";
  CHECK(code_of([&] { manifest_from_json(j); }) == ErrorCode::kValidation);
  j = nlohmann::json::parse(to_json(man).dump());
  j["records"][1]["role"] = "other";
  CHECK(code_of([&] { manifest_from_json(j); }) == ErrorCode::kValidation);
}
