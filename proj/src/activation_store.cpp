#include "typolab/activation_store.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <algorithm>
#include <iterator>
#include <set>

#include "typolab/error.hpp"

namespace typolab {

namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const unsigned char> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::span<const unsigned char> b, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
  return v;
}

void put_floats(std::vector<unsigned char>& out, const std::vector<float>& xs) {
  for (float x : xs) put_u32(out, std::bit_cast<std::uint32_t>(x));
}

std::size_t get_floats(std::span<const unsigned char> b, std::size_t off, std::vector<float>& xs) {
  for (float& x : xs) {
    x = std::bit_cast<float>(get_u32(b, off));
    off += 4;
  }
  return off;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16 || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    throw Error(ErrorCode::kFormat, "checksum '" + s + "' is not 16 hex digits");
  return std::stoull(s, nullptr, 16);
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomic(const fs::path& path, std::span<const unsigned char> bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

ActivationDump ActivationDump::zeros(std::size_t n_layers, std::size_t n_heads,
                                     std::size_t d_model, std::size_t span_len,
                                     std::size_t vocab_size) {
  ActivationDump d;
  d.n_layers = n_layers;
  d.n_heads = n_heads;
  d.d_model = d_model;
  d.span_len = span_len;
  d.vocab_size = vocab_size;
  d.hidden.assign((n_layers + 1) * span_len * d_model, 0.0f);
  d.attn_rows.assign(n_layers * n_heads * span_len, 0.0f);
  d.next_token_dist.assign(vocab_size, 0.0f);
  return d;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void validate_dump(const ActivationDump& d, const std::string& context) {
  if (d.n_layers == 0 || d.n_heads == 0 || d.d_model == 0 || d.span_len == 0 || d.vocab_size == 0)
    throw Error(ErrorCode::kShapeMismatch, context + ": every dimension must be >= 1");
  if (d.hidden.size() != (d.n_layers + 1) * d.span_len * d.d_model)
    throw Error(ErrorCode::kShapeMismatch, context + ": hidden has " +
                                               std::to_string(d.hidden.size()) + " values");
  if (d.attn_rows.size() != d.n_layers * d.n_heads * d.span_len)
    throw Error(ErrorCode::kShapeMismatch, context + ": attn_rows has " +
                                               std::to_string(d.attn_rows.size()) + " values");
  if (d.next_token_dist.size() != d.vocab_size)
    throw Error(ErrorCode::kShapeMismatch, context + ": next_token_dist has " +
                                               std::to_string(d.next_token_dist.size()) + " values");

  auto bad = [&](const char* field, std::size_t offset, const std::string& why) {
    return Error(ErrorCode::kValidation,
                 context + ": " + field + "[" + std::to_string(offset) + "] " + why);
  };

  for (std::size_t i = 0; i < d.hidden.size(); ++i)
    if (!std::isfinite(d.hidden[i])) throw bad("hidden", i, "is not finite");

  for (std::size_t row = 0; row < d.n_layers * d.n_heads; ++row) {
    double sum = 0;
    for (std::size_t t = 0; t < d.span_len; ++t) {
      const std::size_t i = row * d.span_len + t;
      const float a = d.attn_rows[i];
      if (!std::isfinite(a)) throw bad("attn_rows", i, "is not finite");
      if (a < 0.0f || a > 1.0f + kStochasticTolerance) throw bad("attn_rows", i, "outside [0, 1]");
      sum += a;
    }
    if (sum > 1.0 + kStochasticTolerance)
      throw bad("attn_rows", row * d.span_len,
                "row slice sums to " + std::to_string(sum) + " > 1");
  }

  double total = 0;
  for (std::size_t i = 0; i < d.vocab_size; ++i) {
    const float p = d.next_token_dist[i];
    if (!std::isfinite(p)) throw bad("next_token_dist", i, "is not finite");
    if (p < 0.0f) throw bad("next_token_dist", i, "is negative");
    total += p;
  }
  if (std::fabs(total - 1.0) > kStochasticTolerance)
    throw bad("next_token_dist", 0, "sums to " + std::to_string(total) + ", not 1");
}

std::vector<unsigned char> serialize_dump(const ActivationDump& d) {
  std::vector<unsigned char> out;
  out.reserve(d.file_bytes());
  out.insert(out.end(), std::begin(kDumpMagic), std::end(kDumpMagic));
  put_u32(out, kDumpVersion);
  put_u64(out, d.n_layers);
  put_u64(out, d.n_heads);
  put_u64(out, d.d_model);
  put_u64(out, d.span_len);
  put_u64(out, d.vocab_size);
  put_floats(out, d.hidden);
  put_floats(out, d.attn_rows);
  put_floats(out, d.next_token_dist);
  return out;
}

ActivationDump deserialize_dump(std::span<const unsigned char> b, const std::string& context) {
  if (b.size() < kDumpHeaderBytes)
    throw Error(ErrorCode::kShapeMismatch,
                context + ": " + std::to_string(b.size()) + " bytes is shorter than the header");
  if (!std::equal(std::begin(kDumpMagic), std::end(kDumpMagic), b.begin()))
    throw Error(ErrorCode::kFormat, context + ": bad magic at offset 0");
  const std::uint32_t version = get_u32(b, 4);
  if (version != kDumpVersion)
    throw Error(ErrorCode::kFormat, context + ": unsupported format version " +
                                        std::to_string(version) + " at offset 4");
  ActivationDump d;
  d.n_layers = get_u64(b, 8);
  d.n_heads = get_u64(b, 16);
  d.d_model = get_u64(b, 24);
  d.span_len = get_u64(b, 32);
  d.vocab_size = get_u64(b, 40);
  // Guard the size arithmetic against absurd headers before allocating.
  constexpr std::uint64_t kLimit = 1ULL << 32;
  if (d.n_layers >= kLimit || d.n_heads >= kLimit || d.d_model >= kLimit ||
      d.span_len >= kLimit || d.vocab_size >= kLimit || d.file_bytes() != b.size())
    throw Error(ErrorCode::kShapeMismatch,
                context + ": header declares " + std::to_string(d.file_bytes()) +
                    " bytes but the file has " + std::to_string(b.size()));
  d.hidden.resize((d.n_layers + 1) * d.span_len * d.d_model);
  d.attn_rows.resize(d.n_layers * d.n_heads * d.span_len);
  d.next_token_dist.resize(d.vocab_size);
  std::size_t off = kDumpHeaderBytes;
  off = get_floats(b, off, d.hidden);
  off = get_floats(b, off, d.attn_rows);
  get_floats(b, off, d.next_token_dist);
  return d;
}

std::string write_dump(DumpRecordMeta& meta, const ActivationDump& dump, const fs::path& dir) {
  if (meta.file.empty()) throw Error(ErrorCode::kPrecondition, "dump record has no file name");
  validate_dump(dump, meta.file);
  if (meta.target_span.size() != dump.span_len)
    throw Error(ErrorCode::kValidation, meta.file + ": target_span length " +
                                            std::to_string(meta.target_span.size()) +
                                            " != dump span_len " + std::to_string(dump.span_len));
  const auto bytes = serialize_dump(dump);
  write_atomic(dir / meta.file, bytes);
  meta.byte_length = bytes.size();
  meta.checksum = fnv1a64(bytes);
  return meta.file;
}

ActivationDump read_dump(const DumpRecordMeta& meta, const fs::path& dir,
                         const DumpManifest* geometry) {
  const auto bytes = read_bytes(dir / meta.file);
  if (bytes.size() != meta.byte_length)
    throw Error(ErrorCode::kShapeMismatch,
                meta.file + ": manifest declares " + std::to_string(meta.byte_length) +
                    " bytes, file has " + std::to_string(bytes.size()));
  ActivationDump d = deserialize_dump(bytes, meta.file);
  if (d.span_len != meta.target_span.size())
    throw Error(ErrorCode::kShapeMismatch, meta.file + ": span_len " + std::to_string(d.span_len) +
                                               " != manifest target_span length " +
                                               std::to_string(meta.target_span.size()));
  if (geometry && (d.n_layers != geometry->n_layers || d.n_heads != geometry->n_heads ||
                   d.d_model != geometry->d_model || d.vocab_size != geometry->vocab_size))
    throw Error(ErrorCode::kShapeMismatch, meta.file + ": geometry differs from the manifest");
  const std::uint64_t sum = fnv1a64(bytes);
  if (sum != meta.checksum)
    throw Error(ErrorCode::kChecksumMismatch, meta.file + ": checksum " + hex64(sum) +
                                                  " != manifest " + hex64(meta.checksum));
  validate_dump(d, meta.file);
  return d;
}

nlohmann::ordered_json to_json(const DumpManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "typolab-activation-dump";
  j["version"] = kDumpVersion;
  j["model_name"] = m.model_name;
  j["n_layers"] = m.n_layers;
  j["n_heads"] = m.n_heads;
  j["d_model"] = m.d_model;
  j["vocab_size"] = m.vocab_size;
  j["metadata"] = m.metadata;
  auto& recs = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : m.records) {
    nlohmann::ordered_json e;
    e["sample_id"] = r.sample_id;
    e["sr"] = r.sr;
    e["ci"] = r.ci;
    e["seed"] = r.seed;
    e["role"] = r.role;
    e["prompt_token_count"] = r.prompt_token_count;
    e["target_span"] = {{"start", r.target_span.start},
                        {"end", r.target_span.end},
                        {"t_last", r.target_span.t_last()}};
    e["file"] = r.file;
    e["byte_length"] = r.byte_length;
    e["checksum"] = hex64(r.checksum);
    recs.push_back(std::move(e));
  }
  return j;
}

DumpManifest manifest_from_json(const nlohmann::json& j) {
  DumpManifest m;
  try {
    if (j.value("version", 0u) != kDumpVersion)
      throw Error(ErrorCode::kFormat, "unsupported manifest version");
    m.model_name = j.at("model_name").get<std::string>();
    m.n_layers = j.at("n_layers").get<std::size_t>();
    m.n_heads = j.at("n_heads").get<std::size_t>();
    m.d_model = j.at("d_model").get<std::size_t>();
    m.vocab_size = j.at("vocab_size").get<std::size_t>();
    if (j.contains("metadata")) m.metadata = j["metadata"];
    std::set<std::string> files;
    for (const auto& e : j.at("records")) {
      DumpRecordMeta r;
      r.sample_id = e.at("sample_id").get<std::string>();
      r.sr = e.at("sr").get<double>();
      r.ci = e.at("ci").get<double>();
      r.seed = e.at("seed").get<std::uint64_t>();
      r.role = e.value("role", std::string("sample"));
      r.prompt_token_count = e.at("prompt_token_count").get<std::size_t>();
      r.target_span.start = e.at("target_span").at("start").get<std::size_t>();
      r.target_span.end = e.at("target_span").at("end").get<std::size_t>();
      r.file = e.at("file").get<std::string>();
      r.byte_length = e.at("byte_length").get<std::uint64_t>();
      r.checksum = parse_hex64(e.at("checksum").get<std::string>());
      if (r.target_span.start >= r.target_span.end || r.target_span.end > r.prompt_token_count)
        throw Error(ErrorCode::kValidation, r.file + ": target_span [" +
                                                std::to_string(r.target_span.start) + ", " +
                                                std::to_string(r.target_span.end) +
                                                ") invalid for " +
                                                std::to_string(r.prompt_token_count) + " tokens");
      if (e["target_span"].contains("t_last") &&
          e["target_span"]["t_last"].get<std::size_t>() != r.target_span.t_last())
        throw Error(ErrorCode::kValidation, r.file + ": t_last != end - 1");
      if (r.role != "sample" && r.role != "baseline")
        throw Error(ErrorCode::kValidation, r.file + ": unknown role '" + r.role + "'");
      if (!files.insert(r.file).second)
        throw Error(ErrorCode::kValidation, "file '" + r.file + "' listed twice");
      m.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed manifest: ") + e.what());
  }
  if (m.n_layers == 0 || m.n_heads == 0 || m.d_model == 0 || m.vocab_size == 0)
    throw Error(ErrorCode::kValidation, "manifest geometry has a zero dimension");
  return m;
}

void commit_manifest(const DumpManifest& manifest, const fs::path& dir) {
  const std::string text = to_json(manifest).dump(1) + "\n";
  write_atomic(dir / kManifestFile,
               std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

DumpManifest load_manifest(const fs::path& dir) {
  const auto bytes = read_bytes(dir / kManifestFile);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

ValidationReport validate_directory(const fs::path& dir) {
  const DumpManifest manifest = load_manifest(dir);
  ValidationReport report;
  report.records = manifest.records.size();
  for (const auto& rec : manifest.records) {
    try {
      if (!fs::exists(dir / rec.file))
        throw Error(ErrorCode::kIo, rec.file + ": missing");
      read_dump(rec, dir, &manifest);
      ++report.valid;
    } catch (const Error& e) {
      report.issues.push_back({rec.file, e.what()});
    }
  }
  return report;
}

}  // namespace typolab
