#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "typolab/tokenizer.hpp"

namespace typolab {

// Binary dump layout, all little-endian:
//   "ACTD" | u32 version | u64 n_layers | u64 n_heads | u64 d_model |
//   u64 span_len | u64 vocab_size |
//   f32 hidden[n_layers + 1][span_len][d_model] |
//   f32 attn_rows[n_layers][n_heads][span_len] |
//   f32 next_token_dist[vocab_size]
inline constexpr char kDumpMagic[4] = {'A', 'C', 'T', 'D'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::size_t kDumpHeaderBytes = 4 + 4 + 5 * 8;

inline constexpr double kStochasticTolerance = 1e-5;

struct ActivationDump {
  std::size_t n_layers = 0;  // L; hidden has L+1 rows (0 = embedding output)
  std::size_t n_heads = 0;
  std::size_t d_model = 0;
  std::size_t span_len = 0;
  std::size_t vocab_size = 0;
  std::vector<float> hidden;           // (L+1, span_len, d_model)
  std::vector<float> attn_rows;        // (L, H, span_len), from t_last
  std::vector<float> next_token_dist;  // (vocab_size)

  static ActivationDump zeros(std::size_t n_layers, std::size_t n_heads, std::size_t d_model,
                              std::size_t span_len, std::size_t vocab_size);

  std::span<const float> hidden_at(std::size_t layer, std::size_t pos) const {
    return {hidden.data() + (layer * span_len + pos) * d_model, d_model};
  }
  std::span<float> hidden_at(std::size_t layer, std::size_t pos) {
    return {hidden.data() + (layer * span_len + pos) * d_model, d_model};
  }
  std::span<const float> attn_row(std::size_t layer, std::size_t head) const {
    return {attn_rows.data() + (layer * n_heads + head) * span_len, span_len};
  }
  std::span<float> attn_row(std::size_t layer, std::size_t head) {
    return {attn_rows.data() + (layer * n_heads + head) * span_len, span_len};
  }

  std::size_t payload_floats() const {
    return (n_layers + 1) * span_len * d_model + n_layers * n_heads * span_len + vocab_size;
  }
  std::size_t file_bytes() const { return kDumpHeaderBytes + 4 * payload_floats(); }
};

struct DumpRecordMeta {
  std::string sample_id;
  double sr = 0;
  double ci = 1;
  std::uint64_t seed = 0;
  std::string role = "sample";  // "sample" or "baseline" (SR=0 original)
  std::size_t prompt_token_count = 0;
  TokenSpan target_span;
  std::string file;
  std::uint64_t byte_length = 0;
  std::uint64_t checksum = 0;  // FNV-1a 64 over the whole file
};

struct DumpManifest {
  std::string model_name;
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  std::size_t d_model = 0;
  std::size_t vocab_size = 0;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<DumpRecordMeta> records;
};

inline constexpr const char* kManifestFile = "manifest.json";

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

// Shape and value invariants; throws kShapeMismatch or kValidation naming the
// field and flat offset of the first violation.
void validate_dump(const ActivationDump& dump, const std::string& context = "dump");

std::vector<unsigned char> serialize_dump(const ActivationDump& dump);
// Parses the header and payload; checks magic, version and that the byte
// count matches the declared shape. Does not check value invariants.
ActivationDump deserialize_dump(std::span<const unsigned char> bytes,
                                const std::string& context = "dump");

// Validates, writes `meta.file` inside `dir` through a temporary file and
// rename, and fills meta.byte_length / meta.checksum. Returns the file name.
std::string write_dump(DumpRecordMeta& meta, const ActivationDump& dump,
                       const std::filesystem::path& dir);

// Reads one record, verifying byte length, magic, version, shape against
// the record (and the manifest geometry when given), checksum, and invariants.
ActivationDump read_dump(const DumpRecordMeta& meta, const std::filesystem::path& dir,
                         const DumpManifest* geometry = nullptr);

nlohmann::ordered_json to_json(const DumpManifest& manifest);
DumpManifest manifest_from_json(const nlohmann::json& j);

// Atomic replace of dir/manifest.json.
void commit_manifest(const DumpManifest& manifest, const std::filesystem::path& dir);
DumpManifest load_manifest(const std::filesystem::path& dir);

struct ValidationIssue {
  std::string file;
  std::string error;
};

struct ValidationReport {
  std::size_t records = 0;
  std::size_t valid = 0;
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Full check of a dump directory: manifest structure, then every record.
// Throws only when the manifest itself cannot be read.
ValidationReport validate_directory(const std::filesystem::path& dir);

}  // namespace typolab
