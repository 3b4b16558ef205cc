#pragma once

#include "lacp/dataset.hpp"
#include "lacp/training.hpp"
#include "lacp/transforms.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lacp::io {

inline constexpr int kFormatVersion = 1;

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// True when the first non-comment line contains a non-numeric cell.
bool looks_like_header(const std::string& text);

/// Affine maps of the synthetic (1, X, X^2) columns, recorded in a comment
/// line of generated CSV files so the raw X can be recovered for plotting.
struct SynthHeader {
  std::string kind;
  std::array<ColumnStats, 3> attribute_stats{};
};
std::optional<SynthHeader> parse_synth_header(const std::string& text);

/// %.17g formatting; round-trips every double.
std::string format_double(double v);

/// Serialized trained model plus everything needed to rebuild its predictor.
struct ModelFile {
  FamilyChoice family{};
  FamilyOptions options{};
  std::optional<LocalizerNet> localizer;
  NormalizationStats stats;
  std::size_t knn_k = 1;
  SplitSpec split{};
  TrainConfig train{};
  std::size_t best_epoch = 0;
  std::string data_digest;

  TransformFamily make_family() const;
};

nlohmann::json to_json(const LocalizerNet& net);
LocalizerNet localizer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelFile& model);
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

/// Run manifest: resolved configuration, seeds, tool version and input digests.
struct Manifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  nlohmann::json to_json() const;
};

/// `<output>.manifest.json` next to the primary output.
std::filesystem::path manifest_path(const std::filesystem::path& primary_output);
void write_manifest(const std::filesystem::path& primary_output, const Manifest& manifest);

std::string trace_csv(const TrainTrace& trace);
std::string report_csv(std::span<const ProtocolRow> rows);
/// Families as rows, each alpha contributing size and validity columns (mean +- sd).
std::string table_text(std::string_view dataset, std::span<const AggregateRow> table);

}  // namespace lacp::io
