#pragma once

#include "pgsr/bench.hpp"
#include "pgsr/config.hpp"
#include "pgsr/policy.hpp"
#include "pgsr/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pgsr {

// Checkpoint layout, all fields little-endian:
//   "PGSRCKPT" | u32 version (1) | u32 hidden | u32 n_tokens | u32 reserved (0) | u64 count | count x f64
inline constexpr std::uint32_t kCheckpointVersion = 1;
void write_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams read_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const StepReport& r, const Library& lib);
nlohmann::json to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Aggregate& a);

// <out>/<benchmark>/<variant>/run-<k>
std::filesystem::path run_directory(const std::filesystem::path& out, const RunRecord& r);

// steps.jsonl (one record per step, then a final summary record), summary.json,
// checkpoint.bin and metadata.json (timestamps and host only).
void write_run(const std::filesystem::path& dir, const RunRecord& record, const RunResult& result,
               const std::vector<StepReport>& steps, const Library& lib, int hidden_size);

// results.json (config, per-run records, aggregates) and metadata.json.
void write_results(const std::filesystem::path& out, const ExperimentConfig& config, const ExperimentResult& result);
ExperimentResult read_results(const std::filesystem::path& results_json);

struct TraceExport {
    std::size_t entropy_rows = 0;
    std::size_t histogram_rows = 0;
};

// Writes entropy-trace.csv (step, position, entropy) and length-hist.csv
// (step, length, count) next to steps.jsonl. Throws IoError when the directory
// has no step records.
TraceExport export_traces(const std::filesystem::path& run_dir);

// All run directories (containing steps.jsonl) at or below `root`.
std::vector<std::filesystem::path> find_run_directories(const std::filesystem::path& root);

} // namespace pgsr
