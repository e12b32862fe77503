#include "pgsr/io.hpp"

#include "pgsr/errors.hpp"

#include <unistd.h>

#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace pgsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'G', 'S', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::ostream& out, T value)
{
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto bits = std::bit_cast<U>(value);
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    }
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in)
{
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    std::array<unsigned char, sizeof(U)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw IoError("checkpoint is truncated");
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bits |= static_cast<U>(bytes[i]) << (8 * i);
    }
    return std::bit_cast<T>(bits);
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string format_double(double v)
{
    if (!std::isfinite(v)) {
        return "";
    }
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json host_metadata()
{
    char host[256] = {};
    gethostname(host, sizeof host - 1);
    return json{{"created_utc", utc_timestamp()}, {"host", std::string(host)}};
}

void write_json(const fs::path& path, const json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

} // namespace

void write_checkpoint(const fs::path& path, const PolicyParams& params)
{
    auto out = open_out(path);
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.hidden()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.n_tokens()));
    put_le<std::uint32_t>(out, 0);
    put_le<std::uint64_t>(out, params.size());
    for (double v : params.flat()) {
        put_le<double>(out, v);
    }
    if (!out) {
        throw IoError("failed writing checkpoint '" + path.string() + "'");
    }
}

PolicyParams read_checkpoint(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint '" + path.string() + "'");
    }
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw IoError("'" + path.string() + "' is not a checkpoint");
    }
    const auto version = get_le<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto hidden = static_cast<int>(get_le<std::uint32_t>(in));
    const auto n_tokens = static_cast<int>(get_le<std::uint32_t>(in));
    get_le<std::uint32_t>(in);
    const auto count = get_le<std::uint64_t>(in);
    if (count > (1ULL << 32)) {
        throw IoError("checkpoint parameter count is implausible");
    }
    std::vector<double> flat(count);
    for (auto& v : flat) {
        v = get_le<double>(in);
    }
    try {
        return PolicyParams(hidden, n_tokens, std::move(flat));
    } catch (const InvalidConfig& e) {
        throw IoError(std::string("checkpoint shape mismatch: ") + e.what());
    }
}

json to_json(const StepReport& r, const Library& lib)
{
    json ent = json::array();
    for (double h : r.position_entropy) {
        ent.push_back(number_or_null(h));
    }
    json hist = json::array();
    for (std::size_t len = 0; len < r.length_histogram.size(); ++len) {
        if (r.length_histogram[len] > 0) {
            hist.push_back({len, r.length_histogram[len]});
        }
    }
    return json{
        {"type", "step"},
        {"step", r.step},
        {"best_reward", r.best_reward},
        {"best_expression", lib.names(r.best_expression)},
        {"batch_best_reward", r.batch_best_reward},
        {"batch_best", lib.names(r.batch_best)},
        {"baseline", r.baseline},
        {"kept", r.kept},
        {"position_entropy", ent},
        {"length_histogram", hist},
    };
}

json to_json(const RunRecord& r)
{
    return json{
        {"benchmark", r.benchmark},
        {"variant", std::string(variant_name(r.variant))},
        {"run_index", r.run_index},
        {"seed", r.seed},
        {"recovered", r.recovered},
        {"steps_to_solve", r.steps_to_solve},
        {"best_length", r.best_length},
        {"best_reward", r.best_reward},
        {"best_prefix", r.best_prefix},
        {"best_infix", r.best_infix},
    };
}

RunRecord run_record_from_json(const json& j)
{
    try {
        RunRecord r;
        r.benchmark = j.at("benchmark").get<std::string>();
        r.variant = parse_variant(j.at("variant").get<std::string>());
        r.run_index = j.at("run_index").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.recovered = j.at("recovered").get<bool>();
        r.steps_to_solve = j.at("steps_to_solve").get<int>();
        r.best_length = j.at("best_length").get<int>();
        r.best_reward = j.at("best_reward").get<double>();
        r.best_prefix = j.at("best_prefix").get<std::string>();
        r.best_infix = j.at("best_infix").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed run record: ") + e.what());
    }
}

json to_json(const Aggregate& a)
{
    return json{{"n_runs", a.n_runs},
                {"recovery_rate", a.recovery_rate},
                {"mean_steps", a.mean_steps},
                {"mean_length", a.mean_length}};
}

fs::path run_directory(const fs::path& out, const RunRecord& r)
{
    return out / r.benchmark / std::string(variant_name(r.variant)) / ("run-" + std::to_string(r.run_index));
}

void write_run(const fs::path& dir, const RunRecord& record, const RunResult& result,
               const std::vector<StepReport>& steps, const Library& lib, int hidden_size)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    }
    {
        auto out = open_out(dir / "steps.jsonl");
        for (const auto& s : steps) {
            out << to_json(s, lib).dump() << '\n';
        }
        json summary = to_json(record);
        summary["type"] = "summary";
        out << summary.dump() << '\n';
        if (!out) {
            throw IoError("failed writing steps for '" + dir.string() + "'");
        }
    }
    write_json(dir / "summary.json", to_json(record));
    if (!result.final_params.empty()) {
        write_checkpoint(dir / "checkpoint.bin",
                         PolicyParams(hidden_size, static_cast<int>(lib.size()), result.final_params));
    }
    write_json(dir / "metadata.json", host_metadata());
}

void write_results(const fs::path& out, const ExperimentConfig& config, const ExperimentResult& result)
{
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw IoError("cannot create '" + out.string() + "': " + ec.message());
    }
    json runs = json::array();
    for (const auto& r : result.runs) {
        runs.push_back(to_json(r));
    }
    json aggs = json::object();
    for (const auto& [name, a] : result.aggregates) {
        aggs[name] = to_json(a);
    }
    write_json(out / "results.json",
               json{{"config", to_json(config)}, {"runs", runs}, {"aggregates", aggs}, {"overall", to_json(result.overall)}});
    write_json(out / "metadata.json", host_metadata());
}

ExperimentResult read_results(const fs::path& results_json)
{
    std::ifstream in(results_json);
    if (!in) {
        throw IoError("cannot open '" + results_json.string() + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed results file: ") + e.what());
    }
    ExperimentResult r;
    for (const auto& j : doc.at("runs")) {
        r.runs.push_back(run_record_from_json(j));
    }
    for (const auto& [name, a] : doc.at("aggregates").items()) {
        Aggregate agg;
        agg.n_runs = a.at("n_runs").get<int>();
        agg.recovery_rate = a.at("recovery_rate").get<double>();
        agg.mean_steps = a.at("mean_steps").get<double>();
        agg.mean_length = a.at("mean_length").get<double>();
        r.aggregates[name] = agg;
    }
    const auto& o = doc.at("overall");
    r.overall = {o.at("n_runs").get<int>(), o.at("recovery_rate").get<double>(), o.at("mean_steps").get<double>(),
                 o.at("mean_length").get<double>()};
    return r;
}

TraceExport export_traces(const fs::path& run_dir)
{
    const fs::path steps_path = run_dir / "steps.jsonl";
    std::ifstream in(steps_path);
    if (!in) {
        throw IoError("no step records in '" + run_dir.string() + "'");
    }
    auto ent = open_out(run_dir / "entropy-trace.csv");
    auto hist = open_out(run_dir / "length-hist.csv");
    ent << "step,position,entropy\n";
    hist << "step,length,count\n";

    TraceExport counts;
    std::string line;
    std::size_t n_steps = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("malformed record in '" + steps_path.string() + "': " + e.what());
        }
        if (rec.value("type", "") != "step") {
            continue;
        }
        ++n_steps;
        const int step = rec.at("step").get<int>();
        const auto& pe = rec.at("position_entropy");
        for (std::size_t i = 0; i < pe.size(); ++i) {
            const double h = pe[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : pe[i].get<double>();
            ent << step << ',' << (i + 1) << ',' << format_double(h) << '\n';
            ++counts.entropy_rows;
        }
        for (const auto& bin : rec.at("length_histogram")) {
            hist << step << ',' << bin.at(0).get<int>() << ',' << bin.at(1).get<int>() << '\n';
            ++counts.histogram_rows;
        }
    }
    if (n_steps == 0) {
        throw IoError("no step records in '" + steps_path.string() + "'");
    }
    if (!ent || !hist) {
        throw IoError("failed writing traces in '" + run_dir.string() + "'");
    }
    return counts;
}

std::vector<fs::path> find_run_directories(const fs::path& root)
{
    std::vector<fs::path> dirs;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        return dirs;
    }
    if (fs::exists(root / "steps.jsonl")) {
        dirs.push_back(root);
        return dirs;
    }
    for (fs::recursive_directory_iterator it(root, ec), end; it != end && !ec; it.increment(ec)) {
        if (it->is_regular_file() && it->path().filename() == "steps.jsonl") {
            dirs.push_back(it->path().parent_path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

} // namespace pgsr
