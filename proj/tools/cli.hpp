#pragma once

#include "billspec/orbits.hpp"

#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace billspec::cli {

enum class Format { Csv, Jsonl };

// One output row. Numbers stay decimal strings at their computed precision.
struct Row {
    int p = 1, q = 2, bits = 0;
    std::string delta, action_min, action_minimax;
    bool floor = false;
    bool error = false;
    std::string message;

    std::string flags() const;
};

Row to_row(const SpectrumRecord& r);
// Back to a record for fitting; numbers are parsed at the row precision.
SpectrumRecord to_record(const Row& row);

std::string csv_header();
std::string to_csv(const Row& row);
std::string to_jsonl(const Row& row);
Row row_from_csv(const std::string& line);
Row row_from_jsonl(const std::string& line);
// Reads a CSV (with header) or JSONL file, chosen by the first character.
std::vector<Row> read_rows(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

// Content-addressed store of computed rows keyed by (curve, table, p, q).
// Lookups never return a row computed at fewer bits than requested.
class RunCache {
public:
    explicit RunCache(std::filesystem::path dir);

    static std::string key(const std::string& curve_hash, Table table, int p, int q);

    std::optional<Row> lookup(const std::string& key, int bits) const;
    void store(const std::string& key, int requested_bits, const Row& row);

private:
    std::filesystem::path file(const std::string& key) const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

struct SpectrumArgs {
    std::string curve;
    Table table = Table::Inner;
    int p = 1, q_min = 3, q_max = 20, bits = 256;
    std::string out;
    Format format = Format::Csv;
    std::string cache_dir;
    bool serial = false;
};

struct FitArgs {
    std::string in;
    int p = 1;
    int q_min = 0, q_max = 0;
    std::optional<std::pair<int, int>> resonant;
};

struct AsymptoticsArgs {
    std::string curve;
    int p = 1, bits = 256;
    std::vector<int> q{32, 64, 128};
};

struct NormalFormArgs {
    std::string curve;
    int bits = 256, K = 32, J = 24, order = 6;
    std::string radius = "0.0625";
    std::string series_out;
};

// Each command writes its report to out and diagnostics to log.
int cmd_spectrum(const SpectrumArgs& a, std::ostream& out, std::ostream& log);
int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& log);
int cmd_asymptotics(const AsymptoticsArgs& a, std::ostream& out, std::ostream& log);
int cmd_normalform(const NormalFormArgs& a, std::ostream& out, std::ostream& log);

}  // namespace billspec::cli
