#pragma once

/// @file ingest.hpp
/// Canonical trace files, dataset parsers and trace statistics.
///
/// Canonical format:
///
///     # spotsched-trace v1
///     # step_seconds=600
///     # source=skypilot-availability
///     index,available
///     0,1
///     1,0

#include <spotsched/core.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spotsched {

void write_trace(const SpotTrace& trace, std::ostream& out);
[[nodiscard]] SpotTrace read_trace(std::istream& in);

void save_trace(const SpotTrace& trace, const std::filesystem::path& path);
[[nodiscard]] SpotTrace load_trace(const std::filesystem::path& path);

/// Seconds since the epoch from either a number or an ISO-8601 UTC time
/// such as 2023-05-01T10:20:00Z. Throws ParseError.
[[nodiscard]] double parse_timestamp(std::string_view text);

/// Dataset column names. Read from a key=value file so that schema changes
/// need no code change.
struct ColumnMapping {
    std::string timestamp = "time";
    std::string label = "availability";
    std::string provider = "provider";
    std::string region = "region";
    std::string zone = "zone";
    std::string instance = "instance_type";
    double step_seconds = 600.0;
};

/// Keys: timestamp, label, provider, region, zone, instance, step_seconds.
[[nodiscard]] ColumnMapping load_column_mapping(const std::filesystem::path& path);
[[nodiscard]] ColumnMapping parse_column_mapping(std::istream& in);

/// Empty fields match anything.
struct SpotLakeSelector {
    std::string provider;
    std::string region;
    std::string zone;
    std::string instance;
};

/// Rows labelled high are available; medium and low are not. The selected
/// rows are forward-filled onto a uniform grid; the number of filled steps
/// is stored in the trace meta as `filled_steps`.
[[nodiscard]] SpotTrace parse_spotlake(std::istream& in, const SpotLakeSelector& selector,
                                       const ColumnMapping& columns = {});

/// Ping log with columns `timestamp,available` on a 600 s grid. Missing
/// pings are forward-filled; duplicate timestamps are an error.
[[nodiscard]] SpotTrace parse_skypilot_availability(std::istream& in);

/// VM lifetimes with columns `start,lifetime` in seconds. Intervals are
/// rasterized inward onto `step_seconds` steps counted from the earliest
/// start. Zero-length rows are skipped and reported in `warnings`.
[[nodiscard]] SpotTrace parse_skypilot_preemption(std::istream& in, double step_seconds,
                                                  std::vector<std::string>* warnings = nullptr);

struct TraceStats {
    std::size_t horizon = 0;
    double fraction = 0.0;
    std::size_t segments = 0;
    double mean_segment = 0.0;
    std::size_t max_segment = 0;
    std::size_t gaps = 0;
    double mean_gap = 0.0;
    std::vector<std::size_t> segment_lengths;
    std::vector<std::size_t> gap_lengths;
};

[[nodiscard]] TraceStats trace_stats(const SpotTrace& trace);

}  // namespace spotsched
