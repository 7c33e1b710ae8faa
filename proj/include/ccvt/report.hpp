#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace ccvt {

using json = nlohmann::ordered_json;

// Everything needed to reproduce a run. Model parameters stay as the exact
// input strings so rational mode re-parses them losslessly; every report
// embeds its manifest.
struct Manifest {
    std::string command;  // cvt | optimal | sweep | oracle-lloyd | oracle-dp |
                          // oracle-moments | generalized-cvt | generalized-optimal
    std::string mode = "float";  // float | rational
    std::string r1, r2, p1;
    json spec;  // generalized spec document (null unless generalized-*)
    int n = 0;
    int m = 0;  // fixed level, or oracle truncation depth
    int m_start = 1;
    int m_max = 14;
    double tolerance = 1e-12;
    bool symmetry_pruning = false;
    bool allow_degenerate_gaps = false;
    bool parallel = true;
    bool all_levels = false;
    int restarts = 8;
    std::string r_min, r_max, step;  // sweep grid
    std::string format = "json";     // json | csv
    std::string out;                 // output path; empty = stdout

    json to_json() const;
    static Manifest from_json(const json& j);
};

struct RunOutput {
    json report;      // populated for JSON commands
    std::string csv;  // populated for sweep
    bool is_csv = false;

    std::string text() const { return is_csv ? csv : report.dump(2) + "\n"; }
};

// Dispatches on manifest.command/mode. Throws the library error types;
// callers map them to exit codes.
RunOutput run_manifest(const Manifest& manifest);

}  // namespace ccvt
