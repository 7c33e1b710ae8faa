// Command-line front end: enumerate CVTs of two-map Cantor measures at a
// fixed level, escalate levels to the first nonempty set, sweep the symmetric
// family over a grid of contraction ratios, run the verification oracles, and
// handle level-dependent (generalized) specs. JSON reports embed the manifest
// that reproduces them; sweeps emit CSV.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ccvt/errors.hpp"
#include "ccvt/report.hpp"

namespace {

struct CommonFlags {
    std::string r, r1, r2, p1 = "1/2";
    bool rational = false;
    double tolerance = 1e-12;
    bool symmetry_pruning = false;
    bool allow_degenerate_gaps = false;
    bool serial = false;
    std::string out;
    std::string format;  // resolved after parsing: csv for sweep, json otherwise
};

void add_model_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--r", flags.r, "symmetric contraction ratio (sets r1=r2, p1=1/2)");
    cmd->add_option("--r1", flags.r1, "contraction ratio of the left map");
    cmd->add_option("--r2", flags.r2, "contraction ratio of the right map");
    cmd->add_option("--p1", flags.p1, "probability of the left map (default 1/2)");
}

void add_run_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_flag("--rational", flags.rational, "exact rational arithmetic");
    cmd->add_option("--tolerance", flags.tolerance,
                    "comparison tolerance in float mode (rational mode is exact)");
    cmd->add_flag("--symmetry-pruning", flags.symmetry_pruning,
                  "halve the search using reflection symmetry (symmetric measures only)");
    cmd->add_flag("--allow-degenerate-gaps", flags.allow_degenerate_gaps,
                  "accept r1+r2=1 (cylinders touch)");
    cmd->add_flag("--serial", flags.serial, "disable OpenMP parallelism");
    cmd->add_option("--out", flags.out, "write the report to this path instead of stdout");
    cmd->add_option("--format", flags.format, "output format (json|csv)");
}

void apply_common(ccvt::Manifest& man, const CommonFlags& flags) {
    man.mode = flags.rational ? "rational" : "float";
    man.r1 = flags.r.empty() ? flags.r1 : flags.r;
    man.r2 = flags.r.empty() ? flags.r2 : flags.r;
    man.p1 = flags.p1;
    man.tolerance = flags.tolerance;
    man.symmetry_pruning = flags.symmetry_pruning;
    man.allow_degenerate_gaps = flags.allow_degenerate_gaps;
    man.parallel = !flags.serial;
    man.format = flags.format;
    man.out = flags.out;
}

int emit(const ccvt::RunOutput& output, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << output.text();
        return 0;
    }
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    if (!file) {
        std::cerr << "error: cannot open output path " << out_path << "\n";
        return 1;
    }
    file << output.text();
    return 0;
}

int run(const ccvt::Manifest& man) {
    try {
        return emit(ccvt::run_manifest(man), man.out);
    } catch (const ccvt::NoCvtFoundUpToMMax& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ccvt::InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

ccvt::json load_spec_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ccvt::SpecInvalid("cannot open spec file " + path);
    ccvt::json doc;
    file >> doc;
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CVT enumeration for self-similar Cantor measures on the line"};
    app.require_subcommand(1);

    ccvt::Manifest man;
    CommonFlags flags;
    int restarts = 8;
    bool all_levels = false;
    std::string spec_path;
    std::string r_min, r_max, step;

    CLI::App* cvt = app.add_subcommand("cvt", "enumerate C(n, 2^m) at a fixed level");
    add_model_flags(cvt, flags);
    cvt->add_option("--n", man.n, "number of generators")->required();
    cvt->add_option("--m", man.m, "level m")->required();
    add_run_flags(cvt, flags);

    CLI::App* optimal =
        app.add_subcommand("optimal", "escalate m until CVTs appear; report the best");
    add_model_flags(optimal, flags);
    optimal->add_option("--n", man.n, "number of generators")->required();
    optimal->add_option("--m-start", man.m_start, "starting level (default 1, auto-raised)");
    optimal->add_option("--m-max", man.m_max, "last level to try (default 14)");
    optimal->add_flag("--all-levels", all_levels,
                      "also record count and minimum per level up to m-max");
    add_run_flags(optimal, flags);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "CSV sweep of the symmetric family r1=r2=r, p=1/2 over a ratio grid");
    sweep->add_option("--r-min", r_min, "grid start")->required();
    sweep->add_option("--r-max", r_max, "grid end (inclusive)")->required();
    sweep->add_option("--step", step, "grid step")->required();
    sweep->add_option("--n", man.n, "number of generators")->required();
    sweep->add_option("--m", man.m, "level m")->required();
    add_run_flags(sweep, flags);

    CLI::App* oracle = app.add_subcommand("oracle", "independent verification runs");
    oracle->require_subcommand(1);
    CLI::App* lloyd = oracle->add_subcommand("lloyd", "Lloyd iteration on the atom measure");
    add_model_flags(lloyd, flags);
    lloyd->add_option("--n", man.n, "number of centroids")->required();
    lloyd->add_option("--m", man.m, "atom truncation depth (default 10)");
    lloyd->add_option("--restarts", restarts, "jittered restarts (default 8)");
    add_run_flags(lloyd, flags);
    CLI::App* dp = oracle->add_subcommand("dp", "exact optimum over contiguous block partitions");
    add_model_flags(dp, flags);
    dp->add_option("--n", man.n, "number of blocks")->required();
    dp->add_option("--m", man.m, "level m")->required();
    add_run_flags(dp, flags);
    CLI::App* moments =
        oracle->add_subcommand("moments", "truncated-sum moment estimates vs closed forms");
    add_model_flags(moments, flags);
    moments->add_option("--m", man.m, "truncation depth (default 20)");
    add_run_flags(moments, flags);

    CLI::App* generalized =
        app.add_subcommand("generalized", "level-dependent map families (preamble + period)");
    generalized->require_subcommand(1);
    CLI::App* gcvt = generalized->add_subcommand("cvt", "enumerate at a fixed level");
    gcvt->add_option("--spec", spec_path, "spec JSON file")->required();
    gcvt->add_option("--n", man.n, "number of generators")->required();
    gcvt->add_option("--m", man.m, "level m")->required();
    add_run_flags(gcvt, flags);
    CLI::App* goptimal = generalized->add_subcommand("optimal", "escalate to the first CVTs");
    goptimal->add_option("--spec", spec_path, "spec JSON file")->required();
    goptimal->add_option("--n", man.n, "number of generators")->required();
    goptimal->add_option("--m-start", man.m_start, "starting level");
    goptimal->add_option("--m-max", man.m_max, "last level to try");
    goptimal->add_flag("--all-levels", all_levels, "record per-level summaries");
    add_run_flags(goptimal, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    man.restarts = restarts;
    man.all_levels = all_levels;
    man.r_min = r_min;
    man.r_max = r_max;
    man.step = step;
    if (flags.format.empty()) flags.format = sweep->parsed() ? "csv" : "json";
    apply_common(man, flags);

    try {
        if (cvt->parsed()) man.command = "cvt";
        if (optimal->parsed()) man.command = "optimal";
        if (sweep->parsed()) man.command = "sweep";
        if (oracle->parsed()) {
            if (lloyd->parsed()) man.command = "oracle-lloyd";
            if (dp->parsed()) man.command = "oracle-dp";
            if (moments->parsed()) man.command = "oracle-moments";
        }
        if (generalized->parsed()) {
            man.spec = load_spec_file(spec_path);
            man.command = gcvt->parsed() ? "generalized-cvt" : "generalized-optimal";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return run(man);
}
