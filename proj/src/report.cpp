#include "ccvt/report.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <utility>
#include <vector>

#include "ccvt/cvt_search.hpp"
#include "ccvt/cylinder_table.hpp"
#include "ccvt/errors.hpp"
#include "ccvt/generalized.hpp"
#include "ccvt/ifs_model.hpp"
#include "ccvt/numeric.hpp"
#include "ccvt/oracle.hpp"

namespace ccvt {

json Manifest::to_json() const {
    json j;
    j["command"] = command;
    j["mode"] = mode;
    j["r1"] = r1;
    j["r2"] = r2;
    j["p1"] = p1;
    j["spec"] = spec;
    j["n"] = n;
    j["m"] = m;
    j["m_start"] = m_start;
    j["m_max"] = m_max;
    j["tolerance"] = tolerance;
    j["symmetry_pruning"] = symmetry_pruning;
    j["allow_degenerate_gaps"] = allow_degenerate_gaps;
    j["parallel"] = parallel;
    j["all_levels"] = all_levels;
    j["restarts"] = restarts;
    j["r_min"] = r_min;
    j["r_max"] = r_max;
    j["step"] = step;
    j["format"] = format;
    j["out"] = out;
    return j;
}

Manifest Manifest::from_json(const json& j) {
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.mode = j.value("mode", "float");
    m.r1 = j.value("r1", "");
    m.r2 = j.value("r2", "");
    m.p1 = j.value("p1", "");
    m.spec = j.value("spec", json());
    m.n = j.value("n", 0);
    m.m = j.value("m", 0);
    m.m_start = j.value("m_start", 1);
    m.m_max = j.value("m_max", 14);
    m.tolerance = j.value("tolerance", 1e-12);
    m.symmetry_pruning = j.value("symmetry_pruning", false);
    m.allow_degenerate_gaps = j.value("allow_degenerate_gaps", false);
    m.parallel = j.value("parallel", true);
    m.all_levels = j.value("all_levels", false);
    m.restarts = j.value("restarts", 8);
    m.r_min = j.value("r_min", "");
    m.r_max = j.value("r_max", "");
    m.step = j.value("step", "");
    m.format = j.value("format", "json");
    m.out = j.value("out", "");
    return m;
}

namespace {

template <typename S>
S field(const std::string& text, const char* what) {
    if (text.empty()) throw ParamOutOfRange(std::string("missing value for ") + what);
    return scalar_ops<S>::from_string(text);
}

template <typename S>
IfsModel<S> model_from(const Manifest& man) {
    S r1 = field<S>(man.r1, "--r1");
    S r2 = field<S>(man.r2, "--r2");
    S p1 = man.p1.empty() ? scalar_ops<S>::from_fraction(1, 2)
                          : scalar_ops<S>::from_string(man.p1);
    return validate_params(r1, r2, p1, man.allow_degenerate_gaps);
}

SearchConfig config_from(const Manifest& man) {
    SearchConfig cfg;
    cfg.tolerance = man.tolerance;
    cfg.symmetry_pruning = man.symmetry_pruning;
    cfg.m_start = man.m_start;
    cfg.m_max = man.m_max;
    cfg.parallel = man.parallel;
    return cfg;
}

template <typename S>
json real_json(const S& v) {
    return format_real(v);
}

template <typename S>
json cvt_json(const CvtResult<S>& r) {
    json j;
    json blocks = json::array();
    for (int l = 0; l < r.partition.block_count(); ++l) {
        auto [lo, hi] = r.partition.block(l);
        blocks.push_back({lo, hi});
    }
    j["blocks"] = blocks;
    j["boundaries"] = r.partition.boundaries();
    json cents = json::array();
    for (const S& c : r.centroids) cents.push_back(real_json(c));
    j["centroids"] = cents;
    json bps = json::array();
    for (const S& b : r.boundary_points) bps.push_back(real_json(b));
    j["boundary_points"] = bps;
    j["distortion"] = real_json(r.distortion);
    if constexpr (scalar_ops<S>::exact) {
        json exact = json::array();
        for (const S& c : r.centroids) exact.push_back(exact_string(c));
        j["centroids_exact"] = exact;
        j["distortion_exact"] = exact_string(r.distortion);
    }
    return j;
}

template <typename S>
json cvt_list_json(const std::vector<CvtResult<S>>& results) {
    json j = json::array();
    for (const auto& r : results) j.push_back(cvt_json(r));
    return j;
}

template <typename S>
json level_summary(int m, const std::vector<CvtResult<S>>& results, const S& eps) {
    json j;
    j["m"] = m;
    j["count"] = results.size();
    j["min_distortion"] =
        results.empty() ? json() : real_json(best_cvt(results, eps).distortion);
    return j;
}

template <typename S>
json run_cvt(const Manifest& man) {
    if (man.m < 1) throw ParamOutOfRange("cvt requires a fixed level --m >= 1");
    IfsModel<S> model = model_from<S>(man);
    SearchConfig cfg = config_from(man);
    const S eps = scalar_ops<S>::tolerance(cfg.tolerance);
    CylinderTable<S> table = build_table(model, man.m, cfg.parallel);
    std::vector<CvtResult<S>> results = enumerate_cvts(table, man.n, cfg);
    json j;
    j["manifest"] = man.to_json();
    j["m"] = man.m;
    j["count"] = results.size();
    j["min_distortion"] =
        results.empty() ? json() : real_json(best_cvt(results, eps).distortion);
    j["cvts"] = cvt_list_json(results);
    return j;
}

template <typename S>
json run_optimal(const Manifest& man) {
    IfsModel<S> model = model_from<S>(man);
    SearchConfig cfg = config_from(man);
    const S eps = scalar_ops<S>::tolerance(cfg.tolerance);
    auto [m_found, results] = find_cvts(model, man.n, cfg);
    json j;
    j["manifest"] = man.to_json();
    j["m_found"] = m_found;
    j["count"] = results.size();
    j["cvts"] = cvt_list_json(results);
    j["best"] = cvt_json(best_cvt(results, eps));
    if (man.all_levels) {
        json levels = json::array();
        levels.push_back(level_summary(m_found, results, eps));
        for (int m = m_found + 1; m <= cfg.m_max; ++m) {
            CylinderTable<S> table = build_table(model, m, cfg.parallel);
            std::vector<CvtResult<S>> r = enumerate_cvts(table, man.n, cfg);
            levels.push_back(level_summary(m, r, eps));
        }
        j["levels"] = levels;
    }
    return j;
}

double snap_grid(double v) { return std::round(v * 1e9) / 1e9; }

template <typename S>
S grid_value(const S& r_min, const S& step, int k) {
    S v = r_min + S(k) * step;
    if constexpr (!scalar_ops<S>::exact) v = snap_grid(v);
    return v;
}

template <typename S>
std::string run_sweep(const Manifest& man) {
    if (man.n < 2) throw ParamOutOfRange("sweep requires --n >= 2");
    if (man.m < 1) throw ParamOutOfRange("sweep requires a fixed level --m >= 1");
    S r_min = field<S>(man.r_min, "--r-min");
    S r_max = field<S>(man.r_max, "--r-max");
    S step = field<S>(man.step, "--step");
    if (!(r_min > S(0)) || r_max < r_min || !(step > S(0)))
        throw ParamOutOfRange("invalid sweep grid");
    const int count = static_cast<int>(std::floor(
                          (scalar_ops<S>::to_double(r_max) - scalar_ops<S>::to_double(r_min)) /
                              scalar_ops<S>::to_double(step) +
                          1e-9)) +
                      1;
    SearchConfig cfg = config_from(man);
    const S eps = scalar_ops<S>::tolerance(cfg.tolerance);

    struct Row {
        std::string r, boundary_1, distortion, blocks;
        bool optimal;
    };
    std::vector<std::vector<Row>> rows(count);

    // Each grid point is independent; inner searches run serially when the
    // grid itself is spread over threads.
    SearchConfig point_cfg = cfg;
    point_cfg.parallel = false;
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int k = 0; k < count; ++k) {
        S r = grid_value(r_min, step, k);
        IfsModel<S> model = validate_params(r, r, scalar_ops<S>::from_fraction(1, 2),
                                            man.allow_degenerate_gaps);
        CylinderTable<S> table = build_table(model, man.m, false);
        std::vector<CvtResult<S>> results = enumerate_cvts(table, man.n, point_cfg);
        std::vector<Row>& out = rows[k];
        out.reserve(results.size());
        if (!results.empty()) {
            const S min_dist = best_cvt(results, eps).distortion;
            for (const auto& res : results) {
                Row row;
                row.r = format_real(r);
                row.boundary_1 = format_real(res.boundary_points[0]);
                row.distortion = format_real(res.distortion);
                std::ostringstream blocks;
                const auto& bs = res.partition.boundaries();
                for (size_t i = 0; i < bs.size(); ++i) {
                    if (i) blocks << ';';
                    blocks << bs[i];
                }
                row.blocks = blocks.str();
                row.optimal = !(res.distortion > min_dist + eps);
                out.push_back(std::move(row));
            }
        }
    }

    std::ostringstream csv;
    csv << "# manifest: " << man.to_json().dump() << "\n";
    csv << "r,m,n,boundary_1,distortion,is_optimal,blocks\n";
    for (const auto& block : rows)
        for (const Row& row : block)
            csv << row.r << ',' << man.m << ',' << man.n << ',' << row.boundary_1 << ','
                << row.distortion << ',' << (row.optimal ? 1 : 0) << ',' << row.blocks << "\n";
    return csv.str();
}

template <typename S>
json run_oracle_moments(const Manifest& man) {
    const int depth = man.m > 0 ? man.m : 20;
    IfsModel<S> model = model_from<S>(man);
    IfsModel<double> dmodel =
        validate_params(parse_double(man.r1), parse_double(man.r2),
                        man.p1.empty() ? 0.5 : parse_double(man.p1),
                        man.allow_degenerate_gaps);
    TruncatedMoments est = moments_by_truncation(dmodel, depth, man.parallel);
    const double max_r = std::max(dmodel.r1, dmodel.r2);
    json j;
    j["manifest"] = man.to_json();
    j["depth"] = depth;
    j["analytic"]["expectation"] = real_json(model.mean);
    j["analytic"]["second_moment"] = real_json(model.second_moment);
    j["analytic"]["variance"] = real_json(model.variance);
    j["estimate"]["expectation"] = format_real(est.e_est);
    j["estimate"]["second_moment"] = format_real(est.m2_est);
    j["estimate"]["variance"] = format_real(est.v_est);
    j["difference"]["expectation"] =
        format_real(std::fabs(est.e_est - scalar_ops<S>::to_double(model.mean)));
    j["difference"]["second_moment"] =
        format_real(std::fabs(est.m2_est - scalar_ops<S>::to_double(model.second_moment)));
    j["difference"]["variance"] =
        format_real(std::fabs(est.v_est - scalar_ops<S>::to_double(model.variance)));
    j["geometric_bound"] = format_real(2.0 * std::pow(max_r, depth));
    return j;
}

template <typename S>
json run_oracle_dp(const Manifest& man) {
    if (man.m < 1) throw ParamOutOfRange("oracle dp requires a fixed level --m >= 1");
    IfsModel<S> model = model_from<S>(man);
    SearchConfig cfg = config_from(man);
    const S eps = scalar_ops<S>::tolerance(cfg.tolerance);
    CylinderTable<S> table = build_table(model, man.m, cfg.parallel);
    auto [partition, cost] = dp_optimal_blocks(table, man.n, cfg.parallel, 14);
    std::vector<CvtResult<S>> results = enumerate_cvts(table, man.n, cfg);
    json j;
    j["manifest"] = man.to_json();
    j["m"] = man.m;
    j["n"] = man.n;
    j["dp"]["boundaries"] = partition.boundaries();
    j["dp"]["cost"] = real_json(cost);
    if (results.empty()) {
        j["best_cvt"] = json();
        j["difference"] = json();
    } else {
        const CvtResult<S>& best = best_cvt(results, eps);
        j["best_cvt"]["boundaries"] = best.partition.boundaries();
        j["best_cvt"]["cost"] = real_json(best.distortion);
        j["difference"] = real_json(scalar_ops<S>::abs(best.distortion - cost));
    }
    return j;
}

template <typename S>
json run_oracle_lloyd(const Manifest& man) {
    const int depth = man.m > 0 ? man.m : 10;
    IfsModel<double> dmodel =
        validate_params(parse_double(man.r1), parse_double(man.r2),
                        man.p1.empty() ? 0.5 : parse_double(man.p1),
                        man.allow_degenerate_gaps);
    AtomMeasure atoms = discretize(dmodel, depth, man.parallel);
    LloydResult run = lloyd_best_of(atoms, man.n, man.restarts);
    json j;
    j["manifest"] = man.to_json();
    j["depth"] = depth;
    j["n"] = man.n;
    j["restarts"] = man.restarts;
    json cents = json::array();
    for (double c : run.centroids) cents.push_back(format_real(c));
    j["lloyd"]["centroids"] = cents;
    j["lloyd"]["cost"] = format_real(run.cost);
    j["lloyd"]["iterations"] = run.iterations;

    IfsModel<S> model = model_from<S>(man);
    SearchConfig cfg = config_from(man);
    const S eps = scalar_ops<S>::tolerance(cfg.tolerance);
    // deep atom measures are cheap, quadratic enumeration is not; compare
    // against the best CVT at a level the search handles quickly
    const int cvt_level = std::min(depth, 14);
    CylinderTable<S> table = build_table(model, cvt_level, cfg.parallel);
    std::vector<CvtResult<S>> results = enumerate_cvts(table, man.n, cfg);
    if (results.empty()) {
        j["best_cvt"] = json();
        j["difference"] = json();
    } else {
        const CvtResult<S>& best = best_cvt(results, eps);
        json bc = json::array();
        for (const S& c : best.centroids) bc.push_back(real_json(c));
        j["best_cvt"]["m"] = cvt_level;
        j["best_cvt"]["centroids"] = bc;
        j["best_cvt"]["distortion"] = real_json(best.distortion);
        j["difference"] =
            format_real(std::fabs(run.cost - scalar_ops<S>::to_double(best.distortion)));
    }
    return j;
}

template <typename S>
GeneralizedIfsSpec<S> spec_from_json(const json& doc) {
    if (!doc.is_object()) throw SpecInvalid("generalized spec must be a JSON object");
    auto parse_value = [](const json& v) -> S {
        if (v.is_string()) return scalar_ops<S>::from_string(v.get<std::string>());
        if (v.is_number_integer())
            return S(static_cast<int>(v.get<int64_t>()));
        if (v.is_number_float()) {
            if constexpr (scalar_ops<S>::exact)
                return rational(v.get<double>());
            else
                return v.get<double>();
        }
        throw SpecInvalid("spec values must be numbers or fraction strings");
    };
    auto parse_levels = [&](const json& arr) {
        LevelMaps<S> levels;
        if (arr.is_null()) return levels;
        if (!arr.is_array()) throw SpecInvalid("preamble/period must be arrays of levels");
        for (const json& level : arr) {
            if (!level.is_array()) throw SpecInvalid("each level must be an array of maps");
            std::vector<MapEntry<S>> family;
            for (const json& entry : level) {
                if (!entry.is_object() || !entry.contains("scale") ||
                    !entry.contains("offset") || !entry.contains("prob"))
                    throw SpecInvalid("each map needs scale, offset and prob");
                family.push_back({parse_value(entry.at("scale")),
                                  parse_value(entry.at("offset")),
                                  parse_value(entry.at("prob"))});
            }
            levels.push_back(std::move(family));
        }
        return levels;
    };
    GeneralizedIfsSpec<S> spec;
    spec.preamble = parse_levels(doc.value("preamble", json()));
    spec.period = parse_levels(doc.value("period", json()));
    validate_spec(spec);
    return spec;
}

template <typename S>
json run_generalized(const Manifest& man, bool escalate) {
    GeneralizedIfsSpec<S> spec = spec_from_json<S>(man.spec);
    SearchConfig cfg = config_from(man);
    const S eps = scalar_ops<S>::tolerance(cfg.tolerance);
    TailMoments<S> tm = tail_moments(spec);

    json j;
    j["manifest"] = man.to_json();
    j["measure"]["expectation"] = real_json(tm.at(0).mean);
    j["measure"]["variance"] = real_json(tm.at(0).variance);

    if (escalate) {
        auto [m_found, results] = find_cvts_generalized(spec, man.n, cfg);
        j["m_found"] = m_found;
        j["count"] = results.size();
        j["cvts"] = cvt_list_json(results);
        j["best"] = cvt_json(best_cvt(results, eps));
    } else {
        if (man.m < 1) throw ParamOutOfRange("generalized cvt requires --m >= 1");
        CylinderTable<S> table = build_table_generalized(spec, man.m, cfg.parallel);
        std::vector<CvtResult<S>> results = enumerate_cvts(table, man.n, cfg);
        j["m"] = man.m;
        j["cylinders"] = table.size();
        j["count"] = results.size();
        j["min_distortion"] =
            results.empty() ? json() : real_json(best_cvt(results, eps).distortion);
        j["cvts"] = cvt_list_json(results);
    }
    return j;
}

template <typename S>
RunOutput run_with_scalar(const Manifest& man) {
    RunOutput out;
    if (man.command == "cvt") {
        out.report = run_cvt<S>(man);
    } else if (man.command == "optimal") {
        out.report = run_optimal<S>(man);
    } else if (man.command == "sweep") {
        if (man.format != "csv") throw ParamOutOfRange("sweep emits CSV; use --format csv");
        out.csv = run_sweep<S>(man);
        out.is_csv = true;
    } else if (man.command == "oracle-moments") {
        out.report = run_oracle_moments<S>(man);
    } else if (man.command == "oracle-dp") {
        out.report = run_oracle_dp<S>(man);
    } else if (man.command == "oracle-lloyd") {
        out.report = run_oracle_lloyd<S>(man);
    } else if (man.command == "generalized-cvt") {
        out.report = run_generalized<S>(man, false);
    } else if (man.command == "generalized-optimal") {
        out.report = run_generalized<S>(man, true);
    } else {
        throw ParamOutOfRange("unknown command '" + man.command + "'");
    }
    if (!out.is_csv && man.format != "json")
        throw ParamOutOfRange(man.command + " emits JSON; use --format json");
    return out;
}

}  // namespace

RunOutput run_manifest(const Manifest& manifest) {
    if (manifest.mode == "rational") return run_with_scalar<rational>(manifest);
    if (manifest.mode == "float") return run_with_scalar<double>(manifest);
    throw ParamOutOfRange("mode must be float or rational");
}

}  // namespace ccvt
