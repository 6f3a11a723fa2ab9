#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "meshmorph/config.hpp"
#include "meshmorph/error.hpp"
#include "meshmorph/hyperelastic.hpp"
#include "meshmorph/io.hpp"
#include "meshmorph/linear_elastic.hpp"
#include "meshmorph/problems.hpp"
#include "meshmorph/quality.hpp"
#include "meshmorph/sensitivity.hpp"
#include "meshmorph/spring.hpp"
#include "meshmorph/stiffening.hpp"

namespace meshmorph {

enum class ModelKind { spring, linear_elastic, yeoh };

inline const char* to_string(ModelKind m) {
    switch (m) {
    case ModelKind::spring: return "spring";
    case ModelKind::linear_elastic: return "linear_elastic";
    case ModelKind::yeoh: return "yeoh";
    }
    return "unknown";
}

inline ModelKind parse_model(std::string_view s) {
    if (s == "spring") return ModelKind::spring;
    if (s == "linear_elastic") return ModelKind::linear_elastic;
    if (s == "yeoh" || s == "hyperelastic") return ModelKind::yeoh;
    throw ConfigError("unknown model '" + std::string(s) + "'");
}

/// Everything a run needs, resolved from a config document.
struct RunSettings {
    ProblemKind problem = ProblemKind::beam;
    ProblemSpec spec;
    std::string motion_mode = "cantilever";
    MotionSpec motion;
    std::vector<ModelKind> models{ModelKind::spring};
    std::vector<DiagonalStrategy> strategies{DiagonalStrategy::selective};
    SpringConfig spring;
    LinearElasticConfig linear_elastic;
    YeohConfig yeoh;
    /// Quality aggregates over layers 1..report_layers; 0 means every element.
    int report_layers = 0;
    VerificationOptions verification;
    bool negative_control = true;
    bool dump_matrix = false;
};

inline const std::map<std::string, std::vector<std::string>>& known_config_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"problem",
         {"type", "model", "resolution", "channel_length", "channel_height", "beam_center_x",
          "beam_height", "beam_thickness", "hollow_width", "hollow_bottom", "hollow_top",
          "foil_center_x", "foil_center_y", "foil_length", "foil_thickness", "patch_cells"}},
        {"motion", {"mode", "dx", "dy", "rotation_deg", "amplitude", "tip_deflection", "path"}},
        {"spring", {"strategy", "n_steps", "gsc", "tsc", "trial_fraction", "layer_factors"}},
        {"linear_elastic", {"elastic_modulus", "poisson_ratio", "iterations", "layer_factors"}},
        {"yeoh", {"a10", "a20", "a30", "kappa", "increments", "newton_tol", "max_iters", "layer_factors"}},
        {"stiffening", {"layer_factors", "report_layers"}},
        {"sensitivity",
         {"h_schedule", "dx_threshold", "du_threshold", "resolve_tol", "negative_control", "dump_matrix"}},
        {"sweep", {}},
    };
    return keys;
}

inline std::string default_motion_mode(ProblemKind kind) {
    return kind == ProblemKind::beam ? "cantilever" : "translation";
}

inline RunSettings settings_from(const ConfigDocument& doc, const std::string& base_dir = ".") {
    {
        ConfigDocument checked = doc;
        checked.sections.erase("sweep");
        checked.require_known(known_config_keys());
    }
    RunSettings s;
    s.problem = parse_problem_kind(doc.string("problem", "type", "beam"));
    s.spec = default_spec(s.problem);
    ProblemSpec& p = s.spec;
    p.resolution = doc.number("problem", "resolution", p.resolution);
    p.channel_length = doc.number("problem", "channel_length", p.channel_length);
    p.channel_height = doc.number("problem", "channel_height", p.channel_height);
    p.beam_center_x = doc.number("problem", "beam_center_x", p.beam_center_x);
    p.beam_height = doc.number("problem", "beam_height", p.beam_height);
    p.beam_thickness = doc.number("problem", "beam_thickness", p.beam_thickness);
    p.hollow_width = doc.number("problem", "hollow_width", p.hollow_width);
    p.hollow_bottom = doc.number("problem", "hollow_bottom", p.hollow_bottom);
    p.hollow_top = doc.number("problem", "hollow_top", p.hollow_top);
    p.foil_center_x = doc.number("problem", "foil_center_x", p.foil_center_x);
    p.foil_center_y = doc.number("problem", "foil_center_y", p.foil_center_y);
    p.foil_length = doc.number("problem", "foil_length", p.foil_length);
    p.foil_thickness = doc.number("problem", "foil_thickness", p.foil_thickness);
    p.patch_cells = doc.integer("problem", "patch_cells", p.patch_cells);

    s.models.clear();
    for (const auto& m : doc.strings("problem", "model", {"spring"})) s.models.push_back(parse_model(m));

    s.motion_mode = doc.string("motion", "mode", default_motion_mode(s.problem));
    if (s.problem == ProblemKind::patch) s.motion.translation = {0.0, -0.1};
    s.motion.translation.x = doc.number("motion", "dx", s.motion.translation.x);
    s.motion.translation.y = doc.number("motion", "dy", s.motion.translation.y);
    s.motion.rotation_deg = doc.number("motion", "rotation_deg", s.motion.rotation_deg);
    s.motion.bending_amplitude = doc.number("motion", "amplitude", s.motion.bending_amplitude);
    s.motion.tip_deflection = doc.number("motion", "tip_deflection", s.motion.tip_deflection);
    s.motion.path = doc.string("motion", "path", "");
    if (!s.motion.path.empty() && std::filesystem::path(s.motion.path).is_relative())
        s.motion.path = (std::filesystem::path(base_dir) / s.motion.path).string();
    if (s.motion_mode != "cantilever") s.motion.mode = parse_motion_mode(s.motion_mode);

    const auto shared = doc.numbers("stiffening", "layer_factors", {});
    s.report_layers = doc.integer("stiffening", "report_layers", 0);
    if (s.report_layers < 0) throw ConfigError("[stiffening] report_layers must be >= 0");

    s.strategies.clear();
    for (const auto& name : doc.strings("spring", "strategy", {"selective"}))
        s.strategies.push_back(parse_strategy(name));
    s.spring.n_steps = doc.integer("spring", "n_steps", s.spring.n_steps);
    s.spring.geometric_scale = doc.number("spring", "gsc", s.spring.geometric_scale);
    s.spring.torsional_scale = doc.number("spring", "tsc", s.spring.torsional_scale);
    s.spring.trial_fraction = doc.number("spring", "trial_fraction", s.spring.trial_fraction);
    s.spring.layer_factors = doc.numbers("spring", "layer_factors", shared);
    s.spring.validate();

    s.linear_elastic.elastic_modulus =
        doc.number("linear_elastic", "elastic_modulus", s.linear_elastic.elastic_modulus);
    s.linear_elastic.poisson_ratio = doc.number("linear_elastic", "poisson_ratio", s.linear_elastic.poisson_ratio);
    s.linear_elastic.iterations = doc.integer("linear_elastic", "iterations", s.linear_elastic.iterations);
    s.linear_elastic.layer_factors = doc.numbers("linear_elastic", "layer_factors", shared);
    s.linear_elastic.validate();

    YeohConfig& y = s.yeoh;
    y.material.a10 = doc.number("yeoh", "a10", y.material.a10);
    y.material.a20 = doc.number("yeoh", "a20", y.material.a20);
    y.material.a30 = doc.number("yeoh", "a30", y.material.a30);
    y.material.kappa = doc.number("yeoh", "kappa", y.material.kappa);
    y.n_increments = doc.integer("yeoh", "increments", y.n_increments);
    y.newton_tol = doc.number("yeoh", "newton_tol", y.newton_tol);
    y.max_newton_iters = doc.integer("yeoh", "max_iters", y.max_newton_iters);
    y.layer_factors = doc.numbers("yeoh", "layer_factors", shared);
    y.validate();

    VerificationOptions& v = s.verification;
    v.h_schedule = doc.numbers("sensitivity", "h_schedule", v.h_schedule);
    v.dx_threshold = doc.number("sensitivity", "dx_threshold", v.dx_threshold);
    v.du_threshold = doc.number("sensitivity", "du_threshold", v.du_threshold);
    v.resolve_tol = doc.number("sensitivity", "resolve_tol", v.resolve_tol);
    s.negative_control = doc.flag("sensitivity", "negative_control", true);
    s.dump_matrix = doc.flag("sensitivity", "dump_matrix", false);
    if (v.h_schedule.empty()) throw ConfigError("[sensitivity] h_schedule must not be empty");
    for (double h : v.h_schedule)
        if (!(h > 0.0)) throw ConfigError("[sensitivity] h values must be > 0");
    return s;
}

inline PrescribedMotion build_motion(const Problem& problem, const RunSettings& s) {
    if (s.motion_mode == "cantilever") return cantilever_motion(problem, s.motion.tip_deflection);
    return prescribe_motion(problem, s.motion);
}

struct CaseSpec {
    ModelKind model = ModelKind::spring;
    DiagonalStrategy strategy = DiagonalStrategy::selective;
};

inline std::vector<CaseSpec> expand_cases(const RunSettings& s) {
    std::vector<CaseSpec> out;
    for (ModelKind m : s.models) {
        if (m == ModelKind::spring) {
            for (DiagonalStrategy st : s.strategies) out.push_back({m, st});
        } else {
            out.push_back({m, DiagonalStrategy::selective});
        }
    }
    return out;
}

struct CaseOutcome {
    CaseSpec spec;
    std::string status = "ok";
    std::string message;
    QualityReport quality;
    QuadMesh deformed;
    std::vector<int> layer_index;
    double wall_time_s = 0.0;
};

inline const std::vector<double>& layer_factors_of(const RunSettings& s, ModelKind m) {
    switch (m) {
    case ModelKind::spring: return s.spring.layer_factors;
    case ModelKind::linear_elastic: return s.linear_elastic.layer_factors;
    case ModelKind::yeoh: return s.yeoh.layer_factors;
    }
    return s.spring.layer_factors;
}

/// Per-element layer index (0 outside the first `depth` layers).
inline std::vector<int> layer_index(const QuadMesh& mesh, int depth) {
    if (depth <= 0 || mesh.interface_nodes.empty()) return std::vector<int>(mesh.element_count(), 0);
    return identify_layers(mesh, depth).layer_of_element;
}

/// Runs one model on one problem. Solver-side failures become a status; config
/// errors propagate.
inline CaseOutcome evaluate_case(const Problem& problem, const PrescribedMotion& motion,
                                 const RunSettings& s, const CaseSpec& spec) {
    CaseOutcome out;
    out.spec = spec;
    const auto start = std::chrono::steady_clock::now();
    const int depth = std::max<int>(s.report_layers, static_cast<int>(layer_factors_of(s, spec.model).size()));
    out.layer_index = layer_index(problem.mesh, depth);
    try {
        switch (spec.model) {
        case ModelKind::spring: {
            SpringConfig c = s.spring;
            c.strategy = spec.strategy;
            out.deformed = deform_spring(problem.mesh, motion, c);
            break;
        }
        case ModelKind::linear_elastic:
            out.deformed = deform_linear_elastic(problem.mesh, motion, s.linear_elastic);
            break;
        case ModelKind::yeoh:
            out.deformed = deform_hyperelastic(problem.mesh, motion, s.yeoh).mesh;
            break;
        }
        std::vector<int> region;
        if (s.report_layers > 0)
            region = identify_layers(problem.mesh, s.report_layers).elements_up_to(s.report_layers);
        out.quality = s.report_layers > 0
                          ? quality_report(out.deformed, problem.mesh, std::span<const int>(region))
                          : quality_report(out.deformed, problem.mesh);
    } catch (const ConfigError&) {
        throw;
    } catch (const SolverError& e) {
        out.status = "solver_error";
        out.message = e.what();
    } catch (const InadmissibleStateError& e) {
        out.status = "inadmissible";
        out.message = e.what();
    } catch (const DegenerateElementError& e) {
        out.status = "degenerate";
        out.message = e.what();
    }
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

// ---------------------------------------------------------------------------
// Result tables

inline std::string join_factors(const std::vector<double>& f) {
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out += ';';
        out += format_number(f[i]);
    }
    return out;
}

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{
        "problem", "model", "motion", "strategy", "n_steps", "gsc", "tsc", "elastic_modulus",
        "poisson_ratio", "iterations", "a10", "a20", "a30", "kappa", "increments", "layer_factors",
        "min_skewness", "min_area_ratio", "max_area_ratio", "inverted_count", "wall_time_s", "status"};
    return cols;
}

/// One CSV row (cells in result_columns() order).
inline std::vector<std::string> result_row(const RunSettings& s, const CaseOutcome& c) {
    std::vector<std::string> r(result_columns().size());
    const auto num = [](double v) { return format_number(v); };
    r[0] = to_string(s.problem);
    r[1] = to_string(c.spec.model);
    r[2] = s.motion_mode;
    switch (c.spec.model) {
    case ModelKind::spring:
        r[3] = to_string(c.spec.strategy);
        r[4] = std::to_string(s.spring.n_steps);
        r[5] = num(s.spring.geometric_scale);
        r[6] = num(s.spring.torsional_scale);
        break;
    case ModelKind::linear_elastic:
        r[7] = num(s.linear_elastic.elastic_modulus);
        r[8] = num(s.linear_elastic.poisson_ratio);
        r[9] = std::to_string(s.linear_elastic.iterations);
        break;
    case ModelKind::yeoh:
        r[10] = num(s.yeoh.material.a10);
        r[11] = num(s.yeoh.material.a20);
        r[12] = num(s.yeoh.material.a30);
        r[13] = num(s.yeoh.material.kappa);
        r[14] = std::to_string(s.yeoh.n_increments);
        break;
    }
    r[15] = join_factors(layer_factors_of(s, c.spec.model));
    if (c.status == "ok") {
        r[16] = num(c.quality.min_skewness);
        r[17] = num(c.quality.min_area_ratio);
        r[18] = num(c.quality.max_area_ratio);
        r[19] = std::to_string(c.quality.inverted_elements.size());
    }
    r[20] = num(c.wall_time_s);
    r[21] = c.status;
    return r;
}

inline void write_csv_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

enum class OutputFormat { csv, vtk, both };

inline OutputFormat parse_format(std::string_view s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "vtk") return OutputFormat::vtk;
    if (s == "both") return OutputFormat::both;
    throw ConfigError("unknown format '" + std::string(s) + "' (csv, vtk or both)");
}

inline std::string case_stem(const RunSettings& s, const CaseSpec& c) {
    std::string stem = std::string(to_string(s.problem)) + "_" + s.motion_mode + "_" + to_string(c.model);
    if (c.model == ModelKind::spring) stem += std::string("_") + to_string(c.strategy);
    return stem;
}

struct RunResult {
    RunSettings settings;
    std::vector<CaseOutcome> cases;
};

/// run_case: every model (and spring strategy) of one config; writes run.csv
/// plus per-case element CSV and/or VTK into `out_dir`.
inline RunResult run_case(const ConfigDocument& doc, const std::string& base_dir,
                          const std::string& out_dir, OutputFormat format) {
    RunResult res{settings_from(doc, base_dir), {}};
    const Problem problem = build_problem(res.settings.problem, res.settings.spec);
    const PrescribedMotion motion = build_motion(problem, res.settings);
    for (const auto& c : expand_cases(res.settings))
        res.cases.push_back(evaluate_case(problem, motion, res.settings, c));

    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "run.csv");
    if (!os) throw Error("cannot write run.csv in " + out_dir);
    write_csv_line(os, result_columns());
    for (const auto& c : res.cases) {
        write_csv_line(os, result_row(res.settings, c));
        if (c.status != "ok") continue;
        const auto fields = element_fields(c.quality, c.layer_index);
        const auto stem = (std::filesystem::path(out_dir) / case_stem(res.settings, c.spec)).string();
        if (format != OutputFormat::vtk) write_element_csv(stem + ".csv", fields);
        if (format != OutputFormat::csv) write_vtk(stem + ".vtk", c.deformed, fields);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepParameter {
    std::string path;  // section.key or section.layer_factors.K
    std::vector<ConfigValue> values;
};

struct SweepSpec {
    std::vector<SweepParameter> parameters;
    std::size_t max_points = 10000;

    std::size_t grid_size() const {
        std::size_t n = 1;
        for (const auto& p : parameters) n *= p.values.size();
        return n;
    }
};

namespace detail {

inline std::vector<double> inclusive_range(double start, double stop, double step) {
    if (!(step > 0.0)) throw ConfigError("sweep range step must be > 0");
    if (stop < start) throw ConfigError("sweep range is empty");
    std::vector<double> out;
    const long n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

inline std::vector<double> logspace(double a, double b, int n) {
    if (n < 1) throw ConfigError("logspace needs at least one point");
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(std::pow(10.0, n == 1 ? a : a + (b - a) * i / (n - 1)));
    return out;
}

inline std::vector<ConfigValue> sweep_values(const std::string& key, const ConfigValue& v) {
    std::vector<ConfigValue> out;
    if (v.kind == ConfigValue::Kind::array) {
        out = v.items;
    } else if (v.kind == ConfigValue::Kind::string) {
        static const std::regex fn(R"(\s*(range|logspace)\s*\(\s*([^,]+),\s*([^,]+),\s*([^,\)]+)\)\s*)");
        std::smatch m;
        if (!std::regex_match(v.text, m, fn)) {
            out.push_back(v);
        } else {
            double a, b, c;
            try {
                a = std::stod(m[2]);
                b = std::stod(m[3]);
                c = std::stod(m[4]);
            } catch (const std::exception&) {
                throw ConfigError("[sweep] " + key + ": malformed " + m[1].str() + "()");
            }
            const auto nums = m[1] == "range" ? inclusive_range(a, b, c) : logspace(a, b, static_cast<int>(c));
            for (double d : nums) out.push_back(ConfigValue::of(d));
        }
    } else {
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("[sweep] " + key + " has no values");
    return out;
}

}  // namespace detail

inline SweepSpec sweep_spec_from(const ConfigDocument& doc) {
    SweepSpec spec;
    const auto it = doc.sections.find("sweep");
    if (it == doc.sections.end()) throw ConfigError("config has no [sweep] section");
    const ConfigTable& table = it->second;
    const double cap = doc.number("sweep", "max_points", 10000.0);
    if (!(cap >= 1.0)) throw ConfigError("[sweep] max_points must be >= 1");
    spec.max_points = static_cast<std::size_t>(cap);
    std::vector<std::string> order = doc.strings("sweep", "parameters", {});
    if (order.empty()) {
        for (const auto& [key, value] : table)
            if (key != "max_points" && key != "parameters") order.push_back(key);
    }
    for (const auto& [key, value] : table) {
        if (key == "max_points" || key == "parameters") continue;
        if (std::find(order.begin(), order.end(), key) == order.end())
            throw ConfigError("[sweep] " + key + " is not listed in parameters");
    }
    for (const auto& key : order) {
        const auto v = table.find(key);
        if (v == table.end()) throw ConfigError("[sweep] parameter " + key + " has no values");
        if (key.find('.') == std::string::npos)
            throw ConfigError("[sweep] parameter " + key + " must be section.key");
        spec.parameters.push_back({key, detail::sweep_values(key, v->second)});
    }
    if (spec.parameters.empty()) throw ConfigError("[sweep] lists no parameters");
    return spec;
}

/// Applies one sweep value to a copy of the document. `section.layer_factors.K`
/// sets the K-th factor (1-based), padding lower layers with 1.
inline void apply_override(ConfigDocument& doc, const std::string& path, const ConfigValue& value) {
    const auto dot = path.find('.');
    const std::string section = path.substr(0, dot);
    const std::string key = path.substr(dot + 1);
    static const std::regex layer(R"(layer_factors\.([0-9]+))");
    std::smatch m;
    if (std::regex_match(key, m, layer)) {
        const int k = std::stoi(m[1]);
        if (k < 1) throw ConfigError("[sweep] layer indices start at 1");
        if (value.kind != ConfigValue::Kind::number) throw ConfigError("[sweep] " + path + " must be numeric");
        std::vector<double> f = doc.numbers(section, "layer_factors",
                                            section == "stiffening" ? std::vector<double>{}
                                                                    : doc.numbers("stiffening", "layer_factors", {}));
        if (static_cast<int>(f.size()) < k) f.resize(k, 1.0);
        f[k - 1] = value.number;
        std::vector<ConfigValue> items;
        for (double d : f) items.push_back(ConfigValue::of(d));
        doc.set(section, "layer_factors", ConfigValue::of(std::move(items)));
        return;
    }
    doc.set(section, key, value);
}

inline std::string value_text(const ConfigValue& v) {
    switch (v.kind) {
    case ConfigValue::Kind::number: return format_number(v.number);
    case ConfigValue::Kind::boolean: return v.boolean ? "true" : "false";
    case ConfigValue::Kind::string: return v.text;
    case ConfigValue::Kind::array: {
        std::string s;
        for (std::size_t i = 0; i < v.items.size(); ++i) s += (i ? ";" : "") + value_text(v.items[i]);
        return s;
    }
    }
    return "";
}

struct SweepRow {
    std::vector<ConfigValue> point;
    RunSettings settings;
    CaseOutcome outcome;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepRow> rows;  // grid order, then case order

    /// Index of the row with the largest min_skewness among ok rows matching
    /// `filter`; first in grid order on ties.
    template <class Filter>
    std::optional<std::size_t> argmax(Filter filter) const {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.outcome.status != "ok" || !filter(r)) continue;
            if (!best || r.outcome.quality.min_skewness > rows[*best].outcome.quality.min_skewness) best = i;
        }
        return best;
    }
};

inline std::vector<ConfigValue> grid_point(const SweepSpec& spec, std::size_t index) {
    std::vector<ConfigValue> point(spec.parameters.size());
    for (std::size_t k = spec.parameters.size(); k-- > 0;) {
        const auto& vals = spec.parameters[k].values;
        point[k] = vals[index % vals.size()];
        index /= vals.size();
    }
    return point;
}

/// Evaluates the sweep grid (last parameter fastest) with `jobs` worker threads.
/// Output order is grid order regardless of completion order.
inline SweepResult run_sweep(const ConfigDocument& doc, const std::string& base_dir, int jobs = 1) {
    SweepResult res{sweep_spec_from(doc), {}};
    const std::size_t n = res.spec.grid_size();
    if (n > res.spec.max_points)
        throw ConfigError("sweep grid has " + std::to_string(n) + " points, above the cap of " +
                          std::to_string(res.spec.max_points));

    bool geometry_swept = false;
    for (const auto& p : res.spec.parameters)
        geometry_swept = geometry_swept || p.path.rfind("problem.", 0) == 0 || p.path.rfind("motion.", 0) == 0;

    // Resolve every point up front so config errors surface before any solve.
    std::vector<RunSettings> settings(n);
    std::vector<std::vector<ConfigValue>> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        points[i] = grid_point(res.spec, i);
        ConfigDocument d = doc;
        d.sections.erase("sweep");
        for (std::size_t k = 0; k < points[i].size(); ++k)
            apply_override(d, res.spec.parameters[k].path, points[i][k]);
        settings[i] = settings_from(d, base_dir);
    }

    std::optional<Problem> shared_problem;
    std::optional<PrescribedMotion> shared_motion;
    if (!geometry_swept) {
        shared_problem = build_problem(settings[0].problem, settings[0].spec);
        shared_motion = build_motion(*shared_problem, settings[0]);
    }

    std::vector<std::vector<CaseOutcome>> outcomes(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                std::optional<Problem> local_problem;
                std::optional<PrescribedMotion> local_motion;
                if (!shared_problem) {
                    local_problem = build_problem(settings[i].problem, settings[i].spec);
                    local_motion = build_motion(*local_problem, settings[i]);
                }
                const Problem& prob = shared_problem ? *shared_problem : *local_problem;
                const PrescribedMotion& mot = shared_motion ? *shared_motion : *local_motion;
                for (const auto& c : expand_cases(settings[i]))
                    outcomes[i].push_back(evaluate_case(prob, mot, settings[i], c));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t i = 0; i < n; ++i)
        for (auto& o : outcomes[i]) res.rows.push_back({points[i], settings[i], std::move(o)});
    return res;
}

/// Long-form CSV: swept parameters first, then the run columns. A comment block
/// with the argmax of min_skewness per (model, strategy) follows the table.
inline void write_sweep_csv(const std::string& path, const SweepResult& res) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    std::vector<std::string> header;
    for (const auto& p : res.spec.parameters) header.push_back(p.path);
    for (const auto& c : result_columns()) header.push_back(c);
    write_csv_line(os, header);
    std::vector<std::vector<std::string>> lines;
    for (const auto& r : res.rows) {
        std::vector<std::string> cells;
        for (const auto& v : r.point) cells.push_back(value_text(v));
        for (auto& c : result_row(r.settings, r.outcome)) cells.push_back(std::move(c));
        write_csv_line(os, cells);
        lines.push_back(std::move(cells));
    }
    std::vector<std::pair<ModelKind, DiagonalStrategy>> groups;
    for (const auto& r : res.rows) {
        const auto key = std::make_pair(r.outcome.spec.model,
                                        r.outcome.spec.model == ModelKind::spring ? r.outcome.spec.strategy
                                                                                  : DiagonalStrategy::selective);
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
    os << "# argmax of min_skewness\n# ";
    write_csv_line(os, header);
    for (const auto& g : groups) {
        const auto best = res.argmax([&](const SweepRow& r) {
            return r.outcome.spec.model == g.first &&
                   (g.first != ModelKind::spring || r.outcome.spec.strategy == g.second);
        });
        if (best) {
            os << "# ";
            write_csv_line(os, lines[*best]);
        }
    }
}

// ---------------------------------------------------------------------------
// Sensitivity verification

struct VerifyResult {
    HyperelasticEquilibrium state;
    VerificationReport report;
    bool passed = false;
};

/// Solves the configured problem with the Yeoh model, then runs the FD checks
/// (and the negative control unless disabled). Passing means each block's best
/// h meets its threshold and every corrupted block is flagged.
inline VerifyResult verify_sensitivity(const RunSettings& s) {
    const Problem problem = build_problem(s.problem, s.spec);
    const PrescribedMotion motion = build_motion(problem, s);
    auto solved = deform_hyperelastic(problem.mesh, motion, s.yeoh);
    VerifyResult out;
    out.state = std::move(solved.state);
    out.report = verify_fd(out.state, s.verification);
    out.passed = out.report.best("dD_dx").pass && out.report.best("dD_du").pass;
    if (s.negative_control) {
        VerificationOptions bad = s.verification;
        bad.corruption = 1.01;
        const auto control = verify_fd(out.state, bad);
        out.passed = out.passed && !control.best("dD_dx_corrupted").pass &&
                     !control.best("dD_du_corrupted").pass;
        out.report.rows.insert(out.report.rows.end(), control.rows.begin(), control.rows.end());
    }
    return out;
}

}  // namespace meshmorph
