// meshmorph command-line driver.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "meshmorph/meshmorph.hpp"

namespace fs = std::filesystem;
using namespace meshmorph;

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    int jobs = 1;
    long seed = 0;  // reserved; no solver is stochastic
    std::string format = "both";
    std::string vtk_in, vtk_ref;
};

std::string base_dir(const std::string& config) {
    const auto parent = fs::path(config).parent_path();
    return parent.empty() ? std::string(".") : parent.string();
}

void print_summary(const std::string& label, const QualityReport& q) {
    std::printf("%-40s min_skewness %.6f  area_ratio [%.6f, %.6f]  inverted %zu\n", label.c_str(),
                q.min_skewness, q.min_area_ratio, q.max_area_ratio, q.inverted_elements.size());
}

int cmd_run(const Options& o) {
    const auto doc = load_config(o.config);
    const auto res = run_case(doc, base_dir(o.config), o.out, parse_format(o.format));
    for (const auto& c : res.cases) {
        const auto label = case_stem(res.settings, c.spec);
        if (c.status == "ok") print_summary(label, c.quality);
        else std::printf("%-40s %s: %s\n", label.c_str(), c.status.c_str(), c.message.c_str());
    }
    std::printf("wrote %s\n", (fs::path(o.out) / "run.csv").string().c_str());
    return 0;
}

int cmd_sweep(const Options& o) {
    const auto doc = load_config(o.config);
    const auto res = run_sweep(doc, base_dir(o.config), o.jobs);
    fs::create_directories(o.out);
    const auto path = (fs::path(o.out) / "sweep.csv").string();
    write_sweep_csv(path, res);
    std::size_t failed = 0;
    for (const auto& r : res.rows) failed += r.outcome.status != "ok";
    const auto best = res.argmax([](const SweepRow&) { return true; });
    std::printf("%zu grid points, %zu rows (%zu failed)\n", res.spec.grid_size(), res.rows.size(), failed);
    if (best) {
        const auto& r = res.rows[*best];
        std::printf("best min_skewness %.6f (%s) at", r.outcome.quality.min_skewness, to_string(r.outcome.spec.model));
        for (std::size_t k = 0; k < r.point.size(); ++k)
            std::printf(" %s=%s", res.spec.parameters[k].path.c_str(), value_text(r.point[k]).c_str());
        std::printf("\n");
    }
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_verify(const Options& o) {
    const auto doc = load_config(o.config);
    auto settings = settings_from(doc, base_dir(o.config));
    if (!doc.has("problem", "type")) {
        settings.problem = ProblemKind::patch;
        settings.spec = default_spec(ProblemKind::patch);
        settings.motion_mode = doc.string("motion", "mode", "translation");
        if (!doc.has("motion", "dy")) settings.motion.translation = {0.0, -0.1};
    }
    const auto res = verify_sensitivity(settings);
    fs::create_directories(o.out);
    const auto path = (fs::path(o.out) / "verification.csv").string();
    res.report.write_csv(path);
    for (const char* block : {"dD_dx", "dD_du", "dD_dx_corrupted", "dD_du_corrupted"}) {
        bool present = false;
        for (const auto& r : res.report.rows) present = present || r.block == block;
        if (!present) continue;
        const auto& b = res.report.best(block);
        std::printf("%-16s best h %.0e  relative error %.3e  %s\n", block, b.h, b.relative_error,
                    b.pass ? "pass" : "FAIL");
    }
    if (settings.dump_matrix) {
        const auto mm = (fs::path(o.out) / "tangent.mtx").string();
        write_matrix_market(mm, equilibrium_tangent(res.state));
        std::printf("wrote %s\n", mm.c_str());
    }
    std::printf("wrote %s\nverification %s\n", path.c_str(), res.passed ? "passed" : "FAILED");
    return res.passed ? 0 : 1;
}

int cmd_quality(const Options& o) {
    const auto deformed = read_vtk(o.vtk_in);
    const auto reference = read_vtk(o.vtk_ref);
    const auto q = quality_report(deformed, reference);
    const auto fields = element_fields(q, std::vector<int>(deformed.element_count(), 0));
    fs::create_directories(o.out);
    const auto fmt = parse_format(o.format);
    if (fmt != OutputFormat::vtk) write_element_csv((fs::path(o.out) / "quality.csv").string(), fields);
    if (fmt != OutputFormat::csv) write_vtk((fs::path(o.out) / "quality.vtk").string(), deformed, fields);
    print_summary(fs::path(o.vtk_in).filename().string(), q);
    return 0;
}

int cmd_export_motion(const Options& o) {
    const auto doc = load_config(o.config);
    const auto settings = settings_from(doc, base_dir(o.config));
    const auto problem = build_problem(settings.problem, settings.spec);
    const auto motion = build_motion(problem, settings);
    fs::create_directories(o.out);
    const auto path = (fs::path(o.out) / "motion.csv").string();
    write_motion_csv(path, motion);
    std::printf("wrote %s (%zu interface nodes)\n", path.c_str(), motion.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meshmorph: 2D quad mesh deformation with spring, linear elastic and Yeoh models"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--jobs", o.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--seed", o.seed, "Reserved; the solvers are deterministic");
        sub->add_option("--format", o.format, "Per-case outputs")
            ->check(CLI::IsMember({"csv", "vtk", "both"}))
            ->capture_default_str();
    };
    auto* run = app.add_subcommand("run", "Run every configured model on one problem");
    run->add_option("config", o.config, "Config file")->required()->check(CLI::ExistingFile);
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "Evaluate a parameter grid");
    sweep->add_option("config", o.config, "Config file")->required()->check(CLI::ExistingFile);
    add_common(sweep);
    auto* verify = app.add_subcommand("verify-sensitivity", "Finite-difference checks of the sensitivity blocks");
    verify->add_option("config", o.config, "Config file")->required()->check(CLI::ExistingFile);
    add_common(verify);
    auto* quality = app.add_subcommand("quality", "Quality metrics of a deformed mesh against its reference");
    quality->add_option("vtk_in", o.vtk_in, "Deformed mesh (legacy VTK)")->required()->check(CLI::ExistingFile);
    quality->add_option("vtk_ref", o.vtk_ref, "Reference mesh (legacy VTK)")->required()->check(CLI::ExistingFile);
    add_common(quality);
    auto* motion = app.add_subcommand("export-motion", "Write the configured interface motion as node_id,dx,dy");
    motion->add_option("config", o.config, "Config file")->required()->check(CLI::ExistingFile);
    add_common(motion);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(o);
        if (*sweep) return cmd_sweep(o);
        if (*verify) return cmd_verify(o);
        if (*quality) return cmd_quality(o);
        if (*motion) return cmd_export_motion(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
