#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmcforge/parallel.hpp"
#include "cmcforge/runio.hpp"
#include "cmcforge/search.hpp"
#include "cmcforge/surface.hpp"

using namespace cmcforge;
using nlohmann::json;

namespace {

// 0 = success, 1 = usage or input error, 2 = numerical non-success
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNotConverged = 2;

json zero_list(const std::vector<ZeroInfo>& zeros) {
    json arr = json::array();
    for (const ZeroInfo& z : zeros)
        arr.push_back({{"z", {z.z.real(), z.z.imag()}},
                       {"multiplicity", z.multiplicity},
                       {"low_confidence", z.low_confidence}});
    return arr;
}

int run_solve(const std::string& config_path, const std::string& out_path) {
    SolveInput input = load_solve_input(config_path);
    SolveOutcome out =
        minimize_surface(input.params, input.config, input.init, input.family, input.lambda0);
    save_run_record(out.best, out_path);
    std::printf("final_F=%.17g\n", out.best.final_F);
    std::printf("F_dense=%.17g\n", out.best.F_dense);
    std::printf("eval_count=%ld\n", out.best.eval_count);
    std::printf("converged=%d\n", out.converged ? 1 : 0);
    if (!out.converged) std::fprintf(stderr, "solve: %s\n", out.message.c_str());
    return out.converged ? kOk : kNotConverged;
}

int run_continue(const std::string& start_path, const std::string& family_str,
                 const std::string& driver_str, double step, int count,
                 const std::string& out_dir) {
    RunRecord start = load_run_record(start_path);
    if (!start.converged) {
        std::fprintf(stderr, "continue: start record did not converge\n");
        return kUsage;
    }
    FamilySpec spec;
    spec.family = family_str == "II" ? FamilyKind::II : FamilyKind::I;
    spec.driver = driver_str == "sym" ? FamilyDriver::sym_angle : FamilyDriver::conformal_angle;
    spec.step = step;
    spec.count = 1; // stepped one at a time so a failure leaves partial output
    if (spec.family == FamilyKind::II && start.stability.unstable_count != 1 && !start.lambda0) {
        std::fprintf(stderr, "continue: family II needs an unstable start record\n");
        return kUsage;
    }

    std::filesystem::create_directories(out_dir);
    std::vector<RunRecord> rows{start};
    bool failed = false;
    RunRecord current = start;
    for (int k = 1; k <= count; ++k) {
        std::vector<RunRecord> produced = continue_family(current, spec);
        const RunRecord& rec = produced.front();
        char name[32];
        std::snprintf(name, sizeof(name), "step_%03d.json", k);
        save_run_record(rec, (std::filesystem::path(out_dir) / name).string());
        rows.push_back(rec);
        std::printf("step=%d driver=%.17g final_F=%.17g converged=%d\n", k, rec.driver_value,
                    rec.final_F, rec.converged ? 1 : 0);
        if (!rec.converged) {
            failed = true;
            break;
        }
        current = rec;
    }
    std::ofstream csv(std::filesystem::path(out_dir) / "family.csv");
    csv << family_summary_csv(rows);
    if (failed) std::fprintf(stderr, "continue: stopped at the first unconverged step\n");
    return failed ? kNotConverged : kOk;
}

int run_surface(const std::string& run_path, const std::string& grid, int samples,
                const std::string& format, const std::string& out_path) {
    int w = 0, h = 0;
    char tail = 0;
    if (std::sscanf(grid.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 8 || h < 4) {
        std::fprintf(stderr, "surface: --grid expects WxH with W >= 8, H >= 4\n");
        return kUsage;
    }
    RunRecord rec = load_run_record(run_path);

    SurfaceOptions opts;
    opts.n_theta = w;
    opts.n_radial = h;
    opts.lambda_samples = samples;
    opts.max_lambda_samples = std::max(samples, opts.max_lambda_samples);
    opts.throw_on_overlap = false; // report and keep the mesh instead
    opts.validate();

    SurfaceMesh mesh = build_surface(rec.params, rec.series, opts);

    // keep the mesh exportable even when the pole lands on a vertex
    const Vec4 poles[] = {default_pole(), Vec4(0, 0, 0, -1), Vec4(0, -1, 0, 0), Vec4(0, 0, -1, 0),
                          Vec4(-0.5, 0.5, -0.5, 0.5), Vec4(-0.8, 0.36, -0.3, 0.374).normalized()};
    bool projected = false;
    for (const Vec4& pole : poles) {
        try {
            stereographic(mesh, pole);
            projected = true;
            break;
        } catch (const SurfaceError&) {
        }
    }
    if (!projected) {
        std::fprintf(stderr, "surface: no pole candidate clears the mesh\n");
        return kUsage;
    }
    export_mesh(mesh, format == "ply" ? MeshFormat::ply : MeshFormat::obj, out_path);

    int degenerate = 0;
    const double area = mesh_area(mesh, &degenerate);
    std::printf("area=%.17g\n", area);
    std::printf("mean_curvature=%.17g\n", estimate_mean_curvature(mesh));
    std::printf("diameter=%.17g\n", mesh.diameter());
    std::printf("vertices=%zu\n", mesh.vertices.size());
    std::printf("faces=%zu\n", mesh.faces.size());
    std::printf("degenerate_faces=%d\n", degenerate);
    std::printf("copies=%d\n", mesh.copies);
    std::printf("closed=%d\n", mesh.closed ? 1 : 0);
    std::printf("vertex_unitarity_max=%.17g\n", mesh.diag.su2_deviation_max);
    std::printf("seam_consistency=%.17g\n", mesh.diag.seam_consistency);
    std::printf("overlap_mismatch=%.17g\n", mesh.diag.overlap_mismatch);
    std::printf("cap_spread=%.17g\n", mesh.diag.cap_spread);
    std::printf("conformality_max=%.17g\n", mesh.diag.conformality_max);
    std::printf("lambda_samples_used=%d\n", mesh.diag.lambda_samples_used);
    std::printf("fit_residual_max=%.17g\n", mesh.diag.max_fit_residual);
    std::printf("recon_error_max=%.17g\n", mesh.diag.max_recon_error);
    std::printf("unitarity_error_max=%.17g\n", mesh.diag.max_unitarity_error);
    std::printf("holomorphy_error_max=%.17g\n", mesh.diag.max_holomorphy_error);
    std::printf("det_deviation_max=%.17g\n", mesh.diag.max_det_deviation);
    std::printf("path_consistency=%.17g\n", mesh.diag.path_consistency);
    std::printf("unitarizer_residual_max=%.17g\n", mesh.diag.unitarizer_max_residual);
    if (!mesh.closed) {
        std::fprintf(stderr, "surface: symmetry closure failed; mesh written anyway\n");
        return kNotConverged;
    }
    return kOk;
}

int run_analyze(const std::string& run_path) {
    RunRecord rec = load_run_record(run_path);
    DiskZeroReport zeros = roots_in_disk(rec.params, rec.series);
    StabilityReport stab = classify_stability(rec.params, rec.series);
    json j;
    j["zeros_B"] = zero_list(zeros.zeros_B);
    j["zeros_A_plus_1"] = zero_list(zeros.zeros_A_plus_1);
    j["unstable_count"] = stab.unstable_count;
    json l0 = json::array();
    for (cplx v : stab.lambda0) l0.push_back({v.real(), v.imag()});
    j["lambda0"] = l0;
    std::cout << j.dump(2) << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CMC surfaces in the 3-sphere via loop-group factorization"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: hardware)");

    auto* solve = app.add_subcommand("solve", "search accessory coefficients for a config");
    std::string solve_config, solve_out;
    solve->add_option("--config", solve_config, "solve config JSON")->required();
    solve->add_option("--out", solve_out, "output run record path")->required();

    auto* cont = app.add_subcommand("continue", "continue a family from a solved run");
    std::string cont_start, cont_family = "I", cont_driver = "conf", cont_out;
    double cont_step = 0.01;
    int cont_count = 5;
    cont->add_option("--start", cont_start, "solved run record")->required();
    cont->add_option("--family", cont_family, "I or II")
        ->check(CLI::IsMember({"I", "II"}));
    cont->add_option("--driver", cont_driver, "sym or conf")
        ->check(CLI::IsMember({"sym", "conf"}));
    cont->add_option("--step", cont_step, "driver increment per step");
    cont->add_option("--count", cont_count, "number of steps")->check(CLI::NonNegativeNumber);
    cont->add_option("--out", cont_out, "output directory")->required();

    auto* surf = app.add_subcommand("surface", "mesh a solved run and export it");
    std::string surf_run, surf_grid = "64x64", surf_format = "obj", surf_out;
    int surf_samples = 64;
    surf->add_option("run", surf_run, "solved run record")->required();
    surf->add_option("--grid", surf_grid, "columns x rings per cell, e.g. 64x64");
    surf->add_option("--samples", surf_samples, "loop samples on the unit circle");
    surf->add_option("--format", surf_format, "obj or ply")->check(CLI::IsMember({"obj", "ply"}));
    surf->add_option("--out", surf_out, "mesh output path")->required();

    auto* analyze = app.add_subcommand("analyze", "zero structure and stability of a run");
    std::string analyze_run;
    analyze->add_option("run", analyze_run, "run record")->required();

    CLI11_PARSE(app, argc, argv);

    if (threads <= 0) threads = thread_count_from_env();
    set_thread_count(threads);

    try {
        if (*solve) return run_solve(solve_config, solve_out);
        if (*cont) return run_continue(cont_start, cont_family, cont_driver, cont_step, cont_count,
                                       cont_out);
        if (*surf) return run_surface(surf_run, surf_grid, surf_samples, surf_format, surf_out);
        if (*analyze) return run_analyze(analyze_run);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
