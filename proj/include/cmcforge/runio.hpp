#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cmcforge/analysis.hpp"
#include "cmcforge/ode.hpp"

namespace cmcforge {

enum class FamilyKind { I, II };
enum class FamilyDriver { sym_angle, conformal_angle };

struct SearchConfig {
    int K = 0;                   // sample count; 0 = 16 upper-half when rectangular, else 32 full
    bool upper_half_only = true; // effective only when rectangular reality holds
    double target_F = 1e-6;
    std::vector<int> ladder = {2, 4, 6, 8}; // N continuation rungs
    int max_evals = 6000;                   // per simplex run
    double simplex_step = 0.25;
    double x_tol = 1e-11;
    double f_tol = 0.0;
    std::uint64_t seed = 1;
    int multistart_a = 5; // a0 grid size over [-1, 1]
    int multistart_c = 7; // c0 grid size over [-3, 3]
    double penalty_weight = 10.0; // family II
    double barrier_eps = 0.02;    // family II: |lambda0| <= 1 - eps
    ToleranceSpec ode_tol;
    int revalidate_factor = 4; // dense re-check at revalidate_factor * K samples
};

struct RunRecord {
    int schema_version = 1;
    SurfaceParams params;
    AccessorySeries series;
    SearchConfig config;
    double final_F = std::numeric_limits<double>::infinity();
    long eval_count = 0;
    bool converged = false;
    std::optional<cplx> lambda0; // tracked common-zero location (family II)
    std::optional<FamilyKind> family;
    double driver_value = 0.0; // family continuation driver sample
    // convergence diagnostics filled by the solver
    double F_dense = std::numeric_limits<double>::quiet_NaN(); // re-evaluated at denser samples
    double F_six = std::numeric_limits<double>::quiet_NaN();   // all six half-traces
    double max_im_half_trace = 0.0;
    DiskZeroReport zeros;
    StabilityReport stability;
    std::string created; // ISO timestamp; excluded from reproducibility comparisons
    std::string message;
};

std::string to_json(const RunRecord& rec, int indent = 2);
RunRecord run_record_from_json(const std::string& text);

// JSON with volatile fields (timestamps) blanked, for byte-identity checks.
std::string reproducible_json(const RunRecord& rec);

void save_run_record(const RunRecord& rec, const std::string& path);
RunRecord load_run_record(const std::string& path);

// Solve configuration file: params + search config (+ optional warm start).
struct SolveInput {
    SurfaceParams params;
    SearchConfig config;
    std::optional<AccessorySeries> init;
    std::optional<FamilyKind> family;
    std::optional<cplx> lambda0;
};

SolveInput solve_input_from_json(const std::string& text);
std::string to_json(const SolveInput& input, int indent = 2);
SolveInput load_solve_input(const std::string& path);

// Family continuation summary table (one row per record): driver value,
// conformal type, mean curvature, final F, unstable count, disk zeros of B.
std::string family_summary_csv(const std::vector<RunRecord>& records);

} // namespace cmcforge
