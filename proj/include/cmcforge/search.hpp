#pragma once

#include <functional>

#include "cmcforge/runio.hpp"

namespace cmcforge {

struct NelderMeadOptions {
    double reflect = 1.0, expand = 2.0, contract = 0.5, shrink = 0.5;
    long max_evals = 10000;
    double x_tol = 1e-11; // simplex coordinate spread
    double f_tol = 0.0;   // value spread (0 disables)
};

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = std::numeric_limits<double>::infinity();
    long evals = 0;
    bool by_tolerance = false; // false = stopped on the evaluation budget
};

// Downhill simplex; infinite objective values are legal (rejected regions).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const std::vector<double>& step,
                             const NelderMeadOptions& opts = {});

// Real search coordinates for the coefficient series under the parity and
// reality constraints, with the optional family-II zero location appended.
struct VariableLayout {
    bool rectangular = false;
    bool even_lambda = false;
    int N = 0;
    bool with_lambda0 = false;

    std::size_t dim() const;
    std::vector<double> pack(const AccessorySeries& s, const std::optional<cplx>& lambda0) const;
    void unpack(const std::vector<double>& x, AccessorySeries& s, std::optional<cplx>& lambda0) const;
};

struct SolveOutcome {
    RunRecord best;
    bool converged = false;
    std::string message;
};

// Minimize F over the accessory coefficients: seeded multi-start at the
// bottom of the N ladder (unless a warm start is given), Nelder-Mead runs
// with zero-padding between rungs, then dense re-validation and the zero
// structure report. family = II switches to the penalized objective with the
// common-zero location lambda0 appended to the variables.
SolveOutcome minimize_surface(const SurfaceParams& params, const SearchConfig& config,
                              std::optional<AccessorySeries> init = {},
                              std::optional<FamilyKind> family = {},
                              std::optional<cplx> lambda0 = {});

struct FamilySpec {
    FamilyKind family = FamilyKind::I;
    FamilyDriver driver = FamilyDriver::conformal_angle;
    double step = 0.01;
    int count = 5;
};

// Steps the driver (Sym angle or conformal angle), warm-starting each solve
// from the previous record. Returns one record per step, converged or not.
std::vector<RunRecord> continue_family(const RunRecord& start, const FamilySpec& spec,
                                       std::optional<SearchConfig> config_override = {});

} // namespace cmcforge
