#include "cmcforge/search.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "cmcforge/objective.hpp"

namespace cmcforge {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const std::vector<double>& step,
                             const NelderMeadOptions& opts) {
    const size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start");
    if (step.size() != n) throw std::invalid_argument("nelder_mead: step size mismatch");

    struct Vertex {
        std::vector<double> x;
        double f;
    };
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    long evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };
    simplex.push_back({x0, eval(x0)});
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> x = x0;
        x[i] += step[i] != 0.0 ? step[i] : 1e-3;
        simplex.push_back({x, eval(x)});
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    NelderMeadResult res;
    while (evals < opts.max_evals) {
        std::sort(simplex.begin(), simplex.end(), by_value);
        double spread_x = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double lo = simplex[0].x[i], hi = lo;
            for (const auto& v : simplex) {
                lo = std::min(lo, v.x[i]);
                hi = std::max(hi, v.x[i]);
            }
            spread_x = std::max(spread_x, hi - lo);
        }
        double spread_f = simplex.back().f - simplex.front().f;
        if (spread_x <= opts.x_tol || (opts.f_tol > 0.0 && std::isfinite(spread_f) && spread_f <= opts.f_tol)) {
            res.by_tolerance = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (size_t v = 0; v < n; ++v)
            for (size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / double(n);
        Vertex& worst = simplex.back();

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (centroid[i] - worst.x[i]);
            return x;
        };

        std::vector<double> xr = blend(opts.reflect);
        double fr = eval(xr);
        if (fr < simplex[0].f) {
            std::vector<double> xe = blend(opts.expand);
            double fe = eval(xe);
            if (fe < fr) worst = {xe, fe};
            else worst = {xr, fr};
        } else if (fr < simplex[n - 1].f) {
            worst = {xr, fr};
        } else {
            bool outside = fr < worst.f;
            std::vector<double> xc = blend(outside ? opts.contract : -opts.contract);
            double fc = eval(xc);
            if (fc < std::min(fr, worst.f)) {
                worst = {xc, fc};
            } else {
                for (size_t v = 1; v <= n; ++v) {
                    for (size_t i = 0; i < n; ++i)
                        simplex[v].x[i] = simplex[0].x[i] + opts.shrink * (simplex[v].x[i] - simplex[0].x[i]);
                    simplex[v].f = eval(simplex[v].x);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    res.x = simplex[0].x;
    res.fmin = simplex[0].f;
    res.evals = evals;
    return res;
}

std::size_t VariableLayout::dim() const {
    int kept = 0;
    for (int k = 0; k <= N; ++k)
        if (!even_lambda || k % 2 == 0) ++kept;
    std::size_t per = rectangular ? 1 : 2;
    return 2 * per * static_cast<size_t>(kept) + (with_lambda0 ? 2 : 0);
}

std::vector<double> VariableLayout::pack(const AccessorySeries& s, const std::optional<cplx>& lambda0) const {
    if (s.N != N) throw std::invalid_argument("VariableLayout::pack: N mismatch");
    std::vector<double> x;
    x.reserve(dim());
    auto push = [&](const std::vector<cplx>& v) {
        for (int k = 0; k <= N; ++k) {
            if (even_lambda && k % 2 == 1) continue;
            x.push_back(v[static_cast<size_t>(k)].real());
            if (!rectangular) x.push_back(v[static_cast<size_t>(k)].imag());
        }
    };
    push(s.a);
    push(s.c);
    if (with_lambda0) {
        cplx l0 = lambda0.value_or(cplx(0.0));
        x.push_back(l0.real());
        x.push_back(l0.imag());
    }
    return x;
}

void VariableLayout::unpack(const std::vector<double>& x, AccessorySeries& s, std::optional<cplx>& lambda0) const {
    if (x.size() != dim()) throw std::invalid_argument("VariableLayout::unpack: dimension mismatch");
    s = AccessorySeries::zero(N);
    size_t i = 0;
    auto pull = [&](std::vector<cplx>& v) {
        for (int k = 0; k <= N; ++k) {
            if (even_lambda && k % 2 == 1) continue;
            double re = x[i++];
            double im = rectangular ? 0.0 : x[i++];
            v[static_cast<size_t>(k)] = cplx(re, im);
        }
    };
    pull(s.a);
    pull(s.c);
    if (with_lambda0) {
        double re = x[i++], im = x[i++];
        lambda0 = cplx(re, im);
    } else {
        lambda0.reset();
    }
}

namespace {

struct ObjectiveContext {
    const SurfaceParams& params;
    const SearchConfig& cfg;
    const SampleSet& samples;
    VariableLayout layout;
    bool family_ii = false;
    mutable long evals = 0;

    double operator()(const std::vector<double>& x) const {
        ++evals;
        AccessorySeries s;
        std::optional<cplx> l0;
        layout.unpack(x, s, l0);
        MonodromyOptions mo;
        mo.tol = cfg.ode_tol;
        double F;
        try {
            F = evaluate_F(params, s, samples, mo).F;
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
        if (!family_ii) return F;
        if (!l0) return std::numeric_limits<double>::infinity();
        if (std::abs(*l0) > 1.0 - cfg.barrier_eps) return std::numeric_limits<double>::infinity();
        const Poly B = reconstruct_B(params, s);
        const cplx A1 = s.A_poly().eval(*l0) + 1.0;
        const cplx Bv = B.eval(*l0);
        return F + cfg.penalty_weight * (std::norm(Bv) + std::norm(A1));
    }
};

int effective_K(const SurfaceParams& params, const SearchConfig& cfg, bool* upper_half) {
    bool uh = cfg.upper_half_only && params.rectangular;
    *upper_half = uh;
    if (cfg.K > 0) return cfg.K;
    return uh ? 16 : 32;
}

} // namespace

SolveOutcome minimize_surface(const SurfaceParams& params, const SearchConfig& config,
                              std::optional<AccessorySeries> init, std::optional<FamilyKind> family,
                              std::optional<cplx> lambda0) {
    params.validate();
    if (config.ladder.empty()) throw std::invalid_argument("minimize_surface: empty N ladder");
    const bool family_ii = family.has_value() && *family == FamilyKind::II;
    if (family_ii && !lambda0 && !init)
        throw std::invalid_argument("minimize_surface: family II requires a lambda0 or a warm start");

    bool upper_half = false;
    const int K = effective_K(params, config, &upper_half);
    SampleSet samples = SampleSet::make(params, K, upper_half);
    std::mt19937_64 rng(config.seed);

    long total_evals = 0;
    AccessorySeries best;
    std::optional<cplx> best_l0 = lambda0;
    double bestF = std::numeric_limits<double>::infinity();

    // starting candidates at the bottom rung
    std::vector<AccessorySeries> starts;
    if (init) {
        init->validate(params);
        starts.push_back(*init);
    } else {
        const int N0 = 0;
        std::vector<std::pair<double, AccessorySeries>> grid;
        for (int ia = 0; ia < config.multistart_a; ++ia) {
            for (int ic = 0; ic < config.multistart_c; ++ic) {
                AccessorySeries s = AccessorySeries::zero(N0);
                double a0 = config.multistart_a == 1 ? 0.0 : -1.0 + 2.0 * ia / (config.multistart_a - 1);
                double c0 = config.multistart_c == 1 ? 0.0 : -3.0 + 6.0 * ic / (config.multistart_c - 1);
                s.a[0] = a0;
                s.c[0] = c0;
                ObjectiveContext probe{params, config, samples,
                                       VariableLayout{params.rectangular, params.even_lambda, N0, family_ii},
                                       family_ii};
                std::optional<cplx> l0 = lambda0;
                double v = probe(probe.layout.pack(s, l0));
                total_evals += probe.evals;
                grid.emplace_back(v, s);
            }
        }
        std::sort(grid.begin(), grid.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        const size_t keep = std::min<size_t>(3, grid.size());
        for (size_t i = 0; i < keep; ++i) starts.push_back(grid[i].second);
    }

    for (int rung : config.ladder) {
        std::vector<AccessorySeries> rung_starts;
        if (bestF < std::numeric_limits<double>::infinity()) {
            rung_starts.push_back(best.N <= rung ? best.padded(rung) : best);
        } else {
            for (auto& s : starts)
                rung_starts.push_back(s.N <= rung ? s.padded(rung) : s);
        }
        for (const AccessorySeries& start : rung_starts) {
            VariableLayout layout{params.rectangular, params.even_lambda, rung, family_ii};
            ObjectiveContext ctx{params, config, samples, layout, family_ii};
            std::vector<double> x0 = layout.pack(start, best_l0);
            double scale = config.simplex_step;
            for (int round = 0; round < 3; ++round) {
                std::vector<double> step(x0.size(), scale);
                NelderMeadOptions nm;
                nm.max_evals = config.max_evals;
                nm.x_tol = config.x_tol;
                nm.f_tol = config.f_tol;
                NelderMeadResult r = nelder_mead(std::ref(ctx), x0, step, nm);
                total_evals += ctx.evals;
                ctx.evals = 0;
                if (r.fmin < bestF) {
                    AccessorySeries s;
                    std::optional<cplx> l0;
                    layout.unpack(r.x, s, l0);
                    best = s;
                    best_l0 = l0;
                    bestF = r.fmin;
                    x0 = r.x;
                }
                if (bestF < config.target_F) break;
                // jittered restart around the incumbent
                std::normal_distribution<double> dist(0.0, scale * 0.25);
                for (auto& xi : x0) xi += dist(rng);
                x0 = layout.pack(best.N == rung ? best : best.padded(rung), best_l0);
                scale *= 0.35;
            }
            if (bestF < config.target_F && rung == config.ladder.back()) break;
        }
    }

    SolveOutcome out;
    out.best.params = params;
    out.best.series = best.N == config.ladder.back() ? best : best.padded(config.ladder.back());
    out.best.config = config;
    out.best.config.K = K;
    out.best.config.upper_half_only = upper_half;
    out.best.final_F = bestF;
    out.best.eval_count = total_evals;
    out.best.lambda0 = best_l0;
    out.best.family = family;
    out.converged = bestF < config.target_F;
    out.best.converged = out.converged;
    out.message = out.converged ? "target reached" : "target not reached";
    out.best.message = out.message;

    // dense re-validation and zero structure
    MonodromyOptions mo;
    mo.tol = config.ode_tol;
    try {
        SampleSet dense = SampleSet::make(params, K * std::max(config.revalidate_factor, 1), upper_half);
        ObjectiveReport rep = evaluate_F(params, out.best.series, dense, mo);
        out.best.F_dense = rep.F;
        out.best.max_im_half_trace = rep.max_im_half_trace;
        out.best.F_six = evaluate_F_six(params, out.best.series, dense, mo);
    } catch (const std::exception&) {
        // leave NaN diagnostics when the dense pass cannot be evaluated
    }
    out.best.zeros = roots_in_disk(params, out.best.series);
    out.best.stability = classify_stability(params, out.best.series);

    auto now = std::chrono::system_clock::now();
    auto tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&tt));
    out.best.created = buf;
    return out;
}

std::vector<RunRecord> continue_family(const RunRecord& start, const FamilySpec& spec,
                                       std::optional<SearchConfig> config_override) {
    if (!start.converged) throw std::invalid_argument("continue_family: start record not converged");
    if (spec.count <= 0) throw std::invalid_argument("continue_family: count must be positive");
    if (spec.family == FamilyKind::II && start.stability.unstable_count != 1 && !start.lambda0)
        throw std::invalid_argument("continue_family: family II requires an unstable start");

    SearchConfig cfg = config_override.value_or(start.config);
    cfg.ladder = {start.series.N}; // warm-started: no re-laddering

    std::vector<RunRecord> out;
    SurfaceParams params = start.params;
    AccessorySeries series = start.series;
    std::optional<cplx> l0 = start.lambda0;
    if (spec.family == FamilyKind::II && !l0 && !start.stability.lambda0.empty())
        l0 = start.stability.lambda0.front();

    for (int step = 1; step <= spec.count; ++step) {
        double driver_value = 0.0;
        if (spec.driver == FamilyDriver::sym_angle) {
            double theta = std::arg(params.lambda1) + spec.step;
            params.lambda1 = unit_phase(theta);
            params.lambda2 = params.rectangular ? std::conj(params.lambda1) : unit_phase(-theta);
            driver_value = theta;
        } else {
            double phi = std::arg(params.z0) - spec.step;
            params.z0 = std::abs(params.z0) * unit_phase(phi);
            params.z1 = params.rectangular ? std::conj(params.z0)
                                           : std::abs(params.z1) * unit_phase(std::arg(params.z1) + spec.step);
            driver_value = std::arg(params.z1);
        }
        std::optional<FamilyKind> fam = spec.family;
        SolveOutcome sol = minimize_surface(params, cfg, series, fam, l0);
        sol.best.family = spec.family;
        sol.best.driver_value = driver_value;
        out.push_back(sol.best);
        series = sol.best.series;
        if (sol.best.lambda0) l0 = sol.best.lambda0;
    }
    return out;
}

} // namespace cmcforge
