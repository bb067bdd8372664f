#include "cmcforge/runio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cmcforge {

namespace {

using json = nlohmann::ordered_json;

json dump_cplx(cplx v) { return json::array({v.real(), v.imag()}); }

cplx parse_cplx(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected complex as [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json dump_params(const SurfaceParams& p) {
    json j;
    j["genus"] = p.genus;
    j["z0"] = dump_cplx(p.z0);
    j["z1"] = dump_cplx(p.z1);
    j["lambda1"] = dump_cplx(p.lambda1);
    j["lambda2"] = dump_cplx(p.lambda2);
    j["rectangular"] = p.rectangular;
    j["even_lambda"] = p.even_lambda;
    return j;
}

SurfaceParams parse_params(const json& j) {
    SurfaceParams p;
    p.genus = j.at("genus").get<int>();
    p.z0 = parse_cplx(j.at("z0"));
    p.z1 = parse_cplx(j.at("z1"));
    p.lambda1 = parse_cplx(j.at("lambda1"));
    p.lambda2 = parse_cplx(j.at("lambda2"));
    p.rectangular = j.value("rectangular", false);
    p.even_lambda = j.value("even_lambda", false);
    return p;
}

json dump_series(const AccessorySeries& s) {
    json j;
    j["N"] = s.N;
    json a = json::array(), c = json::array();
    for (cplx v : s.a) a.push_back(dump_cplx(v));
    for (cplx v : s.c) c.push_back(dump_cplx(v));
    j["a"] = a;
    j["c"] = c;
    return j;
}

AccessorySeries parse_series(const json& j) {
    AccessorySeries s;
    s.N = j.at("N").get<int>();
    for (const auto& v : j.at("a")) s.a.push_back(parse_cplx(v));
    for (const auto& v : j.at("c")) s.c.push_back(parse_cplx(v));
    return s;
}

json dump_config(const SearchConfig& c) {
    json j;
    j["K"] = c.K;
    j["upper_half_only"] = c.upper_half_only;
    j["target_F"] = c.target_F;
    j["ladder"] = c.ladder;
    j["max_evals"] = c.max_evals;
    j["simplex_step"] = c.simplex_step;
    j["x_tol"] = c.x_tol;
    j["f_tol"] = c.f_tol;
    j["seed"] = c.seed;
    j["multistart_a"] = c.multistart_a;
    j["multistart_c"] = c.multistart_c;
    j["penalty_weight"] = c.penalty_weight;
    j["barrier_eps"] = c.barrier_eps;
    j["ode_abs_tol"] = c.ode_tol.abs_tol;
    j["ode_rel_tol"] = c.ode_tol.rel_tol;
    j["revalidate_factor"] = c.revalidate_factor;
    return j;
}

SearchConfig parse_config(const json& j) {
    SearchConfig c;
    c.K = j.value("K", c.K);
    c.upper_half_only = j.value("upper_half_only", c.upper_half_only);
    c.target_F = j.value("target_F", c.target_F);
    if (j.contains("ladder")) c.ladder = j.at("ladder").get<std::vector<int>>();
    c.max_evals = j.value("max_evals", c.max_evals);
    c.simplex_step = j.value("simplex_step", c.simplex_step);
    c.x_tol = j.value("x_tol", c.x_tol);
    c.f_tol = j.value("f_tol", c.f_tol);
    c.seed = j.value("seed", c.seed);
    c.multistart_a = j.value("multistart_a", c.multistart_a);
    c.multistart_c = j.value("multistart_c", c.multistart_c);
    c.penalty_weight = j.value("penalty_weight", c.penalty_weight);
    c.barrier_eps = j.value("barrier_eps", c.barrier_eps);
    c.ode_tol.abs_tol = j.value("ode_abs_tol", c.ode_tol.abs_tol);
    c.ode_tol.rel_tol = j.value("ode_rel_tol", c.ode_tol.rel_tol);
    c.revalidate_factor = j.value("revalidate_factor", c.revalidate_factor);
    return c;
}

json dump_zero(const ZeroInfo& z) {
    json j;
    j["z"] = dump_cplx(z.z);
    j["multiplicity"] = z.multiplicity;
    j["low_confidence"] = z.low_confidence;
    return j;
}

ZeroInfo parse_zero(const json& j) {
    ZeroInfo z;
    z.z = parse_cplx(j.at("z"));
    z.multiplicity = j.at("multiplicity").get<int>();
    z.low_confidence = j.at("low_confidence").get<bool>();
    return z;
}

json dump_double(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double parse_double(const json& j, double fallback_nan) {
    if (j.is_null()) return fallback_nan;
    return j.get<double>();
}

std::string family_name(FamilyKind f) { return f == FamilyKind::I ? "I" : "II"; }

FamilyKind family_from(const std::string& s) {
    if (s == "I") return FamilyKind::I;
    if (s == "II") return FamilyKind::II;
    throw std::invalid_argument("unknown family: " + s);
}

json record_to_json(const RunRecord& r, bool reproducible) {
    json j;
    j["schema_version"] = r.schema_version;
    j["kind"] = "run_record";
    j["params"] = dump_params(r.params);
    j["series"] = dump_series(r.series);
    j["config"] = dump_config(r.config);
    json res;
    res["final_F"] = r.final_F;
    res["eval_count"] = r.eval_count;
    res["converged"] = r.converged;
    res["lambda0"] = r.lambda0 ? dump_cplx(*r.lambda0) : json(nullptr);
    res["family"] = r.family ? json(family_name(*r.family)) : json(nullptr);
    res["driver_value"] = r.driver_value;
    res["F_dense"] = dump_double(r.F_dense);
    res["F_six"] = dump_double(r.F_six);
    res["max_im_half_trace"] = r.max_im_half_trace;
    res["message"] = r.message;
    j["result"] = res;
    json zb = json::array(), za = json::array();
    for (const auto& z : r.zeros.zeros_B) zb.push_back(dump_zero(z));
    for (const auto& z : r.zeros.zeros_A_plus_1) za.push_back(dump_zero(z));
    j["zeros"] = {{"B", zb}, {"A_plus_1", za}};
    json l0s = json::array();
    for (cplx v : r.stability.lambda0) l0s.push_back(dump_cplx(v));
    j["stability"] = {{"unstable_count", r.stability.unstable_count}, {"lambda0", l0s}};
    j["created"] = reproducible ? "" : r.created;
    return j;
}

} // namespace

std::string to_json(const RunRecord& rec, int indent) { return record_to_json(rec, false).dump(indent); }

std::string reproducible_json(const RunRecord& rec) { return record_to_json(rec, true).dump(2); }

RunRecord run_record_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.value("kind", "") != "run_record") throw std::invalid_argument("not a run record");
    RunRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1)
        throw std::invalid_argument("unsupported run record schema_version " +
                                    std::to_string(r.schema_version));
    r.params = parse_params(j.at("params"));
    r.series = parse_series(j.at("series"));
    r.config = parse_config(j.at("config"));
    const json& res = j.at("result");
    r.final_F = res.at("final_F").get<double>();
    r.eval_count = res.at("eval_count").get<long>();
    r.converged = res.at("converged").get<bool>();
    if (!res.at("lambda0").is_null()) r.lambda0 = parse_cplx(res.at("lambda0"));
    if (!res.at("family").is_null()) r.family = family_from(res.at("family").get<std::string>());
    r.driver_value = res.value("driver_value", 0.0);
    r.F_dense = parse_double(res.at("F_dense"), std::numeric_limits<double>::quiet_NaN());
    r.F_six = parse_double(res.at("F_six"), std::numeric_limits<double>::quiet_NaN());
    r.max_im_half_trace = res.value("max_im_half_trace", 0.0);
    r.message = res.value("message", "");
    for (const auto& z : j.at("zeros").at("B")) r.zeros.zeros_B.push_back(parse_zero(z));
    for (const auto& z : j.at("zeros").at("A_plus_1")) r.zeros.zeros_A_plus_1.push_back(parse_zero(z));
    r.stability.unstable_count = j.at("stability").at("unstable_count").get<int>();
    for (const auto& v : j.at("stability").at("lambda0")) r.stability.lambda0.push_back(parse_cplx(v));
    r.created = j.value("created", "");
    return r;
}

void save_run_record(const RunRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json(rec) << "\n";
}

RunRecord load_run_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_record_from_json(ss.str());
}

SolveInput solve_input_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.contains("kind") && j.at("kind").get<std::string>() != "solve_config")
        throw std::invalid_argument("not a solve config");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
        throw std::invalid_argument("unsupported solve config schema_version");
    SolveInput s;
    s.params = parse_params(j.at("params"));
    if (j.contains("search")) s.config = parse_config(j.at("search"));
    if (j.contains("init") && !j.at("init").is_null()) s.init = parse_series(j.at("init"));
    if (j.contains("family") && !j.at("family").is_null())
        s.family = family_from(j.at("family").get<std::string>());
    if (j.contains("lambda0") && !j.at("lambda0").is_null()) s.lambda0 = parse_cplx(j.at("lambda0"));
    return s;
}

std::string to_json(const SolveInput& input, int indent) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "solve_config";
    j["params"] = dump_params(input.params);
    j["search"] = dump_config(input.config);
    if (input.init) j["init"] = dump_series(*input.init);
    if (input.family) j["family"] = family_name(*input.family);
    if (input.lambda0) j["lambda0"] = dump_cplx(*input.lambda0);
    return j.dump(indent);
}

SolveInput load_solve_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return solve_input_from_json(ss.str());
}

namespace {
std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

std::string family_summary_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << "step,driver_value,conformal_type_re,conformal_type_im,mean_curvature,final_F,"
           "unstable_count,zeros_B\n";
    for (size_t i = 0; i < records.size(); ++i) {
        const RunRecord& r = records[i];
        cplx ct = conformal_type(r.params);
        cplx H = mean_curvature(r.params);
        out << i << "," << fmt17(r.driver_value) << "," << fmt17(ct.real()) << "," << fmt17(ct.imag())
            << "," << fmt17(H.real()) << "," << fmt17(r.final_F) << "," << r.stability.unstable_count
            << ",\"";
        for (size_t k = 0; k < r.zeros.zeros_B.size(); ++k) {
            const ZeroInfo& z = r.zeros.zeros_B[k];
            if (k) out << ";";
            out << fmt17(z.z.real()) << "+" << fmt17(z.z.imag()) << "i:x" << z.multiplicity;
        }
        out << "\"\n";
    }
    return out.str();
}

} // namespace cmcforge
