#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "cmcforge/surface.hpp"

using namespace cmcforge;

namespace {
SurfaceParams lawson21() {
    SurfaceParams p;
    p.genus = 2;
    p.z0 = unit_phase(-kPi / 4.0);
    p.z1 = unit_phase(kPi / 4.0);
    p.lambda1 = cplx(0.0, 1.0);
    p.lambda2 = cplx(0.0, -1.0);
    p.rectangular = true;
    p.even_lambda = true;
    return p;
}

Vec4 qrand(unsigned k) {
    Vec4 v(std::cos(1.1 * k), std::sin(0.7 * k + 0.3), std::cos(2.3 * k - 1.0), std::sin(1.9 * k));
    return v.normalized();
}

// equator 2-sphere x3 = 0, parametrised by spherical angles, quads plus polar fans
SurfaceMesh great_sphere(int nu, int nv) {
    SurfaceMesh m;
    auto at = [&](int i, int j) { return i * nu + ((j + nu) % nu); };
    for (int i = 0; i < nv; ++i) {
        double v = kPi * (i + 1) / (nv + 1);
        for (int j = 0; j < nu; ++j) {
            double u = 2.0 * kPi * j / nu;
            m.vertices.push_back(
                Vec4(std::cos(u) * std::sin(v), std::sin(u) * std::sin(v), std::cos(v), 0.0));
        }
    }
    int north = static_cast<int>(m.vertices.size());
    m.vertices.push_back(Vec4(0.0, 0.0, 1.0, 0.0));
    int south = north + 1;
    m.vertices.push_back(Vec4(0.0, 0.0, -1.0, 0.0));
    for (int i = 0; i + 1 < nv; ++i)
        for (int j = 0; j < nu; ++j)
            m.faces.push_back({at(i, j), at(i, j + 1), at(i + 1, j + 1), at(i + 1, j)});
    for (int j = 0; j < nu; ++j) {
        m.faces.push_back({north, at(0, j + 1), at(0, j), at(0, j)});
        m.faces.push_back({south, at(nv - 1, j), at(nv - 1, j + 1), at(nv - 1, j + 1)});
    }
    m.piece_id.assign(m.vertices.size(), 0);
    return m;
}

SurfaceMesh clifford_torus(int nu, int nv) {
    SurfaceMesh m;
    const double s = 1.0 / std::sqrt(2.0);
    auto at = [&](int i, int j) { return ((i + nv) % nv) * nu + ((j + nu) % nu); };
    for (int i = 0; i < nv; ++i) {
        double v = 2.0 * kPi * i / nv;
        for (int j = 0; j < nu; ++j) {
            double u = 2.0 * kPi * j / nu;
            m.vertices.push_back(s * Vec4(std::cos(u), std::sin(u), std::cos(v), std::sin(v)));
        }
    }
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nu; ++j)
            m.faces.push_back({at(i, j), at(i, j + 1), at(i + 1, j + 1), at(i + 1, j)});
    m.piece_id.assign(m.vertices.size(), 0);
    return m;
}

// round 2-sphere at geodesic distance r from (1,0,0,0); mean curvature cot(r)
SurfaceMesh geodesic_sphere(double r, int nu, int nv) {
    SurfaceMesh m = great_sphere(nu, nv);
    for (Vec4& v : m.vertices) {
        Vec4 dir(0.0, v[0], v[1], v[2]);
        v = std::cos(r) * Vec4(1.0, 0.0, 0.0, 0.0) + std::sin(r) * dir;
    }
    return m;
}
} // namespace

TEST_CASE("quaternion product matches the matrix product") {
    for (unsigned k = 0; k < 6; ++k) {
        Vec4 a = qrand(k), b = qrand(k + 40);
        Mat2 prod = quat_to_su2(a) * quat_to_su2(b);
        CHECK((quat_mul(a, b) - su2_to_quat(prod)).norm() < 1e-14);
    }
    Vec4 e(1.0, 0.0, 0.0, 0.0);
    Vec4 q = qrand(3);
    CHECK((quat_mul(q, quat_conj(q)) - e).norm() < 1e-14);
    CHECK((su2_to_quat(quat_to_su2(q)) - q).norm() < 1e-15);
}

TEST_CASE("cross4 orthogonality and orientation") {
    Vec4 e0(1, 0, 0, 0), e1(0, 1, 0, 0), e2(0, 0, 1, 0), e3(0, 0, 0, 1);
    CHECK((cross4(e1, e2, e3) - e0).norm() < 1e-15);
    Vec4 a = qrand(1), b = qrand(2), c = qrand(5);
    Vec4 n = cross4(a, b, c);
    CHECK(std::abs(n.dot(a)) < 1e-13);
    CHECK(std::abs(n.dot(b)) < 1e-13);
    CHECK(std::abs(n.dot(c)) < 1e-13);
}

TEST_CASE("stereographic projection round trip") {
    Vec4 pole(-1.0, 0.0, 0.0, 0.0);
    for (unsigned k = 0; k < 8; ++k) {
        Vec4 x = qrand(k);
        if ((x - pole).norm() < 1e-3) continue;
        Vec3 p = stereographic_point(x, pole);
        Vec4 back = inverse_stereographic(p, pole);
        CHECK((back - x).norm() < 1e-10);
    }
    // identity vertex maps to the origin under the default pole
    CHECK(stereographic_point(Vec4(1, 0, 0, 0), pole).norm() < 1e-15);
}

TEST_CASE("surface options are validated") {
    SurfaceOptions o;
    CHECK_NOTHROW(o.validate());
    o.n_theta = 4;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    o = {};
    o.t_min = 0.0;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    o = {};
    o.lambda_samples = 512;
    o.max_lambda_samples = 256;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    o = {};
    o.offset_eps = 0.2;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}

TEST_CASE("area of a great sphere") {
    // a great 2-sphere is totally geodesic, so the geodesic triangles tile it
    // exactly and the summed excess is 4 pi up to rounding at any resolution
    int deg = 0;
    double a1 = mesh_area(great_sphere(48, 24), &deg);
    CHECK(deg == 0);
    CHECK(std::abs(a1 - 4.0 * kPi) < 1e-9);
    CHECK(std::abs(great_sphere(48, 24).diameter() - 2.0) < 1e-9);
}

TEST_CASE("area of the square torus") {
    double a = mesh_area(clifford_torus(64, 64));
    const double want = 2.0 * kPi * kPi;
    CHECK(std::abs(a - want) / want < 5e-3);
    // the torus is curved relative to its geodesic triangles: convergence
    double e1 = std::abs(mesh_area(clifford_torus(32, 32)) - want);
    double e2 = std::abs(mesh_area(clifford_torus(64, 64)) - want);
    CHECK(e2 < e1 / 2.5);
}

TEST_CASE("degenerate faces are counted, not summed") {
    SurfaceMesh m;
    m.vertices = {qrand(0), qrand(0), qrand(7), qrand(9)};
    m.faces.push_back({0, 1, 2, 2}); // repeated vertex, zero side
    m.faces.push_back({0, 2, 3, 3});
    int deg = 0;
    double a = mesh_area(m, &deg);
    CHECK(deg == 1);
    CHECK(a > 0.0);
    SurfaceMesh empty;
    empty.projected.push_back(Vec3(0, 0, 0));
    CHECK_THROWS_AS(mesh_area(empty), SurfaceError);
}

TEST_CASE("vertex normals are tangent and unit") {
    SurfaceMesh m = clifford_torus(32, 32);
    auto n = vertex_normals(m);
    REQUIRE(n.size() == m.vertices.size());
    for (size_t i = 0; i < n.size(); ++i) {
        CHECK(std::abs(n[i].norm() - 1.0) < 1e-12);
        CHECK(std::abs(n[i].dot(m.vertices[i])) < 1e-12);
        // the true normal of the square torus at (u, v)
        Vec4 v = m.vertices[i] * std::sqrt(2.0);
        Vec4 want = Vec4(-v[0], -v[1], v[2], v[3]) / std::sqrt(2.0);
        CHECK(std::min((n[i] - want).norm(), (n[i] + want).norm()) < 5e-2);
    }
}

TEST_CASE("mean curvature of homogeneous examples") {
    CHECK(std::abs(estimate_mean_curvature(clifford_torus(48, 48))) < 5e-3);
    double h = estimate_mean_curvature(geodesic_sphere(kPi / 4.0, 64, 32));
    CHECK(std::abs(std::abs(h) - 1.0) < 0.02); // cot(pi/4)
    double h2 = estimate_mean_curvature(geodesic_sphere(kPi / 3.0, 64, 32));
    CHECK(std::abs(std::abs(h2) - 1.0 / std::tan(kPi / 3.0)) < 0.02);
}

TEST_CASE("projection guards against the pole") {
    SurfaceMesh m = great_sphere(12, 6);
    CHECK_NOTHROW(stereographic(m, Vec4(-1.0, 0.0, 0.0, 0.0)));
    REQUIRE(m.projected.size() == m.vertices.size());
    try {
        stereographic(m, Vec4(0.0, 0.0, 1.0, 0.0)); // the north pole vertex
        CHECK(false);
    } catch (const SurfaceError& e) {
        CHECK(std::string(e.what()).find("pole") != std::string::npos);
    }
}

TEST_CASE("mesh export and import round trip") {
    // faces stay inside one piece so the obj group assignment is invertible
    SurfaceMesh m;
    m.vertices = {qrand(0), qrand(1), qrand(2), qrand(3), qrand(4), qrand(5), qrand(6)};
    m.piece_id = {0, 0, 0, 0, 1, 1, 1};
    m.faces.push_back({0, 1, 2, 3});
    m.faces.push_back({4, 5, 6, 6});
    m.copies = 2;
    stereographic(m);

    for (MeshFormat fmt : {MeshFormat::obj, MeshFormat::ply}) {
        const std::string path =
            fmt == MeshFormat::obj ? "/tmp/cmcforge_test.obj" : "/tmp/cmcforge_test.ply";
        export_mesh(m, fmt, path);
        SurfaceMesh back = import_mesh(fmt, path);
        REQUIRE(back.projected.size() == m.projected.size());
        for (size_t i = 0; i < m.projected.size(); ++i)
            CHECK((back.projected[i] - m.projected[i]).norm() == 0.0); // %.17g is exact
        REQUIRE(back.faces.size() == 2);
        CHECK(back.faces[0] == m.faces[0]);
        CHECK(back.faces[1] == m.faces[1]);
        CHECK(back.vertices.empty());
        REQUIRE(back.piece_id.size() == m.piece_id.size());
        for (size_t i = 0; i < m.piece_id.size(); ++i) CHECK(back.piece_id[i] == m.piece_id[i]);
        CHECK(back.copies == 2);
        std::remove(path.c_str());
    }
    CHECK_THROWS_AS(import_mesh(MeshFormat::obj, "/tmp/missing_cmcforge.obj"), SurfaceError);
}

TEST_CASE("obj vertex and face line counts") {
    SurfaceMesh m;
    m.vertices = {qrand(0), qrand(1), qrand(4), qrand(6)};
    m.piece_id = {0, 0, 0, 0};
    m.faces.push_back({0, 1, 3, 2});
    stereographic(m);
    const std::string path = "/tmp/cmcforge_count.obj";
    export_mesh(m, MeshFormat::obj, path);
    std::ifstream in(path);
    int nv = 0, nf = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++nv;
        if (line.rfind("f ", 0) == 0) ++nf;
    }
    CHECK(nv == 4);
    CHECK(nf == 1);
    std::remove(path.c_str());
}

TEST_CASE("frame grid plumbing on a pole-free potential") {
    // eta = [[0, 1/mu], [mu, 0]] dz is holomorphic everywhere, so transports
    // are path independent, frames close across the seams exactly, and the
    // whole pipeline through the symmetry closure must report one copy
    SurfaceParams params = lawson21();
    SurfaceOptions opts;
    opts.n_theta = 12;
    opts.n_radial = 6;
    opts.lambda_samples = 16;
    opts.max_lambda_samples = 16;

    FrameGridInputs in;
    const int L = 16;
    for (int j = 0; j < L; ++j) in.circle_samples.push_back(unit_phase(2.0 * kPi * j / L));
    in.initial.assign(L, mat2_id());
    in.potential = [](cplx mu) {
        // 0.05 keeps exp growth tame out to the max_abs_z rim
        return PotentialFn([mu](cplx) {
            Mat2 m = mat2_zero();
            m(0, 1) = 0.05 / mu;
            m(1, 0) = 0.05 * mu;
            return m;
        });
    };

    FrameGrid fg = compute_frames_raw(params, opts, in);
    REQUIRE(fg.cells.size() == 6);
    CHECK(fg.base_frames.size() == L);
    CHECK(fg.diag.max_det_deviation < 1e-8);
    CHECK(fg.diag.max_fit_residual < 1e-8);
    CHECK(fg.diag.path_consistency < 1e-8);
    CHECK(fg.diag.route_clearance > 0.0);
    size_t expect = 0;
    for (const CellGrid& cell : fg.cells) {
        CHECK(cell.n_rows == opts.n_radial + 1);
        CHECK(cell.n_cols == (cell.punctured ? 13 : 12));
        CHECK(cell.frame.size() == cell.z.size());
        expect += cell.z.size() + 1; // grid points plus the cap apex
        // the puncture cells duplicate the seam column at identical z
        if (cell.punctured)
            CHECK(std::abs(cell.z[static_cast<size_t>(cell.index(2, 0))] -
                           cell.z[static_cast<size_t>(cell.index(2, 12))]) < 1e-13);
    }

    SurfaceMesh piece = immerse(fg, params, opts);
    CHECK(piece.vertices.size() == expect);
    for (const Vec4& v : piece.vertices) CHECK(std::abs(v.norm() - 1.0) < 1e-9);
    CHECK(piece.diag.su2_deviation_max < 1e-7);
    CHECK(piece.diag.max_unitarity_error < 1e-8);
    CHECK(piece.diag.max_recon_error < 1e-6);
    CHECK(piece.diag.seam_consistency < 1e-7);
    CHECK(piece.diag.overlap_mismatch < 1e-7);
    REQUIRE(piece.seam_actions.size() == 4);

    SurfaceMesh whole = extend_by_symmetry(piece, params, opts);
    CHECK(whole.copies == 1); // trivial seam actions generate nothing
    CHECK(whole.closed);
}

TEST_CASE("frame grid input validation") {
    SurfaceParams params = lawson21();
    SurfaceOptions opts;
    FrameGridInputs in;
    in.potential = [](cplx) { return PotentialFn([](cplx) { return mat2_zero(); }); };
    for (int j = 0; j < 4; ++j) in.circle_samples.push_back(unit_phase(2.0 * kPi * j / 4));
    in.initial.assign(4, mat2_id());
    CHECK_THROWS_AS(compute_frames_raw(params, opts, in), SurfaceError); // too few samples
    in.circle_samples.clear();
    for (int j = 0; j < 16; ++j) in.circle_samples.push_back(unit_phase(0.1 * j * j));
    in.initial.assign(16, mat2_id());
    CHECK_THROWS_AS(compute_frames_raw(params, opts, in), SurfaceError); // not a rotated grid
}
