#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmcforge/iwasawa.hpp"
#include "cmcforge/unitarizer.hpp"

namespace cmcforge {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

struct SurfaceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quaternion (x0, x1, x2, x3) <-> [[x0+i x1, x2+i x3], [-x2+i x3, x0-i x1]];
// det = |x|^2, so unit quaternions are exactly SU(2).
Mat2 quat_to_su2(const Vec4& q);
Vec4 su2_to_quat(const Mat2& m); // averages the two redundant entry pairs
Vec4 quat_mul(const Vec4& a, const Vec4& b);
Vec4 quat_conj(const Vec4& q);

// Vector orthogonal to a, b, c (4D cross product).
Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c);

// p(x) = (y1, y2, y3) / (1 + y0) with y = (-conj(pole)) * x, so the pole is
// sent to infinity. Default pole (-1,0,0,0) keeps y = x.
Vec3 stereographic_point(const Vec4& x, const Vec4& pole);
Vec4 inverse_stereographic(const Vec3& p, const Vec4& pole);
inline Vec4 default_pole() { return Vec4(-1.0, 0.0, 0.0, 0.0); }

struct SurfaceOptions {
    int n_theta = 48;        // angular columns per cell
    int n_radial = 48;       // radial rings per cell (>= 4; innermost three feed the cap)
    double t_min = 1e-3;     // innermost relative radius at punctured cells (geometric grading)
    double max_abs_z = 12.0; // conditioning guard for the cell around infinity
    int lambda_samples = 64;
    int max_lambda_samples = 256; // escalation cap when fits stay above fit_warn
    double fit_tail_tol = 1e-8;
    double fit_warn = 1e-5;
    std::optional<cplx> base_point; // default: shared with the monodromy paths
    ToleranceSpec ode_tol;
    IwasawaOptions iwasawa;
    double unitarizer_threshold = 1e-4; // accept level for the initial frames
    int max_copies = 64;                // symmetry closure cap
    double group_tol = 1e-4;            // duplicate-copy detection (action proximity)
    double overlap_threshold_rel = 1e-4; // x mesh diameter
    bool throw_on_overlap = true;
    double offset_eps = 1e-3; // normal-offset step of the curvature estimator
    // The unitarizer diverges at the Sym points, so single-resolution frame
    // values converge only first order in the circle sample count. When set,
    // build_surface runs the frame stage at max_lambda_samples and at half
    // that, and immerse extrapolates the evaluated Sym-point frames.
    bool sym_extrapolation = true;

    void validate() const;
};

struct GridDiagnostics {
    double max_det_deviation = 0.0;  // |det frame - 1| over points x samples
    double max_fit_residual = 0.0;   // Laurent window aliasing across points
    double path_consistency = 0.0;   // alternate-route frame disagreement
    double route_clearance = 0.0;    // min distance of transports to singular points
    double apparency_max = 0.0;      // z=0 loop defect over the sample circle
    double unitarizer_max_residual = 0.0;
    double unitarizer_max_dlog_rho = 0.0;
    double max_recon_error = 0.0; // factorization residuals over grid points
    double max_unitarity_error = 0.0;
    double max_holomorphy_error = 0.0;
    double su2_deviation_max = 0.0; // Sym-point product distance from SU(2)
    double conformality_max = 0.0;  // |<t_r, t_theta>| / (|t_r||t_theta|)
    double seam_consistency = 0.0;  // scatter of the measured seam transforms
    double cap_spread = 0.0;        // disagreement of per-spoke cap extrapolations
    double overlap_mismatch = 0.0;  // seam-column distance under the seam action
    int lambda_samples_used = 0;
};

// Polar graph over one proximity cell of {0, +-z0, +-z1, infinity}. Rows are
// radial rings, row 0 innermost; punctured cells carry one duplicated seam
// column (theta = 0 and 2 pi are distinct grid columns on different sheets).
struct CellGrid {
    cplx site;
    bool at_infinity = false;
    bool punctured = false;
    int n_rows = 0;
    int n_cols = 0;
    int gateway_col = 0;
    std::vector<double> theta;      // size n_cols
    std::vector<double> rim_radius; // per column, in the local chart
    std::vector<cplx> z;            // row-major positions in the z-plane
    std::vector<LaurentLoop> frame; // row-major fitted loops
    std::vector<double> fit_residual;

    int index(int row, int col) const { return row * n_cols + col; }
    // radius of grid point (row, col) in the local chart of its site
    double local_radius(int row, int col) const;
};

struct FrameGrid {
    std::vector<CellGrid> cells;
    std::vector<cplx> circle_samples;
    std::vector<Mat2> base_frames; // initial frame per sample (the unitarizer)
    cplx base_point;
    UnitarizerField field; // empty when frames were built from raw inputs
    GridDiagnostics diag;
};

// Everything compute_frames needs besides geometry; lets tests substitute a
// stub potential and initial frames.
struct FrameGridInputs {
    std::function<PotentialFn(cplx lambda)> potential;
    std::vector<cplx> circle_samples;
    std::vector<Mat2> initial; // one per sample
};

FrameGrid compute_frames_raw(const SurfaceParams& params, const SurfaceOptions& opts,
                             const FrameGridInputs& inputs);

// Unitarizer field along offset circle samples as initial frames, the run's
// potential per sample, then compute_frames_raw; lambda sample count escalates
// until the Laurent fits pass fit_warn or the cap is reached.
FrameGrid compute_frames(const SurfaceParams& params, const AccessorySeries& series,
                         const SurfaceOptions& opts = {});

// Constant unitary pair acting on vertices by x -> P x Q^{-1}.
struct SymmetryAction {
    Mat2 P, Q;
};

struct SurfaceMesh {
    std::vector<Vec4> vertices;           // unit 4-vectors
    std::vector<int> piece_id;            // symmetry-copy index per vertex
    std::vector<std::array<int, 4>> faces; // quads; [3] == [2] marks a triangle
    std::vector<Vec3> projected;          // filled by stereographic()
    int copies = 1;
    bool closed = true; // false when the symmetry closure or overlap failed
    std::vector<SymmetryAction> seam_actions; // one per punctured cell
    GridDiagnostics diag;

    double diameter() const; // max vertex distance from deterministic probes
};

SurfaceMesh immerse(const FrameGrid& fg, const SurfaceParams& params,
                    const SurfaceOptions& opts = {});

// Two-resolution variant: both grids share the cell geometry, coarse carries
// half the circle samples. Every evaluated Sym-point frame is extrapolated as
// 2 * fine - coarse, cancelling the first-order error from the unitarizer
// singularities at the Sym points.
SurfaceMesh immerse(const FrameGrid& fine, const FrameGrid& coarse, const SurfaceParams& params,
                    const SurfaceOptions& opts = {});

// Closes the piece under the group generated by the measured seam actions
// (breadth-first products, duplicates detected by action proximity).
SurfaceMesh extend_by_symmetry(const SurfaceMesh& piece, const SurfaceParams& params,
                               const SurfaceOptions& opts = {});

// compute_frames + immerse + extend_by_symmetry
SurfaceMesh build_surface(const SurfaceParams& params, const AccessorySeries& series,
                          const SurfaceOptions& opts = {});

// Fills mesh.projected; throws listing vertices within 1e-6 of the pole.
void stereographic(SurfaceMesh& mesh, const Vec4& pole = default_pole());

// Intrinsic area: quads split into geodesic triangles, spherical excess via
// l'Huilier. Degenerate faces are skipped and counted.
double mesh_area(const SurfaceMesh& mesh, int* degenerate_count = nullptr);

std::vector<Vec4> vertex_normals(const SurfaceMesh& mesh);

// Normal-offset area derivative: H ~ -(A(+eps) - A(-eps)) / (4 eps A(0)).
// Sign depends on the face orientation convention; compare magnitudes.
double estimate_mean_curvature(const SurfaceMesh& mesh, double eps = 1e-3);

enum class MeshFormat { obj, ply };

void export_mesh(const SurfaceMesh& mesh, MeshFormat format, const std::string& path);
SurfaceMesh import_mesh(MeshFormat format, const std::string& path); // projected + faces only

} // namespace cmcforge
