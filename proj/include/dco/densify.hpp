#pragma once

#include <cstdint>
#include <vector>

#include "dco/config.hpp"
#include "dco/contour.hpp"
#include "dco/image.hpp"
#include "dco/stereo.hpp"

namespace dco {

/// Normal equations of the three-constraint quadratic objective on a 5-point
/// stencil. Symmetric positive semi-definite by construction:
///   diag(p)    = lambda_d*w_sparse + lambda_s2*w_stable + sum of couplings
///   coupling   = 2*lambda_s*w_pq  toward the right/bottom neighbor
///   rhs(p)     = lambda_d*w_sparse*D_sparse + lambda_s2*w_stable*D_pre
/// The objective itself is x'Ax - 2b'x + constant_term.
struct ConstraintSystem {
    int width = 0;
    int height = 0;
    std::vector<double> diag;
    std::vector<double> coup_h; // coupling (p, p_right), last column unused
    std::vector<double> coup_v; // coupling (p, p_down), last row unused
    std::vector<double> rhs;
    std::vector<double> initial;    // solver start: sparse, else previous, else mean
    std::vector<uint8_t> anchored;  // pixel carries a data or stability constraint
    double constant_term = 0.0;
    size_t anchor_count = 0;

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    size_t size() const { return static_cast<size_t>(width) * height; }
};

/// Full-resolution metric depth, every pixel finite and nonnegative.
using DenseDepthMap = FloatMap;

/// Smoothness weight between 4-adjacent pixels: zero when exactly one sits
/// on the contour, else max(1 - min(s_p, s_q), 0) with s = m_fuse(m(x)) *
/// m_i(x). m_fuse is quarter scale; the other maps are full resolution.
double smoothness_weight(int px, int py, int qx, int qy, const EdgeMask& b_dp,
                         const AmplitudeMap& m_fuse, const IntensityGradientMap& m_i);

/// Builds the normal equations from the data, smoothness, and stability
/// constraints. d_pre may be null (first frame); its term then vanishes.
ConstraintSystem assemble_system(const SparseDepthMap& d_sparse, const EdgeMask& b_dp,
                                 const AmplitudeMap& m_fuse, const IntensityGradientMap& m_i,
                                 const FloatMap* d_pre, const PipelineConfig& cfg);

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    double objective_initial = 0.0;
    double objective_final = 0.0;
    std::vector<double> residual_history; // |r| per iteration, position 0 = initial
};

/// Jacobi-preconditioned conjugate gradient on the assembled system, run to
/// solver_tol relative residual or solver_max_iter. All reductions are
/// fixed-order, so repeated runs are bit-stable. Throws UnsolvableFrameError
/// when no pixel is anchored.
DenseDepthMap solve_dense_depth(const ConstraintSystem& sys, const PipelineConfig& cfg,
                                SolveStats* stats = nullptr);

/// Quadratic objective evaluated at x.
double objective_value(const ConstraintSystem& sys, const std::vector<double>& x);

/// A = diag - couplings applied to x (5-point stencil).
void apply_system(const ConstraintSystem& sys, const std::vector<double>& x,
                  std::vector<double>& out);

} // namespace dco
