#include "dco/densify.hpp"

#include <algorithm>
#include <cmath>

namespace dco {

namespace {

// Full-resolution pixel -> quarter-scale confidence, clamped at the map edge.
double fused_confidence(const AmplitudeMap& m_fuse, int x, int y) {
    int mx = std::min(x / 2, m_fuse.width - 1);
    int my = std::min(y / 2, m_fuse.height - 1);
    float v = m_fuse.at(mx, my);
    return FloatMap::is_valid(v) ? v : 0.0;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

double smoothness_weight(int px, int py, int qx, int qy, const EdgeMask& b_dp,
                         const AmplitudeMap& m_fuse, const IntensityGradientMap& m_i) {
    if (std::abs(px - qx) + std::abs(py - qy) != 1)
        throw InputError("smoothness_weight: q must be 4-adjacent to p");
    int on_contour = (b_dp.at(px, py) ? 1 : 0) + (b_dp.at(qx, qy) ? 1 : 0);
    if (on_contour == 1) return 0.0; // depth discontinuity: do not smooth across
    double s_p = fused_confidence(m_fuse, px, py) * m_i.at(px, py);
    double s_q = fused_confidence(m_fuse, qx, qy) * m_i.at(qx, qy);
    return std::max(1.0 - std::min(s_p, s_q), 0.0);
}

ConstraintSystem assemble_system(const SparseDepthMap& d_sparse, const EdgeMask& b_dp,
                                 const AmplitudeMap& m_fuse, const IntensityGradientMap& m_i,
                                 const FloatMap* d_pre, const PipelineConfig& cfg) {
    const int w = d_sparse.width, h = d_sparse.height;
    if (b_dp.width != w || b_dp.height != h || m_i.width != w || m_i.height != h)
        throw InputError("assemble_system: full-resolution inputs disagree on dimensions");
    if (d_pre && (d_pre->width != w || d_pre->height != h))
        throw InputError("assemble_system: previous dense map has different dimensions");

    // A zero stability balance removes the term from the objective entirely,
    // initial guess included.
    if (cfg.lambda_s2 <= 0.0) d_pre = nullptr;

    ConstraintSystem sys;
    sys.width = w;
    sys.height = h;
    sys.diag.assign(sys.size(), 0.0);
    sys.coup_h.assign(sys.size(), 0.0);
    sys.coup_v.assign(sys.size(), 0.0);
    sys.rhs.assign(sys.size(), 0.0);
    sys.initial.assign(sys.size(), 0.0);
    sys.anchored.assign(sys.size(), 0);

    double sparse_sum = 0.0;
    size_t sparse_count = 0;
    for (float v : d_sparse.data) {
        if (FloatMap::is_valid(v)) {
            sparse_sum += v;
            ++sparse_count;
        }
    }
    const double sparse_mean = sparse_count ? sparse_sum / sparse_count : 0.0;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = sys.idx(x, y);
            double init = sparse_mean;
            if (d_sparse.valid_at(x, y)) {
                double ds = d_sparse.at(x, y);
                sys.diag[i] += cfg.lambda_d;
                sys.rhs[i] += cfg.lambda_d * ds;
                sys.constant_term += cfg.lambda_d * ds * ds;
                sys.anchored[i] = 1;
                init = ds;
            } else if (d_pre && d_pre->valid_at(x, y)) {
                init = d_pre->at(x, y);
            }
            if (d_pre && d_pre->valid_at(x, y)) {
                double dp = d_pre->at(x, y);
                sys.diag[i] += cfg.lambda_s2;
                sys.rhs[i] += cfg.lambda_s2 * dp;
                sys.constant_term += cfg.lambda_s2 * dp * dp;
                sys.anchored[i] = 1;
            }
            sys.initial[i] = init;
        }
    }
    for (size_t i = 0; i < sys.size(); ++i) sys.anchor_count += sys.anchored[i];

    // The double sum visits each unordered pair from both endpoints, so every
    // edge carries twice the smoothness balance.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = sys.idx(x, y);
            if (x + 1 < w) {
                double c = 2.0 * cfg.lambda_s * smoothness_weight(x, y, x + 1, y, b_dp, m_fuse, m_i);
                sys.coup_h[i] = c;
                sys.diag[i] += c;
                sys.diag[sys.idx(x + 1, y)] += c;
            }
            if (y + 1 < h) {
                double c = 2.0 * cfg.lambda_s * smoothness_weight(x, y, x, y + 1, b_dp, m_fuse, m_i);
                sys.coup_v[i] = c;
                sys.diag[i] += c;
                sys.diag[sys.idx(x, y + 1)] += c;
            }
        }
    }
    return sys;
}

void apply_system(const ConstraintSystem& sys, const std::vector<double>& x,
                  std::vector<double>& out) {
    const int w = sys.width, h = sys.height;
    out.resize(sys.size());
    for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
            size_t i = sys.idx(xx, y);
            double acc = sys.diag[i] * x[i];
            if (xx + 1 < w) acc -= sys.coup_h[i] * x[i + 1];
            if (xx > 0) acc -= sys.coup_h[i - 1] * x[i - 1];
            if (y + 1 < h) acc -= sys.coup_v[i] * x[i + w];
            if (y > 0) acc -= sys.coup_v[i - w] * x[i - w];
            out[i] = acc;
        }
    }
}

double objective_value(const ConstraintSystem& sys, const std::vector<double>& x) {
    std::vector<double> ax;
    apply_system(sys, x, ax);
    return dot(x, ax) - 2.0 * dot(sys.rhs, x) + sys.constant_term;
}

DenseDepthMap solve_dense_depth(const ConstraintSystem& sys, const PipelineConfig& cfg,
                                SolveStats* stats) {
    if (sys.anchor_count == 0)
        throw UnsolvableFrameError("solve_dense_depth: no pixel carries a data or stability constraint");

    const size_t n = sys.size();
    std::vector<double> x = sys.initial;
    std::vector<double> precond(n);
    for (size_t i = 0; i < n; ++i) precond[i] = sys.diag[i] > 0.0 ? 1.0 / sys.diag[i] : 1.0;

    std::vector<double> r(n), z(n), p(n), q(n);
    apply_system(sys, x, q);
    for (size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - q[i];

    double bnorm = std::sqrt(dot(sys.rhs, sys.rhs));
    const double denom = bnorm > 0.0 ? bnorm : 1.0;

    // Minimal-residual smoothing over the CG iterates: xs is the convex
    // blend whose residual norm is non-increasing by construction; it is
    // what gets returned and reported.
    std::vector<double> xs = x;
    std::vector<double> rs = r;
    double snorm = std::sqrt(dot(rs, rs));

    SolveStats local;
    local.residual_history.push_back(snorm);
    local.objective_initial = objective_value(sys, sys.initial);

    for (size_t i = 0; i < n; ++i) z[i] = precond[i] * r[i];
    p = z;
    double rho = dot(r, z);

    int iter = 0;
    while (iter < cfg.solver_max_iter && snorm / denom > cfg.solver_tol) {
        apply_system(sys, p, q);
        double pq = dot(p, q);
        if (pq <= 0.0) break; // exhausted the reachable subspace
        double alpha = rho / pq;
        // fused passes; every reduction still accumulates in ascending order
        double rho_next = 0.0;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            z[i] = precond[i] * r[i];
            rho_next += r[i] * z[i];
        }
        double beta = rho_next / rho;
        rho = rho_next;
        for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];

        double sd = 0.0, dd = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double di = r[i] - rs[i];
            sd += rs[i] * di;
            dd += di * di;
        }
        double eta = dd > 0.0 ? std::clamp(-sd / dd, 0.0, 1.0) : 0.0;
        double snorm_sq = 0.0;
        if (eta > 0.0) {
            for (size_t i = 0; i < n; ++i) {
                rs[i] += eta * (r[i] - rs[i]);
                xs[i] += eta * (x[i] - xs[i]);
                snorm_sq += rs[i] * rs[i];
            }
        } else {
            for (size_t i = 0; i < n; ++i) snorm_sq += rs[i] * rs[i];
        }
        snorm = std::sqrt(snorm_sq);
        ++iter;
        local.residual_history.push_back(snorm);
    }

    local.iterations = iter;
    local.relative_residual = snorm / denom;
    local.objective_final = objective_value(sys, xs);
    if (stats) *stats = std::move(local);

    DenseDepthMap dense(sys.width, sys.height);
    for (size_t i = 0; i < n; ++i)
        dense.data[i] = static_cast<float>(std::max(xs[i], 0.0));
    return dense;
}

} // namespace dco
