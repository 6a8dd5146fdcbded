#pragma once

#include "carnot/closed_forms.hpp"
#include "carnot/group.hpp"
#include "carnot/spectral.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace carnot {

// Initial data (zeta, 2 theta). Only theta is stored; the factor 2 lives in the formulas.
struct Covector {
    Vec zeta;
    Vec theta;
};

inline void check_covector(const StepTwoGroup& G, const Covector& c) {
    if (c.zeta.size() != G.q() || c.theta.size() != G.m())
        throw ValidationError("covector has shape (" + std::to_string(c.zeta.size()) + "," +
                              std::to_string(c.theta.size()) + "), group expects (" + std::to_string(G.q()) + "," +
                              std::to_string(G.m()) + ")");
    if (!c.zeta.allFinite() || !c.theta.allFinite()) throw ValidationError("covector has non-finite entries");
}

namespace detail {

struct GaussLegendre {
    std::vector<double> nodes, weights;  // on [0, 1]
};

// Golub-Welsch on the Jacobi matrix of the Legendre polynomials.
inline const GaussLegendre& gauss_legendre16() {
    static const GaussLegendre rule = [] {
        constexpr int n = 16;
        Mat J = Mat::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double b = k / std::sqrt(4.0 * k * k - 1.0);
            J(k, k - 1) = b;
            J(k - 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(J);
        GaussLegendre r;
        for (int i = 0; i < n; ++i) {
            const double v0 = es.eigenvectors()(0, i);
            r.nodes.push_back(0.5 * (es.eigenvalues()(i) + 1.0));
            r.weights.push_back(v0 * v0);  // 2 v0^2 on [-1,1], halved for [0,1]
        }
        return r;
    }();
    return rule;
}

// Per-cluster pieces of the geodesic: zeta(r) and x(r) are explicit in r.
struct ExpPieces {
    std::vector<double> lam;
    std::vector<Vec> xi, eta;  // xi_l = P_l zeta, eta_l = Ut xi_l

    void eval(double r, Vec& x, Vec& z) const {
        x.setZero();
        z.setZero();
        for (std::size_t l = 0; l < lam.size(); ++l) {
            const double a = 2.0 * lam[l] * r;
            const double sc = fn::sinc(a);
            z += std::cos(a) * xi[l] + (2.0 * r * sc) * eta[l];
            x += (r * sc) * xi[l] + (2.0 * r * r * special::trig::one_minus_cos_over_x2(a)) * eta[l];
        }
    }
};

inline ExpPieces exp_pieces(const Spectrum& sp, const Vec& zeta) {
    ExpPieces p;
    for (int l = 0; l < sp.clusters(); ++l) {
        const Vec xi = sp.projections[static_cast<std::size_t>(l)] * zeta;
        p.lam.push_back(sp.lambda(l));
        p.xi.push_back(xi);
        p.eta.push_back(sp.ut * xi);
    }
    return p;
}

}  // namespace detail

// Spectral x(s) plus composite Gauss-Legendre for t(s) = 1/2 int <U x, zeta>.
inline GroupElement exp_generic(const StepTwoGroup& G, const Covector& c, double s = 1.0) {
    const SkewTuple& U = G.utuple;
    const Spectrum sp = spectrum(U, c.theta);
    const detail::ExpPieces pieces = detail::exp_pieces(sp, c.zeta);
    const int q = G.q();
    Vec x(q), z(q);
    if (s == 0.0) return identity(G);

    const auto& gl = detail::gauss_legendre16();
    auto integrate = [&](int panels) {
        Vec acc = Vec::Zero(G.m());
        const double hlen = s / panels;
        for (int p = 0; p < panels; ++p) {
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double r = (p + gl.nodes[i]) * hlen;
                pieces.eval(r, x, z);
                acc += gl.weights[i] * bracket(U, x, z);
            }
        }
        return Vec(0.5 * hlen * acc);
    };

    const double tol = 1e-12 * (1.0 + c.zeta.squaredNorm() * std::abs(s));
    int panels = std::max(1, static_cast<int>(std::ceil(4.0 * sp.lambda_max() * std::abs(s) / 2.0)));
    Vec t = integrate(panels);
    for (int it = 0; it < 12; ++it) {
        panels *= 2;
        const Vec t2 = integrate(panels);
        const double diff = (t2 - t).norm();
        t = t2;
        if (diff <= tol) break;
    }
    pieces.eval(s, x, z);
    return {x, t};
}

enum class ExpMode { Auto, Generic };

inline GroupElement exp_map(const StepTwoGroup& G, const Covector& c, double s = 1.0, ExpMode mode = ExpMode::Auto) {
    check_covector(G, c);
    if (mode == ExpMode::Generic) return exp_generic(G, c, s);
    switch (G.family) {
        case Family::Ktype:
        case Family::Heisenberg: return closed::ktype_exp(G.data, c.zeta, c.theta, s);
        case Family::CR: return closed::cr_exp(G.data, c.zeta, c.theta, s);
        case Family::N32: return closed::n32_exp(c.zeta, c.theta, s);
        case Family::DirectProduct: {
            const auto& a = *G.parts[0];
            const auto& b = *G.parts[1];
            const GroupElement ga = exp_map(a, {c.zeta.head(a.q()), c.theta.head(a.m())}, s);
            const GroupElement gb = exp_map(b, {c.zeta.tail(b.q()), c.theta.tail(b.m())}, s);
            Vec x(G.q()), t(G.m());
            x << ga.x, gb.x;
            t << ga.t, gb.t;
            return {x, t};
        }
        default: return exp_generic(G, c, s);
    }
}

// RK4 on (x, t, xi) with tau frozen: zeta = xi + Ut x, x' = zeta, t'_j = <U_j x, zeta>/2, xi' = Ut zeta.
inline GroupElement exp_map_ode(const StepTwoGroup& G, const Covector& c, double s, int steps,
                                Vec* zeta_end = nullptr) {
    check_covector(G, c);
    if (steps < 16) throw ValidationError("exp_map_ode: steps must be >= 16");
    const SkewTuple& U = G.utuple;
    const Mat Ut = assemble_u(U, c.theta);
    const int q = G.q(), m = G.m();
    const int n = 2 * q + m;
    auto rhs = [&](const Vec& y) {
        const Vec x = y.head(q);
        const Vec zeta = y.tail(q) + Ut * x;
        Vec d(n);
        d.head(q) = zeta;
        d.segment(q, m) = 0.5 * bracket(U, x, zeta);
        d.tail(q) = Ut * zeta;
        return d;
    };
    Vec y = Vec::Zero(n);
    y.tail(q) = c.zeta;
    const double h = s / steps;
    for (int i = 0; i < steps; ++i) {
        const Vec k1 = rhs(y);
        const Vec k2 = rhs(y + 0.5 * h * k1);
        const Vec k3 = rhs(y + 0.5 * h * k2);
        const Vec k4 = rhs(y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (zeta_end) *zeta_end = y.tail(q) + Ut * y.head(q);
    return {y.head(q), y.segment(q, m)};
}

inline double endpoint_distance(const GroupElement& a, const GroupElement& b) {
    return std::sqrt((a.x - b.x).squaredNorm() + (a.t - b.t).squaredNorm());
}

struct AbnormalReport {
    bool abnormal = false;
    std::vector<Vec> sigma_basis;
};

// sigma with U(sigma) Ut(theta)^k zeta = 0 for all k < q.
inline AbnormalReport is_abnormal(const StepTwoGroup& G, const Covector& c) {
    check_covector(G, c);
    if (c.zeta.norm() == 0.0) throw ValidationError("is_abnormal: zeta must be nonzero");
    const SkewTuple& U = G.utuple;
    const int q = G.q(), m = G.m();
    const Mat Ut = assemble_u(U, c.theta);
    std::vector<Vec> krylov;
    Vec v = c.zeta / c.zeta.norm();
    for (int k = 0; k < q; ++k) {
        krylov.push_back(v);
        v = Ut * v;
        const double nv = v.norm();
        if (nv <= 1e-14) break;
        v /= nv;
    }
    const int K = static_cast<int>(krylov.size());
    Mat M(q * K, m);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < m; ++j) M.block(q * k, j, q, 1) = U[j] * krylov[static_cast<std::size_t>(k)];
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * smax) ++rank;
    AbnormalReport out;
    for (int i = rank; i < m; ++i) out.sigma_basis.push_back(svd.matrixV().col(i));
    out.abnormal = !out.sigma_basis.empty();
    return out;
}

struct CutReport {
    double cut_time = std::numeric_limits<double>::infinity();
    Vec minimizing_sigma;
    bool abnormal = false;
    int pi_subspace_dim = 0;
    bool converged = true;
};

namespace detail {

// Smoothed largest singular value: (1/beta) log sum_i exp(beta lambda_i), and its gradient in sigma.
inline double smooth_opnorm(const SkewTuple& U, const Vec& sigma, double beta, Vec* grad) {
    const Mat Ut = assemble_u(U, sigma);
    Mat S = Ut.transpose() * Ut;
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const Vec ev = es.eigenvalues().cwiseMax(0.0);
    const int q = static_cast<int>(ev.size());
    Vec lam = ev.cwiseSqrt();
    const double lmax = lam.maxCoeff();
    Vec w(q);
    double z = 0.0;
    for (int i = 0; i < q; ++i) {
        w(i) = std::exp(beta * (lam(i) - lmax));
        z += w(i);
    }
    if (grad) {
        grad->setZero(U.m());
        for (int i = 0; i < q; ++i) {
            if (w(i) < 1e-300 || lam(i) <= 0.0) continue;
            const Vec vi = es.eigenvectors().col(i);
            const Vec uv = Ut * vi;
            for (int j = 0; j < U.m(); ++j) {
                // d(lambda^2) = 2 <Ut v, U_j v>
                const double dl2 = 2.0 * uv.dot(U[j] * vi);
                (*grad)(j) += (w(i) / z) * dl2 / (2.0 * lam(i));
            }
        }
    }
    return lmax + std::log(z) / beta;
}

}  // namespace detail

// Cut time 2 pi / min{ ||U(sigma)|| : sigma in tau + Pi } with tau = 2 theta and Pi the abnormal subspace.
inline CutReport cut_time_gm(const StepTwoGroup& G, const Covector& c) {
    check_covector(G, c);
    const double zn = c.zeta.norm();
    if (std::abs(zn - 1.0) > 1e-9) throw ValidationError("cut_time_gm: covector must have |zeta| = 1");
    CutReport out;
    const Vec tau = 2.0 * c.theta;
    const AbnormalReport ab = is_abnormal(G, c);
    out.abnormal = ab.abnormal;
    out.pi_subspace_dim = static_cast<int>(ab.sigma_basis.size());
    if (tau.norm() == 0.0) {
        out.minimizing_sigma = tau;
        return out;
    }
    if (!ab.abnormal) {
        out.minimizing_sigma = tau;
        out.cut_time = 2.0 * kPi / op_norm(G.utuple, tau);
        return out;
    }
    const int d = out.pi_subspace_dim;
    Mat N(G.m(), d);
    for (int i = 0; i < d; ++i) N.col(i) = ab.sigma_basis[static_cast<std::size_t>(i)];
    const Vec r0 = tau - N * (N.transpose() * tau);
    if (r0.norm() <= 1e-12 * tau.norm()) {
        out.minimizing_sigma = Vec::Zero(G.m());
        return out;
    }
    // continuation in the smoothing parameter, gradient descent with backtracking in the coefficients
    const double scale = op_norm(G.utuple, r0);
    Vec coef = Vec::Zero(d);
    Vec g(G.m());
    for (double beta = 10.0 / scale; beta <= 1e13 / scale; beta *= 10.0) {
        double step = 1.0 * scale;
        for (int it = 0; it < 400; ++it) {
            const Vec sigma = r0 + N * coef;
            const double f0 = detail::smooth_opnorm(G.utuple, sigma, beta, &g);
            const Vec gc = N.transpose() * g;
            if (gc.norm() <= 1e-13) break;
            bool moved = false;
            while (step > 1e-16 * scale) {
                const Vec trial = coef - step * gc;
                if (detail::smooth_opnorm(G.utuple, r0 + N * trial, beta, nullptr) <
                    f0 - 1e-4 * step * gc.squaredNorm()) {
                    coef = trial;
                    moved = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
    }
    out.minimizing_sigma = r0 + N * coef;
    const double v = op_norm(G.utuple, out.minimizing_sigma);
    out.cut_time = v > 0.0 ? 2.0 * kPi / v : std::numeric_limits<double>::infinity();
    return out;
}

enum class SymmetryKind { Scale, Negate, Rotate };

// Covector whose endpoint is the transformed endpoint: scale -> (r x, r^2 t),
// negate -> (-x, -t), rotate (N32 only) -> (O x, O t).
inline Covector symmetry_transport(const StepTwoGroup& G, const Covector& c, SymmetryKind kind, double r = 1.0,
                                   const Mat& O = Mat()) {
    check_covector(G, c);
    Covector out;
    switch (kind) {
        case SymmetryKind::Scale:
            if (!(r > 0.0)) throw ValidationError("symmetry_transport: scale factor must be > 0");
            out = {r * c.zeta, c.theta};
            break;
        case SymmetryKind::Negate: {
            const Mat E = exp_skew(spectrum(G.utuple, c.theta), 2.0);
            out = {-(E * c.zeta), -c.theta};
            break;
        }
        case SymmetryKind::Rotate: {
            if (G.family != Family::N32) throw ValidationError("symmetry_transport: rotation needs the N32 family");
            if (O.rows() != 3 || O.cols() != 3 || (O.transpose() * O - Mat::Identity(3, 3)).norm() > 1e-10)
                throw ValidationError("symmetry_transport: O must be a 3x3 orthogonal matrix");
            if (O.determinant() > 0) {
                out = {O * c.zeta, O * c.theta};
            } else {
                const Mat E = exp_skew(spectrum(G.utuple, c.theta), 2.0);
                out = {O * (E * c.zeta), O * c.theta};
            }
            break;
        }
    }
    const GroupElement g = exp_map(G, c);
    GroupElement want;
    switch (kind) {
        case SymmetryKind::Scale: want = dilate(g, r); break;
        case SymmetryKind::Negate: want = inverse(g); break;
        case SymmetryKind::Rotate: want = {O * g.x, O * g.t}; break;
    }
    const GroupElement got = exp_map(G, out);
    if (endpoint_distance(got, want) > 1e-10 * (1.0 + want.x.norm() + want.t.norm()))
        throw SolverError("symmetry_transport: round-trip check failed");
    return out;
}

}  // namespace carnot
