#pragma once

#include "carnot/closed_forms.hpp"
#include "carnot/geodesics.hpp"
#include "carnot/group.hpp"
#include "carnot/special.hpp"
#include "carnot/spectral.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace carnot {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Operator norm of Ut(theta) with cheap family paths.
inline double group_op_norm(const StepTwoGroup& G, const Vec& theta) {
    switch (G.family) {
        case Family::Ktype:
        case Family::Heisenberg: return (G.data.transpose() * theta).norm();
        case Family::CR: return (G.data.transpose() * theta).cwiseAbs().maxCoeff();
        case Family::N32: return theta.norm();
        case Family::DirectProduct: {
            const auto& a = *G.parts[0];
            const auto& b = *G.parts[1];
            return std::max(group_op_norm(a, theta.head(a.m())), group_op_norm(b, theta.tail(b.m())));
        }
        default: return op_norm(G.utuple, theta);
    }
}

inline bool omega_star_contains(const StepTwoGroup& G, const Vec& theta) {
    if (theta.size() != G.m()) throw ValidationError("omega_star_contains: theta has wrong length");
    return group_op_norm(G, theta) < kPi - 1e-12;
}

struct PhiEval {
    double value = 0.0;
    bool finite = true;
    std::optional<Vec> gradient;
    std::optional<Mat> hessian;
    bool on_boundary = false;
};

struct PhiOptions {
    double boundary_projection_tol = 1e-8;  // |Q x| <= tol |x| for a finite boundary value
    double cr_boundary_tol = 1e-10;         // |z_j| <= tol |z| for CR boundary blocks
};

namespace detail {

inline double g_scot(double mu) { return special::scot(std::sqrt(std::max(0.0, mu))); }

// derivative of mu -> sqrt(mu) cot sqrt(mu)
inline double g_scot_prime(double mu) {
    const double s = std::sqrt(std::max(0.0, mu));
    if (s < 1e-6) return -1.0 / 3.0 - s * s / 45.0;
    const double sn = std::sin(s);
    return -special::s_minus_sc(s) / (2.0 * s * sn * sn);
}

// <Ut cot Ut x, x> and its gradient through divided differences on the clustered spectrum.
inline double quad_generic(const SkewTuple& U, const Spectrum& sp, const Vec& x, Vec* grad) {
    const int L = sp.clusters();
    std::vector<Vec> y(static_cast<std::size_t>(L));
    double val = 0.0;
    for (int a = 0; a < L; ++a) {
        y[static_cast<std::size_t>(a)] = sp.projections[static_cast<std::size_t>(a)] * x;
        val += g_scot(sp.eigvalsq[static_cast<std::size_t>(a)]) * y[static_cast<std::size_t>(a)].squaredNorm();
    }
    if (!grad) return val;
    const int m = U.m();
    grad->setZero(m);
    Mat dd(L, L);
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) {
            const double ma = sp.eigvalsq[static_cast<std::size_t>(a)], mb = sp.eigvalsq[static_cast<std::size_t>(b)];
            if (std::abs(ma - mb) < 1e-6 * (1.0 + std::max(ma, mb)))
                dd(a, b) = g_scot_prime(0.5 * (ma + mb));
            else
                dd(a, b) = (g_scot(ma) - g_scot(mb)) / (ma - mb);
        }
    // dS_j = -(U_j Ut + Ut U_j); y_a^T dS_j y_b = -(<U_j^T y_a, Ut y_b> + <Ut^T y_a, U_j y_b>)
    std::vector<Vec> uty(static_cast<std::size_t>(L));
    for (int a = 0; a < L; ++a) uty[static_cast<std::size_t>(a)] = sp.ut * y[static_cast<std::size_t>(a)];
    for (int j = 0; j < m; ++j) {
        const Mat& Uj = U[j];
        std::vector<Vec> ujy(static_cast<std::size_t>(L));
        for (int a = 0; a < L; ++a) ujy[static_cast<std::size_t>(a)] = Uj * y[static_cast<std::size_t>(a)];
        double acc = 0.0;
        for (int a = 0; a < L; ++a)
            for (int b = 0; b < L; ++b) {
                const double term = ujy[static_cast<std::size_t>(a)].dot(uty[static_cast<std::size_t>(b)]) +
                                    uty[static_cast<std::size_t>(a)].dot(ujy[static_cast<std::size_t>(b)]);
                acc += dd(a, b) * term;
            }
        (*grad)(j) = acc;
    }
    return val;
}

// logdet(pi^2 - S(theta)) and its gradient.
inline double logdet_barrier(const SkewTuple& U, const Spectrum& sp, Vec* grad) {
    const double pi2 = kPi * kPi;
    double val = 0.0;
    for (int a = 0; a < sp.clusters(); ++a) {
        const double gap = pi2 - sp.eigvalsq[static_cast<std::size_t>(a)];
        if (gap <= 0.0) return kNegInf;
        val += sp.multiplicities[static_cast<std::size_t>(a)] * std::log(gap);
    }
    if (grad) {
        grad->setZero(U.m());
        for (int a = 0; a < sp.clusters(); ++a) {
            const Mat& P = sp.projections[static_cast<std::size_t>(a)];
            const double gap = pi2 - sp.eigvalsq[static_cast<std::size_t>(a)];
            const Mat PU = P * sp.ut;
            for (int j = 0; j < U.m(); ++j) {
                // tr(P dS_j) = -2 tr(P U_j Ut)
                const double tr = -2.0 * (PU.transpose().cwiseProduct(U[j])).sum();
                (*grad)(j) -= tr / gap;
            }
        }
    }
    return val;
}

}  // namespace detail

// Interior value (and gradient) of phi; returns -inf outside the open domain.
inline double phi_interior(const StepTwoGroup& G, const GroupElement& g, const Vec& theta, Vec* grad) {
    switch (G.family) {
        case Family::Ktype:
        case Family::Heisenberg: {
            if ((G.data.transpose() * theta).norm() >= kPi) return kNegInf;
            const auto vg = closed::ktype_phi(G.data, g.x, g.t, theta);
            if (grad) *grad = vg.grad;
            return vg.value;
        }
        case Family::CR: {
            if ((G.data.transpose() * theta).cwiseAbs().maxCoeff() >= kPi) return kNegInf;
            const auto vg = closed::cr_phi(G.data, g.x, g.t, theta);
            if (grad) *grad = vg.grad;
            return vg.value;
        }
        case Family::N32: {
            if (theta.norm() >= kPi) return kNegInf;
            const auto vg = closed::n32_phi(g.x, g.t, theta);
            if (grad) *grad = vg.grad;
            return vg.value;
        }
        default: break;
    }
    const Spectrum sp = spectrum(G.utuple, theta);
    if (sp.lambda_max() >= kPi) return kNegInf;
    Vec gq;
    const double v = detail::quad_generic(G.utuple, sp, g.x, grad ? &gq : nullptr) + 4.0 * g.t.dot(theta);
    if (grad) *grad = gq + 4.0 * g.t;
    return v;
}

// Largest admissible central-difference step around an interior theta.
inline double fd_step(const StepTwoGroup& G, const Vec& theta) {
    double umax = 0.0;
    for (int j = 0; j < G.m(); ++j) umax = std::max(umax, group_op_norm(G, Vec::Unit(G.m(), j)));
    const double dist = kPi - group_op_norm(G, theta);
    double h = 1e-5 * (1.0 + theta.norm());
    if (umax > 0.0) h = std::min(h, 0.25 * dist / umax);
    return h;
}

// Central differences of a gradient callback.
template <class GradFn>
Mat fd_hessian(GradFn&& gradfn, const Vec& theta, double h) {
    const int m = static_cast<int>(theta.size());
    Mat H(m, m);
    for (int j = 0; j < m; ++j) {
        Vec tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        H.col(j) = (gradfn(tp) - gradfn(tm)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

inline Mat phi_hessian(const StepTwoGroup& G, const GroupElement& g, const Vec& theta) {
    if (G.family == Family::CR) {
        Mat H;
        closed::cr_phi(G.data, g.x, g.t, theta, &H);
        return H;
    }
    auto gradfn = [&](const Vec& th) {
        Vec gr;
        phi_interior(G, g, th, &gr);
        return gr;
    };
    return fd_hessian(gradfn, theta, fd_step(G, theta));
}

// Boundary value: drop the top eigenspace Q when |Q x| is negligible, else -inf.
inline double phi_boundary(const StepTwoGroup& G, const GroupElement& g, const Vec& theta,
                           const PhiOptions& opt = {}) {
    if (G.family == Family::CR) {
        const Vec c = G.data.transpose() * theta;
        const double zn = g.x.norm();
        double v = 4.0 * g.t.dot(theta);
        for (int j = 0; j < c.size(); ++j) {
            const double z2 = g.x(2 * j) * g.x(2 * j) + g.x(2 * j + 1) * g.x(2 * j + 1);
            if (std::abs(std::abs(c(j)) - kPi) <= 1e-9 * kPi) {
                if (std::sqrt(z2) > opt.cr_boundary_tol * zn) return kNegInf;
                continue;
            }
            v += z2 * special::scot(c(j));
        }
        return v;
    }
    const Spectrum sp = spectrum(G.utuple, theta);
    const double xn = g.x.norm();
    double v = 4.0 * g.t.dot(theta);
    Vec qx = Vec::Zero(g.x.size());
    for (int a = 0; a < sp.clusters(); ++a) {
        const Vec y = sp.projections[static_cast<std::size_t>(a)] * g.x;
        if (std::abs(sp.lambda(a) - kPi) <= 1e-9 * kPi) {
            qx += y;
            continue;
        }
        v += detail::g_scot(sp.eigvalsq[static_cast<std::size_t>(a)]) * y.squaredNorm();
    }
    if (qx.norm() > opt.boundary_projection_tol * xn) return kNegInf;
    return v;
}

inline PhiEval phi(const StepTwoGroup& G, const GroupElement& g, const Vec& theta, bool want_derivatives = false,
                   const PhiOptions& opt = {}) {
    check_point(G, g);
    if (theta.size() != G.m()) throw ValidationError("phi: theta has wrong length");
    const double nrm = group_op_norm(G, theta);
    if (nrm > kPi + 1e-12) throw DomainError("phi: theta lies outside the closed reference set");
    PhiEval out;
    if (nrm >= kPi - 1e-12) {
        out.on_boundary = true;
        out.value = phi_boundary(G, g, theta, opt);
        out.finite = std::isfinite(out.value);
        return out;
    }
    Vec gr;
    out.value = phi_interior(G, g, theta, want_derivatives ? &gr : nullptr);
    out.finite = std::isfinite(out.value);
    if (want_derivatives && out.finite) {
        out.gradient = gr;
        out.hessian = phi_hessian(G, g, theta);
    }
    return out;
}

enum class PointClass { Origin, M, M2tilde, Boundary, Cut, SmoothNonReference };

inline const char* point_class_name(PointClass c) {
    switch (c) {
        case PointClass::Origin: return "origin";
        case PointClass::M: return "M";
        case PointClass::M2tilde: return "M2tilde";
        case PointClass::Boundary: return "boundary";
        case PointClass::Cut: return "cut";
        case PointClass::SmoothNonReference: return "smooth_non_reference";
    }
    return "unknown";
}

struct DistanceReport {
    double dsq = 0.0;
    Vec maximizer;
    PointClass classification = PointClass::Origin;
    std::optional<Covector> covector;
    std::string method = "concave_max";
    bool converged = true;
    bool lower_bound_only = false;
    double hessian_top_eig = 0.0;
    int starts_used = 0;
};

struct MaximizeOptions {
    int newton_iters = 80;
    int barrier_iters = 60;
    double grad_tol = 1e-10;      // relative to 1 + |phi|
    double degenerate_tol = 1e-8; // relative to 1 + |x|^2
    PhiOptions phi;
};

namespace detail {

struct AscentResult {
    Vec theta;
    double value = kNegInf;
    Vec grad;
    bool converged = false;
};

// Damped Newton ascent on a concave objective with feasibility-preserving backtracking.
template <class ObjFn>
AscentResult newton_ascent(const StepTwoGroup& G, ObjFn&& F, Vec theta, double gtol, int maxit,
                           double boundary_stop = 0.0) {
    AscentResult r;
    Vec g;
    double v = F(theta, &g);
    if (!std::isfinite(v)) return r;
    auto gradfn = [&](const Vec& th) {
        Vec gg;
        F(th, &gg);
        return gg;
    };
    for (int it = 0; it < maxit; ++it) {
        if (g.norm() <= gtol * (1.0 + std::abs(v))) {
            r.converged = true;
            break;
        }
        if (boundary_stop > 0.0 && kPi - group_op_norm(G, theta) < boundary_stop) break;
        const Mat H = fd_hessian(gradfn, theta, fd_step(G, theta));
        Eigen::SelfAdjointEigenSolver<Mat> es(H);
        Vec ev = es.eigenvalues();
        const double hscale = std::max(1.0, ev.cwiseAbs().maxCoeff());
        for (int i = 0; i < ev.size(); ++i) ev(i) = std::min(ev(i), -1e-10 * hscale);
        const Mat& V = es.eigenvectors();
        Vec d = -(V * (V.transpose() * g).cwiseQuotient(ev));
        double alpha = 1.0;
        bool moved = false;
        const double slope = g.dot(d);
        for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
            const Vec trial = theta + alpha * d;
            if (group_op_norm(G, trial) >= kPi) continue;
            Vec gt;
            const double vt = F(trial, &gt);
            if (!std::isfinite(vt)) continue;
            if (vt >= v + 1e-4 * alpha * slope || (vt >= v && gt.norm() < g.norm())) {
                theta = trial;
                v = vt;
                g = gt;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    r.theta = theta;
    r.value = v;
    r.grad = g;
    if (!r.converged) r.converged = g.norm() <= gtol * (1.0 + std::abs(v));
    return r;
}

}  // namespace detail

inline std::vector<Vec> maximize_starts(const StepTwoGroup& G) {
    std::vector<Vec> starts{Vec::Zero(G.m())};
    for (int j = 0; j < G.m(); ++j) {
        const Vec e = Vec::Unit(G.m(), j);
        const double b = kPi / group_op_norm(G, e);
        starts.push_back(0.5 * b * e);
        starts.push_back(-0.5 * b * e);
    }
    return starts;
}

// Covector of the unique shortest geodesic for an interior maximizer theta.
inline Covector recover_covector(const StepTwoGroup& G, const GroupElement& g, const Vec& theta,
                                 double tol = 1e-8) {
    check_point(G, g);
    const Spectrum sp = spectrum(G.utuple, theta);
    if (sp.lambda_max() >= kPi - 1e-12) throw DomainError("recover_covector: theta is not interior");
    const Mat Einv = exp_skew(sp, -1.0);
    const Vec zeta = apply_fn(sp, fn::lsin(), Vec(Einv * g.x));
    Covector c{zeta, theta};
    const double ph = phi_interior(G, g, theta, nullptr);
    const double scale = 1.0 + g.x.squaredNorm() + g.t.norm();
    if (std::abs(zeta.squaredNorm() - ph) > tol * scale)
        throw SolverError("recover_covector: |zeta|^2 differs from phi; theta is not a critical point");
    const GroupElement e = exp_map(G, c);
    if (endpoint_distance(e, g) > tol * (1.0 + g.x.norm() + g.t.norm()))
        throw SolverError("recover_covector: exp(zeta, 2 theta) misses the target");
    return c;
}

inline DistanceReport classify_interior(const StepTwoGroup& G, const GroupElement& g, const Vec& theta,
                                        double value, const MaximizeOptions& opt) {
    DistanceReport rep;
    rep.dsq = value;
    rep.maximizer = theta;
    const Mat H = phi_hessian(G, g, theta);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    rep.hessian_top_eig = es.eigenvalues()(es.eigenvalues().size() - 1);
    const bool degenerate = std::abs(rep.hessian_top_eig) < opt.degenerate_tol * (1.0 + g.x.squaredNorm());
    rep.classification = degenerate ? PointClass::M2tilde : PointClass::M;
    try {
        rep.covector = recover_covector(G, g, theta);
    } catch (const std::exception&) {
        rep.covector.reset();
    }
    return rep;
}

// sup of phi(g; .) over the reference set.
inline DistanceReport maximize_phi(const StepTwoGroup& G, const GroupElement& g, const MaximizeOptions& opt = {}) {
    check_point(G, g);
    DistanceReport rep;
    rep.maximizer = Vec::Zero(G.m());
    if (g.x.norm() == 0.0 && g.t.norm() == 0.0) {
        rep.classification = PointClass::Origin;
        return rep;
    }
    auto F = [&](const Vec& th, Vec* gr) { return phi_interior(G, g, th, gr); };

    // Phase 1: plain Newton from the start set; an interior critical point is the global max.
    detail::AscentResult best;
    int used = 0;
    for (const Vec& s0 : maximize_starts(G)) {
        ++used;
        auto r = detail::newton_ascent(G, F, s0, opt.grad_tol, opt.newton_iters, 1e-7);
        if (r.value > best.value) best = r;
        if (r.converged) {
            best = r;
            break;
        }
    }
    rep.starts_used = used;
    if (best.converged && group_op_norm(G, best.theta) < kPi * (1.0 - 1e-7)) {
        DistanceReport out = classify_interior(G, g, best.theta, best.value, opt);
        out.starts_used = used;
        return out;
    }

    // Phase 2: log-det barrier path toward a boundary supremum.
    Vec theta = best.theta.size() ? best.theta : Vec::Zero(G.m());
    if (!std::isfinite(best.value)) theta = Vec::Zero(G.m());
    // pull back inside so the barrier is finite
    {
        const double nrm = group_op_norm(G, theta);
        if (nrm > kPi * (1.0 - 1e-3)) theta *= kPi * (1.0 - 1e-3) / nrm;
    }
    const double scale = 1.0 + g.x.squaredNorm() + 4.0 * kPi * g.t.norm();
    double mu = 1e-1 * scale;
    bool conv_all = true;
    for (; mu >= 1e-14 * scale; mu *= 0.1) {
        auto Fb = [&](const Vec& th, Vec* gr) {
            if (group_op_norm(G, th) >= kPi) return kNegInf;
            Vec g1;
            const double v1 = phi_interior(G, g, th, gr ? &g1 : nullptr);
            if (!std::isfinite(v1)) return kNegInf;
            const Spectrum sp = spectrum(G.utuple, th);
            Vec g2;
            const double v2 = detail::logdet_barrier(G.utuple, sp, gr ? &g2 : nullptr);
            if (!std::isfinite(v2)) return kNegInf;
            if (gr) *gr = g1 + mu * g2;
            return v1 + mu * v2;
        };
        auto r = detail::newton_ascent(G, Fb, theta, 1e-9, opt.barrier_iters);
        if (r.theta.size() == 0) break;
        theta = r.theta;
        conv_all = conv_all && r.converged;
    }
    const double v_in = phi_interior(G, g, theta, nullptr);
    const double nrm = group_op_norm(G, theta);

    // interior maximizer that phase 1 failed to pin down: polish and classify
    if (nrm < kPi * (1.0 - 1e-6)) {
        auto r = detail::newton_ascent(G, F, theta, opt.grad_tol, opt.newton_iters);
        if (r.theta.size() && r.converged) {
            DistanceReport out = classify_interior(G, g, r.theta, r.value, opt);
            out.starts_used = used;
            return out;
        }
    }
    const Vec theta_b = theta * (kPi / nrm);
    const double v_b = phi_boundary(G, g, theta_b, opt.phi);
    rep.classification = PointClass::Boundary;
    if (std::isfinite(v_b) && v_b >= v_in) {
        rep.dsq = v_b;
        rep.maximizer = theta_b;
    } else {
        rep.dsq = v_in;
        rep.maximizer = theta;
    }
    rep.converged = conv_all;
    const GMStatus st = gm_status(G);
    rep.lower_bound_only = !(st == GMStatus::Certified || st == GMStatus::Evidence);
    return rep;
}

}  // namespace carnot
