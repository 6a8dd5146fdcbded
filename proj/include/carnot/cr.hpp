#pragma once

#include "carnot/closed_forms.hpp"
#include "carnot/geodesics.hpp"
#include "carnot/group.hpp"
#include "carnot/reference.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace carnot {

using cplx = std::complex<double>;

inline cplx cr_z(const Vec& x, int j) { return {x(2 * j), x(2 * j + 1)}; }

inline PhiEval cr_phi(const Mat& A, const Vec& z, const Vec& t, const Vec& tau, bool want_derivatives = true) {
    if (z.size() != 2 * A.cols() || t.size() != A.rows() || tau.size() != A.rows())
        throw ValidationError("cr_phi: shape mismatch");
    const Vec c = A.transpose() * tau;
    const double cmax = c.cwiseAbs().maxCoeff();
    if (cmax > kPi + 1e-12) throw DomainError("cr_phi: tau lies outside the closed reference set");
    PhiEval out;
    if (cmax >= kPi - 1e-12) {
        out.on_boundary = true;
        const StepTwoGroup G = make_cr(A);
        out.value = phi_boundary(G, {z, t}, tau);
        out.finite = std::isfinite(out.value);
        return out;
    }
    Mat H;
    const auto vg = closed::cr_phi(A, z, t, tau, want_derivatives ? &H : nullptr);
    out.value = vg.value;
    if (want_derivatives) {
        out.gradient = vg.grad;
        out.hessian = H;
    }
    return out;
}

namespace detail {

// Lawson-Hanson nonnegative least squares: min |M v - r| over v >= 0.
inline Vec nnls(const Mat& M, const Vec& r, int maxit = 500) {
    const int n = static_cast<int>(M.cols());
    Vec v = Vec::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-13 * (1.0 + M.norm() * r.norm());
    for (int outer = 0; outer < maxit; ++outer) {
        const Vec w = M.transpose() * (r - M * v);
        int jmax = -1;
        double wmax = tol;
        for (int j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
                wmax = w(j);
                jmax = j;
            }
        if (jmax < 0) break;
        passive[static_cast<std::size_t>(jmax)] = true;
        for (int inner = 0; inner < maxit; ++inner) {
            std::vector<int> P;
            for (int j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)]) P.push_back(j);
            Mat MP(M.rows(), static_cast<int>(P.size()));
            for (std::size_t i = 0; i < P.size(); ++i) MP.col(static_cast<int>(i)) = M.col(P[i]);
            const Vec sP = MP.completeOrthogonalDecomposition().solve(r);
            Vec s = Vec::Zero(n);
            for (std::size_t i = 0; i < P.size(); ++i) s(P[i]) = sP(static_cast<int>(i));
            bool ok = true;
            for (int j : P)
                if (s(j) <= 0.0) ok = false;
            if (ok) {
                v = s;
                break;
            }
            double alpha = 1.0;
            for (int j : P)
                if (s(j) <= 0.0) alpha = std::min(alpha, v(j) / (v(j) - s(j)));
            v += alpha * (s - v);
            for (int j : P)
                if (v(j) <= 1e-15) {
                    v(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
        }
    }
    return v;
}

inline Mat null_space(const Mat& M, double rel = 1e-10) {
    if (M.cols() == 0) return Mat(0, 0);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > rel * std::max(smax, 1e-300)) ++rank;
    return svd.matrixV().rightCols(M.cols() - rank);
}

}  // namespace detail

struct CRBoundaryFamily {
    std::vector<int> J;         // indices with |a_j . theta| = pi
    Vec theta;
    std::vector<cplx> p_fixed;  // p_j for j not in J (zero entries for j in J)
    Vec moduli;                 // particular |p_j|^2, j in J, in the order of J
    Mat moduli_nullspace;       // columns: directions keeping the linear system satisfied
    int phase_count = 0;        // |J| free phases
    double dsq = 0.0;
    double residual = 0.0;
    std::vector<Covector> samples;  // verified representatives
};

// Moduli of the boundary components of every shortest geodesic, given a boundary maximizer.
inline CRBoundaryFamily cr_boundary_shortest(const Mat& A, const Vec& z, const Vec& t, const Vec& theta_bd) {
    const int n = static_cast<int>(A.cols());
    if (z.norm() == 0.0 && t.norm() == 0.0) throw ValidationError("cr_boundary_shortest: target is the origin");
    const Vec c = A.transpose() * theta_bd;
    CRBoundaryFamily fam;
    fam.theta = theta_bd;
    Vec rhs = 4.0 * t;
    fam.p_fixed.assign(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    for (int j = 0; j < n; ++j) {
        if (std::abs(std::abs(c(j)) - kPi) <= 1e-9 * kPi) {
            fam.J.push_back(j);
            continue;
        }
        const cplx zj = cr_z(z, j);
        rhs -= special::mu(c(j)) * std::norm(zj) * A.col(j);
        // p_j = 2 i c / (1 - e^{-2ic}) z_j
        const cplx denom = 1.0 - std::exp(cplx(0.0, -2.0 * c(j)));
        fam.p_fixed[static_cast<std::size_t>(j)] =
            (c(j) == 0.0) ? zj : cplx(0.0, 2.0 * c(j)) / denom * zj;
    }
    if (fam.J.empty()) throw ValidationError("cr_boundary_shortest: theta is not on the boundary");
    for (int j : fam.J)
        if (std::abs(cr_z(z, j)) > 1e-10 * (1.0 + z.norm()))
            throw SolverError("cr_boundary_shortest: boundary block carries a nonzero z component");
    const int nJ = static_cast<int>(fam.J.size());
    Mat M(A.rows(), nJ);
    for (int i = 0; i < nJ; ++i) M.col(i) = A.col(fam.J[static_cast<std::size_t>(i)]) / c(fam.J[static_cast<std::size_t>(i)]);
    fam.moduli = detail::nnls(M, rhs);
    fam.residual = (M * fam.moduli - rhs).norm();
    if (fam.residual > 1e-9 * (1.0 + rhs.norm()))
        throw SolverError("cr_boundary_shortest: moduli system is infeasible; theta is not a maximizer");
    fam.moduli_nullspace = detail::null_space(M);
    fam.phase_count = nJ;
    const StepTwoGroup G = make_cr(A);
    const GroupElement g{z, t};
    fam.dsq = phi_boundary(G, g, theta_bd);
    // one representative per phase choice 0 and pi/2
    for (double phase : {0.0, kPi / 2}) {
        Vec p(2 * n);
        for (int j = 0; j < n; ++j) {
            const cplx pj = fam.p_fixed[static_cast<std::size_t>(j)];
            p(2 * j) = pj.real();
            p(2 * j + 1) = pj.imag();
        }
        for (int i = 0; i < nJ; ++i) {
            const int j = fam.J[static_cast<std::size_t>(i)];
            const double r = std::sqrt(std::max(0.0, fam.moduli(i)));
            p(2 * j) = r * std::cos(phase * (i + 1));
            p(2 * j + 1) = r * std::sin(phase * (i + 1));
        }
        Covector cv{p, theta_bd};
        const GroupElement e = exp_map(G, cv);
        const double scale = 1.0 + z.norm() + t.norm();
        if (endpoint_distance(e, g) > 1e-8 * scale || std::abs(p.squaredNorm() - fam.dsq) > 1e-8 * (1.0 + fam.dsq))
            throw SolverError("cr_boundary_shortest: representative covector failed verification");
        fam.samples.push_back(cv);
    }
    return fam;
}

namespace detail {

// Maximize phi on the face {a_j . theta = s_j pi, j in J} starting from theta.
inline Vec cr_face_polish(const StepTwoGroup& G, const GroupElement& g, const Vec& theta,
                          const std::vector<int>& J) {
    const Mat& A = G.data;
    const int m = static_cast<int>(A.rows());
    const Vec c = A.transpose() * theta;
    Mat AJ(static_cast<int>(J.size()), m);
    Vec b(static_cast<int>(J.size()));
    for (std::size_t i = 0; i < J.size(); ++i) {
        AJ.row(static_cast<int>(i)) = A.col(J[i]).transpose();
        b(static_cast<int>(i)) = (c(J[i]) > 0 ? 1.0 : -1.0) * kPi;
    }
    const auto cod = AJ.completeOrthogonalDecomposition();
    // closest point of the face to theta
    const Vec theta0 = theta + cod.solve(Vec(b - AJ * theta));
    const Mat N = null_space(AJ);
    if (N.cols() == 0) return theta0;
    std::vector<bool> inJ(static_cast<std::size_t>(A.cols()), false);
    for (int j : J) inJ[static_cast<std::size_t>(j)] = true;
    // phi on the face ignores the J blocks (z_j = 0 there)
    auto Fface = [&](const Vec& y, Vec* gr, Mat* H) {
        const Vec th = theta0 + N * y;
        const Vec cc = A.transpose() * th;
        double v = 4.0 * g.t.dot(th);
        Vec gfull = 4.0 * g.t;
        Mat Hf = Mat::Zero(m, m);
        for (int j = 0; j < A.cols(); ++j) {
            if (inJ[static_cast<std::size_t>(j)]) continue;
            if (std::abs(cc(j)) >= kPi) return kNegInf;
            const double z2 = std::norm(cr_z(g.x, j));
            if (z2 == 0.0) continue;
            v += z2 * special::scot(cc(j));
            gfull -= special::mu(cc(j)) * z2 * A.col(j);
            Hf -= special::dmu(cc(j)) * z2 * A.col(j) * A.col(j).transpose();
        }
        if (gr) *gr = N.transpose() * gfull;
        if (H) *H = N.transpose() * Hf * N;
        return v;
    };
    Vec y = N.transpose() * (theta - theta0);
    Vec gy;
    Mat Hy;
    double v = Fface(y, &gy, &Hy);
    if (!std::isfinite(v)) {
        y.setZero();
        v = Fface(y, &gy, &Hy);
        if (!std::isfinite(v)) return theta0;
    }
    for (int it = 0; it < 100; ++it) {
        if (gy.norm() <= 1e-13 * (1.0 + std::abs(v))) break;
        Eigen::SelfAdjointEigenSolver<Mat> es(Hy);
        Vec ev = es.eigenvalues();
        const double hs = std::max(1.0, ev.cwiseAbs().maxCoeff());
        for (int i = 0; i < ev.size(); ++i) ev(i) = std::min(ev(i), -1e-12 * hs);
        const Vec d = -(es.eigenvectors() * (es.eigenvectors().transpose() * gy).cwiseQuotient(ev));
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
            const Vec yt = y + alpha * d;
            // keep every constraint outside J feasible
            const Vec cc = A.transpose() * (theta0 + N * yt);
            bool feas = true;
            for (int j = 0; j < A.cols(); ++j)
                if (!inJ[static_cast<std::size_t>(j)] && std::abs(cc(j)) > kPi) feas = false;
            if (!feas) continue;
            Vec gt;
            Mat Ht;
            const double vt = Fface(yt, &gt, &Ht);
            if (!std::isfinite(vt)) continue;
            if (vt >= v + 1e-4 * alpha * gy.dot(d) || (vt >= v && gt.norm() < gy.norm())) {
                y = yt;
                v = vt;
                gy = gt;
                Hy = Ht;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return theta0 + N * y;
}

}  // namespace detail

// Distance and classification on a CR group.
inline DistanceReport cr_classify_dist(const StepTwoGroup& G, const GroupElement& g) {
    check_point(G, g);
    if (G.family != Family::CR) throw ValidationError("cr_classify_dist: group is not of CR type");
    const Mat& A = G.data;
    const int m = G.m(), n = static_cast<int>(A.cols());
    DistanceReport rep;
    rep.method = "closed_form";
    rep.maximizer = Vec::Zero(m);
    if (g.x.norm() == 0.0 && g.t.norm() == 0.0) {
        rep.classification = PointClass::Origin;
        return rep;
    }
    const double zn = g.x.norm();
    std::vector<int> S;
    for (int j = 0; j < n; ++j)
        if (std::abs(cr_z(g.x, j)) > 1e-12 * zn) S.push_back(j);
    Mat AS(m, static_cast<int>(S.size()));
    for (std::size_t i = 0; i < S.size(); ++i) AS.col(static_cast<int>(i)) = A.col(S[i]);
    const bool full_span = !S.empty() && detail::numeric_rank(AS) == m;

    auto F = [&](const Vec& th, Vec* gr) { return phi_interior(G, g, th, gr); };
    auto r = detail::newton_ascent(G, F, Vec::Zero(m), 1e-12, 200, 1e-9);
    if (r.converged && r.theta.size() && group_op_norm(G, r.theta) < kPi * (1.0 - 1e-9)) {
        DistanceReport out = classify_interior(G, g, r.theta, r.value, MaximizeOptions{});
        out.classification = full_span ? PointClass::M : PointClass::M2tilde;
        out.method = "closed_form";
        return out;
    }

    // boundary supremum: barrier on the polytope, then identify the active face and polish on it
    Vec theta = r.theta.size() ? r.theta : Vec::Zero(m);
    {
        const double nrm = group_op_norm(G, theta);
        if (nrm > kPi * (1.0 - 1e-3)) theta *= kPi * (1.0 - 1e-3) / nrm;
    }
    const double scale = 1.0 + g.x.squaredNorm() + 4.0 * kPi * g.t.norm();
    for (double mu = 1e-1 * scale; mu >= 1e-14 * scale; mu *= 0.1) {
        auto Fb = [&](const Vec& th, Vec* gr) {
            const Vec c = A.transpose() * th;
            if (c.cwiseAbs().maxCoeff() >= kPi) return kNegInf;
            Vec g1;
            const double v1 = phi_interior(G, g, th, gr ? &g1 : nullptr);
            double v2 = 0.0;
            Vec g2 = Vec::Zero(m);
            for (int j = 0; j < n; ++j) {
                v2 += std::log(kPi * kPi - c(j) * c(j));
                g2 -= (2.0 * c(j) / (kPi * kPi - c(j) * c(j))) * A.col(j);
            }
            if (gr) *gr = g1 + mu * g2;
            return v1 + mu * v2;
        };
        auto rb = detail::newton_ascent(G, Fb, theta, 1e-10, 100);
        if (rb.theta.size()) theta = rb.theta;
    }
    const Vec c = A.transpose() * theta;
    std::vector<int> J;
    for (int j = 0; j < n; ++j)
        if (kPi - std::abs(c(j)) <= 1e-6 * kPi) J.push_back(j);
    rep.classification = PointClass::Boundary;
    if (J.empty()) {
        // barrier ended in the interior: treat as an interior maximizer
        DistanceReport out = classify_interior(G, g, theta, phi_interior(G, g, theta, nullptr), MaximizeOptions{});
        out.classification = full_span ? PointClass::M : PointClass::M2tilde;
        out.method = "concave_max";
        out.converged = false;
        return out;
    }
    const Vec theta_b = detail::cr_face_polish(G, g, theta, J);
    const double vb = phi_boundary(G, g, theta_b);
    const double vin = phi_interior(G, g, theta, nullptr);
    if (std::isfinite(vb) && vb >= vin - 1e-9 * scale) {
        rep.dsq = vb;
        rep.maximizer = theta_b;
    } else {
        rep.dsq = vin;
        rep.maximizer = theta;
        rep.converged = false;
    }
    try {
        const CRBoundaryFamily fam = cr_boundary_shortest(A, g.x, g.t, rep.maximizer);
        rep.covector = fam.samples.front();
    } catch (const std::exception&) {
        rep.covector.reset();
    }
    return rep;
}

}  // namespace carnot
