#pragma once

#include "carnot/geodesics.hpp"
#include "carnot/group.hpp"
#include "carnot/reference.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace carnot {

// TB = (B B^T)^{1/2} and its inverse.
struct KTransform {
    Mat B, TB, TB_inv;

    explicit KTransform(const Mat& b) : B(b) {
        if (detail::numeric_rank(B) < B.rows()) throw ValidationError("ktype: B is rank-deficient");
        Eigen::SelfAdjointEigenSolver<Mat> es(B * B.transpose());
        const Vec ev = es.eigenvalues();
        const Mat& V = es.eigenvectors();
        TB = V * ev.cwiseSqrt().asDiagonal() * V.transpose();
        TB_inv = V * ev.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
    }
};

struct KTransformed {
    Vec T, X, XX;  // T, X_*, X_**
};

inline KTransformed ktransforms(const KTransform& K, const Vec& xs, const Vec& t) {
    if (xs.size() != K.B.cols() || t.size() != K.B.rows()) throw ValidationError("ktransforms: shape mismatch");
    const Vec Bx = K.B * xs;
    KTransformed out;
    out.T = K.TB_inv * t;
    out.X = K.TB_inv * Bx;
    out.XX = xs - K.B.transpose() * (K.B * K.B.transpose()).ldlt().solve(Bx);
    return out;
}

inline KTransformed ktransforms(const Mat& B, const Vec& xs, const Vec& t) { return ktransforms(KTransform(B), xs, t); }

// u / |u|, with 0 at u = 0
inline Vec hat(const Vec& u) {
    const double n = u.norm();
    return n > 0.0 ? Vec(u / n) : Vec::Zero(u.size());
}

struct KCut {
    bool in_cut = false;
    std::optional<double> dsq;
};

// Cut region of points ((0, x_*), t) and the distance there.
inline KCut kdist_cut(const KTransform& K, const Vec& xs, const Vec& t, int k = 1) {
    const KTransformed tr = ktransforms(K, xs, t);
    const Vec Xh = hat(tr.X);
    const Vec Tperp = tr.T - Xh.dot(tr.T) * Xh;
    const double lhs = std::abs(tr.X.dot(tr.T));
    const double rhs = tr.X.squaredNorm() / std::sqrt(k * kPi) * std::sqrt(Tperp.norm());
    KCut out;
    out.in_cut = lhs <= rhs + 1e-12 * (1.0 + rhs);
    if (out.in_cut) out.dsq = xs.squaredNorm() + 4.0 * k * kPi * Tperp.norm();
    return out;
}

inline KCut kdist_cut(const Mat& B, const Vec& xs, const Vec& t) { return kdist_cut(KTransform(B), xs, t); }

struct KInterior {
    Vec theta;
    double dsq = 0.0;
    bool converged = false;
};

// (|B^T th|/sin)^2 x1^2 + |x_*|^2 + ((b/sin b)^2 - 1) (th . B x_*)^2 / b^2
inline double kdist_formula(const Mat& B, const Vec& x, const Vec& theta) {
    const int p0 = static_cast<int>(B.cols());
    const double b = (B.transpose() * theta).norm();
    const double c = theta.dot(B * x.tail(p0));
    const double rs = 1.0 / fn::sinc(b);
    const double ph0 = special::phi0(b);
    const double tail = b > 0.0 ? ph0 / (b * b) * c * c : (1.0 / 3.0) * c * c;
    return rs * rs * x(0) * x(0) + x.tail(p0).squaredNorm() + tail;
}

// Newton on the gradient equation from theta = 0; phi is concave so the damped ascent converges.
inline KInterior kdist_interior(const StepTwoGroup& G, const GroupElement& g) {
    const Mat& B = G.data;
    auto F = [&](const Vec& th, Vec* gr) { return phi_interior(G, g, th, gr); };
    auto r = detail::newton_ascent(G, F, Vec::Zero(G.m()), 1e-12, 200);
    KInterior out;
    out.converged = r.converged && r.theta.size() && group_op_norm(G, r.theta) < kPi;
    if (!out.converged) return out;
    out.theta = r.theta;
    out.dsq = kdist_formula(B, g.x, r.theta);
    if (std::abs(out.dsq - r.value) > 1e-9 * (1.0 + std::abs(r.value))) out.converged = false;
    return out;
}

// Normal geodesics reaching ((0, x_*), t) with |B^T theta| = k pi. Empty when none exists.
inline std::vector<Covector> kbad_geodesics(const StepTwoGroup& G, const Vec& xs, const Vec& t, int k = 1,
                                            int circle_samples = 8) {
    if (!G.is_ktype()) throw ValidationError("kbad_geodesics: group is not of K-type");
    if (k < 1) throw ValidationError("kbad_geodesics: k must be >= 1");
    const Mat& B = G.data;
    const int p0 = static_cast<int>(B.cols());
    const KTransform K(B);
    std::vector<Covector> out;
    Vec target_x(1 + p0);
    target_x << 0.0, xs;
    const GroupElement target{target_x, t};
    if (t.norm() == 0.0) {
        out.push_back({target_x, Vec::Zero(G.m())});
        return out;
    }
    if (!kdist_cut(K, xs, t, k).in_cut) return out;
    const KTransformed tr = ktransforms(K, xs, t);
    const double kpi = k * kPi;
    auto make = [&](double w1, double wt1, const Vec& theta) {
        Vec w(1 + p0);
        w(0) = w1;
        w.tail(p0) = xs + (wt1 / kpi) * (B.transpose() * theta);
        return Covector{w, theta};
    };
    if (tr.X.norm() > 0.0) {
        const Vec Xh = hat(tr.X);
        const Vec Tperp = tr.T - Xh.dot(tr.T) * Xh;
        const double ratio = tr.T.dot(Xh) / tr.X.norm();
        const double wt1 = -2.0 * kpi * ratio;
        const Vec theta = kpi * (K.TB_inv * hat(Tperp));
        const double w1 = std::sqrt(std::max(0.0, 4.0 * kpi * Tperp.norm() - 4.0 * kpi * kpi * ratio * ratio));
        out.push_back(make(w1, wt1, theta));
        if (w1 > 0.0) out.push_back(make(-w1, wt1, theta));
    } else {
        const Vec theta = kpi * (K.TB_inv * hat(tr.T));
        const double rad = std::sqrt(4.0 * kpi * tr.T.norm());
        for (int i = 0; i < circle_samples; ++i) {
            const double s = 2.0 * kPi * i / circle_samples;
            out.push_back(make(rad * std::cos(s), rad * std::sin(s), theta));
        }
    }
    for (const auto& c : out) {
        const GroupElement e = exp_map(G, c);
        if (endpoint_distance(e, target) > 1e-9 * (1.0 + target_x.norm() + t.norm()))
            throw SolverError("kbad_geodesics: endpoint check failed");
    }
    return out;
}

// Distance report on a K-type group.
inline DistanceReport kdistance(const StepTwoGroup& G, const GroupElement& g) {
    check_point(G, g);
    if (!G.is_ktype()) throw ValidationError("kdistance: group is not of K-type");
    DistanceReport rep;
    rep.method = "closed_form";
    rep.maximizer = Vec::Zero(G.m());
    if (g.x.norm() == 0.0 && g.t.norm() == 0.0) {
        rep.classification = PointClass::Origin;
        return rep;
    }
    const Mat& B = G.data;
    const int p0 = static_cast<int>(B.cols());
    const Vec xs = g.x.tail(p0);
    if (g.x(0) == 0.0) {
        const KTransform K(B);
        const KCut cut = kdist_cut(K, xs, g.t);
        if (cut.in_cut) {
            rep.dsq = *cut.dsq;
            if (g.t.norm() == 0.0) {
                rep.classification = PointClass::M2tilde;
                rep.covector = Covector{g.x, Vec::Zero(G.m())};
                return rep;
            }
            rep.classification = PointClass::Boundary;
            const auto fam = kbad_geodesics(G, xs, g.t, 1, 1);
            rep.maximizer = fam.front().theta;
            rep.covector = fam.front();
            return rep;
        }
    }
    const KInterior in = kdist_interior(G, g);
    if (!in.converged) {
        DistanceReport fb = maximize_phi(G, g);
        fb.method = "concave_max";
        return fb;
    }
    DistanceReport out = classify_interior(G, g, in.theta, in.dsq, MaximizeOptions{});
    out.method = "closed_form";
    return out;
}

}  // namespace carnot
