#pragma once

// Family dispatch for distance reports, plus the semiconcavity probe.

#include "carnot/cr.hpp"
#include "carnot/ktype.hpp"
#include "carnot/n32.hpp"
#include "carnot/reference.hpp"

#include <vector>

namespace carnot {

namespace detail {

// Cut > Boundary > SmoothNonReference > M2tilde > M; an Origin factor degenerates the product.
inline int class_rank(PointClass c) {
    switch (c) {
        case PointClass::M: return 0;
        case PointClass::Origin: return 1;
        case PointClass::M2tilde: return 1;
        case PointClass::SmoothNonReference: return 2;
        case PointClass::Boundary: return 3;
        case PointClass::Cut: return 4;
    }
    return 0;
}

}  // namespace detail

inline DistanceReport distance(const StepTwoGroup& G, const GroupElement& g, const MaximizeOptions& opt = {});

inline DistanceReport product_distance(const StepTwoGroup& G, const GroupElement& g, const MaximizeOptions& opt) {
    const StepTwoGroup& a = *G.parts[0];
    const StepTwoGroup& b = *G.parts[1];
    const GroupElement ga{g.x.head(a.q()), g.t.head(a.m())};
    const GroupElement gb{g.x.tail(b.q()), g.t.tail(b.m())};
    const DistanceReport ra = distance(a, ga, opt), rb = distance(b, gb, opt);
    DistanceReport rep;
    rep.dsq = ra.dsq + rb.dsq;
    rep.maximizer = Vec(G.m());
    rep.maximizer << (ra.maximizer.size() ? ra.maximizer : Vec::Zero(a.m())),
        (rb.maximizer.size() ? rb.maximizer : Vec::Zero(b.m()));
    const bool oa = ra.classification == PointClass::Origin, ob = rb.classification == PointClass::Origin;
    if (oa && ob) {
        rep.classification = PointClass::Origin;
    } else {
        const PointClass ca = oa ? PointClass::M2tilde : ra.classification;
        const PointClass cb = ob ? PointClass::M2tilde : rb.classification;
        rep.classification = detail::class_rank(ca) >= detail::class_rank(cb) ? ca : cb;
    }
    rep.method = (ra.method == "closed_form" && rb.method == "closed_form") ? "closed_form" : "concave_max";
    rep.converged = ra.converged && rb.converged;
    rep.lower_bound_only = ra.lower_bound_only || rb.lower_bound_only;
    rep.hessian_top_eig = std::max(ra.hessian_top_eig, rb.hessian_top_eig);
    rep.starts_used = ra.starts_used + rb.starts_used;
    auto cov = [](const DistanceReport& r, const StepTwoGroup& P) -> std::optional<Covector> {
        if (r.classification == PointClass::Origin) return Covector{Vec::Zero(P.q()), Vec::Zero(P.m())};
        return r.covector;
    };
    const auto ca = cov(ra, a), cb = cov(rb, b);
    if (ca && cb) {
        Covector c{Vec(G.q()), Vec(G.m())};
        c.zeta << ca->zeta, cb->zeta;
        c.theta << ca->theta, cb->theta;
        rep.covector = c;
    }
    return rep;
}

// Squared distance with classification; closed forms where the family has one.
inline DistanceReport distance(const StepTwoGroup& G, const GroupElement& g, const MaximizeOptions& opt) {
    check_point(G, g);
    switch (G.family) {
        case Family::Heisenberg:
        case Family::Ktype: return kdistance(G, g);
        case Family::CR: return cr_classify_dist(G, g);
        case Family::N32: return n32_report(g);
        case Family::DirectProduct: return product_distance(G, g, opt);
        default: return maximize_phi(G, g, opt);
    }
}

inline double distance_sq(const StepTwoGroup& G, const GroupElement& g) { return distance(G, g).dsq; }

// Second difference of d^2 along (0, nu) in the vertical layer.
struct SemiconcavityProbe {
    double d0sq = 0.0;
    std::vector<double> hs, delta, ratio;  // ratio = delta / h
};

inline SemiconcavityProbe semiconcavity_probe(const StepTwoGroup& G, const GroupElement& g, const Vec& nu,
                                              const std::vector<double>& hs) {
    check_point(G, g);
    if (nu.size() != G.m() || !(nu.norm() > 0.0)) throw ValidationError("semiconcavity_probe: nu must be a nonzero vector in R^m");
    const Vec u = nu / nu.norm();
    SemiconcavityProbe out;
    out.d0sq = distance(G, g).dsq;
    for (double h : hs) {
        if (!(h > 0.0)) throw ValidationError("semiconcavity_probe: step sizes must be > 0");
        const double dp = distance(G, {g.x, g.t + h * u}).dsq;
        const double dm = distance(G, {g.x, g.t - h * u}).dsq;
        const double d = dp + dm - 2.0 * out.d0sq;
        out.hs.push_back(h);
        out.delta.push_back(d);
        out.ratio.push_back(d / h);
    }
    return out;
}

// Unit direction nu with t . nu = 0 along which phi(g; .) is flat at an interior maximizer.
inline Vec flat_direction(const StepTwoGroup& G, const GroupElement& g, double rel_tol = 1e-7) {
    const DistanceReport rep = distance(G, g);
    if (rep.classification != PointClass::M2tilde) throw ValidationError("flat_direction: point is not a degenerate interior maximum");
    const Vec theta = rep.maximizer.size() ? rep.maximizer : Vec::Zero(G.m());
    const Mat H = phi_hessian(G, g, theta);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const double hs = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<int> idx;
    for (int i = 0; i < H.rows(); ++i)
        if (std::abs(es.eigenvalues()(i)) <= rel_tol * hs) idx.push_back(i);
    if (idx.empty()) throw SolverError("flat_direction: Hessian has no null direction");
    Mat N(H.rows(), static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) N.col(static_cast<int>(i)) = es.eigenvectors().col(idx[i]);
    // component of the null space orthogonal to t
    const double tn = g.t.norm();
    Vec best = N.col(0);
    if (tn > 0.0) {
        const Vec c = N.transpose() * (g.t / tn);
        if (N.cols() > 1) {
            Eigen::JacobiSVD<Mat> svd(c.transpose(), Eigen::ComputeFullV);
            best = N * svd.matrixV().col(N.cols() - 1);
        }
    }
    return best.normalized();
}

}  // namespace carnot
