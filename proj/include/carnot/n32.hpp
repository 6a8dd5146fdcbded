#pragma once

// Free step-two group with three generators: exact distance, cut locus, shortest geodesics.
// Canonical targets are (e1, (u1, u2, 0) / 4).

#include "carnot/closed_forms.hpp"
#include "carnot/geodesics.hpp"
#include "carnot/group.hpp"
#include "carnot/reference.hpp"
#include "carnot/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace carnot {

inline special::SpecialFns n32_special(double s, bool allow_pole = false) { return special::evaluate(s, allow_pole); }

enum class N32Branch { Plus, Minus4 };

enum class N32Region { Plus, BoundaryCurve, Minus4, Axis, XOnly, TOnly };

inline const char* n32_region_name(N32Region r) {
    switch (r) {
        case N32Region::Plus: return "plus";
        case N32Region::BoundaryCurve: return "boundary_curve";
        case N32Region::Minus4: return "minus4";
        case N32Region::Axis: return "axis";
        case N32Region::XOnly: return "x_only";
        case N32Region::TOnly: return "t_only";
    }
    return "unknown";
}

// u2 on the curve separating the two branches
inline double n32_boundary_u2(double u1) { return 2.0 * std::sqrt(std::abs(u1) / kPi); }

struct RegionPoint {
    double u1 = 0.0, u2 = 0.0;
    N32Region region = N32Region::XOnly;
    double margin = 0.0;  // u2 - 2 sqrt(u1 / pi)
};

inline RegionPoint n32_region(double u1, double u2, double rel_tol = 1e-10) {
    if (!(u1 >= 0.0) || !(u2 >= 0.0) || !std::isfinite(u1) || !std::isfinite(u2))
        throw ValidationError("n32: canonical coordinates must be finite and >= 0");
    RegionPoint p{u1, u2, N32Region::XOnly, u2 - n32_boundary_u2(u1)};
    if (u1 == 0.0 && u2 == 0.0) return p;
    if (u2 == 0.0) {
        p.region = N32Region::Axis;
    } else if (std::abs(p.margin) <= rel_tol * std::max(u2, n32_boundary_u2(u1))) {
        p.region = N32Region::BoundaryCurve;
    } else {
        p.region = p.margin > 0.0 ? N32Region::Plus : N32Region::Minus4;
    }
    return p;
}

// Lambda(v) = v2 [psi'(r)/r v2 v + 2 psi(r) e2]
inline std::array<double, 2> lambda_map(double v1, double v2) {
    const double r = std::hypot(v1, v2);
    if (r > 0.0 && special::detail::kSeriesCut <= r) {
        const double k = std::round(r / kPi);
        if (k >= 1.0 && std::abs(r - k * kPi) <= 1e-13 * r) throw PoleError("lambda_map: |v| is a multiple of pi");
    }
    const double a = special::dpsi_over_s(r) * v2 * v2;
    return {a * v1, v2 * (a + 2.0 * special::psi(r))};
}

inline bool lambda_branch_contains(N32Branch b, double v1, double v2) {
    const double r = std::hypot(v1, v2);
    if (b == N32Branch::Plus) return v2 > 0.0 && r < kPi;
    return v2 < 0.0 && v1 > 0.0 && r > kPi && r < special::vartheta1() && special::K3(v1, v2) < 0.0;
}

// Xi(r, rho) = Lambda(r cos eta, r sin eta) with sin eta = rho sin r.
inline std::array<double, 2> xi_eval(double r, double rho) {
    const double sr = std::sin(r);
    const double hr = special::h(r) / r;
    const double c2 = std::max(0.0, 1.0 - rho * rho * sr * sr);
    const double sinc_minus_cos = r < special::detail::kSeriesCut ? r * r * (1.0 / 3.0 - r * r / 30.0 + r * r * r * r / 840.0)
                                                                : sr / r - std::cos(r);
    return {hr * std::sqrt(c2) * rho * rho, sr * hr * rho * rho * rho + 2.0 * sinc_minus_cos * rho};
}

inline bool xi_domain_contains(double r, double rho, double slack = 0.0) {
    if (!(r > 0.0) || !(rho > 0.0) || !(r < special::vartheta1())) return false;
    const double sr = std::sin(r);
    if (r < kPi) return rho * sr < 1.0 + slack;
    if (r == kPi) return true;
    return rho * rho * special::h(r) + 2.0 * r * r * special::psi(r) < slack * (1.0 + rho * rho);
}

inline std::array<double, 2> xi_map(double r, double rho) {
    if (!xi_domain_contains(r, rho, 1e-12)) throw DomainError("xi_map: (r, rho) lies outside the domain");
    return xi_eval(r, rho);
}

inline double xi_jacobian_fd(double r, double rho, double step = 1e-6) {
    const auto ap = xi_eval(r + step, rho), am = xi_eval(r - step, rho);
    const auto bp = xi_eval(r, rho + step), bm = xi_eval(r, rho - step);
    const double a11 = (ap[0] - am[0]) / (2 * step), a21 = (ap[1] - am[1]) / (2 * step);
    const double a12 = (bp[0] - bm[0]) / (2 * step), a22 = (bp[1] - bm[1]) / (2 * step);
    return a11 * a22 - a12 * a21;
}

namespace detail {

struct Newton2Result {
    double a = 0.0, b = 0.0;
    double residual = 0.0;
    bool ok = false;
};

// Damped Newton for F(a, b) = target, FD Jacobian, iterates kept inside `inside`.
template <class Fn, class Inside>
Newton2Result newton2(Fn F, Inside inside, double a, double b, double ta, double tb, double tol, int maxit = 60) {
    auto res = [&](double x, double y) {
        const auto v = F(x, y);
        return std::array<double, 2>{v[0] - ta, v[1] - tb};
    };
    auto r0 = res(a, b);
    double nr = std::hypot(r0[0], r0[1]);
    for (int it = 0; it < maxit && nr > tol; ++it) {
        const double ha = 1e-7 * std::max(1.0, std::abs(a)), hb = 1e-7 * std::max(1.0, std::abs(b));
        double J[2][2];
        bool fd_ok = true;
        for (int k = 0; k < 2; ++k) {
            const double da = k == 0 ? ha : 0.0, db = k == 1 ? hb : 0.0;
            const bool fwd = inside(a + da, b + db), bwd = inside(a - da, b - db);
            std::array<double, 2> p, m;
            double w;
            if (fwd && bwd) {
                p = F(a + da, b + db);
                m = F(a - da, b - db);
                w = 2.0;
            } else if (fwd) {
                p = F(a + da, b + db);
                m = F(a, b);
                w = 1.0;
            } else if (bwd) {
                p = F(a, b);
                m = F(a - da, b - db);
                w = 1.0;
            } else {
                fd_ok = false;
                break;
            }
            const double h = k == 0 ? ha : hb;
            J[0][k] = (p[0] - m[0]) / (w * h);
            J[1][k] = (p[1] - m[1]) / (w * h);
        }
        if (!fd_ok) break;
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        if (det == 0.0 || !std::isfinite(det)) break;
        const double da = -(J[1][1] * r0[0] - J[0][1] * r0[1]) / det;
        const double db = -(-J[1][0] * r0[0] + J[0][0] * r0[1]) / det;
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
            const double na = a + alpha * da, nb = b + alpha * db;
            if (!inside(na, nb)) continue;
            const auto rt = res(na, nb);
            const double nt = std::hypot(rt[0], rt[1]);
            if (nt < nr) {
                a = na;
                b = nb;
                r0 = rt;
                nr = nt;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return {a, b, nr, nr <= tol};
}

// mu(s) = y on (0, pi): bisection then Newton
inline double mu_inverse(double y) {
    if (!(y > 0.0)) return 0.0;
    double lo = 0.0, hi = kPi;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * kPi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (special::mu(mid) < y ? lo : hi) = mid;
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double d = special::dmu(s);
        if (d > 0.0 && std::isfinite(d)) {
            const double sn = s - (special::mu(s) - y) / d;
            if (sn > 0.0 && sn < kPi) s = sn;
        }
    }
    return s;
}

}  // namespace detail

struct XiInverse {
    double r = 0.0, rho = 0.0;
    double residual = 0.0;
};

namespace detail {

// Track Xi^{-1} along the segment from Xi(pi, rho0) to u.
inline bool xi_track(double rho0, double u1, double u2, double& r_out, double& rho_out) {
    const double scale = 1.0 + std::hypot(u1, u2);
    auto inside = [](double r, double rho) { return xi_domain_contains(r, rho); };
    double r = kPi, rho = rho0;
    const double s1 = kPi * rho0 * rho0, s2 = 2.0 * rho0;
    double lam = 0.0, step = 0.25;
    for (int guard = 0; guard < 4000 && lam < 1.0; ++guard) {
        const double ln = std::min(1.0, lam + step);
        const bool last = ln == 1.0;
        const auto nr = newton2(xi_eval, inside, r, rho, s1 + ln * (u1 - s1), s2 + ln * (u2 - s2),
                                (last ? 1e-12 : 1e-9) * scale, 30);
        if (nr.ok || (last && step < 1e-8 && nr.residual <= 1e-9 * scale)) {
            r = nr.a;
            rho = nr.b;
            lam = ln;
            step = std::min(0.5, step * 1.5);
        } else {
            step *= 0.5;
            if (step < 1e-10) return false;
        }
    }
    if (lam < 1.0) return false;
    r_out = r;
    rho_out = rho;
    return true;
}

}  // namespace detail

// Xi^{-1} by continuation from the line r = pi, where Xi(pi, rho) = (pi rho^2, 2 rho) is explicit.
// Paths: horizontal from (pi rho^2, u2) or vertical from (u1, 2 sqrt(u1 / pi)).
inline XiInverse xi_inverse(double u1, double u2) {
    if (!(u1 > 0.0) || !(u2 > 0.0) || !std::isfinite(u1) || !std::isfinite(u2))
        throw ValidationError("xi_inverse: needs u1 > 0 and u2 > 0");
    const double horiz = 0.5 * u2, vert = std::sqrt(u1 / kPi);
    const bool below = u2 < n32_boundary_u2(u1);
    double r = 0.0, rho = 0.0;
    bool ok = detail::xi_track(below ? vert : horiz, u1, u2, r, rho);
    if (!ok) ok = detail::xi_track(below ? horiz : vert, u1, u2, r, rho);
    if (!ok) throw SolverError("xi_inverse: continuation stalled");
    const auto v = xi_eval(r, rho);
    return {r, rho, std::hypot(v[0] - u1, v[1] - u2)};
}

// d^2 at Xi(r, rho)
inline double xi_dsq(double r, double rho) { return special::ssq_minus_sinsq(r) * rho * rho + 1.0; }

// sin(eta) = rho sin r, kept in [-1, 1]
inline double rho_sin(double rho, double r) { return std::clamp(rho * std::sin(r), -1.0, 1.0); }

struct LambdaInverse {
    double theta1 = 0.0, theta2 = 0.0;
    double residual = 0.0;
};

// Lambda^{-1} on the chosen branch; residual <= 1e-11 (1 + |u|).
inline LambdaInverse lambda_inverse(double u1, double u2, N32Branch branch) {
    if (!std::isfinite(u1) || !std::isfinite(u2)) throw ValidationError("lambda_inverse: non-finite input");
    const double bu = n32_boundary_u2(u1);
    const double scale = 1.0 + std::hypot(u1, u2);
    const double tol = 1e-11 * scale;
    if (branch == N32Branch::Plus) {
        if (!(u2 > bu)) throw DomainError("lambda_inverse: (u1, u2) is outside the plus region");
        if (u1 == 0.0) return {0.0, detail::mu_inverse(u2), 0.0};
        if (u1 < 0.0) {
            LambdaInverse m = lambda_inverse(-u1, u2, branch);
            m.theta1 = -m.theta1;
            return m;
        }
    } else {
        if (!(u1 > 0.0) || !(u2 > 0.0) || !(u2 < bu))
            throw DomainError("lambda_inverse: (u1, u2) is outside the minus4 region");
    }
    // starting point from Xi, then Newton in theta
    const XiInverse xi = xi_inverse(u1, u2);
    const double s_eta = rho_sin(xi.rho, xi.r);
    double t1 = xi.r * std::sqrt(std::max(0.0, 1.0 - s_eta * s_eta));
    double t2 = xi.r * s_eta;
    auto inside = [branch](double a, double b) { return lambda_branch_contains(branch, a, b); };
    auto F = [](double a, double b) { return lambda_map(a, b); };
    if (!inside(t1, t2)) {
        // nudge off the edge of the branch
        const double r = std::hypot(t1, t2);
        if (branch == N32Branch::Plus) {
            t2 = std::max(t2, 1e-300);
            if (r >= kPi) {
                t1 *= (kPi * (1 - 1e-14)) / r;
                t2 *= (kPi * (1 - 1e-14)) / r;
            }
        }
    }
    if (!inside(t1, t2)) {
        const auto v = lambda_map(t1, t2);
        const double res = std::hypot(v[0] - u1, v[1] - u2);
        if (res <= tol) return {t1, t2, res};
        throw SolverError("lambda_inverse: start point left the branch");
    }
    const auto nr = detail::newton2(F, inside, t1, t2, u1, u2, tol, 60);
    if (!nr.ok) throw SolverError("lambda_inverse: Newton failed to reach the residual tolerance");
    return {nr.a, nr.b, nr.residual};
}

// Root of -2 psi(r) sqrt(r^2 + 2 r psi / psi') = beta on (pi, vartheta_1).
inline double dcutp_lhs(double r) {
    const double ps = special::psi(r), dp = special::dpsi(r);
    return -2.0 * ps * std::sqrt(std::max(0.0, r * r + 2.0 * r * ps / dp));
}

inline double dcutp_root(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("dcutp_root: beta must be finite and > 0");
    const double v1 = special::vartheta1();
    double lo = kPi + 1e-6, hi = v1 - 1e-6;
    // lhs decreases from +inf at pi to 0 at vartheta_1
    while (dcutp_lhs(lo) < beta) {
        const double d = (lo - kPi) * 0.5;
        if (d < 1e-15 * kPi) throw SolverError("dcutp_root: beta is too large to bracket");
        lo = kPi + d;
    }
    while (dcutp_lhs(hi) > beta) {
        const double d = (v1 - hi) * 0.5;
        if (d < 1e-15 * v1) throw SolverError("dcutp_root: beta is too small to bracket");
        hi = v1 - d;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-6 * (hi - kPi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (dcutp_lhs(mid) > beta ? lo : hi) = mid;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double hstep = 1e-7 * (r - kPi);
        const double d = (dcutp_lhs(r + hstep) - dcutp_lhs(r - hstep)) / (2 * hstep);
        const double g = dcutp_lhs(r) - beta;
        if (!(d < 0.0)) break;
        double rn = r - g / d;
        if (!(rn > lo && rn < hi)) rn = 0.5 * (r + (g > 0 ? hi : lo));
        const double dr = rn - r;
        r = rn;
        if (std::abs(dr) <= 1e-12 * (r - kPi)) break;
    }
    return r;
}

struct N32Canonical {
    double dsq = 1.0;
    RegionPoint region;
    double theta1 = 0.0, theta2 = 0.0;  // geodesic parameter in the canonical frame
    double r = 0.0, rho = 0.0;          // Xi coordinates when defined
    double residual = 0.0;
};

inline N32Canonical n32_canonical(double u1, double u2) {
    N32Canonical out;
    out.region = n32_region(u1, u2);
    switch (out.region.region) {
        case N32Region::XOnly:
        case N32Region::TOnly:
            out.dsq = 1.0;
            break;
        case N32Region::BoundaryCurve:
            out.dsq = 1.0 + kPi * u1;
            out.theta1 = kPi;
            out.r = kPi;
            out.rho = 0.5 * u2;
            break;
        case N32Region::Axis: {
            const double r = dcutp_root(u1);
            out.dsq = special::phi3(r) * u1 + 1.0;
            const double q = 2.0 * r * special::psi(r) / special::dpsi(r);
            out.theta1 = std::sqrt(r * r + q);
            out.theta2 = -std::sqrt(-q);
            out.r = r;
            out.rho = out.theta2 / (r * std::sin(r));
            break;
        }
        case N32Region::Plus: {
            const LambdaInverse li = lambda_inverse(u1, u2, N32Branch::Plus);
            const double r = std::hypot(li.theta1, li.theta2);
            const double sn = std::sin(r);
            out.theta1 = li.theta1;
            out.theta2 = li.theta2;
            out.residual = li.residual;
            out.r = r;
            out.rho = li.theta2 / r / sn;
            out.dsq = li.theta1 * li.theta1 / (r * r) + (li.theta2 / sn) * (li.theta2 / sn);
            break;
        }
        case N32Region::Minus4: {
            const LambdaInverse li = lambda_inverse(u1, u2, N32Branch::Minus4);
            const double r = std::hypot(li.theta1, li.theta2);
            out.theta1 = li.theta1;
            out.theta2 = li.theta2;
            out.residual = li.residual;
            out.r = r;
            out.rho = li.theta2 / r / std::sin(r);
            out.dsq = special::phi3(r) * std::sqrt(u1 * (u1 + u2 * li.theta2 / li.theta1)) + 1.0;
            break;
        }
    }
    return out;
}

inline double n32_distance_canonical(double u1, double u2) { return n32_canonical(u1, u2).dsq; }

// w = U(theta)/sin U(theta) e^{-U~(theta)} e1
inline Vec n32_initial_velocity(const Vec& theta, const Vec& target_x) {
    const double r = theta.norm();
    if (r == 0.0) return target_x;
    const Vec th = theta / r;
    const Vec v = target_x;
    const Vec rot = std::cos(r) * v - std::sin(r) * closed::cross(th, v) + (1.0 - std::cos(r)) * th.dot(v) * th;
    const Vec par = th.dot(rot) * th;
    return par + (rot - par) / fn::sinc(r);
}

struct N32Frame {
    Mat E;               // orthonormal columns, det +1
    double R = 0.0;      // |x|
    double t1 = 0.0, t2 = 0.0;
};

// E e1 = x/|x| and t in span{E e1, E e2} with nonnegative second coordinate.
inline N32Frame n32_frame(const Vec& x, const Vec& t) {
    N32Frame f;
    f.R = x.norm();
    Vec e1 = x / f.R;
    f.t1 = t.dot(e1);
    Vec perp = t - f.t1 * e1;
    f.t2 = perp.norm();
    Vec e2;
    if (f.t2 > 1e-300) {
        e2 = perp / f.t2;
    } else {
        int k = 0;
        e1.cwiseAbs().minCoeff(&k);
        Vec a = Vec::Zero(3);
        a(k) = 1.0;
        e2 = (a - a.dot(e1) * e1).normalized();
    }
    f.E.resize(3, 3);
    f.E.col(0) = e1;
    f.E.col(1) = e2;
    f.E.col(2) = closed::cross(e1, e2);
    return f;
}

inline void n32_check_point(const Vec& x, const Vec& t) {
    if (x.size() != 3 || t.size() != 3) throw ValidationError("n32: points live in R^3 x R^3");
    if (!x.allFinite() || !t.allFinite()) throw ValidationError("n32: non-finite coordinates");
}

inline double n32_distance(const Vec& x, const Vec& t) {
    n32_check_point(x, t);
    const double xn = x.norm(), tn = t.norm();
    if (xn == 0.0) return 4.0 * kPi * tn;
    if (tn == 0.0) return xn * xn;
    const N32Frame f = n32_frame(x, t);
    const double R2 = f.R * f.R;
    return R2 * n32_distance_canonical(4.0 * std::abs(f.t1) / R2, 4.0 * f.t2 / R2);
}

struct N32CutClass {
    bool in_cut = false;
    std::string kind;  // "abnormal-axis", "classical" or "" when not in the cut locus
};

inline N32CutClass n32_cut_classify(const Vec& x, const Vec& t) {
    n32_check_point(x, t);
    N32CutClass out;
    out.in_cut = closed::cross(x, t).norm() <= 1e-10 * (1.0 + x.norm() * t.norm());
    if (out.in_cut) out.kind = t.norm() == 0.0 ? "abnormal-axis" : "classical";
    return out;
}

// Circle family of shortest geodesics to a point with x parallel to t.
struct N32CutFamily {
    std::string kind;  // "abnormal-axis", "t-axis", "parallel"
    double dsq = 0.0;
    double r = 0.0;  // |theta| along the family
    Mat E;           // frame rotation
    double scale = 1.0;
    bool flip = false;  // canonical target has t1 < 0
    Vec theta_base;     // canonical theta at sigma = 0
    Vec target_x, target_t;
    std::vector<Covector> samples;
    double max_residual = 0.0;

    // canonical (zeta, theta) at sigma, mapped to the original frame
    Covector at(double sigma) const {
        if (kind == "abnormal-axis") return {target_x, Vec::Zero(3)};
        Vec th(3), w(3);
        if (kind == "t-axis") {
            th << kPi, 0.0, 0.0;
            w << 0.0, -std::cos(sigma), -std::sin(sigma);
            w *= 2.0 * std::sqrt(kPi);
        } else {
            const double a = std::hypot(theta_base(1), theta_base(2));
            th << theta_base(0), a * std::cos(sigma), a * std::sin(sigma);
            w = n32_initial_velocity(th, Vec::Unit(3, 0));
            if (flip) {
                // (x, t) -> (x, -t): zeta -> e^{2U~(theta)} zeta, theta -> -theta
                const Vec thh = th / th.norm();
                const double ang = 2.0 * th.norm();
                w = std::cos(ang) * w + std::sin(ang) * closed::cross(thh, w) + (1.0 - std::cos(ang)) * thh.dot(w) * thh;
                th = -th;
            }
        }
        return {scale * (E * w), E * th};
    }
};

inline N32CutFamily n32_shortest_at_cut(const Vec& x, const Vec& t, int samples = 16) {
    n32_check_point(x, t);
    const N32CutClass cc = n32_cut_classify(x, t);
    if (!cc.in_cut) throw ValidationError("n32_shortest_at_cut: x and t are linearly independent");
    if (x.norm() == 0.0 && t.norm() == 0.0) throw ValidationError("n32_shortest_at_cut: target is the origin");
    N32CutFamily fam;
    fam.target_x = x;
    fam.target_t = t;
    if (t.norm() == 0.0) {
        fam.kind = "abnormal-axis";
        fam.dsq = x.squaredNorm();
        fam.samples.push_back(fam.at(0.0));
    } else if (x.norm() == 0.0) {
        fam.kind = "t-axis";
        fam.r = kPi;
        fam.dsq = 4.0 * kPi * t.norm();
        fam.scale = std::sqrt(t.norm());
        fam.E = n32_frame(t, Vec::Zero(3)).E;
    } else {
        fam.kind = "parallel";
        const N32Frame f = n32_frame(x, Vec::Zero(3));
        fam.E = f.E;
        fam.scale = f.R;
        const double lam = t.dot(x) / x.squaredNorm();
        fam.flip = lam < 0.0;
        const double beta = 4.0 * std::abs(lam) / f.R;
        const double r = dcutp_root(beta);
        const double q = 2.0 * r * special::psi(r) / special::dpsi(r);
        fam.r = r;
        fam.theta_base = Vec(3);
        fam.theta_base << std::sqrt(r * r + q), std::sqrt(-q), 0.0;
        fam.dsq = f.R * f.R * (special::phi3(r) * beta + 1.0);
    }
    if (fam.kind != "abnormal-axis") {
        const StepTwoGroup G = make_n32();
        const GroupElement target{x, t};
        const double sc = 1.0 + x.norm() + t.norm();
        for (int i = 0; i < samples; ++i) {
            const Covector c = fam.at(2.0 * kPi * i / samples);
            const double res = endpoint_distance(exp_map(G, c), target);
            fam.max_residual = std::max(fam.max_residual, res);
            if (res > 1e-8 * sc || std::abs(c.zeta.squaredNorm() - fam.dsq) > 1e-8 * (1.0 + fam.dsq))
                throw SolverError("n32_shortest_at_cut: sampled geodesic failed verification");
            fam.samples.push_back(c);
        }
    }
    return fam;
}

inline bool n32_bad_set_check(double u1, double u2) {
    if (!(u2 > 0.0)) return false;
    const double lhs = 16.0 * u1 * u1;
    const double k0 = std::round(4.0 * std::abs(u1) / (kPi * u2 * u2));
    for (double k = std::max(1.0, k0 - 1.0); k <= k0 + 1.0; k += 1.0)
        if (std::abs(lhs - k * k * kPi * kPi * u2 * u2 * u2 * u2) <= 1e-9 * (1.0 + u1 * u1)) return true;
    return false;
}

// Distance report with covector and classification.
inline DistanceReport n32_report(const GroupElement& g) {
    n32_check_point(g.x, g.t);
    DistanceReport rep;
    rep.method = "closed_form";
    rep.maximizer = Vec::Zero(3);
    const double xn = g.x.norm(), tn = g.t.norm();
    if (xn == 0.0 && tn == 0.0) {
        rep.classification = PointClass::Origin;
        return rep;
    }
    const N32CutClass cc = n32_cut_classify(g.x, g.t);
    if (cc.in_cut) {
        const N32CutFamily fam = n32_shortest_at_cut(g.x, g.t, 4);
        rep.dsq = fam.dsq;
        rep.classification = tn == 0.0 ? PointClass::M2tilde : PointClass::Cut;
        rep.covector = fam.samples.front();
        if (fam.kind == "t-axis") rep.maximizer = rep.covector->theta;
        return rep;
    }
    const N32Frame f = n32_frame(g.x, g.t);
    const double R2 = f.R * f.R;
    const N32Canonical can = n32_canonical(4.0 * std::abs(f.t1) / R2, 4.0 * f.t2 / R2);
    rep.dsq = R2 * can.dsq;
    Vec th(3);
    th << (f.t1 < 0.0 ? -can.theta1 : can.theta1), can.theta2, 0.0;
    Vec w(3);
    if (can.region.region == N32Region::BoundaryCurve) {
        w << 1.0, (f.t1 < 0.0 ? -1.0 : 1.0) * std::sqrt(kPi * can.region.u1), 0.0;
        rep.classification = PointClass::Boundary;
    } else {
        w = n32_initial_velocity(th, Vec::Unit(3, 0));
        rep.classification = can.region.region == N32Region::Plus ? PointClass::M : PointClass::SmoothNonReference;
    }
    Covector c{f.R * (f.E * w), f.E * th};
    const StepTwoGroup G = make_n32();
    const double sc = 1.0 + xn + tn;
    if (endpoint_distance(exp_map(G, c), g) <= 1e-8 * sc) {
        rep.covector = c;
        if (rep.classification != PointClass::SmoothNonReference) rep.maximizer = c.theta;
    } else {
        rep.converged = false;
    }
    return rep;
}

// Curves bounding the Xi domain: rho = 1/sin r on (0, pi) and rho = sqrt(-2 r^2 psi / h) on (pi, vartheta_1).
struct CurvePoint {
    double r, rho;
    int curve_id;
};

inline std::vector<CurvePoint> region_boundary_curves(int samples = 200, double rho_max = 10.0) {
    if (samples < 2) throw ValidationError("region_boundary_curves: need at least two samples");
    std::vector<CurvePoint> out;
    const double v1 = special::vartheta1();
    for (int i = 1; i < samples; ++i) {
        const double r = kPi * i / samples;
        const double rho = 1.0 / std::sin(r);
        if (rho <= rho_max) out.push_back({r, rho, 1});
    }
    for (int i = 1; i < samples; ++i) {
        const double r = kPi + (v1 - kPi) * i / samples;
        const double rho = std::sqrt(-2.0 * r * r * special::psi(r) / special::h(r));
        if (rho <= rho_max) out.push_back({r, rho, 2});
    }
    return out;
}

}  // namespace carnot
