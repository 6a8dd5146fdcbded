#pragma once

#include "carnot/spectral.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace carnot {

enum class Family { Generic, Heisenberg, Ktype, CR, N32, DirectProduct, SACompose, MetivierNonGM };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Generic: return "generic";
        case Family::Heisenberg: return "heisenberg";
        case Family::Ktype: return "ktype";
        case Family::CR: return "cr";
        case Family::N32: return "n32";
        case Family::DirectProduct: return "product";
        case Family::SACompose: return "sa";
        case Family::MetivierNonGM: return "p4";
    }
    return "generic";
}

struct StepTwoGroup {
    SkewTuple utuple;
    Family family = Family::Generic;
    Mat data;    // B for K-type / Heisenberg, A for CR
    int p4N = 0;
    std::vector<std::shared_ptr<const StepTwoGroup>> parts;

    int q() const { return utuple.q(); }
    int m() const { return utuple.m(); }
    // K-type with B = [1] and CR with A = [1] are the same pencil; Heisenberg is handled as K-type.
    bool is_ktype() const { return family == Family::Ktype || family == Family::Heisenberg; }
};

struct GroupElement {
    Vec x;
    Vec t;
};

inline void check_point(const StepTwoGroup& G, const GroupElement& g) {
    if (g.x.size() != G.q() || g.t.size() != G.m())
        throw ValidationError("point has shape (" + std::to_string(g.x.size()) + "," + std::to_string(g.t.size()) +
                              "), group expects (" + std::to_string(G.q()) + "," + std::to_string(G.m()) + ")");
    if (!g.x.allFinite() || !g.t.allFinite()) throw ValidationError("point has non-finite entries");
}

// <U x, x'>_j = <U^(j) x, x'>
inline Vec bracket(const SkewTuple& U, const Vec& x, const Vec& xp) {
    Vec out(U.m());
    for (int j = 0; j < U.m(); ++j) out(j) = (U[j] * x).dot(xp);
    return out;
}

inline GroupElement multiply(const StepTwoGroup& G, const GroupElement& a, const GroupElement& b) {
    return {a.x + b.x, a.t + b.t + 0.5 * bracket(G.utuple, a.x, b.x)};
}

inline GroupElement inverse(const GroupElement& g) { return {-g.x, -g.t}; }

inline GroupElement identity(const StepTwoGroup& G) { return {Vec::Zero(G.q()), Vec::Zero(G.m())}; }

inline GroupElement dilate(const GroupElement& g, double r) {
    if (!(r > 0.0)) throw ValidationError("dilate: r must be > 0");
    return {r * g.x, r * r * g.t};
}

namespace detail {

inline int numeric_rank(const Mat& A, double rel = 1e-10) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& s = svd.singularValues();
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > rel * s(0)) ++r;
    return r;
}

inline Mat block_diag(const Mat& a, const Mat& b) {
    Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

}  // namespace detail

inline StepTwoGroup make_generic(std::vector<Mat> mats) {
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::Generic;
    return G;
}

// Kolmogorov type: q = 1 + p0, m = p1, U^(j) = [[0, b_j^T], [-b_j, 0]] with b_j the j-th row of B.
inline StepTwoGroup make_ktype(const Mat& B) {
    const int p1 = static_cast<int>(B.rows()), p0 = static_cast<int>(B.cols());
    if (p1 < 1 || p0 < p1) throw ValidationError("ktype: B must be p1 x p0 with p0 >= p1 >= 1");
    if (!B.allFinite()) throw ValidationError("ktype: B has non-finite entries");
    if (detail::numeric_rank(B) < p1) throw ValidationError("ktype: B is rank-deficient");
    std::vector<Mat> mats;
    for (int j = 0; j < p1; ++j) {
        Mat u = Mat::Zero(1 + p0, 1 + p0);
        u.block(0, 1, 1, p0) = B.row(j);
        u.block(1, 0, p0, 1) = -B.row(j).transpose();
        mats.push_back(u);
    }
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::Ktype;
    G.data = B;
    return G;
}

inline StepTwoGroup make_heisenberg() {
    StepTwoGroup G = make_ktype(Mat::Identity(1, 1));
    G.family = Family::Heisenberg;
    return G;
}

// Quadratic CR: q = 2n, U^(j) = blockdiag_k A(j,k) [[0,1],[-1,0]].
inline StepTwoGroup make_cr(const Mat& A) {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    if (m < 1 || n < m) throw ValidationError("cr: A must be m x n with n >= m >= 1");
    if (!A.allFinite()) throw ValidationError("cr: A has non-finite entries");
    if (detail::numeric_rank(A) < m) throw ValidationError("cr: A is rank-deficient");
    std::vector<Mat> mats;
    for (int j = 0; j < m; ++j) {
        Mat u = Mat::Zero(2 * n, 2 * n);
        for (int k = 0; k < n; ++k) {
            u(2 * k, 2 * k + 1) = A(j, k);
            u(2 * k + 1, 2 * k) = -A(j, k);
        }
        mats.push_back(u);
    }
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::CR;
    G.data = A;
    return G;
}

// Free step-two group on three generators: Ut(tau) x = tau x x.
inline StepTwoGroup make_n32() {
    std::vector<Mat> mats(3, Mat::Zero(3, 3));
    mats[0](1, 2) = -1;
    mats[0](2, 1) = 1;
    mats[1](0, 2) = 1;
    mats[1](2, 0) = -1;
    mats[2](0, 1) = -1;
    mats[2](1, 0) = 1;
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::N32;
    return G;
}

inline StepTwoGroup make_product(const StepTwoGroup& a, const StepTwoGroup& b) {
    const int q1 = a.q(), q2 = b.q();
    std::vector<Mat> mats;
    for (int j = 0; j < a.m(); ++j) mats.push_back(detail::block_diag(a.utuple[j], Mat::Zero(q2, q2)));
    for (int j = 0; j < b.m(); ++j) mats.push_back(detail::block_diag(Mat::Zero(q1, q1), b.utuple[j]));
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::DirectProduct;
    G.parts = {std::make_shared<const StepTwoGroup>(a), std::make_shared<const StepTwoGroup>(b)};
    return G;
}

inline StepTwoGroup make_sa(const StepTwoGroup& a, const StepTwoGroup& b) {
    if (a.m() != b.m()) throw ValidationError("sa: parts must share the same corank m");
    std::vector<Mat> mats;
    for (int j = 0; j < a.m(); ++j) mats.push_back(detail::block_diag(a.utuple[j], b.utuple[j]));
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::SACompose;
    G.parts = {std::make_shared<const StepTwoGroup>(a), std::make_shared<const StepTwoGroup>(b)};
    return G;
}

// Left multiplication by i, j, k on the quaternions (a + b i + c j + d k).
inline std::vector<Mat> quaternion_units() {
    Mat Li = Mat::Zero(4, 4), Lj = Mat::Zero(4, 4), Lk = Mat::Zero(4, 4);
    Li(0, 1) = -1; Li(1, 0) = 1; Li(2, 3) = -1; Li(3, 2) = 1;
    Lj(0, 2) = -1; Lj(1, 3) = 1; Lj(2, 0) = 1; Lj(3, 1) = -1;
    Lk(0, 3) = -1; Lk(1, 2) = -1; Lk(2, 1) = 1; Lk(3, 0) = 1;
    return {Li, Lj, Lk};
}

// Metivier group G(4N+4, 3) whose pencil is diag(H-type(tau/2), X(tau)).
inline StepTwoGroup make_p4(int N) {
    if (N < 0) throw ValidationError("p4: N must be >= 0");
    const auto L = quaternion_units();
    std::vector<Mat> X(3, Mat::Zero(4, 4));
    X[0](0, 1) = 0.5; X[0](1, 0) = -0.5; X[0](2, 3) = -1; X[0](3, 2) = 1;
    X[1](0, 2) = 0.5; X[1](2, 0) = -0.5; X[1](1, 3) = 1;  X[1](3, 1) = -1;
    X[2](0, 3) = 0.5; X[2](3, 0) = -0.5; X[2](1, 2) = -1; X[2](2, 1) = 1;
    const int q = 4 * N + 4;
    std::vector<Mat> mats;
    for (int j = 0; j < 3; ++j) {
        Mat u = Mat::Zero(q, q);
        for (int b = 0; b < N; ++b) u.block(4 * b, 4 * b, 4, 4) = 0.5 * L[static_cast<std::size_t>(j)];
        u.block(4 * N, 4 * N, 4, 4) = X[static_cast<std::size_t>(j)];
        mats.push_back(u);
    }
    StepTwoGroup G;
    G.utuple = SkewTuple(std::move(mats));
    G.family = Family::MetivierNonGM;
    G.p4N = N;
    return G;
}

// Deterministic direction set: +-coordinate axes followed by a Halton sequence
// mapped from the cube to the unit sphere. `seed` offsets the Halton index.
inline std::vector<Vec> sphere_directions(int m, int samples, unsigned seed = 0) {
    static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    std::vector<Vec> dirs;
    for (int j = 0; j < m; ++j) {
        dirs.push_back(Vec::Unit(m, j));
        dirs.push_back(-Vec::Unit(m, j));
    }
    long idx = 1 + static_cast<long>(seed) * 7919;
    while (static_cast<int>(dirs.size()) < 2 * m + samples) {
        Vec v(m);
        for (int j = 0; j < m; ++j) {
            const int b = primes[j % 16];
            double fr = 1.0, r = 0.0;
            long i = idx;
            while (i > 0) {
                fr /= b;
                r += fr * static_cast<double>(i % b);
                i /= b;
            }
            v(j) = 2.0 * r - 1.0;
        }
        ++idx;
        const double n = v.norm();
        if (n > 1e-3) dirs.push_back(v / n);
    }
    return dirs;
}

struct MetivierEvidence {
    bool is_metivier_evidence = true;
    std::optional<Vec> witness;
    int directions_checked = 0;
};

// Sampling evidence only: U(theta) invertible at every sampled unit theta.
inline MetivierEvidence metivier_evidence(const StepTwoGroup& G, int samples, unsigned seed = 0) {
    if (samples < 1) throw ValidationError("metivier_evidence: samples must be >= 1");
    MetivierEvidence out;
    for (const Vec& th : sphere_directions(G.m(), samples, seed)) {
        ++out.directions_checked;
        const Spectrum sp = spectrum(G.utuple, th);
        if (sp.eigvalsq.front() < 1e-12 * (1.0 + sp.eigvalsq.back())) {
            out.is_metivier_evidence = false;
            out.witness = th;
            return out;
        }
    }
    return out;
}

struct GMEvidence {
    bool passes = false;
    int M_lower_estimate = 0;  // sampled minimum multiplicity of the top eigenvalue (an upper bound on the true minimum)
    bool certified = false;    // corank <= 2
    Vec argmin_direction;
};

inline GMEvidence gm_sufficient(const StepTwoGroup& G, int samples, unsigned seed = 0) {
    if (samples < 1) throw ValidationError("gm_sufficient: samples must be >= 1");
    GMEvidence out;
    out.M_lower_estimate = G.q();
    for (const Vec& th : sphere_directions(G.m(), samples, seed)) {
        const Spectrum sp = spectrum(G.utuple, th);
        const int mult = sp.multiplicities.back();
        if (mult < out.M_lower_estimate) {
            out.M_lower_estimate = mult;
            out.argmin_direction = th;
        }
    }
    out.certified = G.m() <= 2;
    out.passes = out.certified || out.M_lower_estimate >= G.m();
    return out;
}

// Unknown: the sufficient condition failed on a group with no family-specific answer.
enum class GMStatus { Certified, Evidence, Unknown, NotGM };

inline const char* gm_status_name(GMStatus s) {
    switch (s) {
        case GMStatus::Certified: return "certified";
        case GMStatus::Evidence: return "evidence";
        case GMStatus::Unknown: return "unknown";
        case GMStatus::NotGM: return "not_gm";
    }
    return "unknown";
}

// Families with a known answer; generic groups fall back to sampled evidence.
inline GMStatus gm_status(const StepTwoGroup& G) {
    switch (G.family) {
        case Family::Heisenberg:
        case Family::Ktype:
        case Family::CR: return GMStatus::Certified;
        case Family::N32:
        case Family::MetivierNonGM: return GMStatus::NotGM;
        case Family::DirectProduct: {
            GMStatus worst = GMStatus::Certified;
            for (const auto& p : G.parts) {
                const GMStatus s = gm_status(*p);
                if (s == GMStatus::NotGM) return GMStatus::NotGM;
                if (s == GMStatus::Unknown) worst = GMStatus::Unknown;
                if (s == GMStatus::Evidence && worst == GMStatus::Certified) worst = GMStatus::Evidence;
            }
            return worst;
        }
        default: break;
    }
    if (G.m() <= 2) return GMStatus::Certified;
    return gm_sufficient(G, 64).passes ? GMStatus::Evidence : GMStatus::Unknown;
}

}  // namespace carnot
