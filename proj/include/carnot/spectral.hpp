#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace carnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The m-tuple of q x q skew-symmetric matrices defining a step-two group.
class SkewTuple {
public:
    SkewTuple() = default;

    explicit SkewTuple(std::vector<Mat> mats) : mats_(std::move(mats)) {
        if (mats_.empty()) throw ValidationError("SkewTuple: need at least one matrix (m >= 1)");
        q_ = static_cast<int>(mats_.front().rows());
        if (q_ < 1) throw ValidationError("SkewTuple: q must be >= 1");
        for (std::size_t j = 0; j < mats_.size(); ++j) {
            const Mat& a = mats_[j];
            if (a.rows() != q_ || a.cols() != q_)
                throw ValidationError("SkewTuple: matrix " + std::to_string(j) + " is not " +
                                      std::to_string(q_) + "x" + std::to_string(q_));
            if (!a.allFinite())
                throw ValidationError("SkewTuple: matrix " + std::to_string(j) + " has non-finite entries");
            const double amax = a.cwiseAbs().maxCoeff();
            const double asym = (a + a.transpose()).cwiseAbs().maxCoeff();
            if (asym > 1e-12 * amax)
                throw ValidationError("SkewTuple: matrix " + std::to_string(j) + " is not skew-symmetric");
        }
        const int m = static_cast<int>(mats_.size());
        Mat stacked(m, q_ * q_);
        for (int j = 0; j < m; ++j) stacked.row(j) = Eigen::Map<const Eigen::RowVectorXd>(mats_[j].data(), q_ * q_);
        Eigen::JacobiSVD<Mat> svd(stacked);
        const auto& sv = svd.singularValues();
        if (sv.size() < m || sv(m - 1) <= 1e-10 * sv(0))
            throw ValidationError("SkewTuple: matrices are not linearly independent (rank < m)");
    }

    int q() const { return q_; }
    int m() const { return static_cast<int>(mats_.size()); }
    const Mat& operator[](int j) const { return mats_[static_cast<std::size_t>(j)]; }
    const std::vector<Mat>& mats() const { return mats_; }

private:
    std::vector<Mat> mats_;
    int q_ = 0;
};

inline Mat assemble_u(const SkewTuple& U, const Vec& theta) {
    if (theta.size() != U.m())
        throw ValidationError("assemble_u: theta has length " + std::to_string(theta.size()) + ", expected m = " +
                              std::to_string(U.m()));
    Mat out = Mat::Zero(U.q(), U.q());
    for (int j = 0; j < U.m(); ++j)
        if (theta(j) != 0.0) out.noalias() += theta(j) * U[j];
    return out;
}

// Clustered eigen-decomposition of U(theta)^2 = -Ut(theta)^2.
struct Spectrum {
    std::vector<double> eigvalsq;  // ascending, one per cluster
    std::vector<Mat> projections;
    std::vector<int> multiplicities;
    Mat ut;  // the assembled skew matrix

    int clusters() const { return static_cast<int>(eigvalsq.size()); }
    double lambda(int l) const { return std::sqrt(eigvalsq[static_cast<std::size_t>(l)]); }
    double lambda_max() const { return eigvalsq.empty() ? 0.0 : std::sqrt(eigvalsq.back()); }
};

inline Spectrum spectrum_of(const Mat& ut) {
    const int q = static_cast<int>(ut.rows());
    Spectrum sp;
    sp.ut = ut;
    Mat s = ut.transpose() * ut;
    s = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    const Vec& ev = es.eigenvalues();
    const Mat& V = es.eigenvectors();
    const double top = std::max(0.0, ev(q - 1));
    const double tol = 1e-9 * (1.0 + top);
    int start = 0;
    while (start < q) {
        int end = start + 1;
        while (end < q && ev(end) - ev(end - 1) <= tol) ++end;
        double mean = 0.0;
        for (int i = start; i < end; ++i) mean += ev(i);
        mean = std::max(0.0, mean / (end - start));
        // a cluster touching zero is snapped to exactly zero
        if (mean <= tol) mean = 0.0;
        const Mat Vc = V.middleCols(start, end - start);
        sp.eigvalsq.push_back(mean);
        sp.projections.push_back(Vc * Vc.transpose());
        sp.multiplicities.push_back(end - start);
        start = end;
    }
    // merge a spurious leading pair of zero clusters
    if (sp.eigvalsq.size() >= 2 && sp.eigvalsq[0] == 0.0 && sp.eigvalsq[1] == 0.0) {
        sp.projections[0] += sp.projections[1];
        sp.multiplicities[0] += sp.multiplicities[1];
        sp.eigvalsq.erase(sp.eigvalsq.begin() + 1);
        sp.projections.erase(sp.projections.begin() + 1);
        sp.multiplicities.erase(sp.multiplicities.begin() + 1);
    }
    return sp;
}

inline Spectrum spectrum(const SkewTuple& U, const Vec& theta) { return spectrum_of(assemble_u(U, theta)); }

inline double op_norm_of(const Mat& ut) {
    if (ut.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(ut);
    return svd.singularValues()(0);
}

inline double op_norm(const SkewTuple& U, const Vec& theta) { return op_norm_of(assemble_u(U, theta)); }

// Even scalar function of lambda >= 0, optionally with poles at k*pi (k >= 1).
struct ScalarFn {
    std::function<double(double)> eval;
    bool poles_at_kpi = false;
};

namespace fn {

inline double sinc(double s) {
    if (std::abs(s) < 1e-4) {
        const double s2 = s * s;
        return 1.0 - s2 / 6.0 + s2 * s2 / 120.0;
    }
    return std::sin(s) / s;
}

inline ScalarFn lcot() {
    return {[](double l) { return std::abs(l) < 1e-4 ? 1.0 - l * l / 3.0 - l * l * l * l / 45.0 : l / std::tan(l); },
            true};
}
inline ScalarFn lsin() { return {[](double l) { return 1.0 / sinc(l); }, true}; }
inline ScalarFn sin_over() { return {[](double l) { return sinc(l); }, false}; }
inline ScalarFn cosine(double scale = 1.0) {
    return {[scale](double l) { return std::cos(scale * l); }, false};
}
inline ScalarFn identity() { return {[](double) { return 1.0; }, false}; }

}  // namespace fn

inline bool near_kpi_pole(double lambda, double tol = 1e-9) {
    const double k = std::round(lambda / kPi);
    return k >= 1.0 && std::abs(lambda - k * kPi) <= tol;
}

// sum_l f(lambda_l) P_l x
inline Vec apply_fn(const Spectrum& sp, const ScalarFn& f, const Vec& x) {
    Vec out = Vec::Zero(x.size());
    for (int l = 0; l < sp.clusters(); ++l) {
        const double lam = sp.lambda(l);
        if (f.poles_at_kpi && near_kpi_pole(lam))
            throw PoleError("apply_fn: eigenvalue " + std::to_string(lam) + " sits on a pole");
        out.noalias() += f.eval(lam) * (sp.projections[static_cast<std::size_t>(l)] * x);
    }
    return out;
}

inline Vec apply_fn(const SkewTuple& U, const Vec& theta, const ScalarFn& f, const Vec& x) {
    if (x.size() != U.q()) throw ValidationError("apply_fn: x has wrong length");
    return apply_fn(spectrum(U, theta), f, x);
}

// exp(s * Ut) via the spectral calculus: cos(s U) + Ut * s * sinc(s U).
inline Mat exp_skew(const Spectrum& sp, double s = 1.0) {
    const int q = static_cast<int>(sp.ut.rows());
    Mat out = Mat::Zero(q, q);
    for (int l = 0; l < sp.clusters(); ++l) {
        const double lam = sp.lambda(l);
        const Mat& P = sp.projections[static_cast<std::size_t>(l)];
        out.noalias() += std::cos(s * lam) * P;
        out.noalias() += (s * fn::sinc(s * lam)) * (sp.ut * P);
    }
    return out;
}

}  // namespace carnot
