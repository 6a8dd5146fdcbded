#pragma once

// Family-specific closed forms shared by the geodesic and reference-function code:
// exponential maps and reference-function gradients for K-type, CR and N(3,2).

#include "carnot/group.hpp"
#include "carnot/special.hpp"

#include <cmath>

namespace carnot {

// x * x~ = x~_1 B x_* - x_1 B x~_*  for x = (x_1, x_*) in R x R^{p0}
inline Vec kstar(const Mat& B, const Vec& x, const Vec& xt) {
    const int p0 = static_cast<int>(B.cols());
    return xt(0) * (B * x.tail(p0)) - x(0) * (B * xt.tail(p0));
}

namespace closed {

namespace tr = special::trig;

// K-type geodesic with covector (w, 2 theta) at time s.
inline GroupElement ktype_exp(const Mat& B, const Vec& w, const Vec& theta, double s) {
    const int p0 = static_cast<int>(B.cols());
    const Vec Bt = B.transpose() * theta;
    const double b = Bt.norm();
    if (b == 0.0) return {s * w, Vec::Zero(B.rows())};
    const Vec u = Bt / b;
    const double w1 = w(0);
    const Vec ws = w.tail(p0);
    const double c = u.dot(ws);
    Vec v1t(1 + p0), v2(1 + p0), v3(1 + p0);
    v1t(0) = c;
    v1t.tail(p0) = -w1 * u;
    v2(0) = w1;
    v2.tail(p0) = c * u;
    v3(0) = 0.0;
    v3.tail(p0) = ws - c * u;
    const double a = 2.0 * s * b;
    Vec x = (s * a * tr::one_minus_cos_over_x2(a)) * v1t + (s * fn::sinc(a)) * v2 + s * v3;
    const double s3 = s * s * s;
    Vec t = (-s3 * b * tr::x_minus_sin_over_x3(a)) * kstar(B, v1t, v2) +
            (s3 * b * tr::k2_over_x3(a)) * kstar(B, v1t, v3) +
            (4.0 * s3 * s * b * b * tr::k3_over_x4(a)) * kstar(B, v2, v3);
    return {x, t};
}

// CR geodesic: z_j(s) = (1 - exp(-2 i s c_j)) / (2 i c_j) p_j with c_j = a_j . theta.
inline GroupElement cr_exp(const Mat& A, const Vec& p, const Vec& theta, double s) {
    const int n = static_cast<int>(A.cols());
    const Vec c = A.transpose() * theta;
    Vec x(2 * n);
    Vec t = Vec::Zero(A.rows());
    for (int j = 0; j < n; ++j) {
        const double a = 2.0 * s * c(j);
        const double re = s * fn::sinc(a), im = -s * a * tr::one_minus_cos_over_x2(a);
        const double pr = p(2 * j), pi = p(2 * j + 1);
        x(2 * j) = re * pr - im * pi;
        x(2 * j + 1) = re * pi + im * pr;
        const double mod2 = pr * pr + pi * pi;
        t += (s * s * s * c(j) * tr::x_minus_sin_over_x3(a) * mod2) * A.col(j);
    }
    return {x, t};
}

inline Vec cross(const Vec& a, const Vec& b) {
    Vec out(3);
    out << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
    return out;
}

inline GroupElement n32_exp(const Vec& w, const Vec& theta, double s) {
    const double r = theta.norm();
    if (r == 0.0) return {s * w, Vec::Zero(3)};
    const Vec th = theta / r;
    const double c = w.dot(th);
    const Vec wperp = w - c * th;
    const Vec tw = cross(th, w);
    const double a = 2.0 * s * r;
    Vec x = (s * fn::sinc(a)) * wperp + (s * c) * th + (s * a * tr::one_minus_cos_over_x2(a)) * tw;
    const Vec u1 = -c * tw;
    const Vec u2 = (w.squaredNorm() - c * c) * th;
    const Vec u3 = -c * wperp;
    const double s3 = s * s * s;
    Vec t = (4.0 * s3 * s * r * r * tr::k3_over_x4(a)) * u1 + (s3 * r * tr::x_minus_sin_over_x3(a)) * u2 +
            (2.0 * s3 * r * tr::n3_over_x3(a)) * u3;
    return {x, t};
}

// Reference-function value and gradient in the interior, per family.
struct ValueGrad {
    double value;
    Vec grad;
};

inline ValueGrad ktype_phi(const Mat& B, const Vec& x, const Vec& t, const Vec& tau) {
    const int p0 = static_cast<int>(B.cols());
    const Vec G = B * B.transpose() * tau;
    const Vec y = B * x.tail(p0);
    const double b = std::sqrt(std::max(0.0, tau.dot(G)));
    const double c = tau.dot(y);
    const double x1 = x(0);
    const double value = x.squaredNorm() + 4.0 * t.dot(tau) - (x1 * x1 * special::f(b) + c * c * special::psi(b));
    const double alpha = x1 * x1 * special::mu_over_s(b) + c * c * special::dpsi_over_s(b);
    Vec grad = 4.0 * t - alpha * G - (2.0 * c * special::psi(b)) * y;
    return {value, grad};
}

inline ValueGrad cr_phi(const Mat& A, const Vec& x, const Vec& t, const Vec& tau, Mat* hess = nullptr) {
    const int n = static_cast<int>(A.cols());
    const Vec c = A.transpose() * tau;
    double value = 4.0 * t.dot(tau);
    Vec grad = 4.0 * t;
    if (hess) *hess = Mat::Zero(A.rows(), A.rows());
    for (int j = 0; j < n; ++j) {
        const double z2 = x(2 * j) * x(2 * j) + x(2 * j + 1) * x(2 * j + 1);
        if (z2 == 0.0) continue;
        value += z2 * special::scot(c(j));
        grad -= (special::mu(c(j)) * z2) * A.col(j);
        if (hess) *hess -= (special::dmu(c(j)) * z2) * A.col(j) * A.col(j).transpose();
    }
    return {value, grad};
}

inline ValueGrad n32_phi(const Vec& x, const Vec& t, const Vec& tau) {
    const double r = tau.norm();
    const double c = tau.dot(x);
    const double x2 = x.squaredNorm();
    const double value = special::scot(r) * x2 + special::psi(r) * c * c + 4.0 * t.dot(tau);
    Vec grad = 4.0 * t - (special::mu_over_s(r) * x2) * tau + (special::dpsi_over_s(r) * c * c) * tau +
               (2.0 * special::psi(r) * c) * x;
    return {value, grad};
}

}  // namespace closed

}  // namespace carnot
