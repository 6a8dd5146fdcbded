#pragma once

// Scalar functions built from s*cot(s): f, mu, psi, h and the phi_k family,
// plus small-argument-safe combinations of sin/cos used by closed-form geodesics.

#include "carnot/spectral.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace carnot::special {

namespace detail {

// Taylor coefficients in powers of s^2.
inline constexpr double k_f_over_s2[] = {
    0.33333333333333333333, 0.022222222222222222222, 0.0021164021164021164021, 0.00021164021164021164021,
    0.000021377799155576933355, 0.0000021644042808063972085, 2.1925947851873777800E-7, 2.2214608789979679076E-8,
    2.2507846516808992854E-9, 2.2805151204592182866E-10, 2.3106432599002624097E-11, 2.3411706819824883959E-12,
    2.3721017400233654295E-13, 2.4034415333307706179E-14};
inline constexpr double k_mu_over_s[] = {
    0.66666666666666666667, 0.088888888888888888889, 0.012698412698412698413, 0.0016931216931216931217,
    0.00021377799155576933355, 0.000025972851369676766502, 0.0000030696326992623288920, 3.5543374063967486522E-7,
    4.0514123730256187138E-8, 4.5610302409184365732E-9, 5.0834151717805773012E-10, 5.6188096367579721502E-11,
    6.1674645240607501167E-12, 6.7296362933261577301E-13};
inline constexpr double k_dpsi_over_s[] = {
    0.044444444444444444444, 0.0084656084656084656085, 0.0012698412698412698413, 0.00017102239324461546684,
    0.000021644042808063972085, 0.0000026311137422248533360, 3.1100452305971550706E-7, 3.6012554426894388567E-8,
    4.1049272168265929159E-9, 4.6212865198005248193E-10, 5.1505755003614744710E-11, 5.6930441760560770308E-12,
    6.2489479866600036066E-13, 6.8185471281713432447E-14};
inline constexpr double k_h_over_s6[] = {
    0.044444444444444444444, -0.0063492063492063492063, 0.00042328042328042328042, -0.000017102239324461546684,
    4.6984173968300952428E-7, -9.3968347936601904856E-9, 1.4330684870505737124E-10, -1.7239921648728706315E-12,
    1.6792131476034454203E-14, -1.3520234682797467152E-16, 9.1521588622013623797E-19, -5.2826313778940042595E-21,
    2.6311957054644465661E-23, -1.1425787802885313872E-25};
inline constexpr double k_ssq_minus_sinsq_over_s4[] = {
    0.33333333333333333333, -0.044444444444444444444, 0.0031746031746031746032, -0.00014109347442680776014,
    0.0000042755598311153866709, -9.3968347936601904856E-8, 1.5661391322766984143E-9, -2.0472406957865338749E-11,
    2.1549902060910882893E-13, -1.8657923862260504669E-15, 1.3520234682797467152E-17, -8.3201444201830567088E-20,
    4.4021928149116702163E-22, -2.0239966965111127431E-24};
inline constexpr double k_s_minus_sc_over_s3[] = {
    0.66666666666666666667, -0.13333333333333333333, 0.012698412698412698413, -0.00070546737213403880071,
    0.000025653358986692320026, -6.5777843555621333399E-7, 1.2529113058213587314E-8, -1.8425166262078804874E-10,
    2.1549902060910882893E-12, -2.0523716248486555136E-14, 1.6224281619356960582E-16, -1.0816187746237973721E-18,
    6.1630699408763383028E-21, -3.0359950447666691147E-23};
inline constexpr double k_phi0_over_s2[] = {
    0.33333333333333333333, 0.066666666666666666667, 0.010582010582010582011, 0.0014814814814814814815,
    0.00019240019240019240019, 0.000023808447088870369294, 0.0000028503732207435911140, 3.3321913184969518614E-7,
    3.8263339078575287852E-8, 4.3329787288725147445E-9, 4.8523508457905510603E-10, 5.3846925685597233106E-11,
    5.9302543500584135738E-12, 6.4892921399930806684E-13};
inline constexpr double k_x_minus_sin_over_x3[] = {
    0.16666666666666666667, -0.0083333333333333333333, 0.00019841269841269841270, -0.0000027557319223985890653,
    2.5052108385441718775E-8, -1.6059043836821614599E-10, 7.6471637318198164759E-13, -2.8114572543455207632E-15,
    8.2206352466243297170E-18, -1.9572941063391261231E-20, 3.8681701706306840377E-23, -6.4469502843844733962E-26,
    9.1836898637955461484E-29, -1.1309962886447716932E-31};
inline constexpr double k_one_minus_cos_over_x2[] = {
    0.50000000000000000000, -0.041666666666666666667, 0.0013888888888888888889, -0.000024801587301587301587,
    2.7557319223985890653E-7, -2.0876756987868098979E-9, 1.1470745597729724714E-11, -4.7794773323873852974E-14,
    1.5619206968586226462E-16, -4.1103176233121648585E-19, 8.8967913924505732868E-22, -1.6117375710961183490E-24,
    2.4795962632247974601E-27, -3.2798892370698379102E-30};
inline constexpr double k_k2_over_x3[] = {
    -0.16666666666666666667, 0.025000000000000000000, -0.00099206349206349206349, 0.000019290123456790123457,
    -2.2546897546897546898E-7, 1.7664948220503776059E-9, -9.9413128513657614187E-12, 4.2171858815182811448E-14,
    -1.3975079919261360519E-16, 3.7188588020443396339E-19, -8.1231573583244364792E-22, 1.4827985654084288811E-24,
    -2.2959224659488865371E-27, 3.0536899793408835715E-30};
inline constexpr double k_k3_over_x4[] = {
    0.041666666666666666667, -0.0027777777777777777778, 0.000074404761904761904762, -0.0000011022927689594356261,
    1.0438378493934049490E-8, -6.8824473586378348283E-11, 3.3456341326711697082E-13, -1.2495365574868981170E-15,
    3.6992858609809483726E-18, -8.8967913924505732867E-21, 1.7729113282057301840E-23, -2.9755155158697569521E-26,
    4.2638560081907892832E-29, -5.2779826803422679014E-32};
inline constexpr double k_n3_over_x3[] = {
    0.083333333333333333333, -0.012500000000000000000, 0.00049603174603174603175, -0.0000096450617283950617284,
    1.1273448773448773449E-7, -8.8324741102518880297E-10, 4.9706564256828807093E-12, -2.1085929407591405724E-14,
    6.9875399596306802594E-17, -1.8594294010221698169E-19, 4.0615786791622182396E-22, -7.4139928270421444056E-25,
    1.1479612329744432686E-27, -1.5268449896704417858E-30};

template <std::size_t N>
inline double even_series(const double (&c)[N], double s) {
    const double s2 = s * s;
    double acc = 0.0;
    for (std::size_t i = N; i-- > 0;) acc = acc * s2 + c[i];
    return acc;
}

inline constexpr double kSeriesCut = 0.5;

}  // namespace detail

// f(s) = 1 - s cot s
inline double f(double s) {
    if (std::abs(s) < detail::kSeriesCut) return s * s * detail::even_series(detail::k_f_over_s2, s);
    return 1.0 - s / std::tan(s);
}

// s cot s
inline double scot(double s) { return 1.0 - f(s); }

// mu = f' = (2s - sin 2s) / (2 sin^2 s)
inline double mu(double s) {
    if (std::abs(s) < detail::kSeriesCut) return s * detail::even_series(detail::k_mu_over_s, s);
    const double sn = std::sin(s);
    return (2.0 * s - std::sin(2.0 * s)) / (2.0 * sn * sn);
}

// mu(s)/s, finite at 0
inline double mu_over_s(double s) {
    if (std::abs(s) < detail::kSeriesCut) return detail::even_series(detail::k_mu_over_s, s);
    return mu(s) / s;
}

// mu'(s) = f''(s)
inline double dmu(double s) {
    // f'' = 2 (sin s - s cos s) / sin^3 s
    if (std::abs(s) < detail::kSeriesCut) {
        // d/ds [s P(s^2)] = P + 2 s^2 P'(s^2)
        const double s2 = s * s;
        double p = 0.0, dp = 0.0;
        constexpr std::size_t N = std::size(detail::k_mu_over_s);
        for (std::size_t i = N; i-- > 0;) {
            dp = dp * s2 + static_cast<double>(i) * detail::k_mu_over_s[i];
            p = p * s2 + detail::k_mu_over_s[i];
        }
        return p + 2.0 * dp;
    }
    const double sn = std::sin(s);
    return 2.0 * (sn - s * std::cos(s)) / (sn * sn * sn);
}

// psi = f / s^2
inline double psi(double s) {
    if (std::abs(s) < detail::kSeriesCut) return detail::even_series(detail::k_f_over_s2, s);
    return f(s) / (s * s);
}

// psi'(s) = (s mu - 2 f) / s^3
inline double dpsi(double s) {
    if (std::abs(s) < detail::kSeriesCut) return s * detail::even_series(detail::k_dpsi_over_s, s);
    return (s * mu(s) - 2.0 * f(s)) / (s * s * s);
}

inline double dpsi_over_s(double s) {
    if (std::abs(s) < detail::kSeriesCut) return detail::even_series(detail::k_dpsi_over_s, s);
    return dpsi(s) / s;
}

// h = s^2 + s sin s cos s - 2 sin^2 s
inline double h(double s) {
    if (std::abs(s) < detail::kSeriesCut) {
        const double s2 = s * s;
        return s2 * s2 * s2 * detail::even_series(detail::k_h_over_s6, s);
    }
    const double sn = std::sin(s);
    return s * s + s * sn * std::cos(s) - 2.0 * sn * sn;
}

inline double ssq_minus_sinsq(double s) {
    if (std::abs(s) < detail::kSeriesCut) {
        const double s2 = s * s;
        return s2 * s2 * detail::even_series(detail::k_ssq_minus_sinsq_over_s4, s);
    }
    const double sn = std::sin(s);
    return s * s - sn * sn;
}

inline double s_minus_sc(double s) {
    if (std::abs(s) < detail::kSeriesCut) return s * s * s * detail::even_series(detail::k_s_minus_sc_over_s3, s);
    return s - std::sin(s) * std::cos(s);
}

// phi0 = (s / sin s)^2 - 1
inline double phi0(double s) {
    if (std::abs(s) < detail::kSeriesCut) return s * s * detail::even_series(detail::k_phi0_over_s2, s);
    const double r = s / std::sin(s);
    return r * r - 1.0;
}

// phi1 = (s^2 - sin^2 s) / (s - sin s cos s)
inline double phi1(double s) {
    if (std::abs(s) < detail::kSeriesCut)
        return s * detail::even_series(detail::k_ssq_minus_sinsq_over_s4, s) /
               detail::even_series(detail::k_s_minus_sc_over_s3, s);
    return ssq_minus_sinsq(s) / s_minus_sc(s);
}

// phi2 = s (s^2 - sin^2 s) / h
inline double phi2(double s) {
    if (std::abs(s) < detail::kSeriesCut)
        return detail::even_series(detail::k_ssq_minus_sinsq_over_s4, s) /
               (s * detail::even_series(detail::k_h_over_s6, s));
    return s * ssq_minus_sinsq(s) / h(s);
}

inline double phi3(double s) { return std::sqrt(phi1(s) * phi2(s)); }

// K3(v) = 2 psi(r) + psi'(r) v2^2 / r
inline double K3(double v1, double v2) {
    const double r = std::hypot(v1, v2);
    return 2.0 * psi(r) + dpsi_over_s(r) * v2 * v2;
}

// k-th positive root of tan s = s, in (k pi, (k + 1/2) pi)
inline double vartheta(int k) {
    if (k < 1) throw DomainError("vartheta: k must be >= 1");
    // g(s) = sin s - s cos s changes sign on the bracket
    double lo = k * kPi + 1e-12, hi = (k + 0.5) * kPi;
    auto g = [](double s) { return std::sin(s) - s * std::cos(s); };
    double glo = g(lo);
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double gs = g(s), dg = s * std::sin(s);
        if (dg != 0.0) s -= gs / dg;
    }
    return s;
}

inline double vartheta1() {
    static const double v = vartheta(1);
    return v;
}

struct SpecialFns {
    double f, mu, psi, dpsi, h, phi0, phi1, phi2, phi3;
};

// At s = k pi the members f, mu, psi, psi', phi0 have poles; with allow_pole they come back as +-inf.
inline SpecialFns evaluate(double s, bool allow_pole = false) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("special: argument must be finite and > 0");
    const double k = std::round(s / kPi);
    if (k >= 1.0 && std::abs(s - k * kPi) <= 1e-13 * s) {
        if (!allow_pole) throw PoleError("special: argument is a multiple of pi");
        const double inf = std::numeric_limits<double>::infinity();
        const double kp = k * kPi;
        // signs of the one-sided limits from above
        return {-inf, inf, -inf, inf, h(kp), inf, phi1(kp), kp, std::sqrt(phi1(kp) * kp)};
    }
    return {f(s), mu(s), psi(s), dpsi(s), h(s), phi0(s), phi1(s), phi2(s), phi3(s)};
}

// Small-argument-safe trigonometric combinations.
namespace trig {

inline double x_minus_sin_over_x3(double a) {
    if (std::abs(a) < detail::kSeriesCut) return detail::even_series(detail::k_x_minus_sin_over_x3, a);
    return (a - std::sin(a)) / (a * a * a);
}
inline double one_minus_cos_over_x2(double a) {
    if (std::abs(a) < detail::kSeriesCut) return detail::even_series(detail::k_one_minus_cos_over_x2, a);
    return (1.0 - std::cos(a)) / (a * a);
}
// (a + a cos a - 2 sin a) / a^3
inline double k2_over_x3(double a) {
    if (std::abs(a) < detail::kSeriesCut) return detail::even_series(detail::k_k2_over_x3, a);
    return (a + a * std::cos(a) - 2.0 * std::sin(a)) / (a * a * a);
}
// (1 - cos a - a sin a / 2) / a^4
inline double k3_over_x4(double a) {
    if (std::abs(a) < detail::kSeriesCut) return detail::even_series(detail::k_k3_over_x4, a);
    return (1.0 - std::cos(a) - 0.5 * a * std::sin(a)) / (a * a * a * a);
}
// (sin a - a/2 - a cos a / 2) / a^3
inline double n3_over_x3(double a) {
    if (std::abs(a) < detail::kSeriesCut) return detail::even_series(detail::k_n3_over_x3, a);
    return (std::sin(a) - 0.5 * a - 0.5 * a * std::cos(a)) / (a * a * a);
}

}  // namespace trig

}  // namespace carnot::special
