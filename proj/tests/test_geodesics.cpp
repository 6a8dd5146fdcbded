#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace carnot;
using namespace testutil;

namespace {

std::vector<StepTwoGroup> sample_groups() {
    std::mt19937_64 rng(42);
    Mat B(2, 3);
    B << 1.0, 0.5, 0.0, 0.3, 1.0, -1.0;
    return {make_heisenberg(),           make_ktype(B),           make_cr(cr_a5()),
            make_n32(),                  random_group(rng, 6, 3), random_group(rng, 8, 2),
            make_product(make_heisenberg(), make_n32()), make_p4(1)};
}

Covector random_covector(std::mt19937_64& rng, const StepTwoGroup& G, double thmax = 2 * kPi) {
    return {gauss(rng, G.q()), random_theta(rng, G, thmax)};
}

}  // namespace

TEST(Geodesics, ClosedFormMatchesOdeAndGeneric) {
    std::mt19937_64 rng(1);
    for (const StepTwoGroup& G : sample_groups()) {
        double ode = 0.0, gen = 0.0;
        for (int k = 0; k < 200; ++k) {
            const Covector c = random_covector(rng, G);
            const GroupElement a = exp_map(G, c);
            ode = std::max(ode, endpoint_distance(a, exp_map_ode(G, c, 1.0, 2048)));
            gen = std::max(gen, endpoint_distance(a, exp_map(G, c, 1.0, ExpMode::Generic)));
        }
        EXPECT_LE(ode, 1e-8) << family_name(G.family);
        EXPECT_LE(gen, 1e-10) << family_name(G.family);
    }
}

TEST(Geodesics, StraightRayWhenThetaVanishes) {
    std::mt19937_64 rng(2);
    for (const StepTwoGroup& G : sample_groups()) {
        const Vec z = gauss(rng, G.q());
        const GroupElement e = exp_map(G, {z, Vec::Zero(G.m())}, 0.7);
        EXPECT_LE((e.x - 0.7 * z).norm(), 1e-15);
        EXPECT_LE(e.t.norm(), 1e-15);
    }
}

TEST(Geodesics, CrAbnormalGeodesicEndpoint) {
    const StepTwoGroup P5 = make_cr(cr_a5());
    Vec p(6);
    p << 2.0 * std::sqrt(kPi), 0, 0, 0, 0, 0;
    Vec th(2);
    th << kPi, 0.0;
    const GroupElement e = exp_map(P5, {p, th});
    EXPECT_LE(e.x.norm(), 1e-14);
    EXPECT_NEAR(e.t(0), 1.0, 1e-14);
    EXPECT_NEAR(e.t(1), 0.0, 1e-14);
}

TEST(Geodesics, HomogeneityAndHamiltonian) {
    std::mt19937_64 rng(3);
    for (const StepTwoGroup& G : sample_groups()) {
        for (int k = 0; k < 20; ++k) {
            const Covector c = random_covector(rng, G);
            const double a = uniform(rng, 0.2, 2.0), s = uniform(rng, 0.1, 1.0);
            const GroupElement lhs = exp_map(G, {a * c.zeta, a * c.theta}, s);
            const GroupElement rhs = exp_map(G, c, a * s);
            ASSERT_LE(endpoint_distance(lhs, rhs), 1e-10 * (1 + rhs.x.norm() + rhs.t.norm()));
            Vec zend;
            exp_map_ode(G, c, 1.0, 2048, &zend);
            ASSERT_NEAR(zend.norm(), c.zeta.norm(), 1e-10 * (1 + c.zeta.norm()));
        }
    }
}

TEST(Geodesics, SpeedEqualsCovectorLength) {
    std::mt19937_64 rng(4);
    for (const StepTwoGroup& G : sample_groups()) {
        const Covector c = random_covector(rng, G);
        for (double s : {0.2, 0.5, 0.9}) {
            const double h = 1e-6;
            const Vec v = (exp_map(G, c, s + h).x - exp_map(G, c, s - h).x) / (2 * h);
            EXPECT_NEAR(v.norm(), c.zeta.norm(), 1e-4);
        }
    }
}

TEST(Geodesics, RestrictionCovector) {
    std::mt19937_64 rng(5);
    for (const StepTwoGroup& G : sample_groups()) {
        const Covector c = random_covector(rng, G);
        const double s1 = 0.3, s2 = 0.8;
        // left-translate the piece [s1, s2] back to the origin
        const GroupElement a = exp_map(G, c, s1), b = exp_map(G, c, s2);
        const GroupElement piece = multiply(G, inverse(a), b);
        const Mat E = exp_skew(spectrum(G.utuple, c.theta), 2.0 * s1);
        const Covector r{(s2 - s1) * (E * c.zeta), (s2 - s1) * c.theta};
        EXPECT_LE(endpoint_distance(exp_map(G, r), piece), 1e-9) << family_name(G.family);
    }
}

TEST(Geodesics, AbnormalityExamples) {
    std::mt19937_64 rng(6);
    const StepTwoGroup P4 = make_p4(1);
    for (int k = 0; k < 20; ++k) EXPECT_FALSE(is_abnormal(P4, random_covector(rng, P4)).abnormal);
    const StepTwoGroup P5 = make_cr(cr_a5());
    Vec p(6);
    p << 2.0 * std::sqrt(kPi), 0, 0, 0, 0, 0;
    Vec th(2);
    th << kPi, 0.0;
    const AbnormalReport a = is_abnormal(P5, {p, th});
    ASSERT_TRUE(a.abnormal);
    ASSERT_EQ(a.sigma_basis.size(), 1u);
    EXPECT_NEAR(std::abs(a.sigma_basis[0](1)), 1.0, 1e-12);
    // the same construction with theta = (2 pi, 0) on the second CR example
    const StepTwoGroup P6 = make_cr(cr_a6());
    Vec ps(6);
    ps << 2.0 * std::sqrt(2.0 * kPi), 0, 0, 0, 0, 0;
    Vec ths(2);
    ths << 2.0 * kPi, 0.0;
    EXPECT_TRUE(is_abnormal(P6, {ps, ths}).abnormal);
    EXPECT_LE(endpoint_distance(exp_map(P6, {ps, ths}), {Vec::Zero(6), Vec::Unit(2, 0)}), 1e-13);
    // K-type: x0-free covector with B^T theta orthogonal
    const StepTwoGroup K = make_ktype(Mat::Identity(2, 2));
    Vec w(3);
    w << 0, 1, 0;
    EXPECT_TRUE(is_abnormal(K, {w, Vec::Unit(2, 1)}).abnormal);
}

TEST(Geodesics, CutTimeExamples) {
    std::mt19937_64 rng(7);
    const StepTwoGroup H = make_heisenberg();
    Vec z = Vec::Unit(2, 0);
    EXPECT_TRUE(std::isinf(cut_time_gm(H, {z, Vec::Zero(1)}).cut_time));
    const CutReport h = cut_time_gm(H, {z, Vec::Constant(1, 0.5)});
    EXPECT_NEAR(h.cut_time, 2 * kPi, 1e-12);
    EXPECT_FALSE(h.abnormal);
    EXPECT_THROW(cut_time_gm(H, {2 * z, Vec::Zero(1)}), ValidationError);
    // CR: a covector supported on the first block is abnormal with Pi = span(e2)
    const Mat A = cr_a5();
    const StepTwoGroup C = make_cr(A);
    for (int k = 0; k < 10; ++k) {
        Vec w = Vec::Zero(6);
        w.head(2) = gauss(rng, 2).normalized();
        const Vec th = gauss(rng, 2);
        const CutReport r = cut_time_gm(C, {w, th});
        ASSERT_TRUE(r.abnormal);
        ASSERT_EQ(r.pi_subspace_dim, 1);
        double best = 1e300;
        for (int i = -200000; i <= 200000; ++i) {
            Vec sig = 2.0 * th;
            sig(1) += i * 1e-5 * (1 + 2 * th.norm());
            best = std::min(best, (A.transpose() * sig).cwiseAbs().maxCoeff());
        }
        const double want = 2 * kPi / best;
        EXPECT_GE(r.cut_time, want * (1 - 1e-8));
        EXPECT_NEAR(r.cut_time, want, 1e-4 * want);
        EXPECT_NEAR(r.cut_time, 2 * kPi / group_op_norm(C, r.minimizing_sigma), 1e-12 * r.cut_time);
    }
    // K-type: w = (0, w*) with theta . B w* = 0 has infinite cut time
    Mat B(3, 4);
    B << 1.0, 0.5, 0.0, 0.2, 0.3, 1.0, -1.0, 0.0, 0.0, 0.4, 0.1, 1.0;
    const StepTwoGroup K = make_ktype(B);
    for (int k = 0; k < 10; ++k) {
        Vec w(5);
        w << 0.0, gauss(rng, 4);
        w.normalize();
        const Vec bw = B * w.tail(4);
        Vec th = gauss(rng, 3);
        th -= th.dot(bw) / bw.squaredNorm() * bw;
        const CutReport r = cut_time_gm(K, {w, th});
        EXPECT_TRUE(r.abnormal);
        EXPECT_EQ(r.pi_subspace_dim, 2);
        EXPECT_TRUE(std::isinf(r.cut_time));
        // theta . B w* != 0: strictly normal
        EXPECT_FALSE(cut_time_gm(K, {w, th + 0.1 * bw}).abnormal);
    }
}

TEST(Geodesics, SymmetryTransport) {
    std::mt19937_64 rng(8);
    for (const StepTwoGroup& G : sample_groups()) {
        const Covector c = random_covector(rng, G);
        const GroupElement e = exp_map(G, c);
        const Covector s = symmetry_transport(G, c, SymmetryKind::Scale, 1.7);
        EXPECT_LE(endpoint_distance(exp_map(G, s), dilate(e, 1.7)), 1e-10 * (1 + e.x.norm() + e.t.norm()));
        const Covector n = symmetry_transport(G, c, SymmetryKind::Negate);
        EXPECT_LE(endpoint_distance(exp_map(G, n), {-e.x, -e.t}), 1e-10 * (1 + e.x.norm() + e.t.norm()));
        EXPECT_NEAR(n.zeta.norm(), c.zeta.norm(), 1e-12 * (1 + c.zeta.norm()));
        if (G.family != Family::N32) EXPECT_THROW(symmetry_transport(G, c, SymmetryKind::Rotate, 1.0, Mat::Identity(3, 3)), ValidationError);
    }
    const StepTwoGroup N = make_n32();
    for (int k = 0; k < 20; ++k) {
        const Covector c = random_covector(rng, N);
        const Mat O = random_orthogonal(rng, 3);
        const GroupElement e = exp_map(N, c);
        const Covector r = symmetry_transport(N, c, SymmetryKind::Rotate, 1.0, O);
        const GroupElement want{O * e.x, O * e.t};
        EXPECT_LE(endpoint_distance(exp_map(N, r), want), 1e-10 * (1 + e.x.norm() + e.t.norm()));
    }
}

TEST(Geodesics, KtypeBadGeodesicLength) {
    const StepTwoGroup K = make_ktype(Mat::Identity(3, 3));
    Vec xs(3), t(3);
    xs << 0.5, 0.2, 0.0;
    t << 0.05, 0.3, 0.1;
    const auto fam = kbad_geodesics(K, xs, t, 1, 8);
    ASSERT_FALSE(fam.empty());
    const double want = *kdist_cut(Mat::Identity(3, 3), xs, t).dsq;
    Vec x(4);
    x << 0, xs;
    for (const Covector& c : fam) {
        EXPECT_NEAR(c.zeta.squaredNorm(), want, 1e-9);
        EXPECT_LE(endpoint_distance(exp_map(K, c), {x, t}), 1e-9);
        EXPECT_NEAR((K.data.transpose() * c.theta).norm(), kPi, 1e-10);
    }
}
