#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace carnot;
using namespace testutil;

namespace {

Mat sample_b() {
    Mat B(2, 3);
    B << 1.0, 0.5, 0.0, 0.3, 1.0, -1.0;
    return B;
}

}  // namespace

TEST(Ktype, TransformsIsometry) {
    std::mt19937_64 rng(1);
    const Mat B = sample_b();
    const KTransform K(B);
    EXPECT_LE((K.TB * K.TB - B * B.transpose()).norm(), 1e-10);
    EXPECT_LE((K.TB - K.TB.transpose()).norm(), 1e-14);
    for (int k = 0; k < 50; ++k) {
        const Vec xs = gauss(rng, 3), t = gauss(rng, 2);
        const KTransformed tr = ktransforms(K, xs, t);
        EXPECT_NEAR(xs.squaredNorm(), tr.X.squaredNorm() + tr.XX.squaredNorm(), 1e-10 * (1 + xs.squaredNorm()));
        EXPECT_LE((K.TB * tr.T - t).norm(), 1e-12 * (1 + t.norm()));
    }
    EXPECT_THROW(ktransforms(K, Vec::Zero(2), Vec::Zero(2)), ValidationError);
}

TEST(Ktype, StarGraphCutValue) {
    const StepTwoGroup K = make_ktype(Mat::Identity(3, 3));
    Vec x(4), t(3);
    x << 0, 1, 0, 0;
    t << 0, 1, 0;
    const DistanceReport r = kdistance(K, {x, t});
    EXPECT_NEAR(r.dsq, 1 + 4 * kPi, 1e-12);
    EXPECT_EQ(r.classification, PointClass::Boundary);
    ASSERT_TRUE(r.covector.has_value());
    EXPECT_LE(endpoint_distance(exp_map(K, *r.covector), {x, t}), 1e-9);
}

TEST(Ktype, HeisenbergVerticalAxis) {
    const StepTwoGroup H = make_heisenberg();
    for (double s : {-2.0, 0.1, 3.0}) EXPECT_NEAR(kdistance(H, {Vec::Zero(2), Vec::Constant(1, s)}).dsq, 4 * kPi * std::abs(s), 1e-12);
}

TEST(Ktype, M2tildePoints) {
    const StepTwoGroup K = make_ktype(sample_b());
    Vec x(4);
    x << 0, 0.3, -1.0, 2.0;
    const DistanceReport r = kdistance(K, {x, Vec::Zero(2)});
    EXPECT_EQ(r.classification, PointClass::M2tilde);
    EXPECT_NEAR(r.dsq, x.squaredNorm(), 1e-14);
}

// Against the generic maximizer on the same pencil, which never uses the K-type formulas.
TEST(Ktype, ClosedFormAgreesWithGenericMaximizer) {
    std::mt19937_64 rng(2);
    for (const Mat& B : {sample_b(), Mat(Mat::Identity(3, 3)), Mat(Mat::Identity(1, 1))}) {
        const StepTwoGroup K = make_ktype(B);
        const StepTwoGroup Gg = make_generic(K.utuple.mats());
        for (int k = 0; k < 25; ++k) {
            GroupElement g{gauss(rng, K.q()), gauss(rng, K.m())};
            if (k % 3 == 0) g.x(0) = 0.0;
            const DistanceReport a = kdistance(K, g);
            const DistanceReport b = maximize_phi(Gg, g);
            if (b.lower_bound_only) {
                // the generic boundary supremum is only approached from below
                ASSERT_EQ(a.classification, PointClass::Boundary) << "k=" << k;
                ASSERT_LE(b.dsq, a.dsq + 1e-9 * (1 + a.dsq));
                ASSERT_NEAR(a.dsq, b.dsq, 5e-6 * (1 + a.dsq)) << "k=" << k;
                ASSERT_TRUE(a.covector.has_value());
                ASSERT_LE(endpoint_distance(exp_map(K, *a.covector), g), 1e-9 * (1 + a.dsq));
                ASSERT_NEAR(a.covector->zeta.squaredNorm(), a.dsq, 1e-9 * (1 + a.dsq));
                continue;
            }
            ASSERT_NEAR(a.dsq, b.dsq, 1e-7 * (1 + a.dsq)) << "k=" << k;
            if (a.classification == PointClass::M) EXPECT_EQ(b.classification, PointClass::M);
        }
    }
}

TEST(Ktype, CutRegionMembership) {
    const KTransform K(Mat::Identity(3, 3));
    Vec xs(3), t(3);
    xs << 1, 0, 0;
    // |X.T| <= |X|^2 sqrt(|T_perp| / pi)
    t << 0.5 / std::sqrt(kPi), 1.0, 0.0;
    EXPECT_TRUE(kdist_cut(K, xs, t).in_cut);
    t(0) = 1.01 / std::sqrt(kPi);
    EXPECT_FALSE(kdist_cut(K, xs, t).in_cut);
    // x0 != 0 points are never in the cut region; classification interior
    const StepTwoGroup G = make_ktype(Mat::Identity(3, 3));
    Vec x(4);
    x << 0.2, 1, 0, 0;
    EXPECT_EQ(kdistance(G, {x, t}).classification, PointClass::M);
}

TEST(Ktype, BadGeodesicsFamily) {
    const StepTwoGroup K = make_ktype(Mat::Identity(3, 3));
    const Vec xs = Vec::Zero(3);
    Vec t(3);
    t << 0.2, 0.1, -0.3;
    // x_* = 0: a full circle of shortest geodesics
    const auto fam = kbad_geodesics(K, xs, t, 1, 12);
    ASSERT_EQ(fam.size(), 12u);
    for (const Covector& c : fam) {
        EXPECT_NEAR(c.zeta.squaredNorm(), 4 * kPi * t.norm(), 1e-9);
        EXPECT_LE(endpoint_distance(exp_map(K, c), {Vec::Zero(4), t}), 1e-9);
    }
    // k = 2 geodesics also reach the point but are longer
    const auto fam2 = kbad_geodesics(K, xs, t, 2, 4);
    ASSERT_FALSE(fam2.empty());
    EXPECT_NEAR(fam2.front().zeta.squaredNorm(), 8 * kPi * t.norm(), 1e-9);
    EXPECT_LE(endpoint_distance(exp_map(K, fam2.front()), {Vec::Zero(4), t}), 1e-9);
    EXPECT_THROW(kbad_geodesics(make_n32(), xs, t), ValidationError);
}

TEST(Ktype, ShortestCovectorsOutsideCutAreVerified) {
    std::mt19937_64 rng(3);
    const StepTwoGroup K = make_ktype(sample_b());
    for (int k = 0; k < 30; ++k) {
        const GroupElement g{gauss(rng, 4), gauss(rng, 2)};
        const DistanceReport r = kdistance(K, g);
        ASSERT_TRUE(r.covector.has_value());
        EXPECT_NEAR(r.covector->zeta.squaredNorm(), r.dsq, 1e-8 * (1 + r.dsq));
        EXPECT_LE(endpoint_distance(exp_map(K, *r.covector), g), 1e-8 * (1 + g.x.norm() + g.t.norm()));
    }
}
