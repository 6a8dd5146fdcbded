#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace carnot;
using namespace testutil;

TEST(N32, RegionLabels) {
    EXPECT_EQ(n32_region(0.0, 0.0).region, N32Region::XOnly);
    EXPECT_EQ(n32_region(1.0, 0.0).region, N32Region::Axis);
    EXPECT_EQ(n32_region(1.0, 3.0).region, N32Region::Plus);
    EXPECT_EQ(n32_region(1.0, 0.5).region, N32Region::Minus4);
    EXPECT_EQ(n32_region(kPi, 2.0).region, N32Region::BoundaryCurve);
    EXPECT_EQ(n32_region(0.0, 1.0).region, N32Region::Plus);
    EXPECT_THROW(n32_region(-1.0, 1.0), ValidationError);
    EXPECT_THROW(n32_region(1.0, std::nan("")), ValidationError);
    EXPECT_STREQ(n32_region_name(N32Region::Minus4), "minus4");
}

TEST(N32, LambdaInverseRoundTrip) {
    std::mt19937_64 rng(1);
    int plus = 0, minus = 0;
    for (int k = 0; k < 400; ++k) {
        const double u1 = std::exp(uniform(rng, -4.0, 3.0));
        const double bu = n32_boundary_u2(u1);
        const bool up = k % 2 == 0;
        const double u2 = up ? bu * std::exp(uniform(rng, 0.01, 3.0)) : bu * uniform(rng, 0.02, 0.98);
        const N32Branch b = up ? N32Branch::Plus : N32Branch::Minus4;
        const LambdaInverse li = lambda_inverse(u1, u2, b);
        ASSERT_TRUE(lambda_branch_contains(b, li.theta1, li.theta2)) << u1 << " " << u2;
        const auto v = lambda_map(li.theta1, li.theta2);
        ASSERT_LE(std::hypot(v[0] - u1, v[1] - u2), 1e-10 * (1 + std::hypot(u1, u2)));
        (up ? plus : minus)++;
    }
    EXPECT_EQ(plus, 200);
    EXPECT_EQ(minus, 200);
    EXPECT_THROW(lambda_inverse(1.0, 0.5, N32Branch::Plus), DomainError);
    EXPECT_THROW(lambda_inverse(1.0, 3.0, N32Branch::Minus4), DomainError);
}

TEST(N32, XiInverseRoundTrip) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 200; ++k) {
        const double u1 = std::exp(uniform(rng, -3.0, 3.0));
        const double u2 = n32_boundary_u2(u1) * uniform(rng, 0.05, 3.0);
        const XiInverse xi = xi_inverse(u1, u2);
        ASSERT_TRUE(xi_domain_contains(xi.r, xi.rho, 1e-9));
        const auto v = xi_map(xi.r, xi.rho);
        ASSERT_LE(std::hypot(v[0] - u1, v[1] - u2), 1e-9 * (1 + std::hypot(u1, u2)));
    }
    // explicit line r = pi
    const auto v = xi_eval(kPi, 0.7);
    EXPECT_NEAR(v[0], kPi * 0.49, 1e-12);
    EXPECT_NEAR(v[1], 1.4, 1e-12);
    EXPECT_THROW(xi_map(1.0, 2.0), DomainError);
    EXPECT_THROW(xi_inverse(0.0, 1.0), ValidationError);
}

TEST(N32, AxisRootEquation) {
    for (double beta : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
        const double r = dcutp_root(beta);
        EXPECT_GT(r, kPi);
        EXPECT_LT(r, special::vartheta1());
        EXPECT_NEAR(dcutp_lhs(r), beta, 1e-10 * (1 + beta));
    }
    EXPECT_THROW(dcutp_root(0.0), ValidationError);
}

TEST(N32, BoundaryCurveContinuity) {
    for (double u1 : {0.01, 0.5, 3.0, 40.0}) {
        const double bu = n32_boundary_u2(u1);
        const double on = n32_distance_canonical(u1, bu);
        EXPECT_NEAR(on, 1.0 + kPi * u1, 1e-14 * (1 + on));
        for (double e : {1e-5, 1e-7}) {
            EXPECT_NEAR(n32_distance_canonical(u1, bu * (1 + e)), on, 50 * e * (1 + on)) << u1;
            EXPECT_NEAR(n32_distance_canonical(u1, bu * (1 - e)), on, 50 * e * (1 + on)) << u1;
        }
    }
}

// The plus region is the interior of the reference set, where the generic maximizer is exact.
TEST(N32, PlusRegionMatchesGenericMaximizer) {
    std::mt19937_64 rng(3);
    const StepTwoGroup Gg = make_generic(make_n32().utuple.mats());
    int checked = 0;
    for (int k = 0; k < 60; ++k) {
        const Vec x = gauss(rng, 3), t = 0.5 * gauss(rng, 3);
        const N32Frame f = n32_frame(x, t);
        const double R2 = f.R * f.R;
        const RegionPoint rp = n32_region(4 * std::abs(f.t1) / R2, 4 * f.t2 / R2);
        if (rp.region != N32Region::Plus || rp.margin < 1e-3) continue;
        const DistanceReport b = maximize_phi(Gg, {x, t});
        ASSERT_EQ(b.classification, PointClass::M);
        ASSERT_NEAR(n32_distance(x, t), b.dsq, 1e-8 * (1 + b.dsq));
        ++checked;
    }
    EXPECT_GE(checked, 20);
}

TEST(N32, ReportCovectorsReachTarget) {
    std::mt19937_64 rng(4);
    const StepTwoGroup N = make_n32();
    const StepTwoGroup Gg = make_generic(N.utuple.mats());
    int minus = 0;
    for (int k = 0; k < 80; ++k) {
        const GroupElement g{gauss(rng, 3), std::exp(uniform(rng, -2.0, 1.0)) * gauss(rng, 3)};
        const DistanceReport r = n32_report(g);
        ASSERT_TRUE(r.covector.has_value());
        ASSERT_LE(endpoint_distance(exp_map(N, *r.covector), g), 1e-8 * (1 + g.x.norm() + g.t.norm()));
        ASSERT_NEAR(r.covector->zeta.squaredNorm(), r.dsq, 1e-8 * (1 + r.dsq));
        if (r.classification == PointClass::SmoothNonReference) {
            // the sup of phi is only a lower bound off the reference set
            ++minus;
            EXPECT_GE(r.dsq, maximize_phi(Gg, g).dsq - 1e-9 * (1 + r.dsq));
        }
    }
    EXPECT_GT(minus, 0);
}

TEST(N32, ScalingRotationAndSigns) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 40; ++k) {
        const Vec x = gauss(rng, 3), t = gauss(rng, 3);
        const double d = n32_distance(x, t);
        for (double s : {0.3, 4.0}) EXPECT_NEAR(n32_distance(s * x, s * s * t), s * s * d, 1e-9 * s * s * d);
        EXPECT_NEAR(n32_distance(-x, t), d, 1e-10 * d);
        EXPECT_NEAR(n32_distance(x, -t), d, 1e-10 * d);
        const Mat O = random_orthogonal(rng, 3);
        EXPECT_NEAR(n32_distance(O * x, O * t), d, 1e-9 * d);
    }
    EXPECT_NEAR(n32_distance(Vec::Zero(3), Vec::Unit(3, 2)), 4 * kPi, 1e-14);
    EXPECT_NEAR(n32_distance(Vec::Constant(3, 1.0), Vec::Zero(3)), 3.0, 1e-14);
    EXPECT_THROW(n32_distance(Vec::Zero(2), Vec::Zero(3)), ValidationError);
}

TEST(N32, CutLocusFamilies) {
    const StepTwoGroup N = make_n32();
    Vec x(3), t(3);
    x << 1.0, 2.0, -0.5;
    for (double lam : {0.3, -0.8}) {
        t = lam * x;
        EXPECT_TRUE(n32_cut_classify(x, t).in_cut);
        EXPECT_EQ(n32_cut_classify(x, t).kind, "classical");
        const N32CutFamily fam = n32_shortest_at_cut(x, t, 16);
        EXPECT_EQ(fam.kind, "parallel");
        ASSERT_EQ(fam.samples.size(), 16u);
        EXPECT_LE(fam.max_residual, 1e-8);
        EXPECT_NEAR(fam.dsq, n32_distance(x, t), 1e-9 * fam.dsq);
        // distinct geodesics, same length
        EXPECT_GT((fam.samples[0].zeta - fam.samples[4].zeta).norm(), 1e-3);
        EXPECT_EQ(n32_report({x, t}).classification, PointClass::Cut);
    }
    const N32CutFamily ta = n32_shortest_at_cut(Vec::Zero(3), x, 8);
    EXPECT_EQ(ta.kind, "t-axis");
    EXPECT_NEAR(ta.dsq, 4 * kPi * x.norm(), 1e-12);
    for (const Covector& c : ta.samples) EXPECT_LE(endpoint_distance(exp_map(N, c), {Vec::Zero(3), x}), 1e-8);
    const N32CutFamily ax = n32_shortest_at_cut(x, Vec::Zero(3));
    EXPECT_EQ(ax.kind, "abnormal-axis");
    EXPECT_EQ(n32_cut_classify(x, Vec::Zero(3)).kind, "abnormal-axis");
    EXPECT_FALSE(n32_cut_classify(x, Vec::Unit(3, 0)).in_cut);
    EXPECT_THROW(n32_shortest_at_cut(x, Vec::Unit(3, 0)), ValidationError);
}

TEST(N32, RegionBoundaryCurves) {
    const auto curves = region_boundary_curves(100, 10.0);
    int c1 = 0, c2 = 0;
    for (const CurvePoint& p : curves) {
        ASSERT_LE(p.rho, 10.0);
        if (p.curve_id == 1) {
            ++c1;
            EXPECT_NEAR(p.rho * std::sin(p.r), 1.0, 1e-14);
        } else {
            ++c2;
            EXPECT_GT(p.r, kPi);
            EXPECT_NEAR(p.rho * p.rho * special::h(p.r) + 2 * p.r * p.r * special::psi(p.r), 0.0, 1e-9 * (1 + p.rho * p.rho));
        }
    }
    EXPECT_GT(c1, 0);
    EXPECT_GT(c2, 0);
    EXPECT_THROW(region_boundary_curves(1), ValidationError);
}
