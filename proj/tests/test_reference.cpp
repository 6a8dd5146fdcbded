#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace carnot;
using namespace testutil;

namespace {

// <sqrt(S) cot sqrt(S) x, x> + 4 t.theta with S = -U(theta)^2, from a plain eigen solve.
double phi_oracle(const StepTwoGroup& G, const GroupElement& g, const Vec& theta) {
    Mat u = Mat::Zero(G.q(), G.q());
    for (int j = 0; j < G.m(); ++j) u += theta(j) * G.utuple[j];
    const Mat S = -(u * u);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
    double v = 4.0 * g.t.dot(theta);
    for (int i = 0; i < G.q(); ++i) {
        const double l = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
        const double c = l < 1e-8 ? 1.0 - l * l / 3.0 : l / std::tan(l);
        const double y = es.eigenvectors().col(i).dot(g.x);
        v += c * y * y;
    }
    return v;
}

std::vector<StepTwoGroup> sample_groups() {
    std::mt19937_64 rng(99);
    Mat B(2, 3);
    B << 1.0, 0.5, 0.0, 0.3, 1.0, -1.0;
    return {make_heisenberg(), make_ktype(B), make_cr(cr_a5()), make_n32(), random_group(rng, 5, 2),
            random_group(rng, 6, 3)};
}

}  // namespace

TEST(Reference, PhiMatchesEigenOracle) {
    std::mt19937_64 rng(1);
    for (const StepTwoGroup& G : sample_groups()) {
        const StepTwoGroup Gg = make_generic(G.utuple.mats());
        for (int k = 0; k < 100; ++k) {
            const GroupElement g{gauss(rng, G.q()), gauss(rng, G.m())};
            const Vec th = random_theta(rng, G, 0.99 * kPi);
            const double want = phi_oracle(G, g, th);
            const double scale = 1.0 + std::abs(want);
            ASSERT_NEAR(phi(G, g, th).value, want, 1e-9 * scale) << family_name(G.family);
            ASSERT_NEAR(phi(Gg, g, th).value, want, 1e-9 * scale);
        }
    }
}

TEST(Reference, PhiGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(2);
    for (const StepTwoGroup& G : sample_groups()) {
        for (int k = 0; k < 30; ++k) {
            const GroupElement g{gauss(rng, G.q()), gauss(rng, G.m())};
            const Vec th = random_theta(rng, G, 0.9 * kPi);
            const PhiEval e = phi(G, g, th, true);
            ASSERT_TRUE(e.gradient.has_value());
            Vec fd(G.m());
            for (int j = 0; j < G.m(); ++j) {
                Vec a = th, b = th;
                a(j) += 1e-6;
                b(j) -= 1e-6;
                fd(j) = (phi_oracle(G, g, a) - phi_oracle(G, g, b)) / 2e-6;
            }
            ASSERT_LE((*e.gradient - fd).norm(), 1e-5 * (1.0 + fd.norm())) << family_name(G.family);
        }
    }
}

TEST(Reference, PhiTrivialValues) {
    std::mt19937_64 rng(3);
    for (const StepTwoGroup& G : sample_groups()) {
        const GroupElement g{gauss(rng, G.q()), gauss(rng, G.m())};
        EXPECT_NEAR(phi(G, g, Vec::Zero(G.m())).value, g.x.squaredNorm(), 1e-14 * (1 + g.x.squaredNorm()));
        const Vec th = random_theta(rng, G, 3.0);
        EXPECT_NEAR(phi(G, {Vec::Zero(G.q()), g.t}, th).value, 4.0 * g.t.dot(th), 1e-13);
    }
}

TEST(Reference, PhiDomainAndBoundary) {
    const StepTwoGroup P5 = make_cr(cr_a5());
    const GroupElement g0{Vec::Zero(6), Vec::Unit(2, 0)};
    Vec th0(2);
    th0 << kPi, 0.0;
    const PhiEval b = phi(P5, g0, th0);
    EXPECT_TRUE(b.on_boundary);
    EXPECT_NEAR(b.value, 4.0 * kPi, 1e-12);
    EXPECT_THROW(phi(P5, g0, 1.01 * th0), DomainError);
    const GroupElement g1{Vec::Unit(6, 0), Vec::Unit(2, 0)};
    EXPECT_FALSE(phi(P5, g1, th0).finite);
    EXPECT_TRUE(omega_star_contains(make_n32(), Vec::Constant(3, 3.0 / std::sqrt(3.0))));
    EXPECT_FALSE(omega_star_contains(make_heisenberg(), Vec::Constant(1, kPi)));
}

TEST(Reference, ConcavityOfPhi) {
    std::mt19937_64 rng(4);
    for (const StepTwoGroup& G : sample_groups()) {
        for (int k = 0; k < 80; ++k) {
            const GroupElement g{gauss(rng, G.q()), gauss(rng, G.m())};
            const Vec th = random_theta(rng, G, 0.95 * kPi);
            const Mat H = phi_hessian(G, g, th);
            const double top = Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().maxCoeff();
            ASSERT_LE(top, 1e-6 * (1.0 + g.x.squaredNorm())) << family_name(G.family);
        }
    }
}

TEST(Reference, MaximizeExamples) {
    const StepTwoGroup H = make_heisenberg();
    const DistanceReport h = maximize_phi(H, {Vec::Zero(2), Vec::Constant(1, 0.7)});
    EXPECT_NEAR(h.dsq, 4 * kPi * 0.7, 1e-7);
    EXPECT_EQ(h.classification, PointClass::Boundary);

    std::mt19937_64 rng(5);
    const StepTwoGroup G = random_group(rng, 5, 2);
    const Vec x = gauss(rng, 5);
    const DistanceReport r = maximize_phi(G, {x, Vec::Zero(2)});
    EXPECT_NEAR(r.dsq, x.squaredNorm(), 1e-9);
    EXPECT_LE(r.maximizer.norm(), 1e-8);

    const StepTwoGroup K = make_ktype(Mat::Identity(3, 3));
    Vec xk(4);
    xk << 0, 1, -2, 0.5;
    const DistanceReport k = maximize_phi(K, {xk, Vec::Zero(3)});
    EXPECT_EQ(k.classification, PointClass::M2tilde);
    EXPECT_NEAR(k.dsq, xk.squaredNorm(), 1e-9);

    const DistanceReport o = maximize_phi(G, {Vec::Zero(5), Vec::Zero(2)});
    EXPECT_EQ(o.classification, PointClass::Origin);
    EXPECT_EQ(o.dsq, 0.0);
}

TEST(Reference, InteriorReportIsConsistent) {
    std::mt19937_64 rng(6);
    for (const StepTwoGroup& G : sample_groups()) {
        for (int k = 0; k < 15; ++k) {
            const GroupElement g{gauss(rng, G.q()), 0.3 * gauss(rng, G.m())};
            const DistanceReport r = maximize_phi(G, g);
            ASSERT_GE(r.dsq, g.x.squaredNorm() - 1e-9);
            // never below any sampled value
            for (int j = 0; j < 20; ++j) {
                const Vec th = random_theta(rng, G, 0.999 * kPi);
                ASSERT_GE(r.dsq, phi_oracle(G, g, th) - 1e-9 * (1 + r.dsq));
            }
            if (r.classification == PointClass::M) {
                ASSERT_TRUE(r.covector.has_value());
                EXPECT_NEAR(r.dsq, phi_oracle(G, g, r.maximizer), 1e-8 * (1 + r.dsq));
                EXPECT_NEAR(r.covector->zeta.squaredNorm(), r.dsq, 1e-8 * (1 + r.dsq));
                EXPECT_LE(endpoint_distance(exp_map(G, *r.covector), g), 1e-8 * (1 + g.x.norm() + g.t.norm()));
            }
        }
    }
}

TEST(Reference, RecoverCovector) {
    std::mt19937_64 rng(7);
    const StepTwoGroup G = random_group(rng, 4, 2);
    const Vec x = gauss(rng, 4);
    const Covector c = recover_covector(G, {x, Vec::Zero(2)}, Vec::Zero(2));
    EXPECT_LE((c.zeta - x).norm(), 1e-14);
    // a non-critical theta is rejected
    const GroupElement g{x, gauss(rng, 2)};
    EXPECT_THROW(recover_covector(G, g, Vec::Constant(2, 0.3)), SolverError);
    // the boundary point has no interior critical point
    Vec th0(2);
    th0 << kPi, 0.0;
    EXPECT_THROW(recover_covector(make_cr(cr_a5()), {Vec::Zero(6), Vec::Unit(2, 0)}, th0), DomainError);
}

TEST(Reference, SymmetryAndScaling) {
    std::mt19937_64 rng(8);
    for (const StepTwoGroup& G : sample_groups()) {
        if (gm_status(G) == GMStatus::NotGM) continue;
        for (int k = 0; k < 10; ++k) {
            const GroupElement g{gauss(rng, G.q()), gauss(rng, G.m())};
            const double d = maximize_phi(G, g).dsq;
            EXPECT_NEAR(maximize_phi(G, {-g.x, g.t}).dsq, d, 1e-9 * d);
            EXPECT_NEAR(maximize_phi(G, {g.x, -g.t}).dsq, d, 1e-9 * d);
            for (double r : {0.5, 2.0}) EXPECT_NEAR(maximize_phi(G, dilate(g, r)).dsq, r * r * d, 1e-8 * r * r * d);
        }
    }
}

TEST(Reference, SemiconcavityProbeOnSmoothPoint) {
    std::mt19937_64 rng(9);
    const StepTwoGroup G = make_ktype(Mat::Identity(2, 2));
    Vec x(3);
    x << 0.8, 0.3, -0.4;
    const GroupElement g{x, Vec::Constant(2, 0.1)};
    ASSERT_EQ(distance(G, g).classification, PointClass::M);
    const auto p = semiconcavity_probe(G, g, Vec::Unit(2, 1), {1e-2, 1e-3});
    // smooth: Delta/h -> 0 linearly in h
    EXPECT_LT(std::abs(p.ratio[1]), 0.2 * std::abs(p.ratio[0]) + 1e-6);
    EXPECT_THROW(semiconcavity_probe(G, g, Vec::Zero(2), {1e-2}), ValidationError);
}

TEST(Reference, FlatDirection) {
    const StepTwoGroup K = make_ktype(Mat::Identity(3, 3));
    Vec x(4);
    x << 0, 1, 0, 0;
    const Vec nu = flat_direction(K, {x, Vec::Zero(3)});
    EXPECT_NEAR(nu.norm(), 1.0, 1e-12);
    // phi is constant along the flat direction
    const double base = phi(K, {x, Vec::Zero(3)}, Vec::Zero(3)).value;
    EXPECT_NEAR(phi(K, {x, Vec::Zero(3)}, 0.5 * nu).value, base, 1e-10);
    EXPECT_THROW(flat_direction(K, {Vec::Unit(4, 0), Vec::Constant(3, 0.1)}), ValidationError);
}
