#pragma once

// Brute-force checks that only use the exponential map: multistart shooting for distances
// and closed-form versus ODE comparisons of exp.

#include "carnot/geodesics.hpp"
#include "carnot/group.hpp"
#include "carnot/reference.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace carnot {

struct ShootingHit {
    Covector covector;
    double residual = 0.0;
};

struct ShootingResult {
    double best_dsq = std::numeric_limits<double>::infinity();
    std::vector<ShootingHit> hits;  // shortest hits first, at most OracleOptions::keep_hits
    long hit_count = 0;
    long attempts = 0;
    bool found = false;  // false: no hit within the budget, best_dsq carries no information
    double eps = 0.0;
};

struct OracleOptions {
    double eps = -1.0;     // <= 0: 1e-6 (1 + |g|)
    long budget = 10000;   // number of starts
    std::uint64_t seed = 0;
    double margin = -1.0;  // op-norm bound pi (1 + margin); < 0 picks 0.05 on GM groups and 0.5 otherwise
    int keep_hits = 32;
    int max_iter = 80;
    int threads = 0;  // 0: CARNOT_GEO_THREADS or 1
};

inline int oracle_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CARNOT_GEO_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

namespace detail {

struct ShootScratch {
    Vec v;
    double res = std::numeric_limits<double>::infinity();
};

inline Vec shoot_residual(const StepTwoGroup& G, const GroupElement& g, const Vec& v) {
    const int q = G.q(), m = G.m();
    const GroupElement e = exp_map(G, {v.head(q), v.tail(m)});
    Vec r(q + m);
    r << e.x - g.x, e.t - g.t;
    return r;
}

// Levenberg-Marquardt on exp(zeta, 2 theta) = g with a forward-difference Jacobian.
inline ShootScratch shoot_lm(const StepTwoGroup& G, const GroupElement& g, Vec v, double target, double zmax,
                             double thmax, int max_iter) {
    const int n = static_cast<int>(v.size());
    const int q = G.q(), m = G.m();
    Vec r = shoot_residual(G, g, v);
    double f = r.squaredNorm();
    double lam = 1e-3;
    Mat J(n, n);
    for (int it = 0; it < max_iter && std::sqrt(f) > target; ++it) {
        for (int i = 0; i < n; ++i) {
            const double h = 1e-7 * (1.0 + std::abs(v(i)));
            Vec vp = v;
            vp(i) += h;
            J.col(i) = (shoot_residual(G, g, vp) - r) / h;
        }
        const Mat JtJ = J.transpose() * J;
        const Vec Jtr = J.transpose() * r;
        bool accepted = false;
        for (int tries = 0; tries < 12; ++tries) {
            Mat A = JtJ;
            A.diagonal() += lam * (JtJ.diagonal() + Vec::Ones(n));
            const Vec d = A.ldlt().solve(-Jtr);
            const Vec vn = v + d;
            if (!vn.allFinite()) {
                lam *= 10.0;
                continue;
            }
            const Vec rn = shoot_residual(G, g, vn);
            const double fn = rn.squaredNorm();
            if (fn < f) {
                v = vn;
                r = rn;
                f = fn;
                lam = std::max(1e-12, lam / 3.0);
                accepted = true;
                break;
            }
            lam *= 4.0;
        }
        if (!accepted) break;
        if (v.head(q).norm() > 4.0 * zmax || group_op_norm(G, v.tail(m)) > 2.0 * thmax) break;
    }
    return {v, std::sqrt(f)};
}

// Linear part of exp in zeta: x(zeta, theta) = M(theta) zeta.
inline Mat exp_linear_part(const StepTwoGroup& G, const Vec& theta) {
    const int q = G.q();
    Mat M(q, q);
    for (int i = 0; i < q; ++i) M.col(i) = exp_map(G, {Vec::Unit(q, i), theta}).x;
    return M;
}

inline Vec gaussian_vec(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> N(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = N(rng);
    return v;
}

}  // namespace detail

// Multistart shooting: every start is seeded by (seed, index), so a larger budget only adds starts.
inline ShootingResult shoot_distance(const StepTwoGroup& G, const GroupElement& g, const OracleOptions& opt = {}) {
    check_point(G, g);
    const double gn = std::sqrt(g.x.squaredNorm() + g.t.squaredNorm());
    if (gn == 0.0) throw ValidationError("shoot_distance: target is the origin");
    if (opt.budget < 1) throw ValidationError("shoot_distance: budget must be >= 1");
    ShootingResult out;
    out.eps = opt.eps > 0.0 ? opt.eps : 1e-6 * (1.0 + gn);
    const int q = G.q(), m = G.m();
    double margin = opt.margin;
    if (margin < 0.0) {
        const GMStatus st = gm_status(G);
        margin = (st == GMStatus::Certified || st == GMStatus::Evidence) ? 0.05 : 0.5;
    }
    const double zmax = 2.0 * (g.x.norm() + std::sqrt(4.0 * kPi * g.t.norm())) + 1.0;
    const double thmax = kPi * (1.0 + margin);
    const double target = std::min(1e-3 * out.eps, 1e-10 * (1.0 + gn));

    std::vector<detail::ShootScratch> results(static_cast<std::size_t>(opt.budget));
    auto run = [&](long i) {
        std::seed_seq sq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                         static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
        std::mt19937_64 rng(sq);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        Vec dir = detail::gaussian_vec(rng, m);
        while (dir.norm() == 0.0) dir = detail::gaussian_vec(rng, m);
        const double nrm = group_op_norm(G, dir);
        const Vec theta = dir * (thmax * std::pow(U(rng), 1.0 / m) / nrm);
        Vec zeta;
        Vec noise = detail::gaussian_vec(rng, q);
        if (i % 2 == 0) {
            // x is linear in zeta for fixed theta: start on the fibre through x
            const Mat M = detail::exp_linear_part(G, theta);
            const auto cod = M.completeOrthogonalDecomposition();
            const Vec base = cod.solve(g.x);
            const Vec kern = noise - cod.solve(Vec(M * noise));
            zeta = base + kern * (zmax * U(rng) / std::max(1.0, kern.norm())) + 1e-3 * noise;
        } else {
            zeta = noise * (zmax * std::pow(U(rng), 1.0 / q) / std::max(1e-300, noise.norm()));
        }
        Vec v(q + m);
        v << zeta, theta;
        results[static_cast<std::size_t>(i)] = detail::shoot_lm(G, g, v, target, zmax, thmax, opt.max_iter);
    };
    const int nt = std::max(1, std::min<int>(oracle_threads(opt.threads), static_cast<int>(opt.budget)));
    if (nt == 1) {
        for (long i = 0; i < opt.budget; ++i) run(i);
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < nt; ++k)
            pool.emplace_back([&, k] {
                for (long i = k; i < opt.budget; i += nt) run(i);
            });
        for (auto& th : pool) th.join();
    }
    out.attempts = opt.budget;
    for (const auto& r : results) {
        if (!(r.res <= out.eps)) continue;
        ++out.hit_count;
        out.hits.push_back({{r.v.head(q), r.v.tail(m)}, r.res});
    }
    std::stable_sort(out.hits.begin(), out.hits.end(), [](const ShootingHit& a, const ShootingHit& b) {
        return a.covector.zeta.squaredNorm() < b.covector.zeta.squaredNorm();
    });
    if (static_cast<int>(out.hits.size()) > opt.keep_hits) out.hits.resize(static_cast<std::size_t>(opt.keep_hits));
    out.found = !out.hits.empty();
    if (out.found) out.best_dsq = out.hits.front().covector.zeta.squaredNorm();
    return out;
}

inline ShootingResult shoot_distance(const StepTwoGroup& G, const GroupElement& g, double eps, long budget,
                                     std::uint64_t seed = 0) {
    OracleOptions o;
    o.eps = eps;
    o.budget = budget;
    o.seed = seed;
    return shoot_distance(G, g, o);
}

struct ExpConsistency {
    double max_ode_deviation = 0.0;      // |exp_map - exp_map_ode|
    double max_generic_deviation = 0.0;  // |exp_map - exp_generic|, zero when exp_map is already generic
    int samples = 0;
};

// Random covectors with zeta ~ N(0, I) and op_norm(theta) uniform in [0, theta_opnorm_max].
inline ExpConsistency verify_exp_consistency(const StepTwoGroup& G, int samples, std::uint64_t seed = 0,
                                             int steps = 2048, double theta_opnorm_max = 2.0 * kPi) {
    if (samples < 1) throw ValidationError("verify_exp_consistency: samples must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    ExpConsistency out;
    out.samples = samples;
    for (int i = 0; i < samples; ++i) {
        const Vec zeta = detail::gaussian_vec(rng, G.q());
        Vec dir = detail::gaussian_vec(rng, G.m());
        const double nrm = group_op_norm(G, dir);
        const Vec theta = nrm > 0.0 ? Vec(dir * (theta_opnorm_max * U(rng) / nrm)) : Vec(Vec::Zero(G.m()));
        const Covector c{zeta, theta};
        const GroupElement a = exp_map(G, c);
        out.max_ode_deviation = std::max(out.max_ode_deviation, endpoint_distance(a, exp_map_ode(G, c, 1.0, steps)));
        out.max_generic_deviation =
            std::max(out.max_generic_deviation, endpoint_distance(a, exp_map(G, c, 1.0, ExpMode::Generic)));
    }
    return out;
}

}  // namespace carnot
