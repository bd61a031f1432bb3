#include <cmath>

#include "blowup/similarity.hpp"
#include "blowup/spectral.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

ModelParameters critical_params(double p, int N, double gamma) {
    ModelParameters mp;
    mp.p = p;
    mp.N = N;
    mp.gamma = gamma;
    mp.r = critical_r(p, N);
    mp.critical = gamma > 0.0;
    return mp;
}

// synthetic radial frame with W prescribed by a function of y
SimilarityFrame synth_frame(double s, double K0, double p, double y_max, int n,
                            const std::function<double(double)>& Wf) {
    SimilarityFrame fr;
    fr.s = s;
    fr.T_est = std::exp(-s);
    fr.t = 0.0;
    fr.p = p;
    fr.K0 = K0;
    fr.theta_bar = 1.0;
    fr.theta_bar_slope = 0.0;
    fr.y_nodes.resize(n);
    fr.W.resize(n);
    for (int i = 0; i < n; ++i) {
        const double y = y_max * i / (n - 1.0);
        fr.y_nodes[i] = y;
        fr.W[i] = Wf(y);
    }
    fr.w_uncut = fr.W;
    return fr;
}

}  // namespace

TEST_CASE("chi0 plateau, support, and monotone bridge") {
    CHECK(chi0(0.0) == 1.0);
    CHECK(chi0(1.0) == 1.0);
    CHECK(chi0(0.73) == 1.0);
    CHECK(chi0(2.0) == 0.0);
    CHECK(chi0(5.0) == 0.0);
    CHECK(chi0(1.5) == doctest::Approx(0.5).epsilon(1e-14));  // symmetry of the bridge
    double prev = 1.0;
    for (double r = 1.05; r < 2.0; r += 0.05) {
        const double v = chi0(r);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
    // derivative matches finite differences and vanishes outside the bridge
    CHECK(chi0_prime(0.5) == 0.0);
    CHECK(chi0_prime(2.5) == 0.0);
    for (const double r : {1.2, 1.5, 1.8}) {
        const double h = 1e-6;
        const double fd = (chi0(r + h) - chi0(r - h)) / (2.0 * h);
        CHECK(chi0_prime(r) == doctest::Approx(fd).epsilon(1e-7));
        CHECK(chi0_prime(r) < 0.0);
    }
}

TEST_CASE("profile values and closed-form derivatives") {
    const auto mp = critical_params(3, 1, 0.1);
    const ProfileSpec spec(mp, derive_constants(mp));
    CHECK(profile_phi0(spec, 0.0) == doctest::Approx(spec.c.kappa).epsilon(1e-14));
    // b z^2 = p-1 halves the base
    const double z_half = std::sqrt((mp.p - 1.0) / spec.c.b_coef);
    CHECK(profile_phi0(spec, z_half) ==
          doctest::Approx(std::pow(2.0 * (mp.p - 1.0), -1.0 / (mp.p - 1.0))).epsilon(1e-14));
    for (const double z : {0.0, 0.3, 1.0, 4.0, 20.0}) {
        // second differences need a larger step to stay above roundoff
        const double h = 1e-4 * std::max(1.0, std::abs(z));
        const double fd1 = (profile_phi0(spec, z + h) - profile_phi0(spec, z - h)) / (2.0 * h);
        const double fd2 = (profile_phi0(spec, z + h) - 2.0 * profile_phi0(spec, z) +
                            profile_phi0(spec, z - h)) /
                           (h * h);
        CHECK(profile_phi0_prime(spec, z) == doctest::Approx(fd1).epsilon(1e-7));
        CHECK(profile_phi0_second(spec, z) == doctest::Approx(fd2).epsilon(1e-5));
    }
    // phi approaches kappa from the profile plus a strictly decreasing a/s term
    double prev_gap = 1e300;
    for (const double s : {10.0, 100.0, 1000.0, 10000.0}) {
        const double gap = std::abs(profile_phi(spec, 1.0, s) - spec.c.kappa);
        CHECK(gap < prev_gap);
        prev_gap = gap;
        CHECK(profile_phi(spec, 1.0, s) - profile_phi0(spec, 1.0 / std::sqrt(s)) ==
              doctest::Approx(spec.c.a_coef / s).epsilon(1e-14));
    }
    CHECK_THROWS(profile_phi(spec, 1.0, 0.0));
}

TEST_CASE("to_similarity maps exact self-similar data to the constant kappa") {
    const auto mp = critical_params(3, 1, 0.0);
    const auto c = derive_constants(mp);
    const double T = 1.0, t = 0.99, theta = 0.7, K0 = 4.0;
    const double scale = std::pow((T - t) * theta, -1.0 / (mp.p - 1.0));
    const auto g = build_grid(1.0, 101, 1, GridSpacing::uniform);
    const auto u = make_field(g, [&](double) { return scale * c.kappa; });
    const auto fr = to_similarity(u, t, T, theta, K0, mp);
    CHECK(fr.s == doctest::Approx(-std::log(T - t)).epsilon(1e-14));
    // all nodes sit inside the chi1 plateau at this s
    for (size_t i = 0; i < fr.W.size(); ++i) {
        CHECK(fr.y_nodes[i] == doctest::Approx(g->nodes[i] / std::sqrt(T - t)).epsilon(1e-14));
        CHECK(fr.W[i] == doctest::Approx(c.kappa).epsilon(1e-13));
    }
    CHECK_THROWS(to_similarity(u, 1.0, T, theta, K0, mp));
    CHECK_THROWS(to_similarity(u, t, T, 0.0, K0, mp));
}

TEST_CASE("from_similarity inverts to_similarity") {
    const auto mp = critical_params(3, 1, 0.0);
    const double K0 = 4.0;
    const auto g = build_grid(1.0, 101, 1, GridSpacing::uniform);
    const auto u = make_field(g, [](double x) { return 2.0 + std::cos(3.14159 * x); });

    SUBCASE("all nodes on the plateau") {
        const double T = 1.0, t = 0.99, theta = 0.9;
        const auto fr = to_similarity(u, t, T, theta, K0, mp);
        const auto rec = from_similarity(fr, mp.N);
        CHECK(rec.t == t);
        CHECK(rec.n_reliable == 101);
        for (size_t i = 0; i < u.values.size(); ++i) {
            CHECK(rec.u.grid->nodes[i] == doctest::Approx(g->nodes[i]).epsilon(1e-12));
            CHECK(rec.u.values[i] == doctest::Approx(u.values[i]).epsilon(1e-12));
        }
    }
    SUBCASE("short log time leaves outer nodes unreliable") {
        const double T = 1.0, t = 0.1, theta = 0.9;
        const auto fr = to_similarity(u, t, T, theta, K0, mp);
        const auto rec = from_similarity(fr, mp.N);
        const double s = -std::log(T - t);
        CHECK(rec.n_reliable < 101);
        CHECK(rec.n_reliable > 0);
        // the reliable prefix is exactly the chi1 = 1 region (the plateau plus
        // the sliver where the bridge term underflows to zero)
        CHECK(chi1_of_y(fr.y_nodes[rec.n_reliable], s, K0) < 1.0);
        for (int i = 0; i < rec.n_reliable; ++i) {
            CHECK(chi1_of_y(fr.y_nodes[i], s, K0) == 1.0);
            CHECK(rec.u.values[i] == doctest::Approx(u.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("compute_q vanishes on the profile and is affine in W") {
    const auto mp = critical_params(3, 1, 0.1);
    const ProfileSpec spec(mp, derive_constants(mp));
    const double s = 25.0;
    auto fr = synth_frame(s, 4.0, mp.p, 30.0, 501,
                          [&](double y) { return profile_phi(spec, y, s); });
    const auto q = compute_q(fr, spec);
    for (const double qi : q) CHECK(std::abs(qi) < 1e-14);
    for (auto& Wi : fr.W) Wi += 0.37;
    const auto q_shift = compute_q(fr, spec);
    for (const double qi : q_shift) CHECK(qi == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("quadratic term obeys the pointwise Taylor bound") {
    const auto mp = critical_params(3, 1, 0.02);
    const auto c = derive_constants(mp);
    const ProfileSpec spec(mp, c);
    const double s = 20.0, K0 = 4.0;
    const double y_max = K0 * std::sqrt(s);
    auto fr = synth_frame(s, K0, mp.p, y_max, 801, [&](double y) {
        return profile_phi(spec, y, s) * 1.1;  // q = phi/10
    });
    const auto q = compute_q(fr, spec);
    const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
    for (size_t i = 0; i < q.size(); ++i) {
        const double phi = profile_phi(spec, fr.y_nodes[i], s);
        const double bound = 0.5 * mp.p * (mp.p - 1.0) *
                             std::pow(phi + std::abs(q[i]), mp.p - 2.0) * q[i] * q[i];
        CHECK(std::abs(terms.B[i]) <= bound * (1.0 + 1e-12));
        CHECK(terms.B[i] != 0.0);
    }
}

TEST_CASE("rest term decays like 1/s in sup norm") {
    const auto mp = critical_params(3, 1, 0.02);
    const ProfileSpec spec(mp, derive_constants(mp));
    const double K0 = 4.0;
    const auto sup_R = [&](double s) {
        const double y_max = K0 * std::sqrt(s);
        auto fr = synth_frame(s, K0, mp.p, y_max, 2001,
                              [&](double y) { return profile_phi(spec, y, s); });
        const auto q = compute_q(fr, spec);
        const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
        double sup = 0.0;
        for (const double v : terms.R) sup = std::max(sup, std::abs(v));
        return sup;
    };
    const double s = 1000.0;
    const double ratio = sup_R(2.0 * s) / sup_R(s);
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
}

TEST_CASE("rest term origin limit matches kappa beta/(p-1)") {
    // R(0,s) s -> a - 2 b N kappa/(p-1)^2, the beta part of a
    for (const auto& [p, N, gamma] : {std::tuple{3.0, 1, 0.02}, {4.0, 2, 0.05}}) {
        CAPTURE(p);
        const auto mp = critical_params(p, N, gamma);
        const auto c = derive_constants(mp);
        const ProfileSpec spec(mp, c);
        const double target = c.kappa * c.beta / (mp.p - 1.0);
        const double s = 1000.0;
        auto fr = synth_frame(s, 4.0, mp.p, 10.0, 101,
                              [&](double y) { return profile_phi(spec, y, s); });
        const auto q = compute_q(fr, spec);
        const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
        CHECK(std::abs(terms.R[0] * s - target) < 0.05 * std::abs(target));
        CHECK(target == doctest::Approx(c.a_coef - 2.0 * c.b_coef * mp.N * c.kappa /
                                                        ((mp.p - 1.0) * (mp.p - 1.0)))
                            .epsilon(1e-12));
    }
}

TEST_CASE("potential flattens to -p/(p-1) far outside the blowup region") {
    // V + p/(p-1) = p phi^{p-1} identically; the 1e-3 smallness holds from z ~ 100
    const auto mp = critical_params(3, 1, 0.0);
    const ProfileSpec spec(mp, derive_constants(mp));
    const double s = 1000.0;
    const double y_max = 100.0 * std::sqrt(s);
    auto fr = synth_frame(s, 4.0, mp.p, y_max, 4001,
                          [&](double y) { return profile_phi(spec, y, s); });
    const auto q = compute_q(fr, spec);
    const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
    for (size_t i = 0; i < fr.y_nodes.size(); i += 400) {
        const double phi = profile_phi(spec, fr.y_nodes[i], s);
        CHECK(terms.V[i] + mp.p / (mp.p - 1.0) ==
              doctest::Approx(mp.p * std::pow(phi, mp.p - 1.0)).epsilon(1e-12));
    }
    CHECK(std::abs(terms.V.back() + mp.p / (mp.p - 1.0)) < 1e-3);
}

TEST_CASE("potential origin limit: pointwise pa/kappa, projected pa/kappa - 2Nbp/(p-1)^2") {
    const auto mp = critical_params(3, 1, 0.02);
    const auto c = derive_constants(mp);
    const ProfileSpec spec(mp, c);
    const double s = 10000.0;
    const double pm1 = mp.p - 1.0;
    auto fr = synth_frame(s, 4.0, mp.p, 40.0, 4001,
                          [&](double y) { return profile_phi(spec, y, s); });
    const auto q = compute_q(fr, spec);
    const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
    const double pointwise = mp.p * c.a_coef / c.kappa;
    CHECK(std::abs(terms.V[0] * s - pointwise) < 0.05 * pointwise);
    // rho-weighted mean over the 1-d axis picks up the -2Nbp/(p-1)^2 shift (N = 1)
    const auto axis = even_extension(fr.y_nodes, terms.V);
    const double p0 = project(axis, 0);
    const double projected = pointwise - 2.0 * c.b_coef * mp.p / (pm1 * pm1);
    CHECK(std::abs(p0 * s - projected) < 0.05 * std::abs(projected));
}

TEST_CASE("source term reduces to the theta drift inside the plateau") {
    const auto mp = critical_params(3, 1, 0.02);
    const ProfileSpec spec(mp, derive_constants(mp));
    const double s = 25.0, K0 = 4.0;
    const double slope = -spec.c.beta / s;
    auto fr = synth_frame(s, K0, mp.p, 30.0, 601,
                          [&](double y) { return profile_phi(spec, y, s); });
    fr.theta_bar_slope = slope;
    const auto q = compute_q(fr, spec);
    const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
    // y_max = 30 < K0 s = 100: chi1 = 1 everywhere, so F~ = 0 and G is the drift
    for (size_t i = 0; i < fr.y_nodes.size(); i += 60) {
        const double want = (slope / (mp.p - 1.0) - std::exp(-s)) * fr.W[i];
        CHECK(terms.G[i] == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("source commutator is supported on the cutoff bridge") {
    const auto mp = critical_params(3, 1, 0.0);
    const ProfileSpec spec(mp, derive_constants(mp));
    // small s so the bridge K0 s < |y| < 2 K0 s sits inside the sampled range
    const double s = 2.0, K0 = 1.0;
    auto fr = synth_frame(s, K0, mp.p, 8.0, 3201, [&](double) { return 1.0; });
    for (size_t i = 0; i < fr.y_nodes.size(); ++i)
        fr.W[i] = fr.w_uncut[i] * chi1_of_y(fr.y_nodes[i], s, K0);
    const auto q = compute_q(fr, spec);
    const auto terms = eval_linearization_terms(q, fr, spec, mp.N);
    double g_plateau = 0.0, g_bridge = 0.0, g_outside = 0.0;
    for (size_t i = 0; i < fr.y_nodes.size(); ++i) {
        const double y = fr.y_nodes[i];
        const double drift = -std::exp(-s) * (q[i] + profile_phi(spec, y, s));
        const double commutator = std::abs(terms.G[i] - drift);
        if (y < K0 * s * 0.9)
            g_plateau = std::max(g_plateau, commutator);
        else if (y > K0 * s && y < 2.0 * K0 * s)
            g_bridge = std::max(g_bridge, commutator);
        else if (y > 2.0 * K0 * s * 1.05)
            g_outside = std::max(g_outside, commutator);
    }
    CHECK(g_plateau < 1e-12);
    CHECK(g_bridge > 0.01);
    CHECK(g_outside < 1e-8);
}

TEST_CASE("frame csv carries the s stamp and q column") {
    const auto mp = critical_params(3, 1, 0.0);
    const ProfileSpec spec(mp, derive_constants(mp));
    const double s = 9.0;
    auto fr = synth_frame(s, 4.0, mp.p, 5.0, 6,
                          [&](double y) { return profile_phi(spec, y, s) + 0.25; });
    const auto csv = frame_to_csv(fr, spec);
    CHECK(csv.find("s=9") != std::string::npos);
    CHECK(csv.find("y,W,phi,q") != std::string::npos);
    // every data row ends with q = 0.25
    size_t rows = 0;
    size_t pos = csv.find('\n', csv.find("y,W,phi,q"));
    while (pos != std::string::npos && pos + 1 < csv.size()) {
        const size_t next = csv.find('\n', pos + 1);
        if (next == std::string::npos) break;
        const std::string row = csv.substr(pos + 1, next - pos - 1);
        const size_t last_comma = row.rfind(',');
        REQUIRE(last_comma != std::string::npos);
        CHECK(std::stod(row.substr(last_comma + 1)) == doctest::Approx(0.25).epsilon(1e-12));
        ++rows;
        pos = next;
    }
    CHECK(rows == 6);
}
