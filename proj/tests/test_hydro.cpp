#include <gtest/gtest.h>

#include <limits>

#include "support.hpp"

using namespace gpelab;
using namespace gpelab::testing;

namespace {

WaveState wave(const TorusField& psi, const TorusField& rho0, double eps, double alpha) {
    return {psi, eps, alpha, rho0, 0.0};
}

InitialDataSpec generic_spec(const TorusGrid& g) {
    return {TorusField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); }),
            TorusField::sample(g, [](double x, double) { return 0.5 * std::cos(x) + 0.3 * std::sin(2 * x); }),
            TorusField::sample(g, [](double x, double) { return 0.3 * std::sin(x) + 0.2 * std::cos(2 * x); }),
            {0.0, 0.0},
            {}};
}

}  // namespace

TEST(Observables, PlaneWave) {
    TorusGrid g(1, 32);
    const double eps = 0.2, alpha = 1.0;
    const int k = 2;
    auto psi = TorusField::sample_complex(g, [&](double x, double) { return std::polar(1.0, k * x); });
    auto h = observables(wave(psi, TorusField::constant(g, 1.0), eps, alpha));
    for (std::size_t i = 0; i < g.points(); ++i) {
        EXPECT_NEAR(h.rho.re(0, i), 1.0, 1e-14);
        EXPECT_NEAR(h.J.re(0, i), eps * k, 1e-13);
        EXPECT_NEAR(h.e.re(0, i), 0.5 * eps * eps * k * k, 1e-13);
        EXPECT_NEAR(h.phi.re(0, i), 0.0, 1e-13);
    }
}

TEST(Observables, RealWavefunctionCarriesNoCurrent) {
    TorusGrid g(1, 64);
    const double eps = 0.1, alpha = 1.0;
    auto rho0 = TorusField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); });
    auto psi = map_real(rho0, [](double r) { return std::sqrt(r); });
    auto h = observables(wave(psi, rho0, eps, alpha));
    EXPECT_LT(h.J.max_abs(), 1e-15);
    for (std::size_t i = 0; i < g.points(); ++i) {
        double x = g.coordinates(i)[0];
        double ds = -0.15 * std::sin(x) / std::sqrt(1.0 + 0.3 * std::cos(x));
        EXPECT_NEAR(h.e.re(0, i), 0.5 * eps * eps * ds * ds, 1e-12);
    }
}

TEST(Observables, CurrentOfModulatedPhase) {
    TorusGrid g(1, 64);
    const double eps = 0.1, alpha = 1.0;
    auto psi = TorusField::sample_complex(g, [&](double x, double) {
        return std::polar(std::sqrt(1.0 + eps * std::cos(x)), std::sin(x) / std::pow(eps, alpha));
    });
    auto h = observables(wave(psi, TorusField::constant(g, 1.0), eps, alpha));
    for (std::size_t i = 0; i < g.points(); ++i) {
        double x = g.coordinates(i)[0];
        EXPECT_NEAR(h.J.re(0, i), (1.0 + eps * std::cos(x)) * std::cos(x), 1e-10);
        EXPECT_NEAR(h.phi.re(0, i) * eps + 1.0, h.rho.re(0, i), 1e-12);
    }
}

TEST(Observables, MassMatchesConservedQuantity) {
    std::mt19937_64 rng(2);
    TorusGrid g(2, 32);
    InitialDataSpec spec{random_background(g, rng, 2.0), random_smooth(g, rng, 3, 0.5, true),
                         random_smooth(g, rng, 3, 0.3), {0.0, 0.0}, {}};
    auto s = build_initial_state(spec, 0.2, 1.0);
    EXPECT_LT(rel_diff(integral(observables(s).rho).real(), conserved_quantities(s).mass), 1e-12);
}

TEST(Observables, CurrentBoundedByCauchySchwarz) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    for (int dim : {1, 2}) {
        TorusGrid g(dim, dim == 1 ? 64 : 32);
        for (int trial = 0; trial < 10; ++trial) {
            auto re = random_smooth(g, rng, 5), im = random_smooth(g, rng, 5);
            TorusField psi(g, 1, false);
            for (std::size_t i = 0; i < g.points(); ++i) psi.at(0, i) = cplx(re.re(0, i), im.re(0, i));
            const double eps = 0.3, alpha = 1.3;
            auto h = observables(wave(psi, TorusField::constant(g, 1.0), eps, alpha));
            auto grad = gradient(psi);
            for (std::size_t i = 0; i < g.points(); ++i) {
                double jn = 0.0, gn = 0.0;
                for (int a = 0; a < dim; ++a) {
                    jn += h.J.re(a, i) * h.J.re(a, i);
                    gn += std::norm(grad.at(a, i));
                }
                // kinetic density (1/2)|grad psi|^2
                EXPECT_LE(std::sqrt(jn), std::pow(eps, alpha) * std::sqrt(h.rho.re(0, i)) * std::sqrt(2.0 * 0.5 * gn) * (1 + 1e-12) + 1e-15);
            }
        }
    }
}

TEST(Dispersive, ConstantDensityGivesZero) {
    TorusGrid g(2, 16);
    auto d = dispersive_term(TorusField::constant(g, 1.0));
    EXPECT_LT(d.log_form.max_abs(), 1e-15);
    EXPECT_LT(d.bohm_form.max_abs(), 1e-15);
    EXPECT_LT(d.stress_form.max_abs(), 1e-15);
}

TEST(Dispersive, ThreeFormsAgree) {
    TorusGrid g(1, 128);
    auto rho = TorusField::sample(g, [](double x, double) { return 1.0 + 0.1 * std::cos(x); });
    auto d = dispersive_term(rho);
    EXPECT_LT(max_abs_diff(d.log_form, d.bohm_form), 1e-8);
    EXPECT_LT(max_abs_diff(d.log_form, d.stress_form), 1e-8);
    EXPECT_GT(d.log_form.max_abs(), 1e-3);
}

TEST(Dispersive, AgreementImprovesWithResolution) {
    // min rho = 0.01
    auto rho_fn = [](double x, double) { return 0.505 + 0.495 * std::cos(x); };
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {64, 128, 256, 512}) {
        TorusGrid g(1, n);
        auto d = dispersive_term(TorusField::sample(g, rho_fn));
        double err = std::max(max_abs_diff(d.log_form, d.bohm_form), max_abs_diff(d.log_form, d.stress_form));
        EXPECT_LT(err, prev) << "n = " << n;
        prev = err;
    }
}

TEST(Dispersive, NonPositiveDensityRejected) {
    TorusGrid g(1, 16);
    EXPECT_THROW(dispersive_term(TorusField::sample(g, [](double x, double) { return std::cos(x); })),
                 PositivityViolation);
}

TEST(Residuals, TooFewSnapshotsRejected) {
    TorusGrid g(1, 16);
    WaveState s{TorusField::constant(g, 1.0), 0.1, 1.0, TorusField::constant(g, 1.0), 0.0};
    EXPECT_THROW(conservation_residuals({s, s}), InvalidArgument);
}

TEST(Residuals, StationaryStateVanishes) {
    TorusGrid g(2, 16);
    WaveState s{TorusField::constant(g, 1.0), 0.1, 1.0, TorusField::constant(g, 1.0), 0.0};
    auto traj = evolve(s, {0.1, 0.2, 0.3});
    traj.insert(traj.begin(), s);
    for (const auto& r : conservation_residuals(traj)) {
        EXPECT_LT(r.residual_mass, 1e-10);
        EXPECT_LT(r.residual_momentum, 1e-10);
    }
}

TEST(Residuals, PlaneWaveMassResidual) {
    TorusGrid g(1, 32);
    auto psi = TorusField::sample_complex(g, [](double x, double) { return std::polar(1.0, 3 * x); });
    WaveState s{psi, 0.1, 1.0, TorusField::constant(g, 1.0), 0.0};
    auto traj = evolve(s, {0.01, 0.02, 0.03});
    traj.insert(traj.begin(), s);
    for (const auto& r : conservation_residuals(traj)) {
        EXPECT_LT(r.residual_mass, 1e-8);
        EXPECT_LT(r.residual_momentum, 1e-8);
    }
}

TEST(Residuals, SecondOrderInOutputSpacing) {
    TorusGrid g(1, 64);
    auto s = build_initial_state(generic_spec(g), 0.3, 1.0);
    EvolveOptions o;
    o.dt = 1e-5;
    auto measure = [&](double h) {
        auto traj = evolve(s, {0.05 - h, 0.05, 0.05 + h}, o);
        auto r = conservation_residuals(traj).front();
        return std::pair{r.residual_mass, r.residual_momentum};
    };
    auto [m1, p1] = measure(4e-3);
    auto [m2, p2] = measure(2e-3);
    EXPECT_GT(m1 / m2, 3.0);
    EXPECT_LT(m1 / m2, 5.0);
    EXPECT_GT(p1 / p2, 3.0);
    EXPECT_LT(p1 / p2, 5.0);
}

TEST(Forcing, ConstantStateGivesZero) {
    TorusGrid g(2, 16);
    WaveState s{TorusField::constant(g, 1.0), 0.1, 1.0, TorusField::constant(g, 1.0), 0.0};
    EXPECT_LT(fastwave_forcing(s).total.max_abs(), 1e-14);
}

// For psi = sqrt(rho0) the fluctuation term drops; the stress term does not vanish.
TEST(Forcing, RealGroundStateDropsFluctuationTerm) {
    TorusGrid g(1, 64);
    auto rho0 = TorusField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); });
    WaveState s{map_real(rho0, [](double r) { return std::sqrt(r); }), 0.1, 1.0, rho0, 0.0};
    auto f = fastwave_forcing(s);
    EXPECT_LT(f.fluctuation_term.max_abs(), 1e-13);
    EXPECT_LT(max_abs_diff(f.total, f.stress_term + f.dispersion_term), 1e-14);
    EXPECT_GT(f.dispersion_term.max_abs(), 0.0);
}

TEST(Forcing, MatchesDirectAssembly) {
    TorusGrid g(1, 64);
    auto s = build_initial_state(generic_spec(g), 0.2, 1.0);
    const double e2a = 0.04;
    // grad psi (x) grad conj psi + c.c. = 2 |psi_x|^2 in 1D
    auto psix = gradient(s.psi);
    TorusField two_abs(g, 1, true);
    for (std::size_t i = 0; i < g.points(); ++i) two_abs.at(0, i) = 2.0 * std::norm(psix.at(0, i));
    auto phi = observables(s).phi;
    auto phi2 = TorusField(g, 1, true);
    for (std::size_t i = 0; i < g.points(); ++i) phi2.at(0, i) = phi.re(0, i) * phi.re(0, i);
    auto raw = gradient(two_abs);
    raw *= -0.5 * e2a;
    auto fl = gradient(phi2);
    fl *= -0.5;
    auto disp = gradient(laplacian(observables(s).rho));
    disp *= 0.25 * e2a;
    auto direct = project(dealias(raw) + dealias(fl) + disp, s.rho0).gradient_part;
    EXPECT_LT(max_abs_diff(fastwave_forcing(s).total, direct), 1e-9 * direct.max_abs());
}

TEST(Forcing, BoundedAcrossEpsilonSweep) {
    TorusGrid g(1, 256);
    std::vector<double> norms;
    for (double eps : {0.2, 0.1, 0.05}) {
        auto spec = generic_spec(g);
        norms.push_back(l2_norm(fastwave_forcing(build_initial_state(spec, eps, 1.0)).total));
    }
    for (double n : norms) EXPECT_LT(n, 2.0 * norms.front());
}
