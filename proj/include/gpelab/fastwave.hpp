#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gpelab/helmholtz.hpp"
#include "gpelab/hydro.hpp"

namespace gpelab {

/// Galerkin matrix of A = -div(rho0 grad .) on the nonzero lattice modes with |k| <= K.
struct OperatorMatrix {
    TorusField rho0;
    int cutoff = 0;
    std::vector<Lattice> modes;
    Eigen::MatrixXcd matrix;
};

inline OperatorMatrix assemble_operator(const TorusField& rho0, int cutoff) {
    const auto& g = rho0.grid();
    require_components(rho0, 1, "assemble_operator");
    require_positive(rho0, "assemble_operator: rho0");
    if (cutoff < 1) throw InvalidArgument("assemble_operator: cutoff must be at least 1");
    // Products of two retained modes must stay below Nyquist for the quadratures downstream.
    if (4 * cutoff >= g.n())
        throw InvalidArgument("assemble_operator: cutoff " + std::to_string(cutoff) +
                              " needs 4K < N (grid has N = " + std::to_string(g.n()) + ")");
    OperatorMatrix op{rho0, cutoff, {}, {}};
    const int k2 = g.dim() == 2 ? cutoff : 0;
    for (int a = -cutoff; a <= cutoff; ++a)
        for (int b = -k2; b <= k2; ++b) {
            if (a == 0 && b == 0) continue;
            if (a * a + b * b > cutoff * cutoff) continue;
            op.modes.push_back({a, b});
        }
    auto rho_hat = transform_forward(rho0);
    const double kb = g.base_wavenumber();
    const auto n = static_cast<Eigen::Index>(op.modes.size());
    op.matrix.resize(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q < n; ++q) {
            const auto& k = op.modes[p];
            const auto& m = op.modes[q];
            double kdotm = kb * kb * (static_cast<double>(k[0]) * m[0] + static_cast<double>(k[1]) * m[1]);
            op.matrix(p, q) = kdotm * rho_hat.at(0, g.flat_index({k[0] - m[0], k[1] - m[1]}));
        }
    return op;
}

struct HermitianEigenpairs {
    Eigen::VectorXd values;   ///< ascending
    Eigen::MatrixXcd vectors; ///< orthonormal columns
};

inline double hermitian_defect(const Eigen::MatrixXcd& a) {
    double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

/// Dense Hermitian eigensolve; rejects input whose relative Hermitian defect exceeds 1e-12.
inline HermitianEigenpairs hermitian_eigenpairs(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols()) throw ShapeMismatch("hermitian_eigenpairs: matrix must be square");
    if (double d = hermitian_defect(a); d > 1e-12)
        throw InvalidArgument("hermitian_eigenpairs: input is not Hermitian (relative defect " +
                              std::to_string(d) + ")");
    Eigen::MatrixXcd sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym);
    if (es.info() != Eigen::Success) throw Error("hermitian_eigenpairs: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

struct EigenOptions {
    int modes = 40;              ///< retained count M, extended so no cluster is split
    double cluster_scale = 1e-8; ///< cluster_tol(kappa) = scale (1 + kappa)
};

/// Retained eigenpairs of A with real eigenfunctions, their gradients and Hessians on the grid.
struct EigenSystem {
    TorusGrid grid;
    int cutoff = 0;
    double cluster_scale = 1e-8;
    TorusField rho0;
    TorusField sqrt_rho0;
    std::vector<Lattice> basis;
    std::vector<double> all_kappas;
    std::vector<double> kappas;
    std::vector<Eigen::VectorXcd> coefficients;  ///< normalized Fourier coefficients of chi_j
    std::vector<TorusField> chi;
    std::vector<TorusField> grad_chi;
    std::vector<TorusField> hess_chi;
    std::vector<int> cluster_id;
    std::vector<std::vector<int>> clusters;

    int size() const noexcept { return static_cast<int>(kappas.size()); }
    double omega(int j) const { return std::sqrt(kappas[j]); }
    double cluster_tol(double kappa) const { return cluster_scale * (1.0 + kappa); }
};

namespace detail {

inline bool positive_representative(const Lattice& k) { return k[0] > 0 || (k[0] == 0 && k[1] > 0); }

/// Unitary map from the real cos/sin basis to the exponential basis, pairing k with -k.
inline Eigen::MatrixXcd real_basis(const std::vector<Lattice>& modes) {
    const auto n = static_cast<Eigen::Index>(modes.size());
    std::map<Lattice, Eigen::Index> where;
    for (Eigen::Index p = 0; p < n; ++p) where[modes[p]] = p;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(n, n);
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Index col = 0;
    for (Eigen::Index p = 0; p < n; ++p) {
        if (!positive_representative(modes[p])) continue;
        auto it = where.find({-modes[p][0], -modes[p][1]});
        if (it == where.end()) throw InvalidArgument("mode set is not symmetric under k -> -k");
        Eigen::Index q = it->second;
        u(p, col) = r;
        u(q, col) = r;
        ++col;
        u(p, col) = cplx(0.0, -r);
        u(q, col) = cplx(0.0, r);
        ++col;
    }
    return u;
}

inline TorusField synthesize(const TorusGrid& g, const std::vector<Lattice>& basis, const Eigen::VectorXcd& c,
                             bool real) {
    Spectrum s{g, 1, std::vector<cplx>(g.points())};
    for (std::size_t p = 0; p < basis.size(); ++p) s.at(0, g.flat_index(basis[p])) += c(static_cast<Eigen::Index>(p));
    return transform_inverse(s, real);
}

}  // namespace detail

/// Eigendecomposition through the real cos/sin basis, so every chi_j is real.
inline EigenSystem eigendecompose(const OperatorMatrix& op, const EigenOptions& opt = {}) {
    if (double d = hermitian_defect(op.matrix); d > 1e-12)
        throw InvalidArgument("eigendecompose: operator matrix is not Hermitian (relative defect " +
                              std::to_string(d) + ")");
    if (opt.modes < 1) throw InvalidArgument("eigendecompose: must retain at least one mode");
    const auto& g = op.rho0.grid();
    auto u = detail::real_basis(op.modes);
    Eigen::MatrixXcd ar = u.adjoint() * op.matrix * u;
    if (ar.imag().cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, ar.cwiseAbs().maxCoeff()))
        throw InvalidArgument("eigendecompose: operator lacks conjugation symmetry (complex rho0?)");
    Eigen::MatrixXd sym = 0.5 * (ar.real() + ar.real().transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw Error("eigendecompose: eigensolver failed");

    EigenSystem e;
    e.grid = g;
    e.cutoff = op.cutoff;
    e.cluster_scale = opt.cluster_scale;
    e.rho0 = op.rho0;
    e.sqrt_rho0 = map_real(op.rho0, [](double r) { return std::sqrt(r); });
    e.basis = op.modes;
    const auto n = es.eigenvalues().size();
    e.all_kappas.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    if (e.all_kappas.front() <= 0.0) throw Error("eigendecompose: nonpositive eigenvalue on zero-mean modes");

    Eigen::Index keep = std::min<Eigen::Index>(opt.modes, n);
    while (keep < n && e.all_kappas[keep] - e.all_kappas[keep - 1] <= e.cluster_tol(e.all_kappas[keep])) ++keep;

    const double norm = 1.0 / std::sqrt(g.measure());
    for (Eigen::Index j = 0; j < keep; ++j) {
        Eigen::VectorXcd c = norm * (u * es.eigenvectors().col(j).cast<cplx>());
        e.kappas.push_back(e.all_kappas[j]);
        e.chi.push_back(detail::synthesize(g, e.basis, c, true));
        e.grad_chi.push_back(gradient(e.chi.back()));
        e.hess_chi.push_back(hessian(e.chi.back()));
        e.coefficients.push_back(std::move(c));
    }
    int id = -1;
    for (int j = 0; j < e.size(); ++j) {
        if (j == 0 || e.kappas[j] - e.kappas[j - 1] > e.cluster_tol(e.kappas[j])) {
            ++id;
            e.clusters.emplace_back();
        }
        e.cluster_id.push_back(id);
        e.clusters.back().push_back(j);
    }
    return e;
}

/// L2 residual of the Galerkin eigen-equation in the truncated Fourier space.
inline double matrix_residual(const OperatorMatrix& op, const EigenSystem& e, int j) {
    Eigen::VectorXcd r = op.matrix * e.coefficients[j] - e.kappas[j] * e.coefficients[j];
    return r.norm() * std::sqrt(e.grid.measure());
}

/// L2 residual of -div(rho0 grad chi_j) - kappa_j chi_j evaluated on the grid.
inline double grid_residual(const EigenSystem& e, int j) {
    auto r = detail::weighted_operator(e.chi[j], e.rho0);
    r.axpy(-e.kappas[j], e.chi[j]);
    return l2_norm(r);
}

// ---------------------------------------------------------------------------------------------
// Fast-wave vectors

/// Coefficients of V = sum_j a_j^+ e_j^+ + a_j^- e_j^-, e_j^{+-} = (chi_j, +-(i/omega_j) sqrt(rho0) grad chi_j).
struct EigenCoordinates {
    std::vector<cplx> plus;
    std::vector<cplx> minus;

    EigenCoordinates() = default;
    explicit EigenCoordinates(int m) : plus(m), minus(m) {}
    int size() const noexcept { return static_cast<int>(plus.size()); }

    cplx& sign(int s, int j) { return s > 0 ? plus[j] : minus[j]; }
    const cplx& sign(int s, int j) const { return s > 0 ? plus[j] : minus[j]; }

    EigenCoordinates& operator+=(const EigenCoordinates& o) {
        for (int j = 0; j < size(); ++j) {
            plus[j] += o.plus[j];
            minus[j] += o.minus[j];
        }
        return *this;
    }
    EigenCoordinates& operator*=(cplx s) {
        for (int j = 0; j < size(); ++j) {
            plus[j] *= s;
            minus[j] *= s;
        }
        return *this;
    }
    /// this += s * o
    EigenCoordinates& axpy(cplx s, const EigenCoordinates& o) {
        for (int j = 0; j < size(); ++j) {
            plus[j] += s * o.plus[j];
            minus[j] += s * o.minus[j];
        }
        return *this;
    }
};

/// Grid form (phi, h) with h = sqrt(rho0) grad w.
struct FastWaveGrid {
    TorusField scalar;
    TorusField vector;
};

/// Real L2 pairing of two fast-wave vectors, sum of 2 conj(x) y over both signs.
inline double pairing(const EigenCoordinates& x, const EigenCoordinates& y) {
    cplx s = 0.0;
    for (int j = 0; j < x.size(); ++j) s += std::conj(x.plus[j]) * y.plus[j] + std::conj(x.minus[j]) * y.minus[j];
    return 2.0 * s.real();
}

inline double norm_sq(const EigenCoordinates& x) { return pairing(x, x); }

/// Largest |a_j^+ - conj(a_j^-)|.
inline double conjugacy_defect(const EigenCoordinates& x) {
    double d = 0.0;
    for (int j = 0; j < x.size(); ++j) d = std::max(d, std::abs(x.plus[j] - std::conj(x.minus[j])));
    return d;
}

struct ExpandOptions {
    /// Relative bound on the non-gradient part of h / sqrt(rho0).
    double gradient_tol = 1e-8;
};

struct Expansion {
    EigenCoordinates coords;
    double non_gradient_norm = 0.0;
};

inline Expansion expand(const FastWaveGrid& v, const EigenSystem& e, const ExpandOptions& opt = {}) {
    const auto& g = e.grid;
    require_components(v.scalar, 1, "expand: scalar part");
    require_components(v.vector, g.dim(), "expand: vector part");
    require_same_grid(v.scalar, e.rho0, "expand");
    require_same_grid(v.vector, e.rho0, "expand");
    Expansion out{EigenCoordinates(e.size()), 0.0};
    auto w = divide_pointwise(v.vector, e.sqrt_rho0);
    out.non_gradient_norm = l2_norm(leray_project(w));
    if (out.non_gradient_norm > opt.gradient_tol * std::max(1.0, l2_norm(w)))
        throw InvalidArgument("expand: vector part has a non-gradient component of L2 norm " +
                              std::to_string(out.non_gradient_norm));
    for (int j = 0; j < e.size(); ++j) {
        cplx sum = inner_product(e.chi[j], v.scalar);
        cplx grad_pair = inner_product(scale_pointwise(e.sqrt_rho0, e.grad_chi[j]), v.vector);
        cplx diff = cplx(0.0, -1.0) * grad_pair / e.omega(j);
        out.coords.plus[j] = 0.5 * (sum + diff);
        out.coords.minus[j] = 0.5 * (sum - diff);
    }
    return out;
}

inline FastWaveGrid reconstruct(const EigenCoordinates& a, const EigenSystem& e) {
    const auto& g = e.grid;
    if (a.size() != e.size()) throw ShapeMismatch("reconstruct: coordinate count differs from eigensystem");
    const bool real = conjugacy_defect(a) <= 1e-12 * (1.0 + std::sqrt(norm_sq(a)));
    FastWaveGrid v{TorusField(g, 1, false), TorusField(g, g.dim(), false)};
    TorusField grad_sum(g, g.dim(), false);
    for (int j = 0; j < e.size(); ++j) {
        cplx s = a.plus[j] + a.minus[j];
        cplx d = cplx(0.0, 1.0) * (a.plus[j] - a.minus[j]) / e.omega(j);
        for (std::size_t i = 0; i < g.points(); ++i) {
            v.scalar.at(0, i) += s * e.chi[j].re(0, i);
            for (int c = 0; c < g.dim(); ++c) grad_sum.at(c, i) += d * e.grad_chi[j].re(c, i);
        }
    }
    v.vector = scale_pointwise(e.sqrt_rho0, grad_sum);
    if (real) {
        v.scalar.make_real();
        v.vector.make_real();
    }
    return v;
}

/// L(tau): a^{+-} -> a^{+-} exp(+-i omega tau).
inline EigenCoordinates wave_group(const EigenCoordinates& a, const EigenSystem& e, double tau) {
    EigenCoordinates out = a;
    for (int j = 0; j < a.size(); ++j) {
        cplx ph = std::polar(1.0, e.omega(j) * tau);
        out.plus[j] *= ph;
        out.minus[j] *= std::conj(ph);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// B1, B2 on the grid

struct FormOptions {
    /// Bound on ||div(rho0 u)|| relative to max(1, ||rho0 u||).
    double div_tol = 1e-8;
};

inline void require_weighted_solenoidal(const TorusField& u, const TorusField& rho0, const FormOptions& opt,
                                        const char* what) {
    auto m = scale_pointwise(rho0, u);
    double d = l2_norm(divergence(m));
    if (d > opt.div_tol * std::max(1.0, l2_norm(m)))
        throw InvalidArgument(std::string(what) + ": ||div(rho0 u)|| = " + std::to_string(d) +
                              " exceeds the weighted incompressibility tolerance");
}

/// B1(u, V) = div(sqrt(rho0) u (x) L2 V + sqrt(rho0) L2 V (x) u) with L2 V taken at tau.
inline TorusField b1(const TorusField& u, const EigenCoordinates& v, const EigenSystem& e, double tau,
                     const FormOptions& opt = {}) {
    require_components(u, e.grid.dim(), "b1: u");
    require_weighted_solenoidal(u, e.rho0, opt, "b1");
    auto w = reconstruct(wave_group(v, e, tau), e).vector;
    auto su = scale_pointwise(e.sqrt_rho0, u);
    auto t = outer_pointwise(su, w) + outer_pointwise(w, su);
    return divergence_tensor(dealias(t));
}

/// B2(V1, V2) = (1/2) div(L2V1 (x) L2V2 + L2V2 (x) L2V1) + (1/2) grad(L1V1 L1V2).
inline TorusField b2(const EigenCoordinates& v1, const EigenCoordinates& v2, const EigenSystem& e, double tau) {
    auto f1 = reconstruct(wave_group(v1, e, tau), e);
    auto f2 = reconstruct(wave_group(v2, e, tau), e);
    auto t = outer_pointwise(f1.vector, f2.vector) + outer_pointwise(f2.vector, f1.vector);
    auto out = divergence_tensor(dealias(t));
    out += gradient(dealiased_product(f1.scalar, f2.scalar));
    out *= 0.5;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Q1: couplings inside equal-eigenvalue clusters

/// G_jl(u) = -2 int rho0 u . Hess(chi_j) grad chi_l; antisymmetric when div(rho0 u) = 0.
inline Eigen::MatrixXd cluster_couplings(const TorusField& u, const EigenSystem& e) {
    const auto& g = e.grid;
    const int d = g.dim();
    const int m = e.size();
    auto ru = scale_pointwise(e.rho0, u);
    Eigen::MatrixXd gm = Eigen::MatrixXd::Zero(m, m);
    for (const auto& cl : e.clusters)
        for (int j : cl) {
            // p = rho0 u . H_j
            std::vector<double> p(static_cast<std::size_t>(d) * g.points(), 0.0);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    for (std::size_t i = 0; i < g.points(); ++i)
                        p[b * g.points() + i] += ru.re(a, i) * e.hess_chi[j].re(a * d + b, i);
            for (int l : cl) {
                double s = 0.0;
                for (int b = 0; b < d; ++b)
                    for (std::size_t i = 0; i < g.points(); ++i) s += p[b * g.points() + i] * e.grad_chi[l].re(b, i);
                gm(j, l) = -2.0 * s * g.cell_volume();
            }
        }
    return gm;
}

inline EigenCoordinates q1(const TorusField& u, const EigenCoordinates& v, const EigenSystem& e,
                           const FormOptions& opt = {}) {
    require_components(u, e.grid.dim(), "q1: u");
    require_weighted_solenoidal(u, e.rho0, opt, "q1");
    if (v.size() != e.size()) throw ShapeMismatch("q1: coordinate count differs from eigensystem");
    auto gm = cluster_couplings(u, e);
    EigenCoordinates out(e.size());
    for (const auto& cl : e.clusters)
        for (int j : cl)
            for (int l : cl) {
                double c = gm(j, l) / (2.0 * e.omega(j) * e.omega(l));
                out.plus[j] += c * v.plus[l];
                out.minus[j] += c * v.minus[l];
            }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Resonances and Q2

struct ResonanceOptions {
    double res_scale = 1e-8;  ///< res_tol = res_scale (1 + sqrt(kappa_max))
    double gap_tol = 1e-3;    ///< defects in (res_tol, gap_tol] are near-resonances
};

/// Output (j, sj) fed by inputs (l, sl), (m, sm): sl omega_l + sm omega_m = sj omega_j up to defect.
struct ResonantTerm {
    int j = 0, l = 0, m = 0;
    int sj = 1, sl = 1, sm = 1;
    double defect = 0.0;
    double coupling = 0.0;  ///< Y = T_jlm / (gamma_l gamma_m) + R_jlm
};

struct ResonanceSet {
    double res_tol = 0.0;
    double gap_tol = 0.0;
    std::vector<ResonantTerm> exact;
    std::vector<ResonantTerm> near;
};

namespace detail {

inline double triple_T(const EigenSystem& e, int j, int l, int m) {
    const auto& g = e.grid;
    const int d = g.dim();
    double s = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i) {
        double acc = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                acc += e.grad_chi[l].re(a, i) * e.hess_chi[j].re(a * d + b, i) * e.grad_chi[m].re(b, i);
        s += e.rho0.re(0, i) * acc;
    }
    return s * g.cell_volume();
}

inline double triple_R(const EigenSystem& e, int j, int l, int m) {
    const auto& g = e.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i)
        for (int a = 0; a < g.dim(); ++a)
            s += (e.chi[l].re(0, i) * e.grad_chi[m].re(a, i) + e.chi[m].re(0, i) * e.grad_chi[l].re(a, i)) *
                 e.grad_chi[j].re(a, i);
    return 0.5 * s * g.cell_volume();
}

}  // namespace detail

inline double resonance_tolerance(const EigenSystem& e, const ResonanceOptions& opt) {
    return opt.res_scale * (1.0 + std::sqrt(e.kappas.back()));
}

/// Enumerates ordered input pairs of signed frequencies and matches them against output
/// frequencies by binary search. Couplings are filled for exact terms when `with_couplings`.
inline ResonanceSet find_resonances(const EigenSystem& e, const ResonanceOptions& opt = {},
                                    bool with_couplings = true) {
    ResonanceSet rs;
    rs.res_tol = resonance_tolerance(e, opt);
    rs.gap_tol = opt.gap_tol;
    if (!(rs.res_tol > 0.0) || !(opt.gap_tol > rs.res_tol))
        throw InvalidArgument("resonance tolerances must satisfy 0 < res_tol < gap_tol");
    double spread = 0.0;
    for (int j = 0; j < e.size(); ++j) spread = std::max(spread, e.cluster_tol(e.kappas[j]) / (2.0 * e.omega(j)));
    if (rs.res_tol < spread)
        throw InvalidArgument("resonance tolerance " + std::to_string(rs.res_tol) +
                              " is below the cluster tolerance in frequency units " + std::to_string(spread));

    const int n = e.size();
    std::vector<double> om(n);
    for (int j = 0; j < n; ++j) om[j] = e.omega(j);
    std::map<std::tuple<int, int, int>, std::pair<double, double>> cache;
    for (int l = 0; l < n; ++l)
        for (int sl : {1, -1})
            for (int m = 0; m < n; ++m)
                for (int sm : {1, -1}) {
                    double gam = sl * om[l] + sm * om[m];
                    double target = std::abs(gam);
                    if (target <= opt.gap_tol) continue;
                    const int sj = gam > 0 ? 1 : -1;
                    auto lo = std::lower_bound(om.begin(), om.end(), target - opt.gap_tol);
                    for (auto it = lo; it != om.end() && *it <= target + opt.gap_tol; ++it) {
                        int j = static_cast<int>(it - om.begin());
                        ResonantTerm t{j, l, m, sj, sl, sm, std::abs(*it - target), 0.0};
                        if (t.defect <= rs.res_tol) {
                            if (with_couplings) {
                                auto key = std::make_tuple(j, std::min(l, m), std::max(l, m));
                                auto c = cache.find(key);
                                if (c == cache.end())
                                    c = cache.emplace(key, std::make_pair(detail::triple_T(e, j, l, m),
                                                                          detail::triple_R(e, j, l, m)))
                                            .first;
                                t.coupling = c->second.first / (sl * om[l] * sm * om[m]) + c->second.second;
                            }
                            rs.exact.push_back(t);
                        } else {
                            rs.near.push_back(t);
                        }
                    }
                }
    return rs;
}

/// Zero-sum signed triple with the sign pattern of (gamma_j, gamma_l, gamma_m), gamma_j + gamma_l + gamma_m = 0.
struct CanonicalTriple {
    std::array<int, 3> index;
    std::array<int, 3> sign;
    double defect;
};

/// One representative per unordered signed triple and its global sign flip.
inline std::vector<CanonicalTriple> canonical_triples(const std::vector<ResonantTerm>& terms) {
    std::set<std::array<int, 6>> seen;
    std::vector<CanonicalTriple> out;
    for (const auto& t : terms) {
        std::array<std::pair<int, int>, 3> v{{{t.j, -t.sj}, {t.l, t.sl}, {t.m, t.sm}}};
        auto f = v;
        for (auto& p : f) p.second = -p.second;
        std::sort(v.begin(), v.end());
        std::sort(f.begin(), f.end());
        if (f < v) v = f;
        std::array<int, 6> key{v[0].first, v[0].second, v[1].first, v[1].second, v[2].first, v[2].second};
        if (!seen.insert(key).second) continue;
        out.push_back({{v[0].first, v[1].first, v[2].first}, {v[0].second, v[1].second, v[2].second}, t.defect});
    }
    return out;
}

/// Bilinear Q2(V1, V2) over the exact resonances: q_j^{s} = -i/(2 gamma_j) sum a_l b_m Y.
inline EigenCoordinates q2(const EigenCoordinates& v1, const EigenCoordinates& v2, const EigenSystem& e,
                           const ResonanceSet& rs) {
    if (v1.size() != e.size() || v2.size() != e.size())
        throw ShapeMismatch("q2: coordinate count differs from eigensystem");
    EigenCoordinates out(e.size());
    for (const auto& t : rs.exact) {
        const double gj = t.sj * e.omega(t.j);
        out.sign(t.sj, t.j) += cplx(0.0, -0.5 / gj) * v1.sign(t.sl, t.l) * v2.sign(t.sm, t.m) * t.coupling;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Grid-route time average

enum class AverageWindow { plain, smooth };

struct AverageOptions {
    double tau_max = 2.0 * std::numbers::pi;
    int samples = 256;
    AverageWindow window = AverageWindow::plain;
    PoissonOptions poisson{};
    ResonanceOptions resonance{};
};

struct AverageResult {
    EigenCoordinates coords;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<double> average_weights(const AverageOptions& opt) {
    if (opt.samples < 2 || !(opt.tau_max > 0.0)) throw InvalidArgument("time average needs tau_max > 0 and 2+ samples");
    std::vector<double> w(opt.samples, 1.0);
    if (opt.window == AverageWindow::smooth) {
        for (int i = 0; i < opt.samples; ++i) {
            double x = (i + 0.5) / opt.samples;
            w[i] = std::exp(-1.0 / (x * (1.0 - x)));
        }
    }
    double s = 0.0;
    for (double v : w) s += v;
    for (double& v : w) v /= s;
    return w;
}

inline double sample_time(const AverageOptions& opt, int i) {
    double x = opt.window == AverageWindow::smooth ? (i + 0.5) / opt.samples : static_cast<double>(i) / opt.samples;
    return x * opt.tau_max;
}

/// Coordinates of L(-s)(0, H^perp B / sqrt(rho0)).
inline EigenCoordinates pulled_back(const TorusField& b, const EigenSystem& e, double s, const PoissonOptions& po) {
    auto gp = project(b, e.rho0, po).gradient_part;
    FastWaveGrid w{TorusField(e.grid, 1, true), divide_pointwise(gp, e.sqrt_rho0)};
    w.vector.make_real();
    ExpandOptions eo;
    eo.gradient_tol = 1e-6;
    return wave_group(expand(w, e, eo).coords, e, -s);
}

inline std::vector<std::string> near_resonance_warnings(const EigenSystem& e, const ResonanceOptions& ro) {
    std::vector<std::string> out;
    auto rs = find_resonances(e, ro, false);
    for (const auto& t : canonical_triples(rs.near))
        out.push_back("near-resonance (" + std::to_string(t.index[0]) + "," + std::to_string(t.index[1]) + "," +
                      std::to_string(t.index[2]) + ") defect " + std::to_string(t.defect));
    return out;
}

}  // namespace detail

/// Numerical average of L(-s)(0, H^perp B1(u, V)(s) / sqrt(rho0)) over s in [0, tau_max].
inline AverageResult time_average_q1(const TorusField& u, const EigenCoordinates& v, const EigenSystem& e,
                                     const AverageOptions& opt = {}) {
    auto w = detail::average_weights(opt);
    AverageResult r{EigenCoordinates(e.size()), detail::near_resonance_warnings(e, opt.resonance)};
    for (int i = 0; i < opt.samples; ++i) {
        double s = detail::sample_time(opt, i);
        r.coords.axpy(w[i], detail::pulled_back(b1(u, v, e, s), e, s, opt.poisson));
    }
    return r;
}

/// Numerical average of L(-s)(0, H^perp B2(V1, V2)(s) / sqrt(rho0)) over s in [0, tau_max].
inline AverageResult time_average_q2(const EigenCoordinates& v1, const EigenCoordinates& v2, const EigenSystem& e,
                                     const AverageOptions& opt = {}) {
    auto w = detail::average_weights(opt);
    AverageResult r{EigenCoordinates(e.size()), detail::near_resonance_warnings(e, opt.resonance)};
    for (int i = 0; i < opt.samples; ++i) {
        double s = detail::sample_time(opt, i);
        r.coords.axpy(w[i], detail::pulled_back(b2(v1, v2, e, s), e, s, opt.poisson));
    }
    return r;
}

// ---------------------------------------------------------------------------------------------
// Filtering

/// (phi, H^perp J / sqrt(rho0)) for a fluctuation phi and current J.
inline FastWaveGrid fastwave_vector(const TorusField& phi, const TorusField& J, const TorusField& rho0,
                                    const PoissonOptions& opt = {}) {
    auto gp = project(J, rho0, opt).gradient_part;
    auto sq = map_real(rho0, [](double r) { return std::sqrt(r); });
    return {phi, divide_pointwise(gp, sq)};
}

/// V^eps = L(-t/eps)(phi^eps, sqrt(rho0) grad w^eps) in eigencoordinates.
inline EigenCoordinates filter_state(const HydroState& h, const EigenSystem& e, const PoissonOptions& opt = {},
                                     const ExpandOptions& eo = {}) {
    auto v = fastwave_vector(h.phi, h.J, e.rho0, opt);
    return wave_group(expand(v, e, eo).coords, e, -h.time / h.eps);
}

}  // namespace gpelab
