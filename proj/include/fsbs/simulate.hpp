#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "panel.hpp"
#include "rng.hpp"

namespace fsbs {

// ---------------------------------------------------------------------------
// Sinusoidal basis used by the S1-S4 functional noise:
//   h_i(x) = prod_j scale * sin(i * x_j)
// A pi/sqrt(2) amplitude per coordinate inflates the functional noise an
// order of magnitude past the regime means and drowns every scenario, so the
// default uses its reciprocal 1/(sqrt(2)*pi) (the usual L2-normalization
// ballpark); the larger constant stays available behind --verbatim-basis.
// ---------------------------------------------------------------------------

inline constexpr double basis_scale_default() { return 0.22507907903927651; }  // 1/(sqrt(2)*pi)
inline constexpr double basis_scale_verbatim() { return 2.2214414690791831; }  // pi/sqrt(2)

// Evaluates sum_i coeff[i-1] * h_i(x) for an nb-term expansion.
inline double basis_eval(const double* coeff, int nb, const double* x, int d, double scale) {
    double total = 0.0;
    for (int i = 1; i <= nb; ++i) {
        double term = coeff[i - 1];
        for (int j = 0; j < d; ++j) term *= scale * std::sin(i * x[j]);
        total += term;
    }
    return total;
}

// ---------------------------------------------------------------------------
// FAR(1) noise in coefficient space: c_{t,i} = phi * c_{t-1,i} + i^{-1} b_{t,i},
// b iid standard normal.  Evaluating sum_i c_{t,i} h_i(x) realizes
// xi_t(x) = phi * xi_{t-1}(x) + sum_i i^{-1} b_{t,i} h_i(x) pointwise.
// ---------------------------------------------------------------------------

struct BasisNoiseState {
    std::vector<double> coeff;  // c_{t,i}, i = 1..nb
    double phi = 0.5;
};

// Stationary start: c_{0,i} = i^{-1} b_i / sqrt(1 - phi^2).
inline BasisNoiseState basis_noise_init(int nb, double phi, Rng& rng) {
    BasisNoiseState st;
    st.phi = phi;
    st.coeff.resize(nb);
    const double s = 1.0 / std::sqrt(1.0 - phi * phi);
    for (int i = 1; i <= nb; ++i) st.coeff[i - 1] = s * rng.normal() / i;
    return st;
}

// Deterministic core: advance with given innovations b (length nb).
inline void basis_noise_step(BasisNoiseState& st, const double* b) {
    const int nb = static_cast<int>(st.coeff.size());
    for (int i = 1; i <= nb; ++i) st.coeff[i - 1] = st.phi * st.coeff[i - 1] + b[i - 1] / i;
}

inline void basis_noise_step(BasisNoiseState& st, Rng& rng) {
    const int nb = static_cast<int>(st.coeff.size());
    std::vector<double> b(nb);
    for (double& v : b) v = rng.normal();
    basis_noise_step(st, b.data());
}

// One FAR step followed by evaluation at the given points (flat count*d).
inline std::vector<double> basis_noise_far(BasisNoiseState& st, const std::vector<double>& points,
                                           int d, Rng& rng, double scale = basis_scale_default()) {
    basis_noise_step(st, rng);
    const int count = static_cast<int>(points.size()) / d;
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = basis_eval(st.coeff.data(), static_cast<int>(st.coeff.size()),
                            points.data() + static_cast<std::size_t>(k) * d, d, scale);
    return out;
}

// ---------------------------------------------------------------------------
// AR(1) measurement error: delta_t = phi * delta_{t-1} + eps_t,
// eps_t iid N(0, var * I_n), stationary start N(0, var/(1-phi^2) I_n).
// ---------------------------------------------------------------------------

struct Ar1State {
    std::vector<double> delta;
    double phi = 0.3;
    double sd = 0.0;  // sqrt(var) of the innovations
};

inline Ar1State ar1_init(int n, double phi, double var, Rng& rng) {
    Ar1State st;
    st.phi = phi;
    st.sd = std::sqrt(var);
    st.delta.resize(n);
    const double s0 = std::sqrt(var / (1.0 - phi * phi));
    for (double& v : st.delta) v = s0 * rng.normal();
    return st;
}

inline void ar1_step(Ar1State& st, const double* eps) {
    for (std::size_t i = 0; i < st.delta.size(); ++i)
        st.delta[i] = st.phi * st.delta[i] + eps[i];
}

inline const std::vector<double>& ar1_measurement_error(Ar1State& st, Rng& rng) {
    std::vector<double> eps(st.delta.size());
    for (double& v : eps) v = st.sd * rng.normal();
    ar1_step(st, eps.data());
    return st.delta;
}

// ---------------------------------------------------------------------------
// Order-1 moving averages (scalar/vector and functional-coefficient forms):
// delta_t = eps_t + theta * eps_{t-1}.  Exposed with an explicit innovation
// core so coupled-copy experiments (replace eps_0, compare paths) can assert
// exact agreement from t = 2 on.
// ---------------------------------------------------------------------------

// eps: (T+1)*n flat with eps_0 first; returns T*n flat, rows t = 1..T.
inline std::vector<double> ma1_from_innovations(int T, int n, double theta,
                                                const std::vector<double>& eps) {
    if (eps.size() != static_cast<std::size_t>(T + 1) * n)
        throw std::invalid_argument("ma1_from_innovations: need (T+1)*n innovations");
    std::vector<double> out(static_cast<std::size_t>(T) * n);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(t - 1) * n + i] =
                eps[static_cast<std::size_t>(t) * n + i] +
                theta * eps[static_cast<std::size_t>(t - 1) * n + i];
    return out;
}

inline std::vector<double> ma1_path(int T, int n, double theta, Rng& rng) {
    std::vector<double> eps(static_cast<std::size_t>(T + 1) * n);
    for (double& v : eps) v = rng.normal();
    return ma1_from_innovations(T, n, theta, eps);
}

// Functional MA(1) in coefficient space: c_{t,i} = i^{-1}(b_{t,i} + theta*b_{t-1,i});
// returns T*nb flat coefficient rows, to be paired with basis_eval.
inline std::vector<double> fma1_coefficient_path(int T, int nb, double theta, Rng& rng) {
    std::vector<double> b(static_cast<std::size_t>(T + 1) * nb);
    for (double& v : b) v = rng.normal();
    std::vector<double> out = ma1_from_innovations(T, nb, theta, b);
    for (int t = 0; t < T; ++t)
        for (int i = 1; i <= nb; ++i) out[static_cast<std::size_t>(t) * nb + (i - 1)] /= i;
    return out;
}

// ---------------------------------------------------------------------------
// FAR(1) with an integral-operator kernel on a fixed even grid (scenario S5):
//   xi_t(v) = integral psi(v,u) xi_{t-1}(u) du + eps_t(v),
//   psi(v,u) = (1/3) exp((v^2+u^2)/2),
// rectangle rule on the observation grid v_j = j/ngrid, innovations a standard
// Brownian path (partial sums of N(0, 1/ngrid) increments).  The start is
// drawn from the stationary law: the covariance fixed point of
// S = A S A' + Q is iterated to convergence and Cholesky-factored.
// ---------------------------------------------------------------------------

struct BrownianFarState {
    int ngrid = 50;
    std::vector<double> grid;  // v_j = j/ngrid
    std::vector<double> op;    // ngrid x ngrid, row-major: psi(v_j, v_l)/ngrid
    std::vector<double> xi;    // current values at the grid
};

namespace detail {

// Largest singular value via power iteration on A'A (deterministic start).
inline double operator_norm(const std::vector<double>& a, int n, int iters = 200) {
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), av(n), atav(n);
    double norm = 0.0;
    for (int it = 0; it < iters; ++it) {
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            for (int c = 0; c < n; ++c) s += a[static_cast<std::size_t>(r) * n + c] * v[c];
            av[r] = s;
        }
        for (int c = 0; c < n; ++c) {
            double s = 0.0;
            for (int r = 0; r < n; ++r) s += a[static_cast<std::size_t>(r) * n + c] * av[r];
            atav[c] = s;
        }
        double len = 0.0;
        for (double x : atav) len += x * x;
        len = std::sqrt(len);
        if (len == 0.0) return 0.0;
        norm = std::sqrt(len);  // eigenvalue of A'A after normalization steps
        for (int c = 0; c < n; ++c) v[c] = atav[c] / len;
    }
    return norm;
}

// In-place lower Cholesky of a symmetric positive semi-definite matrix;
// tiny negative pivots from rounding are clamped to zero.
inline std::vector<double> cholesky_lower(std::vector<double> m, int n) {
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < j; ++k) {
            const double ljk = m[static_cast<std::size_t>(j) * n + k];
            for (int i = j; i < n; ++i)
                m[static_cast<std::size_t>(i) * n + j] -= m[static_cast<std::size_t>(i) * n + k] * ljk;
        }
        double pivot = m[static_cast<std::size_t>(j) * n + j];
        if (pivot < 0.0) pivot = 0.0;
        const double s = std::sqrt(pivot);
        m[static_cast<std::size_t>(j) * n + j] = s;
        const double inv = s > 0.0 ? 1.0 / s : 0.0;
        for (int i = j + 1; i < n; ++i) m[static_cast<std::size_t>(i) * n + j] *= inv;
        for (int k = j + 1; k < n; ++k) m[static_cast<std::size_t>(j) * n + k] = 0.0;
    }
    return m;
}

}  // namespace detail

inline BrownianFarState brownian_far_init(int ngrid, Rng& rng, bool negative_exponent = false,
                                          int lyapunov_iters = 60) {
    BrownianFarState st;
    st.ngrid = ngrid;
    st.grid.resize(ngrid);
    for (int j = 0; j < ngrid; ++j) st.grid[j] = static_cast<double>(j + 1) / ngrid;
    const double sign = negative_exponent ? -1.0 : 1.0;
    st.op.resize(static_cast<std::size_t>(ngrid) * ngrid);
    for (int r = 0; r < ngrid; ++r)
        for (int c = 0; c < ngrid; ++c)
            st.op[static_cast<std::size_t>(r) * ngrid + c] =
                (1.0 / 3.0) * std::exp(sign * (st.grid[r] * st.grid[r] + st.grid[c] * st.grid[c]) / 2.0) /
                ngrid;
    if (detail::operator_norm(st.op, ngrid) >= 1.0)
        throw std::runtime_error("brownian_far_init: discretized operator is not a contraction");

    // Brownian covariance Q_{jk} = min(j,k)/ngrid; iterate S <- A S A' + Q.
    std::vector<double> q(static_cast<std::size_t>(ngrid) * ngrid);
    for (int r = 0; r < ngrid; ++r)
        for (int c = 0; c < ngrid; ++c)
            q[static_cast<std::size_t>(r) * ngrid + c] = static_cast<double>(std::min(r, c) + 1) / ngrid;
    std::vector<double> s = q, tmp(q.size()), next(q.size());
    for (int it = 0; it < lyapunov_iters; ++it) {
        for (int r = 0; r < ngrid; ++r)  // tmp = A * S
            for (int c = 0; c < ngrid; ++c) {
                double acc = 0.0;
                for (int k = 0; k < ngrid; ++k)
                    acc += st.op[static_cast<std::size_t>(r) * ngrid + k] *
                           s[static_cast<std::size_t>(k) * ngrid + c];
                tmp[static_cast<std::size_t>(r) * ngrid + c] = acc;
            }
        for (int r = 0; r < ngrid; ++r)  // next = tmp * A' + Q
            for (int c = 0; c < ngrid; ++c) {
                double acc = 0.0;
                for (int k = 0; k < ngrid; ++k)
                    acc += tmp[static_cast<std::size_t>(r) * ngrid + k] *
                           st.op[static_cast<std::size_t>(c) * ngrid + k];
                next[static_cast<std::size_t>(r) * ngrid + c] = acc + q[static_cast<std::size_t>(r) * ngrid + c];
            }
        s.swap(next);
    }
    const std::vector<double> chol = detail::cholesky_lower(std::move(s), ngrid);
    std::vector<double> z(ngrid);
    for (double& v : z) v = rng.normal();
    st.xi.assign(ngrid, 0.0);
    for (int r = 0; r < ngrid; ++r) {
        double acc = 0.0;
        for (int c = 0; c <= r; ++c) acc += chol[static_cast<std::size_t>(r) * ngrid + c] * z[c];
        st.xi[r] = acc;
    }
    return st;
}

// Deterministic core: xi <- A*xi + eps for a given innovation path eps.
inline void brownian_far_step(BrownianFarState& st, const double* eps) {
    std::vector<double> next(st.ngrid);
    for (int r = 0; r < st.ngrid; ++r) {
        double acc = 0.0;
        for (int c = 0; c < st.ngrid; ++c)
            acc += st.op[static_cast<std::size_t>(r) * st.ngrid + c] * st.xi[c];
        next[r] = acc + eps[r];
    }
    st.xi.swap(next);
}

// Draws the Brownian innovation path (cumulative sums of N(0, 1/ngrid)
// increments) and advances one step.
inline const std::vector<double>& brownian_far_step(BrownianFarState& st, Rng& rng) {
    std::vector<double> eps(st.ngrid);
    const double sd = 1.0 / std::sqrt(static_cast<double>(st.ngrid));
    double run = 0.0;
    for (int j = 0; j < st.ngrid; ++j) {
        run += sd * rng.normal();
        eps[j] = run;
    }
    brownian_far_step(st, eps.data());
    return st.xi;
}

// ---------------------------------------------------------------------------
// Scenario definitions
// ---------------------------------------------------------------------------

enum class ScenarioId { S1, S2, S3, S4, S5, custom };
enum class NoiseKind { basis_far_ar1, brownian_far, ar1_only };

struct ScenarioOptions {
    double basis_scale = basis_scale_default();
    double mean_period = 1.0;           // regime means use sin/cos(mean_period * x)
    bool s5_negative_exponent = false;  // psi exponent sign, +(v^2+u^2)/2 literally
};

struct ScenarioSpec {
    ScenarioId id = ScenarioId::custom;
    std::string name = "custom";
    int T = 0, n = 0, d = 1;
    std::vector<int> change_points;
    std::vector<std::function<double(const double*)>> mean_functions;  // one per regime
    NoiseKind noise = NoiseKind::basis_far_ar1;
    bool fixed_even_grid = false;  // S5 observes on j/n instead of uniform draws
    ScenarioOptions options;
};

inline ScenarioId scenario_from_name(const std::string& name) {
    if (name == "S1" || name == "s1") return ScenarioId::S1;
    if (name == "S2" || name == "s2") return ScenarioId::S2;
    if (name == "S3" || name == "s3") return ScenarioId::S3;
    if (name == "S4" || name == "s4") return ScenarioId::S4;
    if (name == "S5" || name == "s5") return ScenarioId::S5;
    throw std::invalid_argument("unknown scenario: " + name);
}

inline ScenarioSpec scenario_spec(ScenarioId id, ScenarioOptions opt = {}) {
    ScenarioSpec s;
    s.id = id;
    s.options = opt;
    const double p = opt.mean_period;
    auto cosf = [p](double a) {
        return std::function<double(const double*)>([a, p](const double* x) { return a * std::cos(p * x[0]); });
    };
    auto sinf = [p](double a) {
        return std::function<double(const double*)>([a, p](const double* x) { return a * std::sin(p * x[0]); });
    };
    auto zero = []() {
        return std::function<double(const double*)>([](const double*) { return 0.0; });
    };
    switch (id) {
        case ScenarioId::S1:
            s.name = "S1"; s.T = 200; s.n = 1; s.d = 1;
            s.change_points = {30, 130};
            s.mean_functions = {cosf(6.0), sinf(6.0), cosf(6.0)};
            break;
        case ScenarioId::S2:
            s.name = "S2"; s.T = 200; s.n = 10; s.d = 1;
            s.change_points = {30, 130};
            s.mean_functions = {cosf(2.0), sinf(2.0), cosf(2.0)};
            break;
        case ScenarioId::S3:
            s.name = "S3"; s.T = 200; s.n = 50; s.d = 1;
            s.change_points = {30, 130};
            s.mean_functions = {cosf(1.0), sinf(1.0), cosf(1.0)};
            break;
        case ScenarioId::S4:
            s.name = "S4"; s.T = 200; s.n = 10; s.d = 2;
            s.change_points = {100, 150};
            s.mean_functions = {zero(),
                                std::function<double(const double*)>(
                                    [](const double* x) { return 3.0 * x[0] * x[1]; }),
                                zero()};
            break;
        case ScenarioId::S5:
            s.name = "S5"; s.T = 200; s.n = 50; s.d = 1;
            s.change_points = {68, 134};
            s.mean_functions = {zero(), sinf(1.0), sinf(2.0)};
            s.noise = NoiseKind::brownian_far;
            s.fixed_even_grid = true;
            break;
        case ScenarioId::custom:
            throw std::invalid_argument("scenario_spec: custom specs are built by hand");
    }
    return s;
}

// No-change control: scenario-2 shape and noise with a flat mean.
inline ScenarioSpec null_scenario_spec(ScenarioOptions opt = {}) {
    ScenarioSpec s = scenario_spec(ScenarioId::S2, opt);
    s.id = ScenarioId::custom;
    s.name = "null";
    s.change_points.clear();
    s.mean_functions = {std::function<double(const double*)>([](const double*) { return 0.0; })};
    return s;
}

// Localisation probe: one unit mean jump halfway through, serially correlated
// measurement error only, observation count n varied by the caller.
inline ScenarioSpec probe_scenario_spec(int n, ScenarioOptions opt = {}) {
    ScenarioSpec s;
    s.id = ScenarioId::custom;
    s.name = "probe";
    s.T = 400;
    s.n = n;
    s.d = 1;
    s.change_points = {200};
    s.mean_functions = {std::function<double(const double*)>([](const double*) { return 0.0; }),
                        std::function<double(const double*)>([](const double*) { return 1.0; })};
    s.noise = NoiseKind::ar1_only;
    s.options = opt;
    return s;
}

struct SimulationOutput {
    FunctionalPanel panel;
    std::vector<int> true_change_points;
    std::string scenario;
    std::uint64_t seed = 0;
};

// Regime index of snapshot t: the change at eta separates t <= eta from t > eta.
inline int regime_of(int t, const std::vector<int>& cps) {
    int k = 0;
    for (int c : cps)
        if (c < t) ++k;
    return k;
}

// Draw order is fixed (grid block, then functional-noise path, then
// measurement-error path) so outputs are reproducible byte-for-byte.
inline SimulationOutput generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    if (spec.T < 1 || spec.n < 1 || spec.d < 1)
        throw std::invalid_argument("generate_scenario: invalid panel shape");
    if (spec.mean_functions.size() != spec.change_points.size() + 1)
        throw std::invalid_argument("generate_scenario: need one mean function per regime");
    Rng rng(seed);

    SimulationOutput out;
    out.scenario = spec.name;
    out.seed = seed;
    out.true_change_points = spec.change_points;
    FunctionalPanel& p = out.panel;
    p.T = spec.T;
    p.n = spec.n;
    p.d = spec.d;
    p.xs.resize(static_cast<std::size_t>(spec.T) * spec.n * spec.d);
    p.ys.resize(static_cast<std::size_t>(spec.T) * spec.n);
    p.original_index.resize(spec.T);
    for (int t = 1; t <= spec.T; ++t) p.original_index[t - 1] = t;

    if (spec.fixed_even_grid) {
        if (spec.d != 1) throw std::invalid_argument("generate_scenario: even grid is 1-d");
        for (int t = 1; t <= spec.T; ++t)
            for (int i = 1; i <= spec.n; ++i)
                p.xs[static_cast<std::size_t>(t - 1) * spec.n + (i - 1)] =
                    static_cast<double>(i) / spec.n;
    } else {
        for (double& v : p.xs) v = rng.uniform();
    }

    // functional noise evaluated at each snapshot's own points
    std::vector<double> xi(static_cast<std::size_t>(spec.T) * spec.n, 0.0);
    if (spec.noise == NoiseKind::basis_far_ar1) {
        BasisNoiseState st = basis_noise_init(50, 0.5, rng);
        for (int t = 1; t <= spec.T; ++t) {
            basis_noise_step(st, rng);
            for (int i = 1; i <= spec.n; ++i)
                xi[static_cast<std::size_t>(t - 1) * spec.n + (i - 1)] =
                    basis_eval(st.coeff.data(), 50, p.point(t, i), spec.d, spec.options.basis_scale);
        }
    } else if (spec.noise == NoiseKind::brownian_far) {
        if (!spec.fixed_even_grid)
            throw std::invalid_argument("generate_scenario: operator-kernel noise needs the even grid");
        BrownianFarState st = brownian_far_init(spec.n, rng, spec.options.s5_negative_exponent);
        for (int t = 1; t <= spec.T; ++t) {
            const std::vector<double>& vals = brownian_far_step(st, rng);
            for (int i = 1; i <= spec.n; ++i)
                xi[static_cast<std::size_t>(t - 1) * spec.n + (i - 1)] = vals[i - 1];
        }
    }

    // measurement error
    std::vector<double> delta(static_cast<std::size_t>(spec.T) * spec.n, 0.0);
    if (spec.noise == NoiseKind::basis_far_ar1 || spec.noise == NoiseKind::ar1_only) {
        Ar1State st = ar1_init(spec.n, 0.3, 0.5, rng);
        for (int t = 1; t <= spec.T; ++t) {
            const std::vector<double>& vals = ar1_measurement_error(st, rng);
            for (int i = 1; i <= spec.n; ++i)
                delta[static_cast<std::size_t>(t - 1) * spec.n + (i - 1)] = vals[i - 1];
        }
    }

    for (int t = 1; t <= spec.T; ++t) {
        const auto& mean = spec.mean_functions[regime_of(t, spec.change_points)];
        for (int i = 1; i <= spec.n; ++i) {
            const std::size_t k = static_cast<std::size_t>(t - 1) * spec.n + (i - 1);
            p.ys[k] = mean(p.point(t, i)) + xi[k] + delta[k];
        }
    }
    return out;
}

}  // namespace fsbs
