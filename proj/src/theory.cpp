#include "hookmil/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "hookmil/errors.hpp"

namespace hookmil {

// === numerical rank ==========================================================

RankReport numerical_rank(const Matrix& m, double tau,
                          std::size_t claimed_bound) {
    if (!(tau > 0.0 && tau < 1.0))
        throw ConfigError("numerical_rank: tau must lie in (0, 1)");
    if (m.empty()) throw DimensionError("numerical_rank: empty matrix");

    // One-sided Jacobi on columns; transpose first if that gives fewer
    // columns (singular values are transpose-invariant).
    Matrix a = m.cols() > m.rows() ? transpose(m) : m;
    const std::size_t rows = a.rows(), cols = a.cols();

    const double conv_tol = 1e-14;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double vp = a.at(i, p), vq = a.at(i, q);
                    app += vp * vp;
                    aqq += vq * vq;
                    apq += vp * vq;
                }
                if (std::abs(apq) <= conv_tol * std::sqrt(app * aqq) ||
                    apq == 0.0)
                    continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t =
                    (zeta >= 0.0 ? 1.0 : -1.0) /
                    (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double vp = a.at(i, p), vq = a.at(i, q);
                    a.at(i, p) = c * vp - s * vq;
                    a.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    RankReport report;
    report.singular_values.reserve(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            norm_sq += a.at(i, j) * a.at(i, j);
        report.singular_values.push_back(std::sqrt(norm_sq));
    }
    std::sort(report.singular_values.begin(), report.singular_values.end(),
              std::greater<double>());

    const double sigma1 = report.singular_values.front();
    report.numerical_rank = 0;
    for (double s : report.singular_values)
        if (s > tau * sigma1 && sigma1 > 0.0) ++report.numerical_rank;
    report.claimed_bound = claimed_bound;
    report.pass =
        claimed_bound == 0 || report.numerical_rank <= claimed_bound;
    return report;
}

// === softmax Jacobian ========================================================

double softmax_jacobian_norm(const Matrix& p) {
    if (p.rows() != 1 || p.cols() == 0)
        throw DimensionError("softmax_jacobian_norm: p must be a single row");
    double sum = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
        if (p.at(0, j) < 0.0)
            throw ConfigError("softmax_jacobian_norm: negative entry");
        sum += p.at(0, j);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("softmax_jacobian_norm: entries sum to " +
                          format_double(sum) + ", not 1");

    const std::size_t n = p.cols();
    // J = Diag(p) - p p^T, symmetric PSD; power iteration converges to its
    // largest eigenvalue from any start not orthogonal to the top space.
    std::vector<double> v(n), jv(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::sin(static_cast<double>(i) + 1.0);

    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
        double pv = 0.0;
        for (std::size_t i = 0; i < n; ++i) pv += p.at(0, i) * v[i];
        for (std::size_t i = 0; i < n; ++i)
            jv[i] = p.at(0, i) * v[i] - p.at(0, i) * pv;

        double norm = 0.0;
        for (double x : jv) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;  // J annihilated v (e.g. vertex of simplex)

        double rayleigh = 0.0;
        for (std::size_t i = 0; i < n; ++i) rayleigh += v[i] * jv[i];
        double vnorm = 0.0;
        for (double x : v) vnorm += x * x;
        rayleigh /= vnorm;

        for (std::size_t i = 0; i < n; ++i) v[i] = jv[i] / norm;
        if (it > 2 && std::abs(rayleigh - lambda) <= 1e-12) return rayleigh;
        lambda = rayleigh;
    }
    return lambda;
}

JacobianSweepReport jacobian_norm_sweep(std::size_t samples, Rng& rng) {
    JacobianSweepReport report;
    report.samples = samples + 1;

    // The analytic maximizer first: eigenvalues of J at (1/2, 1/2) are
    // {0, 1/2}, so the sweep's max should be exactly 0.5.
    Matrix half(1, 2);
    half.at(0, 0) = 0.5;
    half.at(0, 1) = 0.5;
    report.max_norm = softmax_jacobian_norm(half);

    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.below(5));
        Matrix p(1, n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            // Exponential draws normalize to a uniform simplex point.
            p.at(0, j) = -std::log(1.0 - rng.next_double());
            sum += p.at(0, j);
        }
        for (std::size_t j = 0; j < n; ++j) p.at(0, j) /= sum;
        report.max_norm = std::max(report.max_norm, softmax_jacobian_norm(p));
    }
    report.exceeds_quoted = report.max_norm > report.quoted_bound;
    report.within_tight = report.max_norm <= report.tight_bound + 1e-9;
    return report;
}

// === connectivity ============================================================

ConnectivityReport connectivity_check(const HookParams& params,
                                      const Matrix& x,
                                      std::size_t sample_pairs, Rng& rng,
                                      double threshold, double h) {
    if (sample_pairs == 0)
        throw ConfigError("connectivity_check: need at least one pair");
    const std::size_t n = x.rows(), d = x.cols();

    HookForwardRecord base = hook_forward(x, params);
    const Matrix dep = induced_dependency(base.a_x2h, base.a_h2x);
    bool positive = true;
    for (std::size_t i = 0; i < dep.size() && positive; ++i)
        positive = dep.data()[i] > 0.0;

    ConnectivityReport report;
    report.positivity_ok = positive;
    report.min_influence = std::numeric_limits<double>::infinity();

    for (std::size_t pair = 0; pair < sample_pairs; ++pair) {
        std::size_t i = static_cast<std::size_t>(rng.below(n));
        std::size_t j = pair == 0 ? i  // self-path always exercised once
                                  : static_cast<std::size_t>(rng.below(n));

        // Random unit direction for the perturbation of instance i.
        Matrix dir(1, d);
        double norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            dir.at(0, c) = rng.normal();
            norm += dir.at(0, c) * dir.at(0, c);
        }
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < d; ++c) dir.at(0, c) /= norm;

        Matrix x_up = x, x_down = x;
        for (std::size_t c = 0; c < d; ++c) {
            x_up.at(i, c) += h * dir.at(0, c);
            x_down.at(i, c) -= h * dir.at(0, c);
        }
        const Matrix up = hook_forward(x_up, params).x_prime;
        const Matrix down = hook_forward(x_down, params).x_prime;

        double influence_sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double g = (up.at(j, c) - down.at(j, c)) / (2.0 * h);
            influence_sq += g * g;
        }
        const double influence = std::sqrt(influence_sq);
        report.min_influence = std::min(report.min_influence, influence);
        ++report.pairs_checked;

        // Two-hop path through every hook must carry positive weight.
        bool path_ok = true;
        for (std::size_t k = 0; k < params.hook_count(); ++k)
            path_ok = path_ok &&
                      base.a_x2h.at(j, k) * base.a_h2x.at(k, i) > 0.0;
        if (influence <= threshold || !path_ok) ++report.failures;
    }
    report.pass = positive && report.failures == 0;
    return report;
}

// === complexity ==============================================================

double analytic_flop_ratio(std::size_t n, std::size_t hooks) {
    if (hooks == 0) throw ConfigError("analytic_flop_ratio: hooks must be > 0");
    return static_cast<double>(n) / static_cast<double>(hooks);
}

Matrix dense_self_attention(const Matrix& x) {
    const double s = 1.0 / std::sqrt(static_cast<double>(x.cols()));
    Matrix scores = matmul_nt(x, x);
    scale_inplace(scores, s);
    return matmul(row_softmax(scores), x);
}

namespace {

template <typename Fn>
double median_ms(Fn&& fn, std::size_t repeats) {
    fn();  // warm-up
    std::vector<double> times;
    times.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

}  // namespace

ComplexityReport complexity_bench(const std::vector<std::size_t>& n_grid,
                                  std::size_t hooks, std::size_t dim,
                                  std::size_t repeats) {
    if (n_grid.empty()) throw ConfigError("complexity_bench: empty N grid");
    if (!std::is_sorted(n_grid.begin(), n_grid.end()))
        throw ConfigError("complexity_bench: N grid must ascend");
    if (n_grid.back() > 16384)
        throw ConfigError("complexity_bench: N capped at 16384");
    if (repeats < 3)
        throw ConfigError("complexity_bench: need at least 3 repeats");

    Rng rng(20240817);
    HookParams params = init_hook_params(
        hooks, dim, 1, HookInitStrategy::trunc_normal(), rng);

    ComplexityReport report;
    report.hooks = hooks;
    report.dim = dim;
    report.analytic_ratio = analytic_flop_ratio(10000, hooks);
    for (const std::size_t n : n_grid) {
        Matrix x = uniform_fill(n, dim, -1.0, 1.0, rng);
        report.n_grid.push_back(n);
        report.hook_ms.push_back(
            median_ms([&] { hook_forward(x, params); }, repeats));
        report.dense_ms.push_back(
            median_ms([&] { dense_self_attention(x); }, repeats));
        const double nd = static_cast<double>(n);
        const double kd = static_cast<double>(hooks);
        const double dd = static_cast<double>(dim);
        report.hook_flops.push_back(3.0 * nd * kd * dd + kd * kd * dd);
        report.selfattn_flops.push_back(nd * nd * dd);
    }
    return report;
}

std::string complexity_csv(const ComplexityReport& report) {
    std::string out = "N,hook_ms,dense_ms\n";
    char buf[128];
    for (std::size_t i = 0; i < report.n_grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", report.n_grid[i],
                      report.hook_ms[i], report.dense_ms[i]);
        out += buf;
    }
    return out;
}

}  // namespace hookmil
