#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hookmil/hook_block.hpp"
#include "hookmil/matrix.hpp"
#include "hookmil/rng.hpp"

namespace hookmil {

// --- rank of the induced dependency -----------------------------------------

struct RankReport {
    std::vector<double> singular_values;  // descending
    std::size_t numerical_rank = 0;
    std::size_t claimed_bound = 0;  // 0 = no bound asserted
    bool pass = true;               // rank <= claimed_bound when one is set
};

// Singular values via one-sided Jacobi (column orthogonalization); rank is
// the count of values above tau * sigma_1.
RankReport numerical_rank(const Matrix& m, double tau = 1e-8,
                          std::size_t claimed_bound = 0);

// --- softmax Jacobian spectral norm ------------------------------------------

// Spectral norm of Diag(p) - p p^T by power iteration (converged to 1e-10).
// p must be a single row on the probability simplex.
double softmax_jacobian_norm(const Matrix& p);

struct JacobianSweepReport {
    double max_norm = 0.0;
    std::size_t samples = 0;
    // The quoted bound from the derivation this check audits, and the bound
    // that is actually tight: the norm reaches 1/2 at p = (1/2, 1/2), so the
    // quoted 1/4 cannot hold.
    double quoted_bound = 0.25;
    double tight_bound = 0.5;
    bool exceeds_quoted = false;
    bool within_tight = false;
};

// Random simplex points of mixed dimension plus the analytic maximizer
// (1/2, 1/2), so max_norm is exactly the supremum when sampling is fair.
JacobianSweepReport jacobian_norm_sweep(std::size_t samples, Rng& rng);

// --- two-hop connectivity ----------------------------------------------------

struct ConnectivityReport {
    std::size_t pairs_checked = 0;
    std::size_t failures = 0;
    double min_influence = 0.0;  // smallest directional-derivative magnitude
    bool positivity_ok = false;  // every entry of the induced dependency > 0
    bool pass = false;
};

// For sampled instance pairs (i, j), perturbing x_i must move x'_j: the
// finite-difference directional derivative along a random unit vector must
// exceed `threshold`. Always includes one i == j pair. Also checks the
// two-hop product A_x2h[j,k] * A_h2x[k,i] is positive for every k.
ConnectivityReport connectivity_check(const HookParams& params,
                                      const Matrix& x,
                                      std::size_t sample_pairs, Rng& rng,
                                      double threshold = 1e-12,
                                      double h = 1e-5);

// --- complexity ---------------------------------------------------------------

struct ComplexityReport {
    std::size_t hooks = 0;
    std::size_t dim = 0;
    std::vector<std::size_t> n_grid;
    std::vector<double> hook_ms;   // median wall time per N
    std::vector<double> dense_ms;
    std::vector<double> hook_flops;      // 3NKD + K^2 D
    std::vector<double> selfattn_flops;  // N^2 D
    // Dominant-term ratio N^2 D / (N K D) = N / K at the reference scale
    // N = 10^4 used in the efficiency claim.
    double analytic_ratio = 0.0;
};

double analytic_flop_ratio(std::size_t n, std::size_t hooks);

// Dense N x N softmax self-attention baseline (scores, softmax, weighted
// sum; no projections), the quadratic reference the hook block is compared
// against.
Matrix dense_self_attention(const Matrix& x);

// Times hook_forward vs dense_self_attention at each N (median of `repeats`
// runs after one warm-up). N values above 16384 are rejected.
ComplexityReport complexity_bench(const std::vector<std::size_t>& n_grid,
                                  std::size_t hooks, std::size_t dim,
                                  std::size_t repeats = 5);

std::string complexity_csv(const ComplexityReport& report);  // N,hook_ms,dense_ms

}  // namespace hookmil
