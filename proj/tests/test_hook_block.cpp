#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "hookmil/bag_io.hpp"
#include "hookmil/errors.hpp"
#include "hookmil/hook_block.hpp"
#include "hookmil/matrix.hpp"
#include "hookmil/rng.hpp"

using namespace hookmil;

// ==== independent reference implementation ===================================
//
// Naive index loops, no shared code with the library beyond the Matrix
// container. Any agreement within 1e-12 is then evidence about the block
// itself, not about two calls into the same kernels.

namespace {

Matrix nmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < b.cols(); ++j)
                c.at(i, j) += a.at(i, k) * b.at(k, j);
    return c;
}

Matrix nmul_bt(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            for (std::size_t k = 0; k < a.cols(); ++k)
                c.at(i, j) += a.at(i, k) * b.at(j, k);
    return c;
}

Matrix nsoftmax(const Matrix& m) {
    Matrix p(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mx = m.at(i, 0);
        for (std::size_t j = 1; j < m.cols(); ++j)
            mx = std::max(mx, m.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            p.at(i, j) = std::exp(m.at(i, j) - mx);
            sum += p.at(i, j);
        }
        for (std::size_t j = 0; j < m.cols(); ++j) p.at(i, j) /= sum;
    }
    return p;
}

Matrix nlayer_norm(const Matrix& m, const Matrix& gain, const Matrix& bias) {
    Matrix out(m.rows(), m.cols());
    const double n = static_cast<double>(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) mean += m.at(i, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double d = m.at(i, j) - mean;
            var += d * d;
        }
        var /= n;
        double istd = 1.0 / std::sqrt(var + 1e-5);
        for (std::size_t j = 0; j < m.cols(); ++j)
            out.at(i, j) =
                gain.at(0, j) * (m.at(i, j) - mean) * istd + bias.at(0, j);
    }
    return out;
}

struct Reference {
    Matrix logits, a_h2x, h_tilde, h_prime, a_x2h, x_prime;
    double div = 0.0;
};

Reference reference_forward(const Matrix& x, const HookParams& p) {
    const std::size_t D = p.dim();
    const std::size_t heads = p.head_count();
    const std::size_t hd = D / heads;
    Reference r;

    // stage 1: hooks query instances
    Matrix hq = nmul_bt(p.tokens, p.agg_wq);
    Matrix ik = nmul_bt(x, p.agg_wk);
    Matrix iv = nmul_bt(x, p.agg_wv);
    r.logits = nmul_bt(hq, ik);
    for (std::size_t i = 0; i < r.logits.size(); ++i)
        r.logits.data()[i] /= std::sqrt(static_cast<double>(D));
    r.a_h2x = nsoftmax(r.logits);
    Matrix pooled = nmul(r.a_h2x, iv);
    Matrix pre1(p.tokens.rows(), D);
    for (std::size_t i = 0; i < pre1.size(); ++i)
        pre1.data()[i] = p.tokens.data()[i] + pooled.data()[i];
    r.h_tilde = nlayer_norm(pre1, p.ln_agg.gain, p.ln_agg.bias);

    // stage 2: self-attention among hooks
    Matrix concat(r.h_tilde.rows(), D);
    for (std::size_t l = 0; l < heads; ++l) {
        Matrix q = nmul(r.h_tilde, p.heads[l].w_q);
        Matrix k = nmul(r.h_tilde, p.heads[l].w_k);
        Matrix v = nmul(r.h_tilde, p.heads[l].w_v);
        Matrix s = nmul_bt(q, k);
        for (std::size_t i = 0; i < s.size(); ++i)
            s.data()[i] /= std::sqrt(static_cast<double>(hd));
        Matrix a = nsoftmax(s);
        Matrix o = nmul(a, v);
        for (std::size_t i = 0; i < o.rows(); ++i)
            for (std::size_t j = 0; j < hd; ++j)
                concat.at(i, l * hd + j) = o.at(i, j);
    }
    Matrix proj = nmul_bt(concat, p.inter_wo);
    Matrix pre2(r.h_tilde.rows(), D);
    for (std::size_t i = 0; i < pre2.size(); ++i)
        pre2.data()[i] = r.h_tilde.data()[i] + proj.data()[i];
    r.h_prime = nlayer_norm(pre2, p.ln_inter.gain, p.ln_inter.bias);

    // stage 3: instances query refined hooks
    Matrix xq = nmul_bt(x, p.fb_wq);
    Matrix hk = nmul_bt(r.h_prime, p.fb_wk);
    Matrix hv = nmul_bt(r.h_prime, p.fb_wv);
    Matrix s3 = nmul_bt(xq, hk);
    for (std::size_t i = 0; i < s3.size(); ++i)
        s3.data()[i] /= std::sqrt(static_cast<double>(D));
    r.a_x2h = nsoftmax(s3);
    Matrix pulled = nmul(r.a_x2h, hv);
    Matrix pre3(x.rows(), D);
    for (std::size_t i = 0; i < pre3.size(); ++i)
        pre3.data()[i] = x.data()[i] + pulled.data()[i];
    r.x_prime = nlayer_norm(pre3, p.ln_fb.gain, p.ln_fb.bias);

    // stage 4: diversity over normalized logits rows
    const std::size_t K = r.logits.rows();
    if (K > 1) {
        double fro = 0.0;
        for (std::size_t i = 0; i < r.logits.size(); ++i)
            fro += r.logits.data()[i] * r.logits.data()[i];
        fro = std::sqrt(fro) + 1e-6;
        double acc = 0.0;
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < K; ++j) {
                if (i == j) continue;
                double dot = 0.0;
                for (std::size_t c = 0; c < r.logits.cols(); ++c)
                    dot += r.logits.at(i, c) / fro * (r.logits.at(j, c) / fro);
                acc += dot * dot;
            }
        r.div = acc / (static_cast<double>(K) * static_cast<double>(K - 1));
    }
    return r;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

Matrix random_bag(std::size_t n, std::size_t d, Rng& rng, double scale = 1.0) {
    Matrix x(n, d);
    for (std::size_t i = 0; i < x.size(); ++i)
        x.data()[i] = rng.normal() * scale;
    return x;
}

HookParams make_params(std::size_t k, std::size_t d, std::size_t heads,
                       std::uint64_t seed, double token_std = 0.5) {
    Rng rng(seed);
    return init_hook_params(k, d, heads, HookInitStrategy::trunc_normal(token_std),
                            rng);
}

}  // namespace

// ==== forward agreement ======================================================

TEST_CASE("all four stages match an independent transcription") {
    Rng rng(101);
    Matrix x = random_bag(5, 4, rng);
    HookParams p = make_params(2, 4, 2, 555);

    HookForwardRecord rec = hook_forward(x, p);
    Reference ref = reference_forward(x, p);

    CHECK(max_abs_diff(rec.logits, ref.logits) < 1e-12);
    CHECK(max_abs_diff(rec.a_h2x, ref.a_h2x) < 1e-12);
    CHECK(max_abs_diff(rec.h_tilde, ref.h_tilde) < 1e-12);
    CHECK(max_abs_diff(rec.h_prime, ref.h_prime) < 1e-12);
    CHECK(max_abs_diff(rec.a_x2h, ref.a_x2h) < 1e-12);
    CHECK(max_abs_diff(rec.x_prime, ref.x_prime) < 1e-12);
    CHECK(rec.div_loss == doctest::Approx(ref.div).epsilon(1e-12));
}

TEST_CASE("forward agreement holds across shapes and head counts") {
    struct Case {
        std::size_t n, d, k, heads;
    };
    for (Case c : {Case{1, 8, 3, 1}, Case{7, 6, 1, 2}, Case{12, 8, 4, 4}}) {
        Rng rng(c.n * 1000 + c.d);
        Matrix x = random_bag(c.n, c.d, rng, 2.0);
        HookParams p = make_params(c.k, c.d, c.heads, 77 + c.k);
        HookForwardRecord rec = hook_forward(x, p);
        Reference ref = reference_forward(x, p);
        CHECK(max_abs_diff(rec.x_prime, ref.x_prime) < 1e-12);
        CHECK(max_abs_diff(rec.a_h2x, ref.a_h2x) < 1e-12);
        CHECK(rec.div_loss == doctest::Approx(ref.div).epsilon(1e-12));
    }
}

// ==== structural properties ==================================================

TEST_CASE("both attention maps are row-stochastic") {
    Rng rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        Matrix x = random_bag(9, 8, rng, 3.0);
        HookParams p = make_params(4, 8, 2, 900 + rep);
        HookForwardRecord rec = hook_forward(x, p);
        for (const Matrix* m : {&rec.a_h2x, &rec.a_x2h}) {
            for (std::size_t i = 0; i < m->rows(); ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < m->cols(); ++j) {
                    CHECK(m->at(i, j) > 0.0);
                    sum += m->at(i, j);
                }
                CHECK(std::abs(sum - 1.0) < 1e-10);
            }
        }
    }
}

TEST_CASE("permuting the bag permutes the outputs consistently") {
    Rng rng(13);
    const std::size_t n = 6;
    Matrix x = random_bag(n, 8, rng);
    HookParams p = make_params(3, 8, 2, 31);

    // reversal permutation
    Matrix xp(n, 8);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 8; ++j) xp.at(i, j) = x.at(n - 1 - i, j);

    HookForwardRecord a = hook_forward(x, p);
    HookForwardRecord b = hook_forward(xp, p);

    // instance-indexed outputs follow the permutation
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(std::abs(a.x_prime.at(n - 1 - i, j) - b.x_prime.at(i, j)) <
                  1e-12);
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(std::abs(a.a_x2h.at(n - 1 - i, k) - b.a_x2h.at(i, k)) <
                  1e-12);
    }
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(a.a_h2x.at(k, n - 1 - i) - b.a_h2x.at(k, i)) < 1e-12);

    // hook-indexed outputs are invariant
    CHECK(max_abs_diff(a.h_prime, b.h_prime) < 1e-12);
    CHECK(a.div_loss == doctest::Approx(b.div_loss).epsilon(1e-12));
}

TEST_CASE("identical instances draw uniform aggregation weights") {
    Matrix x(5, 8);
    Rng rng(3);
    for (std::size_t j = 0; j < 8; ++j) {
        double v = rng.normal();
        for (std::size_t i = 0; i < 5; ++i) x.at(i, j) = v;
    }
    HookParams p = make_params(2, 8, 2, 44);
    HookForwardRecord rec = hook_forward(x, p);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(rec.a_h2x.at(k, i) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("a single-instance bag gets all the attention") {
    Rng rng(5);
    Matrix x = random_bag(1, 8, rng);
    HookParams p = make_params(3, 8, 2, 46);
    HookForwardRecord rec = hook_forward(x, p);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(rec.a_h2x.at(k, 0) == 1.0);
}

// ==== diversity ==============================================================

TEST_CASE("diversity is zero for a single hook") {
    Matrix logits(1, 10, 3.0);
    CHECK(diversity_loss(logits) == 0.0);
}

TEST_CASE("diversity of identical rows approaches one quarter") {
    Matrix logits(2, 3);
    logits.at(0, 0) = 1.0;
    logits.at(1, 0) = 1.0;
    // exact value with the stabilizer disabled
    CHECK(std::abs(diversity_loss(logits, 0.0) - 0.25) < 1e-12);
    // production stabilizer shifts it by ~eps/norm
    CHECK(diversity_loss(logits) == doctest::Approx(0.25).epsilon(1e-5));
    // at large norm the shift falls below 1e-12 even with the stabilizer
    Matrix big(2, 3);
    big.at(0, 0) = 4e6;
    big.at(1, 0) = 4e6;
    CHECK(std::abs(diversity_loss(big) - 0.25) < 1e-12);
}

TEST_CASE("diversity of orthogonal rows is exactly zero") {
    Matrix logits(3, 6);
    logits.at(0, 0) = 1.5;
    logits.at(1, 2) = -2.0;
    logits.at(2, 4) = 0.25;
    CHECK(diversity_loss(logits) == 0.0);
    CHECK(diversity_loss(logits, 0.0) == 0.0);
}

TEST_CASE("diversity stays in the unit interval on random logits") {
    Rng rng(19);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix logits = random_bag(4, 9, rng, 2.0);
        double d = diversity_loss(logits);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
    }
}

// ==== induced dependency =====================================================

TEST_CASE("induced dependency is positive and row-stochastic") {
    Rng rng(23);
    Matrix x = random_bag(11, 8, rng, 2.0);
    HookParams p = make_params(4, 8, 2, 88);
    HookForwardRecord rec = hook_forward(x, p);
    Matrix dep = induced_dependency(rec.a_x2h, rec.a_h2x);
    CHECK(dep.rows() == 11);
    CHECK(dep.cols() == 11);
    for (std::size_t i = 0; i < dep.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < dep.cols(); ++j) {
            CHECK(dep.at(i, j) > 0.0);
            sum += dep.at(i, j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-10);
    }
}

TEST_CASE("induced dependency rejects mismatched hook counts") {
    Matrix a_x2h(4, 3), a_h2x(2, 4);
    CHECK_THROWS_AS(induced_dependency(a_x2h, a_h2x), DimensionError);
}

// ==== construction ===========================================================

TEST_CASE("initialization is reproducible from the seed") {
    HookParams a = make_params(3, 8, 2, 1234, 0.02);
    HookParams b = make_params(3, 8, 2, 1234, 0.02);
    CHECK(a.tokens == b.tokens);
    CHECK(a.agg_wq == b.agg_wq);
    CHECK(a.inter_wo == b.inter_wo);
    CHECK(a.fb_wv == b.fb_wv);
    CHECK(a.heads[1].w_k == b.heads[1].w_k);
}

TEST_CASE("token init respects the truncation bound") {
    HookParams p = make_params(16, 32, 2, 5, 0.02);
    for (std::size_t i = 0; i < p.tokens.size(); ++i)
        CHECK(std::abs(p.tokens.data()[i]) <= 0.04);
    // projections live in [-1/sqrt(D), +1/sqrt(D)]
    const double bound = 1.0 / std::sqrt(32.0);
    for (std::size_t i = 0; i < p.agg_wq.size(); ++i)
        CHECK(std::abs(p.agg_wq.data()[i]) <= bound);
    // LayerNorm starts as identity
    for (std::size_t j = 0; j < 32; ++j) {
        CHECK(p.ln_agg.gain.at(0, j) == 1.0);
        CHECK(p.ln_agg.bias.at(0, j) == 0.0);
    }
}

TEST_CASE("external vectors load exactly and reject bad shapes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "hookmil_test_ext";
    fs::create_directories(dir);
    std::string path = (dir / "hooks.hkb").string();

    Matrix vecs(2, 4);
    for (std::size_t i = 0; i < vecs.size(); ++i)
        vecs.data()[i] = 0.5 * static_cast<double>(i) - 1.0;
    write_bag(path, vecs);

    Rng rng(1);
    Matrix loaded = init_hooks(HookInitStrategy::external(path), 2, 4, rng);
    CHECK(loaded == vecs);

    CHECK_THROWS_AS(init_hooks(HookInitStrategy::external(path), 3, 4, rng),
                    DimensionError);
    CHECK_THROWS_AS(init_hooks(HookInitStrategy::external(path), 2, 5, rng),
                    DimensionError);
    fs::remove_all(dir);
}

TEST_CASE("strategy text round-trips") {
    CHECK(HookInitStrategy::parse("trunc-normal").to_string() ==
          "trunc-normal:0.02");
    CHECK(HookInitStrategy::parse("trunc-normal:0.5").to_string() ==
          "trunc-normal:0.5");
    CHECK(HookInitStrategy::parse("external:/tmp/h.hkb").to_string() ==
          "external:/tmp/h.hkb");
    CHECK_THROWS_AS(HookInitStrategy::parse("gaussian"), ConfigError);
    CHECK_THROWS_AS(HookInitStrategy::parse("trunc-normal:zero"), ConfigError);
    CHECK_THROWS_AS(HookInitStrategy::parse("external:"), ConfigError);
}

// ==== contract violations ====================================================

TEST_CASE("shape violations are rejected with context") {
    HookParams p = make_params(2, 8, 2, 9);
    Matrix wrong(3, 7);
    CHECK_THROWS_AS(hook_forward(wrong, p), DimensionError);
    Matrix empty(0, 8);
    CHECK_THROWS_AS(hook_forward(empty, p), DimensionError);
    Rng rng(2);
    CHECK_THROWS_AS(
        init_hook_params(0, 8, 2, HookInitStrategy::trunc_normal(), rng),
        ConfigError);
    CHECK_THROWS_AS(
        init_hook_params(2, 9, 2, HookInitStrategy::trunc_normal(), rng),
        ConfigError);
}
