#include "hookmil/matrix.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "hookmil/errors.hpp"

namespace hookmil {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(where) + ": shape mismatch " +
                             shape_str(a) + " vs " + shape_str(b));
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree, " +
                             shape_str(a) + " * " + shape_str(b));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out_row = out.data() + i * out.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a.at(i, k);
            const double* b_row = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out_row[j] += aik * b_row[j];
            }
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: inner dimensions disagree, " +
                             shape_str(a) + " * " + shape_str(b) + "^T");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* a_row = a.data() + i * a.cols();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* b_row = b.data() + j * b.cols();
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) sum += a_row[k] * b_row[k];
            out.at(i, j) = sum;
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: inner dimensions disagree, " +
                             shape_str(a) + "^T * " + shape_str(b));
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* a_row = a.data() + k * a.cols();
        const double* b_row = b.data() + k * b.cols();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double* out_row = out.data() + i * out.cols();
            const double aki = a_row[i];
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out_row[j] += aki * b_row[j];
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(j, i) = m.at(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add_inplace");
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

void add_scaled_inplace(Matrix& a, const Matrix& b, double factor) {
    require_same_shape(a, b, "add_scaled_inplace");
    for (std::size_t i = 0; i < a.size(); ++i)
        a.data()[i] += factor * b.data()[i];
}

Matrix scale(const Matrix& m, double factor) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factor;
    return out;
}

void scale_inplace(Matrix& m, double factor) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= factor;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

double dot_all(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "dot_all");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a.data()[i] * b.data()[i];
    return sum;
}

bool all_finite(const Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i])) return false;
    }
    return true;
}

Matrix row_softmax(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto in_row = m.row(i);
        auto out_row = out.row(i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (double v : in_row) row_max = std::max(row_max, v);
        double sum = 0.0;
        for (std::size_t j = 0; j < in_row.size(); ++j) {
            out_row[j] = std::exp(in_row[j] - row_max);
            sum += out_row[j];
        }
        for (std::size_t j = 0; j < out_row.size(); ++j) out_row[j] /= sum;
    }
    return out;
}

Matrix layer_norm_rows(const Matrix& m, const Matrix& gain, const Matrix& bias,
                       double eps, LayerNormTape* tape) {
    if (gain.rows() != 1 || gain.cols() != m.cols() || bias.rows() != 1 ||
        bias.cols() != m.cols()) {
        throw DimensionError("layer_norm_rows: affine params must be 1x" +
                             std::to_string(m.cols()) + ", got gain " +
                             shape_str(gain) + ", bias " + shape_str(bias));
    }
    if (eps <= 0.0) throw ConfigError("layer_norm_rows: eps must be positive");

    Matrix out(m.rows(), m.cols());
    if (tape) {
        tape->x_hat = Matrix(m.rows(), m.cols());
        tape->inv_std.assign(m.rows(), 0.0);
    }
    const double n = static_cast<double>(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto in_row = m.row(i);
        double mean = 0.0;
        for (double v : in_row) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : in_row) var += (v - mean) * (v - mean);
        var /= n;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        if (tape) tape->inv_std[i] = inv_std;
        for (std::size_t j = 0; j < in_row.size(); ++j) {
            const double x_hat = (in_row[j] - mean) * inv_std;
            if (tape) tape->x_hat.at(i, j) = x_hat;
            out.at(i, j) = x_hat * gain.at(0, j) + bias.at(0, j);
        }
    }
    return out;
}

double frobenius_norm(const Matrix& m) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) sum += m.data()[i] * m.data()[i];
    return std::sqrt(sum);
}

Matrix frobenius_normalize(const Matrix& m, double eps) {
    if (eps < 0.0)
        throw ConfigError("frobenius_normalize: eps must be non-negative");
    const double denom = frobenius_norm(m) + eps;
    if (denom == 0.0) return m;  // zero matrix with eps 0
    return scale(m, 1.0 / denom);
}

Matrix truncated_normal_fill(std::size_t rows, std::size_t cols, double stddev,
                             Rng& rng) {
    if (stddev <= 0.0)
        throw ConfigError("truncated_normal_fill: stddev must be positive");
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = rng.truncated_normal(stddev);
    return out;
}

Matrix uniform_fill(std::size_t rows, std::size_t cols, double lo, double hi,
                    Rng& rng) {
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(lo, hi);
    return out;
}

}  // namespace hookmil
