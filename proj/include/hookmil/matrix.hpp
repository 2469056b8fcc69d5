#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hookmil/rng.hpp"

namespace hookmil {

// Dense row-major double matrix. All model state and activations use this
// type; vectors are 1xN matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix zeros_like(const Matrix& other) {
        return Matrix(other.rows_, other.cols_);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t i) {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::string shape_str(const Matrix& m);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

// "RxC" vs "RxC" mismatch text in exceptions names both shapes.
void require_same_shape(const Matrix& a, const Matrix& b, const char* where);

// --- products -------------------------------------------------------------

// a * b; fixed i,k,j loop order so accumulation is deterministic.
Matrix matmul(const Matrix& a, const Matrix& b);

// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// a^T * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// --- elementwise ----------------------------------------------------------

Matrix add(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);
void add_scaled_inplace(Matrix& a, const Matrix& b, double scale);
Matrix scale(const Matrix& m, double factor);
void scale_inplace(Matrix& m, double factor);
Matrix hadamard(const Matrix& a, const Matrix& b);
double dot_all(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

// --- normalizations -------------------------------------------------------

// Row-wise softmax with per-row max subtraction.
Matrix row_softmax(const Matrix& m);

struct LayerNormTape {
    Matrix x_hat;                  // normalized pre-affine values
    std::vector<double> inv_std;   // 1/sqrt(var + eps) per row
};

// Per-row mean/variance normalization followed by the affine map
// y = x_hat * gain + bias. gain and bias are 1 x cols.
Matrix layer_norm_rows(const Matrix& m, const Matrix& gain, const Matrix& bias,
                       double eps, LayerNormTape* tape = nullptr);

double frobenius_norm(const Matrix& m);

// m / (||m||_F + eps); the zero matrix maps to itself.
Matrix frobenius_normalize(const Matrix& m, double eps);

// --- random fills ---------------------------------------------------------

// Entries ~ N(0, stddev^2) truncated to [-2*stddev, +2*stddev].
Matrix truncated_normal_fill(std::size_t rows, std::size_t cols, double stddev,
                             Rng& rng);

Matrix uniform_fill(std::size_t rows, std::size_t cols, double lo, double hi,
                    Rng& rng);

}  // namespace hookmil
