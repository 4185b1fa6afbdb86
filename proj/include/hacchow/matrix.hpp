#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace hacchow::numkit {

using Vector = std::vector<double>;

/**
 * @brief Dense row-major matrix of doubles.
 *
 * A deliberately small value type: the largest objects in this library are
 * T x K basis matrices and T x T kernel matrices used in tests, so no
 * expression templates or BLAS dispatch are needed.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    [[nodiscard]] static Matrix identity(std::size_t n);
    [[nodiscard]] static Matrix column(std::span<const double> v);
    [[nodiscard]] static Matrix diagonal(std::span<const double> d);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }
    [[nodiscard]] bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] Vector col(std::size_t j) const;
    void set_col(std::size_t j, std::span<const double> v);

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    [[nodiscard]] Matrix transpose() const;
    /// Leading `n` columns.
    [[nodiscard]] Matrix leading_cols(std::size_t n) const;
    [[nodiscard]] Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;

    [[nodiscard]] double max_abs() const noexcept;
    [[nodiscard]] double frobenius() const noexcept;
    [[nodiscard]] double trace() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] Matrix operator+(Matrix a, const Matrix& b);
[[nodiscard]] Matrix operator-(Matrix a, const Matrix& b);
[[nodiscard]] Matrix operator*(Matrix a, double s);
[[nodiscard]] Matrix operator*(double s, Matrix a);
[[nodiscard]] Matrix operator*(const Matrix& a, const Matrix& b);
[[nodiscard]] Vector operator*(const Matrix& a, std::span<const double> x);

/// a' b without forming the transpose.
[[nodiscard]] Matrix crossprod(const Matrix& a, const Matrix& b);
[[nodiscard]] Matrix symmetrize(const Matrix& s);
[[nodiscard]] Matrix kronecker(const Matrix& a, const Matrix& b);
/// Column-stacking vec operator.
[[nodiscard]] Vector vec(const Matrix& a);
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
/// Largest elementwise |a - b|.
[[nodiscard]] double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace hacchow::numkit
