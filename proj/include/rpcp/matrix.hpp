#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rpcp {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {values_.data() + r * cols_, cols_}; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// n x p observations, rows are time points. Values are finite.
class DataMatrix {
public:
    DataMatrix() = default;
    /// Throws std::invalid_argument on non-finite entries.
    explicit DataMatrix(Matrix values);
    DataMatrix(std::size_t n, std::size_t p, std::vector<double> values);

    std::size_t n() const noexcept { return values_.rows(); }
    std::size_t p() const noexcept { return values_.cols(); }

    double operator()(std::size_t t, std::size_t j) const noexcept { return values_(t, j); }
    std::span<const double> row(std::size_t t) const noexcept { return values_.row(t); }
    const Matrix& matrix() const noexcept { return values_; }

    bool operator==(const DataMatrix&) const = default;

private:
    Matrix values_;
};

}  // namespace rpcp
