#include "rpcp/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rpcp {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix: expected " + std::to_string(rows_ * cols_) + " values, got " +
                                    std::to_string(values_.size()));
    }
}

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
    for (std::size_t t = 0; t < values_.rows(); ++t) {
        for (std::size_t j = 0; j < values_.cols(); ++j) {
            if (!std::isfinite(values_(t, j))) {
                throw std::invalid_argument("data matrix: non-finite value at row " + std::to_string(t + 1) +
                                            ", column " + std::to_string(j + 1));
            }
        }
    }
}

DataMatrix::DataMatrix(std::size_t n, std::size_t p, std::vector<double> values)
    : DataMatrix(Matrix(n, p, std::move(values))) {}

}  // namespace rpcp
