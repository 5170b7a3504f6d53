#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rpcp/matrix.hpp"

namespace rpcp {

/// Sparse p x k direction matrix with entries in {-sqrt(3), 0, +sqrt(3)}.
///
/// Stored column-compressed: for column r the nonzero rows are
/// rows_[col_start_[r] .. col_start_[r+1]) with signs in signs_.
/// Immutable after construction.
class ProjectionMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        int sign;  // +1 or -1
    };

    /// Build from nonzero entries. Throws std::invalid_argument on zero
    /// dimensions, out-of-range indices, signs other than +-1, or duplicates.
    ProjectionMatrix(std::size_t p, std::size_t k, std::uint64_t seed, std::vector<Entry> entries);

    std::size_t p() const noexcept { return p_; }
    std::size_t k() const noexcept { return k_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t nonzeros() const noexcept { return rows_.size(); }

    /// Entry value d_{j,r}.
    double value(std::size_t j, std::size_t r) const;

    std::span<const std::uint32_t> column_rows(std::size_t r) const noexcept {
        return {rows_.data() + col_start_[r], col_start_[r + 1] - col_start_[r]};
    }
    std::span<const std::int8_t> column_signs(std::size_t r) const noexcept {
        return {signs_.data() + col_start_[r], col_start_[r + 1] - col_start_[r]};
    }

    /// Nonzeros in column-major order.
    std::vector<Entry> entries() const;

    bool operator==(const ProjectionMatrix&) const = default;

private:
    std::size_t p_;
    std::size_t k_;
    std::uint64_t seed_;
    std::vector<std::size_t> col_start_;
    std::vector<std::uint32_t> rows_;
    std::vector<std::int8_t> signs_;
};

/// n x k projected series, stored column by column so each series is contiguous.
class ProjectedSeries {
public:
    ProjectedSeries(std::size_t n, std::size_t k, std::uint64_t source_seed)
        : n_(n), k_(k), source_seed_(source_seed), values_(n * k, 0.0) {}

    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return k_; }
    std::uint64_t source_seed() const noexcept { return source_seed_; }

    std::span<const double> series(std::size_t r) const noexcept { return {values_.data() + r * n_, n_}; }
    std::span<double> series(std::size_t r) noexcept { return {values_.data() + r * n_, n_}; }
    double operator()(std::size_t t, std::size_t r) const noexcept { return values_[r * n_ + t]; }

private:
    std::size_t n_;
    std::size_t k_;
    std::uint64_t source_seed_;
    std::vector<double> values_;
};

inline constexpr double kSqrt3 = 1.7320508075688772;

/// Draw a p x k matrix with entries +sqrt(3) (prob 1/6), 0 (2/3), -sqrt(3) (1/6).
/// Identical output for identical (p, k, seed).
ProjectionMatrix generate_directions(std::size_t p, std::size_t k, std::uint64_t seed);

/// Y = X D / sqrt(k). Only nonzero direction entries are visited.
ProjectedSeries project(const DataMatrix& x, const ProjectionMatrix& d);

/// Triplet text format:
///   p,k,seed
///   <p>,<k>,<seed>
///   row,col,sign
///   <row>,<col>,<+1|-1>   (0-based, column-major order)
void write_triplets(std::ostream& out, const ProjectionMatrix& d);
ProjectionMatrix read_triplets(std::istream& in);

}  // namespace rpcp
