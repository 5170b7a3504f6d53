#include "rpcp/projection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rpcp/rng.hpp"

namespace rpcp {

ProjectionMatrix::ProjectionMatrix(std::size_t p, std::size_t k, std::uint64_t seed, std::vector<Entry> entries)
    : p_(p), k_(k), seed_(seed) {
    if (p == 0 || k == 0) {
        throw std::invalid_argument("projection matrix: p and k must be positive");
    }
    if (p > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("projection matrix: p too large");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    col_start_.assign(k + 1, 0);
    rows_.reserve(entries.size());
    signs_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        if (e.row >= p || e.col >= k) {
            throw std::invalid_argument("projection matrix: entry (" + std::to_string(e.row) + ", " +
                                        std::to_string(e.col) + ") out of range");
        }
        if (e.sign != 1 && e.sign != -1) {
            throw std::invalid_argument("projection matrix: sign must be +1 or -1");
        }
        if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
            throw std::invalid_argument("projection matrix: duplicate entry");
        }
        rows_.push_back(static_cast<std::uint32_t>(e.row));
        signs_.push_back(static_cast<std::int8_t>(e.sign));
        ++col_start_[e.col + 1];
    }
    for (std::size_t r = 0; r < k; ++r) {
        col_start_[r + 1] += col_start_[r];
    }
}

double ProjectionMatrix::value(std::size_t j, std::size_t r) const {
    if (j >= p_ || r >= k_) {
        throw std::out_of_range("projection matrix: index out of range");
    }
    const auto rows = column_rows(r);
    const auto it = std::lower_bound(rows.begin(), rows.end(), static_cast<std::uint32_t>(j));
    if (it == rows.end() || *it != j) {
        return 0.0;
    }
    return kSqrt3 * column_signs(r)[static_cast<std::size_t>(it - rows.begin())];
}

std::vector<ProjectionMatrix::Entry> ProjectionMatrix::entries() const {
    std::vector<Entry> out;
    out.reserve(rows_.size());
    for (std::size_t r = 0; r < k_; ++r) {
        const auto rows = column_rows(r);
        const auto signs = column_signs(r);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.push_back({rows[i], r, signs[i]});
        }
    }
    return out;
}

ProjectionMatrix generate_directions(std::size_t p, std::size_t k, std::uint64_t seed) {
    if (p == 0 || k == 0) {
        throw std::invalid_argument("generate_directions: p and k must be positive");
    }
    StreamRng rng(seed, 0);
    std::vector<ProjectionMatrix::Entry> entries;
    entries.reserve(p * k / 3 + 16);
    // Column-major draw order so a column's content does not depend on k.
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t j = 0; j < p; ++j) {
            const std::uint32_t u = rng.below(6);
            if (u == 0) {
                entries.push_back({j, r, +1});
            } else if (u == 5) {
                entries.push_back({j, r, -1});
            }
        }
    }
    return ProjectionMatrix(p, k, seed, std::move(entries));
}

ProjectedSeries project(const DataMatrix& x, const ProjectionMatrix& d) {
    if (x.p() != d.p()) {
        throw std::invalid_argument("project: data has " + std::to_string(x.p()) + " columns but directions have " +
                                    std::to_string(d.p()) + " rows");
    }
    const std::size_t n = x.n();
    const std::size_t p = x.p();

    // Transpose once so every data column is contiguous.
    std::vector<double> columns(n * p);
    for (std::size_t t = 0; t < n; ++t) {
        const auto row = x.row(t);
        for (std::size_t j = 0; j < p; ++j) {
            columns[j * n + t] = row[j];
        }
    }

    ProjectedSeries y(n, d.k(), d.seed());
    const double scale = kSqrt3 / std::sqrt(static_cast<double>(d.k()));
    for (std::size_t r = 0; r < d.k(); ++r) {
        auto out = y.series(r);
        const auto rows = d.column_rows(r);
        const auto signs = d.column_signs(r);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double* col = columns.data() + static_cast<std::size_t>(rows[i]) * n;
            if (signs[i] > 0) {
                for (std::size_t t = 0; t < n; ++t) out[t] += col[t];
            } else {
                for (std::size_t t = 0; t < n; ++t) out[t] -= col[t];
            }
        }
        for (double& v : out) v *= scale;
    }
    return y;
}

void write_triplets(std::ostream& out, const ProjectionMatrix& d) {
    out << "p,k,seed\n" << d.p() << ',' << d.k() << ',' << d.seed() << "\nrow,col,sign\n";
    for (const auto& e : d.entries()) {
        out << e.row << ',' << e.col << ',' << (e.sign > 0 ? "+1" : "-1") << '\n';
    }
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("triplet file: bad field '" + std::string(text) + "' on line " +
                                    std::to_string(line));
    }
    return value;
}

std::vector<std::string_view> split3(std::string_view line, std::size_t line_no) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            parts.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    if (parts.size() != 3) {
        throw std::invalid_argument("triplet file: expected 3 fields on line " + std::to_string(line_no));
    }
    return parts;
}

}  // namespace

ProjectionMatrix read_triplets(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };
    if (!next() || line != "p,k,seed") throw std::invalid_argument("triplet file: missing header");
    if (!next()) throw std::invalid_argument("triplet file: missing dimensions");
    const auto dims = split3(line, line_no);
    const auto p = parse_field<std::size_t>(dims[0], line_no);
    const auto k = parse_field<std::size_t>(dims[1], line_no);
    const auto seed = parse_field<std::uint64_t>(dims[2], line_no);
    if (!next() || line != "row,col,sign") throw std::invalid_argument("triplet file: missing entry header");
    std::vector<ProjectionMatrix::Entry> entries;
    while (next()) {
        const auto f = split3(line, line_no);
        entries.push_back({parse_field<std::size_t>(f[0], line_no), parse_field<std::size_t>(f[1], line_no),
                           parse_field<int>(f[2], line_no)});
    }
    return ProjectionMatrix(p, k, seed, std::move(entries));
}

}  // namespace rpcp
