#include "rpcp/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <string_view>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace rpcp {

namespace {

std::string_view trim_blanks(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_double(std::string_view text) {
    text = trim_blanks(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
    text = trim_blanks(text);
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

std::optional<std::chrono::year_month_day> parse_date(std::string_view text) {
    text = trim_blanks(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = parse_int<int>(text.substr(0, 4));
    const auto m = parse_int<unsigned>(text.substr(5, 2));
    const auto d = parse_int<unsigned>(text.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

std::string iso(const std::chrono::year_month_day& d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

// Day index 0..364 ignoring February 29.
std::size_t day_of_common_year(const std::chrono::year_month_day& d) {
    using namespace std::chrono;
    const year_month_day jan1{d.year(), January, day{1}};
    auto idx = static_cast<std::size_t>((sys_days{d} - sys_days{jan1}).count());
    if (d.year().is_leap() && d.month() > February) --idx;
    return idx;
}

}  // namespace

CsvDocument parse_csv(std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    CsvDocument doc;
    std::size_t i = 0;
    std::size_t line = 1;
    const std::size_t size = text.size();

    while (i < size) {
        // Record start: comment and blank lines are consumed whole.
        if (text[i] == '#') {
            const std::size_t end = std::min(text.find('\n', i), size);
            std::string_view c(text.data() + i + 1, end - i - 1);
            if (!c.empty() && c.back() == '\r') c.remove_suffix(1);
            doc.comments.emplace_back(trim_blanks(c));
            i = end + 1;
            ++line;
            continue;
        }
        if (text[i] == '\n' || (text[i] == '\r' && i + 1 < size && text[i + 1] == '\n')) {
            i += text[i] == '\r' ? 2 : 1;
            ++line;
            continue;
        }

        CsvRecord rec;
        rec.line = line;
        std::string field;
        bool quoted = false;
        bool was_quoted = false;
        for (;;) {
            if (i >= size) {
                if (quoted) throw ParseError(fmt::format("line {}: unterminated quoted field", rec.line));
                rec.fields.push_back(std::move(field));
                break;
            }
            const char ch = text[i];
            if (quoted) {
                if (ch == '"') {
                    if (i + 1 < size && text[i + 1] == '"') {
                        field += '"';
                        i += 2;
                    } else {
                        quoted = false;
                        ++i;
                    }
                } else {
                    if (ch == '\n') ++line;
                    field += ch;
                    ++i;
                }
                continue;
            }
            if (ch == '"') {
                if (!field.empty() || was_quoted) {
                    throw ParseError(fmt::format("line {}, column {}: stray quote", line, rec.fields.size() + 1));
                }
                quoted = was_quoted = true;
                ++i;
            } else if (ch == ',') {
                rec.fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
                ++i;
            } else if (ch == '\n' || (ch == '\r' && i + 1 < size && text[i + 1] == '\n')) {
                rec.fields.push_back(std::move(field));
                i += ch == '\r' ? 2 : 1;
                ++line;
                break;
            } else {
                if (was_quoted) {
                    throw ParseError(
                        fmt::format("line {}, column {}: text after closing quote", line, rec.fields.size() + 1));
                }
                field += ch;
                ++i;
            }
        }
        doc.records.push_back(std::move(rec));
    }
    return doc;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

NumericTable read_numeric_csv(std::istream& in, bool header, bool row_labels) {
    CsvDocument doc = parse_csv(in);
    auto first = doc.records.begin();
    if (header && first != doc.records.end()) ++first;
    if (first == doc.records.end()) throw ParseError("no rows");

    const std::size_t skip = row_labels ? 1 : 0;
    const std::size_t width = first->fields.size();
    if (width <= skip) throw ParseError(fmt::format("line {}: no numeric columns", first->line));
    const std::size_t p = width - skip;
    const auto n = static_cast<std::size_t>(doc.records.end() - first);

    NumericTable table;
    std::vector<double> values;
    values.reserve(n * p);
    for (auto it = first; it != doc.records.end(); ++it) {
        if (it->fields.size() != width) {
            throw ParseError(fmt::format("line {}: expected {} columns, found {}", it->line, width, it->fields.size()));
        }
        if (row_labels) table.row_labels.push_back(std::string(trim_blanks(it->fields[0])));
        for (std::size_t j = skip; j < width; ++j) {
            const auto v = parse_double(it->fields[j]);
            if (!v) {
                throw ParseError(
                    fmt::format("line {}, column {}: '{}' is not a finite number", it->line, j + 1, it->fields[j]));
            }
            values.push_back(*v);
        }
    }
    table.data = DataMatrix(n, p, std::move(values));
    table.comments = std::move(doc.comments);
    return table;
}

void write_report(std::ostream& out, const DetectionReport& report, const DetectorConfig& cfg,
                  const std::optional<std::string>& label) {
    fmt::print(out, "p_comb: {}\n", report.p_comb);
    fmt::print(out, "significant: {}\n", report.significant);
    fmt::print(out, "z_hat: {}\n", report.z_hat);
    if (label) fmt::print(out, "label: {}\n", *label);
    fmt::print(out, "theta_hat: {}\n", report.theta_hat);
    fmt::print(out, "winner: {}\n", report.winner + 1);
    fmt::print(out, "n: {}\n", report.n);
    fmt::print(out, "trim: {}\n", report.trim);
    fmt::print(out, "degenerate: {}\n", report.degenerate);
    fmt::print(out, "k: {}\n", cfg.k);
    fmt::print(out, "variant: {}\n", to_string(cfg.variant));
    fmt::print(out, "variance: {}\n", to_string(cfg.variance));
    fmt::print(out, "method: {}\n", to_string(cfg.method));
    fmt::print(out, "alpha: {}\n", cfg.alpha);
    fmt::print(out, "seed: {}\n", cfg.seed);
}

void write_per_projection(std::ostream& out, const DetectionReport& report) {
    out << "projection,raw_p,adjusted_p,sup_stat,arg_sup\n";
    for (std::size_t r = 0; r < report.per_projection.size(); ++r) {
        const auto& row = report.per_projection[r];
        const std::string adj = std::isnan(row.adjusted_p) ? "NA" : fmt::format("{}", row.adjusted_p);
        fmt::print(out, "{},{},{},{},{}\n", r + 1, row.raw_p, adj, row.sup_stat, row.arg_sup);
    }
}

void write_histogram(std::ostream& out, const RepetitionSummary& summary, const std::vector<std::string>& labels) {
    out << (labels.empty() ? "location,count\n" : "location,count,label\n");
    for (const auto& [loc, count] : summary.histogram) {
        if (labels.empty()) {
            fmt::print(out, "{},{}\n", loc, count);
        } else {
            fmt::print(out, "{},{},{}\n", loc, count, csv_field(label_for(labels, loc)));
        }
    }
}

std::vector<std::string> parse_labels(const std::string& spec) {
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const auto lo = parse_int<long>(std::string_view(spec).substr(0, dots));
        const auto hi = parse_int<long>(std::string_view(spec).substr(dots + 2));
        if (!lo || !hi || *hi < *lo) throw std::invalid_argument("bad label range '" + spec + "'");
        std::vector<std::string> out;
        for (long y = *lo; y <= *hi; ++y) out.push_back(std::to_string(y));
        return out;
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = spec.find(',', start);
        out.emplace_back(trim_blanks(std::string_view(spec).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.size() == 1 && out[0].empty()) throw std::invalid_argument("empty label list");
    return out;
}

std::string label_for(const std::vector<std::string>& labels, std::size_t index) {
    if (index == 0 || index > labels.size()) {
        throw std::out_of_range(fmt::format("location {} has no label ({} labels given)", index, labels.size()));
    }
    return labels[index - 1];
}

DailySeries read_daily_csv(std::istream& in) {
    const CsvDocument doc = parse_csv(in);
    DailySeries series;
    for (const auto& c : doc.comments) {
        constexpr std::string_view tag = "station:";
        if (c.rfind(tag, 0) == 0) series.station_id = std::string(trim_blanks(std::string_view(c).substr(tag.size())));
    }
    for (std::size_t i = 0; i < doc.records.size(); ++i) {
        const auto& rec = doc.records[i];
        if (rec.fields.size() != 2) {
            throw ParseError(fmt::format("line {}: expected date,value, found {} columns", rec.line, rec.fields.size()));
        }
        const auto date = parse_date(rec.fields[0]);
        if (!date) {
            const auto& head = rec.fields[0];
            if (i == 0 && (head.empty() || !std::isdigit(static_cast<unsigned char>(head[0])))) continue;  // header
            throw ParseError(fmt::format("line {}, column 1: '{}' is not a YYYY-MM-DD date", rec.line, rec.fields[0]));
        }
        const auto v = parse_double(rec.fields[1]);
        if (!v) {
            throw ParseError(fmt::format("line {}, column 2: '{}' is not a finite number", rec.line, rec.fields[1]));
        }
        series.records.push_back({*date, *v});
    }
    return series;
}

ReshapeResult reshape_yearly(const DailySeries& series, bool interpolate) {
    using namespace std::chrono;
    std::map<int, std::vector<std::optional<double>>> years;
    std::map<sys_days, std::size_t> seen;
    for (const auto& r : series.records) {
        if (!seen.emplace(sys_days{r.date}, 0).second) throw ParseError("duplicated date " + iso(r.date));
        if (r.date.month() == February && r.date.day() == day{29}) continue;
        auto& slots = years[static_cast<int>(r.date.year())];
        slots.resize(365);
        slots[day_of_common_year(r.date)] = r.value;
    }

    ReshapeResult out;
    out.matrix.station_id = series.station_id;
    std::vector<double> values;
    for (auto& [year, slots] : years) {
        const auto present = static_cast<std::size_t>(std::count_if(slots.begin(), slots.end(),
                                                                    [](const auto& v) { return v.has_value(); }));
        if (present < 365) {
            if (!interpolate) {
                out.warnings.push_back(fmt::format("year {} excluded: {} of 365 days present", year, present));
                continue;
            }
            std::vector<std::size_t> known;
            for (std::size_t d = 0; d < 365; ++d)
                if (slots[d]) known.push_back(d);
            for (std::size_t d = 0; d < 365; ++d) {
                if (slots[d]) continue;
                const auto hi = std::lower_bound(known.begin(), known.end(), d);
                if (hi == known.begin()) {
                    slots[d] = *slots[*hi];
                } else if (hi == known.end()) {
                    slots[d] = *slots[known.back()];
                } else {
                    const std::size_t a = *(hi - 1), b = *hi;
                    const double w = static_cast<double>(d - a) / static_cast<double>(b - a);
                    slots[d] = (1.0 - w) * *slots[a] + w * *slots[b];
                }
            }
            out.warnings.push_back(fmt::format("year {}: {} missing days interpolated", year, 365 - present));
        }
        out.matrix.year_labels.push_back(year);
        for (const auto& v : slots) values.push_back(*v);
    }
    if (out.matrix.year_labels.size() >= 2) {
        const auto& y = out.matrix.year_labels;
        if (static_cast<std::size_t>(y.back() - y.front()) + 1 != y.size()) {
            out.warnings.push_back("year labels are not contiguous");
        }
    }
    out.matrix.values = Matrix(out.matrix.year_labels.size(), 365, std::move(values));
    return out;
}

void write_yearly(std::ostream& out, const YearlyMatrix& m) {
    if (!m.station_id.empty()) fmt::print(out, "# station: {}\n", m.station_id);
    out << "year";
    for (std::size_t d = 1; d <= 365; ++d) fmt::print(out, ",d{:03d}", d);
    out << '\n';
    for (std::size_t r = 0; r < m.year_labels.size(); ++r) {
        fmt::print(out, "{}", m.year_labels[r]);
        for (double v : m.values.row(r)) fmt::print(out, ",{}", v);
        out << '\n';
    }
}

YearlyMatrix read_yearly(std::istream& in) {
    NumericTable t = read_numeric_csv(in, true, true);
    if (t.data.p() != 365) throw ParseError(fmt::format("yearly matrix needs 365 day columns, found {}", t.data.p()));
    YearlyMatrix m;
    m.values = t.data.matrix();
    for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
        const auto y = parse_int<int>(t.row_labels[r]);
        if (!y) throw ParseError(fmt::format("row {}: '{}' is not a year", r + 1, t.row_labels[r]));
        if (!m.year_labels.empty() && *y <= m.year_labels.back()) {
            throw ParseError(fmt::format("row {}: year labels must be strictly increasing", r + 1));
        }
        m.year_labels.push_back(*y);
    }
    for (const auto& c : t.comments) {
        constexpr std::string_view tag = "station:";
        if (c.rfind(tag, 0) == 0) m.station_id = std::string(trim_blanks(std::string_view(c).substr(tag.size())));
    }
    return m;
}

}  // namespace rpcp
