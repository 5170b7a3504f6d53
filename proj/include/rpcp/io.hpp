#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpcp/detector.hpp"
#include "rpcp/matrix.hpp"

namespace rpcp {

/// Malformed input; the message names the offending line and column.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvRecord {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

struct CsvDocument {
    std::vector<CsvRecord> records;
    /// Text after '#' on comment lines, leading blanks stripped.
    std::vector<std::string> comments;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF. Lines that
/// start with '#' are comments and blank lines are skipped.
CsvDocument parse_csv(std::istream& in);

/// Writes one field, quoting it when needed.
std::string csv_field(const std::string& text);

struct NumericTable {
    DataMatrix data;
    std::vector<std::string> row_labels;  // filled when row labels were requested
    std::vector<std::string> comments;
};

/// n x p numeric matrix. Throws ParseError on an empty input ("no rows"),
/// ragged rows or non-numeric cells.
NumericTable read_numeric_csv(std::istream& in, bool header, bool row_labels);

/// Key-value report; `winner` is printed 1-based. `label` is the calendar
/// label of z_hat when known.
void write_report(std::ostream& out, const DetectionReport& report, const DetectorConfig& cfg,
                  const std::optional<std::string>& label = std::nullopt);
/// projection,raw_p,adjusted_p,sup_stat,arg_sup with 1-based projection ids.
void write_per_projection(std::ostream& out, const DetectionReport& report);
/// location,count[,label]
void write_histogram(std::ostream& out, const RepetitionSummary& summary,
                     const std::vector<std::string>& labels = {});

/// Expands "1910..1959" or "a,b,c" into a label list.
std::vector<std::string> parse_labels(const std::string& spec);
/// labels[index - 1]; index is the last pre-change time point.
std::string label_for(const std::vector<std::string>& labels, std::size_t index);

struct DailyRecord {
    std::chrono::year_month_day date;
    double value = 0.0;
};

struct DailySeries {
    std::vector<DailyRecord> records;
    std::string station_id;  // from a "# station: <id>" comment
};

/// Two columns date,value with ISO dates; an optional header is detected.
DailySeries read_daily_csv(std::istream& in);

struct YearlyMatrix {
    Matrix values;  // years x 365
    std::vector<int> year_labels;
    std::string station_id;

    bool operator==(const YearlyMatrix&) const = default;
};

struct ReshapeResult {
    YearlyMatrix matrix;
    std::vector<std::string> warnings;
};

/// Groups by calendar year and drops February 29. Years that do not have all
/// 365 remaining days are excluded with a warning, or filled by linear
/// interpolation along the day index when `interpolate` is set. Duplicated
/// dates throw ParseError.
ReshapeResult reshape_yearly(const DailySeries& series, bool interpolate);

void write_yearly(std::ostream& out, const YearlyMatrix& m);
YearlyMatrix read_yearly(std::istream& in);

}  // namespace rpcp
