#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dielink/errors.hpp"
#include "dielink/scoring/score_dataset.hpp"
#include "dielink/store/notes.hpp"

namespace dielink::store {

inline constexpr std::string_view kCsvHeader = "name1,name2,Distance,note,comment";

class CsvError : public Error {
public:
    CsvError(std::size_t line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct CsvRow {
    std::string name1;
    std::string name2;
    double distance = 0.0;
    Note note = Note::NotEvaluated;
    std::string comment;
    std::size_t line = 0;  ///< source line when parsed
};

/// notations_<name>.csv
std::string export_filename(std::string_view dataset_name);

/// Six decimals, fixed notation.
std::string format_distance(double d);

/// One CSV field, quoted when it holds a comma, quote, CR or LF.
std::string quote_field(std::string_view field);

/// Header plus one line per row, '\n' terminated. Fields holding a comma,
/// quote, CR or LF are quoted with doubled inner quotes.
std::string write_csv(const std::vector<CsvRow>& rows);

/// Inverse of write_csv; also accepts CRLF line ends. Throws CsvError with the
/// 1-based physical line where the problem starts.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Rows in ranked order with every note NotEvaluated.
std::vector<CsvRow> rows_from_matrix(const scoring::DistanceMatrix& m);

/// Rebuild a complete matrix (pairs canonicalized, coin names sorted).
/// Throws CsvError on self pairs, duplicates or missing pairs.
scoring::DistanceMatrix matrix_from_rows(const std::vector<CsvRow>& rows);

}  // namespace dielink::store
