#include "dielink/store/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "dielink/analytics/analytics.hpp"

namespace dielink::store {

std::string export_filename(std::string_view dataset_name) {
    return "notations_" + std::string(dataset_name) + ".csv";
}

std::string format_distance(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", d);
    return buf;
}

namespace {

void put_field(std::string& out, std::string_view f) {
    if (f.find_first_of(",\"\r\n") == std::string_view::npos) {
        out += f;
        return;
    }
    out += '"';
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

}  // namespace

std::string quote_field(std::string_view field) {
    std::string out;
    put_field(out, field);
    return out;
}

namespace {

struct Record {
    std::size_t line;
    std::vector<std::string> fields;
};

std::vector<Record> split_records(std::string_view text) {
    std::vector<Record> records;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        Record rec{line, {}};
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (i < text.size() && text[i] == '"') {
                const std::size_t open_line = line;
                ++i;
                for (;;) {
                    if (i >= text.size()) throw CsvError(open_line, "unterminated quoted field");
                    const char c = text[i++];
                    if (c == '"') {
                        if (i < text.size() && text[i] == '"') {
                            field += '"';
                            ++i;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                    }
                }
                if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
                    throw CsvError(line, "unexpected character after closing quote");
            } else {
                while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                    if (text[i] == '"') throw CsvError(line, "quote inside unquoted field");
                    field += text[i++];
                }
            }
            rec.fields.push_back(field);
            if (i >= text.size()) {
                done = true;
            } else if (text[i] == ',') {
                ++i;
            } else {
                if (text[i] == '\r') {
                    ++i;
                    if (i >= text.size() || text[i] != '\n') throw CsvError(line, "bare carriage return");
                }
                ++i;
                ++line;
                done = true;
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

double parse_distance(const std::string& s, std::size_t line) {
    double d = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size())
        throw CsvError(line, "Distance is not a number: '" + s + "'");
    if (!std::isfinite(d) || d < 0.0 || d > 1.0) throw CsvError(line, "Distance outside [0,1]: " + s);
    return d;
}

}  // namespace

std::string write_csv(const std::vector<CsvRow>& rows) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        put_field(out, r.name1);
        out += ',';
        put_field(out, r.name2);
        out += ',';
        out += format_distance(r.distance);
        out += ',';
        put_field(out, note_label(r.note));
        out += ',';
        put_field(out, r.comment);
        out += '\n';
    }
    return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    const auto records = split_records(text);
    if (records.empty()) throw CsvError(1, "missing header");
    const auto& header = records.front();
    std::string joined;
    for (std::size_t k = 0; k < header.fields.size(); ++k) joined += (k ? "," : "") + header.fields[k];
    if (joined != kCsvHeader) throw CsvError(header.line, "expected header '" + std::string(kCsvHeader) + "'");

    std::vector<CsvRow> rows;
    rows.reserve(records.size() - 1);
    for (std::size_t k = 1; k < records.size(); ++k) {
        const auto& rec = records[k];
        if (rec.fields.size() != 5)
            throw CsvError(rec.line, "expected 5 fields, got " + std::to_string(rec.fields.size()));
        CsvRow row;
        row.line = rec.line;
        row.name1 = rec.fields[0];
        row.name2 = rec.fields[1];
        if (row.name1.empty() || row.name2.empty()) throw CsvError(rec.line, "empty coin name");
        row.distance = parse_distance(rec.fields[2], rec.line);
        const auto note = parse_note(rec.fields[3]);
        if (!note) throw CsvError(rec.line, "unknown note '" + rec.fields[3] + "'");
        row.note = *note;
        row.comment = rec.fields[4];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CsvRow> rows_from_matrix(const scoring::DistanceMatrix& m) {
    std::vector<CsvRow> rows;
    for (const auto& s : analytics::rank_pairs(m).entries) rows.push_back({s.name1, s.name2, s.distance, {}, {}, 0});
    return rows;
}

scoring::DistanceMatrix matrix_from_rows(const std::vector<CsvRow>& rows) {
    scoring::DistanceMatrix m;
    std::set<std::string> names;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : rows) {
        if (r.name1 == r.name2) throw CsvError(r.line, "pair of a coin with itself: " + r.name1);
        scoring::PairScore s;
        s.name1 = std::min(r.name1, r.name2);
        s.name2 = std::max(r.name1, r.name2);
        s.distance = r.distance;
        s.alignable = r.distance < 1.0;
        if (!seen.emplace(s.name1, s.name2).second)
            throw CsvError(r.line, "duplicate pair " + s.name1 + "," + s.name2);
        names.insert(s.name1);
        names.insert(s.name2);
        m.scores.push_back(std::move(s));
    }
    m.coin_names.assign(names.begin(), names.end());
    const auto expected = scoring::DistanceMatrix::pair_count(names.size());
    if (m.scores.size() != expected)
        throw CsvError(rows.empty() ? 1 : rows.back().line + 1,
                       "incomplete matrix: " + std::to_string(names.size()) + " coins need " +
                           std::to_string(expected) + " pairs, found " + std::to_string(m.scores.size()));
    return m;
}

}  // namespace dielink::store
