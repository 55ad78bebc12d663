#include "csv_oracle.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <stdexcept>

namespace flarelite::testing {

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : d[m - 1];
}

std::string random_float_text(std::mt19937_64& rng) {
    char buf[64];
    std::uniform_int_distribution<int> style(0, 4);
    std::uniform_real_distribution<double> mag(-1e6, 1e6);
    double v = mag(rng);
    switch (style(rng)) {
    case 0: std::snprintf(buf, sizeof buf, "%.17g", v); break;
    case 1: std::snprintf(buf, sizeof buf, "%.2f", v); break;
    case 2: std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v)); break;
    case 3: std::snprintf(buf, sizeof buf, "%.6e", v); break;
    default: std::snprintf(buf, sizeof buf, "%.17g", std::ldexp(v, -40)); break;
    }
    return buf;
}

std::string random_text(std::mt19937_64& rng, char delim) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,.-_#;:'";
    std::uniform_int_distribution<int> len(1, 24);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    int n = len(rng);
    while (static_cast<int>(s.size()) < n) {
        char c = alphabet[pick(rng)];
        if (c != delim) s += c;
    }
    return s;
}

} // namespace

CsvCase random_csv(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    static const char delims[] = {'|', ',', '\t', ';'};
    CsvCase out;
    out.delimiter = delims[rng() % 4];
    int ncols = 1 + static_cast<int>(rng() % 7);
    std::vector<ColumnDef> cols;
    for (int c = 0; c < ncols; ++c) {
        auto t = static_cast<DataType>(rng() % 4);
        cols.push_back({"c" + std::to_string(c), t, rng() % 3 == 0});
    }
    out.schema = Schema(cols);
    int rows = static_cast<int>(rng() % 5 == 0 ? rng() % 3 : rng() % 300);
    std::ostringstream text;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (c) text << out.delimiter;
            if (cols[c].nullable && rng() % 6 == 0) continue;
            switch (cols[c].dtype) {
            case DataType::Int64: {
                std::int64_t v = rng() % 4 == 0 ? static_cast<std::int64_t>(rng())
                                                : static_cast<std::int64_t>(rng() % 200001) - 100000;
                text << v;
                break;
            }
            case DataType::Float64: text << random_float_text(rng); break;
            case DataType::Date: {
                int y = 1900 + static_cast<int>(rng() % 250);
                int m = 1 + static_cast<int>(rng() % 12);
                int d = 1 + static_cast<int>(rng() % days_in(y, m));
                char buf[40];
                std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
                text << buf;
                break;
            }
            default: text << random_text(rng, out.delimiter); break;
            }
        }
        if (r + 1 < rows || rng() % 2) text << '\n';
    }
    out.text = text.str();
    return out;
}

std::vector<std::vector<Scalar>> reference_parse(const std::string& text, const Schema& schema, char delimiter) {
    std::vector<std::vector<Scalar>> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == delimiter) {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        fields.push_back(cur);
        if (fields.size() != schema.size())
            throw std::runtime_error("arity mismatch on line " + std::to_string(line_no));
        std::vector<Scalar> row;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            const ColumnDef& def = schema[c];
            if (f.empty()) {
                if (!def.nullable) throw std::runtime_error("empty field in non-nullable column");
                row.emplace_back(std::monostate{});
                continue;
            }
            switch (def.dtype) {
            case DataType::Int64: {
                char* end = nullptr;
                errno = 0;
                long long v = std::strtoll(f.c_str(), &end, 10);
                if (errno || *end || std::isspace(static_cast<unsigned char>(f[0])) || f[0] == '+')
                    throw std::runtime_error("bad int " + f);
                row.emplace_back(static_cast<std::int64_t>(v));
                break;
            }
            case DataType::Float64: {
                char* end = nullptr;
                double v = std::strtod(f.c_str(), &end);
                if (*end) throw std::runtime_error("bad float " + f);
                row.emplace_back(v);
                break;
            }
            case DataType::Date: {
                int y = 0, m = 0, d = 0;
                char tail = 0;
                if (f.size() != 10 || std::sscanf(f.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3 || m < 1 ||
                    m > 12 || d < 1 || d > days_in(y, m))
                    throw std::runtime_error("bad date " + f);
                row.emplace_back(static_cast<std::int64_t>(y) * 10000 + m * 100 + d);
                break;
            }
            default: row.emplace_back(f); break;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string diff_rows(const ColumnTable& t, const std::vector<std::vector<Scalar>>& rows) {
    if (t.row_count() != rows.size())
        return "row count " + std::to_string(t.row_count()) + " vs " + std::to_string(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto got = t.row(r);
        for (std::size_t c = 0; c < got.size(); ++c) {
            bool same = got[c] == rows[r][c];
            if (!same && std::holds_alternative<double>(got[c]) && std::holds_alternative<double>(rows[r][c])) {
                double a = std::get<double>(got[c]), b = std::get<double>(rows[r][c]);
                same = std::memcmp(&a, &b, sizeof a) == 0;
            }
            if (!same)
                return "row " + std::to_string(r) + " column " + std::to_string(c) + ": " +
                       scalar_to_string(got[c], t.schema()[c].dtype) + " vs " +
                       scalar_to_string(rows[r][c], t.schema()[c].dtype);
        }
    }
    return {};
}

} // namespace flarelite::testing
