#include "flarelite/compare.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace flarelite {

namespace {

using Row = std::vector<Scalar>;

std::string row_string(const Row& r, const Schema& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? ", " : "") + scalar_to_string(r[i], s[i].dtype);
    return out + ")";
}

bool value_close(const Scalar& a, const Scalar& b, const CompareOptions& o) {
    if (is_null(a) || is_null(b)) return is_null(a) && is_null(b);
    if (auto* x = std::get_if<double>(&a)) return float_close(*x, std::get<double>(b), o.rel_tol, o.abs_floor);
    return a == b;
}

bool row_close(const Row& a, const Row& b, const CompareOptions& o) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!value_close(a[i], b[i], o)) return false;
    }
    return true;
}

bool float_tuple_less(const Row& a, const Row& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool an = is_null(a[i]), bn = is_null(b[i]);
        if (an != bn) return an;
        if (an) continue;
        double x = std::get<double>(a[i]), y = std::get<double>(b[i]);
        bool xn = std::isnan(x), yn = std::isnan(y);
        if (xn != yn) return yn;
        if (xn) continue;
        if (x != y) return x < y;
    }
    return false;
}

} // namespace

bool float_close(double a, double b, double rel_tol, double abs_floor) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    if (a == b) return true;
    double diff = std::fabs(a - b);
    return diff <= abs_floor || diff <= rel_tol * std::max(std::fabs(a), std::fabs(b));
}

CompareResult compare_tables(const ColumnTable& a, const ColumnTable& b, const CompareOptions& opts) {
    CompareResult r;
    auto fail = [&](std::string msg) {
        r.equal = false;
        r.message = std::move(msg);
        return r;
    };
    const Schema& sa = a.schema();
    const Schema& sb = b.schema();
    if (sa.size() != sb.size()) return fail("column counts differ: " + std::to_string(sa.size()) + " vs " + std::to_string(sb.size()));
    for (std::size_t i = 0; i < sa.size(); ++i) {
        if (sa[i].name != sb[i].name || sa[i].dtype != sb[i].dtype) {
            return fail("column " + std::to_string(i) + " differs: " + sa[i].name + ":" + std::string(to_string(sa[i].dtype)) +
                        " vs " + sb[i].name + ":" + std::string(to_string(sb[i].dtype)));
        }
    }
    if (a.row_count() != b.row_count()) {
        return fail("row counts differ: " + std::to_string(a.row_count()) + " vs " + std::to_string(b.row_count()));
    }
    if (opts.ordered) {
        for (std::size_t i = 0; i < a.row_count(); ++i) {
            Row x = a.row(i), y = b.row(i);
            if (!row_close(x, y, opts)) {
                return fail("row " + std::to_string(i) + " differs: " + row_string(x, sa) + " vs " + row_string(y, sa));
            }
        }
        return r;
    }
    // Exact columns identify a bucket; Float64 columns are matched within it.
    std::vector<std::size_t> exact, floats;
    for (std::size_t i = 0; i < sa.size(); ++i) (sa[i].dtype == DataType::Float64 ? floats : exact).push_back(i);
    using Buckets = std::map<Row, std::vector<Row>>;
    auto bucket = [&](const ColumnTable& t) {
        Buckets out;
        for (std::size_t i = 0; i < t.row_count(); ++i) {
            Row full = t.row(i);
            Row k, f;
            for (auto c : exact) k.push_back(full[c]);
            for (auto c : floats) f.push_back(full[c]);
            out[std::move(k)].push_back(std::move(f));
        }
        for (auto& [k, v] : out) std::sort(v.begin(), v.end(), float_tuple_less);
        return out;
    };
    Buckets ba = bucket(a), bb = bucket(b);
    auto key_string = [&](const Row& k) {
        std::string s = "(";
        for (std::size_t i = 0; i < exact.size(); ++i) {
            s += (i ? ", " : "") + sa[exact[i]].name + "=" + scalar_to_string(k[i], sa[exact[i]].dtype);
        }
        return s + ")";
    };
    for (const auto& [k, va] : ba) {
        auto it = bb.find(k);
        std::size_t nb = it == bb.end() ? 0 : it->second.size();
        if (nb != va.size()) {
            return fail("rows with " + key_string(k) + " occur " + std::to_string(va.size()) + " vs " + std::to_string(nb) + " times");
        }
        for (std::size_t i = 0; i < va.size(); ++i) {
            if (!row_close(va[i], it->second[i], opts)) {
                std::string fa, fb;
                for (std::size_t j = 0; j < floats.size(); ++j) {
                    fa += (j ? ", " : "") + scalar_to_string(va[i][j], DataType::Float64);
                    fb += (j ? ", " : "") + scalar_to_string(it->second[i][j], DataType::Float64);
                }
                return fail("rows with " + key_string(k) + " differ in Float64 columns: (" + fa + ") vs (" + fb + ")");
            }
        }
    }
    for (const auto& [k, vb] : bb) {
        if (!ba.count(k)) return fail("rows with " + key_string(k) + " occur 0 vs " + std::to_string(vb.size()) + " times");
    }
    return r;
}

std::string format_table(const ColumnTable& t, std::size_t max_rows) {
    const Schema& s = t.schema();
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width(s.size());
    std::vector<std::string> header = s.names();
    for (std::size_t c = 0; c < s.size(); ++c) width[c] = header[c].size();
    std::size_t shown = std::min(max_rows, t.row_count());
    for (std::size_t r = 0; r < shown; ++r) {
        Row row = t.row(r);
        std::vector<std::string> line;
        for (std::size_t c = 0; c < s.size(); ++c) {
            line.push_back(scalar_to_string(row[c], s[c].dtype));
            width[c] = std::max(width[c], line.back().size());
        }
        cells.push_back(std::move(line));
    }
    auto fmt = [&](const std::vector<std::string>& line) {
        std::string out;
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) out += " | ";
            out += line[c] + std::string(width[c] - line[c].size(), ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string out = fmt(header);
    std::string rule;
    for (std::size_t c = 0; c < s.size(); ++c) rule += (c ? "-+-" : "") + std::string(width[c], '-');
    out += rule + "\n";
    for (const auto& line : cells) out += fmt(line);
    if (shown < t.row_count()) out += "... " + std::to_string(t.row_count() - shown) + " more rows\n";
    out += "(" + std::to_string(t.row_count()) + " rows)\n";
    return out;
}

} // namespace flarelite
