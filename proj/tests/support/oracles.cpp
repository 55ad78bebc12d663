#include "oracles.hpp"

#include "helpers.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace flarelite::testing {

namespace {

std::vector<std::string> split(const std::string& line, char d) {
    std::vector<std::string> out(1);
    for (char c : line) {
        if (c == d)
            out.emplace_back();
        else
            out.back() += c;
    }
    return out;
}

bool q6_row(double qty, double price, double disc, const std::string& shipdate, double* contribution) {
    if (shipdate < "1994-01-01" || shipdate >= "1995-01-01") return false;
    if (disc < 0.05 || disc > 0.07 || qty >= 24) return false;
    *contribution = price * disc;
    return true;
}

} // namespace

double q6_from_tbl(const std::filesystem::path& lineitem_tbl) {
    std::ifstream in(lineitem_tbl);
    if (!in) throw std::runtime_error("cannot open " + lineitem_tbl.string());
    std::string line;
    double revenue = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split(line, '|');
        if (f.size() != 16) throw std::runtime_error("unexpected lineitem arity");
        double c = 0;
        if (q6_row(std::strtod(f[4].c_str(), nullptr), std::strtod(f[5].c_str(), nullptr),
                   std::strtod(f[6].c_str(), nullptr), f[10], &c))
            revenue += c;
    }
    return revenue;
}

double q6_from_table(const ColumnTable& li) {
    const auto& qty = li.column("l_quantity");
    const auto& price = li.column("l_extendedprice");
    const auto& disc = li.column("l_discount");
    const auto& ship = li.column("l_shipdate");
    double revenue = 0;
    for (std::size_t r = 0; r < li.row_count(); ++r) {
        double c = 0;
        if (q6_row(qty.float_at(r), price.float_at(r), disc.float_at(r), date::format(ship.int_at(r)), &c))
            revenue += c;
    }
    return revenue;
}

std::vector<std::vector<Scalar>> nested_loop_join(const ColumnTable& lineitem, const ColumnTable& orders) {
    const auto& lk = lineitem.column("l_orderkey");
    const auto& lq = lineitem.column("l_quantity");
    const auto& ok = orders.column("o_orderkey");
    const auto& od = orders.column("o_orderdate");
    std::vector<std::vector<Scalar>> out;
    for (std::size_t i = 0; i < lineitem.row_count(); ++i)
        for (std::size_t j = 0; j < orders.row_count(); ++j)
            if (lk.int_at(i) == ok.int_at(j)) out.push_back({lk.int_at(i), lq.float_at(i), od.int_at(j)});
    return out;
}

std::map<std::pair<std::string, std::string>, std::int64_t> q1_counts(const ColumnTable& li, std::int64_t cutoff) {
    const auto& rf = li.column("l_returnflag");
    const auto& ls = li.column("l_linestatus");
    const auto& sd = li.column("l_shipdate");
    std::map<std::pair<std::string, std::string>, std::int64_t> out;
    for (std::size_t r = 0; r < li.row_count(); ++r)
        if (sd.int_at(r) <= cutoff) ++out[{std::string(rf.text_at(r)), std::string(ls.text_at(r))}];
    return out;
}

ColumnTable rows_to_table(const Schema& schema, const std::vector<std::vector<Scalar>>& rows) {
    return make_table(schema, rows);
}

} // namespace flarelite::testing
