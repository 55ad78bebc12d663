#include "flarelite/tpch.hpp"

#include "flarelite/csv.hpp"
#include "flarelite/dataframe.hpp"
#include "flarelite/error.hpp"
#include "flarelite/fbc.hpp"
#include "flarelite/sql.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace flarelite::tpch {

namespace {

ColumnDef i64(std::string n) { return {std::move(n), DataType::Int64, false}; }
ColumnDef f64(std::string n) { return {std::move(n), DataType::Float64, false}; }
ColumnDef day(std::string n) { return {std::move(n), DataType::Date, false}; }
ColumnDef txt(std::string n) { return {std::move(n), DataType::Text, false}; }

const std::map<std::string, Schema, std::less<>>& schemas() {
    static const std::map<std::string, Schema, std::less<>> s = {
        {"lineitem",
         Schema({i64("l_orderkey"), i64("l_partkey"), i64("l_suppkey"), i64("l_linenumber"), f64("l_quantity"),
                 f64("l_extendedprice"), f64("l_discount"), f64("l_tax"), txt("l_returnflag"), txt("l_linestatus"),
                 day("l_shipdate"), day("l_commitdate"), day("l_receiptdate"), txt("l_shipinstruct"),
                 txt("l_shipmode"), txt("l_comment")})},
        {"orders",
         Schema({i64("o_orderkey"), i64("o_custkey"), txt("o_orderstatus"), f64("o_totalprice"), day("o_orderdate"),
                 txt("o_orderpriority"), txt("o_clerk"), i64("o_shippriority"), txt("o_comment")})},
        {"customer",
         Schema({i64("c_custkey"), txt("c_name"), txt("c_address"), i64("c_nationkey"), txt("c_phone"),
                 f64("c_acctbal"), txt("c_mktsegment"), txt("c_comment")})},
        {"part",
         Schema({i64("p_partkey"), txt("p_name"), txt("p_mfgr"), txt("p_brand"), txt("p_type"), i64("p_size"),
                 txt("p_container"), f64("p_retailprice"), txt("p_comment")})},
        {"partsupp",
         Schema({i64("ps_partkey"), i64("ps_suppkey"), i64("ps_availqty"), f64("ps_supplycost"), txt("ps_comment")})},
        {"supplier",
         Schema({i64("s_suppkey"), txt("s_name"), txt("s_address"), i64("s_nationkey"), txt("s_phone"),
                 f64("s_acctbal"), txt("s_comment")})},
        {"nation", Schema({i64("n_nationkey"), txt("n_name"), i64("n_regionkey"), txt("n_comment")})},
        {"region", Schema({i64("r_regionkey"), txt("r_name"), txt("r_comment")})},
    };
    return s;
}

const char* const kNations[25] = {"ALGERIA", "ARGENTINA", "BRAZIL", "CANADA", "EGYPT", "ETHIOPIA", "FRANCE",
                                  "GERMANY", "INDIA", "INDONESIA", "IRAN", "IRAQ", "JAPAN", "JORDAN", "KENYA",
                                  "MOROCCO", "MOZAMBIQUE", "PERU", "CHINA", "ROMANIA", "SAUDI ARABIA", "VIETNAM",
                                  "RUSSIA", "UNITED KINGDOM", "UNITED STATES"};
const int kNationRegion[25] = {0, 1, 1, 1, 4, 0, 3, 3, 2, 2, 4, 4, 2, 4, 0, 0, 0, 1, 2, 3, 4, 2, 3, 3, 1};
const char* const kRegions[5] = {"AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"};
const char* const kSegments[5] = {"AUTOMOBILE", "BUILDING", "FURNITURE", "MACHINERY", "HOUSEHOLD"};
const char* const kPriorities[5] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"};
const char* const kShipModes[7] = {"REG AIR", "AIR", "RAIL", "SHIP", "TRUCK", "MAIL", "FOB"};
const char* const kInstructs[4] = {"DELIVER IN PERSON", "COLLECT COD", "NONE", "TAKE BACK RETURN"};
const char* const kTypeA[6] = {"STANDARD", "SMALL", "MEDIUM", "LARGE", "ECONOMY", "PROMO"};
const char* const kTypeB[5] = {"ANODIZED", "BURNISHED", "PLATED", "POLISHED", "BRUSHED"};
const char* const kTypeC[5] = {"TIN", "NICKEL", "BRASS", "STEEL", "COPPER"};
const char* const kContA[5] = {"SM", "LG", "MED", "JUMBO", "WRAP"};
const char* const kContB[8] = {"CASE", "BOX", "BAG", "JAR", "PKG", "PACK", "CAN", "DRUM"};
const char* const kColors[12] = {"almond", "azure", "blush", "coral", "forest", "ivory",
                                 "khaki", "linen", "olive", "peach", "sienna", "thistle"};
const char* const kWords[16] = {"carefully", "final", "deposits", "quickly", "pending", "accounts", "ironic",
                                "packages", "furiously", "regular", "theodolites", "bold", "requests", "even",
                                "slyly", "express"};

constexpr std::int64_t kStartDate = 19920101;
constexpr int kDateSpan = 2405; // 1992-01-01 .. 1998-08-02
constexpr std::int64_t kCurrentDate = 19950617;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(g_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    template <std::size_t N>
    const char* pick(const char* const (&a)[N]) {
        return a[g_() % N];
    }
    std::string comment(int min_words, int max_words) {
        int n = static_cast<int>(uniform(min_words, max_words));
        std::string s;
        for (int i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += pick(kWords);
        }
        return s;
    }
    std::string digits(int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += static_cast<char>('0' + uniform(0, 9));
        return s;
    }

private:
    std::mt19937_64 g_;
};

std::string padded(const char* prefix, std::int64_t v, int width) {
    std::string n = std::to_string(v);
    if (static_cast<int>(n.size()) < width) n = std::string(static_cast<std::size_t>(width) - n.size(), '0') + n;
    return prefix + n;
}

std::string phone(Rng& r, std::int64_t nation) {
    return std::to_string(10 + nation) + "-" + r.digits(3) + "-" + r.digits(3) + "-" + r.digits(4);
}

double money(std::int64_t cents) { return static_cast<double>(cents) / 100.0; }

double retail_price(std::int64_t partkey) {
    return money(90000 + ((partkey / 10) % 20001) + 100 * (partkey % 1000));
}

struct Builder {
    explicit Builder(std::string_view table) : b(schema(table)) {}
    Builder& i(std::size_t c, std::int64_t v) {
        b.column(c).append_int(v);
        return *this;
    }
    Builder& f(std::size_t c, double v) {
        b.column(c).append_float(v);
        return *this;
    }
    Builder& t(std::size_t c, std::string_view v) {
        b.column(c).append_text(v);
        return *this;
    }
    TableBuilder b;
};

std::uint64_t scaled(double base, double sf) {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(base * sf)));
}

} // namespace

const std::vector<std::string>& table_names() {
    static const std::vector<std::string> n = {"lineitem", "orders", "customer", "part",
                                               "partsupp", "supplier", "nation", "region"};
    return n;
}

Schema schema(std::string_view table) {
    auto it = schemas().find(table);
    if (it == schemas().end()) throw Error("unknown TPC-H table " + std::string(table));
    return it->second;
}

std::uint64_t expected_rows(std::string_view table, double sf) {
    if (table == "nation") return 25;
    if (table == "region") return 5;
    if (table == "orders") return scaled(1500000, sf);
    if (table == "customer") return scaled(150000, sf);
    if (table == "part") return scaled(200000, sf);
    if (table == "partsupp") return 4 * scaled(200000, sf);
    if (table == "supplier") return scaled(10000, sf);
    if (table == "lineitem") return 4 * scaled(1500000, sf); // mean of 1..7 lines per order
    throw Error("unknown TPC-H table " + std::string(table));
}

std::map<std::string, ColumnTable> generate(const GenConfig& cfg) {
    if (!(cfg.scale_factor > 0)) throw Error("scale factor must be positive");
    const double sf = cfg.scale_factor;
    const auto n_orders = static_cast<std::int64_t>(expected_rows("orders", sf));
    const auto n_cust = static_cast<std::int64_t>(expected_rows("customer", sf));
    const auto n_part = static_cast<std::int64_t>(expected_rows("part", sf));
    const auto n_supp = static_cast<std::int64_t>(expected_rows("supplier", sf));
    std::map<std::string, ColumnTable> out;
    // One independent stream per table keeps tables stable when others change.
    auto stream = [&](std::uint64_t k) { return Rng(cfg.seed * 0x9E3779B97F4A7C15ULL + k); };

    {
        Builder b("region");
        Rng r = stream(1);
        for (int k = 0; k < 5; ++k) b.i(0, k).t(1, kRegions[k]).t(2, r.comment(3, 8));
        out.emplace("region", b.b.finish());
    }
    {
        Builder b("nation");
        Rng r = stream(2);
        for (int k = 0; k < 25; ++k) b.i(0, k).t(1, kNations[k]).i(2, kNationRegion[k]).t(3, r.comment(3, 10));
        out.emplace("nation", b.b.finish());
    }
    {
        Builder b("supplier");
        Rng r = stream(3);
        for (std::int64_t k = 1; k <= n_supp; ++k) {
            std::int64_t nation = r.uniform(0, 24);
            b.i(0, k).t(1, padded("Supplier#", k, 9)).t(2, r.comment(1, 3)).i(3, nation).t(4, phone(r, nation));
            b.f(5, money(r.uniform(-99999, 999999))).t(6, r.comment(4, 10));
        }
        out.emplace("supplier", b.b.finish());
    }
    {
        Builder b("customer");
        Rng r = stream(4);
        for (std::int64_t k = 1; k <= n_cust; ++k) {
            std::int64_t nation = r.uniform(0, 24);
            b.i(0, k).t(1, padded("Customer#", k, 9)).t(2, r.comment(1, 3)).i(3, nation).t(4, phone(r, nation));
            b.f(5, money(r.uniform(-99999, 999999))).t(6, r.pick(kSegments)).t(7, r.comment(4, 12));
        }
        out.emplace("customer", b.b.finish());
    }
    {
        Builder part("part");
        Builder ps("partsupp");
        Rng r = stream(5);
        for (std::int64_t k = 1; k <= n_part; ++k) {
            std::string name = std::string(r.pick(kColors)) + " " + r.pick(kColors) + " " + r.pick(kColors);
            std::int64_t m = r.uniform(1, 5);
            std::string type = std::string(r.pick(kTypeA)) + " " + r.pick(kTypeB) + " " + r.pick(kTypeC);
            std::string container = std::string(r.pick(kContA)) + " " + r.pick(kContB);
            part.i(0, k).t(1, name).t(2, "Manufacturer#" + std::to_string(m));
            part.t(3, "Brand#" + std::to_string(m) + std::to_string(r.uniform(1, 5))).t(4, type).i(5, r.uniform(1, 50));
            part.t(6, container).f(7, retail_price(k)).t(8, r.comment(1, 4));
            for (std::int64_t j = 0; j < 4; ++j) {
                std::int64_t supp = (k + j * (n_supp / 4 + (k - 1) / n_supp)) % n_supp + 1;
                ps.i(0, k).i(1, supp).i(2, r.uniform(1, 9999)).f(3, money(r.uniform(100, 100000))).t(4, r.comment(4, 12));
            }
        }
        out.emplace("part", part.b.finish());
        out.emplace("partsupp", ps.b.finish());
    }
    {
        Builder ord("orders");
        Builder li("lineitem");
        Rng r = stream(6);
        for (std::int64_t k = 1; k <= n_orders; ++k) {
            // Key space is sparse as in TPC-H: 8 keys used out of every 32.
            std::int64_t okey = (k - 1) / 8 * 32 + (k - 1) % 8 + 1;
            std::int64_t cust = 0;
            do {
                cust = r.uniform(1, n_cust);
            } while (cust % 3 == 0 && n_cust > 2); // a third of customers place no orders
            std::int64_t odate = date::add_days(kStartDate, static_cast<int>(r.uniform(0, kDateSpan - 152)));
            int lines = static_cast<int>(r.uniform(1, 7));
            double total = 0;
            int shipped = 0;
            for (int l = 1; l <= lines; ++l) {
                std::int64_t pkey = r.uniform(1, n_part);
                std::int64_t skey = (pkey + r.uniform(0, 3) * (n_supp / 4 + (pkey - 1) / n_supp)) % n_supp + 1;
                double qty = static_cast<double>(r.uniform(1, 50));
                double price = qty * retail_price(pkey);
                double disc = static_cast<double>(r.uniform(0, 10)) / 100.0;
                double tax = static_cast<double>(r.uniform(0, 8)) / 100.0;
                std::int64_t ship = date::add_days(odate, static_cast<int>(r.uniform(1, 121)));
                std::int64_t commit = date::add_days(odate, static_cast<int>(r.uniform(30, 90)));
                std::int64_t receipt = date::add_days(ship, static_cast<int>(r.uniform(1, 30)));
                const char* flag = receipt <= kCurrentDate ? (r.uniform(0, 1) ? "R" : "A") : "N";
                const char* status = ship > kCurrentDate ? "O" : "F";
                shipped += ship <= kCurrentDate;
                total += price * (1 + tax) * (1 - disc);
                li.i(0, okey).i(1, pkey).i(2, skey).i(3, l).f(4, qty).f(5, price).f(6, disc).f(7, tax);
                li.t(8, flag).t(9, status).i(10, ship).i(11, commit).i(12, receipt);
                li.t(13, r.pick(kInstructs)).t(14, r.pick(kShipModes)).t(15, r.comment(2, 5));
            }
            const char* ostatus = shipped == lines ? "F" : (shipped == 0 ? "O" : "P");
            std::string comment = r.uniform(0, 99) == 0 ? "special requests " + r.comment(1, 4) : r.comment(3, 9);
            ord.i(0, okey).i(1, cust).t(2, ostatus).f(3, std::round(total * 100) / 100).i(4, odate);
            ord.t(5, r.pick(kPriorities)).t(6, padded("Clerk#", r.uniform(1, std::max<std::int64_t>(1, n_orders / 1500)), 9));
            ord.i(7, 0).t(8, comment);
        }
        out.emplace("orders", ord.b.finish());
        out.emplace("lineitem", li.b.finish());
    }
    return out;
}

void write_tables(const std::map<std::string, ColumnTable>& tables, const std::filesystem::path& dir, FileFormat fmt) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, t] : tables) {
        if (fmt == FileFormat::Csv) {
            write_csv(t, dir / (name + ".tbl"));
        } else {
            write_fbc(t, dir / (name + ".fbc"));
        }
    }
}

void register_all(Catalog& catalog, std::map<std::string, ColumnTable> tables) {
    for (auto& [name, t] : tables) catalog.register_table(name, std::move(t));
}

const std::vector<Query>& suite() {
    static const std::vector<Query> q = {
        {"Q1", "pricing summary report", R"(
select l_returnflag, l_linestatus,
       sum(l_quantity) as sum_qty,
       sum(l_extendedprice) as sum_base_price,
       sum(l_extendedprice * (1 - l_discount)) as sum_disc_price,
       sum(l_extendedprice * (1 - l_discount) * (1 + l_tax)) as sum_charge,
       avg(l_quantity) as avg_qty,
       avg(l_extendedprice) as avg_price,
       avg(l_discount) as avg_disc,
       count(*) as count_order
from lineitem
where l_shipdate <= date '1998-09-02'
group by l_returnflag, l_linestatus
order by l_returnflag, l_linestatus)",
         true},
        {"Q3", "shipping priority", R"(
select l_orderkey, sum(l_extendedprice * (1 - l_discount)) as revenue, o_orderdate, o_shippriority
from lineitem, orders, customer
where l_orderkey = o_orderkey
  and c_custkey = o_custkey
  and c_mktsegment = 'BUILDING'
  and o_orderdate < date '1995-03-15'
  and l_shipdate > date '1995-03-15'
group by l_orderkey, o_orderdate, o_shippriority
order by revenue desc, o_orderdate
limit 10)",
         true},
        {"Q4", "order priority checking (semi-join form)", R"(
select o_orderpriority, count(*) as order_count
from orders left semi join lineitem
  on o_orderkey = l_orderkey and l_commitdate < l_receiptdate
where o_orderdate >= date '1993-07-01' and o_orderdate < date '1993-10-01'
group by o_orderpriority
order by o_orderpriority)",
         true},
        {"Q6", "forecasting revenue change", R"(
select sum(l_extendedprice * l_discount) as revenue
from lineitem
where l_shipdate >= date '1994-01-01'
  and l_shipdate < date '1995-01-01'
  and l_discount between 0.05 and 0.07
  and l_quantity < 24)",
         false},
        {"Q12", "shipping modes and order priority", R"(
select l_shipmode,
       sum(if(o_orderpriority = '1-URGENT' or o_orderpriority = '2-HIGH', 1.0, 0.0)) as high_line_count,
       sum(if(o_orderpriority <> '1-URGENT' and o_orderpriority <> '2-HIGH', 1.0, 0.0)) as low_line_count
from lineitem, orders
where l_orderkey = o_orderkey
  and (l_shipmode = 'MAIL' or l_shipmode = 'SHIP')
  and l_commitdate < l_receiptdate
  and l_shipdate < l_commitdate
  and l_receiptdate >= date '1994-01-01'
  and l_receiptdate < date '1995-01-01'
group by l_shipmode
order by l_shipmode)",
         true},
        {"Q13", "customer distribution (outer join, nested aggregation)", "", true},
        {"Q14", "promotion effect", R"(
select 100.0 * sum(if(p_type like 'PROMO%', l_extendedprice * (1 - l_discount), 0.0))
       / sum(l_extendedprice * (1 - l_discount)) as promo_revenue
from lineitem, part
where l_partkey = p_partkey
  and l_shipdate >= date '1995-09-01'
  and l_shipdate < date '1995-10-01')",
         false},
        {"Q19", "discounted revenue (containers as equality lists)", R"(
select sum(l_extendedprice * (1 - l_discount)) as revenue
from lineitem, part
where p_partkey = l_partkey
  and l_shipinstruct = 'DELIVER IN PERSON'
  and (l_shipmode = 'AIR' or l_shipmode = 'REG AIR')
  and ((p_brand = 'Brand#12'
        and (p_container = 'SM CASE' or p_container = 'SM BOX' or p_container = 'SM PACK' or p_container = 'SM PKG')
        and l_quantity >= 1 and l_quantity <= 11 and p_size between 1 and 5)
    or (p_brand = 'Brand#23'
        and (p_container = 'MED BAG' or p_container = 'MED BOX' or p_container = 'MED PKG' or p_container = 'MED PACK')
        and l_quantity >= 10 and l_quantity <= 20 and p_size between 1 and 10)
    or (p_brand = 'Brand#34'
        and (p_container = 'LG CASE' or p_container = 'LG BOX' or p_container = 'LG PACK' or p_container = 'LG PKG')
        and l_quantity >= 20 and l_quantity <= 30 and p_size between 1 and 15)))",
         false},
    };
    return q;
}

const Query& find_query(std::string_view name) {
    for (const auto& q : suite()) {
        if (q.name == name) return q;
    }
    throw Error("unknown query " + std::string(name));
}

PlanPtr build(const Query& q, const Catalog& catalog, const UdfRegistry& udfs) {
    if (!q.sql.empty()) return parse_sql(q.sql, catalog, &udfs);
    if (q.name == "Q13") {
        auto orders = DataFrame::scan(catalog, &udfs, "orders").filter(not_(starts_with(col("o_comment"), "special")));
        return DataFrame::scan(catalog, &udfs, "customer")
            .join(orders, {{col("c_custkey"), col("o_custkey")}}, JoinKind::LeftOuter)
            .group_agg({{col("c_custkey"), "c_custkey"}}, {{AggFn::Count, col("o_orderkey"), "c_count"}})
            .group_agg({{col("c_count"), "c_count"}}, {{AggFn::Count, nullptr, "custdist"}})
            .sort({{"custdist", false}, {"c_count", false}})
            .plan();
    }
    throw Error("query " + q.name + " has no definition");
}

} // namespace flarelite::tpch
