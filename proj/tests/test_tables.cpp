#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "modcsp/structures.hpp"
#include "modcsp/tables.hpp"

using namespace modcsp;

static const std::string kDataFile =
    std::string(MODCSP_DATA_DIR) + "/case_tables.json";

TEST_CASE("all case-table rows verify, plain and mirrored") {
    TableReport report = verify_case_tables(kDataFile);
    CHECK(report.all_pass);
    for (const TableRowResult& r : report.rows) {
        INFO(r.table_id << " row " << r.row << (r.mirrored ? " (mirrored)" : ""));
        CHECK(r.pass);
        CHECK((r.orientation == "direct" || r.orientation == "transposed"));
    }
}

TEST_CASE("report covers all tables with the expected row counts") {
    TableReport report = verify_case_tables(kDataFile);
    std::map<std::string, int> rows;
    std::map<std::string, int> mirrored;
    for (const TableRowResult& r : report.rows) {
        if (r.mirrored)
            mirrored[r.table_id] = std::max(mirrored[r.table_id], r.row);
        else
            rows[r.table_id] = std::max(rows[r.table_id], r.row);
    }
    CHECK(rows.at("ctx202-swap01") == 17);
    CHECK(rows.at("ctx202-fix01") == 13);
    CHECK(rows.at("ctx020cross-swap01") == 17);
    CHECK(rows.at("ctx020cross-fix01") == 6);
    CHECK(rows.at("ctx020adj-swap01") == 22);
    CHECK(rows.at("ctx020adj-fix01") == 24);
    CHECK(rows.at("square-automorphism") == 2);
    // every six-table row is also checked under the coordinate reversal
    for (const auto& [id, n] : rows)
        if (id != "square-automorphism") CHECK(mirrored.at(id) == n);
    CHECK_FALSE(mirrored.count("square-automorphism"));
    CHECK(report.tentative_count > 0);  // compressed-notation rows are flagged
}

TEST_CASE("missing data file raises") {
    CHECK_THROWS_AS(verify_case_tables("/nonexistent/tables.json"),
                    ValidationError);
}

TEST_CASE("table lookup turns a swapping action into an automorphic polynomial") {
    std::vector<int> sizes = {3};
    OperationTable p1 = projection_op(sizes, 3, 0);
    OperationTable p2 = projection_op(sizes, 3, 1);
    OperationTable p3 = projection_op(sizes, 3, 2);

    SUBCASE("identity action matches no row") {
        CHECK_FALSE(case_table_polynomial(kDataFile, p1, p2, p3).has_value());
    }
    SUBCASE("second component swapping 0 and 1 in context 2_2") {
        OperationTable g2 = p2;
        g2.tables[0][static_cast<size_t>(encode_args({2, 0, 2}, 3))] = 1;
        g2.tables[0][static_cast<size_t>(encode_args({2, 1, 2}, 3))] = 0;
        auto f = case_table_polynomial(kDataFile, p1, g2, p3);
        REQUIRE(f.has_value());
        CHECK(f->arity == 2);
        CHECK(is_p_automorphic(*f, 2));
        // f(2,.) is the transposition (0 1)
        std::vector<int> row = {f->tables[0][static_cast<size_t>(encode_args({2, 0}, 3))],
                                f->tables[0][static_cast<size_t>(encode_args({2, 1}, 3))],
                                f->tables[0][static_cast<size_t>(encode_args({2, 2}, 3))]};
        CHECK(row == std::vector<int>{1, 0, 2});
        CHECK(permutation_order(row) == 2);
    }
}
