#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "modcsp/polyclone.hpp"

using namespace modcsp;
using namespace modcsp::fixtures;

namespace {

// brute-force polymorphism enumeration straight from the definition
std::vector<OperationTable> brute_polymorphisms(const Structure& h, int arity) {
    IndicatorLayout layout = indicator_layout(h, arity);
    int total = layout.total();
    std::vector<OperationTable> out;
    std::vector<int> assignment(static_cast<size_t>(total), 0);
    while (true) {
        OperationTable f = assignment_to_table(assignment, layout);
        if (is_polymorphism(f, h)) out.push_back(f);
        int k = total - 1;
        while (k >= 0) {
            int sort = 0;
            while (sort + 1 < static_cast<int>(layout.offsets.size()) &&
                   layout.offsets[static_cast<size_t>(sort + 1)] <= k)
                ++sort;
            if (++assignment[static_cast<size_t>(k)] <
                layout.sizes[static_cast<size_t>(sort)])
                break;
            assignment[static_cast<size_t>(k)] = 0;
            --k;
        }
        if (k < 0) break;
    }
    return out;
}

Structure two_elem_binary(int mask) {
    Structure h = single_sorted({"0", "1"});
    std::vector<Tuple> tuples;
    for (int t = 0; t < 4; ++t)
        if ((mask >> t) & 1) tuples.push_back({t / 2, t % 2});
    add_binary(h, "R", tuples);
    return h;
}

}  // namespace

TEST_CASE("indicator instance shape") {
    Instance p = indicator_instance(neq2(), 3);
    CHECK(p.variables.size() == 8);
    CHECK(p.constraints.size() == 8);  // |R|^3

    Instance q = indicator_instance(le2(), 3);
    CHECK(q.variables.size() == 8);
    CHECK(q.constraints.size() == 27);

    // constraint count = sum over relations of |R_j|^arity, in general
    Structure h = affine2();
    CHECK(indicator_instance(h, 3).constraints.size() == 4 * 4 * 4);
    CHECK(indicator_instance(h, 2).constraints.size() == 4 * 4);
}

TEST_CASE("NEQ2 has exactly the 16 self-dual ternary polymorphisms") {
    std::vector<OperationTable> polys = enumerate_polymorphisms(neq2(), 3);
    CHECK(polys.size() == 16);
    for (const OperationTable& f : polys) {
        CHECK(is_polymorphism(f, neq2()));
        // self-duality f(~x,~y,~z) = ~f(x,y,z)
        for (int code = 0; code < 8; ++code)
            CHECK(f.tables[0][static_cast<size_t>(code)] ==
                  1 - f.tables[0][static_cast<size_t>(7 - code)]);
    }
    // projections present
    for (int which = 0; which < 3; ++which) {
        OperationTable e = projection_op({2}, 3, which);
        CHECK(std::find(polys.begin(), polys.end(), e) != polys.end());
    }
    // matches the brute-force definition
    CHECK(brute_polymorphisms(neq2(), 3) == polys);
}

TEST_CASE("indicator coordinates") {
    IndicatorCoordinates c2 = indicator_coordinates(neq2());
    REQUIRE(c2.I.size() == 4);
    CHECK(c2.a == Tuple{0, 0, 1, 1});
    CHECK(c2.b == Tuple{0, 1, 0, 1});
    CHECK(c2.I[0].second == Tuple{0, 0, 0});
    CHECK(c2.I[1].second == Tuple{0, 1, 1});
    CHECK(c2.I[2].second == Tuple{1, 0, 0});
    CHECK(c2.I[3].second == Tuple{1, 1, 1});
    REQUIRE(c2.J.size() == 2);
    CHECK(c2.J[0].second == Tuple{0, 0, 1});
    CHECK(c2.J[1].second == Tuple{1, 1, 0});
    CHECK(c2.c == Tuple{0, 1});
    CHECK(c2.d == Tuple{1, 0});
    CHECK(c2.E_vars.size() == 2);  // 010 and 101

    Structure h3 = single_sorted({"0", "1", "2"});
    IndicatorCoordinates c3 = indicator_coordinates(h3);
    CHECK(c3.I.size() == 9);
    CHECK(c3.J.size() == 6);
    CHECK(c3.E_vars.size() == 27 - 9 - 6);
}

TEST_CASE("maltsev detection") {
    auto m = has_maltsev(neq2());
    REQUIRE(m.has_value());
    CHECK(is_maltsev(*m));
    CHECK(is_polymorphism(*m, neq2()));
    // only m(0,1,0) and m(1,0,1) are free, and self-duality links them
    CHECK(m->apply(0, {0, 1, 0}) == 1 - m->apply(0, {1, 0, 1}));
    // x^y^z is among the Mal'tsev candidates
    std::vector<OperationTable> cands = maltsev_candidates(neq2());
    OperationTable xorop;
    xorop.arity = 3;
    xorop.sizes = {2};
    xorop.tables = {std::vector<int>(8)};
    for (int code = 0; code < 8; ++code) {
        Tuple t = decode_args(code, 2, 3);
        xorop.tables[0][static_cast<size_t>(code)] = t[0] ^ t[1] ^ t[2];
    }
    CHECK(std::find(cands.begin(), cands.end(), xorop) != cands.end());
    CHECK_FALSE(has_maltsev(le2()).has_value());
}

TEST_CASE("maltsev criterion agrees with tuple membership over all 16 cases") {
    for (int mask = 0; mask < 16; ++mask) {
        Structure h = two_elem_binary(mask);
        IndicatorCoordinates coords = indicator_coordinates(h);
        // (a,d) in pr_{I u J} of the solution set?
        bool member = false;
        for (const OperationTable& f : enumerate_polymorphisms(h, 3)) {
            bool match = true;
            IndicatorLayout layout = indicator_layout(h, 3);
            std::vector<int> assignment(static_cast<size_t>(layout.total()));
            for (size_t i = 0; i < f.tables[0].size(); ++i)
                assignment[i] = f.tables[0][i];
            for (size_t k = 0; k < coords.I_vars.size(); ++k)
                if (assignment[static_cast<size_t>(coords.I_vars[k])] !=
                    coords.a[k])
                    match = false;
            for (size_t k = 0; k < coords.J_vars.size(); ++k)
                if (assignment[static_cast<size_t>(coords.J_vars[k])] !=
                    coords.d[k])
                    match = false;
            if (match) member = true;
        }
        bool brute = false;
        for (const OperationTable& f : brute_polymorphisms(h, 3))
            if (is_maltsev(f)) brute = true;
        CHECK(has_maltsev(h).has_value() == member);
        CHECK(has_maltsev(h).has_value() == brute);
    }
}

TEST_CASE("rectangularity") {
    CHECK_FALSE(is_rectangular(neq2().relations[0]).has_value());
    auto v = is_rectangular(le2().relations[0]);
    REQUIRE(v.has_value());
    // (0,*) extends to {0,1}, (1,*) only to {0}; c=0 shared, d=1 missing
    CHECK(v->a == Tuple{0});
    CHECK(v->b == Tuple{1});
    CHECK(v->c == Tuple{0});
    CHECK(v->d == Tuple{1});

    // every relation of a structure with a Mal'tsev polymorphism is
    // rectangular
    CHECK_FALSE(is_rectangular(affine2().relations[0]).has_value());
    CHECK_THROWS_AS(is_rectangular(add_constants(neq2()).relations[1]),
                    ValidationError);
}

TEST_CASE("composition and terms") {
    OperationTable e1 = projection_op({2}, 2, 0);
    OperationTable e2 = projection_op({2}, 2, 1);
    OperationTable m = *has_maltsev(neq2());
    CHECK(compose(projection_op({2}, 2, 0), {m, m}) == m);

    std::map<std::string, OperationTable> env{{"m", m}};
    CHECK(eval_term(parse_term("m(x,y,y)"), env, {"x", "y", "z"}, {2}) ==
          projection_op({2}, 3, 0));
    CHECK(eval_term(parse_term("m(y,y,x)"), env, {"x", "y", "z"}, {2}) ==
          projection_op({2}, 3, 0));
    CHECK(term_to_string(parse_term(" m( x , y , y ) ")) == "m(x,y,y)");
    CHECK_THROWS_AS(parse_term("m(x,y"), ValidationError);
    CHECK_THROWS_AS(eval_term(parse_term("q(x,y)"), env, {"x", "y"}, {2}),
                    ValidationError);
    (void)e1;
    (void)e2;

    // composition of polymorphisms is a polymorphism
    std::mt19937 rng(5);
    std::vector<OperationTable> polys = enumerate_polymorphisms(neq2(), 3);
    for (int trial = 0; trial < 50; ++trial) {
        const OperationTable& g = polys[rng() % polys.size()];
        std::vector<OperationTable> fs;
        for (int k = 0; k < 3; ++k) fs.push_back(polys[rng() % polys.size()]);
        CHECK(is_polymorphism(compose(g, fs), neq2()));
    }
}

TEST_CASE("p-automorphic polynomial detection") {
    // projections are automorphic but never p-automorphic
    CHECK(is_automorphic_polynomial(projection_op({2}, 2, 1)));
    CHECK_FALSE(is_p_automorphic(projection_op({2}, 2, 1), 2));

    // the target operation: sections at 0,1 identity, at 2 the swap
    OperationTable f;
    f.arity = 2;
    f.sizes = {3};
    f.tables = {{0, 1, 2, 0, 1, 2, 1, 0, 2}};
    CHECK(is_p_automorphic(f, 2));
    CHECK_FALSE(is_p_automorphic(f, 3));

    // structure whose only relation is {2}: f preserves it, detector fires
    Structure h = single_sorted({"0", "1", "2"});
    Relation r;
    r.symbol.name = "C2";
    r.symbol.type = {0};
    r.tuples = {{2}};
    h.relations.push_back(r);
    auto found = find_p_automorphic_polynomial(h, 2);
    REQUIRE(found.has_value());
    CHECK(is_p_automorphic(found->f, 2));
    CHECK(is_polymorphism(found->f, h));
    int order = permutation_order(
        {found->f.apply(found->witness_sort, {found->witness_elem, 0}),
         found->f.apply(found->witness_sort, {found->witness_elem, 1}),
         found->f.apply(found->witness_sort, {found->witness_elem, 2})});
    CHECK(order == 2);

    // a 2-element sort has no permutation of order 3
    CHECK_FALSE(find_p_automorphic_polynomial(neq2(), 3).has_value());
}

TEST_CASE("minority construction, exhaustive over per-sort types") {
    // single sort: all 4 Mal'tsev tables
    for (int aba = 0; aba < 2; ++aba)
        for (int bab = 0; bab < 2; ++bab) {
            OperationTable m;
            m.arity = 3;
            m.sizes = {2};
            m.tables = {std::vector<int>(8)};
            for (int code = 0; code < 8; ++code) {
                Tuple t = decode_args(code, 2, 3);
                int v;
                if (t[0] == t[1])
                    v = t[2];
                else if (t[1] == t[2])
                    v = t[0];
                else
                    v = t == Tuple{0, 1, 0} ? aba : bab;
                m.tables[0][static_cast<size_t>(code)] = v;
            }
            MinorityResult res = minority_from_maltsev(m);
            for (int code = 0; code < 8; ++code) {
                Tuple t = decode_args(code, 2, 3);
                CHECK(res.minority.tables[0][static_cast<size_t>(code)] ==
                      (t[0] ^ t[1] ^ t[2]));
            }
            if (aba == 1 && bab == 0) CHECK(res.types[0] == 0);
            if (aba == 0 && bab == 1) CHECK(res.types[0] == 1);
            if (aba == 0 && bab == 0) CHECK(res.types[0] == 2);
            if (aba == 1 && bab == 1) CHECK(res.types[0] == 3);
        }

    OperationTable bad = projection_op({2}, 3, 0);
    CHECK_THROWS_AS(minority_from_maltsev(bad), ValidationError);
}

TEST_CASE("square-automorphism terms yield 2-automorphic polynomials") {
    Structure h = single_sorted({"0", "1", "2"});
    auto build = [&](const std::map<std::pair<int, int>, std::pair<int, int>>&
                         action) {
        OperationTable g1, g2;
        g1.arity = g2.arity = 2;
        g1.sizes = g2.sizes = {3};
        g1.tables = {std::vector<int>(9)};
        g2.tables = {std::vector<int>(9)};
        for (const auto& [key, value] : action) {
            int code = encode_args({key.first, key.second}, 3);
            g1.tables[0][static_cast<size_t>(code)] = value.first;
            g2.tables[0][static_cast<size_t>(code)] = value.second;
        }
        return std::pair{g1, g2};
    };
    std::map<std::pair<int, int>, std::pair<int, int>> base = {
        {{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}},
        {{2, 0}, {2, 1}}, {{2, 1}, {2, 0}}};

    // everything fixed except the defining (c,a)<->(c,b) swap: g1 is a
    // projection and g2 carries the order-2 section
    auto fixed = base;
    fixed[{0, 1}] = {0, 1};
    fixed[{1, 0}] = {1, 0};
    fixed[{0, 2}] = {0, 2};
    fixed[{1, 2}] = {1, 2};
    auto [f1, f2] = build(fixed);
    OperationTable r1 = two_auto_poly_from_square_automorphism(h, f1, f2, 0, 1);
    CHECK(is_p_automorphic(r1, 2));
    CHECK(r1 == f2);

    // (a,b),(b,a) fixed with (a,c)<->(b,c) swapped: g1 itself works (its
    // order-2 section is in the first argument, handled by transposition)
    auto fixed2 = base;
    fixed2[{0, 1}] = {0, 1};
    fixed2[{1, 0}] = {1, 0};
    fixed2[{0, 2}] = {1, 2};
    fixed2[{1, 2}] = {0, 2};
    auto [h1, h2] = build(fixed2);
    CHECK(is_p_automorphic(
        two_auto_poly_from_square_automorphism(h, h1, h2, 0, 1), 2));

    // ab<->ba with ac,bc fixed
    auto swap1 = base;
    swap1[{0, 1}] = {1, 0};
    swap1[{1, 0}] = {0, 1};
    swap1[{0, 2}] = {0, 2};
    swap1[{1, 2}] = {1, 2};
    auto [s1, s2] = build(swap1);
    CHECK(is_p_automorphic(
        two_auto_poly_from_square_automorphism(h, s1, s2, 0, 1), 2));

    // ab<->ba with ac<->bc
    auto swap2 = base;
    swap2[{0, 1}] = {1, 0};
    swap2[{1, 0}] = {0, 1};
    swap2[{0, 2}] = {1, 2};
    swap2[{1, 2}] = {0, 2};
    auto [t1, t2] = build(swap2);
    CHECK(is_p_automorphic(
        two_auto_poly_from_square_automorphism(h, t1, t2, 0, 1), 2));

    // violated precondition: does not swap (c,a),(c,b)
    auto bad = fixed;
    bad[{2, 0}] = {2, 0};
    bad[{2, 1}] = {2, 1};
    auto [b1, b2] = build(bad);
    CHECK_THROWS_AS(two_auto_poly_from_square_automorphism(h, b1, b2, 0, 1),
                    ValidationError);
}
