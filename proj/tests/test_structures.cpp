#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "modcsp/homcount.hpp"
#include "modcsp/json_io.hpp"
#include "modcsp/structures.hpp"

using namespace modcsp;
using namespace modcsp::fixtures;

TEST_CASE("validate accepts NEQ2 and rejects malformed structures") {
    Structure h = neq2();
    CHECK_NOTHROW(validate(h));

    Structure bad = neq2();
    bad.relations[0].tuples.push_back({0, 2});  // element out of domain
    CHECK_THROWS_AS(validate(bad), ValidationError);

    Structure dup = neq2();
    add_binary(dup, "R", {{0, 0}});  // duplicate relation name
    CHECK_THROWS_AS(validate(dup), ValidationError);
}

TEST_CASE("power(NEQ2, 3) has 8 elements and the 8 dual pairs") {
    Structure h3 = power(neq2(), 3);
    CHECK(h3.sorts[0].size() == 8);
    // brute force over 8x8 pairs: a tuple is present iff dual coordinate-wise
    CHECK(h3.relations[0].tuples.size() == 8);
    for (const Tuple& t : h3.relations[0].tuples) CHECK(t[0] == 7 - t[1]);
}

TEST_CASE("power(H, 1) is isomorphic to H; full product unit") {
    Structure h = le2();
    CHECK(find_isomorphism(h, power(h, 1)).has_value());

    Structure unit = single_sorted({"u"});
    add_binary(unit, "Q", {{0, 0}});  // full relation on one element
    CHECK(find_isomorphism(product(h, unit), h).has_value());
}

TEST_CASE("hom(G, H1 x H2) = hom(G, H1) * hom(G, H2) for small G") {
    Structure h1 = neq2(), h2 = le2();
    // align signatures: rename both relations to "R"
    h2.relations[0].symbol.name = "R";
    Structure prod = product(h1, h2);
    for (int n = 1; n <= 3; ++n) {
        for (int cycle = 0; cycle < 2; ++cycle) {
            Instance g = edge_path(h1, n, cycle != 0);
            CHECK(count_homs(g, prod) ==
                  count_homs(g, h1) * count_homs(g, h2));
        }
    }
}

TEST_CASE("induced substructures") {
    Structure h = neq2();
    Structure r0 = induced_substructure(h, {{0}});
    CHECK(r0.relations[0].tuples.empty());
    Structure full = induced_substructure(h, {{0, 1}});
    CHECK(full.relations[0].tuples == h.relations[0].tuples);

    Structure h3 = single_sorted({"0", "1", "2"});
    add_binary(h3, "R", {{0, 1}, {1, 0}, {0, 2}, {2, 2}});
    Structure sub = induced_substructure(h3, {{0, 1}});
    CHECK(sub.relations[0].tuples == std::vector<Tuple>{{0, 1}, {1, 0}});
}

TEST_CASE("expansions: constants and equalities") {
    Structure hc = add_constants(neq2());
    CHECK(hc.constants_flag);
    CHECK(hc.relations.size() == 3);
    CHECK(hc.relation("C_H_0").tuples == std::vector<Tuple>{{0}});
    CHECK(hc.relation("C_H_1").tuples == std::vector<Tuple>{{1}});

    Structure he = add_equalities(neq2());
    CHECK(he.relation("EQ_H").tuples == std::vector<Tuple>{{0, 0}, {1, 1}});

    // name collision
    Relation clash;
    clash.symbol.name = "R";
    clash.symbol.type = {0};
    CHECK_THROWS_AS(expand(neq2(), {clash}), ValidationError);
}

TEST_CASE("spectrum and its order") {
    CHECK(spectrum(neq2()) == std::vector<long long>{0, 1});
    CHECK(spectrum_less({1}, {0, 1}));
    CHECK_FALSE(spectrum_less({0, 1}, {1}));
    CHECK_FALSE(spectrum_less({0, 1}, {0, 1}));
    // strict total order on a few distinct spectra
    std::vector<std::vector<long long>> sp = {{}, {1}, {2}, {0, 1}, {1, 1}, {0, 2}};
    for (size_t i = 0; i < sp.size(); ++i)
        for (size_t j = 0; j < sp.size(); ++j) {
            if (i == j) continue;
            CHECK(spectrum_less(sp[i], sp[j]) != spectrum_less(sp[j], sp[i]));
        }
}

TEST_CASE("structure/instance round trips preserve counts") {
    Structure h = neq2();
    // G = NEQ2 itself as an instance of CSP(NEQ2): 2 variables, 2 constraints
    Instance p = structure_as_instance(neq2(), h);
    CHECK(p.variables.size() == 2);
    CHECK(p.constraints.size() == 2);
    CHECK(count_homs(p, h) == 2);

    // single element, no tuples
    Structure g1 = single_sorted({"g"});
    add_binary(g1, "R", {});
    Instance p1 = structure_as_instance(g1, h);
    CHECK(p1.variables.size() == 1);
    CHECK(p1.constraints.empty());

    // round-trip on randomized small instances
    unsigned seed = 12345;
    for (int trial = 0; trial < 20; ++trial) {
        Instance q;
        int nv = 1 + static_cast<int>(seed = seed * 1664525 + 1013904223,
                                      seed >> 16 & 3);
        for (int i = 0; i < nv; ++i)
            q.variables.push_back({"x" + std::to_string(i), 0});
        int nc = static_cast<int>((seed = seed * 1664525 + 1013904223) >> 16 & 3);
        for (int i = 0; i < nc; ++i) {
            int a = static_cast<int>((seed = seed * 1664525 + 1013904223) >> 16) % nv;
            int b = static_cast<int>((seed = seed * 1664525 + 1013904223) >> 16) % nv;
            q.constraints.push_back({0, {a, b}});
        }
        Instance rt = structure_as_instance(instance_as_structure(q, h), h);
        CHECK(count_homs(q, h) == count_homs(rt, h));
    }
}

TEST_CASE("find_isomorphism") {
    CHECK(find_isomorphism(neq2(), neq2()).has_value());
    // identity is found first
    MultiSortedMap id = *find_isomorphism(neq2(), neq2());
    CHECK(id.map[0] == std::vector<int>{0, 1});

    Structure le = le2();
    le.relations[0].symbol.name = "R";
    CHECK_FALSE(find_isomorphism(neq2(), le).has_value());

    // relabeling 0<->1 of LE2
    Structure relabeled = single_sorted({"0", "1"});
    add_binary(relabeled, "Q", {{1, 1}, {1, 0}, {0, 1}});
    auto iso = find_isomorphism(le2(), relabeled);
    REQUIRE(iso.has_value());
    CHECK(iso->map[0] == std::vector<int>{1, 0});
}

TEST_CASE("JSON round trip is canonical") {
    Structure h = add_constants(le2());
    Json j = structure_to_json(h);
    Structure back = structure_from_json(j);
    CHECK(structure_to_json(back) == j);
    CHECK(j.dump() == structure_to_json(back).dump());

    Instance p = edge_path(h, 3);
    Json jp = instance_to_json(p, h);
    Instance pb = instance_from_json(jp, h);
    CHECK(instance_to_json(pb, h) == jp);
}
