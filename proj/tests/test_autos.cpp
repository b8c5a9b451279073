#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "modcsp/autos.hpp"

using namespace modcsp;
using namespace modcsp::fixtures;

namespace {

// a 4-cycle digraph: automorphism group = Z4 (rotations) since edges are
// directed
Structure cycle4() {
    Structure h = single_sorted({"0", "1", "2", "3"});
    add_binary(h, "E", {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    return h;
}

}  // namespace

TEST_CASE("automorphism groups of small structures") {
    std::vector<Automorphism> aut = automorphisms(neq2());
    REQUIRE(aut.size() == 2);
    CHECK(aut[0].order == 1);  // identity first (lexicographic order)
    CHECK(aut[1].order == 2);  // the swap
    CHECK(aut[1].map.map[0] == std::vector<int>{1, 0});

    CHECK(automorphisms(le2()).size() == 1);  // rigid
    CHECK(automorphisms(add_constants(neq2())).size() == 1);

    std::vector<Automorphism> rot = automorphisms(cycle4());
    REQUIRE(rot.size() == 4);
    std::multiset<int> orders;
    for (const Automorphism& a : rot) orders.insert(a.order);
    CHECK(orders == std::multiset<int>{1, 2, 4, 4});

    CHECK_THROWS_AS(automorphisms(single_sorted({"0", "1"}), 1),
                    ValidationError);  // guard
}

TEST_CASE("p-automorphisms filter by order") {
    CHECK(p_automorphisms(neq2(), 2).size() == 1);
    CHECK(p_automorphisms(neq2(), 3).empty());
    CHECK(p_automorphisms(cycle4(), 2).size() == 1);
    CHECK_THROWS_AS(p_automorphisms(neq2(), 4), ValidationError);
}

TEST_CASE("p-rigid reduction") {
    // NEQ2 under p=2: the swap has no fixed points, domain empties out
    RigidReduction red = p_rigid_reduce(neq2(), 2);
    CHECK(red.result.sorts[0].size() == 0);
    CHECK(red.chain.size() == 1);

    // under p=3 NEQ2 is already 3-rigid
    CHECK(p_rigid_reduce(neq2(), 3).chain.empty());

    // 4-cycle under p=2: the half-turn (order 2) kills everything
    CHECK(p_rigid_reduce(cycle4(), 2).result.sorts[0].size() == 0);

    // a structure where the reduction keeps a proper fixed-point set:
    // loops at 0 and at 1..2 symmetric
    Structure h = single_sorted({"0", "1", "2"});
    add_binary(h, "E", {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {2, 1}});
    RigidReduction r2 = p_rigid_reduce(h, 2);
    CHECK(r2.result.sorts[0].size() == 1);
    CHECK(r2.result.sorts[0].elements == std::vector<std::string>{"0"});
    CHECK(r2.result.relations[0].tuples == std::vector<Tuple>{{0, 0}});

    // constants flag is preserved
    Structure hc = h;
    hc.constants_flag = true;
    CHECK(p_rigid_reduce(hc, 2).result.constants_flag);
}

TEST_CASE("M-automorphisms of NEQ2") {
    std::vector<MAutomorphism> all = m_automorphisms(neq2());
    CHECK_FALSE(all.empty());

    // the projection triple is the identity M-automorphism
    MAutomorphism id{projection_op({2}, 3, 0), projection_op({2}, 3, 1),
                     projection_op({2}, 3, 2), 1};
    bool found_id = false;
    for (const MAutomorphism& m : all)
        if (m.g1 == id.g1 && m.g2 == id.g2 && m.g3 == id.g3) {
            found_id = true;
            CHECK(m.order == 1);
        }
    CHECK(found_id);

    // every M-automorphism fixes the pinned triples and bundles bijectively
    for (const MAutomorphism& m : all) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                int abb = encode_args({a, b, b}, 2);
                int bba = encode_args({b, b, a}, 2);
                CHECK(m_auto_apply(m, 0, abb) == abb);
                CHECK(m_auto_apply(m, 0, bba) == bba);
            }
        std::vector<int> perm(8);
        for (int code = 0; code < 8; ++code)
            perm[static_cast<size_t>(code)] = m_auto_apply(m, 0, code);
        CHECK(permutation_order(perm) >= 1);
    }

    // p = 2 keeps only orders 1 and 2; p = 3 keeps only the ones of order 1
    for (const MAutomorphism& m : m_automorphisms(neq2(), 2))
        CHECK((m.order == 1 || m.order == 2));
    for (const MAutomorphism& m : m_automorphisms(neq2(), 3))
        CHECK(m.order == 1);
    CHECK(m_automorphisms(neq2(), 2).size() > m_automorphisms(neq2(), 3).size());
}

TEST_CASE("stabilizers and automorphism-stable sets") {
    Structure h2 = power(neq2(), 2);

    // Aut(NEQ2^2) contains at least swap x swap and coordinate actions;
    // fixing (0,0) must also fix (1,1) (the diagonal is an orbit pattern)
    std::vector<Automorphism> fix00 = stab(h2, {{0, 0}});
    for (const Automorphism& a : fix00) CHECK(a.map.map[0][0] == 0);
    CHECK(fix00.size() < automorphisms(h2).size());

    // stable-set filter
    std::vector<std::pair<int, int>> diag = {{0, 0}, {0, 3}};
    std::vector<Automorphism> st = stab(h2, {}, diag);
    for (const Automorphism& a : st) {
        CHECK((a.map.map[0][0] == 0 || a.map.map[0][0] == 3));
        CHECK((a.map.map[0][3] == 0 || a.map.map[0][3] == 3));
    }
    CHECK(st.size() >= 2);

    // the diagonal is automorphism-stable (stabilizers are subgroups here)
    CHECK(is_automorphism_stable(diag, h2).has_value());
}
