#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>

#include "fixtures.hpp"
#include "modcsp/homcount.hpp"
#include "modcsp/obstruction.hpp"
#include "modcsp/tables.hpp"

using namespace modcsp;
using namespace modcsp::fixtures;

namespace {

Structure with_constants(const std::string& name, std::vector<Tuple> tuples) {
    Structure h = single_sorted({"0", "1"});
    Relation r;
    r.symbol.name = name;
    r.symbol.type = std::vector<int>(tuples[0].size(), 0);
    r.tuples = std::move(tuples);
    r.normalize();
    h.relations.push_back(std::move(r));
    return add_constants(h);
}

// x <= y on {0,1}, plus constants
Structure impl2c() { return with_constants("le", {{0, 0}, {0, 1}, {1, 1}}); }

// the 3-element chain 0 < 1 < 2 with its 2-element subsets, the binary
// minimum (as a graph), and constants; conservativity is certified from
// the explicit unaries and the polymorphism clone stays small
Structure chain3c() {
    Structure h = single_sorted({"0", "1", "2"});
    add_binary(h, "le", {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}});
    for (auto [name, a, b] : {std::tuple{"u01", 0, 1}, {"u02", 0, 2}, {"u12", 1, 2}}) {
        Relation u;
        u.symbol = {name, {0}};
        u.tuples = {{a}, {b}};
        h.relations.push_back(std::move(u));
    }
    Relation mn;
    mn.symbol = {"min3", {0, 0, 0}};
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) mn.tuples.push_back({x, y, std::min(x, y)});
    mn.normalize();
    h.relations.push_back(std::move(mn));
    return add_constants(h);
}

// the complete graph on 3 vertices: loopless, edge-transitive, all
// ternary polymorphisms essentially unary
Structure triangle3() {
    Structure h = single_sorted({"0", "1", "2"});
    std::vector<Tuple> e;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            if (x != y) e.push_back({x, y});
    add_binary(h, "edge", e);
    return h;
}

// x + y + z = 0 mod 3: the Mal'tsev operation x - y + z is a polymorphism
Structure affine3() {
    Structure h = single_sorted({"0", "1", "2"});
    Relation r;
    r.symbol = {"sum0", {0, 0, 0}};
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) r.tuples.push_back({x, y, (6 - x - y) % 3});
    r.normalize();
    h.relations.push_back(std::move(r));
    return h;
}

// closure budget small enough for 3-element domains in test time
ObstructionBudget small_budget() {
    ObstructionBudget b;
    b.closure.max_atoms = 2;
    b.closure.max_free_arity = 3;
    b.closure.max_blocks = 2;
    b.closure.max_relation_size = 27;
    b.closure.max_relations = 16;
    return b;
}

void check_certificate(const ObstructionCertificate& cert, const Structure& h,
                       long long p) {
    std::string why;
    CHECK_MESSAGE(verify_certificate(cert, h, p, &why), why);
    REQUIRE(cert.coords.size() == 2);
    CHECK(cert.relation.tuples.size() == 3);
    CHECK(is_rectangular(cert.relation).has_value());
}

}  // namespace

TEST_CASE("conservative pipeline certifies the ordered 2-element structure") {
    Structure h = impl2c();
    auto cert = conservative_obstruction(h, 2);
    REQUIRE(cert.has_value());
    check_certificate(*cert, h, 2);
    // the terminal relation is the 2x2 membership pattern with exactly
    // one missing tuple
    CHECK(cert->relation.tuples ==
          std::vector<Tuple>{{0, 0}, {0, 1}, {1, 1}});
    // witnesses realize 3-in/1-out on it
    CHECK(cert->wout == Tuple{1, 0});
    // the single out-tuple is itself the rectangularity violation
    auto viol = is_rectangular(cert->relation);
    REQUIRE(viol.has_value());
    CHECK(viol->split == std::vector<int>{0});
}

TEST_CASE("conservative pipeline certifies an engineered fixture suite") {
    struct Fx {
        const char* name;
        Structure h;
        ObstructionBudget budget;
    };
    std::vector<Fx> suite;
    suite.push_back({"implication", impl2c(), {}});
    suite.push_back({"or", with_constants("orr", {{0, 1}, {1, 0}, {1, 1}}), {}});
    suite.push_back({"nand", with_constants("nand", {{0, 0}, {0, 1}, {1, 0}}), {}});
    suite.push_back(
        {"one-in-three",
         with_constants("oit", {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}}), {}});
    suite.push_back({"chain3", chain3c(), small_budget()});
    for (const Fx& fx : suite) {
        CAPTURE(fx.name);
        StuckReport stuck;
        auto cert = conservative_obstruction(fx.h, 2, fx.budget, &stuck);
        REQUIRE_MESSAGE(cert.has_value(), (stuck.rule + ": " + stuck.detail));
        check_certificate(*cert, fx.h, 2);
    }
}

TEST_CASE("mutated certificates fail verification") {
    Structure h = impl2c();
    auto cert = conservative_obstruction(h, 2);
    REQUIRE(cert.has_value());
    std::string why;

    SUBCASE("tampered final witness") {
        auto m = *cert;
        m.w3[0] ^= 1;
        CHECK_FALSE(verify_certificate(m, h, 2, &why));
        CHECK(why == "final witnesses mismatch");
    }
    SUBCASE("dropped tuple in the final relation") {
        auto m = *cert;
        m.relation.tuples.pop_back();
        CHECK_FALSE(verify_certificate(m, h, 2, &why));
        CHECK(why == "final relation does not replay");
    }
    SUBCASE("tampered mid-chain witness breaks the pattern") {
        auto m = *cert;
        m.chain[2].w2[0] ^= 1;
        CHECK_FALSE(verify_certificate(m, h, 2, &why));
        CHECK(why.find("witness pattern violated") != std::string::npos);
    }
    SUBCASE("wrong modulus") {
        auto m = *cert;
        m.p = 3;
        CHECK_FALSE(verify_certificate(m, h, 2, &why));
        CHECK(why == "certificate was issued for a different modulus");
    }
    SUBCASE("wrong structure") {
        CHECK_FALSE(verify_certificate(*cert, affine2(), 2, &why));
    }
}

TEST_CASE("swapped-pattern move rebuilds the membership split") {
    // handcrafted ternary state: the fibers at the last coordinate admit
    // no common pin, but pinning the other same-role coordinate to the
    // excluded side splits them
    EliminationState st;
    st.dagger = neq2();
    st.p = 2;
    st.coords = {0, 1, 2};
    st.witness_coords = {0, 1, 2};
    st.rel.symbol = {"R", {0, 0, 0}};
    st.rel.tuples = {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 1, 1}};
    st.rel.normalize();
    st.w1 = {0, 0, 0};
    st.w2 = {1, 0, 0};
    st.w3 = {1, 1, 1};
    st.wout = {0, 1, 1};
    REQUIRE(pattern_holds(st));

    EliminationTools tools;
    tools.p = 2;
    tools.two_subalgebras = {{}};
    auto stuck = eliminate_witness_coordinate(st, 2, tools);
    REQUIRE_FALSE(stuck.has_value());
    const ObstructionStep& s = st.chain.back();
    CHECK(s.rule == "swap");
    CHECK(s.role_swap);
    CHECK(s.eliminated == std::vector<int>{1});
    CHECK(st.rel.tuples == std::vector<Tuple>{{0, 0}, {0, 1}, {1, 0}});
    CHECK(st.w1 == Tuple{1, 0});
    CHECK(st.w2 == Tuple{0, 0});
    CHECK(st.w3 == Tuple{0, 1});
    CHECK(st.wout == Tuple{1, 1});
    CHECK(pattern_holds(st));
}

TEST_CASE("gadget search returns verified pointed counts") {
    Structure h = neq2();
    GadgetBudget budget;
    auto gw = find_gadget(h, 2, {{}, {}, {}}, {}, {{0}, {1}, {0}}, 0, budget);
    REQUIRE(gw.has_value());
    // canonical order finds the atomless gadget: a single free vertex
    CHECK(gw->gadget.constraints.empty());
    CHECK(gw->gadget.variables.size() == 1);
    CHECK(gw->x_var == 0);
    CHECK(gw->counts == std::vector<long long>{1, 1, 1});
    // independent recount of each pointed sum
    for (int i = 0; i < 3; ++i) {
        long long c = 0;
        for (int e : gw->targets[static_cast<size_t>(i)]) {
            Pins pp;
            pp[gw->x_var] = e;
            c = (c + count_homs_mod(gw->gadget, h, 2, pp)) % 2;
        }
        CHECK(c == gw->counts[static_cast<size_t>(i)]);
    }
}

TEST_CASE("gadget search exhausts when every pointed count cancels") {
    // over the 2-element inequality structure every gadget's counts at
    // x in {0,1} are equal by the swapping automorphism, so the sum over
    // the full domain is always 0 mod 2
    Structure h = neq2();
    GadgetBudget budget;
    budget.max_aux = 1;
    budget.max_atoms = 2;
    budget.max_candidates = 5000;
    auto gw = find_gadget(h, 2, {{}, {}, {}}, {}, {{0, 1}, {0, 1}, {0, 1}}, 0,
                          budget);
    CHECK_FALSE(gw.has_value());
}

TEST_CASE("three-element dispatch certifies the triangle") {
    Structure h = triangle3();
    auto out = three_element_obstruction(h, 2, small_budget());
    REQUIRE(out.certificate.has_value());
    CHECK_FALSE(out.poly.has_value());
    check_certificate(*out.certificate, h, 2);
}

TEST_CASE("three-element dispatch delegates conservative structures") {
    Structure h = chain3c();
    auto out = three_element_obstruction(h, 2, small_budget());
    REQUIRE(out.certificate.has_value());
    check_certificate(*out.certificate, h, 2);
}

TEST_CASE("no obstruction when a Mal'tsev polymorphism survives") {
    CHECK_THROWS_AS(three_element_obstruction(affine3(), 2, small_budget()),
                    ValidationError);
    CHECK_THROWS_AS(conservative_obstruction(affine2(), 2), ValidationError);
}

TEST_CASE("conservative pipeline rejects uncertified structures") {
    CHECK_THROWS_AS(conservative_obstruction(triangle3(), 2, small_budget()),
                    ValidationError);
}

TEST_CASE("arity reduction completes a bulk-only certificate") {
    Structure h = impl2c();
    ObstructionBudget budget;
    EliminationState st = initial_state(h, 2, budget);
    REQUIRE(pattern_holds(st));
    EliminationTools tools = make_tools(h, st, budget);
    std::vector<int> bulk;
    for (int z : st.coords)
        if (!std::binary_search(st.witness_coords.begin(),
                                st.witness_coords.end(), z))
            bulk.push_back(z);
    for (int z : bulk) {
        auto stuck = eliminate_coordinate(st, z, tools);
        REQUIRE_FALSE(stuck.has_value());
    }
    CHECK(st.coords == st.witness_coords);
    ObstructionCertificate part = state_to_certificate(st, budget);
    ObstructionCertificate full = two_element_reduce(part, h, 2);
    check_certificate(full, h, 2);
}
