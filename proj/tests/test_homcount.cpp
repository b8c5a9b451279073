#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "modcsp/homcount.hpp"

using namespace modcsp;
using namespace modcsp::fixtures;

namespace {

// Random single-sorted structure over n elements with one binary relation.
Structure random_structure(std::mt19937& rng, int n) {
    std::vector<std::string> elems;
    for (int i = 0; i < n; ++i) elems.push_back(std::to_string(i));
    Structure h = single_sorted(elems);
    std::vector<Tuple> tuples;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (rng() % 2) tuples.push_back({a, b});
    add_binary(h, "R", tuples);
    return h;
}

}  // namespace

TEST_CASE("basic enumeration") {
    Structure h = neq2();
    Instance p;
    p.variables.push_back({"x", 0});
    CHECK(enumerate_homs(p, h).size() == 2);

    Instance edge = edge_path(h, 2);
    auto sols = enumerate_homs(edge, h);
    REQUIRE(sols.size() == 2);
    CHECK(sols[0] == std::vector<int>{0, 1});
    CHECK(sols[1] == std::vector<int>{1, 0});

    // empty used domain -> 0 solutions
    Structure empty = induced_substructure(h, {{}});
    CHECK(enumerate_homs(edge, empty).empty());

    // count always equals stream length
    CHECK(count_homs(edge, h) == 2);
}

TEST_CASE("counting mod p") {
    Structure h = neq2();
    Instance triangle = edge_path(h, 3, true);
    CHECK(count_homs(triangle, h) == 0);
    CHECK(count_homs_mod(triangle, h, 2) == 0);

    Instance path = edge_path(h, 3);
    CHECK(count_homs(path, h) == 2);
    CHECK(count_homs_mod(path, h, 2) == 0);
    CHECK(count_homs_mod(path, h, 3) == 2);

    CHECK_THROWS_AS(count_homs_mod(path, h, 4), ValidationError);
}

TEST_CASE("pins respect sorts and restrict solutions") {
    Structure h = neq2();
    Instance path = edge_path(h, 3);
    CHECK(count_homs(path, h, {{0, 0}}) == 1);
    CHECK_THROWS_AS(count_homs(path, h, {{0, 5}}), ValidationError);
}

TEST_CASE("pointed counts partition totals") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        Structure h = random_structure(rng, 3);
        Structure g = random_structure(rng, 3);
        Instance p = structure_as_instance(g, h);
        long long total = count_homs(p, h);
        long long sum = 0;
        for (int a = 0; a < 3; ++a)
            sum += count_pointed(g, {{0, 0}}, h, {{a}});
        CHECK(sum == total);
    }
    // single vertex pinned to a target
    Structure g = single_sorted({"x"});
    add_binary(g, "R", {});
    CHECK(count_pointed(g, {{0, 0}}, neq2(), {{1}}) == 1);
    // subset target
    CHECK(count_pointed(g, {{0, 0}}, neq2(), {std::vector<int>{0, 1}}) == 2);
}

TEST_CASE("mobius weights on small lattices") {
    PartitionLattice l2 = partition_lattice({2});
    WeightTable w2 = mobius_weights(l2);
    REQUIRE(l2.partitions.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        int nc = l2.partitions[i].total_classes();
        CHECK(w2.top_down[i] == (nc == 1 ? 1 : -1));
    }

    PartitionLattice l3 = partition_lattice({3});
    WeightTable w3 = mobius_weights(l3);
    REQUIRE(l3.partitions.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        int nc = l3.partitions[i].total_classes();
        long long expect = nc == 1 ? 1 : (nc == 2 ? -1 : 2);
        CHECK(w3.top_down[i] == expect);
        // dual recursion mirrors the values on this self-dual lattice
        long long dual = nc == 3 ? 1 : (nc == 2 ? -1 : 2);
        CHECK(w3.bottom_up[i] == dual);
    }

    CHECK_THROWS_AS(partition_lattice({9}), ValidationError);
}

TEST_CASE("quotients") {
    Structure h = neq2();
    MultiPartition discrete{{{0, 1}}};
    Quotient qd = quotient_structure(h, discrete);
    CHECK(qd.structure.sorts[0].size() == 2);
    CHECK(qd.structure.relations[0].tuples == h.relations[0].tuples);

    MultiPartition top{{{0, 0}}};
    Quotient qt = quotient_structure(h, top);
    CHECK(qt.structure.sorts[0].size() == 1);
    CHECK(qt.structure.relations[0].tuples == std::vector<Tuple>{{0, 0}});
}

TEST_CASE("injective counting: direct vs mobius") {
    // inj(NEQ2 -> NEQ2) = 2 (identity and swap)
    CHECK(count_injective(neq2(), neq2()) == 2);
    CHECK(count_injective_mobius(neq2(), neq2()) == 2);

    // |G| > |H| forces 0
    Structure g3 = single_sorted({"a", "b", "c"});
    add_binary(g3, "R", {});
    CHECK(count_injective(g3, neq2()) == 0);
    CHECK(count_injective_mobius(g3, neq2()) == 0);

    std::mt19937 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        Structure h = random_structure(rng, 2 + static_cast<int>(rng() % 2));
        Structure g = random_structure(rng, 1 + static_cast<int>(rng() % 3));
        CHECK(count_injective(g, h) == count_injective_mobius(g, h));
    }
}

TEST_CASE("injective oracle equivalence: exhaustive grid") {
    // |H| <= 3 single-sorted, G up to 4 elements, one binary relation.
    // Sampled deterministically to keep the grid over 200 cases but fast.
    std::mt19937 rng(2024);
    int cases = 0;
    for (int nh = 1; nh <= 3; ++nh)
        for (int ng = 1; ng <= 4; ++ng)
            for (int rep = 0; rep < 20; ++rep) {
                Structure h = random_structure(rng, nh);
                Structure g = random_structure(rng, ng);
                long long direct = count_injective(g, h);
                CHECK(direct == count_injective_mobius(g, h));
                ++cases;
            }
    CHECK(cases >= 200);
}

TEST_CASE("partition function evaluation") {
    FpMatrix m;
    m.p = 5;
    m.rows = {{0, 1}, {1, 1}};
    Digraph edge{2, {{0, 1}}};
    CHECK(eval_partition_function(m, edge, 5) == 3);

    Digraph vertex{1, {}};
    CHECK(eval_partition_function(m, vertex, 5) == 2);

    FpMatrix m3;
    m3.p = 3;
    m3.rows = {{0, 1, 1}, {1, 1, 0}, {1, 0, 1}};
    CHECK(eval_partition_function(m3, edge, 3) == 0);  // 6 mod 3

    Digraph bad{1, {{0, 1}}};
    CHECK_THROWS_AS(eval_partition_function(m, bad, 5), ValidationError);
}
