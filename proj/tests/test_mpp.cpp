#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "modcsp/mpp.hpp"
#include "modcsp/polyclone.hpp"

using namespace modcsp;
using namespace modcsp::fixtures;

namespace {

OperationTable xor_op() {
    OperationTable f;
    f.arity = 3;
    f.sizes = {2};
    f.tables = {std::vector<int>(8)};
    for (int code = 0; code < 8; ++code) {
        std::vector<int> a = decode_args(code, 2, 3);
        f.tables[0][static_cast<size_t>(code)] = a[0] ^ a[1] ^ a[2];
    }
    return f;
}

// small budget keeping everything at most binary; enough for the
// 2/3-element closures exercised here
ClosureBudget small_budget(int max_relations = 200) {
    ClosureBudget b;
    b.max_atoms = 4;
    b.max_free_arity = 2;
    b.max_blocks = 2;
    b.max_relation_size = 64;
    b.max_relations = max_relations;
    return b;
}

using Content = std::set<std::pair<std::vector<int>, std::vector<Tuple>>>;

Content closure_content(const ClosureResult& c) {
    Content out;
    for (const DefinedRelation& d : c.relations)
        out.insert({d.relation.symbol.type, d.relation.tuples});
    return out;
}

// the 3-element structure whose binary relation is the adjacency matrix
//   0 1 1
//   1 1 0
//   1 0 1
Structure matrix3() {
    Structure h = single_sorted({"0", "1", "2"});
    add_binary(h, "R", {{0, 1}, {0, 2}, {1, 0}, {1, 1}, {2, 0}, {2, 2}});
    return h;
}

}  // namespace

TEST_CASE("extension counts and modular projections") {
    Structure hn = neq2(), hq = le2();
    const Relation& r = hn.relations[0];
    const Relation& q = hq.relations[0];

    ExtCount e = ext_counts(r, {0}, {0}, 2);
    CHECK(e.count == 1);
    CHECK(e.residue == 1);

    e = ext_counts(q, {0}, {0}, 2);  // (0,0) and (0,1) extend
    CHECK(e.count == 2);
    CHECK(e.residue == 0);

    long long total = 0;  // counts over all prefixes partition the relation
    for (int a = 0; a < 2; ++a) total += ext_counts(q, {a}, {0}, 2).count;
    CHECK(total == static_cast<long long>(q.tuples.size()));

    CHECK_THROWS_AS(ext_counts(q, {0}, {0}, 4), ValidationError);
    CHECK_THROWS_AS(ext_counts(q, {0}, {5}, 2), ValidationError);
    CHECK_THROWS_AS(ext_counts(q, {0, 1}, {0}, 2), ValidationError);

    // 0 has two extensions (even), 1 has one
    CHECK(pr_p(q, {0}, 2).tuples == std::vector<Tuple>{{1}});

    // unique extensions: modular projection = ordinary projection
    CHECK(pr_p(r, {0}, 2).tuples == std::vector<Tuple>{{0}, {1}});

    // a prefix with exactly three extensions vanishes mod 3
    Structure t = single_sorted({"0", "1", "2"});
    add_binary(t, "S", {{0, 0}, {0, 1}, {0, 2}, {1, 0}});
    CHECK(pr_p(t.relations[0], {0}, 3).tuples == std::vector<Tuple>{{1}});

    CHECK_THROWS_AS(pr_p(q, {1, 0}, 2), ValidationError);
    CHECK_THROWS_AS(pr_p(q, {0}, 6), ValidationError);
}

TEST_CASE("modular formula evaluation") {
    Structure hc = add_constants(le2());
    std::string c1 = constant_relation_name(hc, 0, 1);

    // exists^{=2} y (Q(x,y) & C1(y)): only x=0 has an odd count
    MppFormula phi;
    phi.free = {{"x", 0}};
    phi.blocks = {{"y"}};
    phi.atoms = {{"Q", {"x", "y"}}, {c1, {"y"}}};
    Relation out = eval_mpp(phi, hc, 2);
    CHECK(out.symbol.type == std::vector<int>{0});
    CHECK(out.tuples == std::vector<Tuple>{{0}});
    CHECK(is_strict(phi, hc, 2));  // the surviving count is exactly 1

    // empty prefix: plain conjunctive join, cross-checked independently
    Structure h = le2();
    MppFormula join;
    join.free = {{"x", 0}, {"y", 0}, {"z", 0}};
    join.atoms = {{"Q", {"x", "y"}}, {"Q", {"y", "z"}}};
    std::vector<Tuple> expect;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z)
                if (h.relations[0].contains({x, y}) &&
                    h.relations[0].contains({y, z}))
                    expect.push_back({x, y, z});
    CHECK(eval_mpp(join, h, 2).tuples == expect);
    CHECK(is_strict(join, h, 2));  // no blocks at all

    // equality atom merges variables
    MppFormula diag;
    diag.free = {{"x", 0}, {"y", 0}};
    diag.atoms = {{"Q", {"x", "y"}}, {"", {"x", "y"}}};
    CHECK(eval_mpp(diag, h, 2).tuples == std::vector<Tuple>{{0, 0}});

    // a quantified variable appearing only in z=z needs a sort hint
    MppFormula dom;
    dom.free = {{"x", 0}};
    dom.blocks = {{"z"}};
    dom.atoms = {{"Q", {"x", "x"}}, {"", {"z", "z"}}};
    CHECK_THROWS_AS(eval_mpp(dom, h, 2), ValidationError);
    dom.sort_hints = {{"z", 0}};
    CHECK(eval_mpp(dom, h, 2).tuples.empty());  // |H| = 2 is even

    MppFormula bad;
    bad.free = {{"x", 0}};
    bad.atoms = {{"Nope", {"x"}}};
    CHECK_THROWS_AS(eval_mpp(bad, h, 2), ValidationError);
    bad.atoms = {{"Q", {"x"}}};
    CHECK_THROWS_AS(eval_mpp(bad, h, 2), ValidationError);  // arity mismatch
    bad.atoms = {{"Q", {"x", "w"}}};
    CHECK_THROWS_AS(eval_mpp(bad, h, 2), ValidationError);  // unbound w
    bad.free = {{"x", 0}, {"x", 0}};
    bad.atoms = {{"Q", {"x", "x"}}};
    CHECK_THROWS_AS(eval_mpp(bad, h, 2), ValidationError);  // duplicate name
}

TEST_CASE("joint quantification differs from nested quantifiers") {
    // per z=0 the fibers over x have 1 and 2 extensions in y
    Structure h = single_sorted({"0", "1"});
    Relation s;
    s.symbol.name = "S";
    s.symbol.type = {0, 0, 0};
    s.tuples = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
    s.normalize();
    h.relations.push_back(s);

    MppFormula joint;  // exists^{=3} {x,y}: 3 solutions at z=0, dropped
    joint.free = {{"z", 0}};
    joint.blocks = {{"x", "y"}};
    joint.atoms = {{"S", {"x", "y", "z"}}};
    CHECK(eval_mpp(joint, h, 3).tuples.empty());

    MppFormula nested;  // exists^{=3} x exists^{=3} y: 2 odd fibers, kept
    nested.free = {{"z", 0}};
    nested.blocks = {{"x"}, {"y"}};
    nested.atoms = {{"S", {"x", "y", "z"}}};
    CHECK(eval_mpp(nested, h, 3).tuples == std::vector<Tuple>{{0}});
    CHECK_FALSE(is_strict(nested, h, 3));  // a kept fiber has residue 2
}

TEST_CASE("bounded closure search") {
    Structure hc = add_constants(neq2());

    // at free arity 1 the unary definables are the two singletons and the
    // full domain
    ClosureBudget unary = small_budget();
    unary.max_free_arity = 1;
    ClosureResult res = closure_search(hc, 2, unary);
    std::set<std::vector<Tuple>> unaries;
    for (const DefinedRelation& d : res.relations)
        if (d.relation.symbol.arity() == 1 && !d.relation.tuples.empty())
            unaries.insert(d.relation.tuples);
    CHECK(unaries.count({{0}}) == 1);
    CHECK(unaries.count({{1}}) == 1);
    CHECK(unaries.count({{0}, {1}}) == 1);

    // every stored definition re-evaluates to its relation bit-exactly
    res = closure_search(hc, 2, small_budget(300));
    CHECK_FALSE(res.budget_exhausted);  // 2-element arity-2 space is tiny
    std::size_t hash = structure_content_hash(hc);
    for (const DefinedRelation& d : res.relations) {
        CHECK(d.structure_hash == hash);
        Relation back = eval_mpp(d.formula, hc, 2);
        CHECK(back.symbol.type == d.relation.symbol.type);
        CHECK(back.tuples == d.relation.tuples);
    }

    // the fixpoint is a set of relations: seed order does not matter
    Structure reversed = hc;
    std::reverse(reversed.relations.begin(), reversed.relations.end());
    ClosureResult res2 = closure_search(reversed, 2, small_budget(300));
    CHECK_FALSE(res2.budget_exhausted);
    CHECK(closure_content(res) == closure_content(res2));
}

TEST_CASE("pinning one column exposes a 2-element subalgebra mod 3") {
    Structure hc = add_constants(matrix3());
    std::string c1 = constant_relation_name(hc, 0, 1);

    // exists^{=3} y (R(x,y) & C1(y)) keeps exactly the first two rows
    MppFormula phi;
    phi.free = {{"x", 0}};
    phi.blocks = {{"y"}};
    phi.atoms = {{"R", {"x", "y"}}, {c1, {"y"}}};
    CHECK(eval_mpp(phi, hc, 3).tuples == std::vector<Tuple>{{0}, {1}});

    // the closure search finds {0,1} as a 3-subalgebra on its own
    bool found = false;
    for (const PSubalgebra& sub : p_subalgebras(hc, 3, small_budget())) {
        if (sub.sort == 0 && sub.elements == std::vector<int>{0, 1})
            found = true;
    }
    CHECK(found);
}

TEST_CASE("p-subalgebras and conservativity") {
    // with constants every singleton is a seed; {0,1} is the domain
    Structure lc = add_constants(le2());
    std::set<std::vector<int>> subs;
    for (const PSubalgebra& sub : p_subalgebras(lc, 2, small_budget()))
        subs.insert(sub.elements);
    CHECK(subs.count({0}) == 1);
    CHECK(subs.count({1}) == 1);
    CHECK(subs.count({0, 1}) == 1);
    CHECK(is_p_conservative(lc, 2, small_budget()).certified);

    // without constants the swap automorphism rules out the singletons
    ConservativityReport rep = is_p_conservative(neq2(), 2, small_budget(300));
    CHECK_FALSE(rep.certified);
    std::set<std::vector<int>> missing;
    for (const auto& [sort, elems] : rep.missing) {
        CHECK(sort == 0);
        missing.insert(elems);
    }
    CHECK(missing.count({0}) == 1);
    CHECK(missing.count({1}) == 1);
}

TEST_CASE("preservation violations carry replayable witnesses") {
    OperationTable f = xor_op();
    Structure hn = neq2(), hq = le2();
    CHECK(op_preserves(f, hn, hn.relations[0]));
    CHECK_FALSE(preservation_violation(f, hn.relations[0], {0, 0}));

    const Relation& q = hq.relations[0];
    auto v = preservation_violation(f, q, {0, 0});
    REQUIRE(v.has_value());
    REQUIRE(v->size() == 3);  // one source tuple per argument
    Tuple image(2);
    for (int c = 0; c < 2; ++c) {
        std::vector<int> args;
        for (const Tuple& t : *v) args.push_back(t[static_cast<size_t>(c)]);
        image[static_cast<size_t>(c)] = f.apply(0, args);
    }
    CHECK_FALSE(q.contains(image));

    // projections preserve everything
    OperationTable pr1 = projection_op({2}, 3, 0);
    CHECK(op_preserves(pr1, le2(), q));

    CHECK_THROWS_AS(preservation_violation(f, q, {0}), ValidationError);
}

TEST_CASE("ternary polymorphism kill list over the affine structure") {
    // every ternary polymorphism of x^y^z=0 is linear, and linear maps
    // preserve every definable subspace: nothing is killed
    Structure h = affine2();
    ClosureBudget b = small_budget();
    b.max_free_arity = 3;
    DaggerResult dag = build_H_dagger(h, 2, b);
    REQUIRE(!dag.kill_list.empty());
    bool minority_seen = false;
    for (const KillEntry& e : dag.kill_list) {
        CHECK_FALSE(e.killer.has_value());
        if (e.f == xor_op()) minority_seen = true;
    }
    CHECK(minority_seen);  // the Mal'tsev operation survives
    CHECK(dag.expansion.relations.size() == h.relations.size());
}

TEST_CASE("Mal'tsev status of the bounded closure") {
    // NEQ2: its candidates preserve the whole (affine) closure
    MaltsevClosureVerdict v = maltsev_for_closure(neq2(), 2, small_budget(300));
    CHECK(v.kind == MaltsevClosureVerdict::Kind::MaltsevUpToBudget);
    REQUIRE(!v.survivors.empty());
    bool has_xor = false;
    for (const OperationTable& m : v.survivors)
        if (m == xor_op()) has_xor = true;
    CHECK(has_xor);

    // LE2 has no Mal'tsev polymorphism at all
    v = maltsev_for_closure(le2(), 2, small_budget());
    CHECK(v.kind == MaltsevClosureVerdict::Kind::NoMaltsevForHItself);
    CHECK(v.kills.empty());
    CHECK(v.survivors.empty());
}

TEST_CASE("certified absence of Mal'tsev polymorphisms in the closure") {
    // three-sorted structure engineered so the mod-2 projection of S onto
    // its first two coordinates drops exactly the even fiber over (1,1),
    // leaving the non-rectangular {(0,0),(0,1),(1,0)}; a Mal'tsev
    // operation applied to its rows is forced to produce (1,1), so the
    // single definable relation kills every candidate at once.  TX and TY
    // pin the two-element components to addition mod 2, and the unary U
    // collapses most of the remaining freedom on the third sort so the
    // candidate set stays small.
    Structure h;
    h.sorts.push_back({"X", {"0", "1"}});
    h.sorts.push_back({"Y", {"0", "1"}});
    h.sorts.push_back({"Z", {"0", "1", "2", "3", "4"}});
    auto affine = [](const std::string& name, int sort) {
        Relation t;
        t.symbol.name = name;
        t.symbol.type = {sort, sort, sort};
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) t.tuples.push_back({x, y, x ^ y});
        t.normalize();
        return t;
    };
    h.relations.push_back(affine("TX", 0));
    h.relations.push_back(affine("TY", 1));
    Relation s;
    s.symbol.name = "S";
    s.symbol.type = {0, 1, 2};
    s.tuples = {{0, 0, 0}, {1, 0, 1}, {0, 1, 2}, {1, 1, 3}, {1, 1, 4}};
    s.normalize();
    h.relations.push_back(s);
    Relation u;
    u.symbol.name = "U";
    u.symbol.type = {2};
    u.tuples = {{0}, {1}, {2}, {3}};
    u.normalize();
    h.relations.push_back(u);
    validate(h);

    REQUIRE(!maltsev_candidates(h).empty());

    MaltsevClosureVerdict v = maltsev_for_closure(h, 2, small_budget());
    CHECK(v.kind == MaltsevClosureVerdict::Kind::NoMaltsevCertified);
    CHECK(v.survivors.empty());
    CHECK_FALSE(v.budget_exhausted);
    REQUIRE(v.kills.size() == 32);

    Relation nonrect;
    nonrect.symbol.type = {0, 1};
    nonrect.tuples = {{0, 0}, {0, 1}, {1, 0}};
    nonrect.normalize();

    for (const KillEntry& e : v.kills) {
        REQUIRE(e.killer.has_value());
        const DefinedRelation& k = *e.killer;
        // every candidate dies on the same non-rectangular relation
        CHECK(k.relation.symbol.type == nonrect.symbol.type);
        CHECK(k.relation.tuples == nonrect.tuples);
        // the stored definition re-evaluates to the killer bit-exactly
        Relation again = eval_mpp(k.formula, h, 2);
        CHECK(again.tuples == k.relation.tuples);
        // the witness replays: the image row escapes the relation
        REQUIRE(e.witness.size() == 3);
        Tuple image(k.relation.symbol.type.size());
        for (size_t c = 0; c < image.size(); ++c) {
            std::vector<int> args;
            for (const Tuple& t : e.witness) args.push_back(t[c]);
            image[c] = e.f.apply(k.relation.symbol.type[c], args);
        }
        CHECK_FALSE(k.relation.contains(image));
    }
}
