#pragma once

// Domain reduction through a p-automorphic polynomial: binarization of a
// structure and an instance (one variable per constraint, coordinate-
// agreement relations), the derived permutation-domain instance whose
// constraints are preserved by the group Mal'tsev operation, a solver
// for it, extraction of consistent permutation collections, and the
// instance transformation that either deletes unreachable tuples or
// shrinks variable domains by cancelling orbits mod p.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modcsp/polyclone.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

// --- binarization ------------------------------------------------------------

// Index of a coordinate-agreement relation: tuples of relation i and j
// agreeing at coordinates s and t (i <= j).
struct QRef {
    int i = 0, j = 0, s = 0, t = 0;
};

// b(H): one sort per relation of H (elements = the relation's tuples in
// canonical order) and one binary relation per QRef.  H is completed
// with a full unary domain relation per sort first.
struct BinarizedPair {
    Structure h;   // completed source structure
    Structure bh;  // the binarized structure
    std::vector<int> sort_source;  // bh sort -> relation of h
    std::vector<QRef> q_refs;      // bh relation -> agreement coordinates
};

BinarizedPair binarize(const Structure& h);

// b(P): one variable per constraint of the completed instance (every
// variable of P gets a domain constraint if it lacks one), one
// agreement constraint per pair of constraints sharing a variable.
struct BinarizedInstance {
    Instance p;   // completed source instance
    Instance bp;  // instance over bh
    std::vector<int> var_source;  // bp variable -> constraint of p
};

BinarizedInstance binarize_instance(const Instance& p, const BinarizedPair& b);

// Transfers a solution of the completed instance to b(P): the tuple each
// constraint sees, as an element index of the constraint's sort.
std::vector<int> transfer_solution(const BinarizedPair& b,
                                   const BinarizedInstance& bi,
                                   const std::vector<int>& phi);

// --- permutation-domain instance ---------------------------------------------

// s(P): one variable per constraint of the completed instance with
// domain Sym(R_C) (permutations of the constraint relation's tuples,
// lexicographic, identity first), and one binary constraint per
// agreement constraint of b(P) keeping the permutation pairs that
// preserve it.
struct PermDomainInstance {
    BinarizedPair b;
    BinarizedInstance bi;
    // per variable: all permutations of its relation's tuple indices
    std::vector<std::vector<std::vector<int>>> domains;
    struct SConstraint {
        int u = 0, v = 0;  // variable indices
        QRef q;
        std::vector<std::pair<int, int>> pairs;  // allowed (domain indices)
    };
    std::vector<SConstraint> constraints;
};

// Throws when some constraint relation has more than `cap` tuples (the
// symmetric-group domains are enumerated explicitly).
PermDomainInstance build_sP(const Instance& p, const Structure& h, int cap = 8);

// The group Mal'tsev operation on permutations: x, then y undone, then z.
std::vector<int> perm_maltsev(const std::vector<int>& x,
                              const std::vector<int>& y,
                              const std::vector<int>& z);

// Decides s(P) with the given pins (variable -> permutation) and returns
// one solution as domain indices per variable; identity is preferred
// where unconstrained.  Arc consistency + backtracking; exact.
std::optional<std::vector<int>> group_maltsev_solve(
    const PermDomainInstance& sp,
    const std::vector<std::pair<int, std::vector<int>>>& pins = {});

// --- consistent collections ---------------------------------------------------

// One permutation of the relation's tuples per constraint of the
// completed instance, agreeing on every shared-variable projection.
struct ConsistentCollection {
    Instance p;  // completed instance the collection is indexed by
    std::vector<std::vector<int>> perms;
};

// The defining property: whenever two constraint tuples agree on the
// shared variables, so do their images.
bool is_consistent_collection(const ConsistentCollection& c,
                              const Structure& h);

// Extracts a collection with the permutation of constraint `c0` pinned
// to `phi0`; nullopt when s(P) has no such solution.
std::optional<ConsistentCollection> consistent_permutations(
    const Instance& p, const Structure& h, int c0, const std::vector<int>& phi0,
    int cap = 8);

// --- domain splitting ----------------------------------------------------------

// H with sort i split along f_i(a,.): sort i becomes H_i - {a} (same
// index) and H_i - B is appended, where B is the union of the
// nontrivial orbits; every relation mentioning sort i is replaced by
// its restriction to each side.
struct SplitStructure {
    Structure hf;
    int split_sort = 0;   // i in the source structure
    int prime_sort = 0;   // index of H_i - {a} in hf
    int dprime_sort = 0;  // index of H_i - B in hf
    std::vector<int> orbit_union;             // B, ascending
    std::vector<int> prime_map, dprime_map;   // old element -> new, -1 if dropped
};

SplitStructure build_Hf(const Structure& h, const OperationTable& f, long long p,
                        int sort, int elem);

// --- the reduction -------------------------------------------------------------

struct ReduceLedger {
    struct Deletion {
        int constraint = 0;  // index into the completed instance
        Tuple tuple;
        bool brute_forced = false;  // decided by enumeration, not via s(P)
    };
    struct OrbitDrop {
        int variable = 0;
        int constraint = 0;  // the constraint whose pin was solvable
        Tuple pin_tuple;
        std::vector<std::vector<int>> orbits;  // cancelled p-classes of values
        bool brute_forced = false;
    };
    std::vector<Deletion> deletions;
    std::vector<OrbitDrop> orbit_drops;
    int rounds = 0;
};

struct ReduceResult {
    Structure structure;  // over the split sorts, one relation per constraint
    Instance instance;
    int witness_sort = 0;
    int witness_elem = 0;
    std::vector<int> orbit_union;
    ReduceLedger ledger;
};

// Eliminates the witness element (or its nontrivial orbits) from every
// variable of the witness sort, preserving the solution count mod p:
// per constraint and tuple through the witness element, pin the induced
// permutation in s(P); solvable pins cancel the orbit values, unsolvable
// pins delete the tuple.  Iterated to fixpoint.  When a shrunken
// relation is no longer closed under f the affected steps are decided by
// direct enumeration instead (recorded in the ledger).
ReduceResult reduce_instance(const Instance& p, const Structure& h,
                             const OperationTable& f, long long prime,
                             int cap = 8);

}  // namespace modcsp
