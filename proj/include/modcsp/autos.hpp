#pragma once

// Automorphism groups, p-automorphisms, the p-rigid reduction, stabilizer
// queries, and M-automorphisms of cubes (automorphisms of H^3 fixing all
// triples (a,b,b) and (b,b,a), represented as triples of ternary
// polymorphisms with a bijective bundling).

#include <optional>
#include <utility>
#include <vector>

#include "modcsp/polyclone.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

struct Automorphism {
    MultiSortedMap map;
    int order = 1;  // least n >= 1 with pi^n = id
};

// Full automorphism group in lexicographic order of the mapping tables.
// Guard limits the per-sort factorial search-space product.
std::vector<Automorphism> automorphisms(const Structure& h,
                                        long long guard = 10000000);

// Automorphisms of order exactly p.
std::vector<Automorphism> p_automorphisms(const Structure& h, long long p,
                                          long long guard = 10000000);

struct RigidReduction {
    Structure result;  // the p-rigid structure
    // automorphisms applied, each relative to the structure at its step
    std::vector<Automorphism> chain;
};

// Repeatedly restrict to the fixed points of the canonically-first
// p-automorphism until none remains.
RigidReduction p_rigid_reduce(const Structure& h, long long p,
                              long long guard = 10000000);

struct MAutomorphism {
    OperationTable g1, g2, g3;
    int order = 1;  // order of the bundled permutation of the cube
};

// All M-automorphisms of H^3; if p is given, keep only those of order p
// or the identity.
std::vector<MAutomorphism> m_automorphisms(
    const Structure& h, std::optional<long long> p = std::nullopt,
    long long limit = 200000);

// Bundled action of an M-automorphism on an encoded triple of sort i.
int m_auto_apply(const MAutomorphism& m, int sort, int code);

// Stab(a_1..a_s, A) over a structure (typically a power): automorphisms
// fixing every listed element and mapping A into itself when given.
std::vector<Automorphism> stab(
    const Structure& hn, const std::vector<std::pair<int, int>>& fixed,
    const std::optional<std::vector<std::pair<int, int>>>& stable =
        std::nullopt,
    long long guard = 10000000);

// A is automorphism-stable iff some a in A has Stab(a, A) = {pi :
// pi(a) in A} a subgroup; returns the first such witness.
std::optional<std::pair<int, int>> is_automorphism_stable(
    const std::vector<std::pair<int, int>>& A, const Structure& hn,
    long long guard = 10000000);

}  // namespace modcsp
