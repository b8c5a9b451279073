#pragma once

// Ground-truth counting oracles.  Everything here is brute force by
// design: these routines are the reference the rest of the artifact is
// tested against.  Counts are exact 64-bit integers, reduced mod p only
// at the boundary; all enumeration orders are canonical (declaration
// order for variables, element order for values) so outputs are
// deterministic.

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "modcsp/structures.hpp"

namespace modcsp {

using Pins = std::map<int, int>;  // variable index -> element index

bool is_prime(long long p);

// Visits every solution extending `pins` in lexicographic order of the
// full assignment vector.  `allowed` optionally restricts each variable
// to a subset of its domain (empty = unrestricted).  Return false from
// the callback to stop early.
void for_each_hom(const Instance& p, const Structure& h, const Pins& pins,
                  const std::vector<std::vector<int>>& allowed,
                  const std::function<bool(const std::vector<int>&)>& visit);

std::vector<std::vector<int>> enumerate_homs(const Instance& p,
                                             const Structure& h,
                                             const Pins& pins = {});

long long count_homs(const Instance& p, const Structure& h,
                     const Pins& pins = {});
long long count_homs_mod(const Instance& p, const Structure& h, long long prime,
                         const Pins& pins = {});

// Pointed homomorphism counts hom((G, x1..xm), (H, A1..Am)); each target
// is a set of allowed elements (singleton = plain pinning).  The xs are
// (sort, element) pairs naming elements of G.
long long count_pointed(const Structure& g,
                        const std::vector<std::pair<int, int>>& xs,
                        const Structure& h,
                        const std::vector<std::vector<int>>& targets);

// --- Partitions of a multi-sorted base set --------------------------------

// One equivalence relation per sort, stored as a class id per element in
// restricted-growth form (first occurrence of each class gets the next id).
struct MultiPartition {
    std::vector<std::vector<int>> classes;  // classes[sort][element] = class id
    int total_classes() const;
};

// theta <= gamma iff theta refines gamma sort-wise (every theta-class is
// contained in a gamma-class).
bool refines(const MultiPartition& theta, const MultiPartition& gamma);

struct PartitionLattice {
    std::vector<int> base_sizes;            // |H_i| per sort
    std::vector<MultiPartition> partitions; // all of them, canonical order
};

// Guard: total base size must be <= cap.
PartitionLattice partition_lattice(const std::vector<int>& base_sizes,
                                   int cap = 8);

struct WeightTable {
    // Indexed like lattice.partitions.  top_down holds the recursion of
    // the source text (w(top)=1, w(theta) = -sum over strictly coarser);
    // bottom_up is its dual (w(discrete)=1), which is the Moebius vector
    // actually needed to invert hom counts into injective counts.
    std::vector<long long> top_down;
    std::vector<long long> bottom_up;
};

WeightTable mobius_weights(const PartitionLattice& lattice);

// Quotient of H by a partition of its base set; class elements are named
// by joining member names with '+'.  class_of[i][e] gives the quotient
// element of e.
struct Quotient {
    Structure structure;
    std::vector<std::vector<int>> class_of;
};

Quotient quotient_structure(const Structure& h, const MultiPartition& theta);

// Injective homomorphism counts from G to H (per-sort injectivity), with
// optional pins given as (sort, element of G) -> element of H.
using ElementPins = std::vector<std::pair<std::pair<int, int>, int>>;

long long count_injective(const Structure& g, const Structure& h,
                          const ElementPins& pins = {});
long long count_injective_mobius(const Structure& g, const Structure& h,
                                 const ElementPins& pins = {},
                                 int partition_cap = 8);

// --- EVAL_p partition functions -------------------------------------------

struct Digraph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // multiset; parallel edges multiply
};

struct FpMatrix {
    long long p = 2;
    std::vector<std::vector<long long>> rows;  // k x k, entries in [0, p)
    int dim() const { return static_cast<int>(rows.size()); }
};

long long eval_partition_function(const FpMatrix& m, const Digraph& g,
                                  long long prime);

}  // namespace modcsp
