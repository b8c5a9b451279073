#pragma once

// p-modular primitive-positive machinery: formula evaluation with the
// mod-p quantifier, extension counts, modular projections, a bounded
// closure search, p-subalgebra discovery, p-conservativity checks, and
// the expansion of a structure by relations its ternary polymorphisms
// fail to preserve.
//
// Everywhere the (infinite) definable closure is approximated, the
// approximation status is explicit: budget exhaustion is reported, never
// silently converted into a definite answer.

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modcsp/polyclone.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

// Exact extension count of a prefix tuple and its residue mod p.
struct ExtCount {
    long long count = 0;
    long long residue = 0;
};

// coords lists the coordinates of `r` matched against `prefix` (same
// length, in order); extensions range over the remaining coordinates.
ExtCount ext_counts(const Relation& r, const Tuple& prefix,
                    const std::vector<int>& coords, long long p);

// Modular projection: keep exactly the projections onto I whose
// extension count is nonzero mod p.  I must be a subsequence of [0,n).
Relation pr_p(const Relation& r, const std::vector<int>& I, long long p);

// One conjunct of a formula matrix: a relation of the structure applied
// to a variable scope, or (when relation is empty) the equality of the
// two scope variables.
struct MppAtom {
    std::string relation;            // relation name; "" = equality
    std::vector<std::string> scope;  // variable names

    bool is_equality() const { return relation.empty(); }
};

// Formula with mod-p quantifier blocks, outermost block first.  The
// matrix is a conjunction of atoms; constants enter as the constant
// relations of the structure.
struct MppFormula {
    std::vector<std::pair<std::string, int>> free;  // (name, sort)
    std::vector<std::vector<std::string>> blocks;
    std::vector<MppAtom> atoms;
    // optional sorts for quantified variables whose sort cannot be
    // inferred from the atoms (e.g. a variable occurring only in x=x)
    std::vector<std::pair<std::string, int>> sort_hints;
};

// Evaluate per the mod-p semantics: join the atoms, then eliminate
// blocks innermost-out, each block replacing the current relation by its
// modular projection onto the remaining variables.  The result's type is
// the free-variable sorts in order.
Relation eval_mpp(const MppFormula& phi, const Structure& h, long long p);

// A definition is strict when every surviving tuple has extension count
// congruent to exactly 1 at every block.
bool is_strict(const MppFormula& phi, const Structure& h, long long p);

// Content hash of a structure (sorts, element names, relation tuples);
// identifies the structure a stored definition was evaluated against.
std::size_t structure_content_hash(const Structure& h);

struct DefinedRelation {
    Relation relation;
    MppFormula formula;
    std::size_t structure_hash = 0;
};

struct ClosureBudget {
    int max_atoms = 6;
    int max_free_arity = 4;
    int max_blocks = 3;
    long long max_relation_size = 4096;
    // cap on the number of distinct relations kept; the search stops and
    // reports exhaustion when it is reached
    int max_relations = 150;
};

struct ClosureResult {
    std::vector<DefinedRelation> relations;  // discovery order
    bool budget_exhausted = false;
};

// Deterministic bounded saturation: seed with the structure's relations,
// per-sort equalities and full domains; repeatedly conjoin pairs (with
// variable gluing), identify coordinates, and quantify blocks; dedupe by
// relation content, keeping the first-found definition.
ClosureResult closure_search(const Structure& h, long long p,
                             const ClosureBudget& budget = {});

struct PSubalgebra {
    int sort = 0;
    std::vector<int> elements;  // sorted
    DefinedRelation definition;
};

// Unary members of the bounded closure, grouped per sort.
std::vector<PSubalgebra> p_subalgebras(const Structure& h, long long p,
                                       const ClosureBudget& budget = {});

struct ConservativityReport {
    bool certified = false;  // every nonempty subset found; never a "no"
    // subsets not found within budget, as (sort, sorted elements)
    std::vector<std::pair<int, std::vector<int>>> missing;
    bool budget_exhausted = false;
};

ConservativityReport is_p_conservative(const Structure& h, long long p,
                                       const ClosureBudget& budget = {});

// f fails to preserve r: witness tuples t1..t_arity in r whose image
// under f componentwise is not in r.  nullopt = preserved.
std::optional<std::vector<Tuple>> preservation_violation(
    const OperationTable& f, const Relation& r,
    const std::vector<int>& sort_of_coord);

bool op_preserves(const OperationTable& f, const Structure& h,
                  const Relation& r);

struct KillEntry {
    OperationTable f;
    std::optional<DefinedRelation> killer;  // nullopt = survived in budget
    std::vector<Tuple> witness;             // violating tuples when killed
};

struct DaggerResult {
    Structure expansion;            // input plus each distinct killer once
    std::vector<KillEntry> kill_list;  // one entry per ternary polymorphism
    bool budget_exhausted = false;
};

// For each ternary polymorphism of h, search the bounded closure for a
// relation it fails to preserve; the expansion adds each killer once.
DaggerResult build_H_dagger(const Structure& h, long long p,
                            const ClosureBudget& budget = {},
                            long long poly_limit = 200000);

struct MaltsevClosureVerdict {
    enum class Kind {
        NoMaltsevForHItself,  // not even h has a Mal'tsev polymorphism
        NoMaltsevCertified,   // every candidate killed: complete certificate
        MaltsevUpToBudget     // some candidate survived the bounded closure
    };
    Kind kind = Kind::NoMaltsevForHItself;
    std::vector<KillEntry> kills;            // candidates with their killers
    std::vector<OperationTable> survivors;   // for MaltsevUpToBudget
    ClosureBudget budget;
    bool budget_exhausted = false;
};

// Whether the p-definable closure of h can have a Mal'tsev polymorphism:
// such a polymorphism must come from the (finite) Mal'tsev candidates of
// h itself, so killing all of them with definable relations is a
// complete certificate of absence.
MaltsevClosureVerdict maltsev_for_closure(const Structure& h, long long p,
                                          const ClosureBudget& budget = {});

}  // namespace modcsp
