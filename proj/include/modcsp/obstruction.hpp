#pragma once

// Rectangularity-obstruction search over the ternary indicator relation:
// coordinate elimination with the mod-p quantifier, the bounded gadget
// search backing the fixed-point elimination rule, arity reduction over
// 2-element domains, the 3-element dispatch (which may surface an
// order-2 automorphic polynomial instead of a certificate), and an
// independent certificate replayer.
//
// A certificate is a chain of relation-algebra steps starting from the
// materialized indicator relation of the polymorphism-killing expansion;
// every step preserves the witness pattern w1,w2,w3 in / wout out, and
// replaying the chain from scratch reproduces the final relation.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modcsp/autos.hpp"
#include "modcsp/mpp.hpp"
#include "modcsp/polyclone.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

// --- gadget search ---------------------------------------------------------

struct GadgetBudget {
    int max_aux = 2;                   // auxiliary (quantified) vertices
    int max_atoms = 3;                 // constraint atoms
    long long max_candidates = 50000;  // enumeration cap
};

// A pointed constraint gadget: an instance over the expansion's signature
// whose variables are laid out as [pinned..., x, aux...].  Pinned
// variables are identified with indicator coordinates (their values come
// from the current witness tuples); x is identified with the coordinate
// being eliminated.  counts[i] is the verified pointed count mod p of
// homomorphisms with pins from witness i and x ranging over targets[i].
struct GadgetWitness {
    Instance gadget;
    std::vector<int> pinned_coords;  // indicator variables, one per pinned var
    int x_var = 0;                   // index of x in gadget.variables
    std::vector<std::vector<int>> targets;  // B1, B2, B3
    std::vector<long long> counts;          // all nonzero mod p
};

// Enumerates candidate gadgets in canonical order (by atom count, then
// auxiliary-vertex count, then lexicographic atom lists) and returns the
// first whose three pointed counts are nonzero mod p and which passes
// `accept` (when given).  pins[i] holds the pinned values under witness
// i; all three share the pinned variable layout.  Returns nullopt when
// the budget is exhausted.
std::optional<GadgetWitness> find_gadget(
    const Structure& h, long long p,
    const std::vector<std::vector<int>>& pins, const std::vector<int>& pin_sorts,
    const std::vector<std::vector<int>>& targets, int target_sort,
    const GadgetBudget& budget,
    const std::function<bool(const GadgetWitness&)>& accept = {});

// --- elimination state and certificates -------------------------------------

// One replayable derivation step.  Replay order: apply the unary
// restrictions, then (if a gadget is present) keep exactly the tuples of
// the projection whose joint extension count over {target} weighted by
// the gadget's homomorphism counts is nonzero mod p, otherwise apply the
// mod-p projection that removes `eliminated`.  The post-step witness
// tuples are recorded so the 3-in/1-out pattern can be re-checked.
struct ObstructionStep {
    std::string rule;
    std::vector<std::pair<int, std::vector<int>>> restrictions;
    std::optional<GadgetWitness> gadget;
    int target = -1;              // coordinate the step eliminates (with gadget)
    std::vector<int> eliminated;  // indicator variables removed
    bool role_swap = false;

    std::vector<int> witness_coords;  // post-step
    Tuple w1, w2, w3, wout;
};

struct ObstructionCertificate {
    long long p = 2;
    // parameters needed to rebuild the expansion and indicator relation
    ClosureBudget closure_budget;
    long long poly_limit = 200000;

    std::vector<ObstructionStep> chain;
    std::vector<int> coords;  // final coordinate set, ascending
    Relation relation;        // final obstruction relation
    std::vector<int> witness_coords;
    Tuple w1, w2, w3, wout;
};

struct StuckReport {
    std::string rule;    // rule that failed, or "exhausted"
    std::string detail;  // human-readable description
    std::vector<int> coords;
    Relation relation;
    std::vector<std::vector<int>> b_sets;        // B1, B2, B3 at failure
    std::vector<std::string> rules_tried;
};

// Working state of the elimination; chain records every applied step.
struct EliminationState {
    Structure dagger;  // expansion the indicator relation was built over
    long long p = 2;
    std::vector<int> coords;  // indicator variables present, ascending
    Relation rel;
    std::vector<int> witness_coords;
    Tuple w1, w2, w3, wout;
    std::vector<ObstructionStep> chain;
};

struct ObstructionBudget {
    ClosureBudget closure;
    long long poly_limit = 200000;
    GadgetBudget gadget;
};

// Cached context shared by elimination steps.
struct EliminationTools {
    long long p = 2;
    GadgetBudget gadget;
    // arbitrary unary restrictions are definable (conservative structures)
    bool conservative = false;
    std::vector<MAutomorphism> mauts;  // of the expansion's cube
    // discovered 2-element p-subalgebras, per sort
    std::vector<std::vector<std::vector<int>>> two_subalgebras;
};

// Builds the expansion via its ternary-polymorphism kill list,
// materializes the indicator relation, and initializes the witness
// pattern (a,c),(b,c),(b,d) in / (a,d) out over the I- and J-coordinates.
EliminationState initial_state(const Structure& h, long long p,
                               const ObstructionBudget& budget);

EliminationTools make_tools(const Structure& h, const EliminationState& st,
                            const ObstructionBudget& budget);

// Eliminates coordinate z (not among the witness coordinates) by the
// first applicable rule: common extension element (pin + quantify);
// separated extension sets (restrict to representatives + quantify);
// separating 2-element p-subalgebra; fixed point of every M-automorphism
// + gadget.  Returns nullopt on success, otherwise a stuck-report and
// leaves the state unchanged.
std::optional<StuckReport> eliminate_coordinate(EliminationState& st, int z,
                                                const EliminationTools& tools);

// Eliminates one witness coordinate (arity reduction): common element,
// swapped obstruction (B1 != B2, role swap tracked), plain quantification
// when all extension sets are singletons or p > 2, separating
// 2-element p-subalgebra, single-pointed gadget.  v must be a witness
// coordinate and the side it belongs to must keep at least one
// coordinate of each role.
std::optional<StuckReport> eliminate_witness_coordinate(
    EliminationState& st, int v, const EliminationTools& tools);

// The 3-in/1-out membership pattern of the current witnesses.
bool pattern_holds(const EliminationState& st);

ObstructionCertificate state_to_certificate(const EliminationState& st,
                                            const ObstructionBudget& budget);

// --- pipelines ---------------------------------------------------------------

// Conservative pipeline: requires a certified p-conservativity report and
// a no-Mal'tsev verdict for the closure (throws ValidationError
// otherwise).  Eliminates the non-witness coordinates in canonical
// order, restricts every witness coordinate to its 2-element witness
// range, then reduces the arity to 2.  nullopt = stuck within budget
// (details in *stuck when given).
std::optional<ObstructionCertificate> conservative_obstruction(
    const Structure& h, long long p, const ObstructionBudget& budget = {},
    StuckReport* stuck = nullptr);

// Arity reduction over (at most) 2-element witness ranges: repeats the
// witness-coordinate elimination rules until exactly two coordinates
// remain; the terminal binary relation is non-rectangular.
ObstructionCertificate two_element_reduce(const ObstructionCertificate& cert,
                                          const Structure& h, long long p);

struct ObstructionOutcome {
    std::optional<ObstructionCertificate> certificate;
    std::optional<PAutomorphicPoly> poly;  // order-2 automorphic polynomial
    std::optional<StuckReport> stuck;
};

// Dispatch for single-sorted 3-element structures with a no-Mal'tsev
// closure verdict (throws ValidationError when the expansion keeps a
// polymorphism with the forbidden pattern).  The caller is expected to
// have reduced by any p-automorphic polynomial first.  Conservative
// structures delegate to the conservative pipeline; otherwise
// coordinates are eliminated with the general rules, and when a swapping
// cube automorphism blocks the fixed-point rule at p = 2 the tabulated
// terms turn it into an order-2 automorphic polynomial, which is
// returned instead of a certificate.
ObstructionOutcome three_element_obstruction(const Structure& h, long long p,
                                             const ObstructionBudget& budget = {});

// Independent replay: rebuilds the expansion and indicator relation from
// h and p alone, re-applies every step with plain relation algebra,
// re-checks the witness pattern after each step, and compares the final
// relation bit-exactly; terminal binary certificates must additionally
// be non-rectangular.  On failure *why names the first divergence.
bool verify_certificate(const ObstructionCertificate& cert, const Structure& h,
                        long long p, std::string* why = nullptr);

}  // namespace modcsp
