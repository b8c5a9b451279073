#pragma once

// Top-level classifiers: complexity verdicts for modular homomorphism
// counting over structures with 2-element sorts, p-conservative
// structures, and single-sorted 3-element structures.
//
// Verdicts are honest about bounded searches: PolyTime evidence obtained
// through a bounded closure search is flagged budget-qualified,
// SharpPHard verdicts always carry an independently replayable
// certificate, OpenPerPaper marks the acknowledged gap (a surviving
// Mal'tsev operation at p > 2), and UnknownWithinBudget marks our own
// search limits.  Identical inputs and budgets give identical verdicts.

#include <optional>
#include <string>
#include <vector>

#include "modcsp/autos.hpp"
#include "modcsp/obstruction.hpp"
#include "modcsp/polyclone.hpp"
#include "modcsp/reduce.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

struct ClassifyBudget {
    ObstructionBudget obstruction;    // closure / polymorphism / gadget caps
    long long auto_guard = 10000000;  // automorphism search guard
};

// What normalization did to the input: the p-automorphisms factored out
// (each relative to the structure at its step), the constant relations
// appended, and whether some domain became empty along the way.
struct PreprocessTrail {
    std::vector<Automorphism> rigid_chain;
    std::vector<std::string> constants_added;
    bool emptied = false;
};

struct PreprocessResult {
    Structure structure;
    PreprocessTrail trail;
};

// p-rigid reduction followed by adding all constant relations.
// Homomorphism counts are preserved modulo p: orbits of a nonidentity
// order-p automorphism cancel, and constants only extend the signature.
PreprocessResult preprocess(const Structure& h, long long p,
                            long long guard = 10000000);

struct Verdict {
    enum class Kind { PolyTime, SharpPHard, OpenPerPaper, UnknownWithinBudget };

    Kind kind = Kind::UnknownWithinBudget;
    std::string reason;  // one-line justification
    std::string note;    // informational context, never load-bearing
    // PolyTime evidence rests on bounded searches (closure survival
    // and/or a bounded polynomial search) rather than a complete proof
    bool budget_qualified = false;

    // evidence attachments
    std::optional<ObstructionCertificate> certificate;  // SharpPHard
    std::optional<Structure> certified_structure;  // what the certificate
                                                   // replays against
    std::optional<OperationTable> maltsev;   // surviving Mal'tsev operation
    std::optional<MinorityResult> minority;  // derived uniform minority
    std::optional<PAutomorphicPoly> poly;    // reduction-route polynomial
    std::optional<SplitStructure> split;     // split structure of that route
    std::optional<StuckReport> stuck;        // UnknownWithinBudget details

    PreprocessTrail trail;
    ClassifyBudget budget;
};

std::string to_string(Verdict::Kind k);

// Structures all of whose sorts have at most 2 elements (throws
// otherwise).  Mal'tsev survivor -> PolyTime with a derived operation
// acting as a minority on every domain; certified absence -> hardness
// certificate via the obstruction pipeline.
Verdict classify_2element(const Structure& h, long long p,
                          const ClassifyBudget& budget = {});

// p-conservative structures; when conservativity cannot be certified
// within budget the verdict is UnknownWithinBudget.  No Mal'tsev ->
// SharpPHard; survivor at p = 2 -> PolyTime; survivor at p > 2 ->
// OpenPerPaper.
Verdict classify_conservative(const Structure& h, long long p,
                              const ClassifyBudget& budget = {});

// Single-sorted 3-element structures (throws otherwise).  A p-automorphic
// polynomial routes through the split-structure reduction and delegates
// to the 2-element classifier; otherwise a surviving Mal'tsev operation
// gives PolyTime at p = 2 and OpenPerPaper at p > 2, and certified
// absence runs the 3-element obstruction dispatch (which may itself
// surface a polynomial and loop back to the reduction route).
Verdict classify_3element(const Structure& h, long long p,
                          const ClassifyBudget& budget = {});

}  // namespace modcsp
