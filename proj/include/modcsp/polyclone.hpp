#pragma once

// Polymorphism machinery: indicator instances whose solutions are exactly
// the arity-r polymorphisms, operation tables, term evaluation, Mal'tsev
// and rectangularity tests, automorphic-polynomial detection, and the
// minority construction over 2-element sorts.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modcsp/homcount.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

// Finite multi-sorted operation of arity r; tables[i] maps the encoded
// argument tuple (row-major, first argument most significant) to a value.
struct OperationTable {
    int arity = 0;
    std::vector<int> sizes;                // |H_i| per sort
    std::vector<std::vector<int>> tables;  // per sort, size sizes[i]^arity

    int apply(int sort, const std::vector<int>& args) const;
    bool operator==(const OperationTable&) const = default;
};

int encode_args(const std::vector<int>& args, int n);
std::vector<int> decode_args(int code, int n, int arity);

OperationTable projection_op(const std::vector<int>& sizes, int arity,
                             int which);

// Variable layout of the arity-r indicator instance: one variable per
// r-tuple over each domain, sort-major, tuples in encoded order.
struct IndicatorLayout {
    int arity = 0;
    std::vector<int> sizes;
    std::vector<int> offsets;  // per sort

    int var(int sort, int code) const { return offsets[sort] + code; }
    int total() const;
};

IndicatorLayout indicator_layout(const Structure& h, int arity);

// One constraint per r-tuple of tuples of each relation; solutions are
// exactly the arity-r polymorphisms.
Instance indicator_instance(const Structure& h, int arity = 3);

OperationTable assignment_to_table(const std::vector<int>& assignment,
                                   const IndicatorLayout& layout);
Pins table_pins(const OperationTable& f, const IndicatorLayout& layout);

// All arity-r polymorphisms in canonical (lexicographic table) order.
// Throws if more than `limit` are found.
std::vector<OperationTable> enumerate_polymorphisms(const Structure& h,
                                                    int arity,
                                                    long long limit = 200000,
                                                    const Pins& pins = {});

bool is_polymorphism(const OperationTable& f, const Structure& h);

// I_H / J_H coordinates of the ternary indicator, with the four tuples
// a,b (over I) and c,d (over J).  I is ordered by sort then (a,b)
// lexicographic for the triple (a,b,b); J by sort then (b,a) for (b,b,a).
struct IndicatorCoordinates {
    std::vector<std::pair<int, Tuple>> I, J;  // (sort, triple)
    Tuple a, b;                               // length |I|
    Tuple c, d;                               // length |J|
    std::vector<int> I_vars, J_vars, E_vars;  // indicator variable indices
};

IndicatorCoordinates indicator_coordinates(const Structure& h);

std::optional<OperationTable> has_maltsev(const Structure& h);
std::vector<OperationTable> maltsev_candidates(const Structure& h,
                                               long long limit = 200000);
bool is_maltsev(const OperationTable& m);

// First rectangularity violation over all proper nonempty coordinate
// splits: (a,c),(a,d),(b,c) in R but (b,d) not in R.  nullopt = rectangular.
struct RectViolation {
    std::vector<int> split;  // coordinates of the a/b side
    Tuple a, b, c, d;
};

std::optional<RectViolation> is_rectangular(const Relation& r);

OperationTable compose(const OperationTable& g,
                       const std::vector<OperationTable>& fs);

struct Term {
    std::string head;        // operation symbol or variable name
    std::vector<Term> args;  // empty for variables
};

Term parse_term(const std::string& text);
std::string term_to_string(const Term& t);

OperationTable eval_term(const Term& t,
                         const std::map<std::string, OperationTable>& env,
                         const std::vector<std::string>& vars,
                         const std::vector<int>& sizes);

// Order of a mapping table as a permutation; -1 if not a bijection.
int permutation_order(const std::vector<int>& perm);

bool is_automorphic_polynomial(const OperationTable& f);
bool is_p_automorphic(const OperationTable& f, long long p);

struct PAutomorphicPoly {
    OperationTable f;
    int witness_sort = 0;
    int witness_elem = 0;  // f(witness_elem, .) has order p on that sort
};

std::optional<PAutomorphicPoly> find_p_automorphic_polynomial(
    const Structure& h, long long p, long long limit = 200000);

// h(x,y,z) = g(m(x,y,z), f(x,y,z)) with f,g built from m as in the
// 2-element minority construction; acts as x XOR y XOR z on every sort.
struct MinorityResult {
    OperationTable minority;
    std::vector<int> types;  // per-sort type 0-3 of m
};

MinorityResult minority_from_maltsev(const OperationTable& m);

// Given an automorphism (g1,g2) of H^2 (H 3-element, single sort) that
// swaps (c,a) and (c,b) where B={a,b} is closed under g1,g2, produce a
// 2-automorphic polynomial of H via the tabulated terms.
OperationTable two_auto_poly_from_square_automorphism(const Structure& h,
                                                      const OperationTable& g1,
                                                      const OperationTable& g2,
                                                      int a, int b);

}  // namespace modcsp
