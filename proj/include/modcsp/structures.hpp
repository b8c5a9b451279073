#pragma once

// Core data model: finite multi-sorted relational structures and CSP
// instances.  Elements are stored as indices into the owning sort's
// element list; names appear only at the I/O boundary.  All types are
// immutable-by-convention after construction: every operation returns a
// fresh value.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace modcsp {

using Tuple = std::vector<int>;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Sort {
    std::string name;
    std::vector<std::string> elements;  // canonical order fixed at load

    int size() const { return static_cast<int>(elements.size()); }
    int element_index(const std::string& e) const;  // -1 if absent
};

struct RelationSymbol {
    std::string name;
    std::vector<int> type;  // sort indices; length = arity

    int arity() const { return static_cast<int>(type.size()); }
};

struct Relation {
    RelationSymbol symbol;
    std::vector<Tuple> tuples;  // sorted, deduplicated

    void normalize();
    bool contains(const Tuple& t) const;
};

struct Structure {
    std::vector<Sort> sorts;
    std::vector<Relation> relations;
    bool constants_flag = false;

    int sort_index(const std::string& name) const;      // -1 if absent
    int relation_index(const std::string& name) const;  // -1 if absent
    const Relation& relation(const std::string& name) const;
};

struct Variable {
    std::string name;
    int sort;
};

struct Constraint {
    int relation;            // index into the structure's relation list
    std::vector<int> scope;  // variable indices
};

struct Instance {
    std::vector<Variable> variables;
    std::vector<Constraint> constraints;

    int variable_index(const std::string& name) const;
};

// Per-sort mapping tables between similar structures; map[i][e] is the
// image of element e of sort i.
struct MultiSortedMap {
    std::vector<std::vector<int>> map;
};

void validate(const Structure& h);
void validate_instance(const Instance& p, const Structure& h);

bool similar(const Structure& h, const Structure& g);

// Direct products.  Product elements are named "a|b" with '|' reserved.
Structure product(const Structure& h, const Structure& g);
Structure power(const Structure& h, int ell);

Structure induced_substructure(const Structure& h,
                               const std::vector<std::vector<int>>& keep);

Structure expand(const Structure& h, const std::vector<Relation>& extra);
Structure add_constants(const Structure& h);
Structure add_equalities(const Structure& h);

// Name of the constant relation pinning sort i to element a, as produced
// by add_constants.
std::string constant_relation_name(const Structure& h, int sort, int elem);

// Spectrum (n_1, n_2, ...): n_j = number of domains of cardinality j,
// trailing zeroes removed.  spectrum_less compares with later entries
// senior.
std::vector<long long> spectrum(const Structure& h);
bool spectrum_less(const std::vector<long long>& s,
                   const std::vector<long long>& t);

Instance structure_as_instance(const Structure& g, const Structure& h);
Structure instance_as_structure(const Instance& p, const Structure& h);

std::optional<MultiSortedMap> find_isomorphism(const Structure& h,
                                               const Structure& g);

bool is_homomorphism(const MultiSortedMap& phi, const Structure& g,
                     const Structure& h);

}  // namespace modcsp
