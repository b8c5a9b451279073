#pragma once

// Shared hand-built structures used across the test suites.

#include <string>
#include <vector>

#include "modcsp/structures.hpp"

namespace modcsp::fixtures {

inline Structure single_sorted(const std::vector<std::string>& elems) {
    Structure h;
    h.sorts.push_back({"H", elems});
    return h;
}

inline void add_binary(Structure& h, const std::string& name,
                       const std::vector<Tuple>& tuples, int sort = 0) {
    Relation r;
    r.symbol.name = name;
    r.symbol.type = {sort, sort};
    r.tuples = tuples;
    r.normalize();
    h.relations.push_back(std::move(r));
}

// ({0,1}; R = {(0,1),(1,0)})
inline Structure neq2() {
    Structure h = single_sorted({"0", "1"});
    add_binary(h, "R", {{0, 1}, {1, 0}});
    return h;
}

// ({0,1}; Q = {(0,0),(0,1),(1,0)})
inline Structure le2() {
    Structure h = single_sorted({"0", "1"});
    add_binary(h, "Q", {{0, 0}, {0, 1}, {1, 0}});
    return h;
}

// ({0,1}; T = {(x,y,z) : x^y^z = 0}) - affine, has the minority polymorphism
inline Structure affine2() {
    Structure h = single_sorted({"0", "1"});
    Relation r;
    r.symbol.name = "T";
    r.symbol.type = {0, 0, 0};
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) r.tuples.push_back({x, y, x ^ y});
    r.normalize();
    h.relations.push_back(std::move(r));
    return h;
}

// Instance: a path/cycle of binary constraints over relation 0.
inline Instance edge_path(const Structure& h, int nvars, bool cycle = false,
                          int relation = 0) {
    Instance p;
    for (int i = 0; i < nvars; ++i)
        p.variables.push_back({"v" + std::to_string(i),
                               h.relations[static_cast<size_t>(relation)]
                                   .symbol.type[0]});
    for (int i = 0; i + 1 < nvars; ++i)
        p.constraints.push_back({relation, {i, i + 1}});
    if (cycle && nvars > 1) p.constraints.push_back({relation, {nvars - 1, 0}});
    return p;
}

}  // namespace modcsp::fixtures
