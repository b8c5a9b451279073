#include "modcsp/structures.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace modcsp {

int Sort::element_index(const std::string& e) const {
    for (size_t i = 0; i < elements.size(); ++i)
        if (elements[i] == e) return static_cast<int>(i);
    return -1;
}

void Relation::normalize() {
    std::sort(tuples.begin(), tuples.end());
    tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
}

bool Relation::contains(const Tuple& t) const {
    return std::binary_search(tuples.begin(), tuples.end(), t);
}

int Structure::sort_index(const std::string& name) const {
    for (size_t i = 0; i < sorts.size(); ++i)
        if (sorts[i].name == name) return static_cast<int>(i);
    return -1;
}

int Structure::relation_index(const std::string& name) const {
    for (size_t i = 0; i < relations.size(); ++i)
        if (relations[i].symbol.name == name) return static_cast<int>(i);
    return -1;
}

const Relation& Structure::relation(const std::string& name) const {
    int i = relation_index(name);
    if (i < 0) throw ValidationError("unknown relation: " + name);
    return relations[static_cast<size_t>(i)];
}

int Instance::variable_index(const std::string& name) const {
    for (size_t i = 0; i < variables.size(); ++i)
        if (variables[i].name == name) return static_cast<int>(i);
    return -1;
}

void validate(const Structure& h) {
    std::set<std::string> sort_names;
    for (const Sort& s : h.sorts) {
        if (!sort_names.insert(s.name).second)
            throw ValidationError("duplicate sort name: " + s.name);
        std::set<std::string> elems(s.elements.begin(), s.elements.end());
        if (elems.size() != s.elements.size())
            throw ValidationError("duplicate element in sort " + s.name);
    }
    std::set<std::string> rel_names;
    for (const Relation& r : h.relations) {
        const std::string& rn = r.symbol.name;
        if (!rel_names.insert(rn).second)
            throw ValidationError("duplicate relation name: " + rn);
        if (r.symbol.arity() < 1)
            throw ValidationError("relation " + rn + ": arity must be >= 1");
        for (int s : r.symbol.type)
            if (s < 0 || s >= static_cast<int>(h.sorts.size()))
                throw ValidationError("relation " + rn + ": bad sort in type");
        for (size_t ti = 0; ti < r.tuples.size(); ++ti) {
            const Tuple& t = r.tuples[ti];
            if (static_cast<int>(t.size()) != r.symbol.arity())
                throw ValidationError("relation " + rn + ", tuple " +
                                      std::to_string(ti) + ": wrong length");
            for (size_t c = 0; c < t.size(); ++c) {
                const Sort& s = h.sorts[static_cast<size_t>(r.symbol.type[c])];
                if (t[c] < 0 || t[c] >= s.size())
                    throw ValidationError("relation " + rn + ", tuple " +
                                          std::to_string(ti) +
                                          ": element out of domain");
            }
        }
    }
    if (h.constants_flag) {
        for (size_t i = 0; i < h.sorts.size(); ++i)
            for (int a = 0; a < h.sorts[i].size(); ++a) {
                int ri = h.relation_index(
                    constant_relation_name(h, static_cast<int>(i), a));
                if (ri < 0)
                    throw ValidationError("constants-flag set but constant "
                                          "relation missing for sort " +
                                          h.sorts[i].name);
            }
    }
}

void validate_instance(const Instance& p, const Structure& h) {
    for (const Variable& v : p.variables)
        if (v.sort < 0 || v.sort >= static_cast<int>(h.sorts.size()))
            throw ValidationError("variable " + v.name + ": bad sort");
    for (size_t ci = 0; ci < p.constraints.size(); ++ci) {
        const Constraint& c = p.constraints[ci];
        if (c.relation < 0 || c.relation >= static_cast<int>(h.relations.size()))
            throw ValidationError("constraint " + std::to_string(ci) +
                                  ": unknown relation");
        const RelationSymbol& sym = h.relations[static_cast<size_t>(c.relation)].symbol;
        if (static_cast<int>(c.scope.size()) != sym.arity())
            throw ValidationError("constraint " + std::to_string(ci) +
                                  ": scope length != arity");
        for (size_t j = 0; j < c.scope.size(); ++j) {
            int v = c.scope[j];
            if (v < 0 || v >= static_cast<int>(p.variables.size()))
                throw ValidationError("constraint " + std::to_string(ci) +
                                      ": unknown variable");
            if (p.variables[static_cast<size_t>(v)].sort != sym.type[j])
                throw ValidationError("constraint " + std::to_string(ci) +
                                      ": sort mismatch at position " +
                                      std::to_string(j));
        }
    }
}

bool similar(const Structure& h, const Structure& g) {
    if (h.sorts.size() != g.sorts.size()) return false;
    for (size_t i = 0; i < h.sorts.size(); ++i)
        if (h.sorts[i].name != g.sorts[i].name) return false;
    if (h.relations.size() != g.relations.size()) return false;
    for (size_t j = 0; j < h.relations.size(); ++j) {
        if (h.relations[j].symbol.name != g.relations[j].symbol.name)
            return false;
        if (h.relations[j].symbol.type != g.relations[j].symbol.type)
            return false;
    }
    return true;
}

Structure product(const Structure& h, const Structure& g) {
    if (!similar(h, g)) throw ValidationError("product: dissimilar structures");
    Structure out;
    out.sorts.reserve(h.sorts.size());
    // pair (a, b) of sort i becomes index a*|G_i| + b
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        Sort s;
        s.name = h.sorts[i].name;
        for (const std::string& a : h.sorts[i].elements)
            for (const std::string& b : g.sorts[i].elements)
                s.elements.push_back(a + "|" + b);
        out.sorts.push_back(std::move(s));
    }
    for (size_t j = 0; j < h.relations.size(); ++j) {
        Relation r;
        r.symbol = h.relations[j].symbol;
        for (const Tuple& ta : h.relations[j].tuples)
            for (const Tuple& tb : g.relations[j].tuples) {
                Tuple t(ta.size());
                for (size_t c = 0; c < ta.size(); ++c) {
                    int gi = g.sorts[static_cast<size_t>(r.symbol.type[c])].size();
                    t[c] = ta[c] * gi + tb[c];
                }
                r.tuples.push_back(std::move(t));
            }
        r.normalize();
        out.relations.push_back(std::move(r));
    }
    return out;
}

Structure power(const Structure& h, int ell) {
    if (ell < 1) throw ValidationError("power: exponent must be >= 1");
    Structure out = h;
    for (int i = 1; i < ell; ++i) out = product(out, h);
    return out;
}

Structure induced_substructure(const Structure& h,
                               const std::vector<std::vector<int>>& keep) {
    if (keep.size() != h.sorts.size())
        throw ValidationError("induced_substructure: one subset per sort required");
    Structure out;
    // old index -> new index per sort, -1 if dropped
    std::vector<std::vector<int>> remap(h.sorts.size());
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        remap[i].assign(static_cast<size_t>(h.sorts[i].size()), -1);
        Sort s;
        s.name = h.sorts[i].name;
        std::vector<int> kept = keep[i];
        std::sort(kept.begin(), kept.end());
        kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
        for (int e : kept) {
            if (e < 0 || e >= h.sorts[i].size())
                throw ValidationError("induced_substructure: unknown element");
            remap[i][static_cast<size_t>(e)] = s.size();
            s.elements.push_back(h.sorts[i].elements[static_cast<size_t>(e)]);
        }
        out.sorts.push_back(std::move(s));
    }
    for (const Relation& r : h.relations) {
        Relation nr;
        nr.symbol = r.symbol;
        for (const Tuple& t : r.tuples) {
            Tuple nt(t.size());
            bool ok = true;
            for (size_t c = 0; c < t.size() && ok; ++c) {
                nt[c] = remap[static_cast<size_t>(r.symbol.type[c])]
                             [static_cast<size_t>(t[c])];
                if (nt[c] < 0) ok = false;
            }
            if (ok) nr.tuples.push_back(std::move(nt));
        }
        nr.normalize();
        out.relations.push_back(std::move(nr));
    }
    out.constants_flag = false;
    return out;
}

Structure expand(const Structure& h, const std::vector<Relation>& extra) {
    Structure out = h;
    for (const Relation& r : extra) {
        if (out.relation_index(r.symbol.name) >= 0)
            throw ValidationError("expand: relation name collision: " +
                                  r.symbol.name);
        Relation nr = r;
        nr.normalize();
        out.relations.push_back(std::move(nr));
    }
    validate(out);
    return out;
}

std::string constant_relation_name(const Structure& h, int sort, int elem) {
    return "C_" + h.sorts[static_cast<size_t>(sort)].name + "_" +
           h.sorts[static_cast<size_t>(sort)].elements[static_cast<size_t>(elem)];
}

Structure add_constants(const Structure& h) {
    std::vector<Relation> extra;
    for (size_t i = 0; i < h.sorts.size(); ++i)
        for (int a = 0; a < h.sorts[i].size(); ++a) {
            std::string name = constant_relation_name(h, static_cast<int>(i), a);
            if (h.relation_index(name) >= 0) continue;  // already present
            Relation r;
            r.symbol.name = name;
            r.symbol.type = {static_cast<int>(i)};
            r.tuples = {{a}};
            extra.push_back(std::move(r));
        }
    Structure out = expand(h, extra);
    out.constants_flag = true;
    return out;
}

Structure add_equalities(const Structure& h) {
    std::vector<Relation> extra;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        Relation r;
        r.symbol.name = "EQ_" + h.sorts[i].name;
        r.symbol.type = {static_cast<int>(i), static_cast<int>(i)};
        for (int a = 0; a < h.sorts[i].size(); ++a) r.tuples.push_back({a, a});
        extra.push_back(std::move(r));
    }
    return expand(h, extra);
}

std::vector<long long> spectrum(const Structure& h) {
    std::vector<long long> s;
    for (const Sort& so : h.sorts) {
        int n = so.size();
        if (n == 0) continue;  // empty domains carry no spectrum weight
        if (static_cast<int>(s.size()) < n) s.resize(static_cast<size_t>(n), 0);
        s[static_cast<size_t>(n - 1)] += 1;
    }
    while (!s.empty() && s.back() == 0) s.pop_back();
    return s;
}

bool spectrum_less(const std::vector<long long>& s,
                   const std::vector<long long>& t) {
    size_t n = std::max(s.size(), t.size());
    // later entries are more senior: compare from the back
    for (size_t i = n; i-- > 0;) {
        long long a = i < s.size() ? s[i] : 0;
        long long b = i < t.size() ? t[i] : 0;
        if (a != b) return a < b;
    }
    return false;
}

Instance structure_as_instance(const Structure& g, const Structure& h) {
    if (!similar(g, h))
        throw ValidationError("structure_as_instance: dissimilar structures");
    Instance p;
    // variable index of element e of sort i
    std::vector<std::vector<int>> var(g.sorts.size());
    for (size_t i = 0; i < g.sorts.size(); ++i) {
        var[i].resize(static_cast<size_t>(g.sorts[i].size()));
        for (int e = 0; e < g.sorts[i].size(); ++e) {
            var[i][static_cast<size_t>(e)] =
                static_cast<int>(p.variables.size());
            p.variables.push_back({g.sorts[i].name + "." +
                                       g.sorts[i].elements[static_cast<size_t>(e)],
                                   static_cast<int>(i)});
        }
    }
    for (size_t j = 0; j < g.relations.size(); ++j) {
        const Relation& r = g.relations[j];
        for (const Tuple& t : r.tuples) {
            Constraint c;
            c.relation = static_cast<int>(j);
            for (size_t pos = 0; pos < t.size(); ++pos)
                c.scope.push_back(var[static_cast<size_t>(r.symbol.type[pos])]
                                     [static_cast<size_t>(t[pos])]);
            p.constraints.push_back(std::move(c));
        }
    }
    return p;
}

Structure instance_as_structure(const Instance& p, const Structure& h) {
    validate_instance(p, h);
    Structure g;
    // variables of sort i become the elements of sort i, in variable order
    std::vector<int> elem_of_var(p.variables.size());
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        Sort s;
        s.name = h.sorts[i].name;
        g.sorts.push_back(s);
    }
    for (size_t v = 0; v < p.variables.size(); ++v) {
        Sort& s = g.sorts[static_cast<size_t>(p.variables[v].sort)];
        elem_of_var[v] = s.size();
        s.elements.push_back(p.variables[v].name);
    }
    for (const Relation& r : h.relations) {
        Relation nr;
        nr.symbol = r.symbol;
        g.relations.push_back(std::move(nr));
    }
    for (const Constraint& c : p.constraints) {
        Tuple t;
        for (int v : c.scope) t.push_back(elem_of_var[static_cast<size_t>(v)]);
        g.relations[static_cast<size_t>(c.relation)].tuples.push_back(std::move(t));
    }
    for (Relation& r : g.relations) r.normalize();
    return g;
}

bool is_homomorphism(const MultiSortedMap& phi, const Structure& g,
                     const Structure& h) {
    for (size_t j = 0; j < g.relations.size(); ++j) {
        const Relation& rg = g.relations[j];
        const Relation& rh = h.relations[j];
        for (const Tuple& t : rg.tuples) {
            Tuple im(t.size());
            for (size_t c = 0; c < t.size(); ++c)
                im[c] = phi.map[static_cast<size_t>(rg.symbol.type[c])]
                               [static_cast<size_t>(t[c])];
            if (!rh.contains(im)) return false;
        }
    }
    return true;
}

namespace {

// Backtracking over per-sort bijections; images chosen in canonical
// (lexicographically least) order so the first isomorphism found is
// deterministic.
struct IsoSearch {
    const Structure& h;
    const Structure& g;
    MultiSortedMap phi;
    std::vector<std::vector<bool>> used;

    IsoSearch(const Structure& h_, const Structure& g_) : h(h_), g(g_) {
        phi.map.resize(h.sorts.size());
        used.resize(h.sorts.size());
        for (size_t i = 0; i < h.sorts.size(); ++i) {
            phi.map[i].assign(static_cast<size_t>(h.sorts[i].size()), -1);
            used[i].assign(static_cast<size_t>(g.sorts[i].size()), false);
        }
    }

    // Check every relation tuple whose coordinates are all assigned.
    bool consistent() const {
        for (size_t j = 0; j < h.relations.size(); ++j) {
            const Relation& rh = h.relations[j];
            const Relation& rg = g.relations[j];
            for (const Tuple& t : rh.tuples) {
                Tuple im(t.size());
                bool full = true;
                for (size_t c = 0; c < t.size(); ++c) {
                    im[c] = phi.map[static_cast<size_t>(rh.symbol.type[c])]
                                   [static_cast<size_t>(t[c])];
                    if (im[c] < 0) { full = false; break; }
                }
                if (full && !rg.contains(im)) return false;
            }
        }
        return true;
    }

    bool inverse_ok() const {
        // phi bijective + homomorphism; inverse is a homomorphism iff the
        // image of each relation's tuple set is the whole target tuple set.
        for (size_t j = 0; j < h.relations.size(); ++j)
            if (h.relations[j].tuples.size() != g.relations[j].tuples.size())
                return false;
        return true;
    }

    bool run(size_t sort, int elem) {
        if (sort == h.sorts.size()) return inverse_ok() && consistent();
        if (elem == h.sorts[sort].size()) return run(sort + 1, 0);
        for (int b = 0; b < g.sorts[sort].size(); ++b) {
            if (used[sort][static_cast<size_t>(b)]) continue;
            phi.map[sort][static_cast<size_t>(elem)] = b;
            used[sort][static_cast<size_t>(b)] = true;
            if (consistent() && run(sort, elem + 1)) return true;
            used[sort][static_cast<size_t>(b)] = false;
            phi.map[sort][static_cast<size_t>(elem)] = -1;
        }
        return false;
    }
};

}  // namespace

std::optional<MultiSortedMap> find_isomorphism(const Structure& h,
                                               const Structure& g) {
    if (!similar(h, g)) return std::nullopt;
    for (size_t i = 0; i < h.sorts.size(); ++i)
        if (h.sorts[i].size() != g.sorts[i].size()) return std::nullopt;
    IsoSearch search(h, g);
    if (search.run(0, 0)) return search.phi;
    return std::nullopt;
}

}  // namespace modcsp
