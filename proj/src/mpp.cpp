#include "modcsp/mpp.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "modcsp/homcount.hpp"

namespace modcsp {

ExtCount ext_counts(const Relation& r, const Tuple& prefix,
                    const std::vector<int>& coords, long long p) {
    if (!is_prime(p)) throw ValidationError("p must be prime");
    if (prefix.size() != coords.size())
        throw ValidationError("prefix/coordinate length mismatch");
    int n = r.symbol.arity();
    for (int c : coords)
        if (c < 0 || c >= n)
            throw ValidationError("extension coordinate out of range");
    ExtCount out;
    for (const Tuple& t : r.tuples) {
        bool match = true;
        for (size_t k = 0; k < coords.size(); ++k)
            if (t[static_cast<size_t>(coords[k])] != prefix[k]) {
                match = false;
                break;
            }
        if (match) ++out.count;
    }
    out.residue = out.count % p;
    return out;
}

Relation pr_p(const Relation& r, const std::vector<int>& I, long long p) {
    if (!is_prime(p)) throw ValidationError("p must be prime");
    int n = r.symbol.arity();
    for (size_t k = 0; k < I.size(); ++k) {
        if (I[k] < 0 || I[k] >= n)
            throw ValidationError("projection coordinate out of range");
        if (k > 0 && I[k] <= I[k - 1])
            throw ValidationError("projection coordinates must increase");
    }
    std::map<Tuple, long long> counts;
    for (const Tuple& t : r.tuples) {
        Tuple proj;
        for (int c : I) proj.push_back(t[static_cast<size_t>(c)]);
        ++counts[proj];
    }
    Relation out;
    out.symbol.name = "pr^p(" + r.symbol.name + ")";
    for (int c : I)
        out.symbol.type.push_back(r.symbol.type[static_cast<size_t>(c)]);
    for (const auto& [proj, cnt] : counts)
        if (cnt % p != 0) out.tuples.push_back(proj);
    out.normalize();
    return out;
}

namespace {

// shared evaluator; when strict != nullptr it records whether every kept
// projection had residue exactly 1 at every block
Relation eval_mpp_impl(const MppFormula& phi, const Structure& h, long long p,
                       bool* strict) {
    if (!is_prime(p)) throw ValidationError("p must be prime");
    if (strict) *strict = true;

    // ordered variable list: free, then blocks outermost first
    std::vector<std::string> vars;
    std::vector<int> sorts;  // -1 = to infer
    std::map<std::string, int> index;
    auto add_var = [&](const std::string& name, int sort) {
        if (index.count(name))
            throw ValidationError("duplicate variable: " + name);
        index[name] = static_cast<int>(vars.size());
        vars.push_back(name);
        sorts.push_back(sort);
    };
    for (const auto& [name, sort] : phi.free) {
        if (sort < 0 || sort >= static_cast<int>(h.sorts.size()))
            throw ValidationError("free variable sort out of range");
        add_var(name, sort);
    }
    for (const auto& block : phi.blocks) {
        if (block.empty()) throw ValidationError("empty quantifier block");
        for (const std::string& name : block) add_var(name, -1);
    }
    for (const auto& [name, sort] : phi.sort_hints) {
        auto it = index.find(name);
        if (it == index.end()) continue;
        int& have = sorts[static_cast<size_t>(it->second)];
        if (have < 0) have = sort;
    }

    // resolve atoms; infer quantified sorts from relation positions
    struct RelAtom {
        int relation;
        std::vector<int> scope;
    };
    std::vector<RelAtom> rel_atoms;
    std::vector<std::pair<int, int>> eq_atoms;
    for (const MppAtom& a : phi.atoms) {
        std::vector<int> scope;
        for (const std::string& name : a.scope) {
            auto it = index.find(name);
            if (it == index.end())
                throw ValidationError("unbound variable in atom: " + name);
            scope.push_back(it->second);
        }
        if (a.is_equality()) {
            if (scope.size() != 2)
                throw ValidationError("equality atom needs two variables");
            eq_atoms.push_back({scope[0], scope[1]});
            continue;
        }
        int rel = -1;
        for (size_t j = 0; j < h.relations.size(); ++j)
            if (h.relations[j].symbol.name == a.relation)
                rel = static_cast<int>(j);
        if (rel < 0)
            throw ValidationError("unknown relation in atom: " + a.relation);
        const RelationSymbol& sym = h.relations[static_cast<size_t>(rel)].symbol;
        if (scope.size() != sym.type.size())
            throw ValidationError("atom scope arity mismatch: " + a.relation);
        for (size_t q = 0; q < scope.size(); ++q) {
            int s = sym.type[q];
            int& have = sorts[static_cast<size_t>(scope[q])];
            if (have < 0)
                have = s;
            else if (have != s)
                throw ValidationError("sort conflict on variable " +
                                      vars[static_cast<size_t>(scope[q])]);
        }
        rel_atoms.push_back({rel, scope});
    }
    // propagate sorts through equalities until fixpoint
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [u, v] : eq_atoms) {
            int& su = sorts[static_cast<size_t>(u)];
            int& sv = sorts[static_cast<size_t>(v)];
            if (su >= 0 && sv < 0) sv = su, changed = true;
            if (sv >= 0 && su < 0) su = sv, changed = true;
            if (su >= 0 && sv >= 0 && su != sv)
                throw ValidationError("sort conflict across equality");
        }
    }
    for (size_t k = 0; k < sorts.size(); ++k)
        if (sorts[k] < 0)
            throw ValidationError("cannot infer sort of quantified variable " +
                                  vars[k]);

    // union-find over equality atoms
    std::vector<int> parent(vars.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        return parent[static_cast<size_t>(x)] == x
                   ? x
                   : parent[static_cast<size_t>(x)] =
                         find(parent[static_cast<size_t>(x)]);
    };
    for (auto [u, v] : eq_atoms) parent[static_cast<size_t>(find(u))] = find(v);

    // instance over class representatives
    std::map<int, int> rep_var;  // representative -> instance variable
    Instance inst;
    for (size_t k = 0; k < vars.size(); ++k) {
        int r = find(static_cast<int>(k));
        if (!rep_var.count(r)) {
            rep_var[r] = static_cast<int>(inst.variables.size());
            inst.variables.push_back(
                {vars[static_cast<size_t>(r)], sorts[static_cast<size_t>(r)]});
        }
    }
    for (const RelAtom& a : rel_atoms) {
        Constraint c;
        c.relation = a.relation;
        for (int v : a.scope) c.scope.push_back(rep_var.at(find(v)));
        inst.constraints.push_back(std::move(c));
    }

    // matrix: all satisfying assignments over the full variable list
    std::vector<Tuple> matrix;
    for_each_hom(inst, h, {}, {}, [&](const std::vector<int>& assign) {
        Tuple t(vars.size());
        for (size_t k = 0; k < vars.size(); ++k)
            t[k] = assign[static_cast<size_t>(rep_var.at(find(static_cast<int>(k))))];
        matrix.push_back(std::move(t));
        return true;
    });
    std::sort(matrix.begin(), matrix.end());

    // eliminate blocks innermost-out
    size_t remaining = vars.size();
    for (size_t b = phi.blocks.size(); b-- > 0;) {
        remaining -= phi.blocks[b].size();
        std::map<Tuple, long long> counts;
        for (const Tuple& t : matrix)
            ++counts[Tuple(t.begin(), t.begin() + static_cast<long>(remaining))];
        std::vector<Tuple> next;
        for (const auto& [proj, cnt] : counts) {
            long long residue = cnt % p;
            if (residue == 0) continue;
            if (strict && residue != 1) *strict = false;
            next.push_back(proj);
        }
        matrix = std::move(next);
    }

    Relation out;
    out.symbol.name = "mpp";
    for (const auto& [name, sort] : phi.free) out.symbol.type.push_back(sort);
    out.tuples = std::move(matrix);
    out.normalize();
    return out;
}

}  // namespace

Relation eval_mpp(const MppFormula& phi, const Structure& h, long long p) {
    return eval_mpp_impl(phi, h, p, nullptr);
}

bool is_strict(const MppFormula& phi, const Structure& h, long long p) {
    bool strict = true;
    eval_mpp_impl(phi, h, p, &strict);
    return strict;
}

std::size_t structure_content_hash(const Structure& h) {
    std::size_t hash = 1469598103934665603ull;
    auto mix = [&](std::size_t v) {
        hash ^= v;
        hash *= 1099511628211ull;
    };
    auto mix_str = [&](const std::string& s) {
        for (char c : s) mix(static_cast<std::size_t>(static_cast<unsigned char>(c)));
        mix(0xffu);
    };
    for (const Sort& s : h.sorts) {
        mix_str(s.name);
        for (const std::string& e : s.elements) mix_str(e);
    }
    for (const Relation& r : h.relations) {
        mix_str(r.symbol.name);
        for (int s : r.symbol.type) mix(static_cast<std::size_t>(s) + 1);
        for (const Tuple& t : r.tuples) {
            for (int e : t) mix(static_cast<std::size_t>(e) + 1);
            mix(0xfeu);
        }
    }
    return hash;
}

namespace {

struct ClosureState {
    const Structure& h;
    long long p;
    const ClosureBudget& budget;
    std::size_t hash;
    std::vector<DefinedRelation> relations;
    std::map<std::pair<std::vector<int>, std::vector<Tuple>>, int> seen;
    bool exhausted = false;
    long long fresh_counter = 0;

    std::string fresh_name() { return "q" + std::to_string(fresh_counter++); }

    // adds if new and within budget; returns whether progress is possible
    void add(Relation rel, MppFormula formula) {
        rel.normalize();
        auto key = std::make_pair(rel.symbol.type, rel.tuples);
        if (seen.count(key)) return;
        if (static_cast<long long>(rel.tuples.size()) >
            budget.max_relation_size) {
            exhausted = true;
            return;
        }
        if (static_cast<int>(relations.size()) >= budget.max_relations) {
            exhausted = true;
            return;
        }
        seen[key] = static_cast<int>(relations.size());
        rel.symbol.name = "cl" + std::to_string(relations.size());
        relations.push_back({std::move(rel), std::move(formula), hash});
    }

    bool full() const {
        return static_cast<int>(relations.size()) >= budget.max_relations;
    }
};

MppFormula rename_formula(const MppFormula& phi,
                          const std::map<std::string, std::string>& ren) {
    auto r = [&](const std::string& name) {
        auto it = ren.find(name);
        return it == ren.end() ? name : it->second;
    };
    MppFormula out;
    for (const auto& [name, sort] : phi.free) out.free.push_back({r(name), sort});
    for (const auto& block : phi.blocks) {
        std::vector<std::string> b;
        for (const std::string& v : block) b.push_back(r(v));
        out.blocks.push_back(std::move(b));
    }
    for (const MppAtom& a : phi.atoms) {
        MppAtom na;
        na.relation = a.relation;
        for (const std::string& v : a.scope) na.scope.push_back(r(v));
        out.atoms.push_back(std::move(na));
    }
    for (const auto& [name, sort] : phi.sort_hints)
        out.sort_hints.push_back({r(name), sort});
    return out;
}

void do_quantifications(ClosureState& st, int idx) {
    const DefinedRelation d = st.relations[static_cast<size_t>(idx)];
    int n = d.relation.symbol.arity();
    if (static_cast<int>(d.formula.blocks.size()) >= st.budget.max_blocks)
        return;
    for (int mask = 1; mask < (1 << n); ++mask) {
        if (mask == (1 << n) - 1) continue;  // keep at least one coordinate
        std::vector<int> remaining;
        std::vector<std::string> block;
        MppFormula f;
        f.atoms = d.formula.atoms;
        f.blocks = d.formula.blocks;
        f.sort_hints = d.formula.sort_hints;
        for (int q = 0; q < n; ++q) {
            if ((mask >> q) & 1) {
                block.push_back(d.formula.free[static_cast<size_t>(q)].first);
                f.sort_hints.push_back(d.formula.free[static_cast<size_t>(q)]);
            } else {
                remaining.push_back(q);
                f.free.push_back(d.formula.free[static_cast<size_t>(q)]);
            }
        }
        f.blocks.insert(f.blocks.begin(), std::move(block));
        st.add(pr_p(d.relation, remaining, st.p), std::move(f));
        if (st.full()) return;
    }
}

void do_identifications(ClosureState& st, int idx) {
    const DefinedRelation d = st.relations[static_cast<size_t>(idx)];
    int n = d.relation.symbol.arity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (d.relation.symbol.type[static_cast<size_t>(i)] !=
                d.relation.symbol.type[static_cast<size_t>(j)])
                continue;
            Relation rel;
            rel.symbol.type = d.relation.symbol.type;
            rel.symbol.type.erase(rel.symbol.type.begin() + j);
            for (const Tuple& t : d.relation.tuples) {
                if (t[static_cast<size_t>(i)] != t[static_cast<size_t>(j)])
                    continue;
                Tuple nt = t;
                nt.erase(nt.begin() + j);
                rel.tuples.push_back(std::move(nt));
            }
            std::map<std::string, std::string> ren{
                {d.formula.free[static_cast<size_t>(j)].first,
                 d.formula.free[static_cast<size_t>(i)].first}};
            MppFormula f = rename_formula(d.formula, ren);
            f.free.erase(f.free.begin() + j);
            st.add(std::move(rel), std::move(f));
            if (st.full()) return;
        }
}

void do_conjunction(ClosureState& st, int i1, int i2) {
    const DefinedRelation d1 = st.relations[static_cast<size_t>(i1)];
    const DefinedRelation d2 = st.relations[static_cast<size_t>(i2)];
    int m = d1.relation.symbol.arity();
    int n = d2.relation.symbol.arity();
    if (static_cast<int>(d1.formula.atoms.size() + d2.formula.atoms.size()) >
        st.budget.max_atoms)
        return;
    if (static_cast<int>(d1.formula.blocks.size() + d2.formula.blocks.size()) >
        st.budget.max_blocks)
        return;
    if (m > st.budget.max_free_arity) return;

    // glue[j] = coordinate of d1 identified with coordinate j of d2, or -1;
    // enumerate maximally-glued combinations first so joins are discovered
    // before plain products fill the budget
    std::vector<std::vector<int>> glue_choices;
    {
        std::vector<int> glue(static_cast<size_t>(n), -1);
        while (true) {
            glue_choices.push_back(glue);
            int j = n - 1;
            while (j >= 0 && glue[static_cast<size_t>(j)] == m - 1)
                glue[static_cast<size_t>(j--)] = -1;
            if (j < 0) break;
            ++glue[static_cast<size_t>(j)];
        }
        std::stable_sort(glue_choices.begin(), glue_choices.end(),
                         [](const std::vector<int>& a, const std::vector<int>& b) {
                             return std::count(a.begin(), a.end(), -1) <
                                    std::count(b.begin(), b.end(), -1);
                         });
    }
    for (const std::vector<int>& glue : glue_choices) {
        int fresh = 0;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            int g = glue[static_cast<size_t>(j)];
            if (g < 0)
                ++fresh;
            else if (d1.relation.symbol.type[static_cast<size_t>(g)] !=
                     d2.relation.symbol.type[static_cast<size_t>(j)])
                ok = false;
        }
        if (ok && m + fresh <= st.budget.max_free_arity) {
            Relation rel;
            rel.symbol.type = d1.relation.symbol.type;
            for (int j = 0; j < n; ++j)
                if (glue[static_cast<size_t>(j)] < 0)
                    rel.symbol.type.push_back(
                        d2.relation.symbol.type[static_cast<size_t>(j)]);
            for (const Tuple& t1 : d1.relation.tuples)
                for (const Tuple& t2 : d2.relation.tuples) {
                    bool match = true;
                    for (int j = 0; j < n && match; ++j) {
                        int g = glue[static_cast<size_t>(j)];
                        if (g >= 0 && t1[static_cast<size_t>(g)] !=
                                          t2[static_cast<size_t>(j)])
                            match = false;
                    }
                    if (!match) continue;
                    Tuple t = t1;
                    for (int j = 0; j < n; ++j)
                        if (glue[static_cast<size_t>(j)] < 0)
                            t.push_back(t2[static_cast<size_t>(j)]);
                    rel.tuples.push_back(std::move(t));
                }
            // quantified variables are disjoint after renaming, so the
            // two prefixes factorize and can simply be concatenated
            std::map<std::string, std::string> ren;
            for (const auto& block : d2.formula.blocks)
                for (const std::string& v : block) ren[v] = st.fresh_name();
            for (int j = 0; j < n; ++j) {
                const std::string& old =
                    d2.formula.free[static_cast<size_t>(j)].first;
                int g = glue[static_cast<size_t>(j)];
                ren[old] = g >= 0
                               ? d1.formula.free[static_cast<size_t>(g)].first
                               : st.fresh_name();
            }
            MppFormula f2 = rename_formula(d2.formula, ren);
            MppFormula f = d1.formula;
            // avoid clashes between d1's names and the fresh ones: fresh
            // names are globally unique, glued names are shared on purpose
            for (const auto& block : f2.blocks) f.blocks.push_back(block);
            for (const MppAtom& a : f2.atoms) f.atoms.push_back(a);
            for (const auto& hint : f2.sort_hints) f.sort_hints.push_back(hint);
            for (int j = 0; j < n; ++j)
                if (glue[static_cast<size_t>(j)] < 0)
                    f.free.push_back(f2.free[static_cast<size_t>(j)]);
            st.add(std::move(rel), std::move(f));
            if (st.full()) return;
        }
    }
}

}  // namespace

ClosureResult closure_search(const Structure& h, long long p,
                             const ClosureBudget& budget) {
    if (!is_prime(p)) throw ValidationError("p must be prime");
    ClosureState st{h, p, budget, structure_content_hash(h), {}, {}, false, 0};

    // seeds: the structure's relations, per-sort equality and full domain
    for (const Relation& r : h.relations) {
        MppFormula f;
        MppAtom a;
        a.relation = r.symbol.name;
        for (size_t q = 0; q < r.symbol.type.size(); ++q) {
            std::string name = st.fresh_name();
            f.free.push_back({name, r.symbol.type[q]});
            a.scope.push_back(name);
        }
        f.atoms.push_back(std::move(a));
        st.add(r, std::move(f));
    }
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        int s = static_cast<int>(i);
        Relation eq;
        eq.symbol.type = {s, s};
        for (int e = 0; e < h.sorts[i].size(); ++e) eq.tuples.push_back({e, e});
        MppFormula feq;
        std::string x = st.fresh_name(), y = st.fresh_name();
        feq.free = {{x, s}, {y, s}};
        feq.atoms.push_back({"", {x, y}});
        st.add(std::move(eq), std::move(feq));

        Relation dom;
        dom.symbol.type = {s};
        for (int e = 0; e < h.sorts[i].size(); ++e) dom.tuples.push_back({e});
        MppFormula fdom;
        std::string z = st.fresh_name();
        fdom.free = {{z, s}};
        fdom.atoms.push_back({"", {z, z}});
        st.add(std::move(dom), std::move(fdom));
    }

    // deterministic saturation; low-arity relations are processed first
    // so constants, subalgebras and joins appear before product junk
    std::vector<bool> processed;
    while (!st.full()) {
        processed.resize(st.relations.size(), false);
        int k = -1;
        for (size_t i = 0; i < st.relations.size(); ++i) {
            if (processed[i]) continue;
            if (k < 0 ||
                st.relations[i].relation.symbol.arity() <
                    st.relations[static_cast<size_t>(k)].relation.symbol.arity())
                k = static_cast<int>(i);
        }
        if (k < 0) break;  // fixpoint
        processed[static_cast<size_t>(k)] = true;
        do_quantifications(st, k);
        if (st.full()) break;
        do_identifications(st, k);
        if (st.full()) break;
        size_t snapshot = st.relations.size();
        for (size_t e = 0; e < snapshot && !st.full(); ++e) {
            do_conjunction(st, k, static_cast<int>(e));
            if (st.full()) break;
            if (static_cast<int>(e) != k)
                do_conjunction(st, static_cast<int>(e), k);
        }
    }

    return {std::move(st.relations), st.exhausted};
}

std::vector<PSubalgebra> p_subalgebras(const Structure& h, long long p,
                                       const ClosureBudget& budget) {
    std::vector<PSubalgebra> out;
    for (const DefinedRelation& d : closure_search(h, p, budget).relations) {
        if (d.relation.symbol.arity() != 1 || d.relation.tuples.empty())
            continue;
        PSubalgebra sub;
        sub.sort = d.relation.symbol.type[0];
        for (const Tuple& t : d.relation.tuples) sub.elements.push_back(t[0]);
        sub.definition = d;
        out.push_back(std::move(sub));
    }
    return out;
}

ConservativityReport is_p_conservative(const Structure& h, long long p,
                                       const ClosureBudget& budget) {
    ClosureResult closure = closure_search(h, p, budget);
    std::set<std::pair<int, std::vector<int>>> found;
    for (const DefinedRelation& d : closure.relations) {
        if (d.relation.symbol.arity() != 1 || d.relation.tuples.empty())
            continue;
        std::vector<int> elems;
        for (const Tuple& t : d.relation.tuples) elems.push_back(t[0]);
        found.insert({d.relation.symbol.type[0], elems});
    }
    ConservativityReport report;
    report.budget_exhausted = closure.budget_exhausted;
    report.certified = true;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        int n = h.sorts[i].size();
        for (int mask = 1; mask < (1 << n); ++mask) {
            std::vector<int> elems;
            for (int e = 0; e < n; ++e)
                if ((mask >> e) & 1) elems.push_back(e);
            if (!found.count({static_cast<int>(i), elems})) {
                report.certified = false;
                report.missing.push_back({static_cast<int>(i), elems});
            }
        }
    }
    return report;
}

std::optional<std::vector<Tuple>> preservation_violation(
    const OperationTable& f, const Relation& r,
    const std::vector<int>& sort_of_coord) {
    int n = r.symbol.arity();
    if (static_cast<int>(sort_of_coord.size()) != n)
        throw ValidationError("coordinate sort list arity mismatch");
    if (r.tuples.empty()) return std::nullopt;
    size_t count = r.tuples.size();
    std::vector<size_t> pick(static_cast<size_t>(f.arity), 0);
    while (true) {
        Tuple image(static_cast<size_t>(n));
        for (int q = 0; q < n; ++q) {
            std::vector<int> args;
            for (size_t k = 0; k < pick.size(); ++k)
                args.push_back(r.tuples[pick[k]][static_cast<size_t>(q)]);
            image[static_cast<size_t>(q)] =
                f.apply(sort_of_coord[static_cast<size_t>(q)], args);
        }
        if (!r.contains(image)) {
            std::vector<Tuple> witness;
            for (size_t k = 0; k < pick.size(); ++k)
                witness.push_back(r.tuples[pick[k]]);
            return witness;
        }
        size_t k = pick.size();
        while (k > 0 && pick[k - 1] + 1 == count) pick[--k] = 0;
        if (k == 0) break;
        ++pick[k - 1];
    }
    return std::nullopt;
}

bool op_preserves(const OperationTable& f, const Structure& h,
                  const Relation& r) {
    (void)h;
    return !preservation_violation(f, r, r.symbol.type).has_value();
}

DaggerResult build_H_dagger(const Structure& h, long long p,
                            const ClosureBudget& budget, long long poly_limit) {
    std::vector<OperationTable> polys = enumerate_polymorphisms(h, 3, poly_limit);
    ClosureResult closure = closure_search(h, p, budget);
    DaggerResult out;
    out.expansion = h;
    out.budget_exhausted = closure.budget_exhausted;
    std::set<int> added;  // indices into closure.relations
    int next_q = 0;
    for (const OperationTable& f : polys) {
        KillEntry entry;
        entry.f = f;
        for (size_t k = 0; k < closure.relations.size(); ++k) {
            const DefinedRelation& d = closure.relations[k];
            auto v = preservation_violation(f, d.relation,
                                            d.relation.symbol.type);
            if (!v) continue;
            entry.killer = d;
            entry.witness = *v;
            if (!added.count(static_cast<int>(k))) {
                added.insert(static_cast<int>(k));
                Relation q = d.relation;
                q.symbol.name = "Q" + std::to_string(next_q++);
                out.expansion.relations.push_back(std::move(q));
            }
            break;
        }
        out.kill_list.push_back(std::move(entry));
    }
    return out;
}

MaltsevClosureVerdict maltsev_for_closure(const Structure& h, long long p,
                                          const ClosureBudget& budget) {
    MaltsevClosureVerdict verdict;
    verdict.budget = budget;
    std::vector<OperationTable> candidates = maltsev_candidates(h);
    if (candidates.empty()) {
        verdict.kind = MaltsevClosureVerdict::Kind::NoMaltsevForHItself;
        return verdict;
    }
    ClosureResult closure = closure_search(h, p, budget);
    verdict.budget_exhausted = closure.budget_exhausted;
    for (const OperationTable& m : candidates) {
        KillEntry entry;
        entry.f = m;
        for (const DefinedRelation& d : closure.relations) {
            auto v = preservation_violation(m, d.relation,
                                            d.relation.symbol.type);
            if (!v) continue;
            entry.killer = d;
            entry.witness = *v;
            break;
        }
        if (entry.killer)
            verdict.kills.push_back(std::move(entry));
        else
            verdict.survivors.push_back(m);
    }
    verdict.kind = verdict.survivors.empty()
                       ? MaltsevClosureVerdict::Kind::NoMaltsevCertified
                       : MaltsevClosureVerdict::Kind::MaltsevUpToBudget;
    return verdict;
}

}  // namespace modcsp
