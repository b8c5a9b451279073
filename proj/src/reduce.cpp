#include "modcsp/reduce.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "modcsp/homcount.hpp"

namespace modcsp {

namespace {

// index of a full unary domain relation for the sort, -1 if absent
int domain_relation(const Structure& h, int sort) {
    for (size_t r = 0; r < h.relations.size(); ++r) {
        const Relation& rel = h.relations[r];
        if (rel.symbol.type != std::vector<int>{sort}) continue;
        if (static_cast<int>(rel.tuples.size()) ==
            h.sorts[static_cast<size_t>(sort)].size())
            return static_cast<int>(r);
    }
    return -1;
}

// h with a full unary relation per sort (added when missing)
Structure complete_domains(const Structure& h) {
    Structure out = h;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        if (domain_relation(h, static_cast<int>(i)) >= 0) continue;
        Relation r;
        r.symbol = {"dom_" + h.sorts[i].name, {static_cast<int>(i)}};
        for (int e = 0; e < h.sorts[i].size(); ++e) r.tuples.push_back({e});
        out.relations.push_back(std::move(r));
    }
    return out;
}

// the completed instance: every variable gets a domain constraint (any
// existing full-unary constraint on the variable counts as coverage)
Instance complete_instance(const Instance& p, const Structure& h) {
    Instance out = p;
    for (size_t v = 0; v < p.variables.size(); ++v) {
        int sort = p.variables[v].sort;
        bool covered = false;
        for (const Constraint& c : p.constraints) {
            if (c.scope != std::vector<int>{static_cast<int>(v)}) continue;
            const Relation& r = h.relations[static_cast<size_t>(c.relation)];
            covered = covered ||
                      (r.symbol.type == std::vector<int>{sort} &&
                       static_cast<int>(r.tuples.size()) ==
                           h.sorts[static_cast<size_t>(sort)].size());
        }
        if (!covered)
            out.constraints.push_back({domain_relation(h, sort),
                                       {static_cast<int>(v)}});
    }
    return out;
}

std::string tuple_name(const Structure& h, const Relation& r, const Tuple& t) {
    std::string name;
    for (size_t c = 0; c < t.size(); ++c) {
        if (c) name += ",";
        name += h.sorts[static_cast<size_t>(r.symbol.type[c])]
                    .elements[static_cast<size_t>(t[c])];
    }
    return name;
}

int tuple_index(const Relation& r, const Tuple& t) {
    auto it = std::lower_bound(r.tuples.begin(), r.tuples.end(), t);
    if (it == r.tuples.end() || *it != t) return -1;
    return static_cast<int>(it - r.tuples.begin());
}

std::vector<std::vector<int>> all_perms(int n) {
    std::vector<int> id(static_cast<size_t>(n));
    std::iota(id.begin(), id.end(), 0);
    std::vector<std::vector<int>> out;
    do {
        out.push_back(id);
    } while (std::next_permutation(id.begin(), id.end()));
    return out;
}

// arc consistency over the alive flags; false when a domain empties
bool arc_consistent(const PermDomainInstance& sp,
                    std::vector<std::vector<char>>& alive) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& c : sp.constraints) {
            std::vector<char> sup_u(alive[static_cast<size_t>(c.u)].size(), 0);
            std::vector<char> sup_v(alive[static_cast<size_t>(c.v)].size(), 0);
            for (const auto& [x, y] : c.pairs)
                if (alive[static_cast<size_t>(c.u)][static_cast<size_t>(x)] &&
                    alive[static_cast<size_t>(c.v)][static_cast<size_t>(y)]) {
                    sup_u[static_cast<size_t>(x)] = 1;
                    sup_v[static_cast<size_t>(y)] = 1;
                }
            auto prune = [&](std::vector<char>& dom, const std::vector<char>& sup) {
                bool any = false;
                for (size_t e = 0; e < dom.size(); ++e)
                    if (dom[e] && !sup[e]) {
                        dom[e] = 0;
                        changed = true;
                    }
                for (char d : dom) any = any || d;
                return any;
            };
            if (!prune(alive[static_cast<size_t>(c.u)], sup_u)) return false;
            if (!prune(alive[static_cast<size_t>(c.v)], sup_v)) return false;
        }
    }
    return true;
}

bool solve_rec(const PermDomainInstance& sp, std::vector<std::vector<char>> alive,
               std::vector<int>& out) {
    if (!arc_consistent(sp, alive)) return false;
    // pick the smallest live domain with more than one candidate
    int best = -1;
    size_t best_size = 0;
    for (size_t v = 0; v < alive.size(); ++v) {
        size_t n = 0;
        for (char d : alive[v]) n += d ? 1 : 0;
        if (n > 1 && (best < 0 || n < best_size)) {
            best = static_cast<int>(v);
            best_size = n;
        }
    }
    if (best < 0) {  // all singletons
        out.resize(alive.size());
        for (size_t v = 0; v < alive.size(); ++v)
            out[v] = static_cast<int>(
                std::find(alive[v].begin(), alive[v].end(), 1) - alive[v].begin());
        return true;
    }
    for (size_t e = 0; e < alive[static_cast<size_t>(best)].size(); ++e) {
        if (!alive[static_cast<size_t>(best)][e]) continue;
        auto next = alive;
        std::fill(next[static_cast<size_t>(best)].begin(),
                  next[static_cast<size_t>(best)].end(), 0);
        next[static_cast<size_t>(best)][e] = 1;
        if (solve_rec(sp, std::move(next), out)) return true;
    }
    return false;
}

// f applied coordinatewise: x -> f(a, x) over the relation's type
Tuple poly_image(const OperationTable& f, const Relation& r, const Tuple& a,
                 const Tuple& x) {
    Tuple out(x.size());
    for (size_t c = 0; c < x.size(); ++c)
        out[c] = f.apply(r.symbol.type[c], {a[c], x[c]});
    return out;
}

bool relation_f_closed(const OperationTable& f, const Relation& r) {
    for (const Tuple& a : r.tuples)
        for (const Tuple& x : r.tuples)
            if (!r.contains(poly_image(f, r, a, x))) return false;
    return true;
}

}  // namespace

BinarizedPair binarize(const Structure& h) {
    validate(h);
    BinarizedPair out;
    out.h = complete_domains(h);
    for (size_t r = 0; r < out.h.relations.size(); ++r) {
        const Relation& rel = out.h.relations[r];
        Sort s;
        s.name = rel.symbol.name;
        for (const Tuple& t : rel.tuples)
            s.elements.push_back(tuple_name(out.h, rel, t));
        out.bh.sorts.push_back(std::move(s));
        out.sort_source.push_back(static_cast<int>(r));
    }
    int nr = static_cast<int>(out.h.relations.size());
    for (int i = 0; i < nr; ++i)
        for (int j = i; j < nr; ++j) {
            const Relation& ri = out.h.relations[static_cast<size_t>(i)];
            const Relation& rj = out.h.relations[static_cast<size_t>(j)];
            for (int s = 0; s < ri.symbol.arity(); ++s)
                for (int t = 0; t < rj.symbol.arity(); ++t) {
                    if (ri.symbol.type[static_cast<size_t>(s)] !=
                        rj.symbol.type[static_cast<size_t>(t)])
                        continue;
                    Relation q;
                    q.symbol = {"Q_" + std::to_string(i) + "_" + std::to_string(j) +
                                    "_" + std::to_string(s) + "_" + std::to_string(t),
                                {i, j}};
                    for (size_t x = 0; x < ri.tuples.size(); ++x)
                        for (size_t y = 0; y < rj.tuples.size(); ++y)
                            if (ri.tuples[x][static_cast<size_t>(s)] ==
                                rj.tuples[y][static_cast<size_t>(t)])
                                q.tuples.push_back(
                                    {static_cast<int>(x), static_cast<int>(y)});
                    q.normalize();
                    out.bh.relations.push_back(std::move(q));
                    out.q_refs.push_back({i, j, s, t});
                }
        }
    validate(out.bh);
    return out;
}

BinarizedInstance binarize_instance(const Instance& p, const BinarizedPair& b) {
    validate_instance(p, b.h);
    BinarizedInstance out;
    out.p = complete_instance(p, b.h);
    std::map<std::tuple<int, int, int, int>, int> qindex;
    for (size_t q = 0; q < b.q_refs.size(); ++q)
        qindex[{b.q_refs[q].i, b.q_refs[q].j, b.q_refs[q].s, b.q_refs[q].t}] =
            static_cast<int>(q);
    for (size_t c = 0; c < out.p.constraints.size(); ++c) {
        out.bp.variables.push_back(
            {"c" + std::to_string(c), out.p.constraints[c].relation});
        out.var_source.push_back(static_cast<int>(c));
    }
    int nc = static_cast<int>(out.p.constraints.size());
    for (int c1 = 0; c1 < nc; ++c1)
        for (int c2 = c1; c2 < nc; ++c2) {
            const Constraint& k1 = out.p.constraints[static_cast<size_t>(c1)];
            const Constraint& k2 = out.p.constraints[static_cast<size_t>(c2)];
            for (size_t s = 0; s < k1.scope.size(); ++s)
                for (size_t t = 0; t < k2.scope.size(); ++t) {
                    if (k1.scope[s] != k2.scope[t]) continue;
                    if (c1 == c2 && s == t) continue;
                    int i = k1.relation, j = k2.relation;
                    if (i <= j)
                        out.bp.constraints.push_back(
                            {qindex.at({i, j, static_cast<int>(s),
                                        static_cast<int>(t)}),
                             {c1, c2}});
                    else
                        out.bp.constraints.push_back(
                            {qindex.at({j, i, static_cast<int>(t),
                                        static_cast<int>(s)}),
                             {c2, c1}});
                }
        }
    validate_instance(out.bp, b.bh);
    return out;
}

std::vector<int> transfer_solution(const BinarizedPair& b,
                                   const BinarizedInstance& bi,
                                   const std::vector<int>& phi) {
    if (phi.size() != bi.p.variables.size())
        throw ValidationError("assignment length does not match the instance");
    std::vector<int> psi;
    for (const Constraint& c : bi.p.constraints) {
        const Relation& r = b.h.relations[static_cast<size_t>(c.relation)];
        Tuple t;
        for (int v : c.scope) t.push_back(phi[static_cast<size_t>(v)]);
        int idx = tuple_index(r, t);
        if (idx < 0)
            throw ValidationError("assignment violates constraint over " +
                                  r.symbol.name);
        psi.push_back(idx);
    }
    return psi;
}

PermDomainInstance build_sP(const Instance& p, const Structure& h, int cap) {
    PermDomainInstance sp;
    sp.b = binarize(h);
    sp.bi = binarize_instance(p, sp.b);
    for (const Variable& v : sp.bi.bp.variables) {
        const Relation& r =
            sp.b.h.relations[static_cast<size_t>(sp.b.sort_source[static_cast<size_t>(v.sort)])];
        int n = static_cast<int>(r.tuples.size());
        if (n > cap)
            throw ValidationError("symmetric-group domain cap exceeded: relation " +
                                  r.symbol.name + " has " + std::to_string(n) +
                                  " tuples (cap " + std::to_string(cap) + ")");
        sp.domains.push_back(all_perms(n));
    }
    for (const Constraint& c : sp.bi.bp.constraints) {
        const Relation& q = sp.b.bh.relations[static_cast<size_t>(c.relation)];
        PermDomainInstance::SConstraint sc;
        sc.u = c.scope[0];
        sc.v = c.scope[1];
        sc.q = sp.b.q_refs[static_cast<size_t>(c.relation)];
        int nu = static_cast<int>(
            sp.b.bh.sorts[static_cast<size_t>(q.symbol.type[0])].elements.size());
        int nv = static_cast<int>(
            sp.b.bh.sorts[static_cast<size_t>(q.symbol.type[1])].elements.size());
        std::vector<char> member(static_cast<size_t>(nu * nv), 0);
        for (const Tuple& t : q.tuples)
            member[static_cast<size_t>(t[0] * nv + t[1])] = 1;
        const auto& du = sp.domains[static_cast<size_t>(sc.u)];
        const auto& dv = sp.domains[static_cast<size_t>(sc.v)];
        for (size_t x = 0; x < du.size(); ++x)
            for (size_t y = 0; y < dv.size(); ++y) {
                bool ok = true;
                for (const Tuple& t : q.tuples) {
                    int a = du[x][static_cast<size_t>(t[0])];
                    int b = dv[y][static_cast<size_t>(t[1])];
                    if (!member[static_cast<size_t>(a * nv + b)]) {
                        ok = false;
                        break;
                    }
                }
                if (ok) sc.pairs.push_back({static_cast<int>(x), static_cast<int>(y)});
            }
        sp.constraints.push_back(std::move(sc));
    }
    return sp;
}

std::vector<int> perm_maltsev(const std::vector<int>& x, const std::vector<int>& y,
                              const std::vector<int>& z) {
    std::vector<int> inv(y.size());
    for (size_t e = 0; e < y.size(); ++e) inv[static_cast<size_t>(y[e])] = static_cast<int>(e);
    std::vector<int> out(x.size());
    for (size_t e = 0; e < x.size(); ++e)
        out[e] = z[static_cast<size_t>(inv[static_cast<size_t>(x[e])])];
    return out;
}

std::optional<std::vector<int>> group_maltsev_solve(
    const PermDomainInstance& sp,
    const std::vector<std::pair<int, std::vector<int>>>& pins) {
    std::vector<std::vector<char>> alive;
    for (const auto& dom : sp.domains)
        alive.push_back(std::vector<char>(dom.size(), 1));
    for (const auto& [v, perm] : pins) {
        const auto& dom = sp.domains.at(static_cast<size_t>(v));
        auto it = std::find(dom.begin(), dom.end(), perm);
        if (it == dom.end())
            throw ValidationError("pinned permutation is not in the domain of v" +
                                  std::to_string(v));
        std::fill(alive[static_cast<size_t>(v)].begin(),
                  alive[static_cast<size_t>(v)].end(), 0);
        alive[static_cast<size_t>(v)][static_cast<size_t>(it - dom.begin())] = 1;
    }
    std::vector<int> out;
    if (!solve_rec(sp, std::move(alive), out)) return std::nullopt;
    return out;
}

bool is_consistent_collection(const ConsistentCollection& c, const Structure& h) {
    Structure hc = complete_domains(h);
    int nc = static_cast<int>(c.p.constraints.size());
    if (static_cast<int>(c.perms.size()) != nc) return false;
    for (int c1 = 0; c1 < nc; ++c1)
        for (int c2 = c1; c2 < nc; ++c2) {
            const Constraint& k1 = c.p.constraints[static_cast<size_t>(c1)];
            const Constraint& k2 = c.p.constraints[static_cast<size_t>(c2)];
            std::vector<std::pair<size_t, size_t>> shared;
            for (size_t s = 0; s < k1.scope.size(); ++s)
                for (size_t t = 0; t < k2.scope.size(); ++t)
                    if (k1.scope[s] == k2.scope[t] && !(c1 == c2 && s == t))
                        shared.push_back({s, t});
            if (shared.empty()) continue;
            const Relation& r1 = hc.relations[static_cast<size_t>(k1.relation)];
            const Relation& r2 = hc.relations[static_cast<size_t>(k2.relation)];
            const auto& f1 = c.perms[static_cast<size_t>(c1)];
            const auto& f2 = c.perms[static_cast<size_t>(c2)];
            for (size_t x = 0; x < r1.tuples.size(); ++x)
                for (size_t y = 0; y < r2.tuples.size(); ++y) {
                    bool agree = true;
                    for (auto [s, t] : shared)
                        agree = agree && r1.tuples[x][s] == r2.tuples[y][t];
                    if (!agree) continue;
                    const Tuple& ix = r1.tuples[static_cast<size_t>(f1[x])];
                    const Tuple& iy = r2.tuples[static_cast<size_t>(f2[y])];
                    for (auto [s, t] : shared)
                        if (ix[s] != iy[t]) return false;
                }
        }
    return true;
}

std::optional<ConsistentCollection> consistent_permutations(
    const Instance& p, const Structure& h, int c0, const std::vector<int>& phi0,
    int cap) {
    PermDomainInstance sp = build_sP(p, h, cap);
    if (c0 < 0 || c0 >= static_cast<int>(sp.bi.bp.variables.size()))
        throw ValidationError("pinned constraint index out of range");
    auto sol = group_maltsev_solve(sp, {{c0, phi0}});
    if (!sol) return std::nullopt;
    ConsistentCollection out;
    out.p = sp.bi.p;
    for (size_t v = 0; v < sol->size(); ++v)
        out.perms.push_back(sp.domains[v][static_cast<size_t>((*sol)[v])]);
    if (!is_consistent_collection(out, h))
        throw ValidationError("internal error: extracted collection inconsistent");
    return out;
}

SplitStructure build_Hf(const Structure& h, const OperationTable& f, long long p,
                        int sort, int elem) {
    validate(h);
    if (f.arity != 2) throw ValidationError("polynomial must be binary");
    std::vector<int> sizes;
    for (const Sort& s : h.sorts) sizes.push_back(s.size());
    if (f.sizes != sizes)
        throw ValidationError("polynomial domains do not match the structure");
    if (!is_p_automorphic(f, p))
        throw ValidationError("polynomial is not p-automorphic");
    int n = sizes.at(static_cast<size_t>(sort));
    std::vector<int> row(static_cast<size_t>(n));
    for (int x = 0; x < n; ++x) row[static_cast<size_t>(x)] = f.apply(sort, {elem, x});
    if (permutation_order(row) != p)
        throw ValidationError("the witness row does not have order p");

    SplitStructure out;
    out.split_sort = sort;
    out.prime_sort = sort;
    std::vector<char> in_b(static_cast<size_t>(n), 0);
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int x = 0; x < n; ++x) {
        if (seen[static_cast<size_t>(x)]) continue;
        std::vector<int> cyc;
        int y = x;
        do {
            seen[static_cast<size_t>(y)] = 1;
            cyc.push_back(y);
            y = row[static_cast<size_t>(y)];
        } while (y != x);
        if (cyc.size() > 1)
            for (int e : cyc) in_b[static_cast<size_t>(e)] = 1;
    }
    for (int e = 0; e < n; ++e)
        if (in_b[static_cast<size_t>(e)]) out.orbit_union.push_back(e);

    out.prime_map.assign(static_cast<size_t>(n), -1);
    out.dprime_map.assign(static_cast<size_t>(n), -1);
    const Sort& src = h.sorts[static_cast<size_t>(sort)];
    Sort prime{src.name + "'", {}}, dprime{src.name + "''", {}};
    for (int e = 0; e < n; ++e) {
        if (e != elem) {
            out.prime_map[static_cast<size_t>(e)] = prime.size();
            prime.elements.push_back(src.elements[static_cast<size_t>(e)]);
        }
        if (!in_b[static_cast<size_t>(e)]) {
            out.dprime_map[static_cast<size_t>(e)] = dprime.size();
            dprime.elements.push_back(src.elements[static_cast<size_t>(e)]);
        }
    }
    out.hf.sorts = h.sorts;
    out.hf.sorts[static_cast<size_t>(sort)] = prime;
    out.dprime_sort = static_cast<int>(out.hf.sorts.size());
    out.hf.sorts.push_back(dprime);

    auto restrict_rel = [&](const Relation& r, const std::string& suffix,
                            int new_sort, const std::vector<int>& emap,
                            int dropped_probe) {
        Relation nr;
        nr.symbol.name = r.symbol.name + suffix;
        nr.symbol.type = r.symbol.type;
        for (size_t c = 0; c < nr.symbol.type.size(); ++c)
            if (nr.symbol.type[c] == sort) nr.symbol.type[c] = new_sort;
        for (const Tuple& t : r.tuples) {
            Tuple nt = t;
            bool keep = true;
            for (size_t c = 0; c < t.size(); ++c) {
                if (r.symbol.type[c] != sort) continue;
                if (emap[static_cast<size_t>(t[c])] < 0) {
                    keep = false;
                    break;
                }
                nt[c] = emap[static_cast<size_t>(t[c])];
            }
            if (keep) nr.tuples.push_back(nt);
        }
        (void)dropped_probe;
        nr.normalize();
        return nr;
    };
    for (const Relation& r : h.relations) {
        bool mentions =
            std::find(r.symbol.type.begin(), r.symbol.type.end(), sort) !=
            r.symbol.type.end();
        if (!mentions) {
            out.hf.relations.push_back(r);
            continue;
        }
        out.hf.relations.push_back(restrict_rel(r, "'", sort, out.prime_map, elem));
        out.hf.relations.push_back(
            restrict_rel(r, "''", out.dprime_sort, out.dprime_map, -1));
    }
    validate(out.hf);
    return out;
}

ReduceResult reduce_instance(const Instance& p, const Structure& h,
                             const OperationTable& f, long long prime,
                             int cap) {
    validate(h);
    if (!is_p_automorphic(f, prime))
        throw ValidationError("polynomial is not p-automorphic");
    if (!is_polymorphism(f, h))
        throw ValidationError("polynomial is not a polymorphism");
    // first witness: a sort element whose row has order p
    int wsort = -1, welem = -1;
    for (size_t i = 0; i < h.sorts.size() && wsort < 0; ++i) {
        int n = h.sorts[i].size();
        for (int a = 0; a < n && wsort < 0; ++a) {
            std::vector<int> row(static_cast<size_t>(n));
            for (int x = 0; x < n; ++x)
                row[static_cast<size_t>(x)] = f.apply(static_cast<int>(i), {a, x});
            if (permutation_order(row) == prime) {
                wsort = static_cast<int>(i);
                welem = a;
            }
        }
    }
    if (wsort < 0) throw ValidationError("no witness row of order p");
    SplitStructure split = build_Hf(h, f, prime, wsort, welem);

    // working copy: completed instance with one private relation per
    // constraint, so tuple deletions stay local to their constraint
    Structure hw = complete_domains(h);
    Instance pc = complete_instance(p, hw);
    Structure hx;
    hx.sorts = hw.sorts;
    Instance px;
    px.variables = pc.variables;
    for (size_t c = 0; c < pc.constraints.size(); ++c) {
        Relation r = hw.relations[static_cast<size_t>(pc.constraints[c].relation)];
        r.symbol.name = "C" + std::to_string(c);
        hx.relations.push_back(std::move(r));
        px.constraints.push_back({static_cast<int>(c), pc.constraints[c].scope});
    }

    ReduceResult out;
    out.witness_sort = wsort;
    out.witness_elem = welem;
    out.orbit_union = split.orbit_union;

    auto solutions_through = [&](int c, const Tuple& a) {
        // count of solutions of the working instance sending the
        // constraint's scope to the tuple, reduced mod prime
        const Constraint& k = px.constraints[static_cast<size_t>(c)];
        Pins pins;
        for (size_t s = 0; s < k.scope.size(); ++s) {
            auto it = pins.find(k.scope[s]);
            if (it != pins.end() && it->second != a[s]) return 0LL;
            pins[k.scope[s]] = a[s];
        }
        long long total = 0;
        for_each_hom(px, hx, pins, {}, [&](const std::vector<int>&) {
            ++total;
            return true;
        });
        return total;
    };

    // deletion fixpoint: a tuple through the witness element survives
    // only if the permutation it induces extends to a consistent
    // collection of the current instance
    bool changed = true;
    while (changed) {
        changed = false;
        ++out.ledger.rounds;
        bool closed = true;
        for (const Relation& r : hx.relations)
            closed = closed && relation_f_closed(f, r);
        std::optional<PermDomainInstance> sp;
        if (closed) sp = build_sP(px, hx, cap);
        for (size_t c = 0; c < px.constraints.size() && !changed; ++c) {
            const Constraint& k = px.constraints[c];
            Relation& r = hx.relations[static_cast<size_t>(k.relation)];
            for (size_t s = 0; s < k.scope.size() && !changed; ++s) {
                if (r.symbol.type[s] != wsort) continue;
                for (const Tuple& a : std::vector<Tuple>(r.tuples)) {
                    if (a[s] != welem) continue;
                    bool keep;
                    bool brute = !closed;
                    if (closed) {
                        std::vector<int> phi0;
                        for (const Tuple& x : r.tuples)
                            phi0.push_back(tuple_index(r, poly_image(f, r, a, x)));
                        keep = group_maltsev_solve(*sp, {{static_cast<int>(c), phi0}})
                                   .has_value();
                    } else {
                        keep = solutions_through(static_cast<int>(c), a) != 0;
                    }
                    if (keep) continue;
                    r.tuples.erase(r.tuples.begin() + tuple_index(r, a));
                    out.ledger.deletions.push_back({static_cast<int>(c), a, brute});
                    changed = true;
                    break;
                }
            }
        }
    }

    // marking: a variable keeps the witness element (and loses the
    // nontrivial orbits) exactly when a tuple through it survived
    std::vector<char> orbit_reduced(px.variables.size(), 0);
    bool closed = true;
    for (const Relation& r : hx.relations)
        closed = closed && relation_f_closed(f, r);
    for (size_t c = 0; c < px.constraints.size(); ++c) {
        const Constraint& k = px.constraints[c];
        const Relation& r = hx.relations[static_cast<size_t>(k.relation)];
        for (size_t s = 0; s < k.scope.size(); ++s) {
            if (r.symbol.type[s] != wsort) continue;
            int v = k.scope[s];
            if (orbit_reduced[static_cast<size_t>(v)]) continue;
            for (const Tuple& a : r.tuples) {
                if (a[s] != welem) continue;
                if (!closed) {
                    // direct audit: orbit values must cancel mod p
                    long long in_orbit = 0;
                    Pins none;
                    for_each_hom(px, hx, none, {}, [&](const std::vector<int>& sol) {
                        if (std::binary_search(split.orbit_union.begin(),
                                               split.orbit_union.end(),
                                               sol[static_cast<size_t>(v)]))
                            ++in_orbit;
                        return true;
                    });
                    if (in_orbit % prime != 0)
                        throw ValidationError(
                            "orbit cancellation audit failed for variable " +
                            px.variables[static_cast<size_t>(v)].name);
                }
                ReduceLedger::OrbitDrop drop;
                drop.variable = v;
                drop.constraint = static_cast<int>(c);
                drop.pin_tuple = a;
                drop.brute_forced = !closed;
                std::vector<char> seen(
                    static_cast<size_t>(h.sorts[static_cast<size_t>(wsort)].size()), 0);
                for (int e : split.orbit_union) {
                    if (seen[static_cast<size_t>(e)]) continue;
                    std::vector<int> cyc;
                    int y = e;
                    do {
                        seen[static_cast<size_t>(y)] = 1;
                        cyc.push_back(y);
                        y = f.apply(wsort, {welem, y});
                    } while (y != e);
                    drop.orbits.push_back(cyc);
                }
                out.ledger.orbit_drops.push_back(std::move(drop));
                orbit_reduced[static_cast<size_t>(v)] = 1;
                break;
            }
        }
    }

    // assemble the output over the split sorts
    out.structure.sorts = hx.sorts;
    out.structure.sorts[static_cast<size_t>(wsort)] =
        split.hf.sorts[static_cast<size_t>(split.prime_sort)];
    int dsort = static_cast<int>(out.structure.sorts.size());
    out.structure.sorts.push_back(
        split.hf.sorts[static_cast<size_t>(split.dprime_sort)]);
    out.instance.variables = px.variables;
    for (size_t v = 0; v < out.instance.variables.size(); ++v)
        if (out.instance.variables[v].sort == wsort && orbit_reduced[v])
            out.instance.variables[v].sort = dsort;
    for (size_t c = 0; c < px.constraints.size(); ++c) {
        const Constraint& k = px.constraints[c];
        const Relation& r = hx.relations[static_cast<size_t>(k.relation)];
        Relation nr;
        nr.symbol.name = r.symbol.name;
        nr.symbol.type = r.symbol.type;
        for (size_t s = 0; s < k.scope.size(); ++s)
            if (r.symbol.type[s] == wsort)
                nr.symbol.type[s] =
                    orbit_reduced[static_cast<size_t>(k.scope[s])] ? dsort : wsort;
        for (const Tuple& t : r.tuples) {
            Tuple nt = t;
            bool keep = true;
            for (size_t s = 0; s < t.size() && keep; ++s) {
                if (r.symbol.type[s] != wsort) continue;
                const std::vector<int>& emap =
                    orbit_reduced[static_cast<size_t>(k.scope[s])]
                        ? split.dprime_map
                        : split.prime_map;
                if (emap[static_cast<size_t>(t[s])] < 0)
                    keep = false;
                else
                    nt[s] = emap[static_cast<size_t>(t[s])];
            }
            if (keep) nr.tuples.push_back(nt);
        }
        nr.normalize();
        out.structure.relations.push_back(std::move(nr));
        out.instance.constraints.push_back({static_cast<int>(c), k.scope});
    }
    validate(out.structure);
    validate_instance(out.instance, out.structure);
    return out;
}

}  // namespace modcsp
