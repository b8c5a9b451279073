#include "modcsp/obstruction.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "modcsp/homcount.hpp"
#include "modcsp/tables.hpp"

namespace modcsp {

namespace {

int pos_of(const std::vector<int>& coords, int v) {
    auto it = std::lower_bound(coords.begin(), coords.end(), v);
    if (it == coords.end() || *it != v) return -1;
    return static_cast<int>(it - coords.begin());
}

Tuple project_tuple(const Tuple& t, const std::vector<int>& positions) {
    Tuple out;
    out.reserve(positions.size());
    for (int p : positions) out.push_back(t[static_cast<size_t>(p)]);
    return out;
}

std::vector<int> witness_positions(const EliminationState& st) {
    std::vector<int> out;
    for (int v : st.witness_coords) {
        int q = pos_of(st.coords, v);
        if (q < 0) throw ValidationError("witness coordinate missing from the relation");
        out.push_back(q);
    }
    return out;
}

bool projected_member(const Relation& rel, const std::vector<int>& positions,
                      const Tuple& w) {
    for (const Tuple& t : rel.tuples)
        if (project_tuple(t, positions) == w) return true;
    return false;
}

// sorted values the extensions of w (over the witness coordinates other
// than z) take at coordinate z
std::vector<int> ext_values(const EliminationState& st, const Tuple& w, int z) {
    std::vector<int> mpos;
    Tuple mval;
    for (size_t i = 0; i < st.witness_coords.size(); ++i) {
        if (st.witness_coords[i] == z) continue;
        int q = pos_of(st.coords, st.witness_coords[i]);
        if (q < 0) throw ValidationError("witness coordinate missing from the relation");
        mpos.push_back(q);
        mval.push_back(w[i]);
    }
    int zpos = pos_of(st.coords, z);
    if (zpos < 0) throw ValidationError("coordinate missing from the relation");
    std::set<int> vals;
    for (const Tuple& t : st.rel.tuples) {
        bool ok = true;
        for (size_t i = 0; i < mpos.size() && ok; ++i)
            ok = t[static_cast<size_t>(mpos[i])] == mval[i];
        if (ok) vals.insert(t[static_cast<size_t>(zpos)]);
    }
    return {vals.begin(), vals.end()};
}

std::vector<int> sorted_intersection(const std::vector<int>& a,
                                     const std::vector<int>& b) {
    std::vector<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(out));
    return out;
}

Tuple erase_index(const Tuple& t, size_t idx) {
    Tuple out = t;
    out.erase(out.begin() + static_cast<long>(idx));
    return out;
}

// joint modular elimination of coordinate z weighted by the gadget's
// pointed homomorphism counts: a projected tuple u survives iff
// sum over extensions (u,e) of hom(gadget | pins from u, x -> e) != 0 mod p
void gadget_eliminate(EliminationState& st, const GadgetWitness& gw, int z) {
    int zpos = pos_of(st.coords, z);
    if (zpos < 0) throw ValidationError("gadget target coordinate is absent");
    std::vector<int> ppos;
    for (int c : gw.pinned_coords) {
        int q = pos_of(st.coords, c);
        if (q < 0) throw ValidationError("gadget pin coordinate is absent");
        ppos.push_back(q);
    }
    std::vector<int> keep;
    for (size_t i = 0; i < st.coords.size(); ++i)
        if (static_cast<int>(i) != zpos) keep.push_back(static_cast<int>(i));

    std::map<Tuple, long long> hom_cache;
    std::map<Tuple, long long> weight;
    for (const Tuple& t : st.rel.tuples) {
        Tuple key;
        Pins pins;
        for (size_t i = 0; i < ppos.size(); ++i) {
            pins[static_cast<int>(i)] = t[static_cast<size_t>(ppos[i])];
            key.push_back(t[static_cast<size_t>(ppos[i])]);
        }
        pins[gw.x_var] = t[static_cast<size_t>(zpos)];
        key.push_back(t[static_cast<size_t>(zpos)]);
        auto [hit, fresh] = hom_cache.try_emplace(key, 0);
        if (fresh) hit->second = count_homs_mod(gw.gadget, st.dagger, st.p, pins);
        Tuple u = project_tuple(t, keep);
        weight[u] = (weight[u] + hit->second) % st.p;
    }

    Relation out;
    out.symbol.name = st.rel.symbol.name;
    for (int i : keep)
        out.symbol.type.push_back(st.rel.symbol.type[static_cast<size_t>(i)]);
    for (const auto& [u, w] : weight)
        if (w % st.p != 0) out.tuples.push_back(u);
    out.normalize();
    st.rel = std::move(out);
    st.coords.erase(st.coords.begin() + zpos);
}

// shared by step emission and certificate replay so both have identical
// semantics: restrictions, then gadget-weighted or plain modular
// elimination, then the recorded post-step witnesses
void apply_step(EliminationState& st, const ObstructionStep& step) {
    for (const auto& [var, allowed] : step.restrictions) {
        int q = pos_of(st.coords, var);
        if (q < 0) throw ValidationError("restriction on an absent coordinate");
        if (allowed.empty()) throw ValidationError("empty restriction set");
        std::vector<Tuple> kept;
        for (const Tuple& t : st.rel.tuples)
            if (std::find(allowed.begin(), allowed.end(),
                          t[static_cast<size_t>(q)]) != allowed.end())
                kept.push_back(t);
        st.rel.tuples = std::move(kept);
    }
    if (step.gadget) {
        if (step.target < 0) throw ValidationError("gadget step without a target");
        gadget_eliminate(st, *step.gadget, step.target);
    } else if (!step.eliminated.empty()) {
        std::vector<int> keep_pos;
        std::vector<int> keep_coord;
        for (size_t i = 0; i < st.coords.size(); ++i) {
            if (std::find(step.eliminated.begin(), step.eliminated.end(),
                          st.coords[i]) == step.eliminated.end()) {
                keep_pos.push_back(static_cast<int>(i));
                keep_coord.push_back(st.coords[i]);
            }
        }
        if (keep_coord.size() + step.eliminated.size() != st.coords.size())
            throw ValidationError("step eliminates an absent coordinate");
        st.rel = pr_p(st.rel, keep_pos, st.p);
        st.coords = keep_coord;
    }
    st.witness_coords = step.witness_coords;
    st.w1 = step.w1;
    st.w2 = step.w2;
    st.w3 = step.w3;
    st.wout = step.wout;
    st.chain.push_back(step);
}

Relation materialize_indicator(const Structure& dagger, long long poly_limit) {
    IndicatorLayout layout = indicator_layout(dagger, 3);
    std::vector<OperationTable> polys =
        enumerate_polymorphisms(dagger, 3, poly_limit);
    Relation rel;
    rel.symbol.name = "indicator3";
    rel.symbol.type.assign(static_cast<size_t>(layout.total()), 0);
    for (size_t s = 0; s < dagger.sorts.size(); ++s) {
        int n = dagger.sorts[s].size();
        for (int code = 0; code < n * n * n; ++code)
            rel.symbol.type[static_cast<size_t>(
                layout.var(static_cast<int>(s), code))] = static_cast<int>(s);
    }
    for (const OperationTable& f : polys) {
        Tuple t(static_cast<size_t>(layout.total()));
        for (size_t s = 0; s < dagger.sorts.size(); ++s)
            for (size_t code = 0; code < f.tables[s].size(); ++code)
                t[static_cast<size_t>(layout.var(static_cast<int>(s),
                                                 static_cast<int>(code)))] =
                    f.tables[s][code];
        rel.tuples.push_back(std::move(t));
    }
    rel.normalize();
    return rel;
}

StuckReport make_stuck(const EliminationState& st, std::string rule,
                       std::string detail, std::vector<std::vector<int>> b_sets,
                       std::vector<std::string> tried) {
    StuckReport r;
    r.rule = std::move(rule);
    r.detail = std::move(detail);
    r.coords = st.coords;
    r.relation = st.rel;
    r.b_sets = std::move(b_sets);
    r.rules_tried = std::move(tried);
    return r;
}

// commit the step if the witness pattern survives it; otherwise leave the
// state untouched so the next rule can be tried
bool try_step(EliminationState& st, ObstructionStep step,
              std::vector<std::string>& tried) {
    EliminationState copy = st;
    apply_step(copy, std::move(step));
    if (!pattern_holds(copy)) {
        tried.back() += " (pattern failed)";
        return false;
    }
    st = std::move(copy);
    return true;
}

ObstructionStep base_step(const EliminationState& st, std::string rule) {
    ObstructionStep s;
    s.rule = std::move(rule);
    s.witness_coords = st.witness_coords;
    s.w1 = st.w1;
    s.w2 = st.w2;
    s.w3 = st.w3;
    s.wout = st.wout;
    return s;
}

// role of a witness coordinate: 0 when w2 = w3 there (diagonal included),
// 1 when w1 = w2 != w3
int coord_role(const EliminationState& st, size_t idx) {
    if (st.w2[idx] == st.w3[idx]) return 0;
    if (st.w1[idx] == st.w2[idx]) return 1;
    throw ValidationError("degenerate witness pattern at a coordinate");
}

bool is_diagonal(const EliminationState& st, size_t idx) {
    return st.w1[idx] == st.w2[idx] && st.w2[idx] == st.w3[idx];
}

std::optional<StuckReport> reduce_to_binary(
    EliminationState& st, const EliminationTools& tools,
    const std::function<int(const EliminationState&, const std::vector<int>&)>&
        prefer = {}) {
    while (st.witness_coords.size() > 2) {
        std::vector<int> side0, side1;  // coordinates by role
        for (size_t i = 0; i < st.witness_coords.size(); ++i)
            (coord_role(st, i) == 0 ? side0 : side1)
                .push_back(st.witness_coords[i]);
        // candidate order: degenerate (all-equal) coordinates, then the
        // preferred coordinate, then the rest; a side must keep one member
        std::vector<int> candidates;
        auto add = [&](int u) {
            if (std::find(candidates.begin(), candidates.end(), u) ==
                candidates.end())
                candidates.push_back(u);
        };
        if (side0.size() >= 2)
            for (int u : side0) {
                size_t idx = static_cast<size_t>(pos_of(st.witness_coords, u));
                if (is_diagonal(st, idx)) add(u);
            }
        if (side1.size() >= 2) {
            if (prefer) {
                int u = prefer(st, side1);
                if (u >= 0) add(u);
            }
            for (int u : side1) add(u);
        }
        if (side0.size() >= 2)
            for (int u : side0) add(u);
        if (candidates.empty())
            throw ValidationError("witness sides exhausted before reaching arity 2");
        std::optional<StuckReport> last;
        bool progressed = false;
        for (int v : candidates) {
            auto r = eliminate_witness_coordinate(st, v, tools);
            if (!r) {
                progressed = true;
                break;
            }
            last = r;
        }
        if (!progressed) return last;
    }
    int r0 = coord_role(st, 0), r1 = coord_role(st, 1);
    if (r0 + r1 != 1)
        return make_stuck(st, "terminal",
                          "the final two coordinates do not pair one left-equal "
                          "with one right-equal role",
                          {}, {});
    return std::nullopt;
}

std::string set_to_string(const std::vector<int>& s) {
    std::ostringstream os;
    os << '{';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << '}';
    return os.str();
}

}  // namespace

bool pattern_holds(const EliminationState& st) {
    std::vector<int> wp = witness_positions(st);
    return projected_member(st.rel, wp, st.w1) &&
           projected_member(st.rel, wp, st.w2) &&
           projected_member(st.rel, wp, st.w3) &&
           !projected_member(st.rel, wp, st.wout);
}

EliminationState initial_state(const Structure& h, long long p,
                               const ObstructionBudget& budget) {
    validate(h);
    if (!is_prime(p)) throw ValidationError("modulus must be prime");
    EliminationState st;
    st.p = p;
    DaggerResult dag = build_H_dagger(h, p, budget.closure, budget.poly_limit);
    st.dagger = dag.expansion;
    st.rel = materialize_indicator(st.dagger, budget.poly_limit);
    st.coords.resize(st.rel.symbol.type.size());
    for (size_t i = 0; i < st.coords.size(); ++i)
        st.coords[i] = static_cast<int>(i);

    IndicatorCoordinates ic = indicator_coordinates(st.dagger);
    std::map<int, std::array<int, 4>> by_var;  // w1, w2, w3, wout per variable
    for (size_t i = 0; i < ic.I_vars.size(); ++i)
        by_var[ic.I_vars[i]] = {ic.a[i], ic.b[i], ic.b[i], ic.a[i]};
    for (size_t j = 0; j < ic.J_vars.size(); ++j)
        by_var[ic.J_vars[j]] = {ic.c[j], ic.c[j], ic.d[j], ic.d[j]};
    for (const auto& [v, vals] : by_var) {
        st.witness_coords.push_back(v);
        st.w1.push_back(vals[0]);
        st.w2.push_back(vals[1]);
        st.w3.push_back(vals[2]);
        st.wout.push_back(vals[3]);
    }
    return st;
}

EliminationTools make_tools(const Structure& h, const EliminationState& st,
                            const ObstructionBudget& budget) {
    EliminationTools tools;
    tools.p = st.p;
    tools.gadget = budget.gadget;
    tools.conservative = is_p_conservative(h, st.p, budget.closure).certified;
    tools.mauts = m_automorphisms(st.dagger);
    tools.two_subalgebras.assign(h.sorts.size(), {});
    for (const PSubalgebra& ps : p_subalgebras(h, st.p, budget.closure))
        if (ps.elements.size() == 2)
            tools.two_subalgebras[static_cast<size_t>(ps.sort)].push_back(
                ps.elements);
    return tools;
}

std::optional<GadgetWitness> find_gadget(
    const Structure& h, long long p, const std::vector<std::vector<int>>& pins,
    const std::vector<int>& pin_sorts,
    const std::vector<std::vector<int>>& targets, int target_sort,
    const GadgetBudget& budget,
    const std::function<bool(const GadgetWitness&)>& accept) {
    if (pins.size() != 3 || targets.size() != 3)
        throw ValidationError("gadget search needs three pin rows and three targets");
    int m = static_cast<int>(pin_sorts.size());
    long long tried = 0;

    struct AtomC {
        int rel;
        std::vector<int> scope;  // symbol ids: [0,m) pins, m is x, then aux
    };

    // atom universe per auxiliary-vertex count, shared across atom counts
    std::vector<std::vector<AtomC>> atoms_by_k(
        static_cast<size_t>(budget.max_aux) + 1);
    for (int k = 0; k <= budget.max_aux; ++k) {
        int nsym = m + 1 + k;
        for (size_t r = 0; r < h.relations.size(); ++r) {
            int ar = h.relations[r].symbol.arity();
            std::vector<int> scope(static_cast<size_t>(ar), 0);
            while (true) {
                bool ok = true;
                bool mentions = false;
                for (int j = 0; j < ar && ok; ++j) {
                    int s = scope[static_cast<size_t>(j)];
                    int need = h.relations[r].symbol.type[static_cast<size_t>(j)];
                    if (s < m)
                        ok = pin_sorts[static_cast<size_t>(s)] == need;
                    else if (s == m)
                        ok = target_sort == need;
                    if (s >= m) mentions = true;
                }
                if (ok && mentions)
                    atoms_by_k[static_cast<size_t>(k)].push_back(
                        {static_cast<int>(r), scope});
                int j = ar - 1;
                while (j >= 0 && scope[static_cast<size_t>(j)] == nsym - 1)
                    scope[static_cast<size_t>(j--)] = 0;
                if (j < 0) break;
                ++scope[static_cast<size_t>(j)];
            }
        }
    }

    auto try_candidate =
        [&](const std::vector<AtomC>& chosen,
            int k) -> std::optional<GadgetWitness> {
        std::vector<int> aux_sort(static_cast<size_t>(k), -1);
        std::vector<bool> used(static_cast<size_t>(k), false);
        for (const AtomC& a : chosen) {
            const RelationSymbol& sym =
                h.relations[static_cast<size_t>(a.rel)].symbol;
            for (size_t j = 0; j < a.scope.size(); ++j) {
                int s = a.scope[j];
                if (s <= m) continue;
                size_t ai = static_cast<size_t>(s - m - 1);
                used[ai] = true;
                int need = sym.type[j];
                if (aux_sort[ai] < 0)
                    aux_sort[ai] = need;
                else if (aux_sort[ai] != need)
                    return std::nullopt;
            }
        }
        for (bool u : used)
            if (!u) return std::nullopt;  // canonical: every aux vertex occurs

        Instance g;
        for (int i = 0; i < m; ++i)
            g.variables.push_back(
                {"p" + std::to_string(i), pin_sorts[static_cast<size_t>(i)]});
        g.variables.push_back({"x", target_sort});
        for (int i = 0; i < k; ++i)
            g.variables.push_back(
                {"t" + std::to_string(i), aux_sort[static_cast<size_t>(i)]});
        for (const AtomC& a : chosen) g.constraints.push_back({a.rel, a.scope});

        GadgetWitness w;
        w.gadget = g;
        w.x_var = m;
        w.targets = targets;
        for (int i = 0; i < 3; ++i) {
            long long c = 0;
            for (int e : targets[static_cast<size_t>(i)]) {
                Pins pp;
                for (int j = 0; j < m; ++j)
                    pp[j] = pins[static_cast<size_t>(i)][static_cast<size_t>(j)];
                pp[m] = e;
                c = (c + count_homs_mod(g, h, p, pp)) % p;
            }
            if (c == 0) return std::nullopt;
            w.counts.push_back(c);
        }
        if (accept && !accept(w)) return std::nullopt;
        return w;
    };

    for (int natoms = 0; natoms <= budget.max_atoms; ++natoms) {
        int kmax = natoms == 0 ? 0 : budget.max_aux;
        for (int k = 0; k <= kmax; ++k) {
            const std::vector<AtomC>& atoms = atoms_by_k[static_cast<size_t>(k)];
            if (natoms == 0) {
                if (++tried > budget.max_candidates) return std::nullopt;
                auto w = try_candidate({}, k);
                if (w) return w;
                continue;
            }
            if (atoms.empty()) continue;
            std::vector<size_t> idx(static_cast<size_t>(natoms), 0);
            while (true) {
                if (++tried > budget.max_candidates) return std::nullopt;
                std::vector<AtomC> chosen;
                for (size_t i : idx) chosen.push_back(atoms[i]);
                auto w = try_candidate(chosen, k);
                if (w) return w;
                // advance non-decreasing index vector
                int j = natoms - 1;
                while (j >= 0 && idx[static_cast<size_t>(j)] == atoms.size() - 1)
                    --j;
                if (j < 0) break;
                size_t next = idx[static_cast<size_t>(j)] + 1;
                for (int i = j; i < natoms; ++i)
                    idx[static_cast<size_t>(i)] = next;
            }
        }
    }
    return std::nullopt;
}

std::optional<StuckReport> eliminate_coordinate(EliminationState& st, int z,
                                                const EliminationTools& tools) {
    if (std::binary_search(st.witness_coords.begin(), st.witness_coords.end(), z))
        throw ValidationError("bulk elimination cannot target a witness coordinate");
    int zpos = pos_of(st.coords, z);
    if (zpos < 0) throw ValidationError("coordinate is not present");
    int sort_z = st.rel.symbol.type[static_cast<size_t>(zpos)];

    std::vector<std::vector<int>> B = {ext_values(st, st.w1, z),
                                       ext_values(st, st.w2, z),
                                       ext_values(st, st.w3, z)};
    for (const auto& b : B)
        if (b.empty())
            throw ValidationError("a witness tuple has no extension at the coordinate");
    std::vector<std::string> tried;

    // common extension element: pin it, then eliminate
    tried.push_back("pin-common");
    std::vector<int> common = sorted_intersection(sorted_intersection(B[0], B[1]), B[2]);
    if (!common.empty()) {
        ObstructionStep s = base_step(st, "pin-common");
        s.restrictions = {{z, {common[0]}}};
        s.eliminated = {z};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }

    // every extension set a singleton: the fibers have count 1
    tried.push_back("quantify-singletons");
    if (B[0].size() == 1 && B[1].size() == 1 && B[2].size() == 1) {
        ObstructionStep s = base_step(st, "quantify-singletons");
        s.eliminated = {z};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }

    // pairwise disjoint sets: restrict to one representative each
    if (tools.conservative) {
        tried.push_back("restrict-disjoint");
        if (sorted_intersection(B[0], B[1]).empty() &&
            sorted_intersection(B[0], B[2]).empty() &&
            sorted_intersection(B[1], B[2]).empty()) {
            std::vector<int> reps = {B[0][0], B[1][0], B[2][0]};
            std::sort(reps.begin(), reps.end());
            ObstructionStep s = base_step(st, "restrict-disjoint");
            s.restrictions = {{z, reps}};
            s.eliminated = {z};
            if (try_step(st, std::move(s), tried)) return std::nullopt;
        }
    }

    // a discovered 2-element subalgebra meeting each set exactly once
    tried.push_back("subalgebra");
    for (const std::vector<int>& D :
         tools.two_subalgebras[static_cast<size_t>(sort_z)]) {
        bool sep = true;
        for (const auto& b : B)
            sep = sep && sorted_intersection(b, D).size() == 1;
        if (!sep) continue;
        ObstructionStep s = base_step(st, "subalgebra");
        s.restrictions = {{z, D}};
        s.eliminated = {z};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }

    // fixed point of every cube automorphism, then a counting gadget
    tried.push_back("fixed-point");
    std::vector<std::vector<int>> Bp = B;
    std::vector<std::pair<int, std::vector<int>>> restr;
    if (tools.conservative) {
        // smallest 2-element set meeting all three (no common element here)
        std::vector<int> uni;
        for (const auto& b : B) uni.insert(uni.end(), b.begin(), b.end());
        std::sort(uni.begin(), uni.end());
        uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
        std::vector<int> best;
        for (size_t i = 0; i < uni.size() && best.empty(); ++i)
            for (size_t j = i + 1; j < uni.size() && best.empty(); ++j) {
                std::vector<int> D = {uni[i], uni[j]};
                bool hits = true;
                for (const auto& b : B)
                    hits = hits && !sorted_intersection(b, D).empty();
                if (hits) best = D;
            }
        if (!best.empty()) {
            restr = {{z, best}};
            for (auto& b : Bp) b = sorted_intersection(b, best);
        }
    }
    int n = st.dagger.sorts[static_cast<size_t>(sort_z)].size();
    bool fixed = false;
    for (int e1 : Bp[0]) {
        for (int e2 : Bp[1]) {
            for (int e3 : Bp[2]) {
                if (e1 == e2 || e2 == e3) {
                    fixed = true;
                } else {
                    int code = (e1 * n + e2) * n + e3;
                    bool all_fix = true;
                    for (const MAutomorphism& mau : tools.mauts)
                        if (m_auto_apply(mau, sort_z, code) != code) {
                            all_fix = false;
                            break;
                        }
                    fixed = all_fix;
                }
                if (fixed) break;
            }
            if (fixed) break;
        }
        if (fixed) break;
    }
    if (!fixed)
        return make_stuck(st, "fixed-point",
                          "every triple of " + set_to_string(Bp[0]) + "x" +
                              set_to_string(Bp[1]) + "x" + set_to_string(Bp[2]) +
                              " is moved by a cube automorphism",
                          Bp, tried);

    tried.push_back("gadget");
    std::vector<std::vector<int>> pins = {st.w1, st.w2, st.w3};
    std::vector<int> pin_sorts;
    for (int wp : witness_positions(st))
        pin_sorts.push_back(st.rel.symbol.type[static_cast<size_t>(wp)]);
    auto accept = [&](const GadgetWitness& gw) {
        GadgetWitness full = gw;
        full.pinned_coords = st.witness_coords;
        ObstructionStep s = base_step(st, "gadget");
        s.restrictions = restr;
        s.gadget = full;
        s.target = z;
        s.eliminated = {z};
        EliminationState copy = st;
        try {
            apply_step(copy, s);
        } catch (const ValidationError&) {
            return false;
        }
        return pattern_holds(copy);
    };
    auto gw = find_gadget(st.dagger, st.p, pins, pin_sorts, Bp, sort_z,
                          tools.gadget, accept);
    if (!gw)
        return make_stuck(st, "gadget",
                          "no counting gadget within budget keeps the witness "
                          "pattern over " +
                              set_to_string(Bp[0]) + "x" + set_to_string(Bp[1]) +
                              "x" + set_to_string(Bp[2]),
                          Bp, tried);
    gw->pinned_coords = st.witness_coords;
    ObstructionStep s = base_step(st, "gadget");
    s.restrictions = restr;
    s.gadget = *gw;
    s.target = z;
    s.eliminated = {z};
    if (try_step(st, std::move(s), tried)) return std::nullopt;
    return make_stuck(st, "exhausted",
                      "no bulk-elimination rule preserves the witness pattern",
                      Bp, tried);
}

std::optional<StuckReport> eliminate_witness_coordinate(
    EliminationState& st, int v, const EliminationTools& tools) {
    if (st.coords != st.witness_coords)
        throw ValidationError(
            "arity reduction requires all bulk coordinates eliminated first");
    int vi = pos_of(st.witness_coords, v);
    if (vi < 0) throw ValidationError("not a witness coordinate");
    size_t idx = static_cast<size_t>(vi);
    int sort_v = st.rel.symbol.type[idx];

    // orient so that v plays the right-equal role: w1,w2 agree at v
    bool mirrored = coord_role(st, idx) == 0;
    const Tuple& a1 = mirrored ? st.w3 : st.w1;
    const Tuple& a2 = st.w2;
    const Tuple& a3 = mirrored ? st.w1 : st.w3;

    std::vector<std::vector<int>> B = {ext_values(st, a1, v),
                                       ext_values(st, a2, v),
                                       ext_values(st, a3, v)};
    // extension values of the excluded tuple; it must stay excluded
    std::vector<int> Bout = ext_values(st, st.wout, v);
    std::vector<std::string> tried;

    auto in_out = [&](int e) {
        return std::binary_search(Bout.begin(), Bout.end(), e);
    };

    auto drop_step = [&](std::string rule) {
        ObstructionStep s = base_step(st, std::move(rule));
        s.witness_coords = st.witness_coords;
        s.witness_coords.erase(s.witness_coords.begin() + vi);
        s.w1 = erase_index(st.w1, idx);
        s.w2 = erase_index(st.w2, idx);
        s.w3 = erase_index(st.w3, idx);
        s.wout = erase_index(st.wout, idx);
        return s;
    };

    // common extension element avoiding the excluded tuple's fiber:
    // pin and eliminate
    tried.push_back("pin-common");
    std::vector<int> common = sorted_intersection(sorted_intersection(B[0], B[1]), B[2]);
    for (int e : common) {
        if (in_out(e)) continue;
        ObstructionStep s = drop_step("pin-common");
        s.restrictions = {{v, {e}}};
        s.eliminated = {v};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
        break;
    }

    // swapped pattern: pin the same-role coordinates to one of the two
    // constant tuples they carry, eliminate them, and rebuild the
    // membership split at v from the two resulting fibers
    tried.push_back("swap");
    std::vector<int> same_side;  // coordinates sharing v's role, v excluded
    for (size_t i = 0; i < st.witness_coords.size(); ++i)
        if (i != idx && coord_role(st, i) == coord_role(st, idx))
            same_side.push_back(st.witness_coords[i]);
    for (int which = 0; which < 2 && !same_side.empty(); ++which) {
        // pin values come from a1 (the c-side) or a3 (the d-side)
        const Tuple& pinsrc = which == 0 ? a1 : a3;
        // fibers at v of the two cross tuples under the chosen pins
        auto cross_fiber = [&](const Tuple& other) {
            Tuple probe = pinsrc;
            for (size_t i = 0; i < st.witness_coords.size(); ++i)
                if (i != idx && coord_role(st, i) != coord_role(st, idx))
                    probe[i] = other[i];
            return ext_values(st, probe, v);
        };
        std::vector<int> Fa = cross_fiber(a1);  // I-side values of the a-row
        std::vector<int> Fb = cross_fiber(a2);  // I-side values of the b-row
        std::vector<int> both = sorted_intersection(Fa, Fb);
        if (both.empty()) continue;
        std::vector<int> bnota, anotb;
        std::set_difference(Fb.begin(), Fb.end(), Fa.begin(), Fa.end(),
                            std::back_inserter(bnota));
        std::set_difference(Fa.begin(), Fa.end(), Fb.begin(), Fb.end(),
                            std::back_inserter(anotb));
        if (bnota.empty() && anotb.empty()) continue;
        bool role_swap = bnota.empty();  // split element comes from Fa \ Fb
        int cstar = both[0];
        int dstar = role_swap ? anotb[0] : bnota[0];

        ObstructionStep s = base_step(st, "swap");
        s.role_swap = role_swap;
        for (int u : same_side) {
            size_t ui = static_cast<size_t>(pos_of(st.witness_coords, u));
            s.restrictions.push_back({u, {pinsrc[ui]}});
        }
        s.eliminated = same_side;
        s.witness_coords.clear();
        Tuple n1, n2, n3, nout;
        for (size_t i = 0; i < st.witness_coords.size(); ++i) {
            bool kept = st.witness_coords[i] == v ||
                        std::find(same_side.begin(), same_side.end(),
                                  st.witness_coords[i]) == same_side.end();
            if (!kept) continue;
            s.witness_coords.push_back(st.witness_coords[i]);
            if (i == idx) {
                n1.push_back(cstar); n2.push_back(cstar);
                n3.push_back(dstar); nout.push_back(dstar);
            } else {
                int av = a1[i], bv = a2[i];  // other-role coordinate values
                if (role_swap) {
                    n1.push_back(bv); n2.push_back(av);
                    n3.push_back(av); nout.push_back(bv);
                } else {
                    n1.push_back(av); n2.push_back(bv);
                    n3.push_back(bv); nout.push_back(av);
                }
            }
        }
        if (mirrored) std::swap(n1, n3);
        s.w1 = n1; s.w2 = n2; s.w3 = n3; s.wout = nout;
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }

    // plain modular elimination: the three fibers have nonzero size mod p
    // and the excluded tuple's fiber cancels
    tried.push_back("quantify");
    if (static_cast<long long>(B[0].size()) % tools.p != 0 &&
        static_cast<long long>(B[1].size()) % tools.p != 0 &&
        static_cast<long long>(B[2].size()) % tools.p != 0 &&
        static_cast<long long>(Bout.size()) % tools.p == 0) {
        ObstructionStep s = drop_step("quantify");
        s.eliminated = {v};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }

    // a discovered 2-element subalgebra meeting each fiber exactly once
    // while the excluded tuple's fiber cancels within it
    tried.push_back("subalgebra");
    for (const std::vector<int>& D :
         tools.two_subalgebras[static_cast<size_t>(sort_v)]) {
        bool sep = true;
        for (const auto& b : B) sep = sep && sorted_intersection(b, D).size() == 1;
        sep = sep && static_cast<long long>(sorted_intersection(Bout, D).size()) %
                             tools.p ==
                         0;
        if (!sep) continue;
        ObstructionStep s = drop_step("subalgebra");
        s.restrictions = {{v, D}};
        s.eliminated = {v};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }

    // single-pointed counting gadget (no pinned vertices)
    tried.push_back("gadget");
    auto accept = [&](const GadgetWitness& gw) {
        ObstructionStep s = drop_step("gadget");
        s.gadget = gw;
        s.target = v;
        s.eliminated = {v};
        EliminationState copy = st;
        try {
            apply_step(copy, s);
        } catch (const ValidationError&) {
            return false;
        }
        return pattern_holds(copy);
    };
    auto gw = find_gadget(st.dagger, st.p, {{}, {}, {}}, {}, B, sort_v,
                          tools.gadget, accept);
    if (gw) {
        ObstructionStep s = drop_step("gadget");
        s.gadget = *gw;
        s.target = v;
        s.eliminated = {v};
        if (try_step(st, std::move(s), tried)) return std::nullopt;
    }
    return make_stuck(st, "exhausted",
                      "no arity-reduction rule applies at the coordinate with "
                      "fibers " +
                          set_to_string(B[0]) + "," + set_to_string(B[1]) + "," +
                          set_to_string(B[2]),
                      B, tried);
}

ObstructionCertificate state_to_certificate(const EliminationState& st,
                                            const ObstructionBudget& budget) {
    ObstructionCertificate cert;
    cert.p = st.p;
    cert.closure_budget = budget.closure;
    cert.poly_limit = budget.poly_limit;
    cert.chain = st.chain;
    cert.coords = st.coords;
    cert.relation = st.rel;
    cert.witness_coords = st.witness_coords;
    cert.w1 = st.w1;
    cert.w2 = st.w2;
    cert.w3 = st.w3;
    cert.wout = st.wout;
    return cert;
}

std::optional<ObstructionCertificate> conservative_obstruction(
    const Structure& h, long long p, const ObstructionBudget& budget,
    StuckReport* stuck) {
    ConservativityReport rep = is_p_conservative(h, p, budget.closure);
    if (!rep.certified)
        throw ValidationError("conservativity not certified within budget");
    EliminationState st = initial_state(h, p, budget);
    if (!pattern_holds(st))
        throw ValidationError(
            "the expansion keeps a polymorphism with the forbidden pattern; "
            "no obstruction exists within this budget");
    EliminationTools tools = make_tools(h, st, budget);
    tools.conservative = true;

    std::vector<int> bulk;
    for (int c : st.coords)
        if (!std::binary_search(st.witness_coords.begin(),
                                st.witness_coords.end(), c))
            bulk.push_back(c);
    for (int z : bulk) {
        auto r = eliminate_coordinate(st, z, tools);
        if (r) {
            if (stuck) *stuck = *r;
            return std::nullopt;
        }
    }

    // restrict every remaining coordinate to the values its witnesses use
    ObstructionStep s = base_step(st, "witness-range");
    for (size_t i = 0; i < st.witness_coords.size(); ++i) {
        std::vector<int> vals = {st.w1[i], st.w2[i], st.w3[i], st.wout[i]};
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        s.restrictions.push_back({st.witness_coords[i], vals});
    }
    apply_step(st, s);
    if (!pattern_holds(st))
        throw ValidationError("witness-range restriction broke the pattern");

    auto r = reduce_to_binary(st, tools);
    if (r) {
        if (stuck) *stuck = *r;
        return std::nullopt;
    }
    return state_to_certificate(st, budget);
}

ObstructionCertificate two_element_reduce(const ObstructionCertificate& cert,
                                          const Structure& h, long long p) {
    ObstructionBudget budget;
    budget.closure = cert.closure_budget;
    budget.poly_limit = cert.poly_limit;
    EliminationState st = initial_state(h, p, budget);
    for (const ObstructionStep& step : cert.chain) apply_step(st, step);
    if (st.rel.tuples != cert.relation.tuples)
        throw ValidationError("certificate does not replay to its final relation");
    if (!pattern_holds(st))
        throw ValidationError("certificate replay loses the witness pattern");
    EliminationTools tools = make_tools(h, st, budget);
    auto r = reduce_to_binary(st, tools);
    if (r)
        throw ValidationError("arity reduction stuck (" + r->rule +
                              "): " + r->detail);
    return state_to_certificate(st, budget);
}

ObstructionOutcome three_element_obstruction(const Structure& h, long long p,
                                             const ObstructionBudget& budget) {
    validate(h);
    if (h.sorts.size() != 1 || h.sorts[0].size() != 3)
        throw ValidationError("the dispatch needs a single 3-element domain");

    ObstructionOutcome out;
    EliminationState st = initial_state(h, p, budget);
    if (!pattern_holds(st))
        throw ValidationError(
            "the expansion keeps a polymorphism with the forbidden pattern; "
            "no obstruction exists within this budget");
    EliminationTools tools = make_tools(h, st, budget);
    if (tools.conservative) {
        StuckReport sr;
        out.certificate = conservative_obstruction(h, p, budget, &sr);
        if (!out.certificate) out.stuck = sr;
        return out;
    }

    // turn a blocking order-2 cube automorphism into an order-2
    // automorphic polynomial via the term tables, trying every relabeling
    auto table_route = [&]() -> std::optional<PAutomorphicPoly> {
        if (p != 2) return std::nullopt;
        const std::string path = std::string(MODCSP_DATA_DIR) + "/case_tables.json";
        std::vector<std::vector<int>> perms;
        std::vector<int> sigma = {0, 1, 2};
        do {
            perms.push_back(sigma);
        } while (std::next_permutation(sigma.begin(), sigma.end()));
        for (const MAutomorphism& mau : tools.mauts) {
            if (mau.order != 2) continue;
            for (const std::vector<int>& sg : perms) {
                std::vector<int> inv(3);
                for (int e = 0; e < 3; ++e) inv[static_cast<size_t>(sg[static_cast<size_t>(e)])] = e;
                const OperationTable* gs[3] = {&mau.g1, &mau.g2, &mau.g3};
                std::vector<OperationTable> cg(3);
                for (int j = 0; j < 3; ++j) {
                    OperationTable t;
                    t.arity = 3;
                    t.sizes = {3};
                    t.tables = {std::vector<int>(27)};
                    for (int x = 0; x < 3; ++x)
                        for (int y = 0; y < 3; ++y)
                            for (int zz = 0; zz < 3; ++zz) {
                                int val = gs[j]->apply(
                                    0, {inv[static_cast<size_t>(x)],
                                        inv[static_cast<size_t>(y)],
                                        inv[static_cast<size_t>(zz)]});
                                t.tables[0][static_cast<size_t>((x * 3 + y) * 3 + zz)] =
                                    sg[static_cast<size_t>(val)];
                            }
                    cg[static_cast<size_t>(j)] = t;
                }
                auto fp = case_table_polynomial(path, cg[0], cg[1], cg[2]);
                if (!fp) continue;
                OperationTable f;
                f.arity = 2;
                f.sizes = {3};
                f.tables = {std::vector<int>(9)};
                for (int x = 0; x < 3; ++x)
                    for (int y = 0; y < 3; ++y)
                        f.tables[0][static_cast<size_t>(x * 3 + y)] =
                            inv[static_cast<size_t>(fp->apply(
                                0, {sg[static_cast<size_t>(x)],
                                    sg[static_cast<size_t>(y)]}))];
                if (!is_p_automorphic(f, 2) || !is_polymorphism(f, h)) continue;
                PAutomorphicPoly poly;
                poly.f = f;
                poly.witness_sort = 0;
                for (int a = 0; a < 3; ++a) {
                    std::vector<int> row(3);
                    for (int y = 0; y < 3; ++y) row[static_cast<size_t>(y)] = f.apply(0, {a, y});
                    if (permutation_order(row) == 2) {
                        poly.witness_elem = a;
                        break;
                    }
                }
                return poly;
            }
        }
        return std::nullopt;
    };

    std::vector<int> bulk;
    for (int c : st.coords)
        if (!std::binary_search(st.witness_coords.begin(),
                                st.witness_coords.end(), c))
            bulk.push_back(c);
    for (int z : bulk) {
        auto r = eliminate_coordinate(st, z, tools);
        if (r) {
            if (r->rule == "fixed-point" || r->rule == "gadget") {
                auto poly = table_route();
                if (poly) {
                    out.poly = poly;
                    return out;
                }
            }
            out.stuck = *r;
            return out;
        }
    }

    // prefer eliminating a right-equal coordinate whose excluded value
    // leaves the discovered 2-element subalgebra
    std::function<int(const EliminationState&, const std::vector<int>&)> prefer;
    if (tools.two_subalgebras[0].size() == 1) {
        std::vector<int> D = tools.two_subalgebras[0][0];
        prefer = [D](const EliminationState& s,
                     const std::vector<int>& side) -> int {
            for (int u : side) {
                size_t ui = static_cast<size_t>(pos_of(s.witness_coords, u));
                bool c_in = std::find(D.begin(), D.end(), s.w1[ui]) != D.end();
                bool d_in = std::find(D.begin(), D.end(), s.w3[ui]) != D.end();
                if (c_in && !d_in) return u;
            }
            return -1;
        };
    }
    auto r = reduce_to_binary(st, tools, prefer);
    if (r) {
        if (p == 2 && (r->rule == "exhausted" || r->rule == "gadget")) {
            auto poly = table_route();
            if (poly) {
                out.poly = poly;
                return out;
            }
        }
        out.stuck = *r;
        return out;
    }
    out.certificate = state_to_certificate(st, budget);
    return out;
}

bool verify_certificate(const ObstructionCertificate& cert, const Structure& h,
                        long long p, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    try {
        if (cert.p != p) return fail("certificate was issued for a different modulus");
        ObstructionBudget budget;
        budget.closure = cert.closure_budget;
        budget.poly_limit = cert.poly_limit;
        EliminationState st = initial_state(h, p, budget);
        if (!pattern_holds(st))
            return fail(
                "initial pattern fails: the expansion keeps a polymorphism "
                "with the forbidden pattern");
        int i = 0;
        for (const ObstructionStep& step : cert.chain) {
            ++i;
            size_t nw = step.witness_coords.size();
            if (step.w1.size() != nw || step.w2.size() != nw ||
                step.w3.size() != nw || step.wout.size() != nw)
                return fail("step " + std::to_string(i) +
                            ": witness tuples do not match the coordinates");
            try {
                apply_step(st, step);
            } catch (const std::exception& e) {
                return fail("step " + std::to_string(i) + " (" + step.rule +
                            "): " + e.what());
            }
            if (!pattern_holds(st))
                return fail("step " + std::to_string(i) + " (" + step.rule +
                            "): witness pattern violated");
        }
        if (st.coords != cert.coords) return fail("final coordinate set mismatch");
        if (st.rel.tuples != cert.relation.tuples ||
            st.rel.symbol.type != cert.relation.symbol.type)
            return fail("final relation does not replay");
        if (st.witness_coords != cert.witness_coords || st.w1 != cert.w1 ||
            st.w2 != cert.w2 || st.w3 != cert.w3 || st.wout != cert.wout)
            return fail("final witnesses mismatch");
        if (st.coords.size() == 2 && !is_rectangular(st.rel))
            return fail("terminal binary relation is rectangular");
        return true;
    } catch (const std::exception& e) {
        return fail(std::string("replay error: ") + e.what());
    }
}

}  // namespace modcsp
