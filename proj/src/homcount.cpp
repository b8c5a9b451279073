#include "modcsp/homcount.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace modcsp {

bool is_prime(long long p) {
    if (p < 2) return false;
    for (long long d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

namespace {

struct HomSearch {
    const Instance& p;
    const Structure& h;
    const std::vector<std::vector<int>>& allowed;
    const std::function<bool(const std::vector<int>&)>& visit;
    std::vector<int> assign;
    std::vector<std::vector<int>> watching;  // variable -> constraint indices
    bool stopped = false;

    HomSearch(const Instance& p_, const Structure& h_,
              const std::vector<std::vector<int>>& allowed_,
              const std::function<bool(const std::vector<int>&)>& visit_)
        : p(p_), h(h_), allowed(allowed_), visit(visit_) {
        assign.assign(p.variables.size(), -1);
        watching.resize(p.variables.size());
        for (size_t ci = 0; ci < p.constraints.size(); ++ci)
            for (int v : p.constraints[ci].scope)
                watching[static_cast<size_t>(v)].push_back(static_cast<int>(ci));
    }

    // A constraint is feasible if some tuple matches all assigned scope
    // positions.
    bool feasible(int ci) const {
        const Constraint& c = p.constraints[static_cast<size_t>(ci)];
        const Relation& r = h.relations[static_cast<size_t>(c.relation)];
        for (const Tuple& t : r.tuples) {
            bool ok = true;
            for (size_t pos = 0; pos < c.scope.size(); ++pos) {
                int a = assign[static_cast<size_t>(c.scope[pos])];
                if (a >= 0 && a != t[pos]) { ok = false; break; }
            }
            if (ok) return true;
        }
        return false;
    }

    void run(size_t v) {
        if (stopped) return;
        if (v == p.variables.size()) {
            if (!visit(assign)) stopped = true;
            return;
        }
        if (assign[v] >= 0) {  // pinned
            if (check(v)) run(v + 1);
            return;
        }
        int sort = p.variables[v].sort;
        int n = h.sorts[static_cast<size_t>(sort)].size();
        const std::vector<int>* dom =
            allowed.empty() || allowed[v].empty() ? nullptr : &allowed[v];
        int count = dom ? static_cast<int>(dom->size()) : n;
        for (int i = 0; i < count && !stopped; ++i) {
            int e = dom ? (*dom)[static_cast<size_t>(i)] : i;
            assign[v] = e;
            if (check(v)) run(v + 1);
            assign[v] = -1;
        }
    }

    bool check(size_t v) const {
        for (int ci : watching[v])
            if (!feasible(ci)) return false;
        return true;
    }
};

}  // namespace

void for_each_hom(const Instance& p, const Structure& h, const Pins& pins,
                  const std::vector<std::vector<int>>& allowed,
                  const std::function<bool(const std::vector<int>&)>& visit) {
    HomSearch search(p, h, allowed, visit);
    for (const auto& [v, e] : pins) {
        if (v < 0 || v >= static_cast<int>(p.variables.size()))
            throw ValidationError("pin: unknown variable index");
        int sort = p.variables[static_cast<size_t>(v)].sort;
        if (e < 0 || e >= h.sorts[static_cast<size_t>(sort)].size())
            throw ValidationError("pin: element out of sort");
        search.assign[static_cast<size_t>(v)] = e;
    }
    // Pre-check feasibility of every constraint under pins alone.
    for (size_t ci = 0; ci < p.constraints.size(); ++ci)
        if (!search.feasible(static_cast<int>(ci))) return;
    search.run(0);
}

std::vector<std::vector<int>> enumerate_homs(const Instance& p,
                                             const Structure& h,
                                             const Pins& pins) {
    std::vector<std::vector<int>> out;
    for_each_hom(p, h, pins, {}, [&](const std::vector<int>& a) {
        out.push_back(a);
        return true;
    });
    return out;
}

long long count_homs(const Instance& p, const Structure& h, const Pins& pins) {
    long long n = 0;
    for_each_hom(p, h, pins, {}, [&](const std::vector<int>&) {
        ++n;
        return true;
    });
    return n;
}

long long count_homs_mod(const Instance& p, const Structure& h, long long prime,
                         const Pins& pins) {
    if (!is_prime(prime)) throw ValidationError("modulus is not prime");
    long long r = count_homs(p, h, pins) % prime;
    return r < 0 ? r + prime : r;
}

long long count_pointed(const Structure& g,
                        const std::vector<std::pair<int, int>>& xs,
                        const Structure& h,
                        const std::vector<std::vector<int>>& targets) {
    if (xs.size() != targets.size())
        throw ValidationError("count_pointed: xs/targets length mismatch");
    Instance p = structure_as_instance(g, h);
    // Variables of structure_as_instance are laid out sort by sort in
    // element order; recover the index of element (sort, e).
    std::vector<int> offset(g.sorts.size() + 1, 0);
    for (size_t i = 0; i < g.sorts.size(); ++i)
        offset[i + 1] = offset[i] + g.sorts[i].size();
    std::vector<std::vector<int>> allowed(p.variables.size());
    for (size_t k = 0; k < xs.size(); ++k) {
        auto [sort, elem] = xs[k];
        if (sort < 0 || sort >= static_cast<int>(g.sorts.size()) || elem < 0 ||
            elem >= g.sorts[static_cast<size_t>(sort)].size())
            throw ValidationError("count_pointed: bad distinguished point");
        int v = offset[static_cast<size_t>(sort)] + elem;
        std::vector<int> ts = targets[k];
        std::sort(ts.begin(), ts.end());
        for (int a : ts)
            if (a < 0 || a >= h.sorts[static_cast<size_t>(sort)].size())
                throw ValidationError("count_pointed: target out of sort");
        if (allowed[static_cast<size_t>(v)].empty()) {
            allowed[static_cast<size_t>(v)] = ts;
        } else {  // same point listed twice: intersect
            std::vector<int> both;
            std::set_intersection(allowed[static_cast<size_t>(v)].begin(),
                                  allowed[static_cast<size_t>(v)].end(),
                                  ts.begin(), ts.end(), std::back_inserter(both));
            if (both.empty()) return 0;
            allowed[static_cast<size_t>(v)] = both;
        }
    }
    long long n = 0;
    for_each_hom(p, h, {}, allowed, [&](const std::vector<int>&) {
        ++n;
        return true;
    });
    return n;
}

// --- Partitions -------------------------------------------------------------

int MultiPartition::total_classes() const {
    int n = 0;
    for (const std::vector<int>& c : classes)
        if (!c.empty()) n += *std::max_element(c.begin(), c.end()) + 1;
    return n;
}

bool refines(const MultiPartition& theta, const MultiPartition& gamma) {
    if (theta.classes.size() != gamma.classes.size()) return false;
    for (size_t i = 0; i < theta.classes.size(); ++i) {
        const std::vector<int>& t = theta.classes[i];
        const std::vector<int>& g = gamma.classes[i];
        if (t.size() != g.size()) return false;
        for (size_t x = 0; x < t.size(); ++x)
            for (size_t y = x + 1; y < t.size(); ++y)
                if (t[x] == t[y] && g[x] != g[y]) return false;
    }
    return true;
}

namespace {

// All restricted-growth strings of length n, lexicographic.
std::vector<std::vector<int>> set_partitions(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(static_cast<size_t>(std::max(n, 0)), 0);
    std::function<void(int, int)> rec = [&](int i, int maxc) {
        if (i == n) {
            out.push_back(a);
            return;
        }
        for (int c = 0; c <= maxc + 1; ++c) {
            a[static_cast<size_t>(i)] = c;
            rec(i + 1, std::max(maxc, c));
        }
    };
    if (n == 0)
        out.push_back({});
    else
        rec(0, -1);
    return out;
}

}  // namespace

PartitionLattice partition_lattice(const std::vector<int>& base_sizes, int cap) {
    long long total = std::accumulate(base_sizes.begin(), base_sizes.end(), 0LL);
    if (total > cap)
        throw ValidationError("partition lattice cap exceeded: base size " +
                              std::to_string(total) + " > " +
                              std::to_string(cap));
    PartitionLattice lat;
    lat.base_sizes = base_sizes;
    std::vector<std::vector<std::vector<int>>> per_sort;
    for (int n : base_sizes) per_sort.push_back(set_partitions(n));
    // Cartesian product across sorts, lexicographic.
    std::vector<size_t> idx(base_sizes.size(), 0);
    while (true) {
        MultiPartition mp;
        for (size_t i = 0; i < base_sizes.size(); ++i)
            mp.classes.push_back(per_sort[i][idx[i]]);
        lat.partitions.push_back(std::move(mp));
        size_t i = base_sizes.size();
        while (i > 0) {
            --i;
            if (++idx[i] < per_sort[i].size()) break;
            idx[i] = 0;
            if (i == 0) return lat;
        }
        if (base_sizes.empty()) return lat;
    }
}

WeightTable mobius_weights(const PartitionLattice& lattice) {
    size_t n = lattice.partitions.size();
    WeightTable w;
    w.top_down.assign(n, 0);
    w.bottom_up.assign(n, 0);
    // Order indices by total class count: ascending = coarsest first.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> nclasses(n);
    for (size_t i = 0; i < n; ++i)
        nclasses[i] = lattice.partitions[i].total_classes();
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return nclasses[a] < nclasses[b]; });

    // top_down: w(top) = 1, w(theta) = -sum over strictly coarser gamma.
    for (size_t oi = 0; oi < n; ++oi) {
        size_t i = order[oi];
        long long sum = 0;
        bool is_top = true;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (refines(lattice.partitions[i], lattice.partitions[j])) {
                is_top = false;
                sum += w.top_down[j];
            }
        }
        w.top_down[i] = is_top ? 1 : -sum;
    }
    // bottom_up: w(discrete) = 1, w(theta) = -sum over strictly finer gamma.
    for (size_t oi = n; oi-- > 0;) {
        size_t i = order[oi];
        long long sum = 0;
        bool is_bottom = true;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (refines(lattice.partitions[j], lattice.partitions[i])) {
                is_bottom = false;
                sum += w.bottom_up[j];
            }
        }
        w.bottom_up[i] = is_bottom ? 1 : -sum;
    }
    return w;
}

Quotient quotient_structure(const Structure& h, const MultiPartition& theta) {
    if (theta.classes.size() != h.sorts.size())
        throw ValidationError("quotient: partition/sort count mismatch");
    Quotient q;
    q.class_of = theta.classes;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        if (static_cast<int>(theta.classes[i].size()) != h.sorts[i].size())
            throw ValidationError("quotient: partition size mismatch");
        Sort s;
        s.name = h.sorts[i].name;
        int nc = theta.classes[i].empty()
                     ? 0
                     : *std::max_element(theta.classes[i].begin(),
                                         theta.classes[i].end()) + 1;
        for (int c = 0; c < nc; ++c) {
            std::string name;
            for (size_t e = 0; e < theta.classes[i].size(); ++e)
                if (theta.classes[i][e] == c) {
                    if (!name.empty()) name += "+";
                    name += h.sorts[i].elements[e];
                }
            s.elements.push_back(name);
        }
        q.structure.sorts.push_back(std::move(s));
    }
    for (const Relation& r : h.relations) {
        Relation nr;
        nr.symbol = r.symbol;
        for (const Tuple& t : r.tuples) {
            Tuple nt(t.size());
            for (size_t c = 0; c < t.size(); ++c)
                nt[c] = theta.classes[static_cast<size_t>(r.symbol.type[c])]
                                     [static_cast<size_t>(t[c])];
            nr.tuples.push_back(std::move(nt));
        }
        nr.normalize();
        q.structure.relations.push_back(std::move(nr));
    }
    return q;
}

namespace {

long long count_homs_structures(const Structure& g, const Structure& h,
                                const ElementPins& pins, bool injective) {
    Instance p = structure_as_instance(g, h);
    std::vector<int> offset(g.sorts.size() + 1, 0);
    for (size_t i = 0; i < g.sorts.size(); ++i)
        offset[i + 1] = offset[i] + g.sorts[i].size();
    Pins vp;
    for (const auto& [ge, a] : pins) {
        int v = offset[static_cast<size_t>(ge.first)] + ge.second;
        auto it = vp.find(v);
        if (it != vp.end() && it->second != a) return 0;  // conflicting pins
        vp[v] = a;
    }
    long long n = 0;
    for_each_hom(p, h, vp, {}, [&](const std::vector<int>& assign) {
        if (injective) {
            for (size_t i = 0; i < g.sorts.size(); ++i) {
                std::vector<int> seen;
                for (int e = 0; e < g.sorts[i].size(); ++e)
                    seen.push_back(assign[static_cast<size_t>(offset[i] + e)]);
                std::sort(seen.begin(), seen.end());
                if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
                    return true;  // not injective on this sort
            }
        }
        ++n;
        return true;
    });
    return n;
}

}  // namespace

long long count_injective(const Structure& g, const Structure& h,
                          const ElementPins& pins) {
    for (size_t i = 0; i < g.sorts.size(); ++i)
        if (g.sorts[i].size() > h.sorts[i].size()) return 0;
    return count_homs_structures(g, h, pins, true);
}

long long count_injective_mobius(const Structure& g, const Structure& h,
                                 const ElementPins& pins, int partition_cap) {
    std::vector<int> sizes;
    for (const Sort& s : g.sorts) sizes.push_back(s.size());
    PartitionLattice lat = partition_lattice(sizes, partition_cap);
    WeightTable w = mobius_weights(lat);
    // inj(G, H) = sum over partitions theta of G's base set of
    // mu(bottom, theta) * hom(G/theta, H); pins transfer to classes.
    long long total = 0;
    for (size_t t = 0; t < lat.partitions.size(); ++t) {
        Quotient q = quotient_structure(g, lat.partitions[t]);
        ElementPins qpins;
        for (const auto& [ge, a] : pins)
            qpins.push_back({{ge.first,
                              q.class_of[static_cast<size_t>(ge.first)]
                                        [static_cast<size_t>(ge.second)]},
                             a});
        total += w.bottom_up[t] *
                 count_homs_structures(q.structure, h, qpins, false);
    }
    return total;
}

long long eval_partition_function(const FpMatrix& m, const Digraph& g,
                                  long long prime) {
    if (!is_prime(prime)) throw ValidationError("modulus is not prime");
    int k = m.dim();
    for (const auto& [u, v] : g.edges)
        if (u < 0 || u >= g.n || v < 0 || v >= g.n)
            throw ValidationError("eval_partition_function: vertex out of range");
    std::vector<int> phi(static_cast<size_t>(g.n), 0);
    long long total = 0;
    std::function<void(int)> rec = [&](int v) {
        if (v == g.n) {
            long long prod = 1;
            for (const auto& [a, b] : g.edges) {
                prod = prod * m.rows[static_cast<size_t>(phi[static_cast<size_t>(a)])]
                                    [static_cast<size_t>(phi[static_cast<size_t>(b)])] %
                       prime;
                if (prod == 0) break;
            }
            total = (total + prod) % prime;
            return;
        }
        for (int c = 0; c < k; ++c) {
            phi[static_cast<size_t>(v)] = c;
            rec(v + 1);
        }
    };
    rec(0);
    return total;
}

}  // namespace modcsp
