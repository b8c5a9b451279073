#include "modcsp/autos.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace modcsp {

namespace {

MultiSortedMap compose_maps(const MultiSortedMap& outer,
                            const MultiSortedMap& inner) {
    MultiSortedMap out;
    for (size_t i = 0; i < inner.map.size(); ++i) {
        std::vector<int> m(inner.map[i].size());
        for (size_t e = 0; e < m.size(); ++e)
            m[e] = outer.map[i][static_cast<size_t>(inner.map[i][e])];
        out.map.push_back(std::move(m));
    }
    return out;
}

bool is_identity(const MultiSortedMap& phi) {
    for (const auto& m : phi.map)
        for (size_t e = 0; e < m.size(); ++e)
            if (m[e] != static_cast<int>(e)) return false;
    return true;
}

int map_order(const MultiSortedMap& phi) {
    MultiSortedMap cur = phi;
    int order = 1;
    while (!is_identity(cur)) {
        cur = compose_maps(phi, cur);
        ++order;
        if (order > 1000000) throw ValidationError("order computation diverged");
    }
    return order;
}

struct AutoSearch {
    const Structure& h;
    std::vector<std::vector<int>> image;  // per sort; -1 unassigned
    std::vector<std::vector<bool>> used;
    std::vector<Automorphism>& out;

    bool partial_ok(int sort, int elem) const {
        // every fully-mapped tuple must stay in its relation
        for (const Relation& r : h.relations) {
            bool touches = false;
            for (size_t q = 0; q < r.symbol.type.size(); ++q)
                if (r.symbol.type[q] == sort) touches = true;
            if (!touches) continue;
            for (const Tuple& t : r.tuples) {
                bool relevant = false, complete = true;
                Tuple img(t.size());
                for (size_t q = 0; q < t.size(); ++q) {
                    int s = r.symbol.type[q];
                    if (s == sort && t[q] == elem) relevant = true;
                    int v = image[static_cast<size_t>(s)][static_cast<size_t>(t[q])];
                    if (v < 0) {
                        complete = false;
                        break;
                    }
                    img[q] = v;
                }
                if (relevant && complete && !r.contains(img)) return false;
            }
        }
        return true;
    }

    void search(size_t sort, size_t elem) {
        if (sort == image.size()) {
            Automorphism a;
            a.map.map = image;
            a.order = map_order(a.map);
            out.push_back(std::move(a));
            return;
        }
        if (elem == image[sort].size()) {
            search(sort + 1, 0);
            return;
        }
        for (size_t v = 0; v < image[sort].size(); ++v) {
            if (used[sort][v]) continue;
            image[sort][elem] = static_cast<int>(v);
            used[sort][v] = true;
            if (partial_ok(static_cast<int>(sort), static_cast<int>(elem)))
                search(sort, elem + 1);
            used[sort][v] = false;
            image[sort][elem] = -1;
        }
    }
};

}  // namespace

std::vector<Automorphism> automorphisms(const Structure& h, long long guard) {
    long long space = 1;
    for (const Sort& s : h.sorts) {
        for (int k = 2; k <= s.size(); ++k) {
            space *= k;
            if (space > guard)
                throw ValidationError("automorphism search guard exceeded");
        }
    }
    std::vector<Automorphism> out;
    AutoSearch search{h, {}, {}, out};
    for (const Sort& s : h.sorts) {
        search.image.emplace_back(static_cast<size_t>(s.size()), -1);
        search.used.emplace_back(static_cast<size_t>(s.size()), false);
    }
    search.search(0, 0);
    return out;
}

std::vector<Automorphism> p_automorphisms(const Structure& h, long long p,
                                          long long guard) {
    if (!is_prime(p)) throw ValidationError("p must be prime");
    std::vector<Automorphism> out;
    for (Automorphism& a : automorphisms(h, guard))
        if (a.order == p) out.push_back(std::move(a));
    return out;
}

RigidReduction p_rigid_reduce(const Structure& h, long long p,
                              long long guard) {
    RigidReduction red;
    red.result = h;
    while (true) {
        std::vector<Automorphism> ps = p_automorphisms(red.result, p, guard);
        if (ps.empty()) break;
        const Automorphism& pi = ps.front();
        std::vector<std::vector<int>> keep(red.result.sorts.size());
        for (size_t i = 0; i < red.result.sorts.size(); ++i)
            for (int e = 0; e < red.result.sorts[i].size(); ++e)
                if (pi.map.map[i][static_cast<size_t>(e)] == e)
                    keep[i].push_back(e);
        Structure next = induced_substructure(red.result, keep);
        next.constants_flag = red.result.constants_flag;
        red.chain.push_back(pi);
        red.result = std::move(next);
    }
    return red;
}

int m_auto_apply(const MAutomorphism& m, int sort, int code) {
    int n = m.g1.sizes[static_cast<size_t>(sort)];
    std::vector<int> t = decode_args(code, n, 3);
    return encode_args({m.g1.apply(sort, t), m.g2.apply(sort, t),
                        m.g3.apply(sort, t)},
                       n);
}

namespace {

int m_auto_order(const MAutomorphism& m) {
    long long order = 1;
    for (size_t i = 0; i < m.g1.sizes.size(); ++i) {
        int n = m.g1.sizes[i];
        int cube = n * n * n;
        std::vector<int> perm(static_cast<size_t>(cube));
        for (int code = 0; code < cube; ++code)
            perm[static_cast<size_t>(code)] =
                m_auto_apply(m, static_cast<int>(i), code);
        int o = permutation_order(perm);
        if (o < 0) return -1;
        order = std::lcm(order, static_cast<long long>(o));
    }
    return static_cast<int>(order);
}

Pins m_auto_pins(const Structure& h, int which) {
    IndicatorLayout layout = indicator_layout(h, 3);
    Pins pins;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        int n = h.sorts[i].size();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                // g(a,b,b) = (a,b,b) and g(b,b,a) = (b,b,a) componentwise
                int abb[3] = {a, b, b}, bba[3] = {b, b, a};
                pins[layout.var(static_cast<int>(i), encode_args({a, b, b}, n))] =
                    abb[which];
                pins[layout.var(static_cast<int>(i), encode_args({b, b, a}, n))] =
                    bba[which];
            }
    }
    return pins;
}

}  // namespace

std::vector<MAutomorphism> m_automorphisms(const Structure& h,
                                           std::optional<long long> p,
                                           long long limit) {
    std::vector<std::vector<OperationTable>> components;
    for (int which = 0; which < 3; ++which)
        components.push_back(
            enumerate_polymorphisms(h, 3, limit, m_auto_pins(h, which)));
    long long product = 1;
    for (const auto& c : components) {
        product *= static_cast<long long>(c.size());
        if (product > limit)
            throw ValidationError("M-automorphism enumeration limit exceeded");
    }
    std::vector<MAutomorphism> out;
    for (const OperationTable& g1 : components[0])
        for (const OperationTable& g2 : components[1])
            for (const OperationTable& g3 : components[2]) {
                MAutomorphism m{g1, g2, g3, 1};
                int order = m_auto_order(m);
                if (order < 0) continue;  // bundling not bijective
                m.order = order;
                if (p && order != 1 && order != *p) continue;
                out.push_back(std::move(m));
            }
    return out;
}

std::vector<Automorphism> stab(
    const Structure& hn, const std::vector<std::pair<int, int>>& fixed,
    const std::optional<std::vector<std::pair<int, int>>>& stable,
    long long guard) {
    std::vector<Automorphism> out;
    std::set<std::pair<int, int>> a_set;
    if (stable) a_set.insert(stable->begin(), stable->end());
    for (Automorphism& pi : automorphisms(hn, guard)) {
        bool ok = true;
        for (auto [i, e] : fixed)
            if (pi.map.map[static_cast<size_t>(i)][static_cast<size_t>(e)] != e)
                ok = false;
        if (ok && stable)
            for (auto [i, e] : *stable)
                if (!a_set.count(
                        {i, pi.map.map[static_cast<size_t>(i)][static_cast<size_t>(e)]}))
                    ok = false;
        if (ok) out.push_back(std::move(pi));
    }
    return out;
}

std::optional<std::pair<int, int>> is_automorphism_stable(
    const std::vector<std::pair<int, int>>& A, const Structure& hn,
    long long guard) {
    std::vector<Automorphism> all = automorphisms(hn, guard);
    std::set<std::pair<int, int>> a_set(A.begin(), A.end());
    for (auto [sort, elem] : A) {
        // Stab(a, A) = { pi : pi(a) in A }
        std::vector<size_t> members;
        for (size_t k = 0; k < all.size(); ++k)
            if (a_set.count({sort, all[k].map.map[static_cast<size_t>(sort)]
                                                 [static_cast<size_t>(elem)]}))
                members.push_back(k);
        // subgroup test: closure under composition and inverse
        std::set<std::vector<std::vector<int>>> tables;
        for (size_t k : members) tables.insert(all[k].map.map);
        bool subgroup = true;
        for (size_t k1 : members) {
            MultiSortedMap inv;
            for (const auto& m : all[k1].map.map) {
                std::vector<int> im(m.size());
                for (size_t e = 0; e < m.size(); ++e)
                    im[static_cast<size_t>(m[e])] = static_cast<int>(e);
                inv.map.push_back(std::move(im));
            }
            if (!tables.count(inv.map)) subgroup = false;
            for (size_t k2 : members)
                if (!tables.count(
                        compose_maps(all[k1].map, all[k2].map).map))
                    subgroup = false;
            if (!subgroup) break;
        }
        if (subgroup) return std::pair<int, int>{sort, elem};
    }
    return std::nullopt;
}

}  // namespace modcsp
