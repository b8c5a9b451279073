#include "modcsp/polyclone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace modcsp {

namespace {

long long ipow(long long base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

int OperationTable::apply(int sort, const std::vector<int>& args) const {
    return tables[static_cast<size_t>(sort)]
                 [static_cast<size_t>(encode_args(args, sizes[static_cast<size_t>(sort)]))];
}

int encode_args(const std::vector<int>& args, int n) {
    int code = 0;
    for (int a : args) code = code * n + a;
    return code;
}

std::vector<int> decode_args(int code, int n, int arity) {
    std::vector<int> args(static_cast<size_t>(arity));
    for (int q = arity - 1; q >= 0; --q) {
        args[static_cast<size_t>(q)] = code % n;
        code /= n;
    }
    return args;
}

OperationTable projection_op(const std::vector<int>& sizes, int arity,
                             int which) {
    OperationTable f;
    f.arity = arity;
    f.sizes = sizes;
    for (int n : sizes) {
        std::vector<int> table(static_cast<size_t>(ipow(n, arity)));
        for (size_t code = 0; code < table.size(); ++code)
            table[code] = decode_args(static_cast<int>(code), n,
                                      arity)[static_cast<size_t>(which)];
        f.tables.push_back(std::move(table));
    }
    return f;
}

int IndicatorLayout::total() const {
    return offsets.empty()
               ? 0
               : offsets.back() +
                     static_cast<int>(ipow(sizes.back(), arity));
}

IndicatorLayout indicator_layout(const Structure& h, int arity) {
    IndicatorLayout layout;
    layout.arity = arity;
    int offset = 0;
    for (const Sort& s : h.sorts) {
        layout.sizes.push_back(s.size());
        layout.offsets.push_back(offset);
        offset += static_cast<int>(ipow(s.size(), arity));
    }
    return layout;
}

Instance indicator_instance(const Structure& h, int arity) {
    if (arity < 1) throw ValidationError("indicator arity must be >= 1");
    IndicatorLayout layout = indicator_layout(h, arity);
    Instance p;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        int n = h.sorts[i].size();
        long long count = ipow(n, arity);
        for (long long code = 0; code < count; ++code) {
            std::vector<int> t = decode_args(static_cast<int>(code), n, arity);
            std::string name = h.sorts[i].name + "(";
            for (size_t q = 0; q < t.size(); ++q) {
                if (q) name += ",";
                name += h.sorts[i].elements[static_cast<size_t>(t[q])];
            }
            name += ")";
            p.variables.push_back({name, static_cast<int>(i)});
        }
    }
    // one constraint per arity-tuple of tuples of each relation
    for (size_t j = 0; j < h.relations.size(); ++j) {
        const Relation& r = h.relations[j];
        size_t m = r.tuples.size();
        if (m == 0) continue;
        int s = r.symbol.arity();
        std::vector<size_t> pick(static_cast<size_t>(arity), 0);
        while (true) {
            Constraint c;
            c.relation = static_cast<int>(j);
            for (int q = 0; q < s; ++q) {
                std::vector<int> col(static_cast<size_t>(arity));
                for (int k = 0; k < arity; ++k)
                    col[static_cast<size_t>(k)] =
                        r.tuples[pick[static_cast<size_t>(k)]][static_cast<size_t>(q)];
                int sort = r.symbol.type[static_cast<size_t>(q)];
                c.scope.push_back(layout.var(
                    sort, encode_args(col, h.sorts[static_cast<size_t>(sort)].size())));
            }
            p.constraints.push_back(std::move(c));
            // odometer over tuple picks
            int k = arity - 1;
            while (k >= 0 && ++pick[static_cast<size_t>(k)] == m) {
                pick[static_cast<size_t>(k)] = 0;
                --k;
            }
            if (k < 0) break;
        }
    }
    return p;
}

OperationTable assignment_to_table(const std::vector<int>& assignment,
                                   const IndicatorLayout& layout) {
    OperationTable f;
    f.arity = layout.arity;
    f.sizes = layout.sizes;
    for (size_t i = 0; i < layout.sizes.size(); ++i) {
        long long count = ipow(layout.sizes[i], layout.arity);
        std::vector<int> table(static_cast<size_t>(count));
        for (long long code = 0; code < count; ++code)
            table[static_cast<size_t>(code)] =
                assignment[static_cast<size_t>(layout.var(
                    static_cast<int>(i), static_cast<int>(code)))];
        f.tables.push_back(std::move(table));
    }
    return f;
}

Pins table_pins(const OperationTable& f, const IndicatorLayout& layout) {
    Pins pins;
    for (size_t i = 0; i < f.tables.size(); ++i)
        for (size_t code = 0; code < f.tables[i].size(); ++code)
            pins[layout.var(static_cast<int>(i), static_cast<int>(code))] =
                f.tables[i][code];
    return pins;
}

std::vector<OperationTable> enumerate_polymorphisms(const Structure& h,
                                                    int arity, long long limit,
                                                    const Pins& pins) {
    IndicatorLayout layout = indicator_layout(h, arity);
    Instance p = indicator_instance(h, arity);
    std::vector<OperationTable> out;
    for_each_hom(p, h, pins, {}, [&](const std::vector<int>& sol) {
        if (static_cast<long long>(out.size()) >= limit)
            throw ValidationError("polymorphism enumeration limit exceeded");
        out.push_back(assignment_to_table(sol, layout));
        return true;
    });
    return out;
}

bool is_polymorphism(const OperationTable& f, const Structure& h) {
    if (f.sizes.size() != h.sorts.size()) return false;
    for (size_t i = 0; i < h.sorts.size(); ++i)
        if (f.sizes[i] != h.sorts[i].size()) return false;
    for (const Relation& r : h.relations) {
        size_t m = r.tuples.size();
        if (m == 0) continue;
        int s = r.symbol.arity();
        std::vector<size_t> pick(static_cast<size_t>(f.arity), 0);
        while (true) {
            Tuple image(static_cast<size_t>(s));
            for (int q = 0; q < s; ++q) {
                std::vector<int> col(static_cast<size_t>(f.arity));
                for (int k = 0; k < f.arity; ++k)
                    col[static_cast<size_t>(k)] =
                        r.tuples[pick[static_cast<size_t>(k)]][static_cast<size_t>(q)];
                image[static_cast<size_t>(q)] =
                    f.apply(r.symbol.type[static_cast<size_t>(q)], col);
            }
            if (!r.contains(image)) return false;
            int k = f.arity - 1;
            while (k >= 0 && ++pick[static_cast<size_t>(k)] == m) {
                pick[static_cast<size_t>(k)] = 0;
                --k;
            }
            if (k < 0) break;
        }
    }
    return true;
}

IndicatorCoordinates indicator_coordinates(const Structure& h) {
    IndicatorLayout layout = indicator_layout(h, 3);
    IndicatorCoordinates coords;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        int n = h.sorts[i].size();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                coords.I.push_back({static_cast<int>(i), {a, b, b}});
                coords.a.push_back(a);
                coords.b.push_back(b);
                coords.I_vars.push_back(layout.var(
                    static_cast<int>(i), encode_args({a, b, b}, n)));
            }
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a) {
                if (a == b) continue;
                coords.J.push_back({static_cast<int>(i), {b, b, a}});
                coords.c.push_back(b);
                coords.d.push_back(a);
                coords.J_vars.push_back(layout.var(
                    static_cast<int>(i), encode_args({b, b, a}, n)));
            }
    }
    std::set<int> used(coords.I_vars.begin(), coords.I_vars.end());
    used.insert(coords.J_vars.begin(), coords.J_vars.end());
    for (int v = 0; v < layout.total(); ++v)
        if (!used.count(v)) coords.E_vars.push_back(v);
    return coords;
}

namespace {

Pins maltsev_pins(const Structure& h) {
    IndicatorLayout layout = indicator_layout(h, 3);
    Pins pins;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        int n = h.sorts[i].size();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                pins[layout.var(static_cast<int>(i), encode_args({a, b, b}, n))] = a;
                pins[layout.var(static_cast<int>(i), encode_args({b, b, a}, n))] = a;
            }
    }
    return pins;
}

}  // namespace

std::optional<OperationTable> has_maltsev(const Structure& h) {
    IndicatorLayout layout = indicator_layout(h, 3);
    Instance p = indicator_instance(h, 3);
    std::optional<OperationTable> found;
    for_each_hom(p, h, maltsev_pins(h), {}, [&](const std::vector<int>& sol) {
        found = assignment_to_table(sol, layout);
        return false;  // first solution only
    });
    return found;
}

std::vector<OperationTable> maltsev_candidates(const Structure& h,
                                               long long limit) {
    return enumerate_polymorphisms(h, 3, limit, maltsev_pins(h));
}

bool is_maltsev(const OperationTable& m) {
    if (m.arity != 3) return false;
    for (size_t i = 0; i < m.sizes.size(); ++i) {
        int n = m.sizes[i];
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (m.apply(static_cast<int>(i), {a, b, b}) != a ||
                    m.apply(static_cast<int>(i), {b, b, a}) != a)
                    return false;
    }
    return true;
}

std::optional<RectViolation> is_rectangular(const Relation& r) {
    int n = r.symbol.arity();
    if (n < 2) throw ValidationError("rectangularity needs arity >= 2");
    for (int mask = 1; mask < (1 << n) - 1; ++mask) {
        std::vector<int> left, right;
        for (int q = 0; q < n; ++q)
            ((mask >> q) & 1 ? left : right).push_back(q);
        std::map<Tuple, std::vector<Tuple>> ext;  // pr_left -> sorted pr_right list
        for (const Tuple& t : r.tuples) {
            Tuple l, rt;
            for (int q : left) l.push_back(t[static_cast<size_t>(q)]);
            for (int q : right) rt.push_back(t[static_cast<size_t>(q)]);
            ext[l].push_back(rt);
        }
        for (auto& [key, v] : ext) std::sort(v.begin(), v.end());
        for (const auto& [ka, ea] : ext)
            for (const auto& [kb, eb] : ext) {
                if (ka == kb) continue;
                // need c in both, d in ea - eb
                for (const Tuple& c : ea) {
                    if (!std::binary_search(eb.begin(), eb.end(), c)) continue;
                    for (const Tuple& d : ea)
                        if (!std::binary_search(eb.begin(), eb.end(), d))
                            return RectViolation{left, ka, kb, c, d};
                    break;
                }
            }
    }
    return std::nullopt;
}

OperationTable compose(const OperationTable& g,
                       const std::vector<OperationTable>& fs) {
    if (static_cast<int>(fs.size()) != g.arity)
        throw ValidationError("compose: arity mismatch");
    for (const OperationTable& f : fs) {
        if (f.sizes != g.sizes) throw ValidationError("compose: sort mismatch");
        if (f.arity != fs[0].arity)
            throw ValidationError("compose: inner arities differ");
    }
    OperationTable out;
    out.arity = fs[0].arity;
    out.sizes = g.sizes;
    for (size_t i = 0; i < g.sizes.size(); ++i) {
        int n = g.sizes[i];
        long long count = ipow(n, out.arity);
        std::vector<int> table(static_cast<size_t>(count));
        for (long long code = 0; code < count; ++code) {
            std::vector<int> xs = decode_args(static_cast<int>(code), n, out.arity);
            std::vector<int> inner(fs.size());
            for (size_t k = 0; k < fs.size(); ++k)
                inner[k] = fs[k].apply(static_cast<int>(i), xs);
            table[static_cast<size_t>(code)] = g.apply(static_cast<int>(i), inner);
        }
        out.tables.push_back(std::move(table));
    }
    return out;
}

namespace {

struct TermParser {
    const std::string& s;
    size_t pos = 0;

    void skip() {
        while (pos < s.size() && s[pos] == ' ') ++pos;
    }
    Term parse() {
        skip();
        size_t start = pos;
        while (pos < s.size() && (isalnum(s[pos]) || s[pos] == '_')) ++pos;
        if (pos == start) throw ValidationError("term parse error at position " +
                                                std::to_string(pos));
        Term t;
        t.head = s.substr(start, pos - start);
        skip();
        if (pos < s.size() && s[pos] == '(') {
            ++pos;
            while (true) {
                t.args.push_back(parse());
                skip();
                if (pos >= s.size())
                    throw ValidationError("term parse error: unclosed '('");
                if (s[pos] == ',') {
                    ++pos;
                    continue;
                }
                if (s[pos] == ')') {
                    ++pos;
                    break;
                }
                throw ValidationError("term parse error at position " +
                                      std::to_string(pos));
            }
        }
        return t;
    }
};

}  // namespace

Term parse_term(const std::string& text) {
    TermParser p{text};
    Term t = p.parse();
    p.skip();
    if (p.pos != text.size())
        throw ValidationError("term parse error: trailing input");
    return t;
}

std::string term_to_string(const Term& t) {
    std::string out = t.head;
    if (!t.args.empty()) {
        out += "(";
        for (size_t i = 0; i < t.args.size(); ++i) {
            if (i) out += ",";
            out += term_to_string(t.args[i]);
        }
        out += ")";
    }
    return out;
}

OperationTable eval_term(const Term& t,
                         const std::map<std::string, OperationTable>& env,
                         const std::vector<std::string>& vars,
                         const std::vector<int>& sizes) {
    if (t.args.empty()) {
        for (size_t i = 0; i < vars.size(); ++i)
            if (vars[i] == t.head)
                return projection_op(sizes, static_cast<int>(vars.size()),
                                     static_cast<int>(i));
        auto it = env.find(t.head);
        if (it != env.end() && it->second.arity == 0) return it->second;
        throw ValidationError("unbound symbol in term: " + t.head);
    }
    auto it = env.find(t.head);
    if (it == env.end()) throw ValidationError("unbound symbol in term: " + t.head);
    std::vector<OperationTable> inner;
    for (const Term& a : t.args) inner.push_back(eval_term(a, env, vars, sizes));
    return compose(it->second, inner);
}

int permutation_order(const std::vector<int>& perm) {
    int n = static_cast<int>(perm.size());
    std::vector<bool> seen(static_cast<size_t>(n), false);
    for (int v : perm) {
        if (v < 0 || v >= n || seen[static_cast<size_t>(v)]) return -1;
        seen[static_cast<size_t>(v)] = true;
    }
    long long order = 1;
    std::vector<bool> visited(static_cast<size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        if (visited[static_cast<size_t>(i)]) continue;
        int len = 0, j = i;
        while (!visited[static_cast<size_t>(j)]) {
            visited[static_cast<size_t>(j)] = true;
            j = perm[static_cast<size_t>(j)];
            ++len;
        }
        order = std::lcm(order, static_cast<long long>(len));
    }
    return static_cast<int>(order);
}

namespace {

std::vector<int> section(const OperationTable& f, int sort, int a) {
    int n = f.sizes[static_cast<size_t>(sort)];
    std::vector<int> s(static_cast<size_t>(n));
    for (int x = 0; x < n; ++x) s[static_cast<size_t>(x)] = f.apply(sort, {a, x});
    return s;
}

}  // namespace

bool is_automorphic_polynomial(const OperationTable& f) {
    if (f.arity != 2) return false;
    for (size_t i = 0; i < f.sizes.size(); ++i)
        for (int a = 0; a < f.sizes[i]; ++a)
            if (permutation_order(section(f, static_cast<int>(i), a)) < 0)
                return false;
    return true;
}

bool is_p_automorphic(const OperationTable& f, long long p) {
    if (f.arity != 2) return false;
    bool has_order_p = false;
    for (size_t i = 0; i < f.sizes.size(); ++i)
        for (int a = 0; a < f.sizes[i]; ++a) {
            int order = permutation_order(section(f, static_cast<int>(i), a));
            if (order < 0) return false;
            if (order == p)
                has_order_p = true;
            else if (order != 1)
                return false;
        }
    return has_order_p;
}

std::optional<PAutomorphicPoly> find_p_automorphic_polynomial(
    const Structure& h, long long p, long long limit) {
    if (!is_prime(p)) throw ValidationError("p must be prime");
    for (const OperationTable& f : enumerate_polymorphisms(h, 2, limit)) {
        if (!is_p_automorphic(f, p)) continue;
        for (size_t i = 0; i < f.sizes.size(); ++i)
            for (int a = 0; a < f.sizes[i]; ++a)
                if (permutation_order(section(f, static_cast<int>(i), a)) == p)
                    return PAutomorphicPoly{f, static_cast<int>(i), a};
    }
    return std::nullopt;
}

MinorityResult minority_from_maltsev(const OperationTable& m) {
    for (int n : m.sizes)
        if (n != 2) throw ValidationError("minority construction needs 2-element sorts");
    if (!is_maltsev(m)) throw ValidationError("operation is not Mal'tsev");

    MinorityResult out;
    for (size_t i = 0; i < m.sizes.size(); ++i) {
        int aba = m.apply(static_cast<int>(i), {0, 1, 0});
        int bab = m.apply(static_cast<int>(i), {1, 0, 1});
        int type;
        if (aba == 1 && bab == 0)
            type = 0;
        else if (aba == 0 && bab == 1)
            type = 1;
        else if (aba == 0 && bab == 0)
            type = 2;
        else
            type = 3;
        out.types.push_back(type);
    }

    std::vector<std::string> vars{"x", "y", "z"};
    std::map<std::string, OperationTable> env{{"m", m}};
    OperationTable f =
        eval_term(parse_term("m(m(x,y,z),x,m(x,z,y))"), env, vars, m.sizes);
    env["f"] = f;
    env["g"] = eval_term(parse_term("f(x,x,y)"), env, {"x", "y"}, m.sizes);
    out.minority =
        eval_term(parse_term("g(m(x,y,z),f(x,y,z))"), env, vars, m.sizes);
    return out;
}

OperationTable two_auto_poly_from_square_automorphism(const Structure& h,
                                                      const OperationTable& g1,
                                                      const OperationTable& g2,
                                                      int a, int b) {
    if (h.sorts.size() != 1 || h.sorts[0].size() != 3)
        throw ValidationError("expects a single-sorted 3-element structure");
    if (g1.arity != 2 || g2.arity != 2)
        throw ValidationError("g1,g2 must be binary");
    int c = 3 - a - b;
    auto pair_image = [&](int x, int y) {
        return std::pair<int, int>{g1.apply(0, {x, y}), g2.apply(0, {x, y})};
    };
    // bundled map must be a bijection of H^2 swapping (c,a) and (c,b)
    std::set<std::pair<int, int>> image;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) image.insert(pair_image(x, y));
    if (image.size() != 9)
        throw ValidationError("(g1,g2) is not a bijection of the square");
    if (pair_image(c, a) != std::pair<int, int>{c, b} ||
        pair_image(c, b) != std::pair<int, int>{c, a})
        throw ValidationError("(g1,g2) does not swap (c,a),(c,b)");
    for (int x : {a, b})
        for (int y : {a, b})
            if (g1.apply(0, {x, y}) == c || g2.apply(0, {x, y}) == c)
                throw ValidationError("B={a,b} not closed under g1,g2");

    std::string text;
    if (pair_image(a, b) == std::pair<int, int>{a, b} &&
        pair_image(b, a) == std::pair<int, int>{b, a}) {
        // with (a,c),(b,c) also fixed g1 degenerates to a projection and
        // the order-2 section lives in g2; otherwise g1 itself works
        if (pair_image(a, c) == std::pair<int, int>{a, c} &&
            pair_image(b, c) == std::pair<int, int>{b, c})
            text = "g2(x,y)";
        else
            text = "g1(x,y)";
    } else if (pair_image(a, b) == std::pair<int, int>{b, a} &&
               pair_image(b, a) == std::pair<int, int>{a, b}) {
        if (pair_image(a, c) == std::pair<int, int>{a, c} &&
            pair_image(b, c) == std::pair<int, int>{b, c})
            text = "g1(g2(x,y),g1(x,y))";
        else if (pair_image(a, c) == std::pair<int, int>{b, c} &&
                 pair_image(b, c) == std::pair<int, int>{a, c})
            text = "g1(x,g1(y,x))";
        else
            throw ValidationError("unexpected action on (a,c),(b,c)");
    } else {
        throw ValidationError("unexpected action on (a,b),(b,a)");
    }

    std::map<std::string, OperationTable> env{{"g1", g1}, {"g2", g2}};
    OperationTable f =
        eval_term(parse_term(text), env, {"x", "y"}, g1.sizes);
    if (!is_p_automorphic(f, 2)) {
        // the tabulated terms are stated up to argument order; try the
        // transpose before giving up
        OperationTable ft = f;
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y)
                ft.tables[0][static_cast<size_t>(encode_args({x, y}, 3))] =
                    f.apply(0, {y, x});
        if (!is_p_automorphic(ft, 2))
            throw ValidationError("constructed term is not 2-automorphic");
        f = ft;
    }
    return f;
}

}  // namespace modcsp
