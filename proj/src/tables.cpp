#include "modcsp/tables.hpp"

#include <array>
#include <fstream>
#include <map>
#include <optional>

#include <json.hpp>

#include "modcsp/polyclone.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

namespace {

using nlohmann::json;

// partial per-component tables over the 27 triples; -1 = unconstrained
struct PartialG {
    std::array<std::array<int, 27>, 3> comp;

    PartialG() {
        for (auto& c : comp) c.fill(-1);
    }
};

int triple_code(int a, int b, int c) { return (a * 3 + b) * 3 + c; }

int parse_triple(const std::string& s) {
    if (s.size() != 3) throw ValidationError("bad triple: " + s);
    return triple_code(s[0] - '0', s[1] - '0', s[2] - '0');
}

std::string reverse_str(std::string s) {
    return {s.rbegin(), s.rend()};
}

// set the constrained components of g on `key` from an image or pattern
void apply_image(PartialG& g, const std::string& key, const std::string& value) {
    int code = parse_triple(key);
    if (value.size() != 3) throw ValidationError("bad image: " + value);
    for (int j = 0; j < 3; ++j) {
        if (value[static_cast<size_t>(j)] == '*') continue;
        int v = value[static_cast<size_t>(j)] - '0';
        int& slot = g.comp[static_cast<size_t>(j)][static_cast<size_t>(code)];
        if (slot >= 0 && slot != v)
            throw ValidationError("conflicting constraints on triple " + key);
        slot = v;
    }
}

bool any_constrained(const PartialG& g, int code) {
    for (int j = 0; j < 3; ++j)
        if (g.comp[static_cast<size_t>(j)][static_cast<size_t>(code)] >= 0)
            return true;
    return false;
}

PartialG build_partial(const std::map<std::string, std::string>& constraints) {
    PartialG g;
    // triples (a,b,b) and (b,b,a), diagonal included, are always fixed
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            apply_image(g, {char('0' + a), char('0' + b), char('0' + b)},
                        {char('0' + a), char('0' + b), char('0' + b)});
            apply_image(g, {char('0' + b), char('0' + b), char('0' + a)},
                        {char('0' + b), char('0' + b), char('0' + a)});
        }
    for (const auto& [key, value] : constraints) apply_image(g, key, value);
    // order-2 propagation: u -> v forces v -> u on untouched triples
    for (const auto& [key, value] : constraints) {
        if (value.find('*') != std::string::npos) continue;
        int vcode = parse_triple(value);
        if (!any_constrained(g, vcode)) apply_image(g, value, key);
    }
    return g;
}

// --- term evaluation with branching over unconstrained g-values ----------

struct Unknown {
    int comp;
    int code;
};

// evaluates t at (x,y); returns the value, or the first unknown slot hit
std::optional<int> eval_partial(const Term& t, int x, int y, const PartialG& g,
                                const std::map<std::pair<int, int>, int>& overlay,
                                Unknown& unknown) {
    if (t.head == "x") return x;
    if (t.head == "y") return y;
    int comp;
    std::vector<int> args;
    if (t.head == "f1" || t.head == "f2" || t.head == "f3") {
        if (t.args.size() != 2 && !t.args.empty())
            throw ValidationError("f-symbols are binary: " + t.head);
        comp = t.head[1] - '1';
        int ax = x, ay = y;
        if (!t.args.empty()) {
            auto vx = eval_partial(t.args[0], x, y, g, overlay, unknown);
            if (!vx) return std::nullopt;
            auto vy = eval_partial(t.args[1], x, y, g, overlay, unknown);
            if (!vy) return std::nullopt;
            ax = *vx;
            ay = *vy;
        }
        args = {ax, ay, ax};  // f_i(x,y) = g_i(x,y,x)
    } else if (t.head == "g1" || t.head == "g2" || t.head == "g3") {
        if (t.args.size() != 3)
            throw ValidationError("g-symbols are ternary: " + t.head);
        comp = t.head[1] - '1';
        for (const Term& a : t.args) {
            auto v = eval_partial(a, x, y, g, overlay, unknown);
            if (!v) return std::nullopt;
            args.push_back(*v);
        }
    } else {
        throw ValidationError("unknown symbol in table term: " + t.head);
    }
    int code = triple_code(args[0], args[1], args[2]);
    int v = g.comp[static_cast<size_t>(comp)][static_cast<size_t>(code)];
    if (v >= 0) return v;
    auto it = overlay.find({comp, code});
    if (it != overlay.end()) return it->second;
    unknown = {comp, code};
    return std::nullopt;
}

// every completion of the g-values the term touches must yield `expect`
bool verify_value(const Term& t, int x, int y, int expect, const PartialG& g,
                  std::map<std::pair<int, int>, int>& overlay) {
    Unknown unknown{-1, -1};
    auto v = eval_partial(t, x, y, g, overlay, unknown);
    if (v) return *v == expect;
    for (int choice = 0; choice < 3; ++choice) {
        overlay[{unknown.comp, unknown.code}] = choice;
        bool ok = verify_value(t, x, y, expect, g, overlay);
        overlay.erase({unknown.comp, unknown.code});
        if (!ok) return false;
    }
    return true;
}

// returns "direct", "transposed", or "" (failure)
std::string verify_term(const Term& t, const PartialG& g,
                        const std::vector<std::vector<int>>& target) {
    for (int transposed = 0; transposed < 2; ++transposed) {
        bool ok = true;
        for (int x = 0; x < 3 && ok; ++x)
            for (int y = 0; y < 3 && ok; ++y) {
                int expect = transposed
                                 ? target[static_cast<size_t>(y)][static_cast<size_t>(x)]
                                 : target[static_cast<size_t>(x)][static_cast<size_t>(y)];
                std::map<std::pair<int, int>, int> overlay;
                ok = verify_value(t, x, y, expect, g, overlay);
            }
        if (ok) return transposed ? "transposed" : "direct";
    }
    return "";
}

// --- mirroring -------------------------------------------------------------

std::map<std::string, std::string> mirror_constraints(
    const std::map<std::string, std::string>& constraints) {
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : constraints)
        out[reverse_str(key)] = reverse_str(value);
    return out;
}

Term mirror_term(const Term& t) {
    Term out;
    out.head = t.head;
    if (t.head == "f1")
        out.head = "f3";
    else if (t.head == "f3")
        out.head = "f1";
    else if (t.head == "g1")
        out.head = "g3";
    else if (t.head == "g3")
        out.head = "g1";
    for (const Term& a : t.args) out.args.push_back(mirror_term(a));
    if (out.head[0] == 'g' && out.args.size() == 3)
        std::swap(out.args[0], out.args[2]);
    return out;
}

// --- the two-row square-automorphism table ---------------------------------

std::string verify_pair_row(const std::map<std::string, std::string>& action,
                            const Term& term) {
    // pairs over {a,b,c} = {0,1,2}; diagonal fixed, (c,a)<->(c,b) swapped
    const int a = 0, b = 1, c = 2;
    std::map<std::pair<int, int>, std::pair<int, int>> g;
    for (int u = 0; u < 3; ++u) g[{u, u}] = {u, u};
    g[{c, a}] = {c, b};
    g[{c, b}] = {c, a};
    auto pair_of = [&](const std::string& s) -> std::pair<int, int> {
        auto elem = [&](char ch) { return ch == 'a' ? a : ch == 'b' ? b : c; };
        return {elem(s[0]), elem(s[1])};
    };
    for (const auto& [key, value] : action) g[pair_of(key)] = pair_of(value);
    if (g.size() != 9) throw ValidationError("pair table row is incomplete");

    OperationTable g1, g2;
    g1.arity = g2.arity = 2;
    g1.sizes = g2.sizes = {3};
    g1.tables = {std::vector<int>(9)};
    g2.tables = {std::vector<int>(9)};
    for (const auto& [key, value] : g) {
        int code = encode_args({key.first, key.second}, 3);
        g1.tables[0][static_cast<size_t>(code)] = value.first;
        g2.tables[0][static_cast<size_t>(code)] = value.second;
    }
    std::map<std::string, OperationTable> env{{"g1", g1}, {"g2", g2}};
    OperationTable f = eval_term(term, env, {"x", "y"}, {3});
    if (is_p_automorphic(f, 2)) return "direct";
    OperationTable ft = f;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            ft.tables[0][static_cast<size_t>(encode_args({x, y}, 3))] =
                f.apply(0, {y, x});
    if (is_p_automorphic(ft, 2)) return "transposed";
    return "";
}

// rewrite binary f-symbols into the ternary g-symbols they abbreviate:
// f_i(s,t) -> g_i(s,t,s); a bare f_i stands for f_i(x,y)
Term expand_f_symbols(const Term& t) {
    Term out;
    if (t.head == "f1" || t.head == "f2" || t.head == "f3") {
        out.head = std::string("g") + t.head[1];
        Term first = t.args.empty() ? Term{"x", {}} : expand_f_symbols(t.args[0]);
        Term second = t.args.empty() ? Term{"y", {}} : expand_f_symbols(t.args[1]);
        out.args = {first, second, first};
    } else {
        out.head = t.head;
        for (const Term& a : t.args) out.args.push_back(expand_f_symbols(a));
    }
    return out;
}

bool partial_matches_action(const PartialG& pg,
                            const std::array<std::array<int, 27>, 3>& act) {
    for (int j = 0; j < 3; ++j)
        for (int code = 0; code < 27; ++code) {
            int want = pg.comp[static_cast<size_t>(j)][static_cast<size_t>(code)];
            if (want >= 0 && want != act[static_cast<size_t>(j)][static_cast<size_t>(code)])
                return false;
        }
    return true;
}

}  // namespace

TableReport verify_case_tables(const std::string& data_path) {
    std::ifstream in(data_path);
    if (!in) throw ValidationError("cannot open table data file: " + data_path);
    json data = json::parse(in);

    std::vector<std::vector<int>> target;
    for (const auto& row : data.at("target"))
        target.push_back(row.get<std::vector<int>>());

    TableReport report;
    report.all_pass = true;

    for (const auto& table : data.at("tables")) {
        std::string id = table.at("id").get<std::string>();
        std::map<std::string, std::string> header =
            table.at("header").get<std::map<std::string, std::string>>();
        bool mirror = table.value("mirror", false);
        int row_no = 0;
        for (const auto& row : table.at("rows")) {
            ++row_no;
            std::map<std::string, std::string> constraints = header;
            for (const auto& [key, value] :
                 row.at("images").get<std::map<std::string, std::string>>())
                constraints[key] = value;
            Term term = parse_term(row.at("term").get<std::string>());
            bool tentative = row.value("tentative", false);
            std::string note = row.value("notation_note", "");
            if (tentative) ++report.tentative_count;

            for (int m = 0; m < (mirror ? 2 : 1); ++m) {
                std::map<std::string, std::string> cs =
                    m ? mirror_constraints(constraints) : constraints;
                Term t = m ? mirror_term(term) : term;
                TableRowResult result;
                result.table_id = id;
                result.row = row_no;
                result.mirrored = m != 0;
                result.tentative = tentative;
                result.note = note;
                result.orientation = verify_term(t, build_partial(cs), target);
                result.pass = !result.orientation.empty();
                if (!result.pass) report.all_pass = false;
                report.rows.push_back(std::move(result));
            }
        }
    }

    int row_no = 0;
    const auto& pair_table = data.at("pair_table");
    std::string pair_id = pair_table.at("id").get<std::string>();
    for (const auto& row : pair_table.at("rows")) {
        ++row_no;
        TableRowResult result;
        result.table_id = pair_id;
        result.row = row_no;
        result.orientation = verify_pair_row(
            row.at("action").get<std::map<std::string, std::string>>(),
            parse_term(row.at("term").get<std::string>()));
        result.pass = !result.orientation.empty();
        if (!result.pass) report.all_pass = false;
        report.rows.push_back(std::move(result));
    }

    return report;
}

std::optional<OperationTable> case_table_polynomial(const std::string& data_path,
                                                    const OperationTable& g1,
                                                    const OperationTable& g2,
                                                    const OperationTable& g3) {
    const OperationTable* gs[3] = {&g1, &g2, &g3};
    std::array<std::array<int, 27>, 3> act{};
    for (int j = 0; j < 3; ++j) {
        if (gs[j]->arity != 3 || gs[j]->sizes != std::vector<int>{3})
            throw ValidationError("table lookup needs ternary operations on a 3-element domain");
        for (int code = 0; code < 27; ++code)
            act[static_cast<size_t>(j)][static_cast<size_t>(code)] =
                gs[j]->tables[0][static_cast<size_t>(code)];
    }

    std::ifstream in(data_path);
    if (!in) throw ValidationError("cannot open table data file: " + data_path);
    json data = json::parse(in);

    std::map<std::string, OperationTable> env{{"g1", g1}, {"g2", g2}, {"g3", g3}};

    for (const auto& table : data.at("tables")) {
        std::map<std::string, std::string> header =
            table.at("header").get<std::map<std::string, std::string>>();
        bool mirror = table.value("mirror", false);
        for (const auto& row : table.at("rows")) {
            std::map<std::string, std::string> constraints = header;
            for (const auto& [key, value] :
                 row.at("images").get<std::map<std::string, std::string>>())
                constraints[key] = value;
            Term term = parse_term(row.at("term").get<std::string>());
            for (int m = 0; m < (mirror ? 2 : 1); ++m) {
                std::map<std::string, std::string> cs =
                    m ? mirror_constraints(constraints) : constraints;
                PartialG pg;
                try {
                    pg = build_partial(cs);
                } catch (const ValidationError&) {
                    continue;
                }
                if (!partial_matches_action(pg, act)) continue;
                Term t = expand_f_symbols(m ? mirror_term(term) : term);
                OperationTable f = eval_term(t, env, {"x", "y"}, {3});
                if (is_p_automorphic(f, 2)) return f;
                OperationTable ft = f;
                for (int x = 0; x < 3; ++x)
                    for (int y = 0; y < 3; ++y)
                        ft.tables[0][static_cast<size_t>(encode_args({x, y}, 3))] =
                            f.apply(0, {y, x});
                if (is_p_automorphic(ft, 2)) return ft;
            }
        }
    }
    return std::nullopt;
}

}  // namespace modcsp
