#include "modcsp/json_io.hpp"

namespace modcsp {

Json structure_to_json(const Structure& h) {
    Json j;
    j["sorts"] = Json::array();
    for (const Sort& s : h.sorts)
        j["sorts"].push_back({{"name", s.name}, {"elements", s.elements}});
    j["relations"] = Json::array();
    for (const Relation& r : h.relations) {
        Json jr;
        jr["name"] = r.symbol.name;
        Json type = Json::array();
        for (int si : r.symbol.type)
            type.push_back(h.sorts[static_cast<size_t>(si)].name);
        jr["type"] = type;
        Json tuples = Json::array();
        for (const Tuple& t : r.tuples) {
            Json jt = Json::array();
            for (size_t c = 0; c < t.size(); ++c) {
                const Sort& s = h.sorts[static_cast<size_t>(r.symbol.type[c])];
                jt.push_back(s.elements[static_cast<size_t>(t[c])]);
            }
            tuples.push_back(jt);
        }
        jr["tuples"] = tuples;
        j["relations"].push_back(jr);
    }
    if (h.constants_flag) j["constants"] = true;
    return j;
}

Structure structure_from_json(const Json& j) {
    Structure h;
    for (const Json& js : j.at("sorts")) {
        Sort s;
        s.name = js.at("name").get<std::string>();
        for (const Json& je : js.at("elements"))
            s.elements.push_back(je.get<std::string>());
        h.sorts.push_back(std::move(s));
    }
    for (const Json& jr : j.at("relations")) {
        Relation r;
        r.symbol.name = jr.at("name").get<std::string>();
        for (const Json& jt : jr.at("type")) {
            int si = h.sort_index(jt.get<std::string>());
            if (si < 0)
                throw ValidationError("relation " + r.symbol.name +
                                      ": unknown sort " + jt.get<std::string>());
            r.symbol.type.push_back(si);
        }
        for (const Json& jt : jr.at("tuples")) {
            Tuple t;
            for (size_t c = 0; c < jt.size(); ++c) {
                if (c >= r.symbol.type.size())
                    throw ValidationError("relation " + r.symbol.name +
                                          ": tuple longer than arity");
                const Sort& s = h.sorts[static_cast<size_t>(r.symbol.type[c])];
                int e = s.element_index(jt[c].get<std::string>());
                if (e < 0)
                    throw ValidationError("relation " + r.symbol.name +
                                          ": unknown element " +
                                          jt[c].get<std::string>());
                t.push_back(e);
            }
            if (t.size() != r.symbol.type.size())
                throw ValidationError("relation " + r.symbol.name +
                                      ": tuple shorter than arity");
            r.tuples.push_back(std::move(t));
        }
        r.normalize();
        h.relations.push_back(std::move(r));
    }
    if (j.contains("constants") && j.at("constants").get<bool>())
        h.constants_flag = true;
    validate(h);
    return h;
}

Json instance_to_json(const Instance& p, const Structure& h) {
    Json j;
    j["variables"] = Json::array();
    for (const Variable& v : p.variables)
        j["variables"].push_back(
            {{"name", v.name},
             {"sort", h.sorts[static_cast<size_t>(v.sort)].name}});
    j["constraints"] = Json::array();
    for (const Constraint& c : p.constraints) {
        Json jc;
        jc["relation"] = h.relations[static_cast<size_t>(c.relation)].symbol.name;
        Json scope = Json::array();
        for (int v : c.scope)
            scope.push_back(p.variables[static_cast<size_t>(v)].name);
        jc["scope"] = scope;
        j["constraints"].push_back(jc);
    }
    return j;
}

Instance instance_from_json(const Json& j, const Structure& h) {
    Instance p;
    for (const Json& jv : j.at("variables")) {
        Variable v;
        v.name = jv.at("name").get<std::string>();
        v.sort = h.sort_index(jv.at("sort").get<std::string>());
        if (v.sort < 0)
            throw ValidationError("variable " + v.name + ": unknown sort");
        p.variables.push_back(std::move(v));
    }
    for (const Json& jc : j.at("constraints")) {
        Constraint c;
        c.relation = h.relation_index(jc.at("relation").get<std::string>());
        if (c.relation < 0)
            throw ValidationError("constraint: unknown relation " +
                                  jc.at("relation").get<std::string>());
        for (const Json& jv : jc.at("scope")) {
            int v = p.variable_index(jv.get<std::string>());
            if (v < 0)
                throw ValidationError("constraint: unknown variable " +
                                      jv.get<std::string>());
            c.scope.push_back(v);
        }
        p.constraints.push_back(std::move(c));
    }
    validate_instance(p, h);
    return p;
}

Json map_to_json(const MultiSortedMap& phi, const Structure& h,
                 const Structure& g) {
    Json j;
    for (size_t i = 0; i < h.sorts.size(); ++i) {
        Json m;
        for (int e = 0; e < h.sorts[i].size(); ++e) {
            int im = phi.map[i][static_cast<size_t>(e)];
            m[h.sorts[i].elements[static_cast<size_t>(e)]] =
                g.sorts[i].elements[static_cast<size_t>(im)];
        }
        j[h.sorts[i].name] = m;
    }
    return j;
}

Json relation_to_json(const Relation& r) {
    Json j;
    j["name"] = r.symbol.name;
    j["type"] = r.symbol.type;
    j["tuples"] = r.tuples;
    return j;
}

Relation relation_from_json(const Json& j) {
    Relation r;
    r.symbol.name = j.at("name").get<std::string>();
    r.symbol.type = j.at("type").get<std::vector<int>>();
    r.tuples = j.at("tuples").get<std::vector<Tuple>>();
    return r;
}

Json raw_instance_to_json(const Instance& p) {
    Json j;
    j["variables"] = Json::array();
    for (const Variable& v : p.variables)
        j["variables"].push_back({{"name", v.name}, {"sort", v.sort}});
    j["constraints"] = Json::array();
    for (const Constraint& c : p.constraints)
        j["constraints"].push_back(
            {{"relation", c.relation}, {"scope", c.scope}});
    return j;
}

Instance raw_instance_from_json(const Json& j) {
    Instance p;
    for (const Json& jv : j.at("variables"))
        p.variables.push_back({jv.at("name").get<std::string>(),
                               jv.at("sort").get<int>()});
    for (const Json& jc : j.at("constraints"))
        p.constraints.push_back({jc.at("relation").get<int>(),
                                 jc.at("scope").get<std::vector<int>>()});
    return p;
}

Json operation_to_json(const OperationTable& f) {
    Json j;
    j["arity"] = f.arity;
    j["sizes"] = f.sizes;
    j["tables"] = f.tables;
    return j;
}

OperationTable operation_from_json(const Json& j) {
    OperationTable f;
    f.arity = j.at("arity").get<int>();
    f.sizes = j.at("sizes").get<std::vector<int>>();
    f.tables = j.at("tables").get<std::vector<std::vector<int>>>();
    return f;
}

Json formula_to_json(const MppFormula& phi) {
    Json j;
    j["free"] = Json::array();
    for (const auto& [name, sort] : phi.free)
        j["free"].push_back({{"name", name}, {"sort", sort}});
    j["blocks"] = phi.blocks;
    j["atoms"] = Json::array();
    for (const MppAtom& a : phi.atoms)
        j["atoms"].push_back({{"relation", a.relation}, {"scope", a.scope}});
    j["sort_hints"] = Json::array();
    for (const auto& [name, sort] : phi.sort_hints)
        j["sort_hints"].push_back({{"name", name}, {"sort", sort}});
    return j;
}

MppFormula formula_from_json(const Json& j, const Structure& h) {
    auto sort_of = [&](const Json& js) {
        if (js.is_number()) return js.get<int>();
        int s = h.sort_index(js.get<std::string>());
        if (s < 0)
            throw ValidationError("formula: unknown sort " +
                                  js.get<std::string>());
        return s;
    };
    MppFormula phi;
    for (const Json& jf : j.at("free"))
        phi.free.emplace_back(jf.at("name").get<std::string>(),
                              sort_of(jf.at("sort")));
    if (j.contains("blocks"))
        phi.blocks = j.at("blocks").get<std::vector<std::vector<std::string>>>();
    for (const Json& ja : j.at("atoms")) {
        MppAtom a;
        a.relation = ja.at("relation").get<std::string>();
        if (a.relation == "=") a.relation.clear();
        a.scope = ja.at("scope").get<std::vector<std::string>>();
        if (!a.is_equality() && h.relation_index(a.relation) < 0)
            throw ValidationError("formula: unknown relation " + a.relation);
        phi.atoms.push_back(std::move(a));
    }
    if (j.contains("sort_hints"))
        for (const Json& jh : j.at("sort_hints"))
            phi.sort_hints.emplace_back(jh.at("name").get<std::string>(),
                                        sort_of(jh.at("sort")));
    return phi;
}

Json closure_budget_to_json(const ClosureBudget& b) {
    return Json{{"max_atoms", b.max_atoms},
                {"max_free_arity", b.max_free_arity},
                {"max_blocks", b.max_blocks},
                {"max_relation_size", b.max_relation_size},
                {"max_relations", b.max_relations}};
}

ClosureBudget closure_budget_from_json(const Json& j) {
    ClosureBudget b;
    b.max_atoms = j.at("max_atoms").get<int>();
    b.max_free_arity = j.at("max_free_arity").get<int>();
    b.max_blocks = j.at("max_blocks").get<int>();
    b.max_relation_size = j.at("max_relation_size").get<long long>();
    b.max_relations = j.at("max_relations").get<int>();
    return b;
}

Json obstruction_budget_to_json(const ObstructionBudget& b) {
    return Json{{"closure", closure_budget_to_json(b.closure)},
                {"poly_limit", b.poly_limit},
                {"gadget", Json{{"max_aux", b.gadget.max_aux},
                                {"max_atoms", b.gadget.max_atoms},
                                {"max_candidates", b.gadget.max_candidates}}}};
}

ObstructionBudget obstruction_budget_from_json(const Json& j) {
    ObstructionBudget b;
    b.closure = closure_budget_from_json(j.at("closure"));
    b.poly_limit = j.at("poly_limit").get<long long>();
    b.gadget.max_aux = j.at("gadget").at("max_aux").get<int>();
    b.gadget.max_atoms = j.at("gadget").at("max_atoms").get<int>();
    b.gadget.max_candidates = j.at("gadget").at("max_candidates").get<long long>();
    return b;
}

namespace {

Json gadget_to_json(const GadgetWitness& g) {
    Json j;
    j["gadget"] = raw_instance_to_json(g.gadget);
    j["pinned_coords"] = g.pinned_coords;
    j["x_var"] = g.x_var;
    j["targets"] = g.targets;
    j["counts"] = g.counts;
    return j;
}

GadgetWitness gadget_from_json(const Json& j) {
    GadgetWitness g;
    g.gadget = raw_instance_from_json(j.at("gadget"));
    g.pinned_coords = j.at("pinned_coords").get<std::vector<int>>();
    g.x_var = j.at("x_var").get<int>();
    g.targets = j.at("targets").get<std::vector<std::vector<int>>>();
    g.counts = j.at("counts").get<std::vector<long long>>();
    return g;
}

Json step_to_json(const ObstructionStep& s) {
    Json j;
    j["rule"] = s.rule;
    j["restrictions"] = Json::array();
    for (const auto& [coord, vals] : s.restrictions)
        j["restrictions"].push_back({{"coord", coord}, {"values", vals}});
    j["gadget"] = s.gadget ? gadget_to_json(*s.gadget) : Json();
    j["target"] = s.target;
    j["eliminated"] = s.eliminated;
    j["role_swap"] = s.role_swap;
    j["witness_coords"] = s.witness_coords;
    j["w1"] = s.w1;
    j["w2"] = s.w2;
    j["w3"] = s.w3;
    j["wout"] = s.wout;
    return j;
}

ObstructionStep step_from_json(const Json& j) {
    ObstructionStep s;
    s.rule = j.at("rule").get<std::string>();
    for (const Json& jr : j.at("restrictions"))
        s.restrictions.emplace_back(jr.at("coord").get<int>(),
                                    jr.at("values").get<std::vector<int>>());
    if (!j.at("gadget").is_null()) s.gadget = gadget_from_json(j.at("gadget"));
    s.target = j.at("target").get<int>();
    s.eliminated = j.at("eliminated").get<std::vector<int>>();
    s.role_swap = j.at("role_swap").get<bool>();
    s.witness_coords = j.at("witness_coords").get<std::vector<int>>();
    s.w1 = j.at("w1").get<Tuple>();
    s.w2 = j.at("w2").get<Tuple>();
    s.w3 = j.at("w3").get<Tuple>();
    s.wout = j.at("wout").get<Tuple>();
    return s;
}

}  // namespace

Json certificate_to_json(const ObstructionCertificate& cert) {
    Json j;
    j["p"] = cert.p;
    j["closure_budget"] = closure_budget_to_json(cert.closure_budget);
    j["poly_limit"] = cert.poly_limit;
    j["chain"] = Json::array();
    for (const ObstructionStep& s : cert.chain)
        j["chain"].push_back(step_to_json(s));
    j["coords"] = cert.coords;
    j["relation"] = relation_to_json(cert.relation);
    j["witness_coords"] = cert.witness_coords;
    j["w1"] = cert.w1;
    j["w2"] = cert.w2;
    j["w3"] = cert.w3;
    j["wout"] = cert.wout;
    return j;
}

ObstructionCertificate certificate_from_json(const Json& j) {
    ObstructionCertificate cert;
    cert.p = j.at("p").get<long long>();
    cert.closure_budget = closure_budget_from_json(j.at("closure_budget"));
    cert.poly_limit = j.at("poly_limit").get<long long>();
    for (const Json& js : j.at("chain"))
        cert.chain.push_back(step_from_json(js));
    cert.coords = j.at("coords").get<std::vector<int>>();
    cert.relation = relation_from_json(j.at("relation"));
    cert.witness_coords = j.at("witness_coords").get<std::vector<int>>();
    cert.w1 = j.at("w1").get<Tuple>();
    cert.w2 = j.at("w2").get<Tuple>();
    cert.w3 = j.at("w3").get<Tuple>();
    cert.wout = j.at("wout").get<Tuple>();
    return cert;
}

Json stuck_to_json(const StuckReport& s) {
    Json j;
    j["rule"] = s.rule;
    j["detail"] = s.detail;
    j["coords"] = s.coords;
    j["relation"] = relation_to_json(s.relation);
    j["b_sets"] = s.b_sets;
    j["rules_tried"] = s.rules_tried;
    return j;
}

Json verdict_to_json(const Verdict& v) {
    Json j;
    j["kind"] = to_string(v.kind);
    j["reason"] = v.reason;
    j["note"] = v.note;
    j["budget_qualified"] = v.budget_qualified;

    Json trail;
    trail["rigid_chain"] = Json::array();
    for (const Automorphism& a : v.trail.rigid_chain)
        trail["rigid_chain"].push_back(
            {{"order", a.order}, {"map", a.map.map}});
    trail["constants_added"] = v.trail.constants_added;
    trail["emptied"] = v.trail.emptied;
    j["trail"] = trail;

    j["budget"] = Json{
        {"obstruction", obstruction_budget_to_json(v.budget.obstruction)},
        {"auto_guard", v.budget.auto_guard}};

    j["certificate"] = v.certificate ? certificate_to_json(*v.certificate)
                                     : Json();
    j["certified_structure"] =
        v.certified_structure ? structure_to_json(*v.certified_structure)
                              : Json();
    j["maltsev"] = v.maltsev ? operation_to_json(*v.maltsev) : Json();
    j["minority"] = v.minority
                        ? Json{{"operation",
                                operation_to_json(v.minority->minority)},
                               {"types", v.minority->types}}
                        : Json();
    j["poly"] = v.poly ? Json{{"f", operation_to_json(v.poly->f)},
                              {"witness_sort", v.poly->witness_sort},
                              {"witness_elem", v.poly->witness_elem}}
                       : Json();
    j["split"] = v.split
                     ? Json{{"structure", structure_to_json(v.split->hf)},
                            {"split_sort", v.split->split_sort},
                            {"prime_sort", v.split->prime_sort},
                            {"dprime_sort", v.split->dprime_sort},
                            {"orbit_union", v.split->orbit_union}}
                     : Json();
    j["stuck"] = v.stuck ? stuck_to_json(*v.stuck) : Json();
    return j;
}

}  // namespace modcsp
