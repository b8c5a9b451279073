// modcsp: command-line entry point.
//
// Results are printed as JSON to stdout; diagnostics go to stderr.
// Exit codes: 0 = success, 1 = verdict-level stuck (search exhausted,
// verification failed), 2 = input error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "modcsp/autos.hpp"
#include "modcsp/classify.hpp"
#include "modcsp/homcount.hpp"
#include "modcsp/json_io.hpp"
#include "modcsp/mpp.hpp"
#include "modcsp/obstruction.hpp"
#include "modcsp/polyclone.hpp"
#include "modcsp/reduce.hpp"
#include "modcsp/structures.hpp"
#include "modcsp/tables.hpp"

namespace {

using modcsp::Json;

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw modcsp::ValidationError("cannot open file: " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw modcsp::ValidationError(path + ": " + e.what());
    }
}

modcsp::Structure load_structure(const std::string& path) {
    try {
        return modcsp::structure_from_json(load_json(path));
    } catch (const Json::exception& e) {
        throw modcsp::ValidationError(path + ": " + e.what());
    }
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

const char* kind_name(modcsp::MaltsevClosureVerdict::Kind k) {
    using K = modcsp::MaltsevClosureVerdict::Kind;
    switch (k) {
        case K::NoMaltsevForHItself: return "NoMaltsevForHItself";
        case K::NoMaltsevCertified: return "NoMaltsevCertified";
        case K::MaltsevUpToBudget: return "MaltsevUpToBudget";
    }
    return "?";
}

// Budget options shared by the search-driven subcommands.
struct BudgetOpts {
    modcsp::ClassifyBudget budget;

    void attach(CLI::App* cmd) {
        cmd->add_option("--budget-arity", budget.obstruction.closure.max_free_arity,
                        "closure: max free arity of defined relations");
        cmd->add_option("--budget-depth", budget.obstruction.closure.max_atoms,
                        "closure: max conjunction atoms per definition");
        cmd->add_option("--budget-blocks", budget.obstruction.closure.max_blocks,
                        "closure: max quantifier blocks");
        cmd->add_option("--budget-relations",
                        budget.obstruction.closure.max_relations,
                        "closure: max distinct relations kept");
        cmd->add_option("--budget-relation-size",
                        budget.obstruction.closure.max_relation_size,
                        "closure: max tuples per defined relation");
        cmd->add_option("--gadget-vertices", budget.obstruction.gadget.max_aux,
                        "gadget search: max auxiliary vertices");
        cmd->add_option("--gadget-atoms", budget.obstruction.gadget.max_atoms,
                        "gadget search: max constraint atoms");
        cmd->add_option("--poly-limit", budget.obstruction.poly_limit,
                        "max polymorphisms enumerated per search");
        cmd->add_option("--auto-guard", budget.auto_guard,
                        "automorphism search-space guard");
    }
};

int run(int argc, char** argv) {
    CLI::App app{"modular homomorphism counting toolkit"};
    app.require_subcommand(1);
    long long seed = 0;
    app.add_option("--seed", seed,
                   "seed for randomized self-checks; core results are "
                   "seed-independent");

    std::string structure_path, instance_path, formula_path, cert_path,
        matrix_path, graph_path, poly_path, out_path;
    long long mod = 2;
    int arity = 3;
    long long limit = 200000;
    bool rigid = false;
    int perm_cap = 8;
    std::string family = "auto";
    std::string data_path = std::string(MODCSP_DATA_DIR) + "/case_tables.json";

    auto* c_count = app.add_subcommand("count", "count homomorphisms mod p");
    c_count->add_option("--structure", structure_path)->required();
    c_count->add_option("--instance", instance_path)->required();
    c_count->add_option("--mod", mod)->required();

    auto* c_eval = app.add_subcommand(
        "eval-matrix", "evaluate a matrix partition function mod p");
    c_eval->add_option("--matrix", matrix_path)->required();
    c_eval->add_option("--graph", graph_path)->required();
    c_eval->add_option("--mod", mod)->required();

    auto* c_autos =
        app.add_subcommand("autos", "automorphisms / p-rigid reduction");
    c_autos->add_option("--structure", structure_path)->required();
    c_autos->add_option("--mod", mod, "restrict to automorphisms of order p");
    c_autos->add_flag("--rigid", rigid, "also report the p-rigid reduction");

    auto* c_polys = app.add_subcommand("polys", "enumerate polymorphisms");
    c_polys->add_option("--structure", structure_path)->required();
    c_polys->add_option("--arity", arity);
    c_polys->add_option("--limit", limit);

    BudgetOpts b_maltsev;
    auto* c_maltsev = app.add_subcommand(
        "maltsev", "Mal'tsev polymorphism test, optionally for the closure");
    c_maltsev->add_option("--structure", structure_path)->required();
    auto* maltsev_mod = c_maltsev->add_option(
        "--mod", mod, "also run the closure verdict at this modulus");
    b_maltsev.attach(c_maltsev);

    auto* c_mpp = app.add_subcommand(
        "mpp-eval", "evaluate a formula with mod-p quantifiers");
    c_mpp->add_option("--structure", structure_path)->required();
    c_mpp->add_option("--formula", formula_path)->required();
    c_mpp->add_option("--mod", mod)->required();

    BudgetOpts b_closure;
    auto* c_closure =
        app.add_subcommand("closure", "bounded definable-relation closure");
    c_closure->add_option("--structure", structure_path)->required();
    c_closure->add_option("--mod", mod)->required();
    b_closure.attach(c_closure);

    BudgetOpts b_obstruction;
    auto* c_obstruction = app.add_subcommand(
        "obstruction", "search a rectangularity-obstruction certificate");
    c_obstruction->add_option("--structure", structure_path)->required();
    c_obstruction->add_option("--mod", mod)->required();
    b_obstruction.attach(c_obstruction);

    auto* c_verify = app.add_subcommand(
        "verify-cert", "independently replay a certificate");
    c_verify->add_option("--structure", structure_path)->required();
    c_verify->add_option("--cert", cert_path)->required();
    c_verify->add_option("--mod", mod)->required();

    auto* c_reduce = app.add_subcommand(
        "reduce", "reduce an instance by an automorphic polynomial");
    c_reduce->add_option("--structure", structure_path)->required();
    c_reduce->add_option("--instance", instance_path)->required();
    c_reduce->add_option("--mod", mod)->required();
    c_reduce->add_option("--poly", poly_path,
                         "operation table file; searched when omitted");
    c_reduce->add_option("--perm-cap", perm_cap,
                         "cap on relation size for permutation domains");

    BudgetOpts b_classify;
    auto* c_classify =
        app.add_subcommand("classify", "complexity verdict with evidence");
    c_classify->add_option("--structure", structure_path)->required();
    c_classify->add_option("--mod", mod)->required();
    c_classify->add_option("--family", family,
                           "auto | 2element | conservative | 3element");
    b_classify.attach(c_classify);

    auto* c_tables =
        app.add_subcommand("verify-tables", "verify the term-table data file");
    c_tables->add_option("--data", data_path);

    CLI11_PARSE(app, argc, argv);

    if (*c_count) {
        modcsp::Structure h = load_structure(structure_path);
        modcsp::Instance p =
            modcsp::instance_from_json(load_json(instance_path), h);
        emit(Json{{"count_mod_p", modcsp::count_homs_mod(p, h, mod)}});
        return 0;
    }

    if (*c_eval) {
        Json jm = load_json(matrix_path);
        modcsp::FpMatrix m;
        m.p = mod;
        m.rows = jm.at("rows").get<std::vector<std::vector<long long>>>();
        Json jg = load_json(graph_path);
        modcsp::Digraph g;
        g.n = jg.at("n").get<int>();
        for (const Json& je : jg.at("edges"))
            g.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
        emit(Json{{"value", modcsp::eval_partition_function(m, g, mod)}});
        return 0;
    }

    if (*c_autos) {
        modcsp::Structure h = load_structure(structure_path);
        std::vector<modcsp::Automorphism> autos =
            c_autos->count("--mod") ? modcsp::p_automorphisms(h, mod)
                                    : modcsp::automorphisms(h);
        Json j;
        j["count"] = autos.size();
        j["automorphisms"] = Json::array();
        for (const modcsp::Automorphism& a : autos)
            j["automorphisms"].push_back(
                {{"order", a.order}, {"map", modcsp::map_to_json(a.map, h, h)}});
        if (rigid) {
            modcsp::RigidReduction rr = modcsp::p_rigid_reduce(h, mod);
            j["rigid"] = Json{{"structure", modcsp::structure_to_json(rr.result)},
                              {"steps", rr.chain.size()}};
        }
        emit(j);
        return 0;
    }

    if (*c_polys) {
        modcsp::Structure h = load_structure(structure_path);
        std::vector<modcsp::OperationTable> polys =
            modcsp::enumerate_polymorphisms(h, arity, limit);
        Json j;
        j["count"] = polys.size();
        j["operations"] = Json::array();
        for (const modcsp::OperationTable& f : polys)
            j["operations"].push_back(modcsp::operation_to_json(f));
        emit(j);
        return 0;
    }

    if (*c_maltsev) {
        modcsp::Structure h = load_structure(structure_path);
        auto m = modcsp::has_maltsev(h);
        Json j;
        j["has_maltsev"] = m.has_value();
        j["operation"] = m ? modcsp::operation_to_json(*m) : Json();
        if (*maltsev_mod) {
            modcsp::MaltsevClosureVerdict mv = modcsp::maltsev_for_closure(
                h, mod, b_maltsev.budget.obstruction.closure);
            Json jv;
            jv["kind"] = kind_name(mv.kind);
            jv["kills"] = mv.kills.size();
            jv["survivors"] = Json::array();
            for (const modcsp::OperationTable& f : mv.survivors)
                jv["survivors"].push_back(modcsp::operation_to_json(f));
            jv["budget_exhausted"] = mv.budget_exhausted;
            j["closure_verdict"] = jv;
        }
        emit(j);
        return 0;
    }

    if (*c_mpp) {
        modcsp::Structure h = load_structure(structure_path);
        modcsp::MppFormula phi =
            modcsp::formula_from_json(load_json(formula_path), h);
        modcsp::Relation r = modcsp::eval_mpp(phi, h, mod);
        emit(Json{{"relation", modcsp::relation_to_json(r)},
                  {"strict", modcsp::is_strict(phi, h, mod)}});
        return 0;
    }

    if (*c_closure) {
        modcsp::Structure h = load_structure(structure_path);
        modcsp::ClosureResult res = modcsp::closure_search(
            h, mod, b_closure.budget.obstruction.closure);
        Json j;
        j["count"] = res.relations.size();
        j["budget_exhausted"] = res.budget_exhausted;
        j["relations"] = Json::array();
        for (const modcsp::DefinedRelation& d : res.relations)
            j["relations"].push_back(
                {{"relation", modcsp::relation_to_json(d.relation)},
                 {"formula", modcsp::formula_to_json(d.formula)}});
        emit(j);
        return 0;
    }

    if (*c_obstruction) {
        modcsp::Structure h = load_structure(structure_path);
        const modcsp::ObstructionBudget& ob = b_obstruction.budget.obstruction;
        if (h.sorts.size() == 1 && h.sorts[0].size() == 3) {
            modcsp::ObstructionOutcome out =
                modcsp::three_element_obstruction(h, mod, ob);
            if (out.certificate) {
                emit(Json{{"certificate",
                           modcsp::certificate_to_json(*out.certificate)}});
                return 0;
            }
            if (out.poly) {
                emit(Json{{"poly",
                           Json{{"f", modcsp::operation_to_json(out.poly->f)},
                                {"witness_sort", out.poly->witness_sort},
                                {"witness_elem", out.poly->witness_elem}}}});
                return 0;
            }
            emit(Json{{"stuck", modcsp::stuck_to_json(*out.stuck)}});
            return 1;
        }
        modcsp::StuckReport stuck;
        auto cert = modcsp::conservative_obstruction(h, mod, ob, &stuck);
        if (cert) {
            emit(Json{{"certificate", modcsp::certificate_to_json(*cert)}});
            return 0;
        }
        emit(Json{{"stuck", modcsp::stuck_to_json(stuck)}});
        return 1;
    }

    if (*c_verify) {
        modcsp::Structure h = load_structure(structure_path);
        modcsp::ObstructionCertificate cert;
        try {
            cert = modcsp::certificate_from_json(load_json(cert_path));
        } catch (const Json::exception& e) {
            throw modcsp::ValidationError(cert_path + ": " + e.what());
        }
        std::string why;
        bool ok = modcsp::verify_certificate(cert, h, mod, &why);
        emit(Json{{"verified", ok}, {"why", why}});
        return ok ? 0 : 1;
    }

    if (*c_reduce) {
        modcsp::Structure h = load_structure(structure_path);
        modcsp::Instance p =
            modcsp::instance_from_json(load_json(instance_path), h);
        modcsp::OperationTable f;
        if (!poly_path.empty()) {
            try {
                f = modcsp::operation_from_json(load_json(poly_path));
            } catch (const Json::exception& e) {
                throw modcsp::ValidationError(poly_path + ": " + e.what());
            }
        } else {
            auto found = modcsp::find_p_automorphic_polynomial(h, mod);
            if (!found) {
                emit(Json{{"found", false},
                          {"detail", "no p-automorphic polynomial found"}});
                return 1;
            }
            f = found->f;
        }
        modcsp::ReduceResult rr =
            modcsp::reduce_instance(p, h, f, mod, perm_cap);
        Json j;
        j["structure"] = modcsp::structure_to_json(rr.structure);
        j["instance"] = modcsp::instance_to_json(rr.instance, rr.structure);
        j["witness_sort"] = rr.witness_sort;
        j["witness_elem"] = rr.witness_elem;
        j["orbit_union"] = rr.orbit_union;
        j["ledger"] = Json{{"deletions", rr.ledger.deletions.size()},
                           {"orbit_drops", rr.ledger.orbit_drops.size()},
                           {"rounds", rr.ledger.rounds}};
        emit(j);
        return 0;
    }

    if (*c_classify) {
        modcsp::Structure h = load_structure(structure_path);
        const modcsp::ClassifyBudget& cb = b_classify.budget;
        std::string fam = family;
        if (fam == "auto") {
            bool all2 = true;
            for (const modcsp::Sort& s : h.sorts) all2 = all2 && s.size() <= 2;
            if (all2)
                fam = "2element";
            else if (h.sorts.size() == 1 && h.sorts[0].size() == 3)
                fam = "3element";
            else
                fam = "conservative";
        }
        modcsp::Verdict v;
        if (fam == "2element")
            v = modcsp::classify_2element(h, mod, cb);
        else if (fam == "3element")
            v = modcsp::classify_3element(h, mod, cb);
        else if (fam == "conservative")
            v = modcsp::classify_conservative(h, mod, cb);
        else
            throw modcsp::ValidationError("unknown family: " + fam);
        emit(modcsp::verdict_to_json(v));
        return v.kind == modcsp::Verdict::Kind::UnknownWithinBudget ? 1 : 0;
    }

    if (*c_tables) {
        modcsp::TableReport rep = modcsp::verify_case_tables(data_path);
        Json j;
        j["all_pass"] = rep.all_pass;
        j["tentative"] = rep.tentative_count;
        j["rows"] = Json::array();
        for (const modcsp::TableRowResult& r : rep.rows)
            j["rows"].push_back({{"table", r.table_id},
                                 {"row", r.row},
                                 {"mirrored", r.mirrored},
                                 {"pass", r.pass},
                                 {"orientation", r.orientation},
                                 {"tentative", r.tentative},
                                 {"note", r.note}});
        emit(j);
        return rep.all_pass ? 0 : 1;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const modcsp::ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
