#pragma once

// JSON serialization for the on-disk formats.  All emitters produce
// objects with sorted keys (nlohmann::json default) and canonical element
// order, so outputs are byte-deterministic.

#include <json.hpp>

#include "modcsp/classify.hpp"
#include "modcsp/mpp.hpp"
#include "modcsp/obstruction.hpp"
#include "modcsp/polyclone.hpp"
#include "modcsp/structures.hpp"

namespace modcsp {

using Json = nlohmann::json;

Json structure_to_json(const Structure& h);
Structure structure_from_json(const Json& j);

Json instance_to_json(const Instance& p, const Structure& h);
Instance instance_from_json(const Json& j, const Structure& h);

Json map_to_json(const MultiSortedMap& phi, const Structure& h,
                 const Structure& g);

// Relations and instances in raw index form (no element names); used in
// replayable artifacts where exact indices matter.
Json relation_to_json(const Relation& r);
Relation relation_from_json(const Json& j);
Json raw_instance_to_json(const Instance& p);
Instance raw_instance_from_json(const Json& j);

Json operation_to_json(const OperationTable& f);
OperationTable operation_from_json(const Json& j);

// Formulas reference relation and sort names of the structure.
Json formula_to_json(const MppFormula& phi);
MppFormula formula_from_json(const Json& j, const Structure& h);

Json closure_budget_to_json(const ClosureBudget& b);
ClosureBudget closure_budget_from_json(const Json& j);
Json obstruction_budget_to_json(const ObstructionBudget& b);
ObstructionBudget obstruction_budget_from_json(const Json& j);

// Certificates round-trip bit-exactly so external verification works.
Json certificate_to_json(const ObstructionCertificate& cert);
ObstructionCertificate certificate_from_json(const Json& j);

Json stuck_to_json(const StuckReport& s);
Json verdict_to_json(const Verdict& v);

}  // namespace modcsp
