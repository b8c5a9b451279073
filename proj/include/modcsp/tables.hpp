#pragma once

// Verifier for the versioned term-table data file: each row pins down a
// partial action of a triple (g1,g2,g3) on 3-element triples and names a
// term that must reproduce the target binary operation, directly or with
// its arguments swapped.  Star components are universally quantified over
// all completions the term touches.

#include <optional>
#include <string>
#include <vector>

#include "modcsp/polyclone.hpp"

namespace modcsp {

struct TableRowResult {
    std::string table_id;
    int row = 0;           // 1-based position in the data file
    bool mirrored = false; // result for the mirrored variant of the row
    bool pass = false;
    std::string orientation;  // "direct" or "transposed" when pass
    bool tentative = false;   // compressed-notation parse recorded per row
    std::string note;
};

struct TableReport {
    std::vector<TableRowResult> rows;
    bool all_pass = false;
    int tentative_count = 0;
};

TableReport verify_case_tables(const std::string& data_path);

// Looks up the table row matching the full action of a cube automorphism
// (g1,g2,g3) of a 3-element domain (triples encoded row-major, base 3)
// and evaluates its term to an order-2 automorphic polynomial; nullopt
// when no row matches or the evaluated term is not 2-automorphic.
std::optional<OperationTable> case_table_polynomial(const std::string& data_path,
                                                    const OperationTable& g1,
                                                    const OperationTable& g2,
                                                    const OperationTable& g3);

}  // namespace modcsp
