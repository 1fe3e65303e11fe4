#pragma once

#include <string>
#include <vector>

namespace detnest {

/// X/Z components of a single-qubit Pauli. Y carries both (phases are
/// irrelevant for detection, so Y is tracked as X and Z together).
struct PauliBits {
    bool x = false;
    bool z = false;
};

/// Component bits for one of 'I', 'X', 'Y', 'Z'. Throws on anything else.
PauliBits pauli_bits(char p);

bool is_pauli_char(char p);

/// The three non-identity one-qubit labels: X, Y, Z.
const std::vector<std::string>& one_qubit_labels();

/// The 15 non-identity two-qubit labels, "IX" .. "ZZ", operands read
/// left-to-right in ascending qubit-index order.
const std::vector<std::string>& two_qubit_labels();

}  // namespace detnest
