#include "detnest/pauli.hpp"

#include <stdexcept>

namespace detnest {

PauliBits pauli_bits(char p) {
    switch (p) {
        case 'I': return {false, false};
        case 'X': return {true, false};
        case 'Y': return {true, true};
        case 'Z': return {false, true};
        default: throw std::invalid_argument(std::string("not a Pauli label: ") + p);
    }
}

bool is_pauli_char(char p) {
    return p == 'I' || p == 'X' || p == 'Y' || p == 'Z';
}

const std::vector<std::string>& one_qubit_labels() {
    static const std::vector<std::string> labels = {"X", "Y", "Z"};
    return labels;
}

const std::vector<std::string>& two_qubit_labels() {
    static const std::vector<std::string> labels = [] {
        std::vector<std::string> out;
        const char chars[] = {'I', 'X', 'Y', 'Z'};
        for (char a : chars) {
            for (char b : chars) {
                if (a == 'I' && b == 'I') continue;
                out.push_back(std::string{a, b});
            }
        }
        return out;
    }();
    return labels;
}

}  // namespace detnest
