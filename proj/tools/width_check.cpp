// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Fails the build when the generated machine does not fit the default
// state field of the shadow word.

#include "hirace/fsm.hpp"
#include "hirace/shadow.hpp"

#include <iostream>

int main() {
    const hirace::ShadowLayout layout;
    hirace::fsm::GenerationStats stats;
    const auto machine = hirace::fsm::generate_full_machine({}, &stats);
    const auto capacity = layout.max_state() + 1;
    if (machine.state_count() > capacity) {
        std::cerr << "error: generated machine has " << machine.state_count() << " states but the " << layout.state_bits
                  << "-bit state field holds " << capacity << "\n";
        return 1;
    }
    std::cout << "width check: " << machine.state_count() << " states fit in " << layout.state_bits << " bits ("
              << capacity << ")\n";
    return 0;
}
