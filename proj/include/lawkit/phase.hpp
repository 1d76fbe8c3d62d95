#pragma once

#include <string>

namespace lawkit {

/// Which law body an evolution step may change.
enum class Phase { Init, Elastic, Plastic, Joint };

const char* to_string(Phase p);
/// Throws std::invalid_argument.
Phase phase_from_string(const std::string& s);

}  // namespace lawkit
