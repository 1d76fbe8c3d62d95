#include "lawkit/phase.hpp"

#include <stdexcept>

namespace lawkit {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::Elastic: return "elastic";
    case Phase::Plastic: return "plastic";
    case Phase::Joint: return "joint";
  }
  return "?";
}

Phase phase_from_string(const std::string& s) {
  if (s == "init") return Phase::Init;
  if (s == "elastic") return Phase::Elastic;
  if (s == "plastic") return Phase::Plastic;
  if (s == "joint") return Phase::Joint;
  throw std::invalid_argument("unknown phase '" + s + "'");
}

}  // namespace lawkit
