#pragma once

#include <ostream>

namespace renormfock {

bool run_acceptance_suite(std::ostream& out);

}  // namespace renormfock
