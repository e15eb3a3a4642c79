#pragma once

#include <iosfwd>
#include <string>

#include "qlab/rmt.hpp"

namespace qlab {

// One JSON header line {d, r, lambda, gap, seed}, a newline, then W (d*d) and
// U (d*r) as little-endian float64 in column-major order.
void write_instance(std::ostream& os, const DeformedWignerInstance& inst);
InstancePtr read_instance(std::istream& is);

void save_instance(const DeformedWignerInstance& inst, const std::string& path);
InstancePtr load_instance(const std::string& path);

}  // namespace qlab
