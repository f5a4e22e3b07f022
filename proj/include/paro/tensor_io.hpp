#pragma once

// Plain-text `.ten` format: the order N, then N extents, then the entries
// in column-major order with 17 significant digits.

#include <iosfwd>
#include <string>

#include "paro/tensor.hpp"

namespace paro {

DenseTensor read_tensor(std::istream& in);
DenseTensor read_tensor_file(const std::string& path);

void write_tensor(std::ostream& out, const DenseTensor& t);
void write_tensor_file(const std::string& path, const DenseTensor& t);

}  // namespace paro
