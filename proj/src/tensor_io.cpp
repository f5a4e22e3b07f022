#include "paro/tensor_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace paro {

DenseTensor read_tensor(std::istream& in) {
  long long order = -1;
  if (!(in >> order) || order < 0) throw ShapeError("tensor file: bad order");
  Shape shape;
  for (long long k = 0; k < order; ++k) {
    long long e = 0;
    if (!(in >> e) || e <= 0) throw ShapeError("tensor file: bad extent");
    shape.push_back(static_cast<std::size_t>(e));
  }
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) {
    std::string token;
    if (!(in >> token)) throw ShapeError("tensor file: truncated data");
    std::size_t used = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw ShapeError("tensor file: bad value '" + token + "'");
    }
    if (used != token.size()) throw ShapeError("tensor file: bad value '" + token + "'");
  }
  std::string extra;
  if (in >> extra) throw ShapeError("tensor file: trailing data");
  return DenseTensor(std::move(shape), std::move(data));
}

DenseTensor read_tensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_tensor(in);
}

void write_tensor(std::ostream& out, const DenseTensor& t) {
  out << t.order() << '\n';
  for (std::size_t k = 0; k < t.order(); ++k) {
    out << (k ? " " : "") << t.extent(k);
  }
  out << '\n';
  char buf[32];
  for (double v : t.data()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
}

void write_tensor_file(const std::string& path, const DenseTensor& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_tensor(out, t);
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace paro
