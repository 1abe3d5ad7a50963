#include "chew/tensor.hpp"

#include <sstream>

namespace chew {

std::string shape_to_string(const std::vector<std::size_t>& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ", ";
    os << dims[i];
  }
  os << ']';
  return os.str();
}

}  // namespace chew
