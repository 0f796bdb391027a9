#include "mfglab/field.hpp"

namespace mfglab {

ScalarFn field_interpolant(const GridField& f, Interp method) {
  return [field = f, method](double x, double y) { return field.interp(x, y, method); };
}

}  // namespace mfglab
