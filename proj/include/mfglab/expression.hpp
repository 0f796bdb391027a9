#ifndef MFGLAB_EXPRESSION_HPP
#define MFGLAB_EXPRESSION_HPP

#include <memory>
#include <stdexcept>
#include <string>

namespace mfglab {

class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position(position) {}
  std::size_t position;
};

struct Interval {
  double lo, hi;
};

/// Variable ranges used by the configuration-time totality check.
struct VariableRanges {
  Interval x{0, 0}, y{0, 0}, z{0, 0}, s{0, 0};
};

/// Arithmetic over x, y, z, s with +, -, *, /, ^, exp, sin, cos, abs and the
/// constants pi and e. Parsing is strict; division and fractional powers are
/// validated over the configured variable ranges by interval arithmetic, so
/// evaluation is total on the domain box once an expression is accepted.
class Expression {
 public:
  static Expression parse(const std::string& text);

  double operator()(double x, double y, double z = 0.0, double s = 0.0) const;

  /// Interval enclosure; throws ExpressionError when a division (or
  /// fractional power) can hit a singular point inside the ranges.
  Interval check_ranges(const VariableRanges& ranges) const;

  const std::string& text() const { return text_; }
  bool uses_variable(char name) const;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace mfglab

#endif  // MFGLAB_EXPRESSION_HPP
