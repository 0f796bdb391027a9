#include "mfglab/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace mfglab {

namespace {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, exp_fn, sin_fn, cos_fn, abs_fn };

}  // namespace

struct Expression::Node {
  Op op;
  double value = 0;   // constants
  char var = 0;       // variables
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ExpressionError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+')) {
        lhs = make_node(Op::add, lhs, parse_term());
      } else if (eat('-')) {
        lhs = make_node(Op::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (eat('*')) {
        lhs = make_node(Op::mul, lhs, parse_unary());
      } else if (eat('/')) {
        lhs = make_node(Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (eat('-')) return make_node(Op::neg, parse_unary());
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (eat('^')) return make_node(Op::pow, base, parse_unary());
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    if (eat('(')) {
      NodePtr e = parse_expr();
      if (!eat(')')) throw ExpressionError("expected ')'", pos_);
      return e;
    }
    throw ExpressionError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    std::size_t consumed = 0;
    double v;
    try {
      v = std::stod(text_.substr(start), &consumed);
    } catch (const std::exception&) {
      throw ExpressionError("malformed number", start);
    }
    pos_ = start + consumed;
    auto n = make_node(Op::constant);
    const_cast<Expression::Node*>(n.get())->value = v;
    return n;
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "pi" || name == "e") {
      auto n = make_node(Op::constant);
      const_cast<Expression::Node*>(n.get())->value =
          name == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    if (name.size() == 1 && (name[0] == 'x' || name[0] == 'y' || name[0] == 'z' ||
                             name[0] == 's')) {
      auto n = make_node(Op::variable);
      const_cast<Expression::Node*>(n.get())->var = name[0];
      return n;
    }
    Op fn;
    if (name == "exp") fn = Op::exp_fn;
    else if (name == "sin") fn = Op::sin_fn;
    else if (name == "cos") fn = Op::cos_fn;
    else if (name == "abs") fn = Op::abs_fn;
    else throw ExpressionError("unknown identifier '" + name + "'", start);
    if (!eat('(')) throw ExpressionError("expected '(' after function name", pos_);
    NodePtr arg = parse_expr();
    if (!eat(')')) throw ExpressionError("expected ')'", pos_);
    return make_node(fn, arg);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

double eval_node(const Expression::Node& n, double x, double y, double z, double s) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable:
      switch (n.var) {
        case 'x': return x;
        case 'y': return y;
        case 'z': return z;
        default: return s;
      }
    case Op::add: return eval_node(*n.a, x, y, z, s) + eval_node(*n.b, x, y, z, s);
    case Op::sub: return eval_node(*n.a, x, y, z, s) - eval_node(*n.b, x, y, z, s);
    case Op::mul: return eval_node(*n.a, x, y, z, s) * eval_node(*n.b, x, y, z, s);
    case Op::div: return eval_node(*n.a, x, y, z, s) / eval_node(*n.b, x, y, z, s);
    case Op::pow:
      return std::pow(eval_node(*n.a, x, y, z, s), eval_node(*n.b, x, y, z, s));
    case Op::neg: return -eval_node(*n.a, x, y, z, s);
    case Op::exp_fn: return std::exp(eval_node(*n.a, x, y, z, s));
    case Op::sin_fn: return std::sin(eval_node(*n.a, x, y, z, s));
    case Op::cos_fn: return std::cos(eval_node(*n.a, x, y, z, s));
    case Op::abs_fn: return std::abs(eval_node(*n.a, x, y, z, s));
  }
  return 0;
}

Interval ival(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

Interval ival_mul(Interval a, Interval b) {
  const double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]})};
}

bool is_integer_constant(const Expression::Node& n, double& k) {
  if (n.op == Op::constant && n.value == std::floor(n.value)) {
    k = n.value;
    return true;
  }
  if (n.op == Op::neg && n.a) {
    double inner;
    if (is_integer_constant(*n.a, inner)) {
      k = -inner;
      return true;
    }
  }
  return false;
}

Interval interval_node(const Expression::Node& n, const VariableRanges& r) {
  switch (n.op) {
    case Op::constant: return {n.value, n.value};
    case Op::variable:
      switch (n.var) {
        case 'x': return r.x;
        case 'y': return r.y;
        case 'z': return r.z;
        default: return r.s;
      }
    case Op::add: {
      const Interval a = interval_node(*n.a, r), b = interval_node(*n.b, r);
      return {a.lo + b.lo, a.hi + b.hi};
    }
    case Op::sub: {
      const Interval a = interval_node(*n.a, r), b = interval_node(*n.b, r);
      return {a.lo - b.hi, a.hi - b.lo};
    }
    case Op::mul:
      return ival_mul(interval_node(*n.a, r), interval_node(*n.b, r));
    case Op::div: {
      const Interval a = interval_node(*n.a, r), b = interval_node(*n.b, r);
      if (b.lo <= 0.0 && b.hi >= 0.0)
        throw ExpressionError("denominator can vanish on the domain box", 0);
      return ival_mul(a, ival(1.0 / b.lo, 1.0 / b.hi));
    }
    case Op::pow: {
      const Interval a = interval_node(*n.a, r);
      double k;
      if (is_integer_constant(*n.b, k)) {
        if (k < 0 && a.lo <= 0.0 && a.hi >= 0.0)
          throw ExpressionError("negative power of a base that can vanish", 0);
        const int ik = static_cast<int>(k);
        Interval out{1, 1};
        Interval base = a;
        if (ik < 0) base = ival(1.0 / a.lo, 1.0 / a.hi);
        const int reps = std::abs(ik);
        if (reps == 0) return {1, 1};
        out = base;
        for (int i = 1; i < reps; ++i) out = ival_mul(out, base);
        if (reps % 2 == 0 && out.lo < 0.0) out.lo = 0.0;  // even powers
        return out;
      }
      if (a.lo < 0.0)
        throw ExpressionError("fractional power of a possibly-negative base", 0);
      const Interval b = interval_node(*n.b, r);
      const double c[4] = {std::pow(a.lo, b.lo), std::pow(a.lo, b.hi),
                           std::pow(a.hi, b.lo), std::pow(a.hi, b.hi)};
      return {std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]})};
    }
    case Op::neg: {
      const Interval a = interval_node(*n.a, r);
      return {-a.hi, -a.lo};
    }
    case Op::exp_fn: {
      const Interval a = interval_node(*n.a, r);
      return {std::exp(a.lo), std::exp(a.hi)};
    }
    case Op::sin_fn:
    case Op::cos_fn:
      interval_node(*n.a, r);  // still validate the argument subtree
      return {-1.0, 1.0};
    case Op::abs_fn: {
      const Interval a = interval_node(*n.a, r);
      if (a.lo >= 0) return a;
      if (a.hi <= 0) return {-a.hi, -a.lo};
      return {0.0, std::max(-a.lo, a.hi)};
    }
  }
  return {0, 0};
}

bool uses_var_node(const Expression::Node& n, char name) {
  if (n.op == Op::variable) return n.var == name;
  if (n.a && uses_var_node(*n.a, name)) return true;
  if (n.b && uses_var_node(*n.b, name)) return true;
  return false;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).run();
  return e;
}

double Expression::operator()(double x, double y, double z, double s) const {
  return eval_node(*root_, x, y, z, s);
}

Interval Expression::check_ranges(const VariableRanges& ranges) const {
  return interval_node(*root_, ranges);
}

bool Expression::uses_variable(char name) const { return uses_var_node(*root_, name); }

}  // namespace mfglab
