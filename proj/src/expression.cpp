#include "vvpm/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

#include "vvpm/error.hpp"

namespace vvpm {

struct Expression::Node {
  enum class Op { Number, X, T, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp };
  Op op = Op::Number;
  double number = 0.0;
  std::shared_ptr<const Node> lhs, rhs;

  bool depends_on_x() const {
    if (op == Op::X) return true;
    return (lhs && lhs->depends_on_x()) || (rhs && rhs->depends_on_x());
  }

  Jet eval(double x, double t) const {
    switch (op) {
      case Op::Number: return {number, 0.0, 0.0};
      case Op::X: return {x, 1.0, 0.0};
      case Op::T: return {t, 0.0, 0.0};
      case Op::Neg: {
        const Jet a = lhs->eval(x, t);
        return {-a.value, -a.d1, -a.d2};
      }
      case Op::Add:
      case Op::Sub: {
        const Jet a = lhs->eval(x, t), b = rhs->eval(x, t);
        const double s = op == Op::Add ? 1.0 : -1.0;
        return {a.value + s * b.value, a.d1 + s * b.d1, a.d2 + s * b.d2};
      }
      case Op::Mul: {
        const Jet a = lhs->eval(x, t), b = rhs->eval(x, t);
        return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
                a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2};
      }
      case Op::Div: {
        const Jet a = lhs->eval(x, t), b = rhs->eval(x, t);
        const double q = a.value / b.value;
        const double q1 = (a.d1 - q * b.d1) / b.value;
        const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.value;
        return {q, q1, q2};
      }
      case Op::Pow: {
        const Jet a = lhs->eval(x, t);
        if (!rhs->depends_on_x()) {
          const double c = rhs->eval(x, t).value;
          const double v = std::pow(a.value, c);
          if (a.d1 == 0.0 && a.d2 == 0.0) return {v, 0.0, 0.0};
          const double p1 = c == 0.0 ? 0.0 : c * std::pow(a.value, c - 1.0);
          const double p2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(a.value, c - 2.0);
          return {v, p1 * a.d1, p2 * a.d1 * a.d1 + p1 * a.d2};
        }
        // a^b = exp(b log a) for an x-dependent exponent.
        const Jet b = rhs->eval(x, t);
        const double l = std::log(a.value), l1 = a.d1 / a.value;
        const double l2 = (a.d2 - l1 * a.d1) / a.value;
        const Jet e{b.value * l, b.d1 * l + b.value * l1, b.d2 * l + 2.0 * b.d1 * l1 + b.value * l2};
        const double v = std::exp(e.value);
        return {v, v * e.d1, v * (e.d2 + e.d1 * e.d1)};
      }
      case Op::Sin: {
        const Jet a = lhs->eval(x, t);
        const double s = std::sin(a.value), c = std::cos(a.value);
        return {s, c * a.d1, c * a.d2 - s * a.d1 * a.d1};
      }
      case Op::Cos: {
        const Jet a = lhs->eval(x, t);
        const double s = std::sin(a.value), c = std::cos(a.value);
        return {c, -s * a.d1, -s * a.d2 - c * a.d1 * a.d1};
      }
      case Op::Exp: {
        const Jet a = lhs->eval(x, t);
        const double e = std::exp(a.value);
        return {e, e * a.d1, e * (a.d2 + a.d1 * a.d1)};
      }
    }
    return {};
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip_space();
    if (pos_ != s_.size()) fail("unexpected character");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression \"" + s_ + "\": " + what + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = make(Node::Op::Add, n, term());
      else if (accept('-')) n = make(Node::Op::Sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Node::Op::Mul, n, unary());
      else if (accept('/')) n = make(Node::Op::Div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Node::Op::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip_space();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept('(')) {
      NodePtr n = expr();
      expect(')');
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string word = s_.substr(start, pos_ - start);
      if (word == "x") return make(Node::Op::X);
      if (word == "t") return make(Node::Op::T);
      Node::Op op;
      if (word == "sin") op = Node::Op::Sin;
      else if (word == "cos") op = Node::Op::Cos;
      else if (word == "exp") op = Node::Op::Exp;
      else {
        pos_ = start;
        fail("unknown identifier '" + word + "'");
      }
      expect('(');
      NodePtr arg = expr();
      expect(')');
      return make(op, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double v = 0.0;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    auto n = std::make_shared<Node>();
    n->op = Node::Op::Number;
    n->number = v;
    return n;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& source) {
  return Expression(source, Parser(source).parse());
}

double Expression::value(double x, double t) const { return root_->eval(x, t).value; }

Jet Expression::jet(double x, double t) const { return root_->eval(x, t); }

}  // namespace vvpm
