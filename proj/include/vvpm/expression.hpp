#pragma once

#include <memory>
#include <string>

namespace vvpm {

/// Value and first two x-derivatives of an expression at a point.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Scalar function V(x, t) from a small grammar:
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := ('+' | '-') unary | power
///   power  := atom ('^' unary)?
///   atom   := number | 'x' | 't' | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'
/// x-derivatives are exact (second-order forward-mode jets). Immutable and thread safe.
class Expression {
 public:
  /// Throws ConfigError with the offending position.
  static Expression parse(const std::string& source);

  double value(double x, double t) const;
  Jet jet(double x, double t) const;
  const std::string& source() const { return source_; }

  struct Node;

 private:
  Expression(std::string source, std::shared_ptr<const Node> root)
      : source_(std::move(source)), root_(std::move(root)) {}

  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace vvpm
