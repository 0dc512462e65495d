#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mkv/jet.hpp"

namespace mkv {

struct ParseError : std::runtime_error {
  ParseError(size_t position, const std::string& message, std::string expected = {})
      : std::runtime_error(message + " at position " + std::to_string(position)),
        position(position),
        expected(std::move(expected)) {}
  size_t position;
  std::string expected;  // comma-separated expected-token summary, may be empty
};

struct EvalError : std::runtime_error {
  EvalError(const std::string& message, std::string subexpression)
      : std::runtime_error(message + " in '" + subexpression + "'"),
        subexpression(std::move(subexpression)) {}
  std::string subexpression;
};

enum class ExprKind { Number, Coord, Param, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class ExprFunc { Exp, Log, Sin, Cos, Tan, Sinh, Cosh, Tanh, Sqrt };

struct ExprNode {
  ExprKind kind;
  double number = 0.0;
  int index = -1;    // coordinate or parameter slot for Coord/Param
  std::string name;  // identifier text for Coord/Param
  ExprFunc func = ExprFunc::Exp;
  std::shared_ptr<const ExprNode> a, b;  // b unused for unary nodes
};

using ExprPtr = std::shared_ptr<const ExprNode>;

/// A parsed scalar expression over declared chart coordinates and named
/// parameters. Immutable after construction; evaluation is pure.
class Expression {
 public:
  Expression() = default;
  explicit Expression(ExprPtr root) : root_(std::move(root)) {}

  bool valid() const { return root_ != nullptr; }
  const ExprPtr& root() const { return root_; }

  /// Grammar-faithful text form; parse(render()) is structurally equal.
  std::string render() const;

  bool same_structure(const Expression& other) const;

  /// Value and exact partials up to `order` (0..3) at `point`.
  Jet eval(std::span<const double> point, std::span<const double> params, int order) const;
  double eval_value(std::span<const double> point, std::span<const double> params) const;

  // Programmatic builders; negative literals become Neg(Number).
  static Expression number(double v);
  static Expression coordinate(int index, std::string name);
  static Expression parameter(int index, std::string name);
  static Expression neg(const Expression& e);
  static Expression add(const Expression& l, const Expression& r);
  static Expression sub(const Expression& l, const Expression& r);
  static Expression mul(const Expression& l, const Expression& r);
  static Expression div(const Expression& l, const Expression& r);
  static Expression pow(const Expression& base, const Expression& exponent);
  static Expression call(ExprFunc f, const Expression& arg);

 private:
  ExprPtr root_;
};

/// Recursive-descent parse of the expression grammar. Every identifier must
/// be a declared coordinate or parameter; anything else is a ParseError.
Expression parse_expression(std::string_view source, std::span<const std::string> coords,
                            std::span<const std::string> params);

const char* func_name(ExprFunc f);

}  // namespace mkv
