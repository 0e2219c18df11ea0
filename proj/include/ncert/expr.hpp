#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "ncert/error.hpp"

namespace ncert {

enum class UnaryOp { Neg, Abs, Sin, Cos, Exp, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree over a single variable t. Nodes are shared and
// never mutated after construction, so evaluation is safe from any thread.
class Expr {
public:
    enum class Kind { Constant, Time, Unary, Binary };

    static ExprPtr constant(double value);
    static ExprPtr time();
    static ExprPtr unary(UnaryOp op, ExprPtr child);
    static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

    Kind kind() const { return kind_; }
    double constant_value() const { return value_; }
    UnaryOp unary_op() const { return uop_; }
    BinaryOp binary_op() const { return bop_; }
    const ExprPtr& child() const { return lhs_; }
    const ExprPtr& lhs() const { return lhs_; }
    const ExprPtr& rhs() const { return rhs_; }

private:
    Kind kind_ = Kind::Constant;
    double value_ = 0.0;
    UnaryOp uop_ = UnaryOp::Neg;
    BinaryOp bop_ = BinaryOp::Add;
    ExprPtr lhs_, rhs_;
};

// Recursive-descent parse with standard precedence. '^' binds tighter than
// unary minus, so "-2^2" evaluates to -4. The only legal identifiers are the
// variable "t" and the function names neg/abs/sin/cos/exp/sqrt/pow; anything
// else is a ParseError with its position.
ExprPtr parse_expression(std::string_view source);

// IEEE double evaluation; throws EvalError on division by an exact zero,
// sqrt of a negative, or a NaN produced by pow.
double eval(const Expr& e, double t);
inline double eval(const ExprPtr& e, double t) { return eval(*e, t); }

// Emits a fully parenthesized form; parse(unparse(e)) evaluates identically
// to e at every t (constants are printed with 17 significant digits).
std::string unparse(const Expr& e);
inline std::string unparse(const ExprPtr& e) { return unparse(*e); }

bool depends_on_time(const Expr& e);
inline bool depends_on_time(const ExprPtr& e) { return depends_on_time(*e); }

// Token-aware textual substitution of a named scalar parameter by a literal,
// used to drive sweeps while keeping the language single-variable. Returns
// the rewritten string and counts replacements.
std::string substitute_parameter(std::string_view source, std::string_view name,
                                 double value, int* replacements = nullptr);
std::string substitute_parameters(std::string_view source,
                                  const std::map<std::string, double>& values,
                                  int* replacements = nullptr);

}  // namespace ncert
