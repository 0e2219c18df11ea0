#include "ncert/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

namespace ncert {

ExprPtr Expr::constant(double value) {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Constant;
    e->value_ = value;
    return e;
}

ExprPtr Expr::time() {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Time;
    return e;
}

ExprPtr Expr::unary(UnaryOp op, ExprPtr child) {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Unary;
    e->uop_ = op;
    e->lhs_ = std::move(child);
    return e;
}

ExprPtr Expr::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Binary;
    e->bop_ = op;
    e->lhs_ = std::move(lhs);
    e->rhs_ = std::move(rhs);
    return e;
}

double eval(const Expr& e, double t) {
    switch (e.kind()) {
        case Expr::Kind::Constant:
            return e.constant_value();
        case Expr::Kind::Time:
            return t;
        case Expr::Kind::Unary: {
            const double v = eval(*e.child(), t);
            switch (e.unary_op()) {
                case UnaryOp::Neg: return -v;
                case UnaryOp::Abs: return std::fabs(v);
                case UnaryOp::Sin: return std::sin(v);
                case UnaryOp::Cos: return std::cos(v);
                case UnaryOp::Exp: return std::exp(v);
                case UnaryOp::Sqrt:
                    if (v < 0.0)
                        throw EvalError("sqrt of negative value " + std::to_string(v) +
                                        " at t=" + std::to_string(t));
                    return std::sqrt(v);
            }
            break;
        }
        case Expr::Kind::Binary: {
            const double a = eval(*e.lhs(), t);
            const double b = eval(*e.rhs(), t);
            switch (e.binary_op()) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    if (b == 0.0)
                        throw EvalError("division by zero at t=" + std::to_string(t));
                    return a / b;
                case BinaryOp::Pow: {
                    const double r = std::pow(a, b);
                    if (std::isnan(r) && !std::isnan(a) && !std::isnan(b))
                        throw EvalError("pow(" + std::to_string(a) + ", " + std::to_string(b) +
                                        ") undefined at t=" + std::to_string(t));
                    return r;
                }
            }
            break;
        }
    }
    throw EvalError("malformed expression node");
}

bool depends_on_time(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::Constant: return false;
        case Expr::Kind::Time: return true;
        case Expr::Kind::Unary: return depends_on_time(*e.child());
        case Expr::Kind::Binary:
            return depends_on_time(*e.lhs()) || depends_on_time(*e.rhs());
    }
    return false;
}

namespace {

void format_constant(double v, std::string& out) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void unparse_into(const Expr& e, std::string& out) {
    switch (e.kind()) {
        case Expr::Kind::Constant:
            if (e.constant_value() < 0.0 || std::signbit(e.constant_value())) {
                out += '(';
                format_constant(e.constant_value(), out);
                out += ')';
            } else {
                format_constant(e.constant_value(), out);
            }
            return;
        case Expr::Kind::Time:
            out += 't';
            return;
        case Expr::Kind::Unary: {
            const char* name = nullptr;
            switch (e.unary_op()) {
                case UnaryOp::Neg: name = "neg"; break;
                case UnaryOp::Abs: name = "abs"; break;
                case UnaryOp::Sin: name = "sin"; break;
                case UnaryOp::Cos: name = "cos"; break;
                case UnaryOp::Exp: name = "exp"; break;
                case UnaryOp::Sqrt: name = "sqrt"; break;
            }
            out += name;
            out += '(';
            unparse_into(*e.child(), out);
            out += ')';
            return;
        }
        case Expr::Kind::Binary: {
            char op = 0;
            switch (e.binary_op()) {
                case BinaryOp::Add: op = '+'; break;
                case BinaryOp::Sub: op = '-'; break;
                case BinaryOp::Mul: op = '*'; break;
                case BinaryOp::Div: op = '/'; break;
                case BinaryOp::Pow: op = '^'; break;
            }
            out += '(';
            unparse_into(*e.lhs(), out);
            out += op;
            unparse_into(*e.rhs(), out);
            out += ')';
            return;
        }
    }
}

// Grammar (whitespace-insensitive):
//   sum     := product (('+'|'-') product)*
//   product := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := atom ('^' unary)?          right-associative, exponent may be signed
//   atom    := number | 't' | name '(' sum (',' sum)? ')' | '(' sum ')'
class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    ExprPtr run() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", 0);
        ExprPtr e = sum();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    ExprPtr sum() {
        ExprPtr e = product();
        for (;;) {
            if (accept('+')) e = Expr::binary(BinaryOp::Add, e, product());
            else if (accept('-')) e = Expr::binary(BinaryOp::Sub, e, product());
            else return e;
        }
    }

    ExprPtr product() {
        ExprPtr e = unary();
        for (;;) {
            if (accept('*')) e = Expr::binary(BinaryOp::Mul, e, unary());
            else if (accept('/')) e = Expr::binary(BinaryOp::Div, e, unary());
            else return e;
        }
    }

    ExprPtr unary() {
        if (accept('-')) return Expr::unary(UnaryOp::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    ExprPtr power() {
        ExprPtr base = atom();
        if (accept('^')) return Expr::binary(BinaryOp::Pow, base, unary());
        return base;
    }

    ExprPtr atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("dangling operator", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            const std::size_t open = pos_;
            ++pos_;
            ExprPtr e = sum();
            if (!accept(')')) throw ParseError("unbalanced parenthesis", open);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprPtr number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // 'e' belonged to something else; not a valid exponent
            }
        }
        const std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end != '\0')
            throw ParseError("malformed number '" + text + "'", start);
        return Expr::constant(v);
    }

    ExprPtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "t") return Expr::time();

        UnaryOp op;
        bool is_unary = true;
        if (name == "neg") op = UnaryOp::Neg;
        else if (name == "abs") op = UnaryOp::Abs;
        else if (name == "sin") op = UnaryOp::Sin;
        else if (name == "cos") op = UnaryOp::Cos;
        else if (name == "exp") op = UnaryOp::Exp;
        else if (name == "sqrt") op = UnaryOp::Sqrt;
        else is_unary = false;

        if (is_unary) {
            if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
            ExprPtr arg = sum();
            if (!accept(')')) throw ParseError("unbalanced parenthesis", start);
            return Expr::unary(op, arg);
        }
        if (name == "pow") {
            if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
            ExprPtr a = sum();
            if (!accept(',')) throw ParseError("pow expects two arguments", pos_);
            ExprPtr b = sum();
            if (!accept(')')) throw ParseError("unbalanced parenthesis", start);
            return Expr::binary(BinaryOp::Pow, a, b);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
};

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

ExprPtr parse_expression(std::string_view source) {
    return Parser(source).run();
}

std::string unparse(const Expr& e) {
    std::string out;
    unparse_into(e, out);
    return out;
}

std::string substitute_parameter(std::string_view source, std::string_view name,
                                 double value, int* replacements) {
    std::string out;
    out.reserve(source.size() + 16);
    char lit[48];
    std::snprintf(lit, sizeof(lit), "(%.17g)", value);
    std::size_t i = 0;
    int count = 0;
    while (i < source.size()) {
        const char c = source[i];
        const bool number_continuation =
            i > 0 && (std::isdigit(static_cast<unsigned char>(source[i - 1])) ||
                      source[i - 1] == '.');
        if (is_ident_char(c) && !std::isdigit(static_cast<unsigned char>(c)) &&
            !number_continuation) {
            std::size_t j = i;
            while (j < source.size() && is_ident_char(source[j])) ++j;
            const std::string_view token = source.substr(i, j - i);
            if (token == name) {
                out += lit;
                ++count;
            } else {
                out += token;
            }
            i = j;
        } else {
            out += c;
            ++i;
        }
    }
    if (replacements) *replacements += count;
    return out;
}

std::string substitute_parameters(std::string_view source,
                                  const std::map<std::string, double>& values,
                                  int* replacements) {
    std::string out(source);
    for (const auto& [name, value] : values)
        out = substitute_parameter(out, name, value, replacements);
    return out;
}

}  // namespace ncert
