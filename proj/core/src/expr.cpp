#include "mkv/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace mkv {

namespace {

ExprPtr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  size_t pos;
  double number = 0.0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    tok_.pos = i_;
    if (i_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    const char c = src_[i_];
    switch (c) {
      case '+': tok_.kind = Tok::Plus; ++i_; return;
      case '-': tok_.kind = Tok::Minus; ++i_; return;
      case '*': tok_.kind = Tok::Star; ++i_; return;
      case '/': tok_.kind = Tok::Slash; ++i_; return;
      case '^': tok_.kind = Tok::Caret; ++i_; return;
      case '(': tok_.kind = Tok::LParen; ++i_; return;
      case ')': tok_.kind = Tok::RParen; ++i_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    throw ParseError(i_, std::string("unexpected character '") + c + "'");
  }

  void lex_number() {
    size_t j = i_;
    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    if (j < src_.size() && src_[j] == '.') {
      ++j;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
        ++k;
        while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
        j = k;
      }
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(src_.data() + i_, src_.data() + j, v);
    if (ec != std::errc() || p != src_.data() + j)
      throw ParseError(i_, "malformed number literal");
    tok_.kind = Tok::Number;
    tok_.number = v;
    i_ = j;
  }

  std::string_view src_;
  size_t i_ = 0;
  Token tok_;
};

// ---------------------------------------------------------------------------
// Parser
//
// expr   := term (("+"|"-") term)*
// term   := factor (("*"|"/") factor)*
// factor := unary ("^" factor)?
// unary  := "-" unary | atom
// atom   := number | identifier | func "(" expr ")" | "(" expr ")"

struct FuncEntry {
  const char* name;
  ExprFunc func;
};

constexpr FuncEntry kFuncs[] = {
    {"exp", ExprFunc::Exp},   {"log", ExprFunc::Log},   {"sin", ExprFunc::Sin},
    {"cos", ExprFunc::Cos},   {"tan", ExprFunc::Tan},   {"sinh", ExprFunc::Sinh},
    {"cosh", ExprFunc::Cosh}, {"tanh", ExprFunc::Tanh}, {"sqrt", ExprFunc::Sqrt},
};

class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> coords,
         std::span<const std::string> params)
      : lex_(src), coords_(coords), params_(params) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    if (lex_.peek().kind != Tok::End)
      throw ParseError(lex_.peek().pos, "trailing input", "operator or end of input");
    return e;
  }

 private:
  ExprPtr expr() {
    ExprPtr l = term();
    while (true) {
      Tok k = lex_.peek().kind;
      if (k != Tok::Plus && k != Tok::Minus) return l;
      lex_.take();
      ExprPtr r = term();
      l = make({k == Tok::Plus ? ExprKind::Add : ExprKind::Sub, 0.0, -1, {}, ExprFunc::Exp, l, r});
    }
  }

  ExprPtr term() {
    ExprPtr l = factor();
    while (true) {
      Tok k = lex_.peek().kind;
      if (k != Tok::Star && k != Tok::Slash) return l;
      lex_.take();
      ExprPtr r = factor();
      l = make({k == Tok::Star ? ExprKind::Mul : ExprKind::Div, 0.0, -1, {}, ExprFunc::Exp, l, r});
    }
  }

  ExprPtr factor() {
    ExprPtr base = unary();
    if (lex_.peek().kind == Tok::Caret) {
      lex_.take();
      ExprPtr exponent = factor();  // right-associative
      return make({ExprKind::Pow, 0.0, -1, {}, ExprFunc::Exp, base, exponent});
    }
    return base;
  }

  ExprPtr unary() {
    if (lex_.peek().kind == Tok::Minus) {
      lex_.take();
      return make({ExprKind::Neg, 0.0, -1, {}, ExprFunc::Exp, unary(), nullptr});
    }
    return atom();
  }

  ExprPtr atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Tok::Number:
        return make({ExprKind::Number, t.number, -1, {}, ExprFunc::Exp, nullptr, nullptr});
      case Tok::LParen: {
        ExprPtr e = expr();
        expect(Tok::RParen, ")");
        return e;
      }
      case Tok::Ident: {
        for (const auto& f : kFuncs) {
          if (t.text == f.name) {
            expect(Tok::LParen, "(");
            ExprPtr arg = expr();
            expect(Tok::RParen, ")");
            return make({ExprKind::Call, 0.0, -1, {}, f.func, arg, nullptr});
          }
        }
        for (size_t i = 0; i < coords_.size(); ++i)
          if (coords_[i] == t.text)
            return make({ExprKind::Coord, 0.0, static_cast<int>(i), t.text, ExprFunc::Exp,
                         nullptr, nullptr});
        for (size_t i = 0; i < params_.size(); ++i)
          if (params_[i] == t.text)
            return make({ExprKind::Param, 0.0, static_cast<int>(i), t.text, ExprFunc::Exp,
                         nullptr, nullptr});
        throw ParseError(t.pos, "unbound identifier '" + t.text + "'",
                         "declared coordinate or parameter");
      }
      default:
        throw ParseError(t.pos, "expected an operand",
                         "number, identifier, function call or '('");
    }
  }

  void expect(Tok k, const char* what) {
    if (lex_.peek().kind != k)
      throw ParseError(lex_.peek().pos, std::string("expected '") + what + "'", what);
    lex_.take();
  }

  Lexer lex_;
  std::span<const std::string> coords_;
  std::span<const std::string> params_;
};

// ---------------------------------------------------------------------------
// Rendering

std::string format_number(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

bool is_atomic(const ExprNode& n) {
  return n.kind == ExprKind::Number || n.kind == ExprKind::Coord || n.kind == ExprKind::Param ||
         n.kind == ExprKind::Call;
}

void render_node(const ExprNode& n, std::string& out);

void render_child(const ExprNode& c, bool parens, std::string& out) {
  if (parens) {
    out += '(';
    render_node(c, out);
    out += ')';
  } else {
    render_node(c, out);
  }
}

void render_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprKind::Number:
      out += format_number(n.number);
      return;
    case ExprKind::Coord:
    case ExprKind::Param:
      out += n.name;
      return;
    case ExprKind::Call:
      out += func_name(n.func);
      out += '(';
      render_node(*n.a, out);
      out += ')';
      return;
    case ExprKind::Neg:
      out += '-';
      // unary := "-" unary | atom: only another unary or an atom may follow bare
      render_child(*n.a, !(is_atomic(*n.a) || n.a->kind == ExprKind::Neg), out);
      return;
    case ExprKind::Add:
    case ExprKind::Sub: {
      render_child(*n.a, false, out);  // left-associative chain reparses identically
      out += (n.kind == ExprKind::Add) ? " + " : " - ";
      const bool rparen = n.b->kind == ExprKind::Add || n.b->kind == ExprKind::Sub;
      render_child(*n.b, rparen, out);
      return;
    }
    case ExprKind::Mul:
    case ExprKind::Div: {
      const bool lparen = n.a->kind == ExprKind::Add || n.a->kind == ExprKind::Sub;
      render_child(*n.a, lparen, out);
      out += (n.kind == ExprKind::Mul) ? "*" : "/";
      const bool rparen = n.b->kind == ExprKind::Add || n.b->kind == ExprKind::Sub ||
                          n.b->kind == ExprKind::Mul || n.b->kind == ExprKind::Div;
      render_child(*n.b, rparen, out);
      return;
    }
    case ExprKind::Pow: {
      // base is a unary production: atoms and Neg pass bare, everything else
      // (including a nested Pow, since "^" is right-associative) needs parens
      const bool lparen = !(is_atomic(*n.a) || n.a->kind == ExprKind::Neg);
      render_child(*n.a, lparen, out);
      out += '^';
      const bool rparen = n.b->kind == ExprKind::Add || n.b->kind == ExprKind::Sub ||
                          n.b->kind == ExprKind::Mul || n.b->kind == ExprKind::Div;
      render_child(*n.b, rparen, out);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

Jet eval_node(const ExprNode& n, std::span<const double> point, std::span<const double> params,
              int dim, int order) {
  switch (n.kind) {
    case ExprKind::Number:
      return Jet::constant(dim, order, n.number);
    case ExprKind::Coord:
      return Jet::variable(dim, order, n.index, point[static_cast<size_t>(n.index)]);
    case ExprKind::Param:
      return Jet::constant(dim, order, params[static_cast<size_t>(n.index)]);
    case ExprKind::Neg:
      return -eval_node(*n.a, point, params, dim, order);
    case ExprKind::Add:
      return eval_node(*n.a, point, params, dim, order) +
             eval_node(*n.b, point, params, dim, order);
    case ExprKind::Sub:
      return eval_node(*n.a, point, params, dim, order) -
             eval_node(*n.b, point, params, dim, order);
    case ExprKind::Mul:
      return eval_node(*n.a, point, params, dim, order) *
             eval_node(*n.b, point, params, dim, order);
    case ExprKind::Div: {
      Jet num = eval_node(*n.a, point, params, dim, order);
      Jet den = eval_node(*n.b, point, params, dim, order);
      try {
        return num / den;
      } catch (const JetDomainError& e) {
        std::string sub;
        render_node(n, sub);
        throw EvalError(e.what(), sub);
      }
    }
    case ExprKind::Pow: {
      Jet base = eval_node(*n.a, point, params, dim, order);
      Jet exponent = eval_node(*n.b, point, params, dim, order);
      try {
        return pow(base, exponent);
      } catch (const JetDomainError& e) {
        std::string sub;
        render_node(n, sub);
        throw EvalError(e.what(), sub);
      }
    }
    case ExprKind::Call: {
      Jet arg = eval_node(*n.a, point, params, dim, order);
      try {
        switch (n.func) {
          case ExprFunc::Exp: return exp(arg);
          case ExprFunc::Log: return log(arg);
          case ExprFunc::Sin: return sin(arg);
          case ExprFunc::Cos: return cos(arg);
          case ExprFunc::Tan: return tan(arg);
          case ExprFunc::Sinh: return sinh(arg);
          case ExprFunc::Cosh: return cosh(arg);
          case ExprFunc::Tanh: return tanh(arg);
          case ExprFunc::Sqrt: return sqrt(arg);
        }
      } catch (const JetDomainError& e) {
        std::string sub;
        render_node(n, sub);
        throw EvalError(e.what(), sub);
      }
      throw std::logic_error("unknown function");
    }
  }
  throw std::logic_error("unknown node kind");
}

bool same_node(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Number:
      return a.number == b.number;
    case ExprKind::Coord:
    case ExprKind::Param:
      return a.index == b.index && a.name == b.name;
    case ExprKind::Call:
      if (a.func != b.func) return false;
      return same_node(*a.a, *b.a);
    case ExprKind::Neg:
      return same_node(*a.a, *b.a);
    default:
      return same_node(*a.a, *b.a) && same_node(*a.b, *b.b);
  }
}

}  // namespace

const char* func_name(ExprFunc f) {
  for (const auto& e : kFuncs)
    if (e.func == f) return e.name;
  return "?";
}

std::string Expression::render() const {
  std::string out;
  if (root_) render_node(*root_, out);
  return out;
}

bool Expression::same_structure(const Expression& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return same_node(*root_, *other.root_);
}

Jet Expression::eval(std::span<const double> point, std::span<const double> params,
                     int order) const {
  if (!root_) throw std::logic_error("evaluating empty expression");
  return eval_node(*root_, point, params, static_cast<int>(point.size()), order);
}

double Expression::eval_value(std::span<const double> point,
                              std::span<const double> params) const {
  return eval(point, params, 0).value();
}

Expression parse_expression(std::string_view source, std::span<const std::string> coords,
                            std::span<const std::string> params) {
  Parser p(source, coords, params);
  return Expression(p.parse());
}

Expression Expression::number(double v) {
  if (v < 0.0) return neg(number(-v));
  return Expression(make({ExprKind::Number, v, -1, {}, ExprFunc::Exp, nullptr, nullptr}));
}
Expression Expression::coordinate(int index, std::string name) {
  return Expression(
      make({ExprKind::Coord, 0.0, index, std::move(name), ExprFunc::Exp, nullptr, nullptr}));
}
Expression Expression::parameter(int index, std::string name) {
  return Expression(
      make({ExprKind::Param, 0.0, index, std::move(name), ExprFunc::Exp, nullptr, nullptr}));
}
Expression Expression::neg(const Expression& e) {
  return Expression(make({ExprKind::Neg, 0.0, -1, {}, ExprFunc::Exp, e.root(), nullptr}));
}
Expression Expression::add(const Expression& l, const Expression& r) {
  return Expression(make({ExprKind::Add, 0.0, -1, {}, ExprFunc::Exp, l.root(), r.root()}));
}
Expression Expression::sub(const Expression& l, const Expression& r) {
  return Expression(make({ExprKind::Sub, 0.0, -1, {}, ExprFunc::Exp, l.root(), r.root()}));
}
Expression Expression::mul(const Expression& l, const Expression& r) {
  return Expression(make({ExprKind::Mul, 0.0, -1, {}, ExprFunc::Exp, l.root(), r.root()}));
}
Expression Expression::div(const Expression& l, const Expression& r) {
  return Expression(make({ExprKind::Div, 0.0, -1, {}, ExprFunc::Exp, l.root(), r.root()}));
}
Expression Expression::pow(const Expression& base, const Expression& exponent) {
  return Expression(make({ExprKind::Pow, 0.0, -1, {}, ExprFunc::Exp, base.root(), exponent.root()}));
}
Expression Expression::call(ExprFunc f, const Expression& arg) {
  return Expression(make({ExprKind::Call, 0.0, -1, {}, f, arg.root(), nullptr}));
}

}  // namespace mkv
