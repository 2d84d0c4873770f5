#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "trisym/types.hpp"

namespace trisym {

// Evaluation point for symbol expressions: time, space, frequency, and the
// weight bxi = sqrt(1 + |xi|^2).
struct EvalPoint {
  real t = 0;
  vec x;
  vec xi;
  real bxi = 1;

  static EvalPoint make(real t, vec x, vec xi) {
    EvalPoint p;
    p.t = t;
    p.x = std::move(x);
    p.xi = std::move(xi);
    p.bxi = std::sqrt(1.0 + p.xi.squaredNorm());
    return p;
  }
};

// Scalar expression over (t, x1..xn, xi1..xin, bracket_xi).
//
// Grammar: + - * / ^ (right associative, binds tighter than unary minus),
// parentheses, and the functions abs, sqrt, exp, min, max, sstep. sstep is
// the C^3 smoothstep: clamp the argument to [0,1], then u^4(35-84u+70u^2-20u^3).
// Values are immutable and cheap to copy; arithmetic on Expr builds composed
// expressions.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view src, int nx, int nxi);
  static Expr constant(real v) {
    Expr e;
    e.prog_ = std::make_shared<std::vector<Node>>();
    e.prog_->push_back(Node{Op::Const, -1, -1, v, 0});
    e.root_ = 0;
    e.source_ = format_const(v);
    return e;
  }

  bool empty() const { return !prog_; }

  real operator()(const EvalPoint& p) const {
    if (!prog_) throw std::logic_error("evaluating an empty expression");
    const auto& prog = *prog_;
    scratch_.resize(prog.size());
    for (std::size_t i = 0; i < prog.size(); ++i) {
      const Node& n = prog[i];
      real v = 0;
      switch (n.op) {
        case Op::Const: v = n.value; break;
        case Op::VarT: v = p.t; break;
        case Op::VarX: v = p.x[n.index]; break;
        case Op::VarXi: v = p.xi[n.index]; break;
        case Op::VarBXi: v = p.bxi; break;
        case Op::Add: v = scratch_[n.a] + scratch_[n.b]; break;
        case Op::Sub: v = scratch_[n.a] - scratch_[n.b]; break;
        case Op::Mul: v = scratch_[n.a] * scratch_[n.b]; break;
        case Op::Div: v = scratch_[n.a] / scratch_[n.b]; break;
        case Op::Pow: v = std::pow(scratch_[n.a], scratch_[n.b]); break;
        case Op::Neg: v = -scratch_[n.a]; break;
        case Op::Abs: v = std::abs(scratch_[n.a]); break;
        case Op::Sqrt: v = std::sqrt(scratch_[n.a]); break;
        case Op::Exp: v = std::exp(scratch_[n.a]); break;
        case Op::Min: v = std::min(scratch_[n.a], scratch_[n.b]); break;
        case Op::Max: v = std::max(scratch_[n.a], scratch_[n.b]); break;
        case Op::SStep: {
          const real u = std::min(1.0, std::max(0.0, scratch_[n.a]));
          const real u2 = u * u;
          v = u2 * u2 * (35.0 - 84.0 * u + u2 * (70.0 - 20.0 * u));
          break;
        }
      }
      scratch_[i] = v;
    }
    return scratch_[static_cast<std::size_t>(root_)];
  }

  const std::string& source() const { return source_; }

  bool depends_on_t() const { return depends_on(Op::VarT); }
  bool depends_on_x() const { return depends_on(Op::VarX); }
  bool depends_on_xi() const { return depends_on(Op::VarXi) || depends_on(Op::VarBXi); }

  friend Expr operator+(const Expr& a, const Expr& b) { return combine(Op::Add, a, b, "+"); }
  friend Expr operator-(const Expr& a, const Expr& b) { return combine(Op::Sub, a, b, "-"); }
  friend Expr operator*(const Expr& a, const Expr& b) { return combine(Op::Mul, a, b, "*"); }
  friend Expr operator/(const Expr& a, const Expr& b) { return combine(Op::Div, a, b, "/"); }
  friend Expr operator-(const Expr& a) {
    Expr e = a.clone_nodes();
    e.prog_->push_back(Node{Op::Neg, e.root_, -1, 0, 0});
    e.root_ = static_cast<int>(e.prog_->size()) - 1;
    e.source_ = "(-(" + a.source_ + "))";
    return e;
  }
  friend Expr pow(const Expr& a, const Expr& b) { return combine(Op::Pow, a, b, "^"); }
  friend Expr expr_abs(const Expr& a) { return unary(Op::Abs, a, "abs"); }
  friend Expr expr_sqrt(const Expr& a) { return unary(Op::Sqrt, a, "sqrt"); }
  friend Expr expr_exp(const Expr& a) { return unary(Op::Exp, a, "exp"); }
  friend Expr expr_min(const Expr& a, const Expr& b) { return fn2(Op::Min, a, b, "min"); }
  friend Expr expr_max(const Expr& a, const Expr& b) { return fn2(Op::Max, a, b, "max"); }
  friend Expr smootherstep(const Expr& a) { return unary(Op::SStep, a, "sstep"); }

  static Expr var_t() { return leaf(Op::VarT, 0, "t"); }
  static Expr var_x(int i) { return leaf(Op::VarX, i, "x" + std::to_string(i + 1)); }
  static Expr var_xi(int i) { return leaf(Op::VarXi, i, "xi" + std::to_string(i + 1)); }
  static Expr var_bxi() { return leaf(Op::VarBXi, 0, "bracket_xi"); }

 private:
  enum class Op : std::uint8_t {
    Const, VarT, VarX, VarXi, VarBXi,
    Add, Sub, Mul, Div, Pow, Neg,
    Abs, Sqrt, Exp, Min, Max, SStep
  };
  struct Node {
    Op op;
    int a = -1, b = -1;
    real value = 0;
    int index = 0;
  };

  std::shared_ptr<std::vector<Node>> prog_;
  int root_ = -1;
  std::string source_;
  mutable std::vector<real> scratch_;

  bool depends_on(Op op) const {
    if (!prog_) return false;
    for (const auto& n : *prog_)
      if (n.op == op) return true;
    return false;
  }

  static std::string format_const(real v);

  Expr clone_nodes() const {
    Expr e;
    e.prog_ = std::make_shared<std::vector<Node>>(*prog_);
    e.root_ = root_;
    return e;
  }

  static Expr leaf(Op op, int index, std::string src) {
    Expr e;
    e.prog_ = std::make_shared<std::vector<Node>>();
    e.prog_->push_back(Node{op, -1, -1, 0, index});
    e.root_ = 0;
    e.source_ = std::move(src);
    return e;
  }

  static Expr merge(const Expr& a, const Expr& b, int& ra, int& rb) {
    Expr e = a.clone_nodes();
    const int off = static_cast<int>(e.prog_->size());
    for (const auto& n : *b.prog_) {
      Node m = n;
      if (m.a >= 0) m.a += off;
      if (m.b >= 0) m.b += off;
      e.prog_->push_back(m);
    }
    ra = a.root_;
    rb = b.root_ + off;
    return e;
  }

  static Expr combine(Op op, const Expr& a, const Expr& b, const char* sym) {
    int ra, rb;
    Expr e = merge(a, b, ra, rb);
    e.prog_->push_back(Node{op, ra, rb, 0, 0});
    e.root_ = static_cast<int>(e.prog_->size()) - 1;
    e.source_ = "((" + a.source_ + ")" + sym + "(" + b.source_ + "))";
    return e;
  }

  static Expr unary(Op op, const Expr& a, const char* fname) {
    Expr e = a.clone_nodes();
    e.prog_->push_back(Node{op, e.root_, -1, 0, 0});
    e.root_ = static_cast<int>(e.prog_->size()) - 1;
    e.source_ = std::string(fname) + "(" + a.source_ + ")";
    return e;
  }

  static Expr fn2(Op op, const Expr& a, const Expr& b, const char* fname) {
    int ra, rb;
    Expr e = merge(a, b, ra, rb);
    e.prog_->push_back(Node{op, ra, rb, 0, 0});
    e.root_ = static_cast<int>(e.prog_->size()) - 1;
    e.source_ = std::string(fname) + "(" + a.source_ + "," + b.source_ + ")";
    return e;
  }

  friend class ExprParser;
};

class ExprParser {
 public:
  ExprParser(std::string_view src, int nx, int nxi) : src_(src), nx_(nx), nxi_(nxi) {}

  Expr run() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    e.source_ = std::string(src_);
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int nx_, nxi_;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprParseError("expression error at position " + std::to_string(pos_) + ": " + msg,
                         pos_);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
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

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (eat('+')) e = e + parse_term();
      else if (eat('-')) e = e - parse_term();
      else return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (eat('*')) e = e * parse_factor();
      else if (eat('/')) e = e / parse_factor();
      else return e;
    }
  }

  // '-' applies to a whole power, so -2^2 is -(2^2).
  Expr parse_factor() {
    if (eat('-')) return -parse_factor();
    Expr base = parse_primary();
    if (eat('^')) return pow(base, parse_factor());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected a value");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return Expr::constant(v);
  }

  Expr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    if (peek() == '(') {
      ++pos_;
      if (name == "abs" || name == "sqrt" || name == "exp" || name == "sstep") {
        Expr a = parse_expr();
        if (!eat(')')) fail("expected ')' after " + name);
        if (name == "abs") return expr_abs(a);
        if (name == "sqrt") return expr_sqrt(a);
        if (name == "exp") return expr_exp(a);
        return smootherstep(a);
      }
      if (name == "min" || name == "max") {
        Expr a = parse_expr();
        if (!eat(',')) fail("expected ',' in " + name);
        Expr b = parse_expr();
        if (!eat(')')) fail("expected ')' after " + name);
        return name == "min" ? expr_min(a, b) : expr_max(a, b);
      }
      pos_ = start;
      fail("unknown function '" + name + "'");
    }

    if (name == "t") return Expr::var_t();
    if (name == "bracket_xi") return Expr::var_bxi();
    if (name.size() >= 2 && name[0] == 'x' && name[1] != 'i') {
      const int idx = parse_coord_index(name.substr(1), start);
      if (idx < 1 || idx > nx_) {
        pos_ = start;
        fail("space coordinate " + name + " out of range (nx = " + std::to_string(nx_) + ")");
      }
      return Expr::var_x(idx - 1);
    }
    if (name.size() >= 3 && name.rfind("xi", 0) == 0) {
      const int idx = parse_coord_index(name.substr(2), start);
      if (idx < 1 || idx > nxi_) {
        pos_ = start;
        fail("frequency coordinate " + name + " out of range (nxi = " + std::to_string(nxi_) +
             ")");
      }
      return Expr::var_xi(idx - 1);
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  int parse_coord_index(const std::string& digits, std::size_t at) {
    if (digits.empty() || digits.size() > 3) {
      pos_ = at;
      fail("bad coordinate index '" + digits + "'");
    }
    for (char d : digits)
      if (!std::isdigit(static_cast<unsigned char>(d))) {
        pos_ = at;
        fail("bad coordinate index '" + digits + "'");
      }
    return std::atoi(digits.c_str());
  }
};

inline Expr Expr::parse(std::string_view src, int nx, int nxi) {
  return ExprParser(src, nx, nxi).run();
}

inline std::string Expr::format_const(real v) { return to_shortest_string(v); }

}  // namespace trisym
