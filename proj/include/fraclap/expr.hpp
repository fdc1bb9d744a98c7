#pragma once

#include <cctype>
#include <memory>

#include "fracops.hpp"

namespace fraclap {

// ---------------------------------------------------------------------------
// Source expressions: real literals, pi, x, + - * / ^, parentheses and the functions
// sin, cos, exp, pow(u, v), kappa_left(alpha), kappa_right(alpha).
// ^ is right associative and binds tighter than unary minus (-x^2 = -(x^2)).
// kappa_left(alpha) = (x-a)^{alpha-1}, kappa_right(alpha) = (b-x)^{alpha-1}; alpha must be constant.

class Expr {
 public:
  /// Value at a point of (a,b) with its endpoint distances.
  double operator()(const Pt& p) const { return root_->eval(p); }
  double operator()(double x, Interval iv) const { return root_->eval(Pt{x, x - iv.a, iv.b - x}); }

  /// Leading endpoint exponents when they are non-integer; propagated through sums (min),
  /// products (sum), quotients (difference) and constant powers (scaled).
  /// x counts as the distance to a only when a = 0.
  std::optional<Exponents> tags(double a = 0.0) const {
    const auto e = root_->exps(a == 0.0);
    if (is_symbolic_exponent(e.first) || is_symbolic_exponent(e.second)) return e;
    return std::nullopt;
  }

  GridFunction sample_on(const std::vector<double>& mesh) const {
    return sample(mesh, PointFn([this](const Pt& p) { return (*this)(p); }), tags(mesh.front()));
  }

  const std::string& source() const { return src_; }

  friend Expr parse_expression(const std::string& src);

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(const Pt& p) const = 0;
    // Exponents of the leading endpoint behaviour; 0 for bounded non-vanishing terms.
    virtual Exponents exps(bool /*xa*/) const { return {0.0, 0.0}; }
    virtual std::optional<double> constant() const { return std::nullopt; }
  };
  using Ptr = std::unique_ptr<Node>;

  struct Num : Node {
    double v;
    explicit Num(double v) : v(v) {}
    double eval(const Pt&) const override { return v; }
    std::optional<double> constant() const override { return v; }
  };
  struct Var : Node {
    double eval(const Pt& p) const override { return p.x; }
  };
  struct Kappa : Node {
    // kappa carries its own exponent whatever a is.
    double alpha;
    Side side;
    Kappa(double a, Side s) : alpha(a), side(s) {}
    double eval(const Pt& p) const override { return std::pow(side == Side::left ? p.da : p.db, alpha - 1.0); }
    Exponents exps(bool /*xa*/) const override {
      return side == Side::left ? Exponents{alpha - 1.0, 0.0} : Exponents{0.0, alpha - 1.0};
    }
  };
  struct Unary : Node {
    char op;
    Ptr a;
    Unary(char op, Ptr a) : op(op), a(std::move(a)) {}
    double eval(const Pt& p) const override {
      const double v = a->eval(p);
      switch (op) {
        case '-': return -v;
        case 's': return std::sin(v);
        case 'c': return std::cos(v);
        default: return std::exp(v);
      }
    }
    Exponents exps(bool xa) const override { return op == '-' ? a->exps(xa) : Exponents{0.0, 0.0}; }
    std::optional<double> constant() const override {
      auto c = a->constant();
      if (!c) return std::nullopt;
      return eval(Pt{0, 0, 0});
    }
  };
  struct Binary : Node {
    char op;
    Ptr l, r;
    Binary(char op, Ptr l, Ptr r) : op(op), l(std::move(l)), r(std::move(r)) {}
    double eval(const Pt& p) const override {
      const double a = l->eval(p), b = r->eval(p);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
    static double lead(double a, double b) {
      const bool sa = is_symbolic_exponent(a), sb = is_symbolic_exponent(b);
      if (sa && sb) return std::min(a, b);
      return sa ? a : (sb ? b : 0.0);
    }
    Exponents exps(bool xa) const override {
      const Exponents a = l->exps(xa), b = r->exps(xa);
      switch (op) {
        case '+':
        case '-': return {lead(a.first, b.first), lead(a.second, b.second)};
        case '*': return {a.first + b.first, a.second + b.second};
        case '/': return {a.first - b.first, a.second - b.second};
        default: {
          const auto c = r->constant();
          if (!c) return {0.0, 0.0};
          return {a.first * *c, a.second * *c};
        }
      }
    }
    std::optional<double> constant() const override {
      if (!l->constant() || !r->constant()) return std::nullopt;
      return eval(Pt{0, 0, 0});
    }
  };
  // x as a power of the distance to a, valid when a = 0: lets x^c carry its exponent.
  struct VarAtZero : Var {
    Exponents exps(bool xa) const override { return {xa ? 1.0 : 0.0, 0.0}; }
  };

  class Parser {
   public:
    explicit Parser(const std::string& s) : s_(s) {}

    Ptr parse() {
      Ptr e = expr();
      skip();
      if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
      return e;
    }

   private:
    [[noreturn]] void fail(const std::string& msg) const {
      throw error(errc::parse, msg + " at position " + std::to_string(i_));
    }
    void skip() {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(char c) {
      skip();
      if (i_ < s_.size() && s_[i_] == c) {
        ++i_;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    Ptr expr() {
      Ptr e = term();
      for (;;) {
        if (eat('+')) e = std::make_unique<Binary>('+', std::move(e), term());
        else if (eat('-')) e = std::make_unique<Binary>('-', std::move(e), term());
        else return e;
      }
    }
    Ptr term() {
      Ptr e = unary();
      for (;;) {
        if (eat('*')) e = std::make_unique<Binary>('*', std::move(e), unary());
        else if (eat('/')) e = std::make_unique<Binary>('/', std::move(e), unary());
        else return e;
      }
    }
    Ptr unary() {
      if (eat('-')) return std::make_unique<Unary>('-', unary());
      if (eat('+')) return unary();
      return power();
    }
    Ptr power() {
      Ptr base = primary();
      if (eat('^')) return std::make_unique<Binary>('^', std::move(base), unary());
      return base;
    }
    Ptr primary() {
      skip();
      if (i_ >= s_.size()) fail("unexpected end of input");
      const char c = s_[i_];
      if (c == '(') {
        ++i_;
        Ptr e = expr();
        expect(')');
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return call();
      fail("unexpected '" + std::string(1, c) + "'");
    }
    Ptr number() {
      const char* begin = s_.c_str() + i_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      i_ += static_cast<std::size_t>(end - begin);
      return std::make_unique<Num>(v);
    }
    Ptr call() {
      const std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      const std::string name = s_.substr(start, i_ - start);
      if (name == "x") return std::make_unique<VarAtZero>();
      if (name == "pi") return std::make_unique<Num>(M_PI);
      const std::size_t at = start;
      auto unknown = [&] {
        i_ = at;
        fail("unknown identifier '" + name + "'");
      };
      if (name != "sin" && name != "cos" && name != "exp" && name != "pow" && name != "kappa_left" &&
          name != "kappa_right")
        unknown();
      expect('(');
      Ptr a = expr();
      Ptr b;
      if (name == "pow") {
        expect(',');
        b = expr();
      }
      expect(')');
      if (name == "pow") return std::make_unique<Binary>('^', std::move(a), std::move(b));
      if (name == "kappa_left" || name == "kappa_right") {
        const auto al = a->constant();
        if (!al) {
          i_ = at;
          fail(name + " needs a constant order");
        }
        if (!(*al > 0.0 && *al < 1.0)) {
          i_ = at;
          fail(name + " order must lie in (0,1)");
        }
        return std::make_unique<Kappa>(*al, name == "kappa_left" ? Side::left : Side::right);
      }
      return std::make_unique<Unary>(name == "sin" ? 's' : name == "cos" ? 'c' : 'e', std::move(a));
    }

    const std::string& s_;
    std::size_t i_ = 0;
  };

  std::string src_;
  std::shared_ptr<Node> root_;
};

/// Parses a source expression; syntax errors carry the offending position.
inline Expr parse_expression(const std::string& src) {
  Expr e;
  e.src_ = src;
  Expr::Parser p(e.src_);
  e.root_ = p.parse();
  return e;
}

}  // namespace fraclap
