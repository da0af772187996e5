#ifndef RELIAB_EXPRESSION_HPP
#define RELIAB_EXPRESSION_HPP

// Small arithmetic language for user-defined limit states:
//   numbers, variables x1..xM, + - * / ^ (right associative), unary minus,
//   parentheses, min(...)/max(...) with two or more arguments, sqrt, exp, abs.

#include "reliab/core.hpp"

#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace reliab {

class ParseError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class Expression {
 public:
  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    auto root = p.expr();
    p.skip_ws();
    if (p.pos != text.size())
      throw ParseError(p.message("unexpected '" + std::string(1, text[p.pos]) + "'"));
    Expression e;
    e.root_ = std::move(root);
    e.text_ = std::string(text);
    e.max_var_ = max_variable(*e.root_);
    return e;
  }

  /// Largest variable index referenced (x3 -> 3); 0 for constants.
  std::size_t max_variable() const noexcept { return max_var_; }
  const std::string& text() const noexcept { return text_; }

  double operator()(const Vector& x) const { return eval(*root_, x); }

 private:
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Min, Max, Sqrt, Exp, Abs };

  struct Node {
    Op op;
    double value = 0.0;
    std::size_t var = 0;
    std::vector<std::shared_ptr<const Node>> kids;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Op op, std::vector<NodePtr> kids) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->kids = std::move(kids);
    return n;
  }

  struct Parser {
    std::string_view s;
    std::size_t pos;

    std::string message(const std::string& what) const {
      return "expression parse error at column " + std::to_string(pos + 1) + ": " + what;
    }
    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c)) throw ParseError(message(std::string("expected '") + c + "'"));
    }

    NodePtr expr() {
      auto lhs = term();
      for (;;) {
        if (accept('+'))
          lhs = make(Op::Add, {lhs, term()});
        else if (accept('-'))
          lhs = make(Op::Sub, {lhs, term()});
        else
          return lhs;
      }
    }
    NodePtr term() {
      auto lhs = unary();
      for (;;) {
        if (accept('*'))
          lhs = make(Op::Mul, {lhs, unary()});
        else if (accept('/'))
          lhs = make(Op::Div, {lhs, unary()});
        else
          return lhs;
      }
    }
    NodePtr unary() {
      if (accept('-')) return make(Op::Neg, {unary()});
      if (accept('+')) return unary();
      return power();
    }
    // -x^2 parses as -(x^2); 2^-1 is allowed.
    NodePtr power() {
      auto base = primary();
      if (accept('^')) return make(Op::Pow, {base, unary()});
      return base;
    }
    NodePtr primary() {
      skip_ws();
      if (pos >= s.size()) throw ParseError(message("unexpected end of expression"));
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        auto e = expr();
        expect(')');
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
      throw ParseError(message("unexpected '" + std::string(1, c) + "'"));
    }
    NodePtr number() {
      const std::string rest(s.substr(pos));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        throw ParseError(message("malformed number"));
      }
      pos += used;
      auto n = std::make_shared<Node>();
      n->op = Op::Num;
      n->value = v;
      return n;
    }
    NodePtr identifier() {
      const std::size_t start = pos;
      while (pos < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      const std::string name(s.substr(start, pos - start));
      if (name.size() > 1 && name[0] == 'x' &&
          name.find_first_not_of("0123456789", 1) == std::string::npos) {
        const auto idx = std::stoul(name.substr(1));
        if (idx == 0) throw ParseError(message("variables are numbered from x1"));
        auto n = std::make_shared<Node>();
        n->op = Op::Var;
        n->var = idx;
        return n;
      }
      if (name == "pi") {
        auto n = std::make_shared<Node>();
        n->op = Op::Num;
        n->value = std::numbers::pi;
        return n;
      }
      Op op;
      std::size_t min_args = 1, max_args = 1;
      if (name == "min") {
        op = Op::Min;
        min_args = 2;
        max_args = SIZE_MAX;
      } else if (name == "max") {
        op = Op::Max;
        min_args = 2;
        max_args = SIZE_MAX;
      } else if (name == "sqrt") {
        op = Op::Sqrt;
      } else if (name == "exp") {
        op = Op::Exp;
      } else if (name == "abs") {
        op = Op::Abs;
      } else {
        pos = start;
        throw ParseError(message("unknown identifier '" + name + "'"));
      }
      expect('(');
      std::vector<NodePtr> args{expr()};
      while (accept(',')) args.push_back(expr());
      expect(')');
      if (args.size() < min_args || args.size() > max_args)
        throw ParseError(message("wrong number of arguments to " + name));
      return make(op, std::move(args));
    }
  };

  static std::size_t max_variable(const Node& n) {
    std::size_t m = n.op == Op::Var ? n.var : 0;
    for (const auto& k : n.kids) m = std::max(m, max_variable(*k));
    return m;
  }

  static double eval(const Node& n, const Vector& x) {
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::Var:
        if (static_cast<Eigen::Index>(n.var) > x.size())
          throw ArgumentError("expression references x" + std::to_string(n.var) +
                              " beyond the input dimension");
        return x[static_cast<Eigen::Index>(n.var - 1)];
      case Op::Neg: return -eval(*n.kids[0], x);
      case Op::Add: return eval(*n.kids[0], x) + eval(*n.kids[1], x);
      case Op::Sub: return eval(*n.kids[0], x) - eval(*n.kids[1], x);
      case Op::Mul: return eval(*n.kids[0], x) * eval(*n.kids[1], x);
      case Op::Div: return eval(*n.kids[0], x) / eval(*n.kids[1], x);
      case Op::Pow: return std::pow(eval(*n.kids[0], x), eval(*n.kids[1], x));
      case Op::Min: {
        double v = eval(*n.kids[0], x);
        for (std::size_t i = 1; i < n.kids.size(); ++i) v = std::min(v, eval(*n.kids[i], x));
        return v;
      }
      case Op::Max: {
        double v = eval(*n.kids[0], x);
        for (std::size_t i = 1; i < n.kids.size(); ++i) v = std::max(v, eval(*n.kids[i], x));
        return v;
      }
      case Op::Sqrt: return std::sqrt(eval(*n.kids[0], x));
      case Op::Exp: return std::exp(eval(*n.kids[0], x));
      case Op::Abs: return std::abs(eval(*n.kids[0], x));
    }
    return 0.0;
  }

  NodePtr root_;
  std::string text_;
  std::size_t max_var_ = 0;
};

}  // namespace reliab

#endif  // RELIAB_EXPRESSION_HPP
