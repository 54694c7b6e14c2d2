#include "msfem/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace msfem {

struct Expression::Node {
  enum class Kind { number, variable, unary_minus, binary, call } kind;
  double value = 0.0;
  int variable = 0;
  char op = 0;
  double (*fn)(double) = nullptr;
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

struct FunctionEntry {
  const char* name;
  double (*fn)(double);
};

constexpr FunctionEntry kFunctions[] = {
    {"sin", [](double v) { return std::sin(v); }},
    {"cos", [](double v) { return std::cos(v); }},
    {"tan", [](double v) { return std::tan(v); }},
    {"exp", [](double v) { return std::exp(v); }},
    {"log", [](double v) { return std::log(v); }},
    {"sqrt", [](double v) { return std::sqrt(v); }},
    {"abs", [](double v) { return std::abs(v); }},
    {"floor", [](double v) { return std::floor(v); }},
};

constexpr const char* kVariables[] = {"x", "y", "t", "eps", "E0"};

// Grammar: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := '-' unary | power; power := atom ('^' unary)?
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression '" + s_ + "': " + what + " at position " +
                                std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::binary;
    n->op = op;
    n->children = {std::move(lhs), std::move(rhs)};
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = binary('+', lhs, term());
      } else if (accept('-')) {
        lhs = binary('-', lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = binary('*', lhs, unary());
      } else if (accept('/')) {
        lhs = binary('/', lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::unary_minus;
      n->children = {unary()};
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return binary('^', base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      NodePtr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::number;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "pi") {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::number;
        n->value = std::numbers::pi;
        return n;
      }
      for (int k = 0; k < 5; ++k) {
        if (name == kVariables[k]) {
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::variable;
          n->variable = k;
          return n;
        }
      }
      for (const auto& f : kFunctions) {
        if (name == f.name) {
          if (!accept('(')) fail("expected '(' after " + name);
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::call;
          n->fn = f.fn;
          n->children = {expr()};
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      }
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

double evaluate(const Node& n, const double* vars) {
  switch (n.kind) {
    case Node::Kind::number:
      return n.value;
    case Node::Kind::variable:
      return vars[n.variable];
    case Node::Kind::unary_minus:
      return -evaluate(*n.children[0], vars);
    case Node::Kind::call:
      return n.fn(evaluate(*n.children[0], vars));
    case Node::Kind::binary: {
      const double a = evaluate(*n.children[0], vars);
      const double b = evaluate(*n.children[1], vars);
      switch (n.op) {
        case '+':
          return a + b;
        case '-':
          return a - b;
        case '*':
          return a * b;
        case '/':
          return a / b;
        default:
          return std::pow(a, b);
      }
    }
  }
  return 0.0;
}

}  // namespace

Expression::Expression(const std::string& source) : source_(source), root_(Parser(source_).parse()) {}

double Expression::operator()(const Variables& v) const {
  const double vars[5] = {v.x, v.y, v.t, v.eps, v.E0};
  return evaluate(*root_, vars);
}

}  // namespace msfem
