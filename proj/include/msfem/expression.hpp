#pragma once

#include <memory>
#include <string>

namespace msfem {

/// Arithmetic expression over x, y, t, eps, E0 and pi with + - * / ^, unary
/// minus and the functions sin, cos, tan, exp, log, sqrt, abs, floor.
class Expression {
 public:
  struct Variables {
    double x = 0.0, y = 0.0, t = 0.0, eps = 0.0, E0 = 0.0;
  };

  explicit Expression(const std::string& source);

  double operator()(const Variables& vars) const;
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace msfem
