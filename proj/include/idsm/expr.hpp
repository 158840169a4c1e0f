#pragma once

#include <memory>
#include <string>

namespace idsm {

// Tiny arithmetic expression evaluator for the boundary flux presets:
// variables x1, x2; constants pi, e; functions sin, cos, tan, exp, log,
// sqrt, abs; operators + - * / ^ and unary minus.
class Expression {
  public:
    explicit Expression(const std::string& text);
    ~Expression();
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;

    double eval(double x1, double x2) const;
    const std::string& text() const { return text_; }

    struct Node;

  private:
    std::string text_;
    std::unique_ptr<Node> root_;
};

}  // namespace idsm
