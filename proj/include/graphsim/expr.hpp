#pragma once

#include <string>
#include <vector>

namespace graphsim::expr {

// Restricted arithmetic expressions evaluated over a named variable set.
// Grammar: numbers, variables, + - * /, unary -, parentheses and the
// functions pow, min, max, exp.  No foreign code ever runs.
class Expression {
  public:
    struct Node {
        enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Min, Max, Exp } op;
        double value = 0.0;
        int var = -1;
    };

    Expression() = default;

    // `variables` fixes the slot order used by eval().
    static Expression parse(const std::string& text, const std::vector<std::string>& variables);

    double eval(const double* values) const;
    bool uses(const std::string& variable) const;
    bool has_min_max() const;
    const std::string& text() const { return text_; }
    bool empty() const { return nodes_.empty(); }

  private:
    std::vector<Node> nodes_;  // postfix program
    std::string text_;
    std::vector<std::string> vars_;
};

}  // namespace graphsim::expr
