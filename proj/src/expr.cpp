#include "graphsim/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "graphsim/common.hpp"

namespace graphsim::expr {

namespace {

using Op = Expression::Node::Op;

struct Parser {
    const std::string& s;
    std::size_t pos = 0;
    const std::vector<std::string>& vars;
    std::vector<Expression::Node>& out;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) {
        throw ConfigError("expression parse error at position " + std::to_string(pos) + ": " + what +
                          " in '" + s + "'");
    }

    void expression() {
        term();
        for (;;) {
            skip();
            if (eat('+')) {
                term();
                out.push_back({Op::Add});
            } else if (eat('-')) {
                term();
                out.push_back({Op::Sub});
            } else {
                return;
            }
        }
    }

    void term() {
        factor();
        for (;;) {
            skip();
            if (eat('*')) {
                factor();
                out.push_back({Op::Mul});
            } else if (eat('/')) {
                factor();
                out.push_back({Op::Div});
            } else {
                return;
            }
        }
    }

    void factor() {
        skip();
        if (eat('-')) {
            factor();
            out.push_back({Op::Neg});
            return;
        }
        if (eat('(')) {
            expression();
            if (!eat(')')) fail("expected ')'");
            return;
        }
        if (pos >= s.size()) fail("unexpected end");
        char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            double v = std::strtod(s.c_str() + pos, &end);
            if (end == s.c_str() + pos) fail("bad number");
            pos = static_cast<std::size_t>(end - s.c_str());
            out.push_back({Op::Const, v});
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            std::string name = s.substr(start, pos - start);
            if (name == "pow" || name == "min" || name == "max") {
                if (!eat('(')) fail("expected '(' after " + name);
                expression();
                if (!eat(',')) fail("expected ',' in " + name);
                expression();
                if (!eat(')')) fail("expected ')'");
                out.push_back({name == "pow" ? Op::Pow : (name == "min" ? Op::Min : Op::Max)});
                return;
            }
            if (name == "exp") {
                if (!eat('(')) fail("expected '(' after exp");
                expression();
                if (!eat(')')) fail("expected ')'");
                out.push_back({Op::Exp});
                return;
            }
            auto it = std::find(vars.begin(), vars.end(), name);
            if (it == vars.end()) fail("unknown variable '" + name + "'");
            Expression::Node n{Op::Var};
            n.var = static_cast<int>(it - vars.begin());
            out.push_back(n);
            return;
        }
        fail("unexpected character");
    }
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
    Expression e;
    e.text_ = text;
    e.vars_ = variables;
    Parser p{text, 0, variables, e.nodes_};
    p.expression();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    int depth = 0, peak = 0;
    for (const Node& n : e.nodes_) {
        if (n.op == Node::Op::Const || n.op == Node::Op::Var)
            ++depth;
        else if (n.op != Node::Op::Neg && n.op != Node::Op::Exp)
            --depth;
        peak = std::max(peak, depth);
    }
    if (peak >= 63) throw ConfigError("expression too deeply nested: " + text);
    return e;
}

double Expression::eval(const double* values) const {
    double stack[64];
    int top = 0;
    for (const Node& n : nodes_) {
        switch (n.op) {
            case Node::Op::Const: stack[top++] = n.value; break;
            case Node::Op::Var: stack[top++] = values[n.var]; break;
            case Node::Op::Neg: stack[top - 1] = -stack[top - 1]; break;
            case Node::Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
            case Node::Op::Add: --top; stack[top - 1] += stack[top]; break;
            case Node::Op::Sub: --top; stack[top - 1] -= stack[top]; break;
            case Node::Op::Mul: --top; stack[top - 1] *= stack[top]; break;
            case Node::Op::Div: --top; stack[top - 1] /= stack[top]; break;
            case Node::Op::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
            case Node::Op::Min: --top; stack[top - 1] = std::min(stack[top - 1], stack[top]); break;
            case Node::Op::Max: --top; stack[top - 1] = std::max(stack[top - 1], stack[top]); break;
        }
    }
    return top == 1 ? stack[0] : 0.0;
}

bool Expression::uses(const std::string& variable) const {
    auto it = std::find(vars_.begin(), vars_.end(), variable);
    if (it == vars_.end()) return false;
    int idx = static_cast<int>(it - vars_.begin());
    for (const Node& n : nodes_)
        if (n.op == Node::Op::Var && n.var == idx) return true;
    return false;
}

bool Expression::has_min_max() const {
    for (const Node& n : nodes_)
        if (n.op == Node::Op::Min || n.op == Node::Op::Max) return true;
    return false;
}

}  // namespace graphsim::expr
