#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include <fmt/format.h>

#include "qdsr/error.hpp"
#include "qdsr/expr.hpp"

namespace qdsr {

namespace {
    // recursive-descent parser producing prefix-ordered node lists
    class Parser {
    public:
        Parser(std::string_view text, Vocabulary const& vocab) : text_(text), vocab_(vocab) {}

        std::vector<Node> parse()
        {
            auto out = expr();
            skip_ws();
            if (pos_ != text_.size()) { fail(fmt::format("unexpected '{}'", text_[pos_])); }
            return out;
        }

    private:
        std::string_view text_;
        Vocabulary const& vocab_;
        std::size_t pos_ = 0;

        [[noreturn]] void fail(std::string const& msg) const
        {
            throw ParseError(0, fmt::format("{} at column {} in '{}'", msg, pos_ + 1, text_));
        }

        void skip_ws()
        {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) { ++pos_; }
        }

        bool accept(std::string_view tok)
        {
            skip_ws();
            if (text_.substr(pos_, tok.size()) == tok) {
                pos_ += tok.size();
                return true;
            }
            return false;
        }

        static std::vector<Node> binary(Op op, std::vector<Node> l, std::vector<Node> r)
        {
            std::vector<Node> out;
            out.reserve(1 + l.size() + r.size());
            out.push_back(Node::make(op));
            out.insert(out.end(), l.begin(), l.end());
            out.insert(out.end(), r.begin(), r.end());
            return out;
        }

        std::vector<Node> expr()
        {
            auto lhs = term();
            while (true) {
                skip_ws();
                if (accept("+")) {
                    lhs = binary(Op::Add, std::move(lhs), term());
                } else if (pos_ < text_.size() && text_[pos_] == '-') {
                    ++pos_;
                    lhs = binary(Op::Sub, std::move(lhs), term());
                } else {
                    return lhs;
                }
            }
        }

        std::vector<Node> term()
        {
            auto lhs = unary();
            while (true) {
                skip_ws();
                if (text_.substr(pos_, 2) == "**") { return lhs; }
                if (accept("*")) {
                    lhs = binary(Op::Mul, std::move(lhs), unary());
                } else if (accept("/")) {
                    lhs = binary(Op::Div, std::move(lhs), unary());
                } else {
                    return lhs;
                }
            }
        }

        std::vector<Node> unary()
        {
            skip_ws();
            if (accept("-")) {
                auto operand = unary();
                if (operand.size() == 1 && operand[0].op == Op::Constant) {
                    operand[0].value = -operand[0].value;
                    return operand;
                }
                return binary(Op::Mul, {Node::constant(-1.0)}, std::move(operand));
            }
            if (accept("+")) { return unary(); }
            return power();
        }

        std::vector<Node> power()
        {
            auto base = primary();
            if (accept("**") || accept("^")) { return binary(Op::Pow, std::move(base), fold(unary())); }
            return base;
        }

        // exponents such as (3/2) become one literal so that dimension rules see a rational power
        static std::vector<Node> fold(std::vector<Node> e)
        {
            bool constant = std::all_of(e.begin(), e.end(), [](Node const& n) {
                return n.op == Op::Constant || (is_binary(n.op) && n.op != Op::Pow);
            });
            if (!constant || e.size() == 1) { return e; }
            auto v = evaluate_point<double>(ExprTree(e), {}, {});
            return {Node::constant(v)};
        }

        std::vector<Node> primary()
        {
            skip_ws();
            if (pos_ >= text_.size()) { fail("unexpected end of expression"); }
            char c = text_[pos_];
            if (c == '(') {
                ++pos_;
                auto inner = expr();
                if (!accept(")")) { fail("expected ')'"); }
                return inner;
            }
            if ((std::isdigit(static_cast<unsigned char>(c)) != 0) || c == '.') { return {Node::constant(number())}; }
            if ((std::isalpha(static_cast<unsigned char>(c)) != 0) || c == '_') { return identifier(); }
            fail(fmt::format("unexpected '{}'", c));
        }

        double number()
        {
            std::string buf(text_.substr(pos_));
            char* end = nullptr;
            double v = std::strtod(buf.c_str(), &end);
            if (end == buf.c_str()) { fail("bad number"); }
            pos_ += static_cast<std::size_t>(end - buf.c_str());
            return v;
        }

        std::vector<Node> identifier()
        {
            auto start = pos_;
            while (pos_ < text_.size()
                && ((std::isalnum(static_cast<unsigned char>(text_[pos_])) != 0) || text_[pos_] == '_')) {
                ++pos_;
            }
            auto name = text_.substr(start, pos_ - start);

            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                auto f = function_by_name(name);
                if (!f) { fail(fmt::format("unknown function '{}'", name)); }
                ++pos_;
                auto arg = expr();
                if (!accept(")")) { fail("expected ')'"); }
                std::vector<Node> out{Node::make(*f)};
                out.insert(out.end(), arg.begin(), arg.end());
                return out;
            }
            if (name == "pi") { return {Node::constant(std::numbers::pi)}; }
            if (auto v = vocab_.variable_index(name)) { return {Node::var(*v)}; }
            if (name == "A" || (name.size() > 1 && name[0] == 'A'
                                   && name.substr(1).find_first_not_of("0123456789") == std::string_view::npos)) {
                return {Node::scalar()};
            }
            fail(fmt::format("unknown identifier '{}'", name));
        }
    };
} // namespace

ExprTree parse_expression(std::string_view text, Vocabulary const& vocab)
{
    ExprTree t(Parser(text, vocab).parse());
    t.renumber_scalars();
    return t;
}

} // namespace qdsr
