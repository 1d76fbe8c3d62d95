#include "lawkit/dsl/parser.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <set>
#include <sstream>

namespace lawkit::dsl {

namespace {

enum class Tok {
  Ident, Number, LBrace, RBrace, LParen, RParen, Comma, Semicolon, Assign,
  Plus, Minus, Star, Slash, Lt, Le, Gt, Ge, EqEq, Ne, End,
};

const char* tok_text(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Semicolon: return "';'";
    case Tok::Assign: return "'='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::EqEq: return "'=='";
    case Tok::Ne: return "'!='";
    case Tok::End: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  SourcePos pos;
};

const std::set<std::string>& keywords() {
  static const std::set<std::string> k{"param", "elastic", "plastic", "let", "return",
                                       "if", "then", "else", "F", "I"};
  return k;
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.pos = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
        throw ParseError(ParseErrorKind::Syntax, t.pos, "malformed number '" + t.text + "'");
      }
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    auto two = [&](char next) { return i + 1 < src.size() && src[i + 1] == next; };
    std::size_t len = 1;
    switch (c) {
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case ',': t.kind = Tok::Comma; break;
      case ';': t.kind = Tok::Semicolon; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      case '<':
        if (two('=')) { t.kind = Tok::Le; len = 2; } else { t.kind = Tok::Lt; }
        break;
      case '>':
        if (two('=')) { t.kind = Tok::Ge; len = 2; } else { t.kind = Tok::Gt; }
        break;
      case '=':
        if (two('=')) { t.kind = Tok::EqEq; len = 2; } else { t.kind = Tok::Assign; }
        break;
      case '!':
        if (two('=')) { t.kind = Tok::Ne; len = 2; break; }
        [[fallthrough]];
      default:
        throw ParseError(ParseErrorKind::Syntax, t.pos,
                         std::string("unexpected character '") + c + "'");
    }
    t.text = std::string(src.substr(i, len));
    advance(len);
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  LawAst law() {
    LawAst out;
    while (is_word("param")) out.params.push_back(param(out));
    expect_word("elastic", {"'param'", "'elastic'"});
    out.elastic = block();
    expect_word("plastic", {"'plastic'"});
    out.plastic = block();
    if (peek().kind != Tok::End) fail({"end of input"});
    return out;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  bool is_word(const char* w) const {
    return peek().kind == Tok::Ident && peek().text == w;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    std::string msg = "unexpected " + got + ", expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += expected[i];
    }
    throw ParseError(ParseErrorKind::Syntax, t.pos, msg, std::move(expected));
  }

  Token expect(Tok k) {
    if (peek().kind != k) fail({tok_text(k)});
    return take();
  }

  void expect_word(const char* w, std::vector<std::string> expected) {
    if (!is_word(w)) fail(std::move(expected));
    take();
  }

  Token fresh_ident(const LawAst* law) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail({"identifier"});
    Builtin b;
    if (keywords().count(t.text) || lookup_builtin(t.text, b)) {
      throw ParseError(ParseErrorKind::Syntax, t.pos,
                       "'" + t.text + "' is reserved and cannot be bound");
    }
    if (law && law->param_index(t.text) >= 0) {
      throw ParseError(ParseErrorKind::DuplicateParam, t.pos,
                       "duplicate parameter '" + t.text + "'");
    }
    return take();
  }

  double signed_number() {
    bool neg = false;
    if (peek().kind == Tok::Minus) {
      take();
      neg = true;
    }
    const double v = expect(Tok::Number).number;
    return neg ? -v : v;
  }

  void expect_key(const char* key) {
    if (!is_word(key)) fail({std::string("'") + key + "='"});
    take();
    expect(Tok::Assign);
  }

  ParamSpec param(const LawAst& law) {
    take();  // param
    ParamSpec p;
    const Token name = fresh_ident(&law);
    p.name = name.text;
    expect_key("init");
    p.init = signed_number();
    expect_key("min");
    p.lo = signed_number();
    expect_key("max");
    p.hi = signed_number();
    if (is_word("log")) {
      take();
      p.log_scale = true;
    }
    if (!(p.lo < p.hi) || p.init < p.lo || p.init > p.hi || (p.log_scale && p.lo <= 0.0)) {
      throw ParseError(ParseErrorKind::Syntax, name.pos,
                       "invalid bounds for parameter '" + p.name +
                           "' (need min < max, min <= init <= max, min > 0 when log)");
    }
    params_.insert(p.name);
    return p;
  }

  Block block() {
    expect(Tok::LBrace);
    locals_.clear();
    Block b;
    while (is_word("let")) b.lets.push_back(let());
    if (!is_word("return")) fail({"'let'", "'return'"});
    take();
    b.result = expr();
    if (peek().kind == Tok::Semicolon) take();
    expect(Tok::RBrace);
    return b;
  }

  Let let() {
    Let l;
    l.pos = take().pos;  // let
    std::vector<Token> names;
    if (peek().kind == Tok::LParen) {
      take();
      names.push_back(fresh_ident(nullptr));
      expect(Tok::Comma);
      names.push_back(fresh_ident(nullptr));
      expect(Tok::Comma);
      names.push_back(fresh_ident(nullptr));
      expect(Tok::RParen);
    } else {
      names.push_back(fresh_ident(nullptr));
    }
    expect(Tok::Assign);
    l.value = expr();
    expect(Tok::Semicolon);
    for (const auto& n : names) {
      if (params_.count(n.text) || locals_.count(n.text)) {
        throw ParseError(ParseErrorKind::Syntax, n.pos, "'" + n.text + "' is already defined");
      }
      locals_.insert(n.text);
      l.names.push_back(n.text);
    }
    return l;
  }

  Expr expr() {
    if (is_word("if")) return if_expr();
    return additive();
  }

  Expr if_expr() {
    Expr e;
    e.kind = ExprKind::If;
    e.pos = take().pos;
    Expr lhs = additive();
    CmpOp op;
    switch (peek().kind) {
      case Tok::Lt: op = CmpOp::Lt; break;
      case Tok::Le: op = CmpOp::Le; break;
      case Tok::Gt: op = CmpOp::Gt; break;
      case Tok::Ge: op = CmpOp::Ge; break;
      case Tok::EqEq: op = CmpOp::Eq; break;
      case Tok::Ne: op = CmpOp::Ne; break;
      default: fail({"comparison operator"});
    }
    take();
    Expr rhs = additive();
    expect_word("then", {"'then'"});
    Expr then_e = expr();
    expect_word("else", {"'else'"});
    Expr else_e = expr();
    e.cmp = op;
    e.args = {std::move(lhs), std::move(rhs), std::move(then_e), std::move(else_e)};
    return e;
  }

  Expr binary(BinOp op, Expr lhs, Expr rhs, SourcePos pos) {
    Expr e;
    e.kind = ExprKind::Binary;
    e.op = op;
    e.pos = pos;
    e.args = {std::move(lhs), std::move(rhs)};
    return e;
  }

  Expr additive() {
    Expr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Token t = take();
      lhs = binary(t.kind == Tok::Plus ? BinOp::Add : BinOp::Sub, std::move(lhs), term(), t.pos);
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Token t = take();
      lhs = binary(t.kind == Tok::Star ? BinOp::Mul : BinOp::Div, std::move(lhs), unary(), t.pos);
    }
    return lhs;
  }

  Expr unary() {
    if (peek().kind == Tok::Minus) {
      const Token t = take();
      if (peek().kind == Tok::Number) {
        Expr n;
        n.kind = ExprKind::Number;
        n.pos = t.pos;
        n.number = -take().number;
        return n;
      }
      Expr e;
      e.kind = ExprKind::Negate;
      e.pos = t.pos;
      e.args.push_back(unary());
      return e;
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      Expr e;
      e.kind = ExprKind::Number;
      e.pos = t.pos;
      e.number = take().number;
      return e;
    }
    if (t.kind == Tok::LParen) {
      take();
      Expr e = expr();
      expect(Tok::RParen);
      return e;
    }
    if (t.kind != Tok::Ident) fail({"expression"});
    if (t.text == "if") return if_expr();
    const Token id = take();
    Expr e;
    e.pos = id.pos;
    if (peek().kind == Tok::LParen) {
      Builtin b;
      if (!lookup_builtin(id.text, b)) {
        throw ParseError(ParseErrorKind::UnknownIdentifier, id.pos,
                         "unknown function '" + id.text + "'");
      }
      take();
      e.kind = ExprKind::Call;
      e.fn = b;
      e.name = id.text;
      e.args.push_back(expr());
      while (peek().kind == Tok::Comma) {
        take();
        e.args.push_back(expr());
      }
      expect(Tok::RParen);
      if (static_cast<int>(e.args.size()) != builtin_arity(b)) {
        throw ParseError(ParseErrorKind::Syntax, id.pos,
                         id.text + " expects " + std::to_string(builtin_arity(b)) +
                             " argument(s), got " + std::to_string(e.args.size()));
      }
      return e;
    }
    e.name = id.text;
    if (id.text == "F") {
      e.kind = ExprKind::Input;
    } else if (id.text == "I") {
      e.kind = ExprKind::Identity;
    } else if (locals_.count(id.text)) {
      e.kind = ExprKind::Local;
    } else if (params_.count(id.text)) {
      e.kind = ExprKind::Param;
    } else {
      throw ParseError(ParseErrorKind::UnknownIdentifier, id.pos,
                       "unknown identifier '" + id.text + "'");
    }
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> params_;
  std::set<std::string> locals_;
};

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  // Keep literals lexable as numbers: "inf"/"nan" never appear in valid laws.
  return s;
}

int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::If: return 0;
    case ExprKind::Binary: return (e.op == BinOp::Add || e.op == BinOp::Sub) ? 1 : 2;
    case ExprKind::Negate: return 3;
    case ExprKind::Number: return e.number < 0 || std::signbit(e.number) ? 3 : 4;
    default: return 4;
  }
}

void print(const Expr& e, std::ostream& os);

void print_operand(const Expr& child, int min_prec, std::ostream& os) {
  const bool parens = child.kind == ExprKind::If || precedence(child) < min_prec;
  if (parens) os << '(';
  print(child, os);
  if (parens) os << ')';
}

const char* cmp_text(CmpOp c) {
  switch (c) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
  }
  return "?";
}

void print(const Expr& e, std::ostream& os) {
  switch (e.kind) {
    case ExprKind::Number:
      os << format_number(e.number);
      return;
    case ExprKind::Param:
    case ExprKind::Local:
      os << e.name;
      return;
    case ExprKind::Input:
      os << 'F';
      return;
    case ExprKind::Identity:
      os << 'I';
      return;
    case ExprKind::Negate:
      os << '-';
      print_operand(e.args[0], 3, os);
      return;
    case ExprKind::Binary: {
      const int p = precedence(e);
      static constexpr const char* ops[] = {" + ", " - ", " * ", " / "};
      print_operand(e.args[0], p, os);
      os << ops[static_cast<int>(e.op)];
      print_operand(e.args[1], p + 1, os);
      return;
    }
    case ExprKind::Call:
      os << builtin_name(e.fn) << '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        print(e.args[i], os);
      }
      os << ')';
      return;
    case ExprKind::If:
      os << "if ";
      print_operand(e.args[0], 1, os);
      os << ' ' << cmp_text(e.cmp) << ' ';
      print_operand(e.args[1], 1, os);
      os << " then ";
      print(e.args[2], os);
      os << " else ";
      print(e.args[3], os);
      return;
  }
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, SourcePos pos, std::string detail,
                       std::vector<std::string> expected)
    : std::runtime_error([&] {
        const char* tag = kind == ParseErrorKind::Syntax            ? "SyntaxError"
                          : kind == ParseErrorKind::UnknownIdentifier ? "UnknownIdentifier"
                                                                      : "DuplicateParam";
        return std::string(tag) + " at line " + std::to_string(pos.line) + ", column " +
               std::to_string(pos.column) + ": " + detail;
      }()),
      kind_(kind),
      pos_(pos),
      detail_(std::move(detail)),
      expected_(std::move(expected)) {}

TypeError::TypeError(TypeErrorKind kind, SourcePos pos, const std::string& msg)
    : std::runtime_error(std::string(kind == TypeErrorKind::Type ? "TypeError" : "ReturnTypeError") +
                         " at line " + std::to_string(pos.line) + ", column " +
                         std::to_string(pos.column) + ": " + msg),
      kind_(kind),
      pos_(pos) {}

EvalError::EvalError(EvalErrorKind kind, int node_id, const std::string& msg)
    : std::runtime_error(std::string(kind == EvalErrorKind::Domain ? "DomainError" : "EvalError") +
                         " at node " + std::to_string(node_id) + ": " + msg),
      kind_(kind),
      node_id_(node_id) {}

LawAst parse_law(std::string_view source) {
  Parser p(source);
  LawAst law = p.law();
  law.source_text = std::string(source);
  return law;
}

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  print(e, os);
  return os.str();
}

std::string print_block(const Block& b) {
  std::ostringstream os;
  os << "{\n";
  for (const auto& l : b.lets) {
    os << "  let ";
    if (l.names.size() == 1) {
      os << l.names[0];
    } else {
      os << '(';
      for (std::size_t i = 0; i < l.names.size(); ++i) os << (i ? ", " : "") << l.names[i];
      os << ')';
    }
    os << " = ";
    print(l.value, os);
    os << ";\n";
  }
  os << "  return ";
  print(b.result, os);
  os << "\n}";
  return os.str();
}

std::string print_law(const LawAst& law) {
  std::ostringstream os;
  for (const auto& p : law.params) {
    os << "param " << p.name << " init=" << format_number(p.init)
       << " min=" << format_number(p.lo) << " max=" << format_number(p.hi);
    if (p.log_scale) os << " log";
    os << '\n';
  }
  os << "elastic " << print_block(law.elastic) << '\n';
  os << "plastic " << print_block(law.plastic) << '\n';
  return os.str();
}

}  // namespace lawkit::dsl
