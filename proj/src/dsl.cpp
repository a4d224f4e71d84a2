#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "robosynth/runtime.hpp"

namespace robosynth {

namespace {

enum class Tok { ident, number, string, let, lparen, rparen, lbracket, rbracket, comma, semicolon,
                 equals, dot, plus, minus, star, slash, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
  int end_line = 1;
  int end_column = 1;
};

std::string tok_name(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string";
    case Tok::let: return "'let'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::semicolon: return "';'";
    case Tok::equals: return "'='";
    case Tok::dot: return "'.'";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::end: return "end of input";
  }
  return "?";
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&] {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) advance();
      t.text = std::string(src.substr(start, i - start));
      t.kind = t.text == "let" ? Tok::let : Tok::ident;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      const std::size_t start = i;
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) advance();
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        advance();
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) advance();
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
      }
      const std::string_view text = src.substr(start, i - start);
      const auto res = std::from_chars(text.data(), text.data() + text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw SyntaxError(t.line, t.column, "malformed number '" + std::string(text) + "'");
      }
      t.kind = Tok::number;
    } else if (c == '"' || c == '\'') {
      const char quote = c;
      advance();
      std::string s;
      while (true) {
        if (i >= src.size() || src[i] == '\n') throw SyntaxError(t.line, t.column, "unterminated string");
        if (src[i] == quote) {
          advance();
          break;
        }
        if (src[i] == '\\' && i + 1 < src.size()) {
          advance();
          const char e = src[i];
          s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          advance();
          continue;
        }
        s += src[i];
        advance();
      }
      t.kind = Tok::string;
      t.text = std::move(s);
    } else {
      switch (c) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ',': t.kind = Tok::comma; break;
        case ';': t.kind = Tok::semicolon; break;
        case '=': t.kind = Tok::equals; break;
        case '.': t.kind = Tok::dot; break;
        case '+': t.kind = Tok::plus; break;
        case '-': t.kind = Tok::minus; break;
        case '*': t.kind = Tok::star; break;
        case '/': t.kind = Tok::slash; break;
        default:
          throw SyntaxError(line, col, std::string("unexpected character '") + c + "'");
      }
      t.text = std::string(1, c);
      advance();
    }
    t.end_line = line;
    t.end_column = col;
    out.push_back(std::move(t));
  }
  Token end;
  end.line = end.end_line = line;
  end.column = end.end_column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  BehaviorProgram program() {
    BehaviorProgram p;
    while (peek().kind != Tok::end) p.statements.push_back(statement());
    return p;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> bound_;

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  const Token& expect(Tok k, const char* context) {
    const Token& t = peek();
    if (t.kind != k) {
      throw SyntaxError(t.line, t.column,
                        "expected " + tok_name(k) + " " + context + ", found " + tok_name(t.kind));
    }
    return take();
  }

  static SourceSpan span_of(const Token& a, const Token& b) {
    return {a.line, a.column, b.end_line, b.end_column};
  }
  SourceSpan span_from(const Token& a) const { return span_of(a, toks_[pos_ - 1]); }

  Statement statement() {
    const Token& first = peek();
    Statement s;
    if (first.kind == Tok::let) {
      take();
      const Token& name = expect(Tok::ident, "after 'let'");
      const std::string n = name.text;
      expect(Tok::equals, "in let binding");
      s.expr = expr();
      s.binding = n;
      expect(Tok::semicolon, "at end of statement");
      bound_.insert(n);
    } else {
      s.expr = expr();
      expect(Tok::semicolon, "at end of statement");
    }
    s.span = span_from(first);
    return s;
  }

  ExprPtr binary(ExprPtr lhs, char op, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::binary;
    e->op = op;
    e->span = {lhs->span.line, lhs->span.column, rhs->span.end_line, rhs->span.end_column};
    e->operands = {std::move(lhs), std::move(rhs)};
    return e;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const char op = take().text[0];
      lhs = binary(lhs, op, term());
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const char op = take().text[0];
      lhs = binary(lhs, op, unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    if (peek().kind == Tok::minus) {
      const Token& m = take();
      auto inner = unary();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::negate;
      e->span = {m.line, m.column, inner->span.end_line, inner->span.end_column};
      e->operands = {std::move(inner)};
      return e;
    }
    return postfix();
  }

  ExprPtr postfix() {
    ExprPtr base = primary();
    while (peek().kind == Tok::dot) {
      take();
      const Token& f = expect(Tok::ident, "after '.'");
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::field;
      e->text = f.text;
      e->span = {base->span.line, base->span.column, f.end_line, f.end_column};
      e->operands = {std::move(base)};
      base = e;
    }
    return base;
  }

  ExprPtr primary() {
    const Token& t = peek();
    auto e = std::make_shared<Expr>();
    switch (t.kind) {
      case Tok::number:
        take();
        e->kind = Expr::Kind::number;
        e->number = t.number;
        e->span = span_of(t, t);
        return e;
      case Tok::string:
        take();
        e->kind = Expr::Kind::string;
        e->text = t.text;
        e->span = span_of(t, t);
        return e;
      case Tok::lparen: {
        take();
        auto inner = expr();
        expect(Tok::rparen, "to close '('");
        return inner;
      }
      case Tok::lbracket: {
        const Token& open = take();
        e->kind = Expr::Kind::list;
        if (peek().kind != Tok::rbracket) {
          e->operands.push_back(expr());
          while (peek().kind == Tok::comma) {
            take();
            e->operands.push_back(expr());
          }
        }
        expect(Tok::rbracket, "to close '['");
        e->span = span_from(open);
        return e;
      }
      case Tok::ident: {
        const Token& name = take();
        e->text = name.text;
        if (peek().kind == Tok::lparen) {
          take();
          e->kind = Expr::Kind::call;
          bool keyword_seen = false;
          if (peek().kind != Tok::rparen) {
            while (true) {
              Argument a;
              const Token& at = peek();
              if (at.kind == Tok::ident && peek(1).kind == Tok::equals) {
                a.keyword = take().text;
                take();
                keyword_seen = true;
              } else if (keyword_seen) {
                throw SyntaxError(at.line, at.column, "positional argument after keyword argument");
              }
              a.value = expr();
              a.span = span_from(at);
              e->args.push_back(std::move(a));
              if (peek().kind != Tok::comma) break;
              take();
            }
          }
          expect(Tok::rparen, "to close argument list");
          e->span = span_from(name);
          return e;
        }
        if (!bound_.count(name.text)) {
          throw SyntaxError(name.line, name.column, "undefined variable '" + name.text + "'");
        }
        e->kind = Expr::Kind::variable;
        e->span = span_of(name, name);
        return e;
      }
      default:
        throw SyntaxError(t.line, t.column, "unexpected " + tok_name(t.kind));
    }
  }
};

const std::string* top_call(const Statement& s) {
  return s.expr && s.expr->kind == Expr::Kind::call ? &s.expr->text : nullptr;
}

// A literal list of plain numbers (unary minus allowed), else nullopt.
std::optional<std::vector<double>> literal_numbers(const Expr& e) {
  if (e.kind != Expr::Kind::list) return std::nullopt;
  std::vector<double> v;
  for (const auto& item : e.operands) {
    if (item->kind == Expr::Kind::number) {
      v.push_back(item->number);
    } else if (item->kind == Expr::Kind::negate && item->operands[0]->kind == Expr::Kind::number) {
      v.push_back(-item->operands[0]->number);
    } else {
      return std::nullopt;
    }
  }
  return v;
}

struct Verifier {
  const AABB3& workspace;
  std::vector<Violation> out;
  bool detected = false;
  std::map<std::string, ExprPtr> literals;  // variables bound to literal lists

  void add(Rule r, const SourceSpan& span, std::string msg) { out.push_back({r, span, std::move(msg)}); }

  const Expr* resolve_literal(const Expr& e) const {
    if (e.kind == Expr::Kind::variable) {
      auto it = literals.find(e.text);
      return it == literals.end() ? nullptr : it->second.get();
    }
    return &e;
  }

  void check_target(const Expr& arg, const std::string& call) {
    const Expr* lit = resolve_literal(arg);
    if (!lit) return;
    const auto v = literal_numbers(*lit);
    if (!v || (v->size() != 3 && v->size() != 7)) return;
    const Vec3 p((*v)[0], (*v)[1], (*v)[2]);
    if (!point_in_aabb(p, workspace)) {
      add(Rule::R3, arg.span,
          call + " target (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ", " +
              std::to_string(p.z()) + ") lies outside the workspace");
    }
  }

  // Returns the argument bound to `param`, if any.
  static const Argument* bound_arg(const Expr& call, const ApiSignature& sig, const std::string& param) {
    for (std::size_t i = 0; i < call.args.size(); ++i) {
      const auto& a = call.args[i];
      if (a.keyword.empty() ? (i < sig.params.size() && sig.params[i].name == param) : a.keyword == param) {
        return &a;
      }
    }
    return nullptr;
  }

  void walk(const Expr& e) {
    for (const auto& o : e.operands) walk(*o);
    if (e.kind != Expr::Kind::call) return;
    for (const auto& a : e.args) walk(*a.value);
    const ApiSignature* sig = find_api(e.text);
    if (!sig) {
      add(Rule::R5, e.span, "unknown API '" + e.text + "'");
      return;
    }
    check_arity(e, *sig);
    if (sig->perception_query && !detected) {
      add(Rule::R4, e.span, e.text + " before any detect_objects");
    }
    if (e.text == "detect_objects") detected = true;
    static const std::vector<std::pair<std::string, std::string>> targets{
        {"move_to_pose", "pose"}, {"grasp", "grasp_pose"}, {"parse_place_pose", "position"}};
    for (const auto& [call, param] : targets) {
      if (e.text != call) continue;
      if (const Argument* a = bound_arg(e, *sig, param)) check_target(*a->value, call);
    }
  }

  void check_arity(const Expr& e, const ApiSignature& sig) {
    std::vector<bool> filled(sig.params.size(), false);
    std::size_t positional = 0;
    for (const auto& a : e.args) {
      if (a.keyword.empty()) {
        if (positional >= sig.params.size()) {
          add(Rule::R6, a.span, e.text + " takes at most " + std::to_string(sig.params.size()) +
                                    " arguments");
          return;
        }
        filled[positional++] = true;
        continue;
      }
      auto it = std::find_if(sig.params.begin(), sig.params.end(),
                             [&](const ApiParam& p) { return p.name == a.keyword; });
      if (it == sig.params.end()) {
        add(Rule::R6, a.span, e.text + " has no parameter '" + a.keyword + "'");
        return;
      }
      const std::size_t idx = static_cast<std::size_t>(it - sig.params.begin());
      if (filled[idx]) {
        add(Rule::R6, a.span, e.text + " got '" + a.keyword + "' twice");
        return;
      }
      filled[idx] = true;
    }
    for (std::size_t i = 0; i < sig.params.size(); ++i) {
      if (sig.params[i].required && !filled[i]) {
        add(Rule::R6, e.span, e.text + " is missing '" + sig.params[i].name + "'");
        return;
      }
    }
  }
};

}  // namespace

BehaviorProgram parse_program(std::string_view source) {
  Parser p(lex(source));
  return p.program();
}

const std::vector<ApiSignature>& api_signatures() {
  static const std::vector<ApiSignature> sigs{
      {"detect_objects", {{"object_list", false}}, false},
      {"get_object_center_position", {{"object_name", true}}, true},
      {"get_object_pose", {{"object_name", true}}, true},
      {"get_3d_bbox", {{"object_name", true}}, true},
      {"get_obj_name_list", {}, true},
      {"parse_adaptive_shape_grasp_pose",
       {{"object_name", true},
        {"preferred_position", false},
        {"preferred_approach_direction", false},
        {"preferred_plane_normal", false}},
       true},
      {"parse_central_lift_grasp_pose", {{"object_name", true}, {"description", false}}, true},
      {"parse_place_pose", {{"object_name", true}, {"receptacle_name", false}, {"position", false}}, true},
      {"get_object_joint_info", {{"obj_name", true}, {"position", true}, {"type", false}}, true},
      {"get_plane_normal", {{"obj_name", true}, {"position", true}}, true},
      {"attach_object", {{"object_id", true}}, false},
      {"detach_object", {{"object_id", true}}, false},
      {"open_gripper", {}, false},
      {"close_gripper", {}, false},
      {"move_to_pose", {{"pose", true}}, false},
      {"move_in_direction", {{"axis", true}, {"distance", true}}, false},
      {"generate_arc_path_around_joint",
       {{"current_pose", true}, {"joint_axis", true}, {"joint_position", true}, {"n", true}, {"angle", true}},
       false},
      {"follow_path", {{"path", true}}, false},
      {"get_gripper_pose", {}, false},
      {"grasp", {{"grasp_pose", true}}, false},
  };
  return sigs;
}

const ApiSignature* find_api(std::string_view name) {
  for (const auto& s : api_signatures()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string to_string(Rule r) {
  return "R" + std::to_string(static_cast<int>(r) + 1);
}

std::vector<Violation> verify(const BehaviorProgram& program, const AABB3& workspace) {
  Verifier v{workspace, {}, false, {}};
  const Statement* prev = nullptr;
  for (const auto& s : program.statements) {
    v.walk(*s.expr);
    if (const std::string* call = top_call(s)) {
      const std::string* before = prev ? top_call(*prev) : nullptr;
      if (*call == "attach_object" && !(before && (*before == "close_gripper" || *before == "grasp"))) {
        v.add(Rule::R1, s.span, "attach_object must directly follow close_gripper or grasp");
      }
      if (*call == "detach_object" && !(before && *before == "open_gripper")) {
        v.add(Rule::R2, s.span, "detach_object must directly follow open_gripper");
      }
    }
    if (s.binding) {
      if (s.expr->kind == Expr::Kind::list) {
        v.literals[*s.binding] = s.expr;
      } else {
        v.literals.erase(*s.binding);
      }
    }
    prev = &s;
  }
  std::stable_sort(v.out.begin(), v.out.end(), [](const Violation& a, const Violation& b) {
    return std::make_pair(a.span.line, a.span.column) < std::make_pair(b.span.line, b.span.column);
  });
  return v.out;
}

}  // namespace robosynth
