#include "itc/parser.hpp"

#include <cctype>
#include <functional>
#include <set>
#include <unordered_set>

namespace itc {
namespace {

enum class Tok {
  End, Ident, Int,
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Semi, Comma, Assign,
  Plus, Minus, Star, Slash, Percent,
  EqEq, NotEq, Lt, Le, Gt, Ge,
  AndAnd, OrOr, Not,
  Amp, Pipe, Caret, Tilde, Shl, Shr,
};

struct Token {
  Tok kind;
  std::string text;
  Word value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skipWs();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        bump();
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lexNumber();
      return;
    }
    bump();
    auto two = [&](char n, Tok a, Tok b) {
      if (pos_ < src_.size() && src_[pos_] == n) {
        bump();
        tok_.kind = a;
      } else {
        tok_.kind = b;
      }
    };
    switch (c) {
      case '{': tok_.kind = Tok::LBrace; return;
      case '}': tok_.kind = Tok::RBrace; return;
      case '(': tok_.kind = Tok::LParen; return;
      case ')': tok_.kind = Tok::RParen; return;
      case '[': tok_.kind = Tok::LBracket; return;
      case ']': tok_.kind = Tok::RBracket; return;
      case ';': tok_.kind = Tok::Semi; return;
      case ',': tok_.kind = Tok::Comma; return;
      case '+': tok_.kind = Tok::Plus; return;
      case '-': tok_.kind = Tok::Minus; return;
      case '*': tok_.kind = Tok::Star; return;
      case '/': tok_.kind = Tok::Slash; return;
      case '%': tok_.kind = Tok::Percent; return;
      case '^': tok_.kind = Tok::Caret; return;
      case '~': tok_.kind = Tok::Tilde; return;
      case '=': two('=', Tok::EqEq, Tok::Assign); return;
      case '!': two('=', Tok::NotEq, Tok::Not); return;
      case '&': two('&', Tok::AndAnd, Tok::Amp); return;
      case '|': two('|', Tok::OrOr, Tok::Pipe); return;
      case '<':
        if (pos_ < src_.size() && src_[pos_] == '<') {
          bump();
          tok_.kind = Tok::Shl;
        } else {
          two('=', Tok::Le, Tok::Lt);
        }
        return;
      case '>':
        if (pos_ < src_.size() && src_[pos_] == '>') {
          bump();
          tok_.kind = Tok::Shr;
        } else {
          two('=', Tok::Ge, Tok::Gt);
        }
        return;
    }
    throw Diag("unexpected character '" + std::string(1, c) + "'", tok_.line,
               tok_.col);
  }

  void lexNumber() {
    size_t start = pos_;
    int base = 10;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'b')) {
      base = src_[pos_ + 1] == 'x' ? 16 : 2;
      bump();
      bump();
      start = pos_;
    }
    while (pos_ < src_.size() &&
           std::isalnum(static_cast<unsigned char>(src_[pos_])))
      bump();
    std::string digits(src_.substr(start, pos_ - start));
    if (digits.empty())
      throw Diag("malformed integer literal", tok_.line, tok_.col);
    Word v = 0;
    for (char d : digits) {
      int dv;
      if (d >= '0' && d <= '9') dv = d - '0';
      else if (d >= 'a' && d <= 'f') dv = d - 'a' + 10;
      else if (d >= 'A' && d <= 'F') dv = d - 'A' + 10;
      else dv = 99;
      if (dv >= base)
        throw Diag("malformed integer literal", tok_.line, tok_.col);
      v = v * base + dv;
    }
    tok_.kind = Tok::Int;
    tok_.value = v;
  }

  void skipWs() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  Program parse() {
    Program p;
    while (lex_.peek().kind != Tok::End) {
      const Token& t = lex_.peek();
      if (t.kind != Tok::Ident)
        throw Diag("expected declaration", t.line, t.col);
      if (t.text == "TS") {
        p.tsDecls.push_back(parseTsDecl());
      } else if (t.text == "init") {
        if (p.initBlock)
          throw Diag("duplicate init block", t.line, t.col);
        lex_.next();
        p.initBlock = parseBlock();
      } else if (t.text == "fn") {
        p.functions.push_back(parseFunction());
      } else if (t.text == "task" || t.text == "entry") {
        p.tasks.push_back(parseTask());
      } else {
        throw Diag("expected 'TS', 'init', 'fn', 'entry' or 'task'", t.line,
                   t.col);
      }
    }
    return p;
  }

 private:
  Token expect(Tok kind, const char* what) {
    const Token& t = lex_.peek();
    if (t.kind != kind) throw Diag(std::string("expected ") + what, t.line, t.col);
    return lex_.next();
  }

  Token expectKeyword(const char* kw) {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Ident || t.text != kw)
      throw Diag(std::string("expected '") + kw + "'", t.line, t.col);
    return lex_.next();
  }

  Word expectInt() {
    Token t = expect(Tok::Int, "integer");
    return t.value;
  }

  Word parseSignedInt() {
    if (lex_.peek().kind == Tok::Minus) {
      lex_.next();
      return -expectInt();
    }
    return expectInt();
  }

  TsVarDecl parseTsDecl() {
    Token kw = lex_.next();  // TS
    expectKeyword("int");
    Token name = expect(Tok::Ident, "variable name");
    TsVarDecl d;
    d.name = name.text;
    d.line = kw.line;
    d.col = kw.col;
    if (lex_.peek().kind == Tok::LBracket) {
      lex_.next();
      d.length = static_cast<long>(expectInt());
      expect(Tok::RBracket, "']'");
      if (d.length < 1)
        throw Diag("array length must be >= 1", name.line, name.col);
    }
    if (lex_.peek().kind == Tok::Assign) {
      lex_.next();
      if (d.isArray()) {
        expect(Tok::LBrace, "'{'");
        d.init.push_back(parseSignedInt());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.next();
          d.init.push_back(parseSignedInt());
        }
        expect(Tok::RBrace, "'}'");
        if (static_cast<long>(d.init.size()) > d.length)
          throw Diag("too many initializers", name.line, name.col);
        d.init.resize(d.length, 0);
      } else {
        d.init.push_back(parseSignedInt());
      }
    } else {
      d.init.assign(d.wordCount(), 0);
    }
    expect(Tok::Semi, "';'");
    return d;
  }

  Function parseFunction() {
    Token kw = lex_.next();  // fn
    Token name = expect(Tok::Ident, "function name");
    expect(Tok::LParen, "'('");
    expect(Tok::RParen, "')'");
    Function f;
    f.name = name.text;
    f.line = kw.line;
    f.col = kw.col;
    f.body = parseBlock();
    return f;
  }

  Task parseTask() {
    Task t;
    Token first = lex_.next();
    t.line = first.line;
    t.col = first.col;
    if (first.text == "entry") {
      t.isEntry = true;
      expectKeyword("task");
    }
    Token name = expect(Tok::Ident, "task name");
    t.name = name.text;
    t.body = parseBlock();
    return t;
  }

  StmtList parseBlock() {
    expect(Tok::LBrace, "'{'");
    StmtList list;
    while (lex_.peek().kind != Tok::RBrace) {
      if (lex_.peek().kind == Tok::End)
        throw Diag("unterminated block", lex_.peek().line, lex_.peek().col);
      list.push_back(parseStmt());
    }
    lex_.next();
    return list;
  }

  StmtPtr parseStmt() {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Ident)
      throw Diag("expected statement", t.line, t.col);
    if (t.text == "int") return parseLocalDecl();
    if (t.text == "if") return parseIf();
    if (t.text == "while") return parseWhile();
    if (t.text == "transition_to") {
      Token kw = lex_.next();
      Token target = expect(Tok::Ident, "task name");
      expect(Tok::Semi, "';'");
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Transition;
      s->name = target.text;
      s->line = kw.line;
      s->col = kw.col;
      return s;
    }
    if (t.text == "sample") {
      Token kw = lex_.next();
      expect(Tok::LParen, "'('");
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Sample;
      s->lhs = parseLValue();
      expect(Tok::Comma, "','");
      Token ch = expect(Tok::Ident, "channel name");
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      s->name = ch.text;
      s->line = kw.line;
      s->col = kw.col;
      return s;
    }
    if (t.text == "output") {
      Token kw = lex_.next();
      expect(Tok::LParen, "'('");
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Output;
      s->expr = parseExpr();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      s->line = kw.line;
      s->col = kw.col;
      return s;
    }
    if (t.text == "halt") {
      Token kw = lex_.next();
      expect(Tok::Semi, "';'");
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Halt;
      s->line = kw.line;
      s->col = kw.col;
      return s;
    }
    // ident: assignment or call
    Token name = lex_.next();
    if (lex_.peek().kind == Tok::LParen) {
      lex_.next();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Call;
      s->name = name.text;
      s->line = name.line;
      s->col = name.col;
      return s;
    }
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::Assign;
    s->lhs.name = name.text;
    s->line = name.line;
    s->col = name.col;
    if (lex_.peek().kind == Tok::LBracket) {
      lex_.next();
      s->lhs.index = parseExpr();
      expect(Tok::RBracket, "']'");
    }
    expect(Tok::Assign, "'='");
    s->expr = parseExpr();
    expect(Tok::Semi, "';'");
    return s;
  }

  StmtPtr parseLocalDecl() {
    Token kw = lex_.next();  // int
    Token name = expect(Tok::Ident, "variable name");
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::LocalDecl;
    s->name = name.text;
    s->line = kw.line;
    s->col = kw.col;
    if (lex_.peek().kind == Tok::LBracket) {
      lex_.next();
      s->arrayLen = static_cast<long>(expectInt());
      expect(Tok::RBracket, "']'");
      if (s->arrayLen < 1)
        throw Diag("array length must be >= 1", name.line, name.col);
    } else if (lex_.peek().kind == Tok::Assign) {
      lex_.next();
      s->expr = parseExpr();
    }
    expect(Tok::Semi, "';'");
    return s;
  }

  StmtPtr parseIf() {
    Token kw = lex_.next();  // if
    expect(Tok::LParen, "'('");
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::If;
    s->expr = parseExpr();
    expect(Tok::RParen, "')'");
    s->body = parseBlock();
    s->line = kw.line;
    s->col = kw.col;
    if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "else") {
      lex_.next();
      if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "if") {
        s->elseBody.push_back(parseIf());
      } else {
        s->elseBody = parseBlock();
      }
    }
    return s;
  }

  StmtPtr parseWhile() {
    Token kw = lex_.next();  // while
    expect(Tok::LParen, "'('");
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::While;
    s->expr = parseExpr();
    expect(Tok::RParen, "')'");
    expectKeyword("bound");
    s->bound = static_cast<long>(expectInt());
    if (s->bound < 1)
      throw Diag("while bound must be positive", kw.line, kw.col);
    s->body = parseBlock();
    s->line = kw.line;
    s->col = kw.col;
    return s;
  }

  LValue parseLValue() {
    Token name = expect(Tok::Ident, "variable name");
    LValue l;
    l.name = name.text;
    if (lex_.peek().kind == Tok::LBracket) {
      lex_.next();
      l.index = parseExpr();
      expect(Tok::RBracket, "']'");
    }
    return l;
  }

  // Precedence climbing; levels match C.
  ExprPtr parseExpr() { return parseBin(0); }

  static int binPrec(Tok k) {
    switch (k) {
      case Tok::OrOr: return 1;
      case Tok::AndAnd: return 2;
      case Tok::Pipe: return 3;
      case Tok::Caret: return 4;
      case Tok::Amp: return 5;
      case Tok::EqEq: case Tok::NotEq: return 6;
      case Tok::Lt: case Tok::Le: case Tok::Gt: case Tok::Ge: return 7;
      case Tok::Shl: case Tok::Shr: return 8;
      case Tok::Plus: case Tok::Minus: return 9;
      case Tok::Star: case Tok::Slash: case Tok::Percent: return 10;
      default: return -1;
    }
  }

  static BinOp binOpOf(Tok k) {
    switch (k) {
      case Tok::OrOr: return BinOp::LogOr;
      case Tok::AndAnd: return BinOp::LogAnd;
      case Tok::Pipe: return BinOp::BitOr;
      case Tok::Caret: return BinOp::BitXor;
      case Tok::Amp: return BinOp::BitAnd;
      case Tok::EqEq: return BinOp::Eq;
      case Tok::NotEq: return BinOp::Ne;
      case Tok::Lt: return BinOp::Lt;
      case Tok::Le: return BinOp::Le;
      case Tok::Gt: return BinOp::Gt;
      case Tok::Ge: return BinOp::Ge;
      case Tok::Shl: return BinOp::Shl;
      case Tok::Shr: return BinOp::Shr;
      case Tok::Plus: return BinOp::Add;
      case Tok::Minus: return BinOp::Sub;
      case Tok::Star: return BinOp::Mul;
      case Tok::Slash: return BinOp::Div;
      default: return BinOp::Mod;
    }
  }

  ExprPtr parseBin(int minPrec) {
    ExprPtr lhs = parseUnary();
    while (true) {
      int prec = binPrec(lex_.peek().kind);
      if (prec < 0 || prec < minPrec) return lhs;
      Token op = lex_.next();
      ExprPtr rhs = parseBin(prec + 1);
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Binary;
      e->binop = binOpOf(op.kind);
      e->a = std::move(lhs);
      e->b = std::move(rhs);
      e->line = op.line;
      e->col = op.col;
      lhs = std::move(e);
    }
  }

  ExprPtr parseUnary() {
    const Token& t = lex_.peek();
    UnOp op;
    switch (t.kind) {
      case Tok::Minus: op = UnOp::Neg; break;
      case Tok::Not: op = UnOp::LogNot; break;
      case Tok::Tilde: op = UnOp::BitNot; break;
      default: return parsePrimary();
    }
    Token tk = lex_.next();
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::Unary;
    e->unop = op;
    e->a = parseUnary();
    e->line = tk.line;
    e->col = tk.col;
    return e;
  }

  ExprPtr parsePrimary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Int) {
      Token tk = lex_.next();
      auto e = makeConst(tk.value);
      e->line = tk.line;
      e->col = tk.col;
      return e;
    }
    if (t.kind == Tok::LParen) {
      lex_.next();
      ExprPtr e = parseExpr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind == Tok::Ident) {
      Token name = lex_.next();
      if (lex_.peek().kind == Tok::LBracket) {
        lex_.next();
        ExprPtr idx = parseExpr();
        expect(Tok::RBracket, "']'");
        auto e = makeIndex(name.text, std::move(idx));
        e->line = name.line;
        e->col = name.col;
        return e;
      }
      auto e = makeVar(name.text);
      e->line = name.line;
      e->col = name.col;
      return e;
    }
    throw Diag("expected expression", t.line, t.col);
  }

  Lexer lex_;
};

// ---------------------------------------------------------------------------
// Validation

class Validator {
 public:
  explicit Validator(Program& p) : p_(p) {}

  void run() {
    collectTopLevelNames();
    findEntry();
    for (auto& f : p_.functions) {
      collectLocals(f.body, f.locals, &f);
      checkFunctionBody(f.body, f.name);
    }
    checkRecursion();
    for (auto& t : p_.tasks) {
      collectLocals(t.body, t.locals, nullptr);
      checkTaskBody(t);
      if (!terminates(t.body))
        throw Diag("task '" + t.name + "': path without transition or halt",
                   t.line, t.col);
      DefSet defs;
      checkDefBeforeUse(t.body, t.locals, defs, false);
    }
    for (auto& f : p_.functions) {
      DefSet defs;
      checkDefBeforeUse(f.body, f.locals, defs, false);
    }
    if (p_.initBlock) {
      collectLocals(*p_.initBlock, p_.initLocals, nullptr);
      checkInitBody(*p_.initBlock);
      DefSet defs;
      checkDefBeforeUse(*p_.initBlock, p_.initLocals, defs, true);
    }
  }

 private:
  using DefSet = std::set<std::string>;

  // double underscores are reserved for instrumentation names
  static void checkReserved(const std::string& name, int line, int col) {
    if (name.find("__") != std::string::npos)
      throw Diag("'" + name + "': names containing '__' are reserved", line,
                 col);
  }

  void collectTopLevelNames() {
    for (const auto& d : p_.tsDecls) {
      checkReserved(d.name, d.line, d.col);
      if (!tsNames_.insert(d.name).second)
        throw Diag("duplicate TS variable '" + d.name + "'", d.line, d.col);
      if (d.isArray() && static_cast<long>(d.init.size()) != d.length)
        throw Diag("array initializer length mismatch for '" + d.name + "'",
                   d.line, d.col);
    }
    std::unordered_set<std::string> taskNames;
    for (const auto& t : p_.tasks) {
      checkReserved(t.name, t.line, t.col);
      if (!taskNames.insert(t.name).second)
        throw Diag("duplicate task '" + t.name + "'", t.line, t.col);
    }
    std::unordered_set<std::string> fnNames;
    for (const auto& f : p_.functions) {
      checkReserved(f.name, f.line, f.col);
      if (!fnNames.insert(f.name).second)
        throw Diag("duplicate function '" + f.name + "'", f.line, f.col);
      if (taskNames.count(f.name))
        throw Diag("function '" + f.name + "' shares a name with a task",
                   f.line, f.col);
    }
  }

  void findEntry() {
    const Task* entry = nullptr;
    for (const auto& t : p_.tasks) {
      if (t.isEntry) {
        if (entry)
          throw Diag("multiple entry tasks ('" + entry->name + "' and '" +
                         t.name + "')",
                     t.line, t.col);
        entry = &t;
      }
    }
    if (!entry) throw Diag("missing entry task");
    p_.entryTask = entry->name;
  }

  void collectLocals(const StmtList& body,
                     std::unordered_map<std::string, LocalInfo>& locals,
                     const Function* fn) {
    for (const auto& s : body) {
      if (s->kind == Stmt::Kind::LocalDecl) {
        if (tsNames_.count(s->name))
          throw Diag("local '" + s->name + "' shadows a TS variable", s->line,
                     s->col);
        if (locals.count(s->name))
          throw Diag("duplicate local '" + s->name + "'", s->line, s->col);
        checkReserved(s->name, s->line, s->col);
        locals[s->name] = LocalInfo{s->arrayLen};
      }
      collectLocals(s->body, locals, fn);
      collectLocals(s->elseBody, locals, fn);
    }
  }

  void checkExpr(const Expr& e,
                 const std::unordered_map<std::string, LocalInfo>& locals,
                 bool localsOnly) {
    switch (e.kind) {
      case Expr::Kind::Const:
        return;
      case Expr::Kind::Var: {
        auto it = locals.find(e.name);
        if (it != locals.end()) {
          if (it->second.length > 0)
            throw Diag("array '" + e.name + "' used without subscript", e.line,
                       e.col);
          return;
        }
        const TsVarDecl* d = p_.findTs(e.name);
        if (!d)
          throw Diag("unknown identifier '" + e.name + "'", e.line, e.col);
        if (localsOnly)
          throw Diag("init block may not access TS variable '" + e.name + "'",
                     e.line, e.col);
        if (d->isArray())
          throw Diag("array '" + e.name + "' used without subscript", e.line,
                     e.col);
        return;
      }
      case Expr::Kind::Index: {
        auto it = locals.find(e.name);
        if (it != locals.end()) {
          if (it->second.length == 0)
            throw Diag("scalar '" + e.name + "' used with subscript", e.line,
                       e.col);
        } else {
          const TsVarDecl* d = p_.findTs(e.name);
          if (!d)
            throw Diag("unknown identifier '" + e.name + "'", e.line, e.col);
          if (localsOnly)
            throw Diag("init block may not access TS variable '" + e.name + "'",
                       e.line, e.col);
          if (!d->isArray())
            throw Diag("scalar '" + e.name + "' used with subscript", e.line,
                       e.col);
        }
        checkExpr(*e.a, locals, localsOnly);
        return;
      }
      case Expr::Kind::Unary:
        checkExpr(*e.a, locals, localsOnly);
        return;
      case Expr::Kind::Binary:
        checkExpr(*e.a, locals, localsOnly);
        checkExpr(*e.b, locals, localsOnly);
        return;
    }
  }

  void checkLValue(const Stmt& s,
                   const std::unordered_map<std::string, LocalInfo>& locals,
                   bool localsOnly) {
    Expr probe;
    probe.kind = s.lhs.isArray() ? Expr::Kind::Index : Expr::Kind::Var;
    probe.name = s.lhs.name;
    probe.line = s.line;
    probe.col = s.col;
    if (s.lhs.isArray()) {
      probe.a = s.lhs.index->clone();
    }
    checkExpr(probe, locals, localsOnly);
  }

  void checkCommonStmt(const Stmt& s,
                       const std::unordered_map<std::string, LocalInfo>& locals,
                       bool localsOnly) {
    switch (s.kind) {
      case Stmt::Kind::LocalDecl:
        if (s.expr) checkExpr(*s.expr, locals, localsOnly);
        break;
      case Stmt::Kind::Assign:
        checkLValue(s, locals, localsOnly);
        checkExpr(*s.expr, locals, localsOnly);
        break;
      case Stmt::Kind::Sample:
        checkLValue(s, locals, localsOnly);
        break;
      case Stmt::Kind::Output:
      case Stmt::Kind::If:
      case Stmt::Kind::While:
        checkExpr(*s.expr, locals, localsOnly);
        break;
      default:
        break;
    }
  }

  void checkTaskBody(Task& t) {
    walk(t.body, [&](const Stmt& s) {
      checkCommonStmt(s, t.locals, false);
      if (s.kind == Stmt::Kind::Transition && !p_.findTask(s.name))
        throw Diag("transition to unknown task '" + s.name + "'", s.line,
                   s.col);
      if (s.kind == Stmt::Kind::Call && !p_.findFunction(s.name))
        throw Diag("call to unknown function '" + s.name + "'", s.line, s.col);
    });
  }

  void checkFunctionBody(const StmtList& body, const std::string& name) {
    const Function* f = p_.findFunction(name);
    walk(body, [&](const Stmt& s) {
      checkCommonStmt(s, f->locals, false);
      if (s.kind == Stmt::Kind::Transition)
        throw Diag("transition_to not allowed in function '" + name + "'",
                   s.line, s.col);
      if (s.kind == Stmt::Kind::Halt)
        throw Diag("halt not allowed in function '" + name + "'", s.line,
                   s.col);
      if (s.kind == Stmt::Kind::Call && !p_.findFunction(s.name))
        throw Diag("call to unknown function '" + s.name + "'", s.line, s.col);
    });
  }

  void checkInitBody(const StmtList& body) {
    walk(body, [&](const Stmt& s) {
      switch (s.kind) {
        case Stmt::Kind::LocalDecl:
        case Stmt::Kind::Assign:
        case Stmt::Kind::If:
        case Stmt::Kind::While:
          checkCommonStmt(s, p_.initLocals, true);
          break;
        default:
          throw Diag("init block may contain only local computation", s.line,
                     s.col);
      }
    });
  }

  void checkRecursion() {
    // 0 = unvisited, 1 = on stack, 2 = done
    std::unordered_map<std::string, int> state;
    std::function<void(const Function&)> visit = [&](const Function& f) {
      int& st = state[f.name];
      if (st == 1)
        throw Diag("recursion detected involving function '" + f.name + "'",
                   f.line, f.col);
      if (st == 2) return;
      st = 1;
      walk(f.body, [&](const Stmt& s) {
        if (s.kind == Stmt::Kind::Call) {
          const Function* callee = p_.findFunction(s.name);
          if (callee) visit(*callee);
        }
      });
      st = 2;
    };
    for (const auto& f : p_.functions) visit(f);
  }

  template <typename F>
  static void walk(const StmtList& body, F&& fn) {
    for (const auto& s : body) {
      fn(*s);
      walk(s->body, fn);
      walk(s->elseBody, fn);
    }
  }

  // A statement list "terminates" if some statement on every path through it
  // is a transition_to or halt.
  static bool terminates(const StmtList& body) {
    for (const auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::Transition:
        case Stmt::Kind::Halt:
          return true;
        case Stmt::Kind::If:
          if (terminates(s->body) && terminates(s->elseBody)) return true;
          break;
        default:
          break;  // while may execute zero iterations
      }
    }
    return false;
  }

  // Definite-assignment analysis for locals. `defs` is the set of locals
  // definitely written on every path reaching the current point.
  void checkDefBeforeUse(const StmtList& body,
                         const std::unordered_map<std::string, LocalInfo>& locals,
                         DefSet& defs, bool localsOnly) {
    for (const auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::LocalDecl:
          if (s->expr) {
            checkReads(*s->expr, locals, defs);
            defs.insert(s->name);
          }
          break;
        case Stmt::Kind::Assign:
          checkReads(*s->expr, locals, defs);
          if (s->lhs.isArray()) checkReads(*s->lhs.index, locals, defs);
          if (locals.count(s->lhs.name)) defs.insert(s->lhs.name);
          break;
        case Stmt::Kind::Sample:
          if (s->lhs.isArray()) checkReads(*s->lhs.index, locals, defs);
          if (locals.count(s->lhs.name)) defs.insert(s->lhs.name);
          break;
        case Stmt::Kind::Output:
          checkReads(*s->expr, locals, defs);
          break;
        case Stmt::Kind::If: {
          checkReads(*s->expr, locals, defs);
          DefSet thenDefs = defs, elseDefs = defs;
          checkDefBeforeUse(s->body, locals, thenDefs, localsOnly);
          checkDefBeforeUse(s->elseBody, locals, elseDefs, localsOnly);
          DefSet joined;
          for (const auto& n : thenDefs)
            if (elseDefs.count(n)) joined.insert(n);
          defs = std::move(joined);
          break;
        }
        case Stmt::Kind::While: {
          checkReads(*s->expr, locals, defs);
          DefSet bodyDefs = defs;
          checkDefBeforeUse(s->body, locals, bodyDefs, localsOnly);
          // The body may run zero times: the defs after the loop are the
          // defs before it.
          break;
        }
        case Stmt::Kind::Call: {
          const Function* f = p_.findFunction(s->name);
          (void)f;  // function locals are checked separately
          break;
        }
        case Stmt::Kind::Transition:
        case Stmt::Kind::Halt:
          return;  // nothing after these executes on this path
      }
    }
  }

  void checkReads(const Expr& e,
                  const std::unordered_map<std::string, LocalInfo>& locals,
                  const DefSet& defs) {
    switch (e.kind) {
      case Expr::Kind::Const:
        return;
      case Expr::Kind::Var:
      case Expr::Kind::Index:
        if (locals.count(e.name) && !defs.count(e.name))
          throw Diag("local '" + e.name + "' read before write", e.line, e.col);
        if (e.kind == Expr::Kind::Index) checkReads(*e.a, locals, defs);
        return;
      case Expr::Kind::Unary:
        checkReads(*e.a, locals, defs);
        return;
      case Expr::Kind::Binary:
        checkReads(*e.a, locals, defs);
        checkReads(*e.b, locals, defs);
        return;
    }
  }

  Program& p_;
  std::unordered_set<std::string> tsNames_;
};

}  // namespace

Program parseOnly(std::string_view source) { return Parser(source).parse(); }

void validate(Program& program) { Validator(program).run(); }

Program parseProgram(std::string_view source) {
  Program p = parseOnly(source);
  validate(p);
  return p;
}

}  // namespace itc
