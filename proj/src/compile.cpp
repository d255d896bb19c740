#include "itc/compile.hpp"

#include <algorithm>
#include <sstream>

#include "itc/printer.hpp"
#include "json.hpp"

namespace itc {

const char* modeName(Mode m) {
  switch (m) {
    case Mode::Redo: return "redo";
    case Mode::Undo: return "undo";
    case Mode::Ckpt: return "ckpt";
    case Mode::None: return "none";
  }
  return "?";
}

Mode modeFromName(const std::string& name) {
  if (name == "redo") return Mode::Redo;
  if (name == "undo") return Mode::Undo;
  if (name == "ckpt") return Mode::Ckpt;
  if (name == "none") return Mode::None;
  throw Diag("unknown mode '" + name + "' (expected redo, undo, ckpt or none)");
}

Program cloneProgram(const Program& p) {
  Program out;
  out.tsDecls = p.tsDecls;
  out.entryTask = p.entryTask;
  out.initLocals = p.initLocals;
  for (const auto& t : p.tasks) {
    Task ct;
    ct.name = t.name;
    ct.isEntry = t.isEntry;
    ct.locals = t.locals;
    ct.line = t.line;
    ct.col = t.col;
    for (const auto& s : t.body) ct.body.push_back(s->clone());
    out.tasks.push_back(std::move(ct));
  }
  for (const auto& f : p.functions) {
    Function cf;
    cf.name = f.name;
    cf.locals = f.locals;
    cf.line = f.line;
    cf.col = f.col;
    for (const auto& s : f.body) cf.body.push_back(s->clone());
    out.functions.push_back(std::move(cf));
  }
  if (p.initBlock) {
    StmtList init;
    for (const auto& s : *p.initBlock) init.push_back(s->clone());
    out.initBlock = std::move(init);
  }
  return out;
}

namespace {

class Lowerer {
 public:
  Lowerer(const Program& p, Mode mode, CompileOptions opt, CompiledProgram& cp)
      : p_(p), mode_(mode), opt_(opt), cp_(cp) {}

  void run() {
    cp_.mode = mode_;
    cp_.options = opt_;
    cp_.war = analyzeProgram(p_, opt_.strictCalls);
    layout();
    if (p_.initBlock) {
      beginFrame(nullptr, &p_.initLocals);
      for (const auto& name : sortedLocalNames(p_.initLocals))
        allocLocal(name, p_.initLocals.at(name));
      code_ = &cp_.initCode;
      lowerBody(*p_.initBlock);
      cp_.volWords = std::max(cp_.volWords, volTop_);
    }
    for (size_t i = 0; i < p_.tasks.size(); ++i) {
      const Task& t = p_.tasks[i];
      cp_.tasks.push_back(TaskCode{t.name, {}});
      beginFrame(&cp_.war.perTask[t.name], &t.locals);
      for (const auto& name : sortedLocalNames(t.locals))
        allocLocal(name, t.locals.at(name));
      code_ = &cp_.tasks.back().code;
      emitEntryInstrumentation();
      lowerBody(t.body);
      cp_.volWords = std::max(cp_.volWords, volTop_);
    }
    cp_.entryTask = p_.taskIndex(p_.entryTask);
  }

 private:
  // ---- layout ----

  static std::vector<std::string> sortedLocalNames(
      const std::unordered_map<std::string, LocalInfo>& locals) {
    std::vector<std::string> names;
    names.reserve(locals.size());
    for (const auto& [n, info] : locals) names.push_back(n);
    std::sort(names.begin(), names.end());
    return names;
  }

  void addSymbol(const std::string& name, std::uint32_t addr, std::uint32_t len,
                 NvSymbol::Kind kind) {
    cp_.symbols.push_back(NvSymbol{name, addr, len, kind});
  }

  void layout() {
    static const char* controlNames[NV_CONTROL_WORDS] = {
        "cur_task",      "cur_version",  "commit_ready",
        "end_index",     "need_rollback", "backup_index",
        "task_done",     "transition_target", "ckpt_active",
    };
    for (std::uint32_t i = 0; i < NV_CONTROL_WORDS; ++i)
      addSymbol(controlNames[i], i, 1, NvSymbol::Kind::Control);

    std::uint32_t addr = NV_CONTROL_WORDS;
    cp_.tsBase = addr;
    for (const auto& d : p_.tsDecls) {
      std::uint32_t len = static_cast<std::uint32_t>(d.wordCount());
      tsAddr_[d.name] = addr;
      addSymbol(d.name, addr, len, NvSymbol::Kind::Ts);
      addr += len;
    }
    cp_.tsWords = addr - cp_.tsBase;

    std::set<std::string> privUnion;
    for (const auto& [task, vars] : cp_.war.perTask)
      privUnion.insert(vars.begin(), vars.end());

    if (mode_ == Mode::Redo) {
      for (const auto& v : privUnion) {
        std::uint32_t len =
            static_cast<std::uint32_t>(p_.findTs(v)->wordCount());
        bufAddr_[v] = addr;
        addSymbol(v + "__buf", addr, len, NvSymbol::Kind::Buf);
        addr += len;
      }
    }
    if (mode_ == Mode::Redo || mode_ == Mode::Undo) {
      for (const auto& v : privUnion) {
        const TsVarDecl* d = p_.findTs(v);
        if (!d->isArray()) continue;
        std::uint32_t len = static_cast<std::uint32_t>(d->length);
        vbmAddr_[v] = addr;
        addSymbol(v + "__vbm", addr, len, NvSymbol::Kind::Vbm);
        cp_.vbmRegions.emplace_back(addr, len);
        addr += len;
      }
    }
    cp_.commitCapacity = cp_.war.maxCommitListSize;
    if (mode_ == Mode::Redo && cp_.commitCapacity > 0) {
      cp_.commitListBase = addr;
      addSymbol("commit_list", addr,
                static_cast<std::uint32_t>(cp_.commitCapacity) * 3,
                NvSymbol::Kind::CommitList);
      addr += static_cast<std::uint32_t>(cp_.commitCapacity) * 3;
    }
    if (mode_ == Mode::Undo && cp_.commitCapacity > 0) {
      cp_.backupListBase = addr;
      addSymbol("backup_list", addr,
                static_cast<std::uint32_t>(cp_.commitCapacity) * 2,
                NvSymbol::Kind::BackupList);
      addr += static_cast<std::uint32_t>(cp_.commitCapacity) * 2;
    }
    if (mode_ == Mode::Ckpt) {
      cp_.synthBase = addr;
      addSymbol("synth_block", addr, opt_.ckptSynthWords, NvSymbol::Kind::Synth);
      addr += opt_.ckptSynthWords;
      cp_.snapshotWords = cp_.tsWords + opt_.ckptSynthWords + 1;
      for (int i = 0; i < 2; ++i) {
        cp_.snapshotBase[i] = addr;
        addSymbol(i == 0 ? "snapshot0" : "snapshot1", addr, cp_.snapshotWords,
                  NvSymbol::Kind::Snapshot);
        addr += cp_.snapshotWords;
      }
    }
    cp_.nvWords = addr;
  }

  // ---- frames ----

  void beginFrame(const std::set<std::string>* priv,
                  const std::unordered_map<std::string, LocalInfo>* locals) {
    slots_.clear();
    volTop_ = 0;
    priv_ = priv;
    taskLocals_ = locals;
    fnScope_.clear();
  }

  std::uint32_t allocLocal(const std::string& key, const LocalInfo& info) {
    auto [it, fresh] = slots_.emplace(key, volTop_);
    if (fresh) volTop_ += static_cast<std::uint32_t>(info.wordCount());
    return it->second;
  }

  std::uint32_t allocTemp() { return volTop_++; }

  bool isPriv(const std::string& name) const {
    return priv_ && priv_->count(name) > 0;
  }

  // ---- expression arena ----

  std::int32_t addExpr(RExpr e) {
    cp_.exprs.push_back(e);
    return static_cast<std::int32_t>(cp_.exprs.size()) - 1;
  }
  std::int32_t eConst(Word v) {
    RExpr e;
    e.k = RExpr::K::Const;
    e.cval = v;
    return addExpr(e);
  }
  std::int32_t eLoad(MemRef r) {
    RExpr e;
    e.k = RExpr::K::Load;
    e.ref = r;
    return addExpr(e);
  }
  std::int32_t eUn(UnOp op, std::int32_t a) {
    RExpr e;
    e.k = RExpr::K::Un;
    e.op = static_cast<std::uint8_t>(op);
    e.a = a;
    return addExpr(e);
  }
  std::int32_t eBin(BinOp op, std::int32_t a, std::int32_t b) {
    RExpr e;
    e.k = RExpr::K::Bin;
    e.op = static_cast<std::uint8_t>(op);
    e.a = a;
    e.b = b;
    return addExpr(e);
  }

  // ---- name resolution ----

  const LocalInfo* localInfo(const std::string& name, std::string* key) const {
    if (!fnScope_.empty()) {
      std::string k = fnScope_ + "::" + name;
      const Function* f = p_.findFunction(fnScope_);
      auto it = f->locals.find(name);
      if (it != f->locals.end()) {
        *key = std::move(k);
        return &it->second;
      }
      return nullptr;  // function scope falls through to TS only
    }
    const std::unordered_map<std::string, LocalInfo>* locals = nullptr;
    if (taskLocals_) locals = taskLocals_;
    if (locals) {
      auto it = locals->find(name);
      if (it != locals->end()) {
        *key = name;
        return &it->second;
      }
    }
    return nullptr;
  }

  MemRef refFor(const std::string& name, std::int32_t subId) {
    std::string key;
    if (const LocalInfo* info = localInfo(name, &key)) {
      MemRef r;
      r.space = Space::Vol;
      r.base = slots_.at(key);
      r.len = static_cast<std::uint32_t>(info->wordCount());
      r.index = subId;
      return r;
    }
    const TsVarDecl* d = p_.findTs(name);
    MemRef r;
    r.space = Space::Nv;
    r.base = (mode_ == Mode::Redo && isPriv(name)) ? bufAddr_.at(name)
                                                   : tsAddr_.at(name);
    r.len = static_cast<std::uint32_t>(d->wordCount());
    r.index = subId;
    return r;
  }

  bool isGatedArray(const std::string& name) const {
    if (mode_ != Mode::Redo && mode_ != Mode::Undo) return false;
    std::string key;
    if (localInfo(name, &key)) return false;
    const TsVarDecl* d = p_.findTs(name);
    return d && d->isArray() && isPriv(name);
  }

  // ---- emission ----

  Instr& emit(Instr::Op op, int line) {
    code_->push_back(Instr{});
    Instr& i = code_->back();
    i.op = op;
    i.line = line;
    return i;
  }
  std::int32_t here() const { return static_cast<std::int32_t>(code_->size()); }

  void emitReadGate(const std::string& name, std::int32_t subId, int line) {
    const TsVarDecl* d = p_.findTs(name);
    Instr& test = emit(Instr::Op::VbmSkipIfSet, line);
    test.index = subId;
    test.origBase = tsAddr_.at(name);
    test.bufBase = bufAddr_.at(name);
    test.vbmBase = vbmAddr_.at(name);
    test.len = static_cast<std::uint32_t>(d->length);
    std::int32_t testAt = here() - 1;
    Instr& cp = emit(Instr::Op::ArrInitCopy, line);
    cp.index = subId;
    cp.origBase = tsAddr_.at(name);
    cp.bufBase = bufAddr_.at(name);
    cp.len = static_cast<std::uint32_t>(d->length);
    (*code_)[testAt].target = here();
  }

  void emitWriteGate(const std::string& name, std::int32_t subId, int line) {
    const TsVarDecl* d = p_.findTs(name);
    std::uint32_t len = static_cast<std::uint32_t>(d->length);
    Instr& test = emit(Instr::Op::VbmSkipIfSet, line);
    test.index = subId;
    test.origBase = tsAddr_.at(name);
    test.vbmBase = vbmAddr_.at(name);
    test.len = len;
    std::int32_t testAt = here() - 1;
    if (mode_ == Mode::Redo) {
      test.bufBase = bufAddr_.at(name);
      Instr& set = emit(Instr::Op::VbmSet, line);
      set.index = subId;
      set.vbmBase = vbmAddr_.at(name);
      set.len = len;
      Instr& pcm = emit(Instr::Op::PreCommitElem, line);
      pcm.index = subId;
      pcm.origBase = tsAddr_.at(name);
      pcm.bufBase = bufAddr_.at(name);
      pcm.len = len;
    } else {  // undo
      Instr& bk = emit(Instr::Op::BackupElem, line);
      bk.index = subId;
      bk.origBase = tsAddr_.at(name);
      bk.len = len;
      Instr& set = emit(Instr::Op::VbmSet, line);
      set.index = subId;
      set.vbmBase = vbmAddr_.at(name);
      set.len = len;
    }
    (*code_)[testAt].target = here();
  }

  void emitEntryInstrumentation() {
    if (!priv_ || (mode_ != Mode::Redo && mode_ != Mode::Undo)) return;
    for (const auto& v : *priv_) {  // std::set iterates sorted
      const TsVarDecl* d = p_.findTs(v);
      if (d->isArray()) continue;
      if (mode_ == Mode::Redo) {
        Instr& i = emit(Instr::Op::PrivScalar, 0);
        i.origBase = tsAddr_.at(v);
        i.bufBase = bufAddr_.at(v);
      } else {
        Instr& i = emit(Instr::Op::BackupScalar, 0);
        i.origBase = tsAddr_.at(v);
      }
    }
  }

  void emitPreTransition(int line) {
    if (mode_ != Mode::Redo || !priv_) return;
    for (const auto& v : *priv_) {
      const TsVarDecl* d = p_.findTs(v);
      if (d->isArray()) continue;
      Instr& i = emit(Instr::Op::PreCommitScalar, line);
      i.origBase = tsAddr_.at(v);
      i.bufBase = bufAddr_.at(v);
    }
  }

  // ---- expressions ----

  std::int32_t lowerExpr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Const:
        return eConst(e.value);
      case Expr::Kind::Var:
        return eLoad(refFor(e.name, -1));
      case Expr::Kind::Index: {
        std::int32_t sub = lowerExpr(*e.a);
        if (mode_ == Mode::Redo && isGatedArray(e.name))
          emitReadGate(e.name, sub, e.line);
        return eLoad(refFor(e.name, sub));
      }
      case Expr::Kind::Unary:
        return eUn(e.unop, lowerExpr(*e.a));
      case Expr::Kind::Binary:
        if (e.binop == BinOp::LogAnd || e.binop == BinOp::LogOr)
          return lowerShortCircuit(e);
        {
          std::int32_t a = lowerExpr(*e.a);
          std::int32_t b = lowerExpr(*e.b);
          return eBin(e.binop, a, b);
        }
    }
    return eConst(0);
  }

  // a && b / a || b evaluate through a temporary with a branch so that the
  // second operand (and its bitmask gates) only run when reached.
  std::int32_t lowerShortCircuit(const Expr& e) {
    std::uint32_t t = allocTemp();
    MemRef tr;
    tr.space = Space::Vol;
    tr.base = t;
    std::int32_t a = lowerExpr(*e.a);
    Instr& st = emit(Instr::Op::Assign, e.line);
    st.dst = tr;
    st.expr = eBin(BinOp::Ne, a, eConst(0));
    Instr& br = emit(Instr::Op::BranchIfFalse, e.line);
    std::int32_t brAt = here() - 1;
    br.expr = e.binop == BinOp::LogAnd ? eLoad(tr)
                                       : eUn(UnOp::LogNot, eLoad(tr));
    std::int32_t b = lowerExpr(*e.b);
    Instr& st2 = emit(Instr::Op::Assign, e.line);
    st2.dst = tr;
    st2.expr = eBin(BinOp::Ne, b, eConst(0));
    (*code_)[brAt].target = here();
    return eLoad(tr);
  }

  // ---- statements ----

  std::int32_t channelId(const std::string& name) {
    for (size_t i = 0; i < cp_.channels.size(); ++i)
      if (cp_.channels[i] == name) return static_cast<std::int32_t>(i);
    cp_.channels.push_back(name);
    return static_cast<std::int32_t>(cp_.channels.size()) - 1;
  }

  void lowerWrite(const LValue& lhs, std::int32_t rhs, int line, bool isSample,
                  std::int32_t chan) {
    std::int32_t sub = -1;
    if (lhs.index) sub = lowerExpr(*lhs.index);
    if (lhs.isArray() && isGatedArray(lhs.name))
      emitWriteGate(lhs.name, sub, line);
    Instr& i = emit(isSample ? Instr::Op::Sample : Instr::Op::Assign, line);
    i.dst = refFor(lhs.name, sub);
    i.expr = rhs;
    i.chan = chan;
  }

  void lowerBody(const StmtList& body) {
    for (const auto& s : body) lowerStmt(*s);
  }

  void lowerStmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::LocalDecl: {
        std::string key = fnScope_.empty() ? s.name : fnScope_ + "::" + s.name;
        if (s.expr) {
          std::int32_t v = lowerExpr(*s.expr);
          Instr& i = emit(Instr::Op::Assign, s.line);
          i.dst = MemRef{Space::Vol, slots_.at(key), 1, -1};
          i.expr = v;
        }
        break;
      }
      case Stmt::Kind::Assign: {
        std::int32_t rhs = lowerExpr(*s.expr);
        lowerWrite(s.lhs, rhs, s.line, false, -1);
        break;
      }
      case Stmt::Kind::Sample:
        lowerWrite(s.lhs, -1, s.line, true, channelId(s.name));
        break;
      case Stmt::Kind::Output: {
        std::int32_t v = lowerExpr(*s.expr);
        Instr& i = emit(Instr::Op::Output, s.line);
        i.expr = v;
        break;
      }
      case Stmt::Kind::If: {
        std::int32_t c = lowerExpr(*s.expr);
        std::int32_t brAt = here();
        Instr& br = emit(Instr::Op::BranchIfFalse, s.line);
        br.expr = c;
        lowerBody(s.body);
        if (s.elseBody.empty()) {
          (*code_)[brAt].target = here();
        } else {
          std::int32_t jAt = here();
          emit(Instr::Op::Jump, s.line);
          (*code_)[brAt].target = here();
          lowerBody(s.elseBody);
          (*code_)[jAt].target = here();
        }
        break;
      }
      case Stmt::Kind::While: {
        std::int32_t top = here();
        std::int32_t c = lowerExpr(*s.expr);
        std::int32_t brAt = here();
        Instr& br = emit(Instr::Op::BranchIfFalse, s.line);
        br.expr = c;
        Instr& g = emit(Instr::Op::LoopGuard, s.line);
        g.slot = allocTemp();
        g.bound = s.bound;
        lowerBody(s.body);
        Instr& j = emit(Instr::Op::Jump, s.line);
        j.target = top;
        (*code_)[brAt].target = here();
        break;
      }
      case Stmt::Kind::Call: {
        const Function* f = p_.findFunction(s.name);
        for (const auto& name : sortedLocalNames(f->locals))
          allocLocal(s.name + "::" + name, f->locals.at(name));
        std::string saved = fnScope_;
        fnScope_ = s.name;
        lowerBody(f->body);
        fnScope_ = saved;
        break;
      }
      case Stmt::Kind::Transition: {
        emitPreTransition(s.line);
        Instr& i = emit(Instr::Op::Transition, s.line);
        i.target = p_.taskIndex(s.name);
        break;
      }
      case Stmt::Kind::Halt: {
        emitPreTransition(s.line);
        Instr& i = emit(Instr::Op::Transition, s.line);
        i.target = -1;
        break;
      }
    }
  }

  const Program& p_;
  Mode mode_;
  CompileOptions opt_;
  CompiledProgram& cp_;

  std::map<std::string, std::uint32_t> tsAddr_, bufAddr_, vbmAddr_;
  std::map<std::string, std::uint32_t> slots_;
  std::uint32_t volTop_ = 0;
  const std::set<std::string>* priv_ = nullptr;
  const std::unordered_map<std::string, LocalInfo>* taskLocals_ = nullptr;
  std::vector<Instr>* code_ = nullptr;
  std::string fnScope_;
};

}  // namespace

CompiledProgram compile(const Program& p, Mode mode, CompileOptions options) {
  CompiledProgram cp;
  cp.program = cloneProgram(p);
  Lowerer low(cp.program, mode, options, cp);
  // the lowerer walks cp.program (the clone) so instruction line numbers and
  // the report refer to storage owned by the result
  low.run();
  return cp;
}

std::vector<Word> CompiledProgram::initialNvImage() const {
  std::vector<Word> nv(nvWords, 0);
  nv[NV_CUR_TASK] = entryTask;
  std::uint32_t addr = tsBase;
  for (const auto& d : program.tsDecls) {
    for (long i = 0; i < d.wordCount(); ++i)
      nv[addr + static_cast<std::uint32_t>(i)] =
          i < static_cast<long>(d.init.size()) ? d.init[i] : 0;
    addr += static_cast<std::uint32_t>(d.wordCount());
  }
  if (mode == Mode::Ckpt) {
    // snapshot 0 starts active and holds the initial state
    for (std::uint32_t i = 0; i < tsWords; ++i)
      nv[snapshotBase[0] + i] = nv[tsBase + i];
    nv[snapshotBase[0] + snapshotWords - 1] = entryTask;
  }
  return nv;
}

const NvSymbol* CompiledProgram::findSymbol(const std::string& name) const {
  for (const auto& s : symbols)
    if (s.name == name) return &s;
  return nullptr;
}

std::string manifestJson(const CompiledProgram& cp) {
  nlohmann::json j;
  j["mode"] = modeName(cp.mode);
  j["nvWords"] = cp.nvWords;
  j["volWords"] = cp.volWords;
  j["tsBase"] = cp.tsBase;
  j["tsWords"] = cp.tsWords;
  j["commitCapacity"] = cp.commitCapacity;
  j["channels"] = cp.channels;

  nlohmann::json syms = nlohmann::json::array();
  for (const auto& s : cp.symbols) {
    static const char* kinds[] = {"control", "ts", "buffer", "bitmask",
                                  "commitList", "backupList", "snapshot",
                                  "synth"};
    syms.push_back({{"name", s.name},
                    {"addr", s.addr},
                    {"len", s.len},
                    {"kind", kinds[static_cast<int>(s.kind)]}});
  }
  j["symbols"] = syms;

  nlohmann::json tasks = nlohmann::json::object();
  for (size_t ti = 0; ti < cp.tasks.size(); ++ti) {
    const TaskCode& t = cp.tasks[ti];
    nlohmann::json inj = nlohmann::json::object();
    auto count = [&](Instr::Op op) {
      return std::count_if(t.code.begin(), t.code.end(),
                           [&](const Instr& i) { return i.op == op; });
    };
    inj["privatize"] = count(Instr::Op::PrivScalar);
    inj["backup"] = count(Instr::Op::BackupScalar) +
                    count(Instr::Op::BackupElem);
    inj["preCommit"] = count(Instr::Op::PreCommitScalar) +
                       count(Instr::Op::PreCommitElem);
    inj["vbmTest"] = count(Instr::Op::VbmSkipIfSet);
    inj["vbmSet"] = count(Instr::Op::VbmSet);
    inj["initCopy"] = count(Instr::Op::ArrInitCopy);
    nlohmann::json tj;
    tj["instructions"] = t.code.size();
    tj["injected"] = inj;
    auto it = cp.war.perTask.find(t.name);
    tj["privatized"] = it != cp.war.perTask.end()
                           ? nlohmann::json(it->second)
                           : nlohmann::json::array();
    tasks[t.name] = tj;
  }
  j["tasks"] = tasks;
  return j.dump(2);
}

// ---- instrumented source ----

namespace {

class InstrPrinter {
 public:
  InstrPrinter(const CompiledProgram& cp) : cp_(cp), p_(cp.program) {}

  std::string print() {
    for (const auto& d : p_.tsDecls) {
      out_ << "TS int " << d.name;
      if (d.isArray()) out_ << "[" << d.length << "]";
      bool nonZero = false;
      for (Word w : d.init) nonZero = nonZero || w != 0;
      if (nonZero) {
        if (d.isArray()) {
          out_ << " = {";
          for (size_t i = 0; i < d.init.size(); ++i)
            out_ << (i ? ", " : "") << d.init[i];
          out_ << "}";
        } else {
          out_ << " = " << d.init[0];
        }
      }
      out_ << ";\n";
    }
    if (p_.initBlock) {
      out_ << "\ninit {\n";
      priv_ = nullptr;
      for (const auto& s : *p_.initBlock) stmt(*s, 1);
      out_ << "}\n";
    }
    for (const auto& f : p_.functions) {
      out_ << "\nfn " << f.name << "() {\n";
      priv_ = nullptr;
      for (const auto& s : f.body) stmt(*s, 1);
      out_ << "}\n";
    }
    for (const auto& t : p_.tasks) {
      out_ << "\n";
      auto it = cp_.war.perTask.find(t.name);
      bool logging = cp_.mode == Mode::Redo || cp_.mode == Mode::Undo;
      priv_ = logging && it != cp_.war.perTask.end() && !it->second.empty()
                  ? &it->second
                  : nullptr;
      if (priv_) {
        out_ << "// privatized:";
        for (const auto& v : *priv_) out_ << " " << v;
        out_ << "\n";
      }
      if (t.isEntry) out_ << "entry ";
      out_ << "task " << t.name << " {\n";
      if (priv_ && (cp_.mode == Mode::Redo || cp_.mode == Mode::Undo)) {
        for (const auto& v : *priv_) {
          if (p_.findTs(v)->isArray()) continue;
          indent(1);
          out_ << (cp_.mode == Mode::Redo ? "__privatize(" : "__backup(") << v
               << ");\n";
        }
      }
      for (const auto& s : t.body) stmt(*s, 1);
      out_ << "}\n";
    }
    return out_.str();
  }

 private:
  void indent(int n) {
    for (int i = 0; i < n; ++i) out_ << "  ";
  }

  bool gated(const std::string& name) const {
    if (!priv_ || !priv_->count(name)) return false;
    const TsVarDecl* d = p_.findTs(name);
    return d && d->isArray();
  }

  std::string renamed(const Expr& e) const {
    ExprPtr c = e.clone();
    rename(*c);
    return printExpr(*c);
  }

  void rename(Expr& e) const {
    if ((e.kind == Expr::Kind::Var || e.kind == Expr::Kind::Index) &&
        cp_.mode == Mode::Redo && priv_ && priv_->count(e.name) &&
        p_.findTs(e.name))
      e.name += "__priv";
    if (e.a) rename(*e.a);
    if (e.b) rename(*e.b);
  }

  // gate pseudo-calls for every instrumented array access in the expression,
  // in evaluation order
  void gates(const Expr& e, int ind, bool write) {
    if (e.a) gates(*e.a, ind, false);
    if (e.b) gates(*e.b, ind, false);
    // in-place logging leaves reads bare; only buffered reads need the
    // copy-in gate
    if (e.kind == Expr::Kind::Index && gated(e.name) &&
        (write || cp_.mode == Mode::Redo)) {
      indent(ind);
      out_ << (write ? "__gate_write(" : "__gate_read(") << e.name << ", "
           << renamed(*e.a) << ");\n";
    }
  }

  void preTransition(int ind) {
    if (cp_.mode != Mode::Redo || !priv_) return;
    for (const auto& v : *priv_) {
      if (p_.findTs(v)->isArray()) continue;
      indent(ind);
      out_ << "__pre_commit(" << v << ");\n";
    }
  }

  void stmt(const Stmt& s, int ind) {
    switch (s.kind) {
      case Stmt::Kind::LocalDecl:
        if (s.expr) gates(*s.expr, ind, false);
        indent(ind);
        out_ << "int " << s.name;
        if (s.arrayLen > 0) out_ << "[" << s.arrayLen << "]";
        if (s.expr) out_ << " = " << renamed(*s.expr);
        out_ << ";\n";
        break;
      case Stmt::Kind::Assign:
        gates(*s.expr, ind, false);
        if (s.lhs.index) {
          gates(*s.lhs.index, ind, false);
          if (gated(s.lhs.name)) {
            indent(ind);
            out_ << "__gate_write(" << s.lhs.name << ", " << renamed(*s.lhs.index)
                 << ");\n";
          }
        }
        indent(ind);
        out_ << lhsText(s.lhs) << " = " << renamed(*s.expr) << ";\n";
        break;
      case Stmt::Kind::Sample:
        if (s.lhs.index) {
          gates(*s.lhs.index, ind, false);
          if (gated(s.lhs.name)) {
            indent(ind);
            out_ << "__gate_write(" << s.lhs.name << ", " << renamed(*s.lhs.index)
                 << ");\n";
          }
        }
        indent(ind);
        out_ << "sample(" << lhsText(s.lhs) << ", " << s.name << ");\n";
        break;
      case Stmt::Kind::Output:
        gates(*s.expr, ind, false);
        indent(ind);
        out_ << "output(" << renamed(*s.expr) << ");\n";
        break;
      case Stmt::Kind::If:
        gates(*s.expr, ind, false);
        indent(ind);
        out_ << "if (" << renamed(*s.expr) << ") {\n";
        for (const auto& c : s.body) stmt(*c, ind + 1);
        if (!s.elseBody.empty()) {
          indent(ind);
          out_ << "} else {\n";
          for (const auto& c : s.elseBody) stmt(*c, ind + 1);
        }
        indent(ind);
        out_ << "}\n";
        break;
      case Stmt::Kind::While:
        gates(*s.expr, ind, false);
        indent(ind);
        out_ << "while (" << renamed(*s.expr) << ") bound " << s.bound
             << " {\n";
        for (const auto& c : s.body) stmt(*c, ind + 1);
        indent(ind);
        out_ << "}\n";
        break;
      case Stmt::Kind::Call:
        indent(ind);
        out_ << s.name << "();\n";
        break;
      case Stmt::Kind::Transition:
        preTransition(ind);
        indent(ind);
        out_ << "transition_to " << s.name << ";\n";
        break;
      case Stmt::Kind::Halt:
        preTransition(ind);
        indent(ind);
        out_ << "halt;\n";
        break;
    }
  }

  std::string lhsText(const LValue& l) const {
    std::string n = l.name;
    if (cp_.mode == Mode::Redo && priv_ && priv_->count(n) && p_.findTs(n))
      n += "__priv";
    if (l.index) n += "[" + renamed(*l.index) + "]";
    return n;
  }

  const CompiledProgram& cp_;
  const Program& p_;
  const std::set<std::string>* priv_ = nullptr;
  std::ostringstream out_;
};

}  // namespace

std::string instrumentedSource(const CompiledProgram& cp) {
  return InstrPrinter(cp).print();
}

}  // namespace itc
