#include "itc/machine.hpp"

#include <limits>
#include <sstream>

namespace itc {

CostTable parseCostTable(const std::string& text) {
  CostTable t;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Diag("cost table: expected key=value", lineNo);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    long v;
    try {
      v = std::stol(val);
    } catch (...) {
      throw Diag("cost table: bad value '" + val + "'", lineNo);
    }
    if (v < 0) throw Diag("cost table: negative cost", lineNo);
    if (key == "compute") t.compute = v;
    else if (key == "volAccess") t.volAccess = v;
    else if (key == "nvAccess") t.nvAccess = v;
    else throw Diag("cost table: unknown key '" + key + "'", lineNo);
  }
  return t;
}

namespace {

enum Tag : std::uint8_t {
  TagVbmClear,
  TagVersion,
  TagEndIdxReset,
  TagBkIdxReset,
  TagCommitCopy,
  TagRollbackWrite,
  TagSetTarget,
  TagSetReady,
  TagSetDone,
  TagClearReady,
  TagClearDone,
  TagClearRb,
  TagCurTask,
  TagPreCommitWord,
  TagPreCommitPublish,
  TagBackupWord,
  TagBackupFlag,
  TagBackupPublish,
  TagSnapCopy,
  TagCkptFlip,
  TagRestoreCopy,
  TagRestoreTask,
};

const char* tagKind(std::uint8_t tag) {
  switch (tag) {
    case TagVbmClear: return "vbm_clear";
    case TagVersion: return "version";
    case TagEndIdxReset: return "end_index_reset";
    case TagBkIdxReset: return "backup_index_reset";
    case TagCommitCopy: return "commit_copy";
    case TagRollbackWrite: return "rollback_copy";
    case TagSetTarget: return "set_target";
    case TagSetReady: return "commit_ready_set";
    case TagSetDone: return "task_done_set";
    case TagClearReady: return "commit_ready_clear";
    case TagClearDone: return "task_done_clear";
    case TagClearRb: return "need_rollback_clear";
    case TagCurTask: return "cur_task";
    case TagPreCommitWord: return "pre_commit_word";
    case TagPreCommitPublish: return "pre_commit";
    case TagBackupWord: return "backup_word";
    case TagBackupFlag: return "backup_flag";
    case TagBackupPublish: return "backup";
    case TagSnapCopy: return "snap_copy";
    case TagCkptFlip: return "ckpt_flip";
    case TagRestoreCopy: return "restore_copy";
    case TagRestoreTask: return "restore_task";
  }
  return "?";
}

bool tagIsLogging(std::uint8_t tag) {
  return tag == TagBackupWord || tag == TagBackupFlag ||
         tag == TagBackupPublish;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct ProgErr {
  std::string msg;
  int line;
};

}  // namespace

Machine::Machine(const CompiledProgram& cp, RunConfig cfg)
    : cp_(cp), cfg_(std::move(cfg)) {
  nv_ = cp_.initialNvImage();
  if (cfg_.initialVersion != 0) nv_[NV_CUR_VERSION] = cfg_.initialVersion;
  vol_.assign(cp_.volWords, 0);
  shadowVbm_.assign(cp_.nvWords, 0);
  cont_ = Cont::BootVersion;
}

int Machine::currentTask() const {
  return static_cast<int>(nv_[NV_CUR_TASK]);
}

long Machine::pendingRollbackCopies() const {
  if (cp_.mode != Mode::Undo) return 0;
  if (nv_[NV_NEED_ROLLBACK] && !nv_[NV_TASK_DONE]) return nv_[NV_BACKUP_INDEX];
  return 0;
}

void Machine::trace(const char* kind, long addr, Word value, int line,
                    Word old) {
  if (!cfg_.sink) return;
  TraceEvent e;
  e.step = stats_.steps;
  e.kind = kind;
  e.task = static_cast<int>(nv_[NV_CUR_TASK]);
  e.addr = addr;
  e.old = old;
  e.value = value;
  e.version = nv_[NV_CUR_VERSION];
  e.line = line;
  cfg_.sink(e);
}

void Machine::setBucket(bool user, Instr::Op op) {
  if (user) {
    bucket_ = &pendingCost_;
    return;
  }
  if (booting_) {
    // first-boot bookkeeping is startup work, not failure recovery
    bucket_ = firstBoot_ ? &stats_.costTransition : &stats_.costReboot;
    return;
  }
  switch (op) {
    case Instr::Op::PreCommitScalar:
    case Instr::Op::PreCommitElem:
      bucket_ = &stats_.costTransition;
      break;
    default:
      bucket_ = &stats_.costLogging;
      break;
  }
}

void Machine::chargeCurrent(long units) {
  lastStepCost_ += units;
  *bucket_ += units;
}

void Machine::chargeOverhead(long units, std::uint8_t tag) {
  lastStepCost_ += units;
  if (booting_) {
    (firstBoot_ ? stats_.costTransition : stats_.costReboot) += units;
  } else if (tagIsLogging(tag)) {
    stats_.costLogging += units;
  } else {
    stats_.costTransition += units;
  }
}

void Machine::fail(const std::string& msg, int line) {
  outcome_ = Outcome::ProgramError;
  std::ostringstream os;
  os << msg;
  if (line > 0) os << " (line " << line << ")";
  error_ = os.str();
  stats_.costWasted += pendingCost_;
  stats_.wastedUserSteps += pendingUserSteps_;
  pendingCost_ = 0;
  pendingUserSteps_ = 0;
  pendingOutputs_.clear();
  pendingSamples_.clear();
}

void Machine::linearize() {
  std::vector<Word> snap(nv_.begin() + cp_.tsBase,
                         nv_.begin() + cp_.tsBase + cp_.tsWords);
  if (cp_.mode == Mode::Redo) {
    // overlay the still-uncommitted privatized values
    Word end = nv_[NV_END_INDEX];
    for (Word e = 0; e < end; ++e) {
      std::uint32_t base = cp_.commitListBase + static_cast<std::uint32_t>(e) * 3;
      Word dst = nv_[base];
      Word src = nv_[base + 1];
      if (dst >= cp_.tsBase && dst < static_cast<Word>(cp_.tsBase + cp_.tsWords))
        snap[static_cast<size_t>(dst - cp_.tsBase)] =
            nv_[static_cast<size_t>(src)];
    }
  }
  obs_.tsSnapshots.push_back(std::move(snap));
  for (Word w : pendingOutputs_) obs_.outputs.push_back(w);
  for (auto& s : pendingSamples_) obs_.samples.push_back(std::move(s));
  pendingOutputs_.clear();
  pendingSamples_.clear();
  stats_.costUseful += pendingCost_;
  stats_.userSteps += pendingUserSteps_;
  pendingCost_ = 0;
  pendingUserSteps_ = 0;
  stats_.transitions++;
  trace("linearize", -1, 0, 0);
}

void Machine::reboot() {
  if (done()) return;
  stats_.reboots++;
  lastFailed_ = AttemptSig{static_cast<int>(nv_[NV_CUR_TASK]), attemptSteps_,
                           attemptCost_};
  stats_.costWasted += pendingCost_;
  stats_.wastedUserSteps += pendingUserSteps_;
  pendingCost_ = 0;
  pendingUserSteps_ = 0;
  pendingOutputs_.clear();
  pendingSamples_.clear();
  std::fill(vol_.begin(), vol_.end(), 0);
  q_.clear();
  inInit_ = false;
  booting_ = true;
  bootCost_ = 0;
  attemptCost_ = 0;
  attemptSteps_ = 0;
  cont_ = Cont::BootVersion;
  trace("power_fail", -1, 0, 0);
}

void Machine::enqueueVersionBump(bool /*boot*/) {
  Word v = nv_[NV_CUR_VERSION];
  if (v >= kVersionMax) {
    // explicit zeroing of every bitmask word before wrapping to 1
    for (const auto& [base, len] : cp_.vbmRegions)
      for (std::uint32_t i = 0; i < len; ++i)
        q_.push_back(Micro{Micro::K::WriteWord, base + i, 0, 0, TagVbmClear});
    q_.push_back(Micro{Micro::K::WriteWord, NV_CUR_VERSION, 0, 1, TagVersion});
  } else {
    q_.push_back(
        Micro{Micro::K::WriteWord, NV_CUR_VERSION, 0, v + 1, TagVersion});
  }
}

void Machine::enqueueTransition(int targetTask) {
  auto w = [&](std::uint32_t dst, Word value, std::uint8_t tag) {
    q_.push_back(Micro{Micro::K::WriteWord, dst, 0, value, tag});
  };
  auto c = [&](std::uint32_t dst, std::uint32_t src, std::uint8_t tag) {
    q_.push_back(Micro{Micro::K::CopyWord, dst, src, 0, tag});
  };
  Word t = targetTask;
  switch (cp_.mode) {
    case Mode::Redo: {
      w(NV_TRANS_TARGET, t, TagSetTarget);
      w(NV_COMMIT_READY, 1, TagSetReady);
      Word end = nv_[NV_END_INDEX];
      for (Word e = 0; e < end; ++e) {
        std::uint32_t base =
            cp_.commitListBase + static_cast<std::uint32_t>(e) * 3;
        c(static_cast<std::uint32_t>(nv_[base]),
          static_cast<std::uint32_t>(nv_[base + 1]), TagCommitCopy);
      }
      w(NV_END_INDEX, 0, TagEndIdxReset);
      w(NV_CUR_TASK, t, TagCurTask);
      w(NV_COMMIT_READY, 0, TagClearReady);
      break;
    }
    case Mode::Undo:
      w(NV_TRANS_TARGET, t, TagSetTarget);
      w(NV_TASK_DONE, 1, TagSetDone);
      w(NV_NEED_ROLLBACK, 0, TagClearRb);
      w(NV_BACKUP_INDEX, 0, TagBkIdxReset);
      w(NV_CUR_TASK, t, TagCurTask);
      w(NV_TASK_DONE, 0, TagClearDone);
      break;
    case Mode::Ckpt: {
      std::uint32_t snap =
          cp_.snapshotBase[nv_[NV_CKPT_ACTIVE] ? 0 : 1];  // inactive buffer
      for (std::uint32_t i = 0; i < cp_.tsWords; ++i)
        c(snap + i, cp_.tsBase + i, TagSnapCopy);
      for (std::uint32_t i = 0; i < cp_.options.ckptSynthWords; ++i)
        c(snap + cp_.tsWords + i, cp_.synthBase + i, TagSnapCopy);
      w(snap + cp_.snapshotWords - 1, t, TagSnapCopy);
      w(NV_CKPT_ACTIVE, nv_[NV_CKPT_ACTIVE] ? 0 : 1, TagCkptFlip);
      w(NV_CUR_TASK, t, TagCurTask);
      break;
    }
    case Mode::None:
      w(NV_CUR_TASK, t, TagCurTask);
      break;
  }
  enqueueVersionBump(false);
  cont_ = Cont::BeginTask;
}

void Machine::dispatch() {
  auto w = [&](std::uint32_t dst, Word value, std::uint8_t tag) {
    q_.push_back(Micro{Micro::K::WriteWord, dst, 0, value, tag});
  };
  auto c = [&](std::uint32_t dst, std::uint32_t src, std::uint8_t tag) {
    q_.push_back(Micro{Micro::K::CopyWord, dst, src, 0, tag});
  };
  switch (cont_) {
    case Cont::BootVersion:
      trace("boot", -1, nv_[NV_CUR_VERSION], 0);
      enqueueVersionBump(true);
      cont_ = Cont::RunInit;
      break;
    case Cont::RunInit:
      if (cp_.initCode.empty()) {
        cont_ = Cont::Recover;
      } else {
        inInit_ = true;
        pc_ = 0;
        cont_ = Cont::Exec;
      }
      break;
    case Cont::Recover:
      switch (cp_.mode) {
        case Mode::Redo:
          if (nv_[NV_COMMIT_READY]) {
            Word end = nv_[NV_END_INDEX];
            for (Word e = 0; e < end; ++e) {
              std::uint32_t base =
                  cp_.commitListBase + static_cast<std::uint32_t>(e) * 3;
              c(static_cast<std::uint32_t>(nv_[base]),
                static_cast<std::uint32_t>(nv_[base + 1]), TagCommitCopy);
            }
            w(NV_END_INDEX, 0, TagEndIdxReset);
            w(NV_CUR_TASK, nv_[NV_TRANS_TARGET], TagCurTask);
            w(NV_COMMIT_READY, 0, TagClearReady);
            cont_ = Cont::BeginTask;
          } else {
            w(NV_END_INDEX, 0, TagEndIdxReset);
            cont_ = Cont::ResumeTask;
          }
          break;
        case Mode::Undo:
          if (nv_[NV_TASK_DONE]) {
            w(NV_NEED_ROLLBACK, 0, TagClearRb);
            w(NV_BACKUP_INDEX, 0, TagBkIdxReset);
            w(NV_CUR_TASK, nv_[NV_TRANS_TARGET], TagCurTask);
            w(NV_TASK_DONE, 0, TagClearDone);
            cont_ = Cont::BeginTask;
          } else if (nv_[NV_NEED_ROLLBACK]) {
            Word n = nv_[NV_BACKUP_INDEX];
            for (Word e = n - 1; e >= 0; --e) {
              std::uint32_t base =
                  cp_.backupListBase + static_cast<std::uint32_t>(e) * 2;
              w(static_cast<std::uint32_t>(nv_[base]), nv_[base + 1],
                TagRollbackWrite);
            }
            w(NV_NEED_ROLLBACK, 0, TagClearRb);
            w(NV_BACKUP_INDEX, 0, TagBkIdxReset);
            cont_ = Cont::ResumeTask;
          } else {
            w(NV_BACKUP_INDEX, 0, TagBkIdxReset);
            cont_ = Cont::ResumeTask;
          }
          break;
        case Mode::Ckpt:
          if (!firstBoot_) {
            std::uint32_t snap = cp_.snapshotBase[nv_[NV_CKPT_ACTIVE] ? 1 : 0];
            for (std::uint32_t i = 0; i < cp_.tsWords; ++i)
              c(cp_.tsBase + i, snap + i, TagRestoreCopy);
            for (std::uint32_t i = 0; i < cp_.options.ckptSynthWords; ++i)
              c(cp_.synthBase + i, snap + cp_.tsWords + i, TagRestoreCopy);
            w(NV_CUR_TASK, nv_[snap + cp_.snapshotWords - 1], TagRestoreTask);
          }
          cont_ = Cont::ResumeTask;
          break;
        case Mode::None:
          cont_ = Cont::ResumeTask;
          break;
      }
      break;
    case Cont::ResumeTask:
    case Cont::BeginTask: {
      if (booting_) {
        stats_.maxBootCost = std::max(stats_.maxBootCost, bootCost_);
        bootCost_ = 0;
        booting_ = false;
      }
      firstBoot_ = false;
      if (cont_ == Cont::BeginTask) {
        stats_.maxAttemptCost = std::max(stats_.maxAttemptCost, attemptCost_);
        attemptCost_ = 0;
        attemptSteps_ = 0;
      }
      int t = static_cast<int>(nv_[NV_CUR_TASK]);
      if (t == cp_.haltSentinel()) {
        outcome_ = Outcome::Halted;
        cont_ = Cont::Done;
        break;
      }
      std::fill(vol_.begin(), vol_.end(), 0);
      pc_ = 0;
      inInit_ = false;
      trace("task_start", -1, t, 0);
      cont_ = Cont::Exec;
      break;
    }
    case Cont::Exec:
    case Cont::Done:
      break;
  }
}

void Machine::execMicro(const Micro& m) {
  Word value = m.k == Micro::K::CopyWord ? nv_[m.src] : m.value;
  long units = cfg_.cost.nvAccess * (m.k == Micro::K::CopyWord ? 2 : 1);
  chargeOverhead(units, m.tag);
  Word old = nv_[m.dst];
  nv_[m.dst] = value;
  trace(tagKind(m.tag), m.dst, value, 0, old);
  switch (m.tag) {
    case TagCommitCopy: stats_.commitCopies++; break;
    case TagRollbackWrite: stats_.rollbackCopies++; break;
    case TagSnapCopy: stats_.ckptCopies++; break;
    case TagRestoreCopy:
    case TagRestoreTask: stats_.restoreCopies++; break;
    case TagPreCommitPublish:
      stats_.preCommitEntries++;
      stats_.maxCommitOccupancy =
          std::max(stats_.maxCommitOccupancy, static_cast<long>(nv_[NV_END_INDEX]));
      break;
    case TagBackupPublish:
      stats_.backupEntries++;
      stats_.maxBackupOccupancy = std::max(stats_.maxBackupOccupancy,
                                           static_cast<long>(nv_[NV_BACKUP_INDEX]));
      break;
    case TagVersion:
      std::fill(shadowVbm_.begin(), shadowVbm_.end(), 0);
      break;
    default: break;
  }
  bool isLin = m.tag == TagSetReady || m.tag == TagSetDone ||
               m.tag == TagCkptFlip ||
               (m.tag == TagCurTask && cp_.mode == Mode::None && !booting_);
  if (isLin) linearize();
}

long Machine::resolveIndex(const MemRef& r) {
  if (r.index < 0) return 0;
  Word idx = evalExpr(r.index);
  if (idx < 0 || idx >= static_cast<Word>(r.len))
    throw ProgErr{"array index out of bounds: " + std::to_string(idx) +
                      " (length " + std::to_string(r.len) + ")",
                  0};
  return static_cast<long>(idx);
}

Word Machine::loadRef(const MemRef& r) {
  long idx = resolveIndex(r);
  if (r.space == Space::Vol) {
    chargeCurrent(cfg_.cost.volAccess);
    return vol_[r.base + idx];
  }
  chargeCurrent(cfg_.cost.nvAccess);
  Word v = nv_[r.base + idx];
  trace("read", static_cast<long>(r.base) + idx, v, 0);
  return v;
}

void Machine::storeRef(const MemRef& r, Word v) {
  long idx = resolveIndex(r);
  if (r.space == Space::Vol) {
    chargeCurrent(cfg_.cost.volAccess);
    vol_[r.base + idx] = v;
    return;
  }
  chargeCurrent(cfg_.cost.nvAccess);
  Word old = nv_[r.base + idx];
  nv_[r.base + idx] = v;
  trace("write", static_cast<long>(r.base) + idx, v, 0, old);
}

Word Machine::evalExpr(std::int32_t id) {
  const RExpr& e = cp_.exprs[static_cast<size_t>(id)];
  switch (e.k) {
    case RExpr::K::Const:
      return e.cval;
    case RExpr::K::Load:
      return loadRef(e.ref);
    case RExpr::K::Un: {
      Word a = evalExpr(e.a);
      chargeCurrent(cfg_.cost.compute);
      switch (static_cast<UnOp>(e.op)) {
        case UnOp::Neg: return static_cast<Word>(-static_cast<std::uint64_t>(a));
        case UnOp::LogNot: return a == 0 ? 1 : 0;
        case UnOp::BitNot: return ~a;
      }
      return 0;
    }
    case RExpr::K::Bin: {
      Word a = evalExpr(e.a);
      Word b = evalExpr(e.b);
      chargeCurrent(cfg_.cost.compute);
      auto ua = static_cast<std::uint64_t>(a);
      auto ub = static_cast<std::uint64_t>(b);
      switch (static_cast<BinOp>(e.op)) {
        case BinOp::Add: return static_cast<Word>(ua + ub);
        case BinOp::Sub: return static_cast<Word>(ua - ub);
        case BinOp::Mul: return static_cast<Word>(ua * ub);
        case BinOp::Div:
          if (b == 0) throw ProgErr{"division by zero", 0};
          if (a == std::numeric_limits<Word>::min() && b == -1)
            return a;  // wraparound, not UB
          return a / b;
        case BinOp::Mod:
          if (b == 0) throw ProgErr{"division by zero", 0};
          if (a == std::numeric_limits<Word>::min() && b == -1) return 0;
          return a % b;
        case BinOp::Eq: return a == b;
        case BinOp::Ne: return a != b;
        case BinOp::Lt: return a < b;
        case BinOp::Le: return a <= b;
        case BinOp::Gt: return a > b;
        case BinOp::Ge: return a >= b;
        case BinOp::LogAnd: return (a != 0 && b != 0) ? 1 : 0;
        case BinOp::LogOr: return (a != 0 || b != 0) ? 1 : 0;
        case BinOp::BitAnd: return a & b;
        case BinOp::BitOr: return a | b;
        case BinOp::BitXor: return a ^ b;
        case BinOp::Shl: return static_cast<Word>(ua << (ub & 63));
        case BinOp::Shr: return a >> (ub & 63);
      }
      return 0;
    }
  }
  return 0;
}

Word Machine::drawSample(std::int32_t chan) {
  const std::string& name = cp_.channels[static_cast<size_t>(chan)];
  chargeCurrent(cfg_.cost.nvAccess);  // sensor access priced like NV
  Word v;
  if (cfg_.replay) {
    if (replayPos_ >= cfg_.replay->size())
      throw ProgErr{"sample replay exhausted on channel " + name, 0};
    const SampleRecord& rec = (*cfg_.replay)[replayPos_++];
    if (rec.channel != name)
      throw ProgErr{"sample replay channel mismatch: expected " + rec.channel +
                        ", sampled " + name,
                    0};
    v = rec.value;
  } else {
    auto it = cfg_.channels.streams.find(name);
    std::uint64_t pos = channelPos_[chan]++;
    if (it != cfg_.channels.streams.end() && !it->second.empty()) {
      v = it->second[pos % it->second.size()];
    } else {
      std::uint64_t h = 1469598103934665603ull;
      for (char ch : name) h = (h ^ static_cast<std::uint8_t>(ch)) * 1099511628211ull;
      v = static_cast<Word>(splitmix64(cfg_.channels.seed ^ h ^ pos) & 0xFFFF);
    }
  }
  pendingSamples_.push_back(SampleRecord{name, v});
  return v;
}

bool Machine::execInstr(const Instr& i) {
  bool user = !inInit_;
  // instrumentation instructions always charge overhead
  switch (i.op) {
    case Instr::Op::PrivScalar:
    case Instr::Op::BackupScalar:
    case Instr::Op::PreCommitScalar:
    case Instr::Op::VbmSkipIfSet:
    case Instr::Op::ArrInitCopy:
    case Instr::Op::VbmSet:
    case Instr::Op::PreCommitElem:
    case Instr::Op::BackupElem:
      user = false;
      break;
    default:
      break;
  }
  setBucket(user, i.op);

  switch (i.op) {
    case Instr::Op::Assign: {
      Word v = evalExpr(i.expr);
      chargeCurrent(cfg_.cost.compute);
      storeRef(i.dst, v);
      trace("assign", -1, v, i.line);
      pc_++;
      if (user) pendingUserSteps_++;
      return true;
    }
    case Instr::Op::BranchIfFalse: {
      Word v = evalExpr(i.expr);
      chargeCurrent(cfg_.cost.compute);
      trace("branch", -1, v, i.line);
      pc_ = v ? pc_ + 1 : i.target;
      if (user) pendingUserSteps_++;
      return true;
    }
    case Instr::Op::Jump:
      chargeCurrent(cfg_.cost.compute);
      trace("jump", -1, 0, i.line);
      pc_ = i.target;
      if (user) pendingUserSteps_++;
      return true;
    case Instr::Op::LoopGuard: {
      chargeCurrent(2 * cfg_.cost.volAccess);
      Word n = ++vol_[i.slot];
      trace("guard", -1, n, i.line);
      if (n > static_cast<Word>(i.bound))
        throw ProgErr{"while bound " + std::to_string(i.bound) + " exceeded",
                      i.line};
      pc_++;
      if (user) pendingUserSteps_++;
      return true;
    }
    case Instr::Op::Sample: {
      Word v = drawSample(i.chan);
      storeRef(i.dst, v);
      trace("sample", -1, v, i.line);
      pc_++;
      if (user) pendingUserSteps_++;
      return true;
    }
    case Instr::Op::Output: {
      Word v = evalExpr(i.expr);
      chargeCurrent(cfg_.cost.compute);
      pendingOutputs_.push_back(v);
      obs_.rawOutputs.push_back(v);
      trace("output", -1, v, i.line);
      pc_++;
      if (user) pendingUserSteps_++;
      return true;
    }
    case Instr::Op::Transition:
      pc_++;
      enqueueTransition(i.target < 0 ? cp_.haltSentinel() : i.target);
      return false;
    case Instr::Op::PrivScalar: {
      chargeCurrent(2 * cfg_.cost.nvAccess);
      nv_[i.bufBase] = nv_[i.origBase];
      stats_.privCopies++;
      trace("privatize", i.bufBase, nv_[i.bufBase], i.line);
      pc_++;
      return true;
    }
    case Instr::Op::BackupScalar: {
      pc_++;
      enqueueBackup(i.origBase, nv_[i.origBase], i.line);
      return false;
    }
    case Instr::Op::PreCommitScalar: {
      pc_++;
      enqueuePreCommit(i.origBase, i.bufBase, i.line);
      return false;
    }
    case Instr::Op::VbmSkipIfSet: {
      long idx = resolveIndex(MemRef{Space::Nv, i.vbmBase, i.len, i.index});
      chargeCurrent(cfg_.cost.nvAccess);
      bool set = nv_[i.vbmBase + idx] == nv_[NV_CUR_VERSION];
      stats_.vbmTests++;
      if (cfg_.shadowVbm && set != (shadowVbm_[i.vbmBase + idx] != 0))
        stats_.vbmMismatches++;
      trace("vbm_test", static_cast<long>(i.vbmBase) + idx, set ? 1 : 0,
            i.line);
      pc_ = set ? i.target : pc_ + 1;
      return true;
    }
    case Instr::Op::ArrInitCopy: {
      long idx = resolveIndex(MemRef{Space::Nv, i.origBase, i.len, i.index});
      chargeCurrent(2 * cfg_.cost.nvAccess);
      nv_[i.bufBase + idx] = nv_[i.origBase + idx];
      stats_.arrInitCopies++;
      trace("arr_init_copy", static_cast<long>(i.bufBase) + idx,
            nv_[i.bufBase + idx], i.line);
      pc_++;
      return true;
    }
    case Instr::Op::VbmSet: {
      long idx = resolveIndex(MemRef{Space::Nv, i.vbmBase, i.len, i.index});
      chargeCurrent(cfg_.cost.nvAccess);
      nv_[i.vbmBase + idx] = nv_[NV_CUR_VERSION];
      shadowVbm_[i.vbmBase + idx] = 1;
      stats_.vbmSets++;
      trace("vbm_set", static_cast<long>(i.vbmBase) + idx, nv_[NV_CUR_VERSION],
            i.line);
      pc_++;
      return true;
    }
    case Instr::Op::PreCommitElem: {
      long idx = resolveIndex(MemRef{Space::Nv, i.origBase, i.len, i.index});
      pc_++;
      enqueuePreCommit(i.origBase + static_cast<std::uint32_t>(idx),
                       i.bufBase + static_cast<std::uint32_t>(idx), i.line);
      return false;
    }
    case Instr::Op::BackupElem: {
      long idx = resolveIndex(MemRef{Space::Nv, i.origBase, i.len, i.index});
      pc_++;
      enqueueBackup(i.origBase + static_cast<std::uint32_t>(idx),
                    nv_[i.origBase + idx], i.line);
      return false;
    }
  }
  return true;
}

void Machine::enqueuePreCommit(std::uint32_t orig, std::uint32_t buf,
                               int line) {
  Word end = nv_[NV_END_INDEX];
  if (end >= cp_.commitCapacity)
    throw ProgErr{"internal: commit list overflow", line};
  std::uint32_t base = cp_.commitListBase + static_cast<std::uint32_t>(end) * 3;
  q_.push_back(Micro{Micro::K::WriteWord, base, 0, static_cast<Word>(orig),
                     TagPreCommitWord});
  q_.push_back(Micro{Micro::K::WriteWord, base + 1, 0, static_cast<Word>(buf),
                     TagPreCommitWord});
  q_.push_back(Micro{Micro::K::WriteWord, base + 2, 0, 1, TagPreCommitWord});
  q_.push_back(
      Micro{Micro::K::WriteWord, NV_END_INDEX, 0, end + 1, TagPreCommitPublish});
}

void Machine::enqueueBackup(std::uint32_t orig, Word value, int line) {
  Word idx = nv_[NV_BACKUP_INDEX];
  if (idx >= cp_.commitCapacity)
    throw ProgErr{"internal: backup list overflow", line};
  std::uint32_t base = cp_.backupListBase + static_cast<std::uint32_t>(idx) * 2;
  q_.push_back(Micro{Micro::K::WriteWord, base, 0, static_cast<Word>(orig),
                     TagBackupWord});
  q_.push_back(Micro{Micro::K::WriteWord, base + 1, 0, value, TagBackupWord});
  q_.push_back(Micro{Micro::K::WriteWord, NV_NEED_ROLLBACK, 0, 1, TagBackupFlag});
  q_.push_back(
      Micro{Micro::K::WriteWord, NV_BACKUP_INDEX, 0, idx + 1, TagBackupPublish});
}

void Machine::step() {
  if (done()) return;
  lastStepCost_ = 0;
  try {
    for (;;) {
      if (!q_.empty()) {
        Micro m = q_.front();
        q_.pop_front();
        execMicro(m);
        break;
      }
      if (cont_ == Cont::Exec) {
        const std::vector<Instr>& code =
            inInit_ ? cp_.initCode
                    : cp_.tasks[static_cast<size_t>(nv_[NV_CUR_TASK])].code;
        if (pc_ >= static_cast<int>(code.size())) {
          if (inInit_) {
            inInit_ = false;
            cont_ = Cont::Recover;
            continue;
          }
          throw ProgErr{"internal: task fell off the end", 0};
        }
        if (execInstr(code[static_cast<size_t>(pc_)])) break;
        continue;  // the instruction only queued micro-steps
      }
      dispatch();
      if (done()) break;
    }
  } catch (const ProgErr& e) {
    fail(e.msg, e.line);
  }
  stats_.steps++;
  attemptSteps_++;
  attemptCost_ += lastStepCost_;
  if (booting_) bootCost_ += lastStepCost_;
  if (stats_.steps > cfg_.maxSteps && outcome_ == Outcome::Running) {
    outcome_ = Outcome::StepLimit;
    error_ = "step limit exceeded";
  }
}

Observation Machine::takeObservation() {
  obs_.finalTs.clear();
  std::uint32_t addr = cp_.tsBase;
  for (const auto& d : cp_.program.tsDecls) {
    std::vector<Word> vals;
    for (long i = 0; i < d.wordCount(); ++i)
      vals.push_back(nv_[addr + static_cast<std::uint32_t>(i)]);
    addr += static_cast<std::uint32_t>(d.wordCount());
    obs_.finalTs[d.name] = std::move(vals);
  }
  return obs_;
}

}  // namespace itc
