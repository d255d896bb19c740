#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itc/analysis.hpp"
#include "itc/ast.hpp"

namespace itc {

enum class Mode { Redo, Undo, Ckpt, None };

const char* modeName(Mode m);
Mode modeFromName(const std::string& name);  // throws Diag on unknown name

// Non-volatile control words, at fixed addresses in every image.
enum NvControl : uint32_t {
  NV_CUR_TASK = 0,
  NV_CUR_VERSION = 1,
  NV_COMMIT_READY = 2,
  NV_END_INDEX = 3,
  NV_NEED_ROLLBACK = 4,
  NV_BACKUP_INDEX = 5,
  NV_TASK_DONE = 6,
  NV_TRANS_TARGET = 7,
  NV_CKPT_ACTIVE = 8,
  NV_CONTROL_WORDS = 9,
};

constexpr Word kVersionMax = 0xFFFF;  // cur_version is kept 16-bit

enum class Space : std::uint8_t { Nv, Vol };

// Resolved storage reference. `index` is an expression id for array
// accesses, -1 for scalars.
struct MemRef {
  Space space = Space::Nv;
  std::uint32_t base = 0;
  std::uint32_t len = 1;
  std::int32_t index = -1;
};

// Arena expression node; children are arena indices.
struct RExpr {
  enum class K : std::uint8_t { Const, Load, Un, Bin };
  K k = K::Const;
  std::uint8_t op = 0;  // UnOp / BinOp
  std::int32_t a = -1, b = -1;
  Word cval = 0;
  MemRef ref{};
};

struct Instr {
  enum class Op : std::uint8_t {
    Assign,          // dst = expr
    BranchIfFalse,   // if !expr goto target
    Jump,            // goto target
    LoopGuard,       // ++vol[slot]; error if > bound
    Sample,          // dst = next value of channel `chan`
    Output,          // emit expr
    Transition,      // two-phase protocol; target task index, -1 = halt
    PrivScalar,      // redo: buf <- orig
    BackupScalar,    // undo: append (orig, value) to backup_list
    PreCommitScalar, // redo: append (orig, buf, 1) to commit_list
    VbmSkipIfSet,    // if vbm entry for [index] is set goto target
    ArrInitCopy,     // redo: priv[index] <- orig[index]
    VbmSet,          // vbm[index] <- cur_version
    PreCommitElem,   // redo: append (orig+i, priv+i, 1) to commit_list
    BackupElem,      // undo: append (orig+i, value) to backup_list
  };
  Op op{};
  std::int32_t expr = -1;   // rhs / condition / output value
  std::int32_t index = -1;  // subscript for array instrumentation
  MemRef dst{};             // Assign / Sample destination (post-redirect)
  std::int32_t target = -1; // branch/jump target or task index
  std::uint32_t origBase = 0;
  std::uint32_t bufBase = 0;
  std::uint32_t vbmBase = 0;
  std::uint32_t len = 1;    // array length for instrumentation bounds
  std::uint32_t slot = 0;   // LoopGuard counter slot
  long bound = 0;
  std::int32_t chan = -1;
  int line = 0;             // source line for runtime diagnostics
};

struct TaskCode {
  std::string name;
  std::vector<Instr> code;
};

struct NvSymbol {
  enum class Kind : std::uint8_t {
    Control, Ts, Buf, Vbm, CommitList, BackupList, Snapshot, Synth,
  };
  std::string name;
  std::uint32_t addr = 0;
  std::uint32_t len = 1;
  Kind kind = Kind::Ts;
};

struct CompileOptions {
  bool strictCalls = false;
  std::uint32_t ckptSynthWords = 64;  // synthetic register+stack block (ckpt)
};

struct CompiledProgram {
  Mode mode = Mode::None;
  Program program;  // validated clone of the source program
  WarReport war;
  CompileOptions options;

  std::vector<RExpr> exprs;
  std::vector<TaskCode> tasks;
  std::vector<Instr> initCode;
  int entryTask = 0;

  std::uint32_t nvWords = 0;
  std::uint32_t volWords = 0;  // frame size covering every task + init
  std::vector<NvSymbol> symbols;
  std::uint32_t tsBase = 0, tsWords = 0;

  long commitCapacity = 0;          // entries (also backup_list capacity)
  std::uint32_t commitListBase = 0; // 3 words per entry: orig, buf, size
  std::uint32_t backupListBase = 0; // 2 words per entry: orig, value
  std::vector<std::pair<std::uint32_t, std::uint32_t>> vbmRegions;
  std::uint32_t snapshotBase[2] = {0, 0};  // ckpt double buffer
  std::uint32_t snapshotWords = 0;         // tsWords + synth + 1 (task word)
  std::uint32_t synthBase = 0;

  std::vector<std::string> channels;

  // Fresh NV image: control words zeroed, TS initial values, ckpt snapshot 0
  // seeded with the initial state.
  std::vector<Word> initialNvImage() const;

  int haltSentinel() const { return static_cast<int>(tasks.size()); }
  const NvSymbol* findSymbol(const std::string& name) const;
};

Program cloneProgram(const Program& p);

// Applies the W-A-R analysis and the mode's instrumentation, then lowers
// every task to a flat instruction stream over a concrete NV/volatile layout.
CompiledProgram compile(const Program& p, Mode mode, CompileOptions options = {});

// Instrumented source for inspection: the original program with privatize /
// backup / pre-commit / bitmask-gate pseudo-calls and renamed accesses.
std::string instrumentedSource(const CompiledProgram& cp);

// JSON manifest: buffers, bitmasks, commit/backup list layout and injected
// call-site counts per task.
std::string manifestJson(const CompiledProgram& cp);

}  // namespace itc
