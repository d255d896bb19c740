#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "itc/oracle.hpp"
#include "itc/parser.hpp"

using namespace itc;

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Program corpus(const std::string& stem) {
  return parseProgram(readFile(std::string(CORPUS_DIR) + "/" + stem + ".at"));
}

RunResult cont(const CompiledProgram& cp, RunConfig cfg = {}) {
  return runProgram(cp, cfg, PowerModel::continuous());
}

// ---- independent reference computations ----

// Digit-wise multiplication in plain C++ for the multiplier fixture.
std::vector<Word> mulDigits(const std::vector<int>& a, int b) {
  std::vector<Word> out(a.size() + 1, 0);
  int carry = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    int d = a[i] * b + carry;
    out[i] = d % 10;
    carry = d / 10;
  }
  out[a.size()] = carry;
  return out;
}

// LZW decoder over the 4-symbol alphabet with a 32-entry dictionary, the
// inverse of the compressor fixture. Entry k >= 4 is (prefix[k], suffix[k]).
std::vector<int> lzwDecode(const std::vector<Word>& codes) {
  std::array<int, 32> prefix{}, suffix{};
  int dsize = 4;
  auto expand = [&](int code) {
    std::vector<int> syms;
    while (code >= 4) {
      syms.push_back(suffix[code]);
      code = prefix[code];
    }
    syms.push_back(code);
    std::reverse(syms.begin(), syms.end());
    return syms;
  };
  std::vector<int> out;
  REQUIRE(!codes.empty());
  int prev = static_cast<int>(codes[0]);
  auto first = expand(prev);
  out.insert(out.end(), first.begin(), first.end());
  for (size_t i = 1; i < codes.size(); ++i) {
    int c = static_cast<int>(codes[i]);
    std::vector<int> entry;
    if (c < dsize) {
      entry = expand(c);
    } else {
      entry = expand(prev);  // the KwKwK case
      entry.push_back(entry[0]);
    }
    out.insert(out.end(), entry.begin(), entry.end());
    if (dsize < 32) {
      prefix[dsize] = prev;
      suffix[dsize] = entry[0];
      dsize++;
    }
    prev = c;
  }
  return out;
}

// Cuckoo-style filter reference mirroring the fixture's hashing scheme.
void cuckooReference(int& inserted, int& found) {
  std::array<int, 64> table{};
  inserted = 0;
  found = 0;
  int key = 1;
  for (int i = 0; i < 16; ++i) {
    key = (key * 75 + 74) % 8191;
    int f = key % 255 + 1;
    int h = key % 64;
    int cur = f;
    bool done = false;
    for (int j = 0; j < 8 && !done; ++j) {
      if (table[h] == 0) {
        table[h] = cur;
        done = true;
      } else {
        std::swap(table[h], cur);
        h = h ^ ((cur * 7 + 3) % 64);
      }
    }
    if (done) inserted++;
  }
  key = 1;
  for (int i = 0; i < 16; ++i) {
    key = (key * 75 + 74) % 8191;
    int f = key % 255 + 1;
    int h1 = key % 64;
    int h2 = h1 ^ ((f * 7 + 3) % 64);
    if (table[h1] == f || table[h2] == f) found++;
  }
}

int popcount8(int w) {
  int c = 0;
  for (int k = 0; k < 8; ++k) c += (w >> k) & 1;
  return c;
}

}  // namespace

TEST_CASE("multiplier fixture matches digit-wise reference arithmetic") {
  std::vector<Word> digits = mulDigits({3, 1}, 11);  // 13 * 11
  REQUIRE(digits == std::vector<Word>{3, 4, 1});     // 143
  for (Mode mode : {Mode::None, Mode::Redo, Mode::Undo, Mode::Ckpt}) {
    CAPTURE(modeName(mode));
    CompiledProgram cp = compile(corpus("rsa"), mode);
    RunResult r = cont(cp);
    REQUIRE(r.verdict == RunVerdict::Halted);
    CHECK(r.obs.outputs == std::vector<Word>{143});
    CHECK(r.obs.finalTs.at("P") == digits);
    CHECK(r.obs.finalTs.at("carry") == std::vector<Word>{1});
  }
}

TEST_CASE("compressor output decodes back to its input") {
  const std::vector<int> input = {0, 1, 0, 1, 0, 1, 2, 2,
                                  2, 0, 1, 0, 1, 3, 3, 0};
  CompiledProgram cp = compile(corpus("cem"), Mode::Redo);
  RunResult r = cont(cp);
  REQUIRE(r.verdict == RunVerdict::Halted);
  CHECK(r.obs.outputs.size() < input.size());  // it actually compresses
  CHECK(lzwDecode(r.obs.outputs) == input);
  // the code log in TS memory mirrors the emitted stream
  Word outn = r.obs.finalTs.at("outn")[0];
  REQUIRE(outn == r.obs.outputs.size());
  const auto& logged = r.obs.finalTs.at("out");
  for (size_t i = 0; i < r.obs.outputs.size(); ++i)
    CHECK(logged[i] == r.obs.outputs[i]);
}

TEST_CASE("filter fixture matches the reference structure") {
  int inserted = 0, found = 0;
  cuckooReference(inserted, found);
  REQUIRE(inserted >= 1);
  REQUIRE(found >= 1);
  for (Mode mode : {Mode::Redo, Mode::Undo}) {
    CompiledProgram cp = compile(corpus("cf"), mode);
    RunResult r = cont(cp);
    REQUIRE(r.verdict == RunVerdict::Halted);
    CHECK(r.obs.outputs ==
          std::vector<Word>{static_cast<Word>(inserted),
                            static_cast<Word>(found)});
    CHECK(r.obs.finalTs.at("ops") == std::vector<Word>{32});
  }
}

TEST_CASE("bit counting over an explicit channel stream") {
  CompiledProgram cp = compile(corpus("bc"), Mode::Undo);
  RunConfig cfg;
  cfg.channels.streams["in"] = {11, 1};
  RunResult r = runProgram(cp, cfg, PowerModel::continuous());
  REQUIRE(r.verdict == RunVerdict::Halted);
  CHECK(r.obs.outputs ==
        std::vector<Word>{static_cast<Word>(popcount8(11)),
                          static_cast<Word>(popcount8(1))});
  CHECK(r.obs.finalTs.at("total")[0] == popcount8(11) + popcount8(1));
  REQUIRE(r.obs.samples.size() == 2);
  CHECK(r.obs.samples[0] == SampleRecord{"in", 11});
  CHECK(r.obs.samples[1] == SampleRecord{"in", 1});
}

TEST_CASE("equivalence checking names the first mismatch") {
  Observation a, b;
  a.finalTs["x"] = {1};
  b.finalTs["x"] = {1};
  CHECK(checkEquivalence(a, b).ok);

  b.finalTs["x"] = {2};
  EquivalenceResult r = checkEquivalence(a, b);
  CHECK(!r.ok);
  CHECK(r.detail.find("x") != std::string::npos);

  b.finalTs["x"] = {1};
  a.outputs = {7};
  r = checkEquivalence(a, b);
  CHECK(!r.ok);
  CHECK(r.detail.find("output") != std::string::npos);

  b.outputs = {7};
  a.tsSnapshots = {{1}};
  b.tsSnapshots = {{2}};
  CHECK(!checkEquivalence(a, b).ok);

  // raw outputs only matter in strict mode
  b.tsSnapshots = {{1}};
  a.rawOutputs = {7, 7};
  b.rawOutputs = {7};
  CHECK(checkEquivalence(a, b).ok);
  CHECK(!checkEquivalence(a, b, true).ok);
}

TEST_CASE("exhaustive single-failure sweeps are clean for protected modes") {
  for (const char* stem : {"fig6", "rsa", "bc"}) {
    Program p = corpus(stem);
    CompiledProgram oracle = compile(p, Mode::None);
    for (Mode mode : {Mode::Redo, Mode::Undo, Mode::Ckpt}) {
      CAPTURE(stem);
      CAPTURE(modeName(mode));
      CompiledProgram cp = compile(p, mode);
      VerifyOptions opt;
      ExhaustiveReport rep = runExhaustive(cp, oracle, opt);
      CHECK(rep.ok());
      CHECK(rep.injections == rep.continuousSteps);
      // perK carries the failure-free baseline at k = 0 plus one entry per
      // injection point
      REQUIRE(rep.perK.size() == static_cast<size_t>(rep.injections) + 1);
      CHECK(rep.perK.front().k == 0);
      CHECK(rep.vbmMismatches == 0);
      if (mode == Mode::Redo) CHECK(rep.recoveryFreeOfRestores);
      if (mode == Mode::Undo) CHECK(rep.rollbackExact);
    }
  }
}

TEST_CASE("an unprotected hazard is caught by the sweep") {
  CompiledProgram cp = compile(corpus("rsa_unprotected"), Mode::None);
  VerifyOptions opt;
  ExhaustiveReport rep = runExhaustive(cp, cp, opt);
  CHECK(rep.divergences >= 1);
  CHECK(!rep.divergentSteps.empty());
  CHECK(!rep.firstDetail.empty());
}

TEST_CASE("failed attempts re-sample: the replayed log still matches") {
  // no explicit stream, so every retry draws fresh pseudorandom values; the
  // oracle must consume the committed log, not re-draw
  Program p = corpus("bc");
  CompiledProgram cp = compile(p, Mode::Redo);
  CompiledProgram oracle = compile(p, Mode::None);
  VerifyOptions opt;
  opt.cfg.channels.seed = 1234;
  ExhaustiveReport rep = runExhaustive(cp, oracle, opt);
  CHECK(rep.ok());
}

TEST_CASE("fuzz campaigns pass at safe capacities and fail below them") {
  Program p = corpus("rsa");
  CompiledProgram cp = compile(p, Mode::Undo);
  CompiledProgram oracle = compile(p, Mode::None);
  RunResult c = cont(cp);
  long floor = safeCapacity(cp, c.stats, RunConfig{}.cost);
  VerifyOptions opt;
  FuzzReport good = runFuzz(cp, oracle, opt, 300, 99, floor, floor * 4);
  CHECK(good.runs == 300);
  CHECK(good.ok());

  FuzzReport bad = runFuzz(cp, oracle, opt, 50, 99, 5, 5);
  CHECK(bad.failures > 0);
  CHECK(!bad.failingSeeds.empty());
  CHECK(!bad.firstDetail.empty());
}

TEST_CASE("single verified runs under budget and schedule models") {
  Program p = corpus("cf");
  CompiledProgram cp = compile(p, Mode::Redo);
  CompiledProgram oracle = compile(p, Mode::None);
  RunResult c = cont(cp);
  long cap = safeCapacity(cp, c.stats, RunConfig{}.cost);
  VerifyRun vb = verifyOne(cp, oracle, RunConfig{}, PowerModel::budget(cap));
  CHECK(vb.run.verdict == RunVerdict::Halted);
  CHECK(vb.run.stats.reboots > 0);
  CHECK(vb.eq.ok);

  VerifyRun vs = verifyOne(cp, oracle, RunConfig{},
                           PowerModel::scheduleAt({10, 25, 90, 200}));
  CHECK(vs.run.stats.reboots == 4);
  CHECK(vs.eq.ok);
}

TEST_CASE("adversarial streams expose the naive controller") {
  Program p = corpus("heater_naive");
  CompiledProgram cp = compile(p, Mode::Redo);
  CompiledProgram oracle = compile(p, Mode::None);
  VerifyOptions opt;
  opt.cfg.channels.streams["temp"] = {5, 35};
  ExhaustiveReport rep = runExhaustive(cp, oracle, opt);
  CHECK(rep.divergences >= 1);

  for (const char* stem : {"heater_safe_balanced", "heater_safe_task"}) {
    CAPTURE(stem);
    Program q = corpus(stem);
    CompiledProgram cps = compile(q, Mode::Redo);
    CompiledProgram oracles = compile(q, Mode::None);
    ExhaustiveReport ok = runExhaustive(cps, oracles, opt);
    CHECK(ok.ok());
  }
}

TEST_CASE("report serialization is parseable and complete") {
  Program p = corpus("fig6");
  CompiledProgram cp = compile(p, Mode::Undo);
  CompiledProgram oracle = compile(p, Mode::None);
  ExhaustiveReport rep = runExhaustive(cp, oracle, VerifyOptions{});
  std::string j = exhaustiveReportJson(rep);
  CHECK(j.find("\"divergences\"") != std::string::npos);
  CHECK(j.find("\"injections\"") != std::string::npos);
  FuzzReport f = runFuzz(cp, oracle, VerifyOptions{}, 10, 7, 100, 200);
  std::string jf = fuzzReportJson(f);
  CHECK(jf.find("\"runs\"") != std::string::npos);
}
