// Command-line front end. All real work goes through the itcsim C API.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "itcsim.h"
#include "json.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitProgramError = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitUsage = 3;

constexpr const char* kCostTableEnv = "ITC_COST_TABLE";

struct StrFree {
  void operator()(char* s) const { itc_str_free(s); }
};
using CStr = std::unique_ptr<char, StrFree>;

struct ProgramFree {
  void operator()(itc_program* p) const { itc_program_free(p); }
};
struct CompiledFree {
  void operator()(itc_compiled* c) const { itc_compiled_free(c); }
};

int exitCodeFor(int rc) {
  switch (rc) {
    case ITC_OK: return kExitOk;
    case ITC_EVERIFY: return kExitDivergence;
    case ITC_EINVAL: return kExitUsage;
    default: return kExitProgramError;
  }
}

int failWith(int rc, const CStr& err) {
  std::cerr << "error: " << (err ? err.get() : "unknown failure") << "\n";
  return exitCodeFor(rc);
}

bool readFile(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream os;
  os << in.rdbuf();
  out = os.str();
  return true;
}

int writeOut(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return kExitOk;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return kExitUsage;
  }
  out << content;
  return kExitOk;
}

// Returns null on failure after printing the error; sets `code`.
std::unique_ptr<itc_program, ProgramFree> parseFile(const std::string& path,
                                                    int& code) {
  std::string src;
  if (!readFile(path, src)) {
    std::cerr << "error: cannot read " << path << "\n";
    code = kExitUsage;
    return nullptr;
  }
  itc_program* p = nullptr;
  char* err = nullptr;
  int rc = itc_parse(src.c_str(), &p, &err);
  CStr guard(err);
  if (rc != ITC_OK) {
    code = failWith(rc, guard);
    return nullptr;
  }
  return std::unique_ptr<itc_program, ProgramFree>(p);
}

std::unique_ptr<itc_compiled, CompiledFree> compileFile(const std::string& path,
                                                        const std::string& mode,
                                                        int& code) {
  auto p = parseFile(path, code);
  if (!p) return nullptr;
  itc_compiled* c = nullptr;
  char* err = nullptr;
  int rc = itc_compile(p.get(), mode.c_str(), &c, &err);
  CStr guard(err);
  if (rc != ITC_OK) {
    code = failWith(rc, guard);
    return nullptr;
  }
  return std::unique_ptr<itc_compiled, CompiledFree>(c);
}

// Shared run/verify/bench options gathered from flags.
struct CommonOpts {
  std::string power = "continuous";
  std::uint64_t seed = 1;
  std::vector<std::string> channelSpecs;  // name=v1,v2,...
  std::string costTablePath;
  long maxSteps = 0;
  long initialVersion = -1;
  int fpLimit = 3;
  int parallelism = 0;
};

void addCommonFlags(CLI::App* cmd, CommonOpts& o, bool withPower) {
  if (withPower)
    cmd->add_option("--power", o.power,
                    "continuous | budget=N | schedule=FILE | exhaustive");
  cmd->add_option("--seed", o.seed, "channel seed");
  cmd->add_option("--channel", o.channelSpecs,
                  "explicit input stream, name=v1,v2,... (repeatable)");
  cmd->add_option("--cost-table", o.costTablePath,
                  "cost table file (default: $ITC_COST_TABLE)");
  cmd->add_option("--max-steps", o.maxSteps, "step limit per run");
  cmd->add_option("--initial-version", o.initialVersion,
                  "pre-set cur_version in the fresh image");
  cmd->add_option("--fp-limit", o.fpLimit,
                  "identical failed attempts before a forward-progress verdict");
  cmd->add_option("--parallel", o.parallelism, "verification worker threads");
}

// Fills options JSON; returns false (after printing) on bad input.
bool buildOptionsJson(const CommonOpts& o, bool resolvePower, json& out,
                      int& code) {
  if (resolvePower) {
    if (o.power.rfind("schedule=", 0) == 0) {
      std::string path = o.power.substr(9);
      std::string text;
      if (!readFile(path, text)) {
        std::cerr << "error: cannot read schedule file " << path << "\n";
        code = kExitUsage;
        return false;
      }
      std::vector<long> steps;
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        long v;
        if (ls >> v) steps.push_back(v);
      }
      out["schedule"] = steps;
    } else {
      out["power"] = o.power;
    }
  }
  out["seed"] = o.seed;
  for (const auto& spec : o.channelSpecs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: bad --channel spec '" << spec
                << "' (want name=v1,v2,...)\n";
      code = kExitUsage;
      return false;
    }
    std::vector<long> vals;
    std::istringstream vs(spec.substr(eq + 1));
    std::string item;
    while (std::getline(vs, item, ',')) {
      try {
        vals.push_back(std::stol(item));
      } catch (...) {
        std::cerr << "error: bad value in --channel spec '" << spec << "'\n";
        code = kExitUsage;
        return false;
      }
    }
    out["channels"][spec.substr(0, eq)] = vals;
  }
  std::string costPath = o.costTablePath;
  if (costPath.empty()) {
    if (const char* env = std::getenv(kCostTableEnv)) costPath = env;
  }
  if (!costPath.empty()) {
    std::string text;
    if (!readFile(costPath, text)) {
      std::cerr << "error: cannot read cost table " << costPath << "\n";
      code = kExitUsage;
      return false;
    }
    out["costTable"] = text;
  }
  if (o.maxSteps > 0) out["maxSteps"] = o.maxSteps;
  if (o.initialVersion >= 0) out["initialVersion"] = o.initialVersion;
  out["fpLimit"] = o.fpLimit;
  if (o.parallelism > 0) out["parallelism"] = o.parallelism;
  return true;
}

// JSON-lines trace + top-level result to stdout or files.
int emitRunResult(const std::string& resultJson, const std::string& tracePath,
                  const std::string& nvPath, const std::string& outPath) {
  json r = json::parse(resultJson);
  if (!tracePath.empty()) {
    std::ofstream tf(tracePath, std::ios::binary);
    if (!tf) {
      std::cerr << "error: cannot write " << tracePath << "\n";
      return kExitUsage;
    }
    if (r.contains("trace"))
      for (const auto& e : r.at("trace")) tf << e.dump() << "\n";
    r.erase("trace");
  }
  if (!nvPath.empty()) {
    if (r.contains("nv")) {
      int rc = writeOut(nvPath, r.at("nv").dump(2) + "\n");
      if (rc != kExitOk) return rc;
    }
    r.erase("nv");
  }
  return writeOut(outPath, r.dump(2) + "\n");
}

std::string xmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string junitFromReport(const json& rep, const std::string& name) {
  struct Case {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Case> cases;
  auto addSection = [&](const char* key, const char* detailKey) {
    if (!rep.contains(key)) return;
    const json& s = rep.at(key);
    Case c;
    c.name = key;
    c.pass = s.value("pass", false);
    if (!c.pass) c.detail = s.value(detailKey, std::string("divergence"));
    cases.push_back(std::move(c));
  };
  addSection("exhaustive", "firstDivergence");
  addSection("fuzz", "firstFailure");
  addSection("single", "detail");
  int failures = 0;
  for (const auto& c : cases)
    if (!c.pass) ++failures;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<testsuite name=\"" << xmlEscape(name) << "\" tests=\"" << cases.size()
     << "\" failures=\"" << failures << "\">\n";
  for (const auto& c : cases) {
    os << "  <testcase name=\"" << xmlEscape(c.name) << "\"";
    if (c.pass) {
      os << "/>\n";
    } else {
      os << ">\n    <failure message=\"" << xmlEscape(c.detail)
         << "\"/>\n  </testcase>\n";
    }
  }
  os << "</testsuite>\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"task-based intermittent computing toolkit"};
  app.set_version_flag("--version", std::string(itc_version()));
  app.require_subcommand(0, 1);

  // analyze
  std::string anFile, anOut;
  bool anStrict = false;
  CLI::App* analyze = app.add_subcommand("analyze", "report W-A-R dependences");
  analyze->add_option("file", anFile, "task program")->required();
  analyze->add_flag("--strict-calls", anStrict,
                    "treat every call as touching the callee's whole TS set");
  analyze->add_option("--out", anOut, "output path (default stdout)");

  // transform
  std::string trFile, trMode = "redo", trOut, trManifest;
  CLI::App* transform =
      app.add_subcommand("transform", "emit instrumented source");
  transform->add_option("file", trFile, "task program")->required();
  transform->add_option("--mode", trMode, "redo | undo | ckpt | none");
  transform->add_option("--out", trOut, "instrumented source path");
  transform->add_option("--manifest", trManifest, "instrumentation manifest path");

  // run
  std::string runFile, runMode = "redo", runOut, runTrace, runNv;
  CommonOpts runOpts;
  CLI::App* run = app.add_subcommand("run", "simulate one execution");
  run->add_option("file", runFile, "task program")->required();
  run->add_option("--mode", runMode, "redo | undo | ckpt | none");
  addCommonFlags(run, runOpts, true);
  run->add_option("--out", runOut, "result JSON path (default stdout)");
  run->add_option("--trace", runTrace, "write a JSON-lines step trace here");
  run->add_option("--dump-nv", runNv, "write the final NV dump here");

  // verify
  std::string vFile, vMode = "redo", vJunit, vJson;
  bool vExhaustive = false, vStrict = false;
  long vFuzz = 0;
  CommonOpts vOpts;
  CLI::App* verify =
      app.add_subcommand("verify", "check equivalence against the oracle");
  verify->add_option("file", vFile, "task program")->required();
  verify->add_option("--mode", vMode, "redo | undo | ckpt");
  verify->add_flag("--exhaustive", vExhaustive,
                   "single failure after every step of the continuous run");
  verify->add_option("--fuzz", vFuzz, "randomized budget runs");
  verify->add_flag("--strict-outputs", vStrict, "compare raw outputs too");
  addCommonFlags(verify, vOpts, true);
  verify->add_option("--junit", vJunit, "write a JUnit XML report here");
  verify->add_option("--json", vJson, "write the JSON report here");

  // bench
  std::string bCorpus = "corpus", bSuite = "all", bSweep = "none";
  std::string bOut, bPlot;
  std::vector<std::string> bModes;
  bool bNoVerify = false;
  CommonOpts bOpts;
  CLI::App* bench = app.add_subcommand("bench", "run the benchmark suite");
  bench->add_option("--corpus", bCorpus, "corpus directory");
  bench->add_option("--suite", bSuite, "all | program stem");
  bench->add_option("--sweep", bSweep, "tasksize | capacity");
  bench->add_option("--mode", bModes, "modes to benchmark (repeatable)");
  bench->add_flag("--no-verify", bNoVerify, "skip the verification gate");
  addCommonFlags(bench, bOpts, false);
  bench->add_option("--out", bOut, "CSV path (default stdout)");
  bench->add_option("--plot", bPlot, "SVG path (tasksize sweep)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return kExitUsage;
  }

  int code = kExitOk;

  if (*analyze) {
    auto p = parseFile(anFile, code);
    if (!p) return code;
    char* out = nullptr;
    char* err = nullptr;
    int rc = itc_analyze_json(p.get(), anStrict ? 1 : 0, &out, &err);
    CStr outGuard(out), errGuard(err);
    if (rc != ITC_OK) return failWith(rc, errGuard);
    return writeOut(anOut, std::string(out) + "\n");
  }

  if (*transform) {
    auto c = compileFile(trFile, trMode, code);
    if (!c) return code;
    char* src = nullptr;
    char* err = nullptr;
    int rc = itc_instrumented_source(c.get(), &src, &err);
    CStr srcGuard(src), errGuard(err);
    if (rc != ITC_OK) return failWith(rc, errGuard);
    int w = writeOut(trOut, src);
    if (w != kExitOk) return w;
    if (!trManifest.empty()) {
      char* man = nullptr;
      char* merr = nullptr;
      rc = itc_manifest_json(c.get(), &man, &merr);
      CStr manGuard(man), merrGuard(merr);
      if (rc != ITC_OK) return failWith(rc, merrGuard);
      return writeOut(trManifest, std::string(man) + "\n");
    }
    return kExitOk;
  }

  if (*run) {
    auto c = compileFile(runFile, runMode, code);
    if (!c) return code;
    json opts;
    bool exhaustive = runOpts.power == "exhaustive";
    if (!buildOptionsJson(runOpts, !exhaustive, opts, code)) return code;
    if (exhaustive) {
      opts["exhaustive"] = true;
      char* rep = nullptr;
      char* err = nullptr;
      int rc = itc_verify_json(c.get(), opts.dump().c_str(), &rep, &err);
      CStr repGuard(rep), errGuard(err);
      if (!rep) return failWith(rc, errGuard);
      int w = writeOut(runOut, std::string(rep) + "\n");
      return w != kExitOk ? w : exitCodeFor(rc);
    }
    if (!runTrace.empty()) opts["trace"] = true;
    if (!runNv.empty()) opts["dumpNv"] = true;
    char* res = nullptr;
    char* err = nullptr;
    int rc = itc_run_json(c.get(), opts.dump().c_str(), &res, &err);
    CStr resGuard(res), errGuard(err);
    if (!res) return failWith(rc, errGuard);
    int w = emitRunResult(res, runTrace, runNv, runOut);
    return w != kExitOk ? w : exitCodeFor(rc);
  }

  if (*verify) {
    auto c = compileFile(vFile, vMode, code);
    if (!c) return code;
    json opts;
    bool exhaustive = vExhaustive || vOpts.power == "exhaustive";
    if (!buildOptionsJson(vOpts, !exhaustive, opts, code)) return code;
    if (exhaustive) opts["exhaustive"] = true;
    if (vFuzz > 0) opts["fuzzRuns"] = vFuzz;
    if (vStrict) opts["strictOutputs"] = true;
    char* rep = nullptr;
    char* err = nullptr;
    int rc = itc_verify_json(c.get(), opts.dump().c_str(), &rep, &err);
    CStr repGuard(rep), errGuard(err);
    if (!rep) return failWith(rc, errGuard);
    json repJson = json::parse(rep);
    if (!vJunit.empty()) {
      int w = writeOut(vJunit, junitFromReport(repJson, vFile));
      if (w != kExitOk) return w;
    }
    if (!vJson.empty()) {
      int w = writeOut(vJson, std::string(rep) + "\n");
      if (w != kExitOk) return w;
    }
    std::cout << (repJson.value("pass", false) ? "PASS" : "FAIL") << "\n";
    return exitCodeFor(rc);
  }

  if (*bench) {
    json opts;
    if (!buildOptionsJson(bOpts, false, opts, code)) return code;
    opts["corpusDir"] = bCorpus;
    opts["suite"] = bSuite;
    if (bSweep != "none") opts["sweep"] = bSweep;
    if (!bModes.empty()) opts["modes"] = bModes;
    if (bNoVerify) opts["verifyFirst"] = false;
    char* csv = nullptr;
    char* err = nullptr;
    int rc = itc_bench_csv(opts.dump().c_str(), &csv, &err);
    CStr csvGuard(csv), errGuard(err);
    if (rc != ITC_OK) return failWith(rc, errGuard);
    int w = writeOut(bOut, csv);
    if (w != kExitOk) return w;
    if (!bPlot.empty()) {
      if (bSweep != "tasksize") {
        std::cerr << "error: --plot requires --sweep tasksize\n";
        return kExitUsage;
      }
      char* svg = nullptr;
      char* serr = nullptr;
      rc = itc_bench_svg(opts.dump().c_str(), &svg, &serr);
      CStr svgGuard(svg), serrGuard(serr);
      if (rc != ITC_OK) return failWith(rc, serrGuard);
      return writeOut(bPlot, svg);
    }
    return kExitOk;
  }

  return kExitUsage;
}
