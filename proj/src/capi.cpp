#include "itcsim.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "itc/bench.hpp"
#include "itc/oracle.hpp"
#include "itc/parser.hpp"
#include "itc/printer.hpp"
#include "json.hpp"

#define ITC_TOOLKIT_VERSION "1.0.0"
#define ITC_FORMAT_VERSION "1"

using nlohmann::json;

struct itc_program {
  itc::Program p;
};

struct itc_compiled {
  itc::CompiledProgram cp;
};

namespace {

char* dupStr(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void setErr(char** err, const std::string& msg) {
  if (err) *err = dupStr(msg);
}

// Shared options decoding for run/verify. Throws itc::Diag on bad input.
struct RunOptions {
  itc::RunConfig cfg;
  itc::PowerModel model = itc::PowerModel::continuous();
  int fpLimit = 3;
  bool trace = false;
  bool dumpNv = false;
};

RunOptions decodeRunOptions(const json& j) {
  RunOptions o;
  if (j.contains("power"))
    o.model = itc::PowerModel::parse(j.at("power").get<std::string>());
  if (j.contains("schedule")) {
    auto steps = j.at("schedule").get<std::vector<long>>();
    for (size_t i = 0; i < steps.size(); ++i) {
      if (steps[i] < 0) throw itc::Diag("schedule: negative step index");
      if (i > 0 && steps[i] <= steps[i - 1])
        throw itc::Diag("schedule: step indices must be strictly increasing");
    }
    o.model = itc::PowerModel::scheduleAt(std::move(steps));
  }
  if (j.contains("seed")) o.cfg.channels.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("channels"))
    for (const auto& [name, vals] : j.at("channels").items())
      o.cfg.channels.streams[name] = vals.get<std::vector<itc::Word>>();
  if (j.contains("costTable"))
    o.cfg.cost = itc::parseCostTable(j.at("costTable").get<std::string>());
  if (j.contains("maxSteps")) o.cfg.maxSteps = j.at("maxSteps").get<long>();
  if (j.contains("initialVersion"))
    o.cfg.initialVersion = j.at("initialVersion").get<itc::Word>();
  if (j.contains("fpLimit")) o.fpLimit = j.at("fpLimit").get<int>();
  if (j.contains("trace")) o.trace = j.at("trace").get<bool>();
  if (j.contains("dumpNv")) o.dumpNv = j.at("dumpNv").get<bool>();
  return o;
}

json parseOptionsJson(const char* options_json) {
  if (!options_json || !*options_json) return json::object();
  json j = json::parse(options_json);
  if (!j.is_object()) throw itc::Diag("options must be a JSON object");
  return j;
}

int internalError(char** err, const std::exception& e) {
  setErr(err, std::string("internal error: ") + e.what());
  return ITC_EINTERNAL;
}

}  // namespace

extern "C" {

const char* itc_version(void) {
  return "itc " ITC_TOOLKIT_VERSION " (format " ITC_FORMAT_VERSION ")";
}

int itc_parse(const char* source, itc_program** out, char** err) {
  if (!source || !out) {
    setErr(err, "itc_parse: null argument");
    return ITC_EINVAL;
  }
  *out = nullptr;
  try {
    auto* handle = new itc_program{itc::parseProgram(source)};
    *out = handle;
    return ITC_OK;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EPARSE;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

void itc_program_free(itc_program* p) { delete p; }

int itc_print_source(const itc_program* p, char** out, char** err) {
  if (!p || !out) {
    setErr(err, "itc_print_source: null argument");
    return ITC_EINVAL;
  }
  try {
    *out = dupStr(itc::printProgram(p->p));
    return ITC_OK;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

int itc_analyze_json(const itc_program* p, int strict_calls, char** json_out,
                     char** err) {
  if (!p || !json_out) {
    setErr(err, "itc_analyze_json: null argument");
    return ITC_EINVAL;
  }
  try {
    itc::WarReport rep = itc::analyzeProgram(p->p, strict_calls != 0);
    *json_out = dupStr(itc::warReportJson(rep));
    return ITC_OK;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EPARSE;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

int itc_compile(const itc_program* p, const char* mode, itc_compiled** out,
                char** err) {
  if (!p || !mode || !out) {
    setErr(err, "itc_compile: null argument");
    return ITC_EINVAL;
  }
  *out = nullptr;
  try {
    itc::Mode m = itc::modeFromName(mode);
    auto* handle = new itc_compiled{itc::compile(p->p, m)};
    *out = handle;
    return ITC_OK;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EINVAL;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

void itc_compiled_free(itc_compiled* c) { delete c; }

int itc_instrumented_source(const itc_compiled* c, char** out, char** err) {
  if (!c || !out) {
    setErr(err, "itc_instrumented_source: null argument");
    return ITC_EINVAL;
  }
  try {
    *out = dupStr(itc::instrumentedSource(c->cp));
    return ITC_OK;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

int itc_manifest_json(const itc_compiled* c, char** out, char** err) {
  if (!c || !out) {
    setErr(err, "itc_manifest_json: null argument");
    return ITC_EINVAL;
  }
  try {
    *out = dupStr(itc::manifestJson(c->cp));
    return ITC_OK;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

int itc_run_json(const itc_compiled* c, const char* options_json,
                 char** result_json, char** err) {
  if (!c || !result_json) {
    setErr(err, "itc_run_json: null argument");
    return ITC_EINVAL;
  }
  try {
    RunOptions o = decodeRunOptions(parseOptionsJson(options_json));
    std::vector<std::string> traceLines;
    if (o.trace)
      o.cfg.sink = [&traceLines](const itc::TraceEvent& e) {
        traceLines.push_back(itc::traceEventJson(e));
      };
    itc::RunResult r = itc::runProgram(c->cp, o.cfg, o.model, o.fpLimit);
    json out = json::parse(itc::runResultJson(r, c->cp));
    if (o.trace) {
      json arr = json::array();
      for (auto& line : traceLines) arr.push_back(json::parse(line));
      out["trace"] = std::move(arr);
    }
    if (o.dumpNv) out["nv"] = json::parse(itc::nvDumpJson(c->cp, r.nvImage));
    *result_json = dupStr(out.dump(2));
    return r.verdict == itc::RunVerdict::Halted ? ITC_OK : ITC_EPROGRAM;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EINVAL;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

int itc_verify_json(const itc_compiled* c, const char* options_json,
                    char** report_json, char** err) {
  if (!c || !report_json) {
    setErr(err, "itc_verify_json: null argument");
    return ITC_EINVAL;
  }
  try {
    json j = parseOptionsJson(options_json);
    RunOptions o = decodeRunOptions(j);
    bool exhaustive = j.value("exhaustive", false);
    long fuzzRuns = j.value("fuzzRuns", 0L);
    itc::VerifyOptions vopt;
    vopt.cfg = o.cfg;
    vopt.strictOutputs = j.value("strictOutputs", false);
    vopt.parallelism = j.value("parallelism", 0);

    itc::CompiledProgram oracleCp = itc::compile(c->cp.program, itc::Mode::None);
    json out;
    out["mode"] = itc::modeName(c->cp.mode);
    bool pass = true;
    if (exhaustive) {
      itc::ExhaustiveReport rep = itc::runExhaustive(c->cp, oracleCp, vopt);
      out["exhaustive"] = json::parse(itc::exhaustiveReportJson(rep));
      pass = pass && rep.ok();
    }
    if (fuzzRuns > 0) {
      itc::RunResult cont =
          itc::runProgram(c->cp, vopt.cfg, itc::PowerModel::continuous());
      long floor = itc::safeCapacity(c->cp, cont.stats, vopt.cfg.cost);
      long ceil = j.value("capacityCeil", floor * 4);
      if (ceil < floor) ceil = floor;
      itc::FuzzReport rep = itc::runFuzz(c->cp, oracleCp, vopt, fuzzRuns,
                                         vopt.cfg.channels.seed, floor, ceil);
      out["fuzz"] = json::parse(itc::fuzzReportJson(rep));
      out["capacityFloor"] = floor;
      out["capacityCeil"] = ceil;
      pass = pass && rep.ok();
    }
    if (!exhaustive && fuzzRuns == 0) {
      itc::VerifyRun v = itc::verifyOne(c->cp, oracleCp, vopt.cfg, o.model,
                                        vopt.strictOutputs);
      json single;
      single["pass"] = v.eq.ok;
      if (!v.eq.ok) single["detail"] = v.eq.detail;
      single["run"] = json::parse(itc::runResultJson(v.run, c->cp));
      out["single"] = std::move(single);
      pass = pass && v.eq.ok;
    }
    out["pass"] = pass;
    *report_json = dupStr(out.dump(2));
    return pass ? ITC_OK : ITC_EVERIFY;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EINVAL;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

}  // extern "C"

namespace {

struct BenchRequest {
  std::string corpusDir;
  std::string suite = "all";
  std::string sweep = "none";
  itc::BenchOptions opt;
  std::uint64_t seed = 1;
};

BenchRequest decodeBenchRequest(const json& j) {
  BenchRequest r;
  r.corpusDir = j.value("corpusDir", "");
  r.suite = j.value("suite", "all");
  r.sweep = j.value("sweep", "none");
  if (r.sweep != "none" && r.sweep != "tasksize" && r.sweep != "capacity")
    throw itc::Diag("bench: unknown sweep '" + r.sweep + "'");
  if (r.sweep != "tasksize" && r.corpusDir.empty())
    throw itc::Diag("bench: corpusDir is required");
  if (j.contains("modes")) {
    r.opt.modes.clear();
    for (const auto& m : j.at("modes"))
      r.opt.modes.push_back(itc::modeFromName(m.get<std::string>()));
  }
  if (j.contains("costTable"))
    r.opt.cfg.cost = itc::parseCostTable(j.at("costTable").get<std::string>());
  r.opt.verifyFirst = j.value("verifyFirst", true);
  r.opt.parallelism = j.value("parallelism", 0);
  r.seed = j.value("seed", std::uint64_t{1});
  r.opt.cfg.channels.seed = r.seed;
  return r;
}

std::vector<std::string> selectStems(const BenchRequest& r) {
  std::vector<std::string> stems = itc::corpusPrograms(r.corpusDir);
  std::vector<std::string> keep;
  for (const auto& s : stems) {
    if (r.suite != "all" && s != r.suite) continue;
    if (r.suite == "all" && !itc::isBenchmarkProgram(s)) continue;
    keep.push_back(s);
  }
  if (keep.empty())
    throw itc::Diag("bench: no corpus programs match suite '" + r.suite + "'");
  return keep;
}

const std::vector<long> kRmwSizes = {1, 2, 5, 10, 50, 100, 200};
constexpr long kRmwTotalOps = 1000;

std::vector<itc::RmwPoint> rmwPointsFor(const BenchRequest& r) {
  itc::Mode mode = r.opt.modes.empty() ? itc::Mode::Redo : r.opt.modes.front();
  return itc::rmwTrend(mode, kRmwSizes, kRmwTotalOps, r.opt.cfg);
}

}  // namespace

extern "C" {

int itc_bench_csv(const char* options_json, char** csv_out, char** err) {
  if (!csv_out) {
    setErr(err, "itc_bench_csv: null argument");
    return ITC_EINVAL;
  }
  try {
    BenchRequest r = decodeBenchRequest(parseOptionsJson(options_json));
    std::string csv;
    if (r.sweep == "tasksize") {
      csv = itc::rmwCsv(rmwPointsFor(r));
    } else if (r.sweep == "capacity") {
      csv = itc::benchCsv(itc::runCapacitySweep(r.corpusDir, selectStems(r), r.opt));
    } else {
      csv = itc::benchCsv(itc::runBench(r.corpusDir, selectStems(r), r.opt));
    }
    *csv_out = dupStr(csv);
    return ITC_OK;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EINVAL;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

int itc_bench_svg(const char* options_json, char** svg_out, char** err) {
  if (!svg_out) {
    setErr(err, "itc_bench_svg: null argument");
    return ITC_EINVAL;
  }
  try {
    BenchRequest r = decodeBenchRequest(parseOptionsJson(options_json));
    *svg_out = dupStr(itc::rmwSvg(rmwPointsFor(r)));
    return ITC_OK;
  } catch (const itc::Diag& d) {
    setErr(err, d.what());
    return ITC_EINVAL;
  } catch (const std::exception& e) {
    return internalError(err, e);
  }
}

void itc_str_free(char* s) { std::free(s); }

}  // extern "C"
