#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "itcsim.h"
#include "json.hpp"

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string corpusSrc(const std::string& stem) {
  return readFile(std::string(CORPUS_DIR) + "/" + stem + ".at");
}

struct Str {
  char* p = nullptr;
  ~Str() { itc_str_free(p); }
  std::string get() const { return p ? p : ""; }
};

struct Prog {
  itc_program* p = nullptr;
  ~Prog() { itc_program_free(p); }
};

struct Comp {
  itc_compiled* c = nullptr;
  ~Comp() { itc_compiled_free(c); }
};

}  // namespace

TEST_CASE("version string is present") {
  REQUIRE(itc_version() != nullptr);
  CHECK(std::string(itc_version()).find('.') != std::string::npos);
}

TEST_CASE("parse failures produce a diagnostic and no handle") {
  itc_program* p = reinterpret_cast<itc_program*>(1);
  Str err;
  CHECK(itc_parse("task t {", &p, &err.p) == ITC_EPARSE);
  CHECK(p == nullptr);
  CHECK(!err.get().empty());
}

TEST_CASE("null arguments are rejected") {
  CHECK(itc_parse(nullptr, nullptr, nullptr) == ITC_EINVAL);
  Str out;
  CHECK(itc_print_source(nullptr, &out.p, nullptr) == ITC_EINVAL);
  CHECK(itc_run_json(nullptr, "{}", &out.p, nullptr) == ITC_EINVAL);
  CHECK(itc_bench_csv(nullptr, &out.p, nullptr) == ITC_EINVAL);
}

TEST_CASE("parse, print, analyze round trip") {
  Prog prog;
  Str err;
  REQUIRE(itc_parse(corpusSrc("fig4").c_str(), &prog.p, &err.p) == ITC_OK);
  Str printed;
  REQUIRE(itc_print_source(prog.p, &printed.p, &err.p) == ITC_OK);
  Prog again;
  CHECK(itc_parse(printed.p, &again.p, &err.p) == ITC_OK);

  Str report;
  REQUIRE(itc_analyze_json(prog.p, 0, &report.p, &err.p) == ITC_OK);
  auto j = nlohmann::json::parse(report.get());
  CHECK(j["tasks"]["main"]["warSet"] == nlohmann::json::array({"c"}));
  CHECK(j["maxCommitListSize"] == 1);
  CHECK(j["strictCalls"] == false);
}

TEST_CASE("compile and run a corpus program") {
  Prog prog;
  Str err;
  REQUIRE(itc_parse(corpusSrc("rsa").c_str(), &prog.p, &err.p) == ITC_OK);

  Comp bad;
  CHECK(itc_compile(prog.p, "sideways", &bad.c, &err.p) == ITC_EINVAL);

  Comp comp;
  REQUIRE(itc_compile(prog.p, "redo", &comp.c, &err.p) == ITC_OK);

  Str man;
  REQUIRE(itc_manifest_json(comp.c, &man.p, &err.p) == ITC_OK);
  auto m = nlohmann::json::parse(man.get());
  CHECK(m["mode"] == "redo");
  CHECK(m["nvWords"].get<long>() > 0);

  Str src;
  REQUIRE(itc_instrumented_source(comp.c, &src.p, &err.p) == ITC_OK);
  CHECK(src.get().find("__pre_commit") != std::string::npos);

  Str res;
  REQUIRE(itc_run_json(comp.c, "{\"trace\": true, \"dumpNv\": true}", &res.p,
                       &err.p) == ITC_OK);
  auto r = nlohmann::json::parse(res.get());
  CHECK(r["verdict"] == "halted");
  CHECK(r["outputs"] == nlohmann::json::array({143}));
  CHECK(r["stats"]["reboots"] == 0);
  CHECK(!r["trace"].empty());
  CHECK(r["nv"].contains("carry"));
}

TEST_CASE("run options drive the power model") {
  Prog prog;
  Str err;
  REQUIRE(itc_parse(corpusSrc("fig6").c_str(), &prog.p, &err.p) == ITC_OK);
  Comp comp;
  REQUIRE(itc_compile(prog.p, "undo", &comp.c, &err.p) == ITC_OK);

  Str res;
  REQUIRE(itc_run_json(comp.c, "{\"schedule\": [4, 9]}", &res.p, &err.p) ==
          ITC_OK);
  auto r = nlohmann::json::parse(res.get());
  CHECK(r["stats"]["reboots"] == 2);
  CHECK(r["finalTs"]["a"] == 2);

  Str bad;
  CHECK(itc_run_json(comp.c, "{\"schedule\": [9, 4]}", &bad.p, &err.p) ==
        ITC_EINVAL);
  Str bad2;
  CHECK(itc_run_json(comp.c, "{\"power\": \"nuclear\"}", &bad2.p, &err.p) ==
        ITC_EINVAL);
}

TEST_CASE("program errors surface as ITC_EPROGRAM with a result") {
  Prog prog;
  Str err;
  REQUIRE(itc_parse(
              "TS int x = 0;\nentry task t { x = 1 / x; halt; }",
              &prog.p, &err.p) == ITC_OK);
  Comp comp;
  REQUIRE(itc_compile(prog.p, "redo", &comp.c, &err.p) == ITC_OK);
  Str res;
  CHECK(itc_run_json(comp.c, "{}", &res.p, &err.p) == ITC_EPROGRAM);
  auto r = nlohmann::json::parse(res.get());
  CHECK(r["verdict"] == "program_error");
  CHECK(!r["error"].get<std::string>().empty());
}

TEST_CASE("verification passes protected programs and flags hazards") {
  Str err;
  {
    Prog prog;
    REQUIRE(itc_parse(corpusSrc("fig6").c_str(), &prog.p, &err.p) == ITC_OK);
    Comp comp;
    REQUIRE(itc_compile(prog.p, "redo", &comp.c, &err.p) == ITC_OK);
    Str rep;
    REQUIRE(itc_verify_json(comp.c, "{\"exhaustive\": true}", &rep.p,
                            &err.p) == ITC_OK);
    auto j = nlohmann::json::parse(rep.get());
    CHECK(j["exhaustive"]["divergences"] == 0);
  }
  {
    Prog prog;
    REQUIRE(itc_parse(corpusSrc("rsa_unprotected").c_str(), &prog.p, &err.p) ==
            ITC_OK);
    Comp comp;
    REQUIRE(itc_compile(prog.p, "none", &comp.c, &err.p) == ITC_OK);
    Str rep;
    CHECK(itc_verify_json(comp.c, "{\"exhaustive\": true}", &rep.p, &err.p) ==
          ITC_EVERIFY);
    auto j = nlohmann::json::parse(rep.get());
    CHECK(j["exhaustive"]["divergences"].get<long>() >= 1);
  }
}

TEST_CASE("fuzz verification through the C surface") {
  Prog prog;
  Str err;
  REQUIRE(itc_parse(corpusSrc("bc").c_str(), &prog.p, &err.p) == ITC_OK);
  Comp comp;
  REQUIRE(itc_compile(prog.p, "undo", &comp.c, &err.p) == ITC_OK);
  Str rep;
  REQUIRE(itc_verify_json(comp.c, "{\"fuzzRuns\": 100, \"seed\": 5}", &rep.p,
                          &err.p) == ITC_OK);
  auto j = nlohmann::json::parse(rep.get());
  CHECK(j["fuzz"]["runs"] == 100);
  CHECK(j["fuzz"]["failures"] == 0);
}

TEST_CASE("bench table and chart generation") {
  std::string opts = std::string("{\"corpusDir\": \"") + CORPUS_DIR +
                     "\", \"suite\": \"fig6\", \"verifyFirst\": false}";
  Str csv, err;
  REQUIRE(itc_bench_csv(opts.c_str(), &csv.p, &err.p) == ITC_OK);
  CHECK(csv.get().find("fig6") != std::string::npos);
  CHECK(csv.get().find("redo") != std::string::npos);

  Str svg;
  std::string sopts = "{\"sweep\": \"tasksize\", \"modes\": [\"redo\"]}";
  REQUIRE(itc_bench_svg(sopts.c_str(), &svg.p, &err.p) == ITC_OK);
  CHECK(svg.get().find("<svg") != std::string::npos);

  Str none;
  CHECK(itc_bench_csv("{\"sweep\": \"capacity\"}", &none.p, &err.p) ==
        ITC_EINVAL);  // corpusDir required here
}
