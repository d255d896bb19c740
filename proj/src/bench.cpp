#include "itc/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "itc/parser.hpp"

namespace itc {

std::string readFileText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Diag("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Program loadProgramFile(const std::string& path) {
  return parseProgram(readFileText(path));
}

std::vector<std::string> corpusPrograms(const std::string& dir) {
  std::vector<std::string> stems;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".at") continue;
    stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

ChannelConfig defaultChannels(const std::string& stem) {
  ChannelConfig c;
  if (stem == "bc") {
    c.streams["in"] = {11, 1};  // 0b1011 then 0b0001
  } else if (stem.rfind("heater", 0) == 0) {
    // alternating cold/hot readings, adversarial across re-attempts
    c.streams["temp"] = {5, 35};
  }
  return c;
}

bool isBenchmarkProgram(const std::string& stem) {
  return stem != "heater_naive" && stem != "rsa_unprotected";
}

std::string benchCsv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "program,mode,power,verdict,note,totalCost,costLogging,costTransition,"
        "costReboot,costUseful,costWasted,steps,transitions,reboots,"
        "privCopies,commitCopies,backupEntries,rollbackCopies,ckptCopies,"
        "restoreCopies,maxCommitOccupancy,nvWords\n";
  for (const auto& r : rows) {
    const RunStats& s = r.stats;
    os << r.program << ',' << r.mode << ',' << r.power << ','
       << verdictName(r.verdict) << ',' << r.note << ',' << s.totalCost() << ','
       << s.costLogging << ',' << s.costTransition << ',' << s.costReboot
       << ',' << s.costUseful << ',' << s.costWasted << ',' << s.steps << ','
       << s.transitions << ',' << s.reboots << ',' << s.privCopies << ','
       << s.commitCopies << ',' << s.backupEntries << ',' << s.rollbackCopies
       << ',' << s.ckptCopies << ',' << s.restoreCopies << ','
       << s.maxCommitOccupancy << ',' << r.nvWords << '\n';
  }
  return os.str();
}

namespace {

std::string powerName(const PowerModel& m) {
  switch (m.kind) {
    case PowerModel::Kind::Continuous: return "continuous";
    case PowerModel::Kind::Budget:
      return "budget=" + std::to_string(m.capacity);
    case PowerModel::Kind::Schedule: return "schedule";
    case PowerModel::Kind::SingleFailure:
      return "fail@" + std::to_string(m.failAfterStep);
  }
  return "?";
}

// exhaustive redo+undo gate; empty string on pass
std::string verifyGate(const Program& p, const RunConfig& cfg,
                       int parallelism) {
  CompiledProgram oracleCp = compile(p, Mode::None);
  for (Mode mode : {Mode::Redo, Mode::Undo}) {
    CompiledProgram cp = compile(p, mode);
    VerifyOptions vopt;
    vopt.cfg = cfg;
    vopt.parallelism = parallelism;
    ExhaustiveReport rep = runExhaustive(cp, oracleCp, vopt);
    if (!rep.ok())
      return std::string(modeName(mode)) + " verification failed: " +
             rep.firstDetail;
  }
  return "";
}

}  // namespace

std::vector<BenchRow> runBench(const std::string& corpusDir,
                               const std::vector<std::string>& stems,
                               const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  for (const auto& stem : stems) {
    Program p = loadProgramFile(corpusDir + "/" + stem + ".at");
    RunConfig cfg = opt.cfg;
    cfg.channels = defaultChannels(stem);
    std::string gate;
    if (opt.verifyFirst) gate = verifyGate(p, cfg, opt.parallelism);
    for (Mode mode : opt.modes) {
      BenchRow row;
      row.program = stem;
      row.mode = modeName(mode);
      row.power = powerName(opt.model);
      if (!gate.empty()) {
        row.note = gate;
        row.verdict = RunVerdict::ProgramError;
        rows.push_back(std::move(row));
        continue;
      }
      CompiledProgram cp = compile(p, mode);
      RunResult r = runProgram(cp, cfg, opt.model);
      row.verdict = r.verdict;
      row.note = r.error;
      row.stats = r.stats;
      row.nvWords = static_cast<long>(cp.nvWords);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<BenchRow> runCapacitySweep(const std::string& corpusDir,
                                       const std::vector<std::string>& stems,
                                       const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  static const double kFactors[] = {1.0, 1.5, 2.0, 4.0};
  for (const auto& stem : stems) {
    Program p = loadProgramFile(corpusDir + "/" + stem + ".at");
    RunConfig cfg = opt.cfg;
    cfg.channels = defaultChannels(stem);
    for (Mode mode : opt.modes) {
      CompiledProgram cp = compile(p, mode);
      RunResult cont = runProgram(cp, cfg, PowerModel::continuous());
      long floor = safeCapacity(cp, cont.stats, cfg.cost);
      for (double f : kFactors) {
        PowerModel model = PowerModel::budget(
            std::max<long>(1, static_cast<long>(f * static_cast<double>(floor))));
        BenchRow row;
        row.program = stem;
        row.mode = modeName(mode);
        row.power = powerName(model);
        RunResult r = runProgram(cp, cfg, model);
        row.verdict = r.verdict;
        row.note = r.error;
        row.stats = r.stats;
        row.nvWords = static_cast<long>(cp.nvWords);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string rmwSource(long taskSize, long totalOps) {
  long nTasks = totalOps / taskSize;
  std::ostringstream os;
  os << "TS int x = 0;\n\n";
  for (long t = 0; t < nTasks; ++t) {
    os << (t == 0 ? "entry " : "") << "task t" << t << " {\n";
    os << "  int i;\n  i = 0;\n";
    os << "  while (i < " << taskSize << ") bound " << taskSize << " {\n";
    os << "    x = x + 1;\n    i = i + 1;\n  }\n";
    if (t + 1 < nTasks)
      os << "  transition_to t" << (t + 1) << ";\n";
    else
      os << "  halt;\n";
    os << "}\n\n";
  }
  return os.str();
}

std::vector<RmwPoint> rmwTrend(Mode mode, const std::vector<long>& sizes,
                               long totalOps, const RunConfig& cfg) {
  std::vector<RmwPoint> points;
  for (long size : sizes) {
    Program p = parseProgram(rmwSource(size, totalOps));
    CompiledProgram instrumented = compile(p, mode);
    CompiledProgram plain = compile(p, Mode::None);
    RunResult ri = runProgram(instrumented, cfg, PowerModel::continuous());
    RunResult rp = runProgram(plain, cfg, PowerModel::continuous());
    RmwPoint pt;
    pt.size = size;
    pt.totalCost = ri.stats.totalCost();
    pt.baselineCost = rp.stats.totalCost();
    pt.perOpOverhead = static_cast<double>(pt.totalCost - pt.baselineCost) /
                       static_cast<double>(totalOps);
    points.push_back(pt);
  }
  return points;
}

std::string rmwCsv(const std::vector<RmwPoint>& points) {
  std::ostringstream os;
  os << "taskSize,totalCost,baselineCost,perOpOverhead\n";
  for (const auto& p : points)
    os << p.size << ',' << p.totalCost << ',' << p.baselineCost << ','
       << p.perOpOverhead << '\n';
  return os.str();
}

std::string rmwSvg(const std::vector<RmwPoint>& points) {
  const int w = 640, h = 400, margin = 50;
  double maxY = 1.0, maxX = 1.0;
  for (const auto& p : points) {
    maxY = std::max(maxY, p.perOpOverhead);
    maxX = std::max(maxX, static_cast<double>(p.size));
  }
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='"
     << h << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<line x1='" << margin << "' y1='" << h - margin << "' x2='"
     << w - margin << "' y2='" << h - margin << "' stroke='black'/>\n";
  os << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin
     << "' y2='" << h - margin << "' stroke='black'/>\n";
  os << "<text x='" << w / 2 << "' y='" << h - 10
     << "' text-anchor='middle' font-size='12'>task size (ops)</text>\n";
  os << "<text x='15' y='" << h / 2
     << "' font-size='12' transform='rotate(-90 15 " << h / 2
     << ")' text-anchor='middle'>per-op overhead (cost units)</text>\n";
  std::ostringstream poly;
  for (const auto& p : points) {
    double x = margin + (static_cast<double>(p.size) / maxX) * (w - 2 * margin);
    double y = h - margin - (p.perOpOverhead / maxY) * (h - 2 * margin);
    poly << x << ',' << y << ' ';
    os << "<circle cx='" << x << "' cy='" << y << "' r='3' fill='steelblue'/>\n";
    os << "<text x='" << x << "' y='" << h - margin + 15
       << "' text-anchor='middle' font-size='10'>" << p.size << "</text>\n";
  }
  os << "<polyline points='" << poly.str()
     << "' fill='none' stroke='steelblue' stroke-width='1.5'/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace itc
