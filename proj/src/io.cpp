#include "lrtraj/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lrtraj {

using ordered_json = nlohmann::ordered_json;

std::string formatDouble(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parseDouble(const std::string& tok, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::invalid_argument(where + ": bad number '" + tok + "'");
  return v;
}

int parseBinary(const std::string& tok, const std::string& where) {
  if (tok == "0") return 0;
  if (tok == "1") return 1;
  throw std::invalid_argument(where + ": expected 0 or 1, got '" + tok + "'");
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string cleanField(std::string s, const std::string& where) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  if (s.find_first_of(",\"\r\n") != std::string::npos)
    throw std::invalid_argument(where + ": field contains a delimiter");
  return s;
}

std::ofstream openOut(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot write '" + path + "'");
  return f;
}

std::ifstream openIn(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read '" + path + "'");
  return f;
}

std::string datasetHeader(int L) {
  std::string h = "cohort,participant,sex,age,race_black,edu_hs,edu_hsplus,birth_year";
  for (int l = 1; l <= L; ++l) h += ",rf_" + std::to_string(l);
  return h;
}

void checkKeys(const ordered_json& obj,
               const std::vector<std::string>& allowed,
               const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok)
      throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                  where);
  }
}

}  // namespace

double IngestReport::missingPercent(int cohort, int factor) const {
  const int n = recordCount[static_cast<size_t>(cohort)][static_cast<size_t>(factor)];
  if (n == 0) return 0.0;
  return 100.0 *
         static_cast<double>(
             missingCount[static_cast<size_t>(cohort)][static_cast<size_t>(factor)]) /
         static_cast<double>(n);
}

void emitDataset(const LongitudinalDataset& data, const std::string& path) {
  std::ofstream f = openOut(path);
  f << datasetHeader(data.L) << '\n';
  for (const Record& r : data.records) {
    const Participant& p = data.participants[static_cast<size_t>(r.participant)];
    f << data.cohorts[static_cast<size_t>(p.cohort)] << ',' << p.id << ','
      << p.sex << ',' << formatDouble(r.age) << ',' << p.raceBlack << ','
      << p.eduHs << ',' << p.eduHsPlus << ',' << p.birthYear;
    for (int l = 0; l < data.L; ++l) {
      f << ',';
      if (r.isObserved(l))
        f << formatDouble(r.y[l]);
      else
        f << "NA";
    }
    f << '\n';
  }
}

LongitudinalDataset ingestDataset(const std::string& path,
                                  const ModelSpec& spec,
                                  IngestReport* report) {
  std::ifstream f = openIn(path);
  const int L = spec.L();
  std::string line;
  if (!std::getline(f, line))
    throw std::invalid_argument(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != datasetHeader(L))
    throw std::invalid_argument(path + ": header does not match the expected schema '" +
                                datasetHeader(L) + "'");

  LongitudinalDataset data;
  data.L = L;
  std::map<std::string, int> cohortOf;
  std::map<std::string, int> participantOf;
  std::map<std::pair<int, double>, int> examLine;
  IngestReport rep;
  int lineNo = 1;
  while (std::getline(f, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineNo);
    std::vector<std::string> tok = splitCsv(line);
    if (static_cast<int>(tok.size()) != 8 + L)
      throw std::invalid_argument(where + ": expected " +
                                  std::to_string(8 + L) + " fields, got " +
                                  std::to_string(tok.size()));
    for (auto& t : tok) t = cleanField(std::move(t), where);

    const std::string& cohortName = tok[0];
    const std::string& pid = tok[1];
    if (cohortName.empty() || pid.empty())
      throw std::invalid_argument(where + ": empty cohort or participant");
    const double age = parseDouble(tok[3], where + " (age)");
    if (age < spec.ageMin || age > spec.ageMax)
      throw std::invalid_argument(
          where + ": age " + formatDouble(age) + " outside [" +
          formatDouble(spec.ageMin) + ", " + formatDouble(spec.ageMax) + "]");

    Eigen::VectorXd y(L);
    std::vector<std::uint8_t> observed(static_cast<size_t>(L), 0);
    int nObserved = 0;
    for (int l = 0; l < L; ++l) {
      const std::string& t = tok[static_cast<size_t>(8 + l)];
      if (t == "NA") {
        y[l] = std::numeric_limits<double>::quiet_NaN();
      } else {
        y[l] = parseDouble(t, where + " (rf_" + std::to_string(l + 1) + ")");
        observed[static_cast<size_t>(l)] = 1;
        ++nObserved;
      }
    }
    if (nObserved == 0) {
      ++rep.droppedFullyMissing;
      continue;
    }

    auto [ci, cinserted] = cohortOf.try_emplace(
        cohortName, static_cast<int>(data.cohorts.size()));
    if (cinserted) data.cohorts.push_back(cohortName);

    Participant cand;
    cand.id = pid;
    cand.cohort = ci->second;
    cand.sex = tok[2];
    cand.raceBlack = parseBinary(tok[4], where + " (race_black)");
    cand.eduHs = parseBinary(tok[5], where + " (edu_hs)");
    cand.eduHsPlus = parseBinary(tok[6], where + " (edu_hsplus)");
    const double by = parseDouble(tok[7], where + " (birth_year)");
    if (by != std::floor(by))
      throw std::invalid_argument(where + ": birth_year must be an integer");
    cand.birthYear = static_cast<int>(by);

    auto [pi, pinserted] = participantOf.try_emplace(
        pid, static_cast<int>(data.participants.size()));
    if (pinserted) {
      data.participants.push_back(cand);
    } else {
      const Participant& prev = data.participants[static_cast<size_t>(pi->second)];
      if (prev.cohort != cand.cohort || prev.sex != cand.sex ||
          prev.raceBlack != cand.raceBlack || prev.eduHs != cand.eduHs ||
          prev.eduHsPlus != cand.eduHsPlus ||
          prev.birthYear != cand.birthYear)
        throw std::invalid_argument(
            where + ": participant '" + pid +
            "' attributes differ from an earlier row");
    }
    auto [ei, einserted] =
        examLine.try_emplace({pi->second, age}, lineNo);
    if (!einserted)
      throw std::invalid_argument(
          where + ": duplicate exam for participant '" + pid + "' at age " +
          formatDouble(age) + " (first seen on line " +
          std::to_string(ei->second) + ")");

    Record r;
    r.participant = pi->second;
    r.age = age;
    r.y = std::move(y);
    r.observed = std::move(observed);
    data.records.push_back(std::move(r));
  }
  if (data.records.empty())
    throw std::invalid_argument(path + ": no data rows");
  data.sortRecords();
  data.validate(spec);

  rep.recordCount.assign(static_cast<size_t>(data.K()),
                         std::vector<int>(static_cast<size_t>(L), 0));
  rep.missingCount.assign(static_cast<size_t>(data.K()),
                          std::vector<int>(static_cast<size_t>(L), 0));
  for (const Record& r : data.records) {
    const int k = data.participants[static_cast<size_t>(r.participant)].cohort;
    for (int l = 0; l < L; ++l) {
      ++rep.recordCount[static_cast<size_t>(k)][static_cast<size_t>(l)];
      if (!r.isObserved(l))
        ++rep.missingCount[static_cast<size_t>(k)][static_cast<size_t>(l)];
    }
  }
  if (report != nullptr) *report = std::move(rep);
  return data;
}

void saveMissingnessReport(const IngestReport& report,
                           const LongitudinalDataset& data,
                           const ModelSpec& spec, const std::string& path) {
  std::ofstream f = openOut(path);
  f << "cohort,factor,records,missing,missing_percent\n";
  for (int k = 0; k < data.K(); ++k)
    for (int l = 0; l < spec.L(); ++l)
      f << data.cohorts[static_cast<size_t>(k)] << ','
        << spec.riskFactors[static_cast<size_t>(l)] << ','
        << report.recordCount[static_cast<size_t>(k)][static_cast<size_t>(l)]
        << ','
        << report.missingCount[static_cast<size_t>(k)][static_cast<size_t>(l)]
        << ',' << formatDouble(report.missingPercent(k, l)) << '\n';
}

std::string drawsMetaPath(const std::string& csvPath) {
  const std::string suffix = ".csv";
  if (csvPath.size() > suffix.size() &&
      csvPath.compare(csvPath.size() - suffix.size(), suffix.size(), suffix) ==
          0)
    return csvPath.substr(0, csvPath.size() - suffix.size()) + ".meta.json";
  return csvPath + ".meta.json";
}

void saveDraws(const PosteriorDraws& draws, const std::string& csvPath) {
  {
    std::ofstream f = openOut(csvPath);
    f << "superchain,subchain,iteration,warmup";
    for (const std::string& p : draws.layout.paths()) f << ',' << p;
    f << '\n';
    for (int k = 0; k < draws.superchains; ++k)
      for (int m = 0; m < draws.subchains; ++m)
        for (int n = 0; n < draws.iterations; ++n) {
          f << k << ',' << m << ',' << n << ','
            << (n < draws.warmup ? 1 : 0);
          const int r = draws.row(k, m, n);
          for (int c = 0; c < draws.layout.size(); ++c)
            f << ',' << formatDouble(draws.values(r, c));
          f << '\n';
        }
  }
  ordered_json meta;
  meta["seed"] = draws.seed;
  meta["variant"] = variantName(draws.layout.variant());
  meta["superchains"] = draws.superchains;
  meta["subchains"] = draws.subchains;
  meta["iterations"] = draws.iterations;
  meta["warmup"] = draws.warmup;
  std::ofstream f = openOut(drawsMetaPath(csvPath));
  f << meta.dump(2) << '\n';
}

PosteriorDraws loadDraws(const std::string& csvPath, const ModelSpec& spec,
                         const LongitudinalDataset& data) {
  ordered_json meta;
  {
    std::ifstream f = openIn(drawsMetaPath(csvPath));
    try {
      meta = ordered_json::parse(f);
    } catch (const std::exception& e) {
      throw std::invalid_argument(drawsMetaPath(csvPath) + ": " + e.what());
    }
  }
  checkKeys(meta, {"seed", "variant", "superchains", "subchains", "iterations",
                   "warmup"},
            "draws metadata");
  for (const char* key :
       {"seed", "variant", "superchains", "subchains", "iterations", "warmup"})
    if (!meta.contains(key))
      throw std::invalid_argument(drawsMetaPath(csvPath) +
                                  ": missing key '" + std::string(key) + "'");

  std::vector<std::string> ids;
  for (const Participant& p : data.participants) ids.push_back(p.id);
  PosteriorDraws draws;
  draws.layout = ParamLayout(spec, data.cohorts, ids,
                             variantFromName(meta["variant"]));
  draws.seed = meta["seed"].get<std::uint64_t>();
  draws.superchains = meta["superchains"].get<int>();
  draws.subchains = meta["subchains"].get<int>();
  draws.iterations = meta["iterations"].get<int>();
  draws.warmup = meta["warmup"].get<int>();
  if (draws.superchains < 1 || draws.subchains < 1 || draws.iterations < 1 ||
      draws.warmup < 0 || draws.warmup >= draws.iterations)
    throw std::invalid_argument(drawsMetaPath(csvPath) +
                                ": inconsistent chain dimensions");

  std::ifstream f = openIn(csvPath);
  std::string line;
  if (!std::getline(f, line))
    throw std::invalid_argument(csvPath + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::string expect = "superchain,subchain,iteration,warmup";
    for (const std::string& p : draws.layout.paths()) expect += ',' + p;
    if (line != expect)
      throw std::invalid_argument(
          csvPath + ": columns do not match this dataset and model");
  }
  const int D = draws.layout.size();
  draws.values.resize(draws.rowCount(), D);
  int lineNo = 1;
  for (int k = 0; k < draws.superchains; ++k)
    for (int m = 0; m < draws.subchains; ++m)
      for (int n = 0; n < draws.iterations; ++n) {
        if (!std::getline(f, line))
          throw std::invalid_argument(csvPath + ": truncated at line " +
                                      std::to_string(lineNo + 1));
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = csvPath + ":" + std::to_string(lineNo);
        std::vector<std::string> tok = splitCsv(line);
        if (static_cast<int>(tok.size()) != 4 + D)
          throw std::invalid_argument(where + ": wrong field count");
        if (parseDouble(tok[0], where) != k || parseDouble(tok[1], where) != m ||
            parseDouble(tok[2], where) != n)
          throw std::invalid_argument(where + ": rows out of order");
        const int r = draws.row(k, m, n);
        for (int c = 0; c < D; ++c)
          draws.values(r, c) =
              parseDouble(tok[static_cast<size_t>(4 + c)], where);
      }
  if (std::getline(f, line) && !line.empty())
    throw std::invalid_argument(csvPath + ": trailing rows");
  return draws;
}

void saveConvergence(const ConvergenceReport& report, const std::string& path) {
  std::ofstream f = openOut(path);
  f << "parameter,rhat\n";
  for (const ConvergenceEntry& e : report.entries)
    f << e.path << ',' << formatDouble(e.rhat) << '\n';
}

void saveGroundTruth(const GroundTruth& truth, const ParamLayout& layout,
                     const std::string& path) {
  const Eigen::VectorXd v = layout.flatten(truth.state);
  ordered_json j;
  j["seed"] = truth.seed;
  ordered_json values;
  const auto& paths = layout.paths();
  for (int i = 0; i < layout.size(); ++i)
    values[paths[static_cast<size_t>(i)]] = v[i];
  j["values"] = std::move(values);
  std::ofstream f = openOut(path);
  f << j.dump(2) << '\n';
}

GroundTruth loadGroundTruth(const std::string& path,
                            const ParamLayout& layout) {
  std::ifstream f = openIn(path);
  ordered_json j;
  try {
    j = ordered_json::parse(f);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  checkKeys(j, {"seed", "values"}, "ground truth");
  if (!j.contains("seed") || !j.contains("values"))
    throw std::invalid_argument(path + ": needs 'seed' and 'values'");
  const ordered_json& values = j["values"];
  if (static_cast<int>(values.size()) != layout.size())
    throw std::invalid_argument(
        path + ": value count does not match the model layout");
  Eigen::VectorXd v(layout.size());
  const auto& paths = layout.paths();
  for (int i = 0; i < layout.size(); ++i) {
    const std::string& p = paths[static_cast<size_t>(i)];
    if (!values.contains(p))
      throw std::invalid_argument(path + ": missing value for '" + p + "'");
    v[i] = values[p].get<double>();
  }
  GroundTruth truth;
  truth.seed = j["seed"].get<std::uint64_t>();
  truth.state = layout.unflatten(v);
  return truth;
}

void saveHeldOut(const std::vector<HeldOutCell>& cells,
                 const std::string& path) {
  std::ofstream f = openOut(path);
  f << "participant,age,factor,value\n";
  for (const HeldOutCell& c : cells)
    f << c.participant << ',' << formatDouble(c.age) << ',' << c.factor << ','
      << formatDouble(c.value) << '\n';
}

std::vector<HeldOutCell> loadHeldOut(const std::string& path) {
  std::ifstream f = openIn(path);
  std::string line;
  if (!std::getline(f, line))
    throw std::invalid_argument(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "participant,age,factor,value")
    throw std::invalid_argument(path + ": unexpected header");
  std::vector<HeldOutCell> cells;
  int lineNo = 1;
  while (std::getline(f, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineNo);
    std::vector<std::string> tok = splitCsv(line);
    if (tok.size() != 4)
      throw std::invalid_argument(where + ": expected 4 fields");
    HeldOutCell c;
    c.participant = tok[0];
    c.age = parseDouble(tok[1], where);
    c.factor = tok[2];
    c.value = parseDouble(tok[3], where);
    cells.push_back(std::move(c));
  }
  return cells;
}

void saveDiscrepancyReport(const DiscrepancyReport& report,
                           const std::string& path) {
  std::ofstream f = openOut(path);
  f << "check,group,draws,successes,ppp,mean_observed,mean_replicated\n";
  for (const DiscrepancyEntry& e : report.entries) {
    double mo = 0, mr = 0;
    for (double v : e.observed) mo += v;
    for (double v : e.replicated) mr += v;
    const double n = static_cast<double>(e.observed.size());
    f << report.check << ',' << e.key << ',' << e.observed.size() << ','
      << e.successes << ',' << formatDouble(e.ppp()) << ','
      << formatDouble(mo / n) << ',' << formatDouble(mr / n) << '\n';
  }
}

void saveVarianceRatios(const std::vector<VarianceRatioEntry>& entries,
                        const std::string& path) {
  std::ofstream f = openOut(path);
  f << "factor,window,cells,ratio\n";
  for (const VarianceRatioEntry& e : entries)
    f << e.factor << ',' << e.window + 1 << ',' << e.cellCount << ','
      << formatDouble(e.ratio) << '\n';
}

void saveQqTable(const QqTable& table, const std::string& path) {
  std::ofstream f = openOut(path);
  f << "factor,prob,observed,replicated\n";
  for (size_t l = 0; l < table.factors.size(); ++l)
    for (size_t i = 0; i < table.probs.size(); ++i)
      f << table.factors[l] << ',' << formatDouble(table.probs[i]) << ','
        << formatDouble(table.observed[l][i]) << ','
        << formatDouble(table.replicated[l][i]) << '\n';
}

void savePreservationTable(const std::vector<PreservationEntry>& table,
                           const std::string& path) {
  std::ofstream f = openOut(path);
  f << "covariate,coefficient,full_mean,probability\n";
  for (const PreservationEntry& e : table) {
    f << e.covariate << ',' << e.coefficient << ',';
    if (e.structurallyAbsent)
      f << "NA,NA\n";
    else
      f << formatDouble(e.fullMean) << ',' << formatDouble(e.probability)
        << '\n';
  }
}

std::vector<std::pair<double, double>> loadEstimates(const std::string& path) {
  std::ifstream f = openIn(path);
  std::string line;
  if (!std::getline(f, line))
    throw std::invalid_argument(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "estimate,variance")
    throw std::invalid_argument(path +
                                ": expected header 'estimate,variance'");
  std::vector<std::pair<double, double>> out;
  int lineNo = 1;
  while (std::getline(f, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineNo);
    std::vector<std::string> tok = splitCsv(line);
    if (tok.size() != 2)
      throw std::invalid_argument(where + ": expected 2 fields");
    out.emplace_back(parseDouble(tok[0], where), parseDouble(tok[1], where));
  }
  return out;
}

void saveEstimates(const std::vector<std::pair<double, double>>& estimates,
                   const std::string& path) {
  std::ofstream f = openOut(path);
  f << "estimate,variance\n";
  for (const auto& [e, v] : estimates)
    f << formatDouble(e) << ',' << formatDouble(v) << '\n';
}

void savePooled(const PooledEstimate& pooled, const std::string& path) {
  ordered_json j;
  j["count"] = pooled.count;
  j["point"] = pooled.point;
  j["within_variance"] = pooled.withinVariance;
  j["between_variance"] = pooled.betweenVariance;
  j["total_variance"] = pooled.totalVariance;
  j["sd"] = pooled.sd();
  std::ofstream f = openOut(path);
  f << j.dump(2) << '\n';
}

namespace {

CohortProfile parseProfile(const ordered_json& j, const ModelSpec& spec,
                           const std::string& where) {
  checkKeys(j,
            {"name", "sex", "enroll_age_lo", "enroll_age_hi",
             "follow_up_years", "exam_spacing_years", "participants",
             "p_black", "p_edu_hs", "p_edu_hs_plus", "birth_year_mix",
             "miss_rate", "block_rules"},
            where);
  if (!j.contains("name"))
    throw std::invalid_argument("config: profile in " + where +
                                " needs a name");
  CohortProfile p;
  p.name = j["name"].get<std::string>();
  p.missRate.assign(static_cast<size_t>(spec.L()), 0.0);
  if (j.contains("sex")) p.sex = j["sex"].get<std::string>();
  if (j.contains("enroll_age_lo")) p.enrollAgeLo = j["enroll_age_lo"].get<double>();
  if (j.contains("enroll_age_hi")) p.enrollAgeHi = j["enroll_age_hi"].get<double>();
  if (j.contains("follow_up_years"))
    p.followUpYears = j["follow_up_years"].get<double>();
  if (j.contains("exam_spacing_years"))
    p.examSpacingYears = j["exam_spacing_years"].get<double>();
  if (j.contains("participants"))
    p.participantCount = j["participants"].get<int>();
  if (j.contains("p_black")) p.pBlack = j["p_black"].get<double>();
  if (j.contains("p_edu_hs")) p.pEduHs = j["p_edu_hs"].get<double>();
  if (j.contains("p_edu_hs_plus"))
    p.pEduHsPlus = j["p_edu_hs_plus"].get<double>();
  if (j.contains("birth_year_mix")) {
    const auto& mix = j["birth_year_mix"];
    if (!mix.is_array() || mix.size() != 4)
      throw std::invalid_argument("config: birth_year_mix needs 4 entries");
    for (size_t i = 0; i < 4; ++i) p.birthYearMix[i] = mix[i].get<double>();
  }
  if (j.contains("miss_rate")) {
    const auto& mr = j["miss_rate"];
    if (!mr.is_array() || static_cast<int>(mr.size()) != spec.L())
      throw std::invalid_argument(
          "config: miss_rate needs one entry per risk factor");
    for (int l = 0; l < spec.L(); ++l)
      p.missRate[static_cast<size_t>(l)] = mr[static_cast<size_t>(l)].get<double>();
  }
  if (j.contains("block_rules")) {
    for (const auto& rj : j["block_rules"]) {
      checkKeys(rj, {"factor", "below_age", "entirely"},
                where + ".block_rules");
      if (!rj.contains("factor"))
        throw std::invalid_argument("config: block rule needs a factor");
      BlockMissingRule r;
      r.factor = spec.factorIndex(rj["factor"].get<std::string>());
      if (r.factor < 0)
        throw std::invalid_argument("config: unknown factor '" +
                                    rj["factor"].get<std::string>() +
                                    "' in a block rule");
      if (rj.contains("below_age")) r.belowAge = rj["below_age"].get<double>();
      if (rj.contains("entirely")) r.entirely = rj["entirely"].get<bool>();
      p.blockRules.push_back(r);
    }
  }
  return p;
}

}  // namespace

RunConfig loadConfig(const std::string& path) {
  std::ifstream f = openIn(path);
  ordered_json j;
  try {
    j = ordered_json::parse(f);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  checkKeys(j,
            {"seed", "data", "output_dir", "truth", "model", "sampler",
             "simulate", "experiment"},
            "the top level");
  if (!j.contains("seed"))
    throw std::invalid_argument("config: 'seed' is required");
  if (!j.contains("output_dir"))
    throw std::invalid_argument("config: 'output_dir' is required");
  if (!j.contains("model"))
    throw std::invalid_argument("config: 'model' is required");

  RunConfig cfg;
  cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.outputDir = j["output_dir"].get<std::string>();
  if (j.contains("data")) cfg.dataPath = j["data"].get<std::string>();
  if (j.contains("truth")) cfg.truthPath = j["truth"].get<std::string>();

  const ordered_json& mj = j["model"];
  checkKeys(mj,
            {"risk_factors", "age_min", "age_max", "breakpoints",
             "birth_year_cuts", "sex_stratum", "birth_year_age_interaction"},
            "'model'");
  if (!mj.contains("risk_factors"))
    throw std::invalid_argument("config: model.risk_factors is required");
  cfg.model.riskFactors.clear();
  for (const auto& rf : mj["risk_factors"])
    cfg.model.riskFactors.push_back(rf.get<std::string>());
  if (mj.contains("age_min")) cfg.model.ageMin = mj["age_min"].get<double>();
  if (mj.contains("age_max")) cfg.model.ageMax = mj["age_max"].get<double>();
  if (mj.contains("breakpoints")) {
    cfg.model.breakpoints.clear();
    for (const auto& b : mj["breakpoints"])
      cfg.model.breakpoints.push_back(b.get<double>());
  }
  if (mj.contains("birth_year_cuts")) {
    cfg.model.birthYearCuts.clear();
    for (const auto& b : mj["birth_year_cuts"])
      cfg.model.birthYearCuts.push_back(b.get<int>());
  }
  if (mj.contains("sex_stratum"))
    cfg.model.sexStratum = mj["sex_stratum"].get<std::string>();
  if (mj.contains("birth_year_age_interaction"))
    cfg.model.covariates.birthYearAgeInteraction =
        mj["birth_year_age_interaction"].get<bool>();
  cfg.model.validate();

  cfg.sampler.seed = cfg.seed;
  if (j.contains("sampler")) {
    const ordered_json& sj = j["sampler"];
    checkKeys(sj,
              {"superchains", "subchains", "iterations", "warmup", "init",
               "subsample_fraction", "initial_step"},
              "'sampler'");
    if (sj.contains("superchains"))
      cfg.sampler.superchains = sj["superchains"].get<int>();
    if (sj.contains("subchains"))
      cfg.sampler.subchains = sj["subchains"].get<int>();
    if (sj.contains("iterations"))
      cfg.sampler.iterations = sj["iterations"].get<int>();
    if (sj.contains("warmup")) cfg.sampler.warmup = sj["warmup"].get<int>();
    if (sj.contains("init"))
      cfg.sampler.init = initStrategyFromName(sj["init"].get<std::string>());
    if (sj.contains("subsample_fraction"))
      cfg.sampler.subsampleFraction = sj["subsample_fraction"].get<double>();
    if (sj.contains("initial_step"))
      cfg.sampler.initialStep = sj["initial_step"].get<double>();
  }
  cfg.sampler.validate();

  cfg.profiles = deskProfiles(cfg.model.L());
  if (j.contains("simulate")) {
    const ordered_json& sj = j["simulate"];
    checkKeys(sj, {"profiles"}, "'simulate'");
    if (sj.contains("profiles")) {
      cfg.profiles.clear();
      int idx = 0;
      for (const auto& pj : sj["profiles"])
        cfg.profiles.push_back(parseProfile(
            pj, cfg.model, "'simulate.profiles[" + std::to_string(idx++) + "]'"));
      if (cfg.profiles.empty())
        throw std::invalid_argument("config: simulate.profiles is empty");
    }
  }

  if (j.contains("experiment")) {
    const ordered_json& ej = j["experiment"];
    checkKeys(ej, {"deletions", "imputations", "qq_draws"}, "'experiment'");
    if (ej.contains("deletions")) {
      for (const auto& dj : ej["deletions"]) {
        checkKeys(dj, {"factor", "age_below", "cohort"},
                  "'experiment.deletions'");
        if (!dj.contains("factor"))
          throw std::invalid_argument("config: deletion rule needs a factor");
        DeletionRule r;
        r.factor = dj["factor"].get<std::string>();
        if (cfg.model.factorIndex(r.factor) < 0)
          throw std::invalid_argument("config: unknown factor '" + r.factor +
                                      "' in a deletion rule");
        if (dj.contains("age_below"))
          r.ageBelow = dj["age_below"].get<double>();
        if (dj.contains("cohort")) r.cohort = dj["cohort"].get<std::string>();
        cfg.deletions.push_back(std::move(r));
      }
    }
    if (ej.contains("imputations"))
      cfg.imputations = ej["imputations"].get<int>();
    if (ej.contains("qq_draws")) cfg.qqDraws = ej["qq_draws"].get<int>();
    if (cfg.imputations < 2)
      throw std::invalid_argument("config: imputations must be >= 2");
    if (cfg.qqDraws < 1)
      throw std::invalid_argument("config: qq_draws must be >= 1");
  }
  return cfg;
}

}  // namespace lrtraj
