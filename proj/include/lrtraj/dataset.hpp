#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lrtraj {

struct ModelSpec;

struct Participant {
  std::string id;
  int cohort = 0;  // index into cohorts
  std::string sex;
  int raceBlack = 0;
  int eduHs = 0;
  int eduHsPlus = 0;
  int birthYear = 0;
};

/* One exam. Unobserved factor values carry NaN in y and a zero mask bit;
 * computation always consults the mask, never NaN arithmetic. */
struct Record {
  int participant = 0;  // index into participants
  double age = 0.0;
  Eigen::VectorXd y;            // length L
  std::vector<std::uint8_t> observed;  // length L

  bool isObserved(int l) const { return observed[static_cast<size_t>(l)] != 0; }
};

class LongitudinalDataset {
 public:
  std::vector<std::string> cohorts;
  std::vector<Participant> participants;
  std::vector<Record> records;  // sorted by (cohort, participant id, age)
  int L = 0;

  int K() const { return static_cast<int>(cohorts.size()); }
  std::size_t participantCount() const { return participants.size(); }
  std::size_t recordCount() const { return records.size(); }
  std::size_t observedCount() const;

  int cohortIndex(const std::string& name) const;    // -1 if unknown
  int participantIndex(const std::string& id) const; // -1 if unknown

  /* canonical order: records sorted by (cohort, participant id, age) */
  void sortRecords();

  /* Checks: every record has >= 1 observed factor, ages within the spec
   * range, per-participant ages strictly increasing (no duplicate exam age),
   * mask/value consistency. Throws std::invalid_argument. */
  void validate(const ModelSpec& spec) const;

  /* Subset containing only the given sex stratum (participants without
   * records are dropped, indices remapped). */
  LongitudinalDataset filterSex(const std::string& sex) const;
};

}  // namespace lrtraj
