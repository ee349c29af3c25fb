#include "lrtraj/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "lrtraj/model.hpp"

namespace lrtraj {

std::size_t LongitudinalDataset::observedCount() const {
  std::size_t n = 0;
  for (const Record& r : records)
    for (std::uint8_t o : r.observed) n += o != 0;
  return n;
}

int LongitudinalDataset::cohortIndex(const std::string& name) const {
  for (int k = 0; k < K(); ++k)
    if (cohorts[static_cast<size_t>(k)] == name) return k;
  return -1;
}

int LongitudinalDataset::participantIndex(const std::string& id) const {
  for (size_t i = 0; i < participants.size(); ++i)
    if (participants[i].id == id) return static_cast<int>(i);
  return -1;
}

void LongitudinalDataset::sortRecords() {
  std::stable_sort(records.begin(), records.end(),
                   [this](const Record& a, const Record& b) {
                     const Participant& pa = participants[static_cast<size_t>(a.participant)];
                     const Participant& pb = participants[static_cast<size_t>(b.participant)];
                     if (pa.cohort != pb.cohort) return pa.cohort < pb.cohort;
                     if (pa.id != pb.id) return pa.id < pb.id;
                     return a.age < b.age;
                   });
}

void LongitudinalDataset::validate(const ModelSpec& spec) const {
  if (L != spec.L())
    throw std::invalid_argument("dataset factor count != model factor count");
  std::unordered_map<int, double> lastAge;
  for (const Record& r : records) {
    if (r.participant < 0 ||
        r.participant >= static_cast<int>(participants.size()))
      throw std::invalid_argument("record with unknown participant");
    if (!(r.age >= spec.ageMin && r.age <= spec.ageMax))
      throw std::invalid_argument("exam age outside model range");
    if (r.y.size() != L || r.observed.size() != static_cast<size_t>(L))
      throw std::invalid_argument("record value length != L");
    bool any = false;
    for (int l = 0; l < L; ++l) {
      if (r.isObserved(l)) {
        any = true;
        if (!std::isfinite(r.y[l]))
          throw std::invalid_argument("observed value not finite");
      }
    }
    if (!any)
      throw std::invalid_argument("record with no observed risk factor");
    auto it = lastAge.find(r.participant);
    if (it != lastAge.end() && !(r.age > it->second))
      throw std::invalid_argument(
          "per-participant exams must be in strictly increasing age order");
    lastAge[r.participant] = r.age;
  }
  for (const Participant& p : participants)
    if (p.cohort < 0 || p.cohort >= K())
      throw std::invalid_argument("participant with unknown cohort");
}

LongitudinalDataset LongitudinalDataset::filterSex(const std::string& sex) const {
  LongitudinalDataset out;
  out.cohorts = cohorts;
  out.L = L;
  std::vector<int> remap(participants.size(), -1);
  for (size_t i = 0; i < participants.size(); ++i) {
    if (participants[i].sex == sex) {
      remap[i] = static_cast<int>(out.participants.size());
      out.participants.push_back(participants[i]);
    }
  }
  for (const Record& r : records) {
    int np = remap[static_cast<size_t>(r.participant)];
    if (np < 0) continue;
    Record nr = r;
    nr.participant = np;
    out.records.push_back(std::move(nr));
  }
  return out;
}

}  // namespace lrtraj
