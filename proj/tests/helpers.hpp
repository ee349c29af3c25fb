#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "lrtraj/dataset.hpp"
#include "lrtraj/model.hpp"
#include "lrtraj/rng.hpp"
#include "lrtraj/state.hpp"

namespace testutil {

/* One factor, two age windows split at 50. */
inline lrtraj::ModelSpec toySpec() {
  lrtraj::ModelSpec s;
  s.riskFactors = {"x"};
  s.breakpoints = {50.0};
  return s;
}

/* Two factors, three windows. */
inline lrtraj::ModelSpec toySpec2() {
  lrtraj::ModelSpec s;
  s.riskFactors = {"u", "v"};
  s.breakpoints = {40.0, 60.0};
  return s;
}

/* Small complete dataset with varied covariates and strictly increasing
 * exam ages. Values are arbitrary finite numbers. */
inline lrtraj::LongitudinalDataset toyData(const lrtraj::ModelSpec& spec,
                                           int cohorts, int perCohort,
                                           std::uint64_t seed,
                                           int examsEach = 4) {
  lrtraj::LongitudinalDataset d;
  d.L = spec.L();
  lrtraj::Rng rng = lrtraj::Rng::stream(seed, 77);
  for (int k = 0; k < cohorts; ++k) d.cohorts.push_back("C" + std::to_string(k));
  int pid = 0;
  for (int k = 0; k < cohorts; ++k)
    for (int i = 0; i < perCohort; ++i) {
      lrtraj::Participant p;
      p.id = "p" + std::to_string(pid);
      p.cohort = k;
      p.sex = spec.sexStratum;
      p.raceBlack = static_cast<int>(rng.integer(2));
      const int edu = static_cast<int>(rng.integer(3));
      p.eduHs = edu == 1;
      p.eduHsPlus = edu == 2;
      p.birthYear = 1910 + static_cast<int>(rng.integer(50));
      d.participants.push_back(p);
      double age = 20.0 + 5.0 * static_cast<double>(rng.integer(6));
      for (int e = 0; e < examsEach; ++e) {
        lrtraj::Record r;
        r.participant = pid;
        r.age = age;
        r.y.resize(spec.L());
        r.observed.assign(static_cast<std::size_t>(spec.L()), 1);
        for (int l = 0; l < spec.L(); ++l)
          r.y[l] = 100.0 + 10.0 * l + 0.3 * age + rng.normal();
        d.records.push_back(r);
        age += 4.0 + rng.uniform();
        if (age > spec.ageMax) break;
      }
      ++pid;
    }
  d.sortRecords();
  return d;
}

/* Random but valid parameter state for a layout: SPD covariances, positive
 * scales, modest effects. */
inline lrtraj::ParameterState randomState(const lrtraj::ParamLayout& layout,
                                          lrtraj::Rng& rng) {
  lrtraj::ParameterState s = layout.emptyState();
  const int L = layout.spec().L();
  for (auto& a : s.alpha)
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = 0.5 * rng.normal();
  if (s.sigma.size() > 0) {
    const Eigen::Index d = s.sigma.rows();
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = 0.4 * rng.normal();
    s.sigma = m * m.transpose() + Eigen::MatrixXd::Identity(d, d);
  }
  for (auto& lam : s.lambda) {
    const Eigen::Index k = lam.rows();
    if (k == 0) continue;
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) m(i, j) = 0.3 * rng.normal();
    lam = m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(k, k);
  }
  for (auto& ce : s.cohortEffect)
    for (Eigen::Index i = 0; i < ce.rows(); ++i)
      for (Eigen::Index j = 0; j < ce.cols(); ++j) ce(i, j) = 0.2 * rng.normal();
  for (Eigen::Index i = 0; i < s.subjectEffect.rows(); ++i)
    for (Eigen::Index j = 0; j < s.subjectEffect.cols(); ++j)
      s.subjectEffect(i, j) = 0.3 * rng.normal();
  for (int l = 0; l < L; ++l) {
    for (Eigen::Index w = 0; w < s.omega.cols(); ++w)
      s.omega(l, w) = 0.5 + 1.5 * rng.uniform();
    s.psi[l] = rng.normal();
  }
  return s;
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("lrtraj_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace testutil
