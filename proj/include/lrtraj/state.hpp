#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lrtraj/model.hpp"

namespace lrtraj {

/* Model variant: the full hierarchy, the refit without cohort effects, or
 * the refit without subject effects. Variants are separate model fits. */
enum class Variant { Full, NoCohort, NoParticipant };

const char* variantName(Variant v);
Variant variantFromName(const std::string& name);

/* Complete parameter state. Blocks not present under a variant are empty.
 * Window-deviation rows of alpha are stored in free form; the last window's
 * coefficient is determined by the sum-to-zero constraint. */
struct ParameterState {
  std::vector<Eigen::VectorXd> alpha;        // per factor, AlphaLayout order
  Eigen::MatrixXd sigma;                     // 2L x 2L
  std::vector<Eigen::MatrixXd> lambda;       // per factor, K x K
  std::vector<Eigen::MatrixXd> cohortEffect; // per factor, K x (P+2)
  Eigen::MatrixXd subjectEffect;             // 2L x participantCount
  Eigen::MatrixXd omega;                     // L x P, positive
  Eigen::VectorXd psi;                       // L

  bool hasSubject() const { return subjectEffect.size() > 0; }
  bool hasCohort() const { return !cohortEffect.empty(); }

  Eigen::Vector2d subject(int participant, int l) const {
    return subjectEffect.block<2, 1>(2 * l, participant);
  }
};

/* Canonical path-addressed layout of every scalar parameter.
 *
 * Paths: alpha.<rf>.level.<cov> | alpha.<rf>.age.<cov> | alpha.<rf>.win<w>.<cov>
 *        cohort.<rf>.<cohort>.(level|age|win<1..P>)
 *        sigma.<i>.<j>          (0-based, lower triangle i >= j)
 *        lambda.<rf>.<i>.<j>
 *        omega.<rf>.win<1..P>
 *        psi.<rf>
 *        subject.<participant>.<rf>.(level|age)
 * Free window rows run win1..win<P-1>.
 */
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(const ModelSpec& spec, const std::vector<std::string>& cohorts,
              const std::vector<std::string>& participantIds, Variant variant);

  int size() const { return static_cast<int>(paths_.size()); }
  const std::vector<std::string>& paths() const { return paths_; }
  int index(const std::string& path) const;  // -1 if absent
  Variant variant() const { return variant_; }

  Eigen::VectorXd flatten(const ParameterState& s) const;
  ParameterState unflatten(const Eigen::VectorXd& v) const;

  /* Count of participants/cohorts the layout was built for. */
  int participantCount() const { return static_cast<int>(participants_.size()); }
  const std::vector<std::string>& participantIds() const { return participants_; }
  const std::vector<std::string>& cohortNames() const { return cohorts_; }
  const ModelSpec& spec() const { return spec_; }

  /* Blank state with correctly sized blocks (zeros; covariances identity). */
  ParameterState emptyState() const;

 private:
  ModelSpec spec_;
  std::vector<std::string> cohorts_;
  std::vector<std::string> participants_;
  Variant variant_ = Variant::Full;
  std::vector<std::string> paths_;
  std::unordered_map<std::string, int> index_;

  void build();
};

}  // namespace lrtraj
