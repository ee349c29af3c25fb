#include "lrtraj/state.hpp"

#include <stdexcept>

namespace lrtraj {

const char* variantName(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoCohort: return "no-cohort";
    case Variant::NoParticipant: return "no-participant";
  }
  throw std::invalid_argument("unknown variant");
}

Variant variantFromName(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "no-cohort") return Variant::NoCohort;
  if (name == "no-participant") return Variant::NoParticipant;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

ParamLayout::ParamLayout(const ModelSpec& spec,
                         const std::vector<std::string>& cohorts,
                         const std::vector<std::string>& participantIds,
                         Variant variant)
    : spec_(spec), cohorts_(cohorts), participants_(participantIds),
      variant_(variant) {
  build();
}

void ParamLayout::build() {
  const int L = spec_.L();
  const int P = spec_.P();
  AlphaLayout lay(spec_);
  auto add = [this](std::string p) { paths_.push_back(std::move(p)); };

  for (int l = 0; l < L; ++l) {
    const std::string& rf = spec_.riskFactors[static_cast<size_t>(l)];
    for (int c = 0; c < lay.cov.count(); ++c)
      add("alpha." + rf + ".level." + CovariateScheme::name(c));
    for (int c = 0; c < lay.cov.count(); ++c)
      if (lay.cov.ageInteracting(c))
        add("alpha." + rf + ".age." + CovariateScheme::name(c));
    for (int w = 0; w < P - 1; ++w)
      for (int c = 0; c < lay.cov.count(); ++c)
        if (lay.cov.windowInteracting(c))
          add("alpha." + rf + ".win" + std::to_string(w + 1) + "." +
              CovariateScheme::name(c));
  }
  if (variant_ != Variant::NoCohort) {
    for (int l = 0; l < L; ++l) {
      const std::string& rf = spec_.riskFactors[static_cast<size_t>(l)];
      for (const std::string& k : cohorts_) {
        add("cohort." + rf + "." + k + ".level");
        add("cohort." + rf + "." + k + ".age");
        for (int w = 0; w < P; ++w)
          add("cohort." + rf + "." + k + ".win" + std::to_string(w + 1));
      }
    }
  }
  if (variant_ != Variant::NoParticipant) {
    for (int i = 0; i < 2 * L; ++i)
      for (int j = 0; j <= i; ++j)
        add("sigma." + std::to_string(i) + "." + std::to_string(j));
  }
  if (variant_ != Variant::NoCohort) {
    const int K = static_cast<int>(cohorts_.size());
    for (int l = 0; l < L; ++l) {
      const std::string& rf = spec_.riskFactors[static_cast<size_t>(l)];
      for (int i = 0; i < K; ++i)
        for (int j = 0; j <= i; ++j)
          add("lambda." + rf + "." + std::to_string(i) + "." + std::to_string(j));
    }
  }
  for (int l = 0; l < L; ++l)
    for (int w = 0; w < P; ++w)
      add("omega." + spec_.riskFactors[static_cast<size_t>(l)] + ".win" +
          std::to_string(w + 1));
  for (int l = 0; l < L; ++l)
    add("psi." + spec_.riskFactors[static_cast<size_t>(l)]);
  if (variant_ != Variant::NoParticipant) {
    for (const std::string& id : participants_)
      for (int l = 0; l < L; ++l) {
        const std::string& rf = spec_.riskFactors[static_cast<size_t>(l)];
        add("subject." + id + "." + rf + ".level");
        add("subject." + id + "." + rf + ".age");
      }
  }
  index_.reserve(paths_.size());
  for (size_t i = 0; i < paths_.size(); ++i)
    index_[paths_[i]] = static_cast<int>(i);
}

int ParamLayout::index(const std::string& path) const {
  auto it = index_.find(path);
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd ParamLayout::flatten(const ParameterState& s) const {
  const int L = spec_.L();
  const int P = spec_.P();
  const int K = static_cast<int>(cohorts_.size());
  const int n = static_cast<int>(participants_.size());
  Eigen::VectorXd v(size());
  Eigen::Index at = 0;
  for (int l = 0; l < L; ++l) {
    v.segment(at, s.alpha[static_cast<size_t>(l)].size()) =
        s.alpha[static_cast<size_t>(l)];
    at += s.alpha[static_cast<size_t>(l)].size();
  }
  if (variant_ != Variant::NoCohort) {
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k)
        for (int p = 0; p < P + 2; ++p)
          v[at++] = s.cohortEffect[static_cast<size_t>(l)](k, p);
  }
  if (variant_ != Variant::NoParticipant) {
    for (int i = 0; i < 2 * L; ++i)
      for (int j = 0; j <= i; ++j) v[at++] = s.sigma(i, j);
  }
  if (variant_ != Variant::NoCohort) {
    for (int l = 0; l < L; ++l)
      for (int i = 0; i < K; ++i)
        for (int j = 0; j <= i; ++j)
          v[at++] = s.lambda[static_cast<size_t>(l)](i, j);
  }
  for (int l = 0; l < L; ++l)
    for (int w = 0; w < P; ++w) v[at++] = s.omega(l, w);
  for (int l = 0; l < L; ++l) v[at++] = s.psi[l];
  if (variant_ != Variant::NoParticipant) {
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < L; ++l) {
        v[at++] = s.subjectEffect(2 * l, i);
        v[at++] = s.subjectEffect(2 * l + 1, i);
      }
  }
  if (at != size()) throw std::logic_error("flatten: layout size mismatch");
  return v;
}

ParameterState ParamLayout::unflatten(const Eigen::VectorXd& v) const {
  if (v.size() != size()) throw std::invalid_argument("unflatten: bad length");
  const int L = spec_.L();
  const int P = spec_.P();
  const int K = static_cast<int>(cohorts_.size());
  const int n = static_cast<int>(participants_.size());
  AlphaLayout lay(spec_);
  ParameterState s = emptyState();
  Eigen::Index at = 0;
  for (int l = 0; l < L; ++l) {
    s.alpha[static_cast<size_t>(l)] = v.segment(at, lay.size());
    at += lay.size();
  }
  if (variant_ != Variant::NoCohort) {
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k)
        for (int p = 0; p < P + 2; ++p)
          s.cohortEffect[static_cast<size_t>(l)](k, p) = v[at++];
  }
  if (variant_ != Variant::NoParticipant) {
    for (int i = 0; i < 2 * L; ++i)
      for (int j = 0; j <= i; ++j) {
        s.sigma(i, j) = v[at];
        s.sigma(j, i) = v[at];
        ++at;
      }
  }
  if (variant_ != Variant::NoCohort) {
    for (int l = 0; l < L; ++l)
      for (int i = 0; i < K; ++i)
        for (int j = 0; j <= i; ++j) {
          s.lambda[static_cast<size_t>(l)](i, j) = v[at];
          s.lambda[static_cast<size_t>(l)](j, i) = v[at];
          ++at;
        }
  }
  for (int l = 0; l < L; ++l)
    for (int w = 0; w < P; ++w) s.omega(l, w) = v[at++];
  for (int l = 0; l < L; ++l) s.psi[l] = v[at++];
  if (variant_ != Variant::NoParticipant) {
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < L; ++l) {
        s.subjectEffect(2 * l, i) = v[at++];
        s.subjectEffect(2 * l + 1, i) = v[at++];
      }
  }
  return s;
}

ParameterState ParamLayout::emptyState() const {
  const int L = spec_.L();
  const int P = spec_.P();
  const int K = static_cast<int>(cohorts_.size());
  const int n = static_cast<int>(participants_.size());
  AlphaLayout lay(spec_);
  ParameterState s;
  s.alpha.assign(static_cast<size_t>(L), Eigen::VectorXd::Zero(lay.size()));
  s.omega = Eigen::MatrixXd::Ones(L, P);
  s.psi = Eigen::VectorXd::Zero(L);
  if (variant_ != Variant::NoParticipant) {
    s.sigma = Eigen::MatrixXd::Identity(2 * L, 2 * L);
    s.subjectEffect = Eigen::MatrixXd::Zero(2 * L, n);
  }
  if (variant_ != Variant::NoCohort) {
    s.lambda.assign(static_cast<size_t>(L), Eigen::MatrixXd::Identity(K, K));
    s.cohortEffect.assign(static_cast<size_t>(L),
                          Eigen::MatrixXd::Zero(K, P + 2));
  }
  return s;
}

}  // namespace lrtraj
