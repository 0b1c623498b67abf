#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eiv/canonical.hpp"

// Slope estimators for the rotated measurement-error model. Every estimator
// is a pure function of SufficientStats; intercepts follow as z0 - slope*u0.
// Estimators with poles throw SingularEstimateError at the pole instead of
// returning infinities; simulation code counts those events.

namespace eiv {

// Series coefficient a_j / b_j with
//   a_j = (p-2)(p-4)...(p-2j),  b_j = m(m+2)...(m+2j-2).
double br_coeff(int j, int p, int m);
double br_a(int j, int p);
double br_b(int j, int m);

// Correction polynomial phi(t) = sum_j coeff_j * t^(-degree_j), applied at
// t = ||u||^2 / s. The estimator is {1 + phi(t)} * ls.
struct PhiPolySpec {
  struct Term {
    int degree;
    double coeff;
  };
  std::vector<Term> terms;

  double operator()(double t) const;
  int max_degree() const;
  void validate() const;

  static PhiPolySpec br(int ell, int p, int m);
  static PhiPolySpec br_doubled(int ell, int p, int m);
  static PhiPolySpec stefanski(int ell, int p, int m);
};

// Multiplier psi(v) on (0,1), applied at v = ||u||^2 / (s + ||u||^2). The
// estimator is psi(v) * ls. Factories bind p and m.
class PsiSpec {
 public:
  double operator()(double v) const { return eval_(v); }
  const std::string& name() const { return name_; }

  static PsiSpec identity();
  // max[0, min{1, 2(p+m-2)v - 1}]
  static PsiSpec tls(int p, int m);
  // Untruncated series multiplier 1 + sum_j (a_j/b_j) ((1-v)/v)^j.
  static PsiSpec br_bar(int ell, int p, int m);
  // max[1, min{br_bar, 2(p+m-2)v - br_bar}]
  static PsiSpec tbr(int ell, int p, int m);
  // [1 - min{(p-2)/p, (p-2)(1-v) / ((m+2)v)}]^(-1)
  static PsiSpec gg_bar(int p, int m);
  // max[1, min{gg_bar, 2(p+m-2)v - gg_bar}]
  static PsiSpec tgg(int p, int m);
  // min{psibar(v), (p+m-2)v}
  static PsiSpec kr(std::function<double(double)> psibar, int p, int m);
  // max[0, min{psibar(v), 2(p+m-2)v - psibar(v)}]
  static PsiSpec psi0(std::function<double(double)> psibar, int p, int m);
  // max[1, min{psibar(v), 2(p+m-2)v - psibar(v)}]
  static PsiSpec psi1(std::function<double(double)> psibar, int p, int m);

 private:
  PsiSpec(std::string name, std::function<double(double)> eval)
      : name_(std::move(name)), eval_(std::move(eval)) {}
  std::string name_;
  std::function<double(double)> eval_;
};

struct BayesHyperparams {
  double c1 = 1.0;
  double c2 = 1.0;
  void validate() const;
  double d1() const { return c1 / (1.0 + c1 + c2); }
  double d2() const { return (c1 + c2) / (1.0 + c1 + c2); }
  double d1_star() const { return (1.0 + c2) / (1.0 + c1 + c2); }
  double d2_star() const { return 1.0 / (1.0 + c1 + c2); }
};

double ls(const SufficientStats&);
double mm(const SufficientStats&);
double stefanski(const SufficientStats&, int ell);
double br(const SufficientStats&, int ell);
double br_doubled(const SufficientStats&, int ell);
double phi_apply(const SufficientStats&, const PhiPolySpec&);
// max[0, min{phibar(t), sum_{j<=ell} (a_j/b_j) t^(-j)}] correction.
double phi_star(const SufficientStats&, const std::function<double(double)>& phibar, int ell);
// Series correction for t > 1, first-order correction for t <= 1.
double phi_star_star(const SufficientStats&, int ell);
double psi_apply(const SufficientStats&, const PsiSpec&);
double tls(const SufficientStats&);
double tls2(const SufficientStats&);
double tbr(const SufficientStats&, int ell);
double gg(const SufficientStats&);
double tgg(const SufficientStats&);
double whittemore(const SufficientStats&);
double ml(const SufficientStats&);
double ir(const SufficientStats&);
double bayes_pb(const SufficientStats&, const BayesHyperparams& = {});
double bayes_pm_intercept(const SufficientStats&, const BayesHyperparams& = {});
double intercept_of(const SufficientStats&, double slope);

// Known measurement variance, sigma^2 = 1 units (callers rescale); s and m
// are ignored and r = 1 inputs are fine.
double br_known_variance(const SufficientStats&, int ell);
// max[0, min{psibar(w), 2w - psibar(w)}] at w = ||u||^2.
double psi0_known_variance(const SufficientStats&, const std::function<double(double)>& psibar);

enum class MomentNote { moments_exist, no_finite_moments };

struct EstimatorId {
  enum class Kind {
    ls, mm, ml, ir, w, gg, tgg, tls, tls2, pb,
    st, br, brd, tbr, pss, kvbr, kvtls,
  };
  Kind kind;
  int ell = 0;       // order for the parameterized families
  std::string text;  // the id as parsed, e.g. "br1"
};

// Parses ids like "ls", "br1", "tbr5", "st2", "brd1", "pss1", "kvbr2".
EstimatorId parse_estimator_id(const std::string& id);
std::function<double(const SufficientStats&)> make_estimator(
    const EstimatorId&, const BayesHyperparams& = {});
MomentNote classify_moments(const EstimatorId&, int p, int m);
// Human-readable validity-window warnings (empty when none apply).
std::vector<std::string> estimator_warnings(const EstimatorId&, int p, int m);
std::string known_estimator_ids();

}  // namespace eiv
