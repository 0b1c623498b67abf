#include "eiv/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "eiv/errors.hpp"

namespace eiv {

namespace {

void require_positive_usq(const SufficientStats& st) {
  if (!(st.u_sq > 0.0))
    throw InvalidInputError("estimator: ||u||^2 must be positive");
}

void require_within_group_df(const SufficientStats& st, const char* what) {
  if (st.m < 1)
    throw InvalidInputError(std::string(what) +
                            ": needs within-group degrees of freedom (m >= 1)");
}

double james_stein_factor(const SufficientStats& st) {
  return double(st.p - 2) * st.s / (double(st.m + 2) * st.u_sq);
}

}  // namespace

double br_a(int j, int p) {
  double a = 1.0;
  for (int i = 1; i <= j; ++i) a *= double(p - 2 * i);
  return a;
}

double br_b(int j, int m) {
  double b = 1.0;
  for (int i = 1; i <= j; ++i) b *= double(m + 2 * (i - 1));
  return b;
}

double br_coeff(int j, int p, int m) {
  if (j < 1) throw InvalidInputError("br_coeff: j >= 1");
  if (m < 1) throw InvalidInputError("br_coeff: m >= 1");
  return br_a(j, p) / br_b(j, m);
}

double PhiPolySpec::operator()(double t) const {
  double acc = 0.0;
  for (const auto& term : terms) acc += term.coeff * std::pow(t, -term.degree);
  return acc;
}

int PhiPolySpec::max_degree() const {
  int d = 0;
  for (const auto& term : terms) d = std::max(d, term.degree);
  return d;
}

void PhiPolySpec::validate() const {
  for (const auto& term : terms) {
    if (term.degree < 1)
      throw InvalidInputError("phi: term degrees must be >= 1");
    if (!std::isfinite(term.coeff))
      throw InvalidInputError("phi: non-finite coefficient");
  }
}

PhiPolySpec PhiPolySpec::br(int ell, int p, int m) {
  if (ell < 0) throw InvalidInputError("br: order must be >= 0");
  PhiPolySpec spec;
  for (int j = 1; j <= ell; ++j) spec.terms.push_back({j, br_coeff(j, p, m)});
  return spec;
}

PhiPolySpec PhiPolySpec::br_doubled(int ell, int p, int m) {
  if (ell < 1) throw InvalidInputError("brd: order must be >= 1");
  PhiPolySpec spec;
  for (int j = 1; j <= ell; ++j)
    spec.terms.push_back({j, 2.0 * br_coeff(j, p, m)});
  return spec;
}

PhiPolySpec PhiPolySpec::stefanski(int ell, int p, int m) {
  if (ell < 1) throw InvalidInputError("st: order must be >= 1");
  if (m < 1) throw InvalidInputError("st: m >= 1");
  PhiPolySpec spec;
  const double ratio = double(p) / double(m);
  double c = 1.0;
  for (int j = 1; j <= ell; ++j) {
    c *= ratio;
    spec.terms.push_back({j, c});
  }
  return spec;
}

PsiSpec PsiSpec::identity() {
  return PsiSpec("identity", [](double) { return 1.0; });
}

PsiSpec PsiSpec::tls(int p, int m) {
  const double cap = 2.0 * double(p + m - 2);
  return PsiSpec("tls", [cap](double v) {
    return std::max(0.0, std::min(1.0, cap * v - 1.0));
  });
}

PsiSpec PsiSpec::br_bar(int ell, int p, int m) {
  std::vector<double> coeff;
  for (int j = 1; j <= ell; ++j) coeff.push_back(br_coeff(j, p, m));
  return PsiSpec("br_bar", [coeff](double v) {
    const double t_inv = (1.0 - v) / v;
    double acc = 1.0, pow_t = 1.0;
    for (double c : coeff) {
      pow_t *= t_inv;
      acc += c * pow_t;
    }
    return acc;
  });
}

PsiSpec PsiSpec::tbr(int ell, int p, int m) {
  return psi1([bar = br_bar(ell, p, m)](double v) { return bar(v); }, p, m);
}

PsiSpec PsiSpec::gg_bar(int p, int m) {
  if (p < 3) throw InvalidInputError("gg: p >= 3");
  const double cap = double(p - 2) / double(p);
  const double slope = double(p - 2) / double(m + 2);
  return PsiSpec("gg_bar", [cap, slope](double v) {
    const double g = std::min(cap, slope * (1.0 - v) / v);
    return 1.0 / (1.0 - g);
  });
}

PsiSpec PsiSpec::tgg(int p, int m) {
  return psi1([bar = gg_bar(p, m)](double v) { return bar(v); }, p, m);
}

PsiSpec PsiSpec::kr(std::function<double(double)> psibar, int p, int m) {
  const double cap = double(p + m - 2);
  return PsiSpec("kr", [psibar = std::move(psibar), cap](double v) {
    return std::min(psibar(v), cap * v);
  });
}

PsiSpec PsiSpec::psi0(std::function<double(double)> psibar, int p, int m) {
  const double cap = 2.0 * double(p + m - 2);
  return PsiSpec("psi0", [psibar = std::move(psibar), cap](double v) {
    const double bar = psibar(v);
    return std::max(0.0, std::min(bar, cap * v - bar));
  });
}

PsiSpec PsiSpec::psi1(std::function<double(double)> psibar, int p, int m) {
  const double cap = 2.0 * double(p + m - 2);
  return PsiSpec("psi1", [psibar = std::move(psibar), cap](double v) {
    const double bar = psibar(v);
    return std::max(1.0, std::min(bar, cap * v - bar));
  });
}

void BayesHyperparams::validate() const {
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw InvalidInputError("bayes: c1, c2 must be positive");
}

double ls(const SufficientStats& st) {
  require_positive_usq(st);
  return st.t_uz / st.u_sq;
}

double mm(const SufficientStats& st) {
  require_positive_usq(st);
  require_within_group_df(st, "mm");
  const double denom = st.u_sq / double(st.p) - st.s / double(st.m);
  if (denom == 0.0)
    throw SingularEstimateError("mm: moment denominator vanished");
  return (st.t_uz / double(st.p)) / denom;
}

double stefanski(const SufficientStats& st, int ell) {
  require_within_group_df(st, "st");
  return phi_apply(st, PhiPolySpec::stefanski(ell, st.p, st.m));
}

double br(const SufficientStats& st, int ell) {
  require_within_group_df(st, "br");
  return phi_apply(st, PhiPolySpec::br(ell, st.p, st.m));
}

double br_doubled(const SufficientStats& st, int ell) {
  require_within_group_df(st, "brd");
  return phi_apply(st, PhiPolySpec::br_doubled(ell, st.p, st.m));
}

double phi_apply(const SufficientStats& st, const PhiPolySpec& spec) {
  require_positive_usq(st);
  spec.validate();
  const double t = st.u_sq / st.s;  // +inf when s == 0; poly terms vanish there
  return (1.0 + spec(t)) * ls(st);
}

double phi_star(const SufficientStats& st,
                const std::function<double(double)>& phibar, int ell) {
  require_positive_usq(st);
  require_within_group_df(st, "phi_star");
  if (ell < 1) throw InvalidInputError("phi_star: order must be >= 1");
  const PhiPolySpec cap = PhiPolySpec::br(ell, st.p, st.m);
  const double t = st.u_sq / st.s;
  const double phi = std::max(0.0, std::min(phibar(t), cap(t)));
  return (1.0 + phi) * ls(st);
}

double phi_star_star(const SufficientStats& st, int ell) {
  require_positive_usq(st);
  require_within_group_df(st, "pss");
  if (ell < 1) throw InvalidInputError("pss: order must be >= 1");
  const double t = st.u_sq / st.s;
  double phi;
  if (t > 1.0) {
    phi = PhiPolySpec::br(ell, st.p, st.m)(t);
  } else {
    phi = br_coeff(1, st.p, st.m) / t;
  }
  return (1.0 + phi) * ls(st);
}

double psi_apply(const SufficientStats& st, const PsiSpec& spec) {
  require_positive_usq(st);
  require_within_group_df(st, "psi");
  const double v = st.u_sq / (st.s + st.u_sq);
  return spec(v) * ls(st);
}

double tls(const SufficientStats& st) {
  return psi_apply(st, PsiSpec::tls(st.p, st.m));
}

double tls2(const SufficientStats& st) {
  return psi_apply(st, PsiSpec::kr([](double) { return 1.0; }, st.p, st.m));
}

double tbr(const SufficientStats& st, int ell) {
  require_within_group_df(st, "tbr");
  return psi_apply(st, PsiSpec::tbr(ell, st.p, st.m));
}

double gg(const SufficientStats& st) {
  require_positive_usq(st);
  require_within_group_df(st, "gg");
  if (st.p < 3) throw InvalidInputError("gg: p >= 3");
  const double g = std::min(double(st.p - 2) / double(st.p),
                            james_stein_factor(st));
  return ls(st) / (1.0 - g);
}

double tgg(const SufficientStats& st) {
  if (st.p < 3) throw InvalidInputError("tgg: p >= 3");
  return psi_apply(st, PsiSpec::tgg(st.p, st.m));
}

double whittemore(const SufficientStats& st) {
  require_positive_usq(st);
  require_within_group_df(st, "w");
  if (st.p < 3) throw InvalidInputError("w: p >= 3");
  const double g = james_stein_factor(st);
  if (g == 1.0) throw SingularEstimateError("w: shrinkage factor hit 1");
  return ls(st) / (1.0 - g);
}

double ml(const SufficientStats& st) {
  require_positive_usq(st);
  if (st.t_uz == 0.0)
    throw SingularEstimateError("ml: u'z = 0 has no likelihood root");
  const double d = st.z_sq - double(st.r) * st.u_sq;
  const double disc =
      std::sqrt(d * d + 4.0 * double(st.r) * st.t_uz * st.t_uz);
  return (d + disc) / (2.0 * st.t_uz);
}

double ir(const SufficientStats& st) {
  if (st.t_uz == 0.0)
    throw SingularEstimateError("ir: u'z = 0 pole");
  return st.z_sq / st.t_uz;
}

double bayes_pb(const SufficientStats& st, const BayesHyperparams& hp) {
  require_positive_usq(st);
  hp.validate();
  return (st.t_uz + hp.d1() * st.u0 * st.z0) /
         (st.u_sq + st.s + hp.d2() * st.u0 * st.u0);
}

double bayes_pm_intercept(const SufficientStats& st,
                          const BayesHyperparams& hp) {
  return hp.d1_star() * st.z0 - hp.d2_star() * bayes_pb(st, hp) * st.u0;
}

double intercept_of(const SufficientStats& st, double slope) {
  return st.z0 - slope * st.u0;
}

double br_known_variance(const SufficientStats& st, int ell) {
  require_positive_usq(st);
  if (ell < 0) throw InvalidInputError("kvbr: order must be >= 0");
  double acc = 1.0;
  for (int j = 1; j <= ell; ++j)
    acc += br_a(j, st.p) * std::pow(st.u_sq, -j);
  return acc * ls(st);
}

double psi0_known_variance(const SufficientStats& st,
                           const std::function<double(double)>& psibar) {
  require_positive_usq(st);
  const double w = st.u_sq;
  const double bar = psibar(w);
  const double factor = std::max(0.0, std::min(bar, 2.0 * w - bar));
  return factor * ls(st);
}

namespace {

struct IdEntry {
  const char* prefix;
  EstimatorId::Kind kind;
  bool takes_order;
  int min_order;
};

// Longest prefixes first so "tls2"/"tbr"/"brd" resolve before their stems.
constexpr IdEntry kIdTable[] = {
    {"kvtls", EstimatorId::Kind::kvtls, false, 0},
    {"kvbr", EstimatorId::Kind::kvbr, true, 1},
    {"tls2", EstimatorId::Kind::tls2, false, 0},
    {"tls", EstimatorId::Kind::tls, false, 0},
    {"tbr", EstimatorId::Kind::tbr, true, 1},
    {"tgg", EstimatorId::Kind::tgg, false, 0},
    {"brd", EstimatorId::Kind::brd, true, 1},
    {"pss", EstimatorId::Kind::pss, true, 1},
    {"br", EstimatorId::Kind::br, true, 0},
    {"st", EstimatorId::Kind::st, true, 1},
    {"ls", EstimatorId::Kind::ls, false, 0},
    {"mm", EstimatorId::Kind::mm, false, 0},
    {"ml", EstimatorId::Kind::ml, false, 0},
    {"ir", EstimatorId::Kind::ir, false, 0},
    {"gg", EstimatorId::Kind::gg, false, 0},
    {"pb", EstimatorId::Kind::pb, false, 0},
    {"w", EstimatorId::Kind::w, false, 0},
};

}  // namespace

std::string known_estimator_ids() {
  return "ls mm ml ir w gg tgg tls tls2 pb st<k> br<k> brd<k> tbr<k> pss<k> "
         "kvbr<k> kvtls";
}

EstimatorId parse_estimator_id(const std::string& id) {
  for (const auto& entry : kIdTable) {
    const std::string prefix = entry.prefix;
    if (id.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string suffix = id.substr(prefix.size());
    if (!entry.takes_order) {
      if (!suffix.empty()) continue;
      return {entry.kind, 0, id};
    }
    if (suffix.empty() ||
        !std::all_of(suffix.begin(), suffix.end(),
                     [](unsigned char c) { return std::isdigit(c); }))
      continue;
    const long order = std::strtol(suffix.c_str(), nullptr, 10);
    if (order < entry.min_order || order > 50)
      throw InvalidInputError("estimator id '" + id + "': order out of range");
    return {entry.kind, int(order), id};
  }
  throw InvalidInputError("unknown estimator id '" + id + "' (known: " +
                          known_estimator_ids() + ")");
}

std::function<double(const SufficientStats&)> make_estimator(
    const EstimatorId& id, const BayesHyperparams& hp) {
  using Kind = EstimatorId::Kind;
  const int ell = id.ell;
  switch (id.kind) {
    case Kind::ls: return [](const SufficientStats& st) { return ls(st); };
    case Kind::mm: return [](const SufficientStats& st) { return mm(st); };
    case Kind::ml: return [](const SufficientStats& st) { return ml(st); };
    case Kind::ir: return [](const SufficientStats& st) { return ir(st); };
    case Kind::w:
      return [](const SufficientStats& st) { return whittemore(st); };
    case Kind::gg: return [](const SufficientStats& st) { return gg(st); };
    case Kind::tgg: return [](const SufficientStats& st) { return tgg(st); };
    case Kind::tls: return [](const SufficientStats& st) { return tls(st); };
    case Kind::tls2:
      return [](const SufficientStats& st) { return tls2(st); };
    case Kind::pb:
      return [hp](const SufficientStats& st) { return bayes_pb(st, hp); };
    case Kind::st:
      return [ell](const SufficientStats& st) { return stefanski(st, ell); };
    case Kind::br:
      return [ell](const SufficientStats& st) { return br(st, ell); };
    case Kind::brd:
      return [ell](const SufficientStats& st) { return br_doubled(st, ell); };
    case Kind::tbr:
      return [ell](const SufficientStats& st) { return tbr(st, ell); };
    case Kind::pss:
      return [ell](const SufficientStats& st) { return phi_star_star(st, ell); };
    case Kind::kvbr:
      return [ell](const SufficientStats& st) {
        return br_known_variance(st, ell);
      };
    case Kind::kvtls:
      return [](const SufficientStats& st) {
        return psi0_known_variance(st, [](double) { return 1.0; });
      };
  }
  throw InvalidInputError("unreachable estimator kind");
}

MomentNote classify_moments(const EstimatorId& id, int p, int m) {
  using Kind = EstimatorId::Kind;
  (void)m;
  switch (id.kind) {
    case Kind::mm:
    case Kind::ml:
    case Kind::ir:
    case Kind::w:
      return MomentNote::no_finite_moments;
    case Kind::st:
    case Kind::br:
    case Kind::brd:
    case Kind::pss:
    case Kind::kvbr:
      if (id.ell == 0) return p >= 3 ? MomentNote::moments_exist
                                     : MomentNote::no_finite_moments;
      return p > 4 * id.ell + 2 ? MomentNote::moments_exist
                                : MomentNote::no_finite_moments;
    case Kind::pb:
      return MomentNote::moments_exist;
    default:
      return p >= 3 ? MomentNote::moments_exist
                    : MomentNote::no_finite_moments;
  }
}

std::vector<std::string> estimator_warnings(const EstimatorId& id, int p,
                                            int m) {
  using Kind = EstimatorId::Kind;
  (void)m;
  std::vector<std::string> out;
  const bool series_family =
      id.kind == Kind::st || id.kind == Kind::br || id.kind == Kind::brd ||
      id.kind == Kind::pss || id.kind == Kind::kvbr;
  if (series_family && id.ell >= 1) {
    if (2 * id.ell >= p - 2)
      out.push_back(id.text + ": order " + std::to_string(id.ell) +
                    " is outside the bias window l < (p-2)/2");
    if (4 * id.ell >= p - 2)
      out.push_back(id.text + ": no finite MSE, order must satisfy l < (p-2)/4");
  }
  if (id.kind == Kind::mm || id.kind == Kind::ml || id.kind == Kind::ir ||
      id.kind == Kind::w)
    out.push_back(id.text + ": no finite moments");
  return out;
}

}  // namespace eiv
