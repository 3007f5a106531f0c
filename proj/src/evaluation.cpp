#include "neovitals/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace neovitals {

namespace {

// Sample times are compared with a small slack so that equal-rate series that
// share a clock pair one-to-one.
constexpr double kTimeSlack = 1e-9;

}  // namespace

PairedSamples align(const SampledSeries& candidate, const SampledSeries& reference) {
  for (const auto* s : {&candidate, &reference}) {
    if (auto v = validate_series(*s); !v.empty()) throw ContractError("align: " + v.front());
  }
  const bool cand_low = candidate.rate <= reference.rate;
  const SampledSeries& low = cand_low ? candidate : reference;
  const SampledSeries& high = cand_low ? reference : candidate;

  const double lo_end = low.start_time + low.duration();
  const double hi_end = high.start_time + high.duration();
  if (low.empty() || high.empty() || std::min(lo_end, hi_end) <= std::max(low.start_time, high.start_time)) {
    throw ContractError("no overlap");
  }

  PairedSamples out;
  const double period = 1.0 / low.rate;
  for (std::size_t j = 0; j < low.size(); ++j) {
    const double t0 = low.time_at(j);
    const double t1 = t0 + period;
    // Index range of high-rate samples with time in [t0, t1).
    const double a = std::ceil((t0 - high.start_time) * high.rate - kTimeSlack);
    const double b = std::ceil((t1 - high.start_time) * high.rate - kTimeSlack);
    const auto ia = static_cast<std::ptrdiff_t>(std::max(0.0, a));
    const auto ib = static_cast<std::ptrdiff_t>(std::min(static_cast<double>(high.size()), b));
    if (ib <= ia) continue;  // period lies outside the other series
    double sum = 0.0;
    std::size_t present = 0;
    for (auto i = ia; i < ib; ++i) {
      if (high.is_missing(static_cast<std::size_t>(i))) continue;
      sum += high.values[static_cast<std::size_t>(i)];
      ++present;
    }
    if (low.is_missing(j) || present == 0) {
      ++out.dropped;
      continue;
    }
    const double hv = sum / static_cast<double>(present);
    out.time.push_back(t0);
    out.candidate.push_back(cand_low ? low.values[j] : hv);
    out.reference.push_back(cand_low ? hv : low.values[j]);
  }
  if (out.size() == 0 && out.dropped == 0) throw ContractError("no overlap");
  return out;
}

std::string CpThreshold::label() const {
  std::ostringstream os;
  os << "+-" << width << (percent ? "%" : "");
  return os.str();
}

std::string_view to_string(Vital v) {
  switch (v) {
    case Vital::rr: return "rr";
    case Vital::tv: return "tv";
    case Vital::hr: return "hr";
    case Vital::spo2: return "spo2";
  }
  return "rr";
}

Vital vital_from_string(std::string_view s) {
  for (auto v : {Vital::rr, Vital::tv, Vital::hr, Vital::spo2}) {
    if (to_string(v) == s) return v;
  }
  throw ContractError("unknown vital '" + std::string(s) + "'");
}

std::vector<CpThreshold> default_cp_thresholds(Vital v) {
  switch (v) {
    case Vital::rr:
    case Vital::tv: return {{10.0, true}, {20.0, true}};
    case Vital::hr: return {{5.0, true}, {10.0, true}};
    case Vital::spo2: return {{3.0, false}, {6.0, false}};
  }
  return {};
}

AgreementReport agreement(std::span<const double> candidate, std::span<const double> reference,
                          std::span<const CpThreshold> thresholds) {
  if (candidate.size() != reference.size()) throw ContractError("agreement: operands differ in length");
  const std::size_t n = candidate.size();
  if (n < 2) throw ContractError("agreement needs at least 2 pairs");
  for (const auto& t : thresholds) {
    if (!(t.width >= 0.0)) throw ContractError("coverage threshold must be >= 0");
  }

  AgreementReport r;
  r.n = n;
  std::vector<std::size_t> hits(thresholds.size(), 0);
  double abs_sum = 0.0, sq_sum = 0.0, diff_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = candidate[i] - reference[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    diff_sum += d;
    r.bland_altman.push_back({0.5 * (candidate[i] + reference[i]), d});
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      const double w = thresholds[k].percent ? thresholds[k].width / 100.0 * std::abs(reference[i]) : thresholds[k].width;
      if (std::abs(d) <= w) ++hits[k];
    }
  }
  const double dn = static_cast<double>(n);
  r.mae = abs_sum / dn;
  r.mse = sq_sum / dn;
  r.bias = diff_sum / dn;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = candidate[i] - reference[i] - r.bias;
    var += e * e;
  }
  r.sd_diff = std::sqrt(var / (dn - 1.0));
  r.loa_low = r.bias - 2.0 * r.sd_diff;
  r.loa_high = r.bias + 2.0 * r.sd_diff;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    r.cp.emplace_back(thresholds[k], static_cast<double>(hits[k]) / dn);
  }
  return r;
}

AgreementReport agreement(const PairedSamples& pairs, std::span<const CpThreshold> thresholds) {
  return agreement(pairs.candidate, pairs.reference, thresholds);
}

namespace {

struct Ranked {
  std::vector<double> ranks;  // midranks, group a first then group b
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranked midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return all[i] < all[j]; });
  Ranked r;
  r.ranks.assign(all.size(), 0.0);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && all[order[j]] == all[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r.ranks[order[k]] = mid;
    const auto t = static_cast<double>(j - i);
    r.tie_term += t * t * t - t;
    i = j;
  }
  return r;
}

// P(|U - mean| >= |u - mean|) under random assignment of the observed midranks.
double exact_p(const std::vector<double>& ranks, std::size_t na, double u) {
  // Doubled midranks are integers, so the rank sum distribution lives on a grid.
  std::vector<long> r2;
  long total = 0;
  for (double r : ranks) {
    r2.push_back(std::lround(2.0 * r));
    total += r2.back();
  }
  // ways[k][s]: number of size-k subsets with doubled rank sum s.
  std::vector<std::vector<double>> ways(na + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  for (long v : r2) {
    for (std::size_t k = na; k >= 1; --k) {
      auto& dst = ways[k];
      const auto& src = ways[k - 1];
      for (long s = total; s >= v; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - v)];
    }
  }
  const double nad = static_cast<double>(na);
  const double offset2 = nad * (nad + 1.0);  // doubled n_a (n_a + 1) / 2
  const double mean_u = nad * static_cast<double>(ranks.size() - na) / 2.0;
  const double observed = std::abs(u - mean_u);
  double hit = 0.0, all = 0.0;
  for (long s = 0; s <= total; ++s) {
    const double w = ways[na][static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    const double us = (static_cast<double>(s) - offset2) / 2.0;
    all += w;
    if (std::abs(us - mean_u) >= observed - 1e-9) hit += w;
  }
  return std::min(1.0, hit / all);
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MannWhitneyMethod method) {
  if (a.empty() || b.empty()) throw ContractError("mann_whitney_u: both groups must be nonempty");
  const std::size_t na = a.size(), nb = b.size();
  const auto ranked = midranks(a, b);
  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += ranked.ranks[i];
  const double nad = static_cast<double>(na), nbd = static_cast<double>(nb);

  MannWhitneyResult r;
  r.u = ra - nad * (nad + 1.0) / 2.0;
  const bool use_exact =
      method == MannWhitneyMethod::exact || (method == MannWhitneyMethod::automatic && na * nb <= 400);
  if (use_exact) {
    r.exact = true;
    r.p = exact_p(ranked.ranks, na, r.u);
    return r;
  }
  const double n = nad + nbd;
  const double var = nad * nbd / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    r.p = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.u - nad * nbd / 2.0) - 0.5) / std::sqrt(var);
  r.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

}  // namespace neovitals
