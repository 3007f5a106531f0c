#pragma once

#include <span>
#include <string>
#include <vector>

#include "neovitals/core.hpp"

namespace neovitals {

struct PairedSamples {
  std::vector<double> time;       // start of the lower-rate period
  std::vector<double> candidate;
  std::vector<double> reference;
  std::size_t dropped = 0;        // periods with either side missing

  std::size_t size() const { return time.size(); }
};

/// Block-averages the higher-rate series over each period [t_j, t_j + 1/r) of the
/// lower-rate one. Throws ContractError("no overlap") when the spans are disjoint.
PairedSamples align(const SampledSeries& candidate, const SampledSeries& reference);

/// Coverage threshold. Percent widths are relative to the reference value.
struct CpThreshold {
  double width = 0.0;
  bool percent = false;

  std::string label() const;
  bool operator==(const CpThreshold&) const = default;
};

enum class Vital { rr, tv, hr, spo2 };

std::string_view to_string(Vital v);
Vital vital_from_string(std::string_view s);
std::vector<CpThreshold> default_cp_thresholds(Vital v);

struct BlandAltmanPoint {
  double mean = 0.0;
  double diff = 0.0;  // candidate - reference
};

struct AgreementReport {
  double mae = 0.0;
  double mse = 0.0;
  double bias = 0.0;
  double sd_diff = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::size_t n = 0;
  std::vector<std::pair<CpThreshold, double>> cp;
  std::vector<BlandAltmanPoint> bland_altman;
};

AgreementReport agreement(std::span<const double> candidate, std::span<const double> reference,
                          std::span<const CpThreshold> thresholds = {});
AgreementReport agreement(const PairedSamples& pairs, std::span<const CpThreshold> thresholds = {});

enum class MannWhitneyMethod { automatic, exact, asymptotic };

struct MannWhitneyResult {
  double u = 0.0;  // rank sum of group a minus n_a (n_a + 1) / 2
  double p = 1.0;
  bool exact = false;
};

/// Two-sided test. Exact permutation distribution of the midrank sum when
/// n_a n_b <= 400, tie-corrected normal approximation with continuity correction otherwise.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 MannWhitneyMethod method = MannWhitneyMethod::automatic);

}  // namespace neovitals
