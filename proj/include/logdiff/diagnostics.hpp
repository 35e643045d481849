// Per-step diagnostics records produced by evolutions and consumed by the
// contraction / envelope checks. Missing quantities are NaN, which the CSV
// writer renders as empty fields (not zeros).
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "logdiff/errors.hpp"

namespace logdiff {

struct DiagnosticsRecord {
  static constexpr double missing = std::numeric_limits<double>::quiet_NaN();

  double clock = missing;
  double dt_used = missing;
  double l1_dist = missing;
  double weighted_l1_dist = missing;
  double sup_dist = missing;
  double sandwich_margin_low = missing;
  double sandwich_margin_high = missing;
  double mass_mismatch = missing;
  double ab_violation = missing;
  double coeff_bound_margin = missing;
};

class DiagnosticsSeries {
 public:
  void append(const DiagnosticsRecord& rec) {
    if (!std::isfinite(rec.clock)) throw Error("diagnostics record needs a clock");
    if (!records_.empty() && !(rec.clock > records_.back().clock))
      throw Error("diagnostics clocks must be strictly increasing");
    auto nonneg = [](double x) { return std::isnan(x) || x >= 0.0; };
    if (!nonneg(rec.l1_dist) || !nonneg(rec.weighted_l1_dist) || !nonneg(rec.sup_dist))
      throw Error("diagnostics distances must be non-negative");
    records_.push_back(rec);
  }

  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<DiagnosticsRecord> records_;
};

}  // namespace logdiff
