#pragma once

#include <span>
#include <string>
#include <vector>

#include "hepforest/boosting.hpp"
#include "hepforest/metrics.hpp"

namespace hepforest {

// Shortest text that parses back to the same double; "nan" for NaN.
std::string format_double(double v);

// percentile,threshold,shat,bhat,ams,ams_simple
void write_curve_csv(const std::string& path, const metrics::SignificanceCurve& curve);

// fpr,tpr
void write_roc_csv(const std::string& path, std::span<const metrics::RocPoint> roc);

// stage,bin_lo,bin_hi,count_s,count_b,wsum_s,wsum_b
void write_staged_histogram_csv(const std::string& path, std::span<const StageDiagnostics> diags);

// stage,fp_count,fp_wsum
void write_staged_fp_csv(const std::string& path, std::span<const StageDiagnostics> diags);

// Square matrix; header and first column are the tree indices.
void write_correlation_csv(const std::string& path, std::span<const std::size_t> tree_indices,
                           const std::vector<std::vector<double>>& matrix);

}  // namespace hepforest
