#include "hepforest/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace hepforest {

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_curve_csv(const std::string& path, const metrics::SignificanceCurve& curve) {
  auto out = open_csv(path);
  out << "percentile,threshold,shat,bhat,ams,ams_simple\n";
  for (const auto& p : curve.points)
    out << format_double(p.percentile) << ',' << format_double(p.threshold) << ',' << format_double(p.shat) << ','
        << format_double(p.bhat) << ',' << format_double(p.ams) << ',' << format_double(p.ams_simple) << '\n';
}

void write_roc_csv(const std::string& path, std::span<const metrics::RocPoint> roc) {
  auto out = open_csv(path);
  out << "fpr,tpr\n";
  for (const auto& p : roc) out << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
}

void write_staged_histogram_csv(const std::string& path, std::span<const StageDiagnostics> diags) {
  auto out = open_csv(path);
  out << "stage,bin_lo,bin_hi,count_s,count_b,wsum_s,wsum_b\n";
  for (const auto& d : diags)
    for (const auto& b : d.histogram)
      out << d.stage << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count_s << ','
          << b.count_b << ',' << format_double(b.wsum_s) << ',' << format_double(b.wsum_b) << '\n';
}

void write_staged_fp_csv(const std::string& path, std::span<const StageDiagnostics> diags) {
  auto out = open_csv(path);
  out << "stage,fp_count,fp_wsum\n";
  for (const auto& d : diags) out << d.stage << ',' << d.fp_count << ',' << format_double(d.fp_wsum) << '\n';
}

void write_correlation_csv(const std::string& path, std::span<const std::size_t> tree_indices,
                           const std::vector<std::vector<double>>& matrix) {
  if (matrix.size() != tree_indices.size()) throw std::invalid_argument("write_correlation_csv: size mismatch");
  auto out = open_csv(path);
  out << "tree";
  for (const auto t : tree_indices) out << ',' << t;
  out << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << tree_indices[i];
    for (const double v : matrix[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace hepforest
