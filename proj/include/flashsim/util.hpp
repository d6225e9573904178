// Small shared utilities: deterministic RNG streams, Gaussian math, CSV output.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flashsim {

using Rng = std::mt19937_64;

// Derives an independent child seed from (master, index).  SplitMix64 step,
// so sweep points get decorrelated streams regardless of index spacing.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Box-Muller without state so sequences are reproducible across platforms.
// Draws two uniforms per call; the cosine twin is discarded on purpose.
inline double sample_gaussian(Rng& rng) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double u1 = 0.0;
  do {
    u1 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  } while (u1 <= 1e-300);
  const double u2 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::sin(two_pi * u2);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double norm_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599344;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// Inverse standard normal CDF (Acklam's rational approximation refined with
// one Halley step; good to ~1e-15 over (0,1)).
inline double norm_ppf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("norm_ppf: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against erfc-based CDF.
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

// Minimal CSV emitter: one header row, then data rows.  Numeric formatting is
// fixed (max_digits10) so identical runs produce identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }

  void add_comment(const std::string& line) { comments_.push_back(line); }

  template <typename... Ts>
  void add_row(const Ts&... fields) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    ((os << (first ? "" : ",") << fields, first = false), ...);
    rows_.push_back(os.str());
  }

  std::string str() const {
    std::ostringstream os;
    for (const auto& c : comments_) os << "# " << c << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
      os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) os << r << "\n";
    return os.str();
  }

  void write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << str();
  }

  std::size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

// FNV-1a over a string; used to stamp config identity into output headers.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace flashsim
