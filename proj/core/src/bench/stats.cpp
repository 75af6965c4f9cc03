#include <algorithm>
#include <cmath>
#include <tuple>

#include "apc/evaluation.hpp"

namespace apc::bench {

namespace {

std::pair<double, double> mean_and_sd(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("statistics of an empty sample");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

std::pair<double, double> mean_and_ci(const std::vector<double>& values) {
  const auto [mean, sd] = mean_and_sd(values);
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(values.size()))};
}

EvalReport EvalReport::from_returns(std::vector<double> returns) {
  EvalReport r;
  r.count = returns.size();
  std::tie(r.mean, r.std) = mean_and_sd(returns);
  r.ci_half_width = 1.96 * r.std / std::sqrt(static_cast<double>(r.count));
  r.returns = std::move(returns);
  return r;
}

std::vector<CurveBin> bin_curve(std::vector<std::pair<double, double>> points) {
  if (points.size() < kCurveBins) throw std::invalid_argument("bin_curve: need at least 10 points");
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t n = points.size();
  std::vector<CurveBin> bins;
  for (std::size_t k = 0; k < kCurveBins; ++k) {
    const std::size_t lo = k * n / kCurveBins;
    const std::size_t hi = (k + 1) * n / kCurveBins;
    std::vector<double> ys;
    for (std::size_t i = lo; i < hi; ++i) ys.push_back(points[i].second);
    const auto [mean, ci] = mean_and_ci(ys);
    bins.push_back({k, points[lo].first, points[hi - 1].first, mean, ci, hi - lo});
  }
  return bins;
}

}  // namespace apc::bench
