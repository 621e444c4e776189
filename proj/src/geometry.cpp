#include "affdim/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "affdim/error.hpp"
#include "affdim/kernels.hpp"

namespace affdim {

namespace {

constexpr std::size_t kMaxGridDim = 4;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double spectral_norm(const Matrix& m) { return std::exp(singular_spectrum(m).log_alphas.front()); }

}  // namespace

void AffineIFS::validate() const {
  if (matrices.empty()) throw Error(ErrorCode::InvalidArgument, "no maps");
  if (translations.size() != matrices.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one translation per map expected");
  }
  const std::size_t d = dim();
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (matrices[i].dim() != d || translations[i].size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "map " + std::to_string(i) + " has the wrong dimension");
    }
    const double a = spectral_norm(matrices[i]);
    if (!(a < 1.0)) {
      throw Error(ErrorCode::NonContractive, "map " + std::to_string(i) + " has norm " + std::to_string(a));
    }
  }
}

double AffineIFS::alpha_max() const {
  double a = 0.0;
  for (const auto& m : matrices) a = std::max(a, spectral_norm(m));
  return a;
}

double AffineIFS::a_priori_radius() const {
  double r = 0.0;
  for (const auto& t : translations) r = std::max(r, norm(t));
  return r / (1.0 - alpha_max());
}

std::vector<double> project(std::span<const Letter> w, const AffineIFS& ifs) {
  const std::size_t d = ifs.dim();
  std::vector<double> x(d, 0.0);
  for (std::size_t k = w.size(); k-- > 0;) {
    const Letter a = w[k];
    if (a >= ifs.size()) throw Error(ErrorCode::LetterOutOfRange, "letter " + std::to_string(a));
    x = ifs.matrices[a].apply(x);
    for (std::size_t j = 0; j < d; ++j) x[j] += ifs.translations[a][j];
  }
  return x;
}

CylinderImage cylinder_image(std::span<const Letter> w, const AffineIFS& ifs) {
  CylinderImage img;
  img.word.assign(w.begin(), w.end());
  img.anchor = project(w, ifs);
  const double top = w.empty() ? 0.0 : singular_spectrum(word_product(w, ifs.matrices)).log_alphas.front();
  img.radius = std::exp(top) * ifs.a_priori_radius();
  return img;
}

PointCloud attractor_sample(std::size_t n, const AffineIFS& ifs, const SubshiftAutomaton& automaton,
                            const SampleOptions& options) {
  ifs.validate();
  if (ifs.size() != automaton.alphabet_size()) {
    throw Error(ErrorCode::DimensionMismatch, "IFS and subshift alphabets differ");
  }
  std::uint64_t words = 0;
  try {
    words = automaton.count(n);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CountOverflow) throw;
    words = std::numeric_limits<std::uint64_t>::max();
  }
  if (words > options.max_words) {
    throw Error(ErrorCode::DepthBudgetExceeded, "#K_" + std::to_string(n) + " exceeds the budget of " +
                                                    std::to_string(options.max_words) + " points");
  }

  const std::size_t d = ifs.dim();
  PointCloud cloud;
  cloud.dim = d;
  cloud.depth = n;
  cloud.resolution = std::pow(ifs.alpha_max(), static_cast<double>(n)) * ifs.a_priori_radius();
  cloud.coords.reserve(static_cast<std::size_t>(words) * d);

  // f_w = (M, b) along the current path; f_{wa} = (M A_a, M a_a + b)
  std::vector<Matrix> linear(n + 1);
  std::vector<std::vector<double>> offset(n + 1, std::vector<double>(d, 0.0));
  std::vector<std::int32_t> nodes(n + 1);
  std::vector<Letter> letters(n + 1, 0);
  linear[0] = Matrix::identity(d);
  nodes[0] = automaton.root();
  if (n == 0) {
    cloud.coords.assign(d, 0.0);
    return cloud;
  }
  const std::size_t k = automaton.alphabet_size();
  std::size_t depth = 0;
  while (true) {
    Letter a = letters[depth];
    while (a < k && automaton.next(nodes[depth], a) == SubshiftAutomaton::kNone) ++a;
    if (a == k) {
      if (depth == 0) break;
      --depth;
      ++letters[depth];
      continue;
    }
    letters[depth] = a;
    const auto shift = linear[depth].apply(ifs.translations[a]);
    for (std::size_t j = 0; j < d; ++j) offset[depth + 1][j] = offset[depth][j] + shift[j];
    if (depth + 1 == n) {
      cloud.coords.insert(cloud.coords.end(), offset[n].begin(), offset[n].end());
      ++letters[depth];
      continue;
    }
    linear[depth + 1] = linear[depth] * ifs.matrices[a];
    nodes[depth + 1] = automaton.next(nodes[depth], a);
    ++depth;
    letters[depth] = 0;
  }
  return cloud;
}

BoxCountReport box_count(const PointCloud& cloud, const BoxCountOptions& options) {
  const std::size_t count = cloud.size();
  const std::size_t d = cloud.dim;
  if (count == 0) throw Error(ErrorCode::TooFewPoints, "empty point cloud");
  if (d > kMaxGridDim) throw Error(ErrorCode::DimensionMismatch, "box counting supports d <= 4");

  // coordinate columns for the cell kernel
  std::vector<std::vector<double>> columns(d, std::vector<double>(count));
  double extent = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < count; ++i) columns[j][i] = cloud.coords[i * d + j];
    const auto [lo, hi] = std::minmax_element(columns[j].begin(), columns[j].end());
    extent = std::max(extent, *hi - *lo);
  }

  const double finest = 4.0 * cloud.resolution;
  BoxCountReport report;
  if (options.scales.empty()) {
    for (int e = static_cast<int>(std::floor(std::log2(std::max(extent, finest)))); ; --e) {
      const double eps = std::ldexp(1.0, e);
      if (eps < finest) break;
      if (eps <= extent) report.scales.push_back(eps);
      if (e < -1000) break;
    }
  } else {
    report.scales = options.scales;
    std::sort(report.scales.begin(), report.scales.end(), std::greater<>());
    for (double eps : report.scales) {
      if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "scales must be positive");
      if (eps < finest) {
        throw Error(ErrorCode::ScaleTooFine, "scale " + std::to_string(eps) + " is below 4 * resolution = " +
                                                 std::to_string(finest));
      }
    }
  }
  if (report.scales.size() < 2) {
    throw Error(ErrorCode::ScaleTooFine, "fewer than two usable scales; sample deeper");
  }

  std::vector<double> cell(count);
  std::vector<std::array<std::int64_t, kMaxGridDim>> keys(count);
  for (double eps : report.scales) {
    for (auto& key : keys) key.fill(0);
    for (std::size_t j = 0; j < d; ++j) {
      kernels::cell_floor(columns[j], 0.0, 1.0 / eps, cell);
      for (std::size_t i = 0; i < count; ++i) keys[i][j] = static_cast<std::int64_t>(cell[i]);
    }
    std::sort(keys.begin(), keys.end());
    report.counts.push_back(
        static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin()));
  }

  const std::size_t m = report.scales.size();
  if (options.window) {
    report.window_begin = options.window->first;
    report.window_end = options.window->second;
    if (report.window_end > m || report.window_end < report.window_begin + 2) {
      throw Error(ErrorCode::InvalidArgument, "regression window needs two scales inside the list");
    }
  } else if (m < 4) {
    report.window_begin = 0;
    report.window_end = m;
  } else {
    report.window_begin = m / 4;
    report.window_end = m - m / 4;
  }

  const std::size_t used = report.window_end - report.window_begin;
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = report.window_begin; i < report.window_end; ++i) {
    sx += -std::log(report.scales[i]);
    sy += std::log(static_cast<double>(report.counts[i]));
  }
  const double mx = sx / static_cast<double>(used), my = sy / static_cast<double>(used);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = report.window_begin; i < report.window_end; ++i) {
    const double x = -std::log(report.scales[i]) - mx;
    const double y = std::log(static_cast<double>(report.counts[i])) - my;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  report.slope = sxy / sxx;
  report.intercept = my - report.slope * mx;
  report.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return report;
}

HyperplaneReport hyperplane_check(const PointCloud& cloud) {
  const std::size_t count = cloud.size();
  const std::size_t d = cloud.dim;
  if (count == 0) throw Error(ErrorCode::TooFewPoints, "empty point cloud");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += cloud.coords[i * d + j];
  for (double& m : mean) m /= static_cast<double>(count);

  Matrix scatter(d);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = cloud.coords[i * d + a] - mean[a];
      for (std::size_t b = a; b < d; ++b) scatter(a, b) += xa * (cloud.coords[i * d + b] - mean[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < a; ++b) scatter(a, b) = scatter(b, a);

  HyperplaneReport report;
  for (double ev : symmetric_eigenvalues(scatter)) report.singular_values.push_back(std::sqrt(std::max(ev, 0.0)));
  const double top = report.singular_values.empty() ? 0.0 : report.singular_values.front();
  for (double s : report.singular_values) {
    if (top > 0.0 && s > 1e-8 * top) ++report.rank;
  }
  report.contained = report.rank < d;
  return report;
}

InclusionReport inclusion_check(const PointCloud& cloud, const AffineIFS& ifs, double tolerance) {
  ifs.validate();
  const std::size_t count = cloud.size();
  const std::size_t d = cloud.dim;
  if (count == 0) throw Error(ErrorCode::TooFewPoints, "empty point cloud");
  if (d != ifs.dim()) throw Error(ErrorCode::DimensionMismatch, "cloud and IFS dimensions differ");

  // images sorted by first coordinate; nearest neighbour by a sweep outward
  std::vector<double> images;
  images.reserve(count * ifs.size() * d);
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    for (std::size_t p = 0; p < count; ++p) {
      auto y = ifs.matrices[i].apply(cloud.point(p));
      for (std::size_t j = 0; j < d; ++j) images.push_back(y[j] + ifs.translations[i][j]);
    }
  }
  const std::size_t total = images.size() / d;
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return images[a * d] < images[b * d]; });
  std::vector<double> lead(total);
  for (std::size_t i = 0; i < total; ++i) lead[i] = images[order[i] * d];

  auto dist2 = [&](std::span<const double> x, std::size_t img) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - images[img * d + j];
      s += diff * diff;
    }
    return s;
  };

  InclusionReport report;
  for (std::size_t p = 0; p < count; ++p) {
    const auto x = cloud.point(p);
    const auto start = static_cast<std::size_t>(std::lower_bound(lead.begin(), lead.end(), x[0]) - lead.begin());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = start; i < total; ++i) {
      const double dx = lead[i] - x[0];
      if (dx * dx >= best) break;
      best = std::min(best, dist2(x, order[i]));
    }
    for (std::size_t i = start; i-- > 0;) {
      const double dx = x[0] - lead[i];
      if (dx * dx >= best) break;
      best = std::min(best, dist2(x, order[i]));
    }
    const double defect = std::sqrt(best);
    if (defect > report.max_defect) {
      report.max_defect = defect;
      report.worst_point = p;
    }
  }
  report.bound = tolerance + 2.0 * std::pow(ifs.alpha_max(), static_cast<double>(cloud.depth)) * ifs.a_priori_radius();
  report.within = report.max_defect <= report.bound;
  return report;
}

}  // namespace affdim
