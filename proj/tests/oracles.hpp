#pragma once

// Brute-force reference implementations used by the tests. They share no code
// with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "srprom/types.hpp"

namespace oracle {

using srprom::BinaryMask;
using srprom::ImageBuffer;

inline int reflect(int i, int n) {
  // ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// --- structuring elements and morphology ----------------------------------

inline std::vector<std::pair<int, int>> square_offsets(int size) {
  std::vector<std::pair<int, int>> o;
  const int lo = -(size / 2);
  const int hi = size % 2 ? size / 2 : size / 2 - 1;
  for (int dy = lo; dy <= hi; ++dy)
    for (int dx = lo; dx <= hi; ++dx) o.push_back({dx, dy});
  return o;
}

inline std::vector<std::pair<int, int>> disk_offsets(int diameter) {
  std::vector<std::pair<int, int>> o;
  const int r = diameter;  // generous scan range
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (4 * (dx * dx + dy * dy) <= diameter * diameter) o.push_back({dx, dy});
  return o;
}

inline BinaryMask dilate(const BinaryMask& m, const std::vector<std::pair<int, int>>& se) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool hit = false;
      for (auto [dx, dy] : se)
        if (m.get_or_false(x - dx, y - dy)) {
          hit = true;
          break;
        }
      out.set(x, y, hit);
    }
  return out;
}

inline BinaryMask erode(const BinaryMask& m, const std::vector<std::pair<int, int>>& se) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (auto [dx, dy] : se)
        if (!m.get_or_false(x + dx, y + dy)) {
          all = false;
          break;
        }
      out.set(x, y, all);
    }
  return out;
}

inline BinaryMask open(const BinaryMask& m, const std::vector<std::pair<int, int>>& se) { return dilate(erode(m, se), se); }
inline BinaryMask close(const BinaryMask& m, const std::vector<std::pair<int, int>>& se) { return erode(dilate(m, se), se); }

/// open(square 25) -> dilate(disk 64) -> close(square 25); empty result means nothing to show.
inline BinaryMask prep_view(const BinaryMask& m) {
  const auto sq = square_offsets(25);
  const auto opened = open(m, sq);
  if (opened.empty()) return opened;
  return close(dilate(opened, disk_offsets(64)), sq);
}

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  BinaryMask m(w, h);
  std::bernoulli_distribution b(density);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, b(rng));
  return m;
}

// --- connected components (stack flood fill, 8-connectivity) ---------------

struct Labels {
  std::vector<int> labels;
  int count = 0;
};

inline Labels flood_fill(const BinaryMask& m) {
  Labels out;
  out.labels.assign(static_cast<std::size_t>(m.width()) * m.height(), 0);
  auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * m.width() + x; };
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y) || out.labels[idx(x, y)]) continue;
      ++out.count;
      std::vector<std::pair<int, int>> stack{{x, y}};
      out.labels[idx(x, y)] = out.count;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!m.get_or_false(nx, ny) || out.labels[idx(nx, ny)]) continue;
            out.labels[idx(nx, ny)] = out.count;
            stack.push_back({nx, ny});
          }
      }
    }
  return out;
}

// --- scalar fields ---------------------------------------------------------

/// Two-pass population variance of every n x n reflected window.
inline std::vector<double> local_variance(const std::vector<double>& f, int w, int h, int n) {
  std::vector<double> out(f.size());
  const int r = n / 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double mean = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) mean += f[static_cast<std::size_t>(reflect(y + dy, h)) * w + reflect(x + dx, w)];
      mean /= static_cast<double>(n) * n;
      double var = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double d = f[static_cast<std::size_t>(reflect(y + dy, h)) * w + reflect(x + dx, w)] - mean;
          var += d * d;
        }
      out[static_cast<std::size_t>(y) * w + x] = var / (static_cast<double>(n) * n);
    }
  return out;
}

inline double variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

/// Dense 2-D Gaussian of radius ceil(3 sigma), normalized over the square window.
inline std::vector<double> dense_gaussian(const std::vector<double>& f, int w, int h, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const int side = 2 * r + 1;
  std::vector<double> k(static_cast<std::size_t>(side) * side);
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>(dy + r) * side + (dx + r)] = v;
      total += v;
    }
  for (double& v : k) v /= total;
  std::vector<int> rx(static_cast<std::size_t>(w + 2 * r));
  std::vector<int> ry(static_cast<std::size_t>(h + 2 * r));
  for (int i = 0; i < w + 2 * r; ++i) rx[static_cast<std::size_t>(i)] = reflect(i - r, w);
  for (int i = 0; i < h + 2 * r; ++i) ry[static_cast<std::size_t>(i)] = reflect(i - r, h);
  std::vector<double> out(f.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < side; ++dy) {
        const double* row = f.data() + static_cast<std::size_t>(ry[static_cast<std::size_t>(y + dy)]) * w;
        const double* kr = k.data() + static_cast<std::size_t>(dy) * side;
        for (int dx = 0; dx < side; ++dx) acc += kr[dx] * row[rx[static_cast<std::size_t>(x + dx)]];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

inline std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> out(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double v = img.at(x, y, 0);
      if (img.channels() == 3) {
        v = 0.299 * static_cast<double>(img.at(x, y, 0)) + 0.587 * static_cast<double>(img.at(x, y, 1)) +
            0.114 * static_cast<double>(img.at(x, y, 2));
        v = static_cast<float>(std::clamp(v, 0.0, 1.0));  // luma is stored as a float image
      }
      out[static_cast<std::size_t>(y) * img.width() + x] = v;
    }
  return out;
}

/// SSIM with explicit Gaussian-weighted window statistics (sigma 1.5, 11 x 11).
inline std::vector<double> ssim(const ImageBuffer& a, const ImageBuffer& b) {
  const int w = a.width();
  const int h = a.height();
  const auto x = luma(a);
  const auto y = luma(b);
  const double sigma = 1.5;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  std::vector<double> out(x.size());
  for (int py = 0; py < h; ++py)
    for (int px = 0; px < w; ++px) {
      double sw = 0, mx = 0, my = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double g = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
          const std::size_t q = static_cast<std::size_t>(reflect(py + dy, h)) * w + reflect(px + dx, w);
          sw += g;
          mx += g * x[q];
          my += g * y[q];
        }
      mx /= sw;
      my /= sw;
      double vx = 0, vy = 0, cxy = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double g = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / sw;
          const std::size_t q = static_cast<std::size_t>(reflect(py + dy, h)) * w + reflect(px + dx, w);
          vx += g * (x[q] - mx) * (x[q] - mx);
          vy += g * (y[q] - my) * (y[q] - my);
          cxy += g * (x[q] - mx) * (y[q] - my);
        }
      out[static_cast<std::size_t>(py) * w + px] =
          ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  return out;
}

/// Step-by-step ssm_jup: residual, windowed variance, global scaling, smoothing, difference.
inline std::vector<double> ssm_jup(const ImageBuffer& ref, const ImageBuffer& sr, const ImageBuffer& bic) {
  const int w = ref.width();
  const int h = ref.height();
  auto scaled = [&](const ImageBuffer& img) {
    std::vector<double> res(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          res[static_cast<std::size_t>(y) * w + x] +=
              std::fabs(static_cast<double>(img.at(x, y, c)) - static_cast<double>(ref.at(x, y, c)));
    auto m = local_variance(res, w, h, 33);
    const double g = std::pow(variance(res), 1.0 / 5.0);
    for (double& v : m) v *= g;
    return m;
  };
  const auto a = dense_gaussian(scaled(sr), w, h, 33.0);
  const auto b = dense_gaussian(scaled(bic), w, h, 33.0);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

/// Pixel field of a block grid: mean of covering blocks; along an axis with
/// no covering block, the nearest block (lower index on ties).
inline std::vector<double> expand_grid(const std::vector<double>& scores, int cols, int rows, int block, int stride,
                                       int w, int h) {
  auto cover = [&](int p, int count) {
    std::vector<int> out;
    for (int i = 0; i < count; ++i)
      if (p >= i * stride && p < i * stride + block) out.push_back(i);
    if (out.empty()) {
      int best = 0;
      int best_d = 1 << 30;
      for (int i = 0; i < count; ++i) {
        const int a = i * stride;
        const int b = a + block - 1;
        const int d = p < a ? a - p : (p > b ? p - b : 0);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      out.push_back(best);
    }
    return out;
  };
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto cs = cover(x, cols);
      const auto rs = cover(y, rows);
      double s = 0;
      for (int r : rs)
        for (int c : cs) s += scores[static_cast<std::size_t>(r) * cols + c];
      out[static_cast<std::size_t>(y) * w + x] = s / static_cast<double>(cs.size() * rs.size());
    }
  return out;
}

/// Tolerance-coverage edge F1 inside one block.
inline double edge_f1(const std::vector<std::uint8_t>& ref, const std::vector<std::uint8_t>& test, int block, int tol) {
  auto covered = [&](const std::vector<std::uint8_t>& from, const std::vector<std::uint8_t>& to) {
    int n = 0, hit = 0;
    for (int y = 0; y < block; ++y)
      for (int x = 0; x < block; ++x) {
        if (!from[static_cast<std::size_t>(y) * block + x]) continue;
        ++n;
        bool found = false;
        for (int yy = 0; yy < block && !found; ++yy)
          for (int xx = 0; xx < block && !found; ++xx)
            if (to[static_cast<std::size_t>(yy) * block + xx] && std::abs(xx - x) <= tol && std::abs(yy - y) <= tol)
              found = true;
        hit += found;
      }
    return std::pair<int, int>{hit, n};
  };
  const auto [tp_test, n_test] = covered(test, ref);
  const auto [tp_ref, n_ref] = covered(ref, test);
  if (n_test == 0 && n_ref == 0) return 1.0;
  if (n_test == 0 || n_ref == 0) return 0.0;
  const double p = static_cast<double>(tp_test) / n_test;
  const double r = static_cast<double>(tp_ref) / n_ref;
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

// --- statistics ------------------------------------------------------------

/// Rank_i = 1 + #{j: v_j < v_i} + (#{j: v_j == v_i} - 1) / 2.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      less += v[j] < v[i];
      equal += v[j] == v[i];
    }
    r[i] = 1.0 + static_cast<double>(less) + 0.5 * static_cast<double>(equal - 1);
  }
  return r;
}

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

inline std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return std::nullopt;
  return pearson(average_ranks(a), average_ranks(b));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Catmull-Rom resampling evaluated pixel by pixel from the definition.
inline double bicubic_sample(const ImageBuffer& img, int ox, int oy, int c, int dw, int dh) {
  auto kernel = [](double t) {
    t = std::fabs(t);
    const double a = -0.5;
    if (t <= 1) return (a + 2) * t * t * t - (a + 3) * t * t + 1;
    if (t < 2) return a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a;
    return 0.0;
  };
  const double sx = (ox + 0.5) * img.width() / static_cast<double>(dw) - 0.5;
  const double sy = (oy + 0.5) * img.height() / static_cast<double>(dh) - 0.5;
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  double acc = 0.0;
  for (int j = -1; j <= 2; ++j)
    for (int i = -1; i <= 2; ++i) {
      const int xi = std::clamp(x0 + i, 0, img.width() - 1);
      const int yi = std::clamp(y0 + j, 0, img.height() - 1);
      acc += kernel(sx - (x0 + i)) * kernel(sy - (y0 + j)) * img.at(xi, yi, c);
    }
  return std::clamp(acc, 0.0, 1.0);
}

/// Highest-prominence record per (sr, source); ties go to the smaller metric id, then the earlier record.
inline std::map<std::pair<std::string, std::string>, srprom::ArtifactRecord> group_max(
    const std::vector<srprom::ArtifactRecord>& records) {
  std::map<std::pair<std::string, std::string>, srprom::ArtifactRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.prominence) continue;
    const std::pair<std::string, std::string> key{r.sr, r.source};
    if (out.count(key)) continue;
    std::size_t best = i;
    for (std::size_t j = 0; j < records.size(); ++j) {
      const auto& s = records[j];
      if (!s.prominence || s.sr != r.sr || s.source != r.source) continue;
      const auto& b = records[best];
      if (*s.prominence > *b.prominence || (*s.prominence == *b.prominence && s.metric < b.metric) ||
          (*s.prominence == *b.prominence && s.metric == b.metric && j < best))
        best = j;
    }
    out[key] = records[best];
  }
  return out;
}

// --- MLP -------------------------------------------------------------------

/// Plain matrices: W[l][o][i], b[l][o].
struct Mlp {
  std::vector<std::vector<std::vector<double>>> W;
  std::vector<std::vector<double>> b;

  double forward(std::vector<double> a) const {
    for (std::size_t l = 0; l < W.size(); ++l) {
      std::vector<double> z(W[l].size());
      for (std::size_t o = 0; o < W[l].size(); ++o) {
        z[o] = b[l][o];
        for (std::size_t i = 0; i < a.size(); ++i) z[o] += W[l][o][i] * a[i];
        if (l + 1 < W.size()) z[o] = std::max(0.0, z[o]);
      }
      a = z;
    }
    return a[0];
  }
};

}  // namespace oracle
