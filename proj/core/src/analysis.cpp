#include "jecrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jecrl/error.hpp"
#include "jecrl/fsio.hpp"

namespace jecrl {

namespace {

// Full cross-correlation of an 8×8 block response B with filter F:
// C[r,s] = Σ_{p,q} B[p+r−fh+1, q+s−fw+1] · F[p,q], size (8+fh−1)×(8+fw−1).
RealGrid full_correlation(const RealGrid& b, const RealGrid& f) {
  const int fh = f.height(), fw = f.width();
  RealGrid c(8 + fh - 1, 8 + fw - 1);
  for (int r = 0; r < c.height(); ++r)
    for (int s = 0; s < c.width(); ++s) {
      double acc = 0.0;
      for (int p = 0; p < fh; ++p) {
        const int i = p + r - fh + 1;
        if (i < 0 || i >= 8) continue;
        for (int q = 0; q < fw; ++q) {
          const int j = q + s - fw + 1;
          if (j < 0 || j >= 8) continue;
          acc += b.at(i, j) * f.at(p, q);
        }
      }
      c.at(r, s) = acc;
    }
  return c;
}

// Inclusive 2D prefix sums of |C| for O(1) clipped-window sums.
RealGrid abs_prefix(const RealGrid& c) {
  RealGrid p(c.height() + 1, c.width() + 1);
  p.fill(0.0);
  for (int i = 0; i < c.height(); ++i)
    for (int j = 0; j < c.width(); ++j)
      p.at(i + 1, j + 1) = std::abs(c.at(i, j)) + p.at(i, j + 1) +
                           p.at(i + 1, j) - p.at(i, j);
  return p;
}

}  // namespace

PixelPlane filter_residual(const PixelPlane& pixels, const RealGrid& filter) {
  const int fh = filter.height(), fw = filter.width();
  const int ch = fh / 2, cw = fw / 2;
  PixelPlane out(pixels.height(), pixels.width());
  for (int i = 0; i < out.height(); ++i)
    for (int j = 0; j < out.width(); ++j) {
      double acc = 0.0;
      for (int p = 0; p < fh; ++p) {
        const int ii = i + p - ch;
        if (ii < 0 || ii >= pixels.height()) continue;
        for (int q = 0; q < fw; ++q) {
          const int jj = j + q - cw;
          if (jj < 0 || jj >= pixels.width()) continue;
          acc += filter.at(p, q) * pixels.at(ii, jj);
        }
      }
      out.at(i, j) = acc;
    }
  return out;
}

std::vector<AccumGradMatrix> accum_grad_matrices(const JpegImage& image,
                                                 const FilterBank& bank,
                                                 const AnalysisOptions& opt) {
  image.validate();
  const int h = image.height, w = image.width;
  const DctBasisBank& basis = dct_basis();

  // Truncation mask: gradient passes only strictly inside (−T, T).
  Grid<uint8_t> pass(1, 1);
  if (opt.include_truncation) pass = Grid<uint8_t>(h, w);

  std::vector<AccumGradMatrix> out;
  out.reserve(bank.filters.size());
  PixelPlane pixels;
  if (opt.include_truncation) pixels = decompress(image);

  for (size_t fidx = 0; fidx < bank.filters.size(); ++fidx) {
    const RealGrid& f = bank.filters[fidx];
    const int fh = f.height(), fw = f.width();
    const int ch = fh / 2, cw = fw / 2;
    if (opt.include_truncation) {
      const PixelPlane res = filter_residual(pixels, f);
      for (size_t i = 0; i < res.size(); ++i)
        pass[i] = std::abs(res[i]) < opt.truncation ? 1 : 0;
    }

    AccumGradMatrix m;
    m.filter_label = bank.name + "." + std::to_string(fidx);
    m.e = RealGrid(8, 8);
    for (int k = 0; k < 8; ++k)
      for (int l = 0; l < 8; ++l) {
        RealGrid b(8, 8);
        const double step = image.table.at(k, l);
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) b.at(i, j) = step * basis.z(k, l, i, j);
        const RealGrid c = full_correlation(b, f);
        double total = 0.0;
        if (!opt.include_truncation) {
          const RealGrid prefix = abs_prefix(c);
          for (int a = 0; a < h / 8; ++a) {
            const int i0 = 8 * a + ch - fh + 1;
            const int r0 = std::max(0, -i0);
            const int r1 = std::min(c.height() - 1, h - 1 - i0);
            if (r0 > r1) continue;
            for (int bb = 0; bb < w / 8; ++bb) {
              const int j0 = 8 * bb + cw - fw + 1;
              const int s0 = std::max(0, -j0);
              const int s1 = std::min(c.width() - 1, w - 1 - j0);
              if (s0 > s1) continue;
              total += prefix.at(r1 + 1, s1 + 1) - prefix.at(r0, s1 + 1) -
                       prefix.at(r1 + 1, s0) + prefix.at(r0, s0);
            }
          }
        } else {
          for (int a = 0; a < h / 8; ++a)
            for (int bb = 0; bb < w / 8; ++bb) {
              const int i0 = 8 * a + ch - fh + 1;
              const int j0 = 8 * bb + cw - fw + 1;
              for (int r = 0; r < c.height(); ++r) {
                const int i = i0 + r;
                if (i < 0 || i >= h) continue;
                for (int s = 0; s < c.width(); ++s) {
                  const int j = j0 + s;
                  if (j < 0 || j >= w) continue;
                  if (pass.at(i, j)) total += std::abs(c.at(r, s));
                }
              }
            }
        }
        m.e.at(k, l) = total;
      }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<AccumGradMatrix> accum_grad_matrices(
    const std::vector<const JpegImage*>& images, const FilterBank& bank,
    const AnalysisOptions& opt) {
  if (images.empty()) throw DataError("empty image set");
  std::vector<AccumGradMatrix> mean;
  for (size_t n = 0; n < images.size(); ++n) {
    std::vector<AccumGradMatrix> one = accum_grad_matrices(*images[n], bank, opt);
    if (n == 0) {
      mean = std::move(one);
    } else {
      for (size_t f = 0; f < mean.size(); ++f)
        for (size_t i = 0; i < 64; ++i) mean[f].e[i] += one[f].e[i];
    }
  }
  for (AccumGradMatrix& m : mean)
    for (double& v : m.e) v /= static_cast<double>(images.size());
  return mean;
}

RealGrid normalize_matrix(const RealGrid& e) {
  const auto [lo_it, hi_it] = std::minmax_element(e.begin(), e.end());
  const double lo = *lo_it, hi = *hi_it;
  RealGrid out(e.height(), e.width());
  if (hi > lo)
    for (size_t i = 0; i < e.size(); ++i) out[i] = (e[i] - lo) / (hi - lo);
  return out;
}

TopNStats top_n_stats(const std::vector<AccumGradMatrix>& matrices) {
  if (matrices.empty()) throw DataError("top_n_stats needs at least one matrix");
  // Per matrix: rank 1..64 by descending value, ties to the smaller (k,l).
  std::vector<Grid<int>> orders;
  for (const AccumGradMatrix& m : matrices) {
    std::vector<int> idx(64);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (m.e[a] != m.e[b]) return m.e[a] > m.e[b];
      return a < b;
    });
    Grid<int> o(8, 8);
    for (int rank = 0; rank < 64; ++rank) o[idx[rank]] = rank + 1;
    orders.push_back(std::move(o));
  }

  TopNStats stats;
  for (int n = 0; n <= 64; ++n) {
    Grid<int> r(8, 8);
    r.fill(0);
    for (const Grid<int>& o : orders)
      for (int i = 0; i < 64; ++i) r[i] += o[i] <= n;
    int s = 0;
    for (int i = 0; i < 64; ++i) s += r[i] > 0;
    stats.rate.push_back(std::move(r));
    stats.s.push_back(s);
  }
  return stats;
}

std::string sn_csv(const std::vector<std::pair<std::string, TopNStats>>& banks) {
  std::ostringstream os;
  os << "n";
  for (const auto& [name, _] : banks) os << ",s_" << name;
  os << "\n";
  for (int n = 0; n <= 64; ++n) {
    os << n;
    for (const auto& [_, st] : banks) os << "," << st.s[static_cast<size_t>(n)];
    os << "\n";
  }
  return os.str();
}

double detection_error(const std::vector<double>& cover_scores,
                       const std::vector<double>& stego_scores) {
  if (cover_scores.empty() || stego_scores.empty())
    throw DataError("detection_error needs nonempty score lists");
  // Decision "stego iff score > τ"; sweep τ over every score plus the two
  // degenerate extremes (all-stego / all-cover).
  std::vector<double> thresholds = cover_scores;
  thresholds.insert(thresholds.end(), stego_scores.begin(), stego_scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const double nc = static_cast<double>(cover_scores.size());
  const double ns = static_cast<double>(stego_scores.size());
  double best = 0.5;  // τ = +∞: everything called cover (P_FA=0, P_MD=1)
  const auto rate_at = [&](double tau) {
    double fa = 0, md = 0;
    for (double c : cover_scores) fa += c > tau;
    for (double s : stego_scores) md += s <= tau;
    return (fa / nc + md / ns) / 2.0;
  };
  for (double tau : thresholds) best = std::min(best, rate_at(tau));
  // τ just below the minimum score: everything called stego.
  best = std::min(best, rate_at(thresholds.front() - 1.0));
  return best;
}

void write_pgm(const std::string& path, const Grid<uint8_t>& img) {
  std::string data = "P5\n" + std::to_string(img.width()) + " " +
                     std::to_string(img.height()) + "\n255\n";
  data.append(reinterpret_cast<const char*>(img.data()), img.size());
  write_file_atomic(path, data);
}

Grid<uint8_t> read_pgm(const std::string& path) {
  const std::vector<uint8_t> raw = read_file(path);
  const std::string data(raw.begin(), raw.end());
  std::istringstream is(data);
  std::string magic;
  long w = 0, h = 0, maxval = 0;
  // Header tokens may be separated by whitespace and '#' comment lines.
  const auto token = [&]() {
    std::string t;
    while (is >> t) {
      if (t[0] != '#') return t;
      std::string rest;
      std::getline(is, rest);
    }
    throw DataError("truncated PGM header: " + path);
  };
  magic = token();
  if (magic != "P5") throw DataError("not a binary PGM file: " + path);
  try {
    w = std::stol(token());
    h = std::stol(token());
    maxval = std::stol(token());
  } catch (const std::exception&) {
    throw DataError("malformed PGM header: " + path);
  }
  if (w <= 0 || h <= 0 || maxval != 255)
    throw DataError("unsupported PGM geometry: " + path);
  const size_t offset = static_cast<size_t>(is.tellg()) + 1;  // single ws byte
  if (data.size() < offset + static_cast<size_t>(w) * h)
    throw DataError("truncated PGM pixel data: " + path);
  Grid<uint8_t> img(static_cast<int>(h), static_cast<int>(w));
  std::copy_n(data.begin() + static_cast<long>(offset), img.size(), img.begin());
  return img;
}

Grid<uint8_t> minmax_quantize(const RealGrid& map) {
  if (map.size() == 0) throw DataError("empty map");
  const auto [lo_it, hi_it] = std::minmax_element(map.begin(), map.end());
  const double lo = *lo_it, hi = *hi_it;
  Grid<uint8_t> img(map.height(), map.width());
  if (hi > lo) {
    for (size_t i = 0; i < map.size(); ++i)
      img[i] = static_cast<uint8_t>(
          std::lround((map[i] - lo) / (hi - lo) * 255.0));
  } else {
    img.fill(128);
  }
  return img;
}

Grid<uint8_t> modification_levels(const ModificationMap& m) {
  Grid<uint8_t> img(m.height(), m.width());
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i] < -1 || m[i] > 1)
      throw DataError("modification map entries must be -1, 0 or +1");
    img[i] = m[i] < 0 ? 0 : (m[i] > 0 ? 255 : 128);
  }
  return img;
}

}  // namespace jecrl
