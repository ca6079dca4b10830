#include "pelab/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

namespace pelab {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * (i + j) + 1.0;  // average rank over the tie run
    for (int k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const int n = static_cast<int>(a.size());
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (int i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

std::vector<Vector> sphere_directions(int dim, int count) {
  std::vector<Vector> dirs;
  if (dim <= 0 || count <= 0) return dirs;
  if (dim == 1) {
    Vector p(1), m(1);
    p << 1.0;
    m << -1.0;
    dirs = {p, m};
    return dirs;
  }
  constexpr double kGolden = 0.6180339887498949;
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double frac = k * kGolden - std::floor(k * kGolden);
      const double ang = 2.0 * M_PI * (k == 0 ? 0.0 : frac);
      Vector d(2);
      d << std::cos(ang), std::sin(ang);
      dirs.push_back(d);
    }
    return dirs;
  }
  if (dim == 3) {
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double frac = k * kGolden - std::floor(k * kGolden);
      const double ang = 2.0 * M_PI * frac;
      Vector d(3);
      d << rho * std::cos(ang), rho * std::sin(ang), z;
      dirs.push_back(d);
    }
    return dirs;
  }
  // dim >= 4: axes then pair diagonals, in index order.
  for (int i = 0; i < dim && static_cast<int>(dirs.size()) < count; ++i) {
    for (int sign : {+1, -1}) {
      Vector d = Vector::Zero(dim);
      d[i] = sign;
      dirs.push_back(d);
      if (static_cast<int>(dirs.size()) >= count) break;
    }
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < dim && static_cast<int>(dirs.size()) < count; ++i) {
    for (int j = i + 1; j < dim && static_cast<int>(dirs.size()) < count; ++j) {
      for (int sj : {+1, -1}) {
        Vector d = Vector::Zero(dim);
        d[i] = inv_sqrt2;
        d[j] = sj * inv_sqrt2;
        dirs.push_back(d);
        if (static_cast<int>(dirs.size()) >= count) break;
      }
    }
  }
  return dirs;
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace pelab
