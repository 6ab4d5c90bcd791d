#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <fmt/format.h>

#include "lamestab/errors.hpp"
#include "lamestab/geometry.hpp"

namespace lamestab {
namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Positive when d lies strictly inside the circumcircle of the
// counter-clockwise triangle (a, b, c).
double in_circle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

void push_oriented(std::vector<Triangle>& tris, const std::vector<Vec2>& v, int a, int b, int c) {
  if (orient(v[a], v[b], v[c]) < 0.0) std::swap(b, c);
  tris.push_back({a, b, c});
}

// Lawson edge flips until every interior edge is locally Delaunay.
void delaunay_flips(const std::vector<Vec2>& v, std::vector<Triangle>& tris) {
  for (int pass = 0; pass < 200; ++pass) {
    std::map<std::pair<int, int>, std::pair<int, int>> owner;  // directed edge -> (tri, local)
    for (int t = 0; t < static_cast<int>(tris.size()); ++t)
      for (int k = 0; k < 3; ++k) owner[{tris[t][k], tris[t][(k + 1) % 3]}] = {t, k};
    std::vector<char> touched(tris.size(), 0);
    int flips = 0;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      for (int k = 0; k < 3 && !touched[t]; ++k) {
        const int a = tris[t][k], b = tris[t][(k + 1) % 3], c = tris[t][(k + 2) % 3];
        auto it = owner.find({b, a});
        if (it == owner.end()) continue;
        const int u = it->second.first;
        if (touched[u]) continue;
        const int d = tris[u][(it->second.second + 2) % 3];
        if (in_circle(v[a], v[b], v[c], v[d]) <= 1e-12 * std::pow((v[a] - v[b]).squaredNorm(), 2))
          continue;
        if (orient(v[c], v[a], v[d]) <= 0.0 || orient(v[d], v[b], v[c]) <= 0.0) continue;
        tris[t] = {c, a, d};
        tris[u] = {d, b, c};
        touched[t] = touched[u] = 1;
        ++flips;
      }
    }
    if (flips == 0) return;
  }
}

double min_angle(const std::vector<Vec2>& v, const std::vector<Triangle>& tris) {
  double worst = 180.0;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) {
      const Vec2 p = v[t[(k + 1) % 3]] - v[t[k]], q = v[t[(k + 2) % 3]] - v[t[k]];
      worst = std::min(worst, std::atan2(std::abs(p.x() * q.y() - p.y() * q.x()), p.dot(q)) *
                                  180.0 / M_PI);
    }
  return worst;
}

}  // namespace

std::shared_ptr<const TriMesh> build_mesh(const DomainSpec& spec, double h_target) {
  auto domain = std::make_shared<const Domain>(spec);
  if (!(h_target > 0.0) || !(h_target < spec.scale / 4.0))
    throw PreconditionError(
        fmt::format("mesh size h = {} must satisfy 0 < h < scale / 4 = {}", h_target, spec.scale / 4.0));

  const double P = domain->perimeter();
  const int rings = static_cast<int>(std::ceil(domain->outer_radius() / h_target));

  std::vector<Vec2> verts{Vec2::Zero()};
  std::vector<int> ring_start{0}, ring_size{1};
  for (int k = 1; k <= rings; ++k) {
    const double frac = static_cast<double>(k) / rings;
    const int n = std::max(6, static_cast<int>(std::ceil(P * frac / h_target)));
    ring_start.push_back(static_cast<int>(verts.size()));
    ring_size.push_back(n);
    for (int j = 0; j < n; ++j) {
      const Vec2 b = domain->boundary_point(P * j / n);
      verts.push_back(k == rings ? b : Vec2(frac * b));
    }
  }

  std::vector<Triangle> tris;
  for (int j = 0; j < ring_size[1]; ++j)
    push_oriented(tris, verts, 0, ring_start[1] + j, ring_start[1] + (j + 1) % ring_size[1]);
  for (int k = 1; k < rings; ++k) {
    const int na = ring_size[k], nb = ring_size[k + 1];
    const int sa = ring_start[k], sb = ring_start[k + 1];
    int i = 0, j = 0;
    while (i < na || j < nb) {
      const bool advance_inner =
          j == nb || (i < na && static_cast<double>(i + 1) / na <= static_cast<double>(j + 1) / nb);
      if (advance_inner) {
        push_oriented(tris, verts, sa + i % na, sa + (i + 1) % na, sb + j % nb);
        ++i;
      } else {
        push_oriented(tris, verts, sa + i % na, sb + j % nb, sb + (j + 1) % nb);
        ++j;
      }
    }
  }

  const int first_boundary = ring_start[rings];
  std::vector<int> loop(ring_size[rings]);
  for (int j = 0; j < ring_size[rings]; ++j) loop[j] = first_boundary + j;

  delaunay_flips(verts, tris);

  if (min_angle(verts, tris) < 20.0) {
    // A few sweeps of Laplacian smoothing on interior vertices, kept only if
    // every triangle stays positively oriented.
    std::vector<std::vector<int>> nbrs(verts.size());
    for (const auto& t : tris)
      for (int k = 0; k < 3; ++k) nbrs[t[k]].push_back(t[(k + 1) % 3]);
    for (int sweep = 0; sweep < 5; ++sweep) {
      auto trial = verts;
      for (int v = 0; v < first_boundary; ++v) {
        if (nbrs[v].empty()) continue;
        Vec2 avg = Vec2::Zero();
        for (int w : nbrs[v]) avg += verts[w];
        trial[v] = avg / static_cast<double>(nbrs[v].size());
      }
      const bool valid = std::all_of(tris.begin(), tris.end(), [&](const Triangle& t) {
        return orient(trial[t[0]], trial[t[1]], trial[t[2]]) > 0.0;
      });
      if (!valid) break;
      verts = std::move(trial);
    }
    delaunay_flips(verts, tris);
  }

  auto mesh = std::make_shared<const TriMesh>(domain, std::move(verts), std::move(tris), std::move(loop));
  if (mesh->h_max() > 1.5 * h_target)
    throw GeometryError(fmt::format("mesher produced h_max = {} above 1.5 h = {}", mesh->h_max(),
                                    1.5 * h_target));
  return mesh;
}

}  // namespace lamestab
