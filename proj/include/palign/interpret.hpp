#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/loading.hpp"
#include "palign/util.hpp"

namespace palign {

struct LabeledParam {
  std::string variable;
  std::string category;
  double value = 0.0;
};

// Every beta entry labeled with its variable and category (12 rows).
inline std::vector<LabeledParam> export_params(const EmbeddingParams& params) {
  std::vector<LabeledParam> out;
  for (std::size_t dim = 0; dim < 4; ++dim) {
    for (std::size_t c = 0; c < kDemographicCardinalities[dim]; ++c) {
      out.push_back({std::string(kDemographicVariables[dim]),
                     std::string(demographic_category_name(dim, c)), params.at(dim, c)});
    }
  }
  return out;
}

inline json params_table_json(const std::vector<LabeledParam>& table) {
  json rows = json::array();
  for (const auto& row : table) {
    rows.push_back(json{{"variable", row.variable},
                        {"category", row.category},
                        {"value", row.value}});
  }
  return json{{"kind", "params_table"}, {"rows", rows}};
}

struct ProfileEmbeddingRow {
  SocioDemographics profile;
  EmbeddingVector embedding{};
  std::size_t count = 0;
};

using ProfileEmbeddingTable = std::vector<ProfileEmbeddingRow>;

// One row per distinct profile observed in the given records.
inline ProfileEmbeddingTable profile_table(const std::vector<SocioDemographics>& observed,
                                           const EmbeddingParams& params) {
  std::map<SocioDemographics, std::size_t> counts;
  for (const auto& d : observed) ++counts[d];
  ProfileEmbeddingTable table;
  for (const auto& [profile, count] : counts) {
    table.push_back({profile, embed(profile, params), count});
  }
  return table;
}

// ---------------------------------------------------------------------------
// 2-D projection (top-2 principal components of unit-normalized embeddings)

struct Projection {
  std::vector<std::array<double, 2>> coords;
  bool degenerate = false;  // rank < 2: second coordinate padded with zeros
};

namespace detail {

inline EmbeddingVector unit(const EmbeddingVector& v) {
  const double n = norm2(v);
  if (n == 0.0) throw EstimationError("cannot normalize a zero embedding vector");
  EmbeddingVector out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = v[i] / n;
  return out;
}

// Jacobi eigensolver for symmetric 4x4 matrices.
inline void jacobi_eigen(std::array<std::array<double, 4>, 4> a,
                         std::array<double, 4>& values,
                         std::array<std::array<double, 4>, 4>& vectors) {
  vectors = {};
  for (std::size_t i = 0; i < 4; ++i) vectors[i][i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t q = p + 1; q < 4; ++q) {
        if (std::abs(a[p][q]) < 1e-18) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1.0 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (std::size_t k = 0; k < 4; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < 4; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < 4; ++k) {
          const double vkp = vectors[k][p], vkq = vectors[k][q];
          vectors[k][p] = c * vkp - s * vkq;
          vectors[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (std::size_t i = 0; i < 4; ++i) values[i] = a[i][i];
}

}  // namespace detail

inline Projection project_2d(const ProfileEmbeddingTable& table) {
  if (table.size() < 3) throw DataError("projection needs at least 3 profiles");

  std::vector<EmbeddingVector> rows;
  rows.reserve(table.size());
  for (const auto& r : table) rows.push_back(detail::unit(r.embedding));

  EmbeddingVector mean{};
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < 4; ++i) mean[i] += r[i];
  }
  for (auto& m : mean) m /= static_cast<double>(rows.size());

  std::array<std::array<double, 4>, 4> cov{};
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
      }
    }
  }
  for (auto& row : cov) {
    for (auto& v : row) v /= static_cast<double>(rows.size());
  }

  std::array<double, 4> values{};
  std::array<std::array<double, 4>, 4> vectors{};
  detail::jacobi_eigen(cov, values, vectors);

  std::array<std::size_t, 4> order = {0, 1, 2, 3};
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  // Sign convention: first nonzero loading of each component is positive.
  std::array<EmbeddingVector, 2> components{};
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 4; ++i) components[c][i] = vectors[i][order[c]];
    for (std::size_t i = 0; i < 4; ++i) {
      if (std::abs(components[c][i]) > 1e-12) {
        if (components[c][i] < 0) {
          for (auto& v : components[c]) v = -v;
        }
        break;
      }
    }
  }

  Projection out;
  out.degenerate = values[order[1]] <= 1e-12;
  for (const auto& r : rows) {
    std::array<double, 2> coord{};
    for (std::size_t c = 0; c < 2; ++c) {
      if (c == 1 && out.degenerate) break;
      for (std::size_t i = 0; i < 4; ++i) coord[c] += (r[i] - mean[i]) * components[c][i];
    }
    out.coords.push_back(coord);
  }
  return out;
}

// ---------------------------------------------------------------------------
// K-means over unit-normalized embeddings (k-means++ seeding, best of
// `restarts` runs by inertia)

struct ClusterAssignment {
  int k = 0;
  std::vector<int> cluster_of;  // per table row
  std::vector<EmbeddingVector> centroids;
  double inertia = 0.0;
  std::vector<std::array<double, 2>> projection;  // empty when < 3 profiles
  bool projection_degenerate = false;
};

namespace detail {

inline double sqdist(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct KmeansRun {
  std::vector<int> assignment;
  std::vector<EmbeddingVector> centroids;
  double inertia = 0.0;
};

inline KmeansRun kmeans_once(const std::vector<EmbeddingVector>& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<EmbeddingVector> centroids;
  centroids.reserve(static_cast<std::size_t>(k));

  // k-means++ seeding
  centroids.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sqdist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0) {
      centroids.push_back(points[rng.below(n)]);
      continue;
    }
    const double u = rng.uniform01() * total;
    double acc = 0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    centroids.push_back(points[pick]);
  }

  std::vector<int> assignment(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sqdist(points[i], centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    std::vector<EmbeddingVector> sums(static_cast<std::size_t>(k), EmbeddingVector{});
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      for (std::size_t j = 0; j < 4; ++j) sums[c][j] += points[i][j];
      ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) {
        // empty cluster: reseed at the point farthest from its centroid
        std::size_t far = 0;
        double far_d = -1;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              sqdist(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids[c] = points[far];
        changed = true;
        continue;
      }
      for (std::size_t j = 0; j < 4; ++j) {
        centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
    if (!changed) break;
  }

  KmeansRun run;
  run.assignment = std::move(assignment);
  run.centroids = std::move(centroids);
  for (std::size_t i = 0; i < n; ++i) {
    run.inertia += sqdist(points[i], run.centroids[static_cast<std::size_t>(run.assignment[i])]);
  }
  return run;
}

}  // namespace detail

inline ClusterAssignment cluster_profiles(const ProfileEmbeddingTable& table, int k,
                                          std::uint64_t seed, int restarts = 8) {
  if (k < 2) throw ConfigError("cluster count k must be >= 2");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (table.size() < static_cast<std::size_t>(k)) {
    throw DataError("cannot form " + std::to_string(k) + " clusters from " +
                    std::to_string(table.size()) + " profiles");
  }

  std::vector<EmbeddingVector> points;
  points.reserve(table.size());
  for (const auto& r : table) points.push_back(detail::unit(r.embedding));

  detail::KmeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    auto run = detail::kmeans_once(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  ClusterAssignment out;
  out.k = k;
  out.cluster_of = std::move(best.assignment);
  out.centroids = std::move(best.centroids);
  out.inertia = best.inertia;
  if (table.size() >= 3) {
    auto proj = project_2d(table);
    out.projection = std::move(proj.coords);
    out.projection_degenerate = proj.degenerate;
  }
  return out;
}

// Mean silhouette over all points (used by the k sweep).
inline double silhouette_score(const ProfileEmbeddingTable& table,
                               const std::vector<int>& assignment, int k) {
  const std::size_t n = table.size();
  if (n != assignment.size()) throw DataError("silhouette: assignment size mismatch");
  std::vector<EmbeddingVector> points;
  points.reserve(n);
  for (const auto& r : table) points.push_back(detail::unit(r.embedding));

  double total = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> mean_dist(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto c = static_cast<std::size_t>(assignment[j]);
      mean_dist[c] += std::sqrt(detail::sqdist(points[i], points[j]));
      ++counts[c];
    }
    const auto own = static_cast<std::size_t>(assignment[i]);
    if (counts[own] == 0) continue;  // singleton cluster: silhouette undefined
    const double a = mean_dist[own] / static_cast<double>(counts[own]);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, mean_dist[c] / static_cast<double>(counts[c]));
    }
    total += (b - a) / std::max(a, b);
    ++counted;
  }
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

inline json clusters_json(const ProfileEmbeddingTable& table, const ClusterAssignment& ca) {
  json rows = json::array();
  for (std::size_t i = 0; i < table.size(); ++i) {
    json row{{"profile", to_json(table[i].profile)},
             {"count", table[i].count},
             {"cluster", ca.cluster_of[i]}};
    if (!ca.projection.empty()) row["xy"] = ca.projection[i];
    rows.push_back(row);
  }
  json centroids = json::array();
  for (const auto& c : ca.centroids) centroids.push_back(c);
  return json{{"kind", "clusters"},
              {"k", ca.k},
              {"inertia", ca.inertia},
              {"projection_degenerate", ca.projection_degenerate},
              {"centroids", centroids},
              {"profiles", rows}};
}

}  // namespace palign
