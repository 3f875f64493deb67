#include "dci/label_space.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "dci/rng.hpp"
#include "dci/text.hpp"

namespace dci {

LabelSet::LabelSet(std::vector<std::string> raw) {
  labels_.reserve(raw.size());
  std::unordered_set<std::string_view> seen;
  seen.reserve(raw.size());
  for (std::string& entry : raw) {
    std::string trimmed{text::trim(entry)};
    if (trimmed.empty()) {
      continue;
    }
    if (seen.contains(trimmed)) {
      ++duplicates_dropped_;
      continue;
    }
    labels_.push_back(std::move(trimmed));
    seen.insert(labels_.back());
  }
}

LabelSet LabelSet::of(std::initializer_list<std::string> raw) {
  return LabelSet(std::vector<std::string>(raw));
}

bool LabelSet::contains(std::string_view label) const {
  return index_of(label).has_value();
}

std::optional<std::size_t> LabelSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

GroupSize::GroupSize(int k) : k_(k) {
  if (k < 2) {
    throw std::invalid_argument("GroupSize: k must be >= 2, got " +
                                std::to_string(k));
  }
}

namespace {

Partition partition_from_order(const std::vector<std::string>& ordered,
                               int k) {
  Partition out;
  out.source_size = ordered.size();
  out.groups.reserve((ordered.size() + k - 1) / k);
  for (std::size_t start = 0; start < ordered.size(); start += k) {
    const std::size_t stop = std::min(ordered.size(), start + k);
    out.groups.emplace_back(std::vector<std::string>(
        ordered.begin() + static_cast<std::ptrdiff_t>(start),
        ordered.begin() + static_cast<std::ptrdiff_t>(stop)));
  }
  return out;
}

void require_same_label_set(const LabelSet& c, const SimilarityMatrix& sim,
                            const char* op) {
  if (sim.dimension() != c.size()) {
    throw std::invalid_argument(std::string(op) +
                                ": similarity matrix dimension " +
                                std::to_string(sim.dimension()) +
                                " does not match label count " +
                                std::to_string(c.size()));
  }
  for (const std::string& label : c) {
    if (!sim.labels().contains(label)) {
      throw std::invalid_argument(std::string(op) +
                                  ": similarity matrix is missing label '" +
                                  label + "'");
    }
  }
}

}  // namespace

Partition partition_sequential(const LabelSet& c, GroupSize k) {
  return partition_from_order(c.labels(), k.value());
}

Partition group_random(const LabelSet& c, GroupSize k, std::uint64_t seed) {
  std::vector<std::string> order = c.labels();
  std::mt19937_64 gen(seed);
  rng::shuffle(order, gen);
  return partition_from_order(order, k.value());
}

Partition group_most_similar(const LabelSet& c, GroupSize k,
                             const SimilarityMatrix& sim) {
  require_same_label_set(c, sim, "group_most_similar");

  // Work in lexicographic order; indices refer to sim's label order.
  std::vector<std::size_t> unassigned(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    unassigned[i] = *sim.labels().index_of(c[i]);
  }
  std::sort(unassigned.begin(), unassigned.end(),
            [&](std::size_t a, std::size_t b) {
              return sim.labels()[a] < sim.labels()[b];
            });

  Partition out;
  out.source_size = c.size();
  const std::size_t take = static_cast<std::size_t>(k.value());
  while (!unassigned.empty()) {
    const std::size_t seed_idx = unassigned.front();
    unassigned.erase(unassigned.begin());

    const std::size_t fill = std::min(take - 1, unassigned.size());
    std::stable_sort(unassigned.begin(), unassigned.end(),
                     [&](std::size_t a, std::size_t b) {
                       const double sa = sim.score(seed_idx, a);
                       const double sb = sim.score(seed_idx, b);
                       if (sa != sb) return sa > sb;
                       return sim.labels()[a] < sim.labels()[b];
                     });

    std::vector<std::string> group;
    group.reserve(fill + 1);
    group.push_back(sim.labels()[seed_idx]);
    for (std::size_t i = 0; i < fill; ++i) {
      group.push_back(sim.labels()[unassigned[i]]);
    }
    unassigned.erase(unassigned.begin(),
                     unassigned.begin() + static_cast<std::ptrdiff_t>(fill));
    // Restore lexicographic order for the next seed choice.
    std::sort(unassigned.begin(), unassigned.end(),
              [&](std::size_t a, std::size_t b) {
                return sim.labels()[a] < sim.labels()[b];
              });
    out.groups.emplace_back(std::move(group));
  }
  return out;
}

Partition group_least_similar(const LabelSet& c, GroupSize k,
                              const SimilarityMatrix& sim) {
  require_same_label_set(c, sim, "group_least_similar");
  if (c.empty()) {
    return Partition{};
  }

  const Partition clusters = group_most_similar(c, k, sim);
  const std::size_t group_count =
      (c.size() + static_cast<std::size_t>(k.value()) - 1) /
      static_cast<std::size_t>(k.value());

  std::vector<std::vector<std::string>> dealt(group_count);
  std::size_t next = 0;
  for (const LabelSet& cluster : clusters.groups) {
    for (const std::string& label : cluster) {
      dealt[next % group_count].push_back(label);
      ++next;
    }
  }

  Partition out;
  out.source_size = c.size();
  out.groups.reserve(group_count);
  for (std::vector<std::string>& group : dealt) {
    out.groups.emplace_back(std::move(group));
  }
  return out;
}

SimilarityMatrix::SimilarityMatrix(LabelSet labels,
                                   std::vector<double> row_major_scores)
    : labels_(std::move(labels)), scores_(std::move(row_major_scores)) {
  const std::size_t n = labels_.size();
  if (scores_.size() != n * n) {
    throw std::invalid_argument(
        "SimilarityMatrix: expected " + std::to_string(n * n) +
        " scores for " + std::to_string(n) + " labels, got " +
        std::to_string(scores_.size()));
  }
  constexpr double kTol = 1e-9;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(scores_[i * n + i] - 1.0) > kTol) {
      throw std::invalid_argument("SimilarityMatrix: diagonal must be 1");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double v = scores_[i * n + j];
      if (v < -1.0 - kTol || v > 1.0 + kTol) {
        throw std::invalid_argument(
            "SimilarityMatrix: scores must lie in [-1, 1]");
      }
      if (std::abs(v - scores_[j * n + i]) > kTol) {
        throw std::invalid_argument("SimilarityMatrix: matrix must be symmetric");
      }
    }
  }
}

SimilarityMatrix SimilarityMatrix::identity(LabelSet labels) {
  const std::size_t n = labels.size();
  std::vector<double> scores(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i * n + i] = 1.0;
  }
  return SimilarityMatrix(std::move(labels), std::move(scores));
}

double SimilarityMatrix::score_of(std::string_view a, std::string_view b) const {
  const auto ia = labels_.index_of(a);
  const auto ib = labels_.index_of(b);
  if (!ia || !ib) {
    throw std::invalid_argument("SimilarityMatrix: unknown label");
  }
  return score(*ia, *ib);
}

SimilarityMatrix SimilarityMatrix::restricted_to(const LabelSet& subset) const {
  const std::size_t m = subset.size();
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto found = labels_.index_of(subset[i]);
    if (!found) {
      throw std::invalid_argument(
          "SimilarityMatrix::restricted_to: label '" + subset[i] +
          "' is not covered by the matrix");
    }
    idx[i] = *found;
  }
  std::vector<double> scores(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      scores[i * m + j] = score(idx[i], idx[j]);
    }
  }
  return SimilarityMatrix(subset, std::move(scores));
}

}  // namespace dci
