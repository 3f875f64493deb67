#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dci {

/// Ordered, duplicate-free list of candidate category names.
///
/// Construction sanitizes the input: every entry is trimmed of surrounding
/// whitespace, empty entries are dropped, and duplicates keep their first
/// occurrence. The number of dropped duplicates is kept so callers can warn.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> raw);

  static LabelSet of(std::initializer_list<std::string> raw);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(std::string_view label) const;
  std::optional<std::size_t> index_of(std::string_view label) const;

  /// Duplicate entries removed while sanitizing the constructor input.
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }

  auto begin() const noexcept { return labels_.begin(); }
  auto end() const noexcept { return labels_.end(); }

  friend bool operator==(const LabelSet& a, const LabelSet& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::size_t duplicates_dropped_ = 0;
};

/// Sub-sequence length for the divide phase. k = 1 would degenerate each
/// sub-query into per-label verification, so it is rejected at construction.
class GroupSize {
 public:
  explicit GroupSize(int k);
  int value() const noexcept { return k_; }

  friend bool operator==(GroupSize a, GroupSize b) { return a.k_ == b.k_; }

 private:
  int k_;
};

/// Disjoint covering of a label set.
///
/// Every strategy guarantees: groups are pairwise disjoint, their union is
/// the source set, the group count is ceil(n/k) and no group exceeds k
/// labels. The order-preserving strategies (sequential, random shuffle,
/// greedy clustering) additionally fill every group except the last to
/// exactly k; the diversity strategy balances sizes instead.
struct Partition {
  std::vector<LabelSet> groups;
  std::size_t source_size = 0;

  std::size_t group_count() const noexcept { return groups.size(); }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.source_size == b.source_size && a.groups == b.groups;
  }
};

/// Dense symmetric similarity scores over a label set, unit diagonal,
/// values in [-1, 1].
class SimilarityMatrix {
 public:
  SimilarityMatrix(LabelSet labels, std::vector<double> row_major_scores);

  static SimilarityMatrix identity(LabelSet labels);

  const LabelSet& labels() const noexcept { return labels_; }
  std::size_t dimension() const noexcept { return labels_.size(); }
  double score(std::size_t i, std::size_t j) const {
    return scores_[i * labels_.size() + j];
  }
  double score_of(std::string_view a, std::string_view b) const;

  /// Sub-matrix over `subset`, which must be contained in labels().
  SimilarityMatrix restricted_to(const LabelSet& subset) const;

 private:
  LabelSet labels_;
  std::vector<double> scores_;
};

/// Order-preserving partition into groups of k; the last group takes the
/// remainder.
Partition partition_sequential(const LabelSet& c, GroupSize k);

/// Seeded shuffle followed by sequential partitioning. Identical
/// (c, k, seed) always produce an identical partition.
Partition group_random(const LabelSet& c, GroupSize k, std::uint64_t seed);

/// Greedy coherence clustering: repeatedly seed a group with the
/// lexicographically smallest unassigned label and fill it with the k-1
/// unassigned labels most similar to the seed (ties lexicographic).
Partition group_most_similar(const LabelSet& c, GroupSize k,
                             const SimilarityMatrix& sim);

/// Diversity grouping: cluster with group_most_similar, then deal cluster
/// members round-robin across ceil(n/k) output groups.
Partition group_least_similar(const LabelSet& c, GroupSize k,
                              const SimilarityMatrix& sim);

}  // namespace dci
