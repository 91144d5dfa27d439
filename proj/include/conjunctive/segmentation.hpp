#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conjunctive/core.hpp"

namespace conjunctive {

inline constexpr std::string_view kDefaultKey = "__KEY__";

/// A pre-segmented query. Segments carry their account label; key flags start
/// out false.
class QuerySpec {
 public:
  QuerySpec() = default;
  /// Builds 1-based segments from parallel text/mask lists. Throws
  /// ValidationError on empty input or mismatched lengths.
  QuerySpec(std::vector<std::string> texts, std::vector<bool> account_mask);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::vector<bool> account_mask() const;
  int size() const noexcept { return static_cast<int>(segments_.size()); }

  void validate() const;

 private:
  std::vector<Segment> segments_;
};

/// Returns the stored decomposition verbatim.
std::vector<Segment> segment(const QuerySpec& query);

/// Appends `key` to segment `j` (1-based) with a single space separator and
/// flags it. An empty key leaves the text untouched.
std::vector<Segment> insert_key(std::span<const Segment> segments, int j, std::string_view key);

}  // namespace conjunctive
