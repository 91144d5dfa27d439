#include "conjunctive/segmentation.hpp"

#include <algorithm>

#include "conjunctive/errors.hpp"

namespace conjunctive {

QuerySpec::QuerySpec(std::vector<std::string> texts, std::vector<bool> account_mask) {
  if (texts.size() != account_mask.size()) {
    throw ValidationError("account_mask has " + std::to_string(account_mask.size()) +
                          " entries but the query has " + std::to_string(texts.size()) +
                          " segments");
  }
  segments_.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    segments_.push_back(Segment{static_cast<int>(i) + 1, std::move(texts[i]),
                                static_cast<bool>(account_mask[i]), false});
  }
  validate();
}

std::vector<bool> QuerySpec::account_mask() const {
  std::vector<bool> mask;
  mask.reserve(segments_.size());
  for (const auto& s : segments_) mask.push_back(s.is_account);
  return mask;
}

void QuerySpec::validate() const {
  if (segments_.empty()) {
    throw ValidationError("query must contain at least one segment");
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].index != static_cast<int>(i) + 1) {
      throw ValidationError("segment indices must be 1..S in order");
    }
    if (segments_[i].has_key) {
      throw ValidationError("query segments must not carry the key before insertion");
    }
  }
}

std::vector<Segment> segment(const QuerySpec& query) {
  query.validate();
  return query.segments();
}

std::vector<Segment> insert_key(std::span<const Segment> segments, int j, std::string_view key) {
  const int count = static_cast<int>(segments.size());
  if (j < 1 || j > count) {
    throw IndexError("key index " + std::to_string(j) + " outside 1.." + std::to_string(count));
  }
  if (std::any_of(segments.begin(), segments.end(), [](const Segment& s) { return s.has_key; })) {
    throw ValidationError("key already inserted; a query carries at most one key");
  }
  std::vector<Segment> out(segments.begin(), segments.end());
  Segment& target = out[static_cast<std::size_t>(j - 1)];
  if (!key.empty()) {
    target.text += ' ';
    target.text += key;
  }
  target.has_key = true;
  return out;
}

}  // namespace conjunctive
