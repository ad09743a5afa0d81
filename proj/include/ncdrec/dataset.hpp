#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"

namespace ncdrec {

enum class RatingsFormat { movielens_100k, movielens_1m, yahoo_r2 };

inline RatingsFormat parse_ratings_format(std::string_view name) {
  if (name == "movielens-100k" || name == "ml100k") return RatingsFormat::movielens_100k;
  if (name == "movielens-1m" || name == "ml1m") return RatingsFormat::movielens_1m;
  if (name == "yahoo-r2" || name == "yahoo") return RatingsFormat::yahoo_r2;
  throw ParameterError("unknown ratings format '" + std::string(name) + "'");
}

/// A rating as it appears in the source file, before index densification.
struct RatingRecord {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double value = 0.0;
};

/// Maps raw (file) identifiers onto contiguous 0-based indices and back.
class IdMap {
public:
  IdMap() = default;

  /// Dense indices follow ascending raw id.
  static IdMap from_ids(std::vector<std::int64_t> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    IdMap map;
    map.raw_ = std::move(ids);
    for (std::size_t i = 0; i < map.raw_.size(); ++i) map.dense_.emplace(map.raw_[i], static_cast<Index>(i));
    return map;
  }

  static IdMap identity(Index n) {
    std::vector<std::int64_t> ids(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    return from_ids(std::move(ids));
  }

  Index size() const noexcept { return static_cast<Index>(raw_.size()); }
  std::int64_t raw(Index dense) const { return raw_.at(static_cast<std::size_t>(dense)); }

  /// Dense index of `raw`, or -1 when unknown.
  Index find(std::int64_t raw) const {
    auto it = dense_.find(raw);
    return it == dense_.end() ? -1 : it->second;
  }

  const std::vector<std::int64_t>& raw_ids() const noexcept { return raw_; }

private:
  std::vector<std::int64_t> raw_;
  std::unordered_map<std::int64_t, Index> dense_;
};

struct Rating {
  Index user = 0;
  Index item = 0;
  double value = 0.0;
};

/// Whether users/items without any nonzero rating are tolerated. Training
/// snapshots carved out of a full dataset keep the full index universe and may
/// leave some items unrated; freshly loaded datasets must not.
enum class Coverage { strict, allow_empty };

/// Users, items and the sparse rating matrix R (n x m). Immutable after construction.
class RatingsDataset {
public:
  RatingsDataset() = default;

  static RatingsDataset from_ratings(Index n_users, Index n_items, std::vector<Rating> ratings,
                                     Coverage coverage = Coverage::strict, IdMap users = {}, IdMap items = {}) {
    if (n_users <= 0 || n_items <= 0) throw ModelAssumptionError("dataset needs at least one user and one item");
    RatingsDataset ds;
    ds.users_ = users.size() == n_users ? std::move(users) : IdMap::identity(n_users);
    ds.items_ = items.size() == n_items ? std::move(items) : IdMap::identity(n_items);

    std::sort(ratings.begin(), ratings.end(),
              [](const Rating& a, const Rating& b) { return std::pair(a.user, a.item) < std::pair(b.user, b.item); });
    std::vector<Triplet> entries;
    entries.reserve(ratings.size());
    for (std::size_t k = 0; k < ratings.size(); ++k) {
      const Rating& r = ratings[k];
      if (r.user < 0 || r.user >= n_users || r.item < 0 || r.item >= n_items)
        throw ModelAssumptionError("rating index out of range");
      if (!std::isfinite(r.value) || r.value < 0.0)
        throw ModelAssumptionError("ratings must be finite and nonnegative");
      if (k > 0 && ratings[k - 1].user == r.user && ratings[k - 1].item == r.item)
        throw ModelAssumptionError("duplicate (user, item) pair (" + std::to_string(ds.users_.raw(r.user)) + ", " +
                                   std::to_string(ds.items_.raw(r.item)) + ")");
      entries.emplace_back(r.user, r.item, r.value);
    }
    ds.n_users_ = n_users;
    ds.n_items_ = n_items;
    ds.ratings_ = std::move(ratings);
    ds.R_ = make_sparse(n_users, n_items, entries);
    ds.item_counts_.assign(static_cast<std::size_t>(n_items), 0);
    for (const auto& r : ds.ratings_) ++ds.item_counts_[static_cast<std::size_t>(r.item)];

    if (coverage == Coverage::strict) {
      for (Index u = 0; u < n_users; ++u)
        if (ds.R_.row(u).nonZeros() == 0)
          throw ModelAssumptionError("user " + std::to_string(ds.users_.raw(u)) + " has no nonzero rating");
      Vector col_nnz = Vector::Zero(n_items);
      for (Index u = 0; u < ds.R_.outerSize(); ++u)
        for (SparseMatrix::InnerIterator it(ds.R_, u); it; ++it) col_nnz[it.col()] += 1.0;
      for (Index j = 0; j < n_items; ++j)
        if (col_nnz[j] == 0.0)
          throw ModelAssumptionError("item " + std::to_string(ds.items_.raw(j)) + " has no nonzero rating");
    }
    return ds;
  }

  /// Densifies raw records against the given id maps (every record id must be present).
  static RatingsDataset from_records(const std::vector<RatingRecord>& records, IdMap users, IdMap items,
                                     Coverage coverage = Coverage::strict) {
    std::vector<Rating> ratings;
    ratings.reserve(records.size());
    for (const auto& rec : records) {
      Index u = users.find(rec.user), i = items.find(rec.item);
      if (u < 0 || i < 0) throw ReferenceError("rating references unknown user/item id");
      ratings.push_back({u, i, rec.value});
    }
    const Index n = users.size(), m = items.size();
    return from_ratings(n, m, std::move(ratings), coverage, std::move(users), std::move(items));
  }

  /// Same index universe, only the ratings selected by `keep` (indexed like ratings()).
  RatingsDataset subset(const std::vector<bool>& keep, Coverage coverage = Coverage::allow_empty) const {
    std::vector<Rating> kept;
    for (std::size_t k = 0; k < ratings_.size(); ++k)
      if (keep.at(k)) kept.push_back(ratings_[k]);
    return from_ratings(n_users_, n_items_, std::move(kept), coverage, users_, items_);
  }

  Index n_users() const noexcept { return n_users_; }
  Index n_items() const noexcept { return n_items_; }
  std::size_t size() const noexcept { return ratings_.size(); }

  /// Ratings sorted by (user, item).
  const std::vector<Rating>& ratings() const noexcept { return ratings_; }
  const SparseMatrix& R() const noexcept { return R_; }
  const IdMap& users() const noexcept { return users_; }
  const IdMap& items() const noexcept { return items_; }

  /// Items rated by `user`, ascending.
  std::vector<Index> rated_items(Index user) const {
    std::vector<Index> out;
    for (SparseMatrix::InnerIterator it(R_, user); it; ++it) out.push_back(it.col());
    return out;
  }

  Index rating_count(Index user) const { return static_cast<Index>(R_.row(user).nonZeros()); }

  /// Number of ratings held by each item.
  const std::vector<Index>& item_counts() const noexcept { return item_counts_; }

private:
  Index n_users_ = 0;
  Index n_items_ = 0;
  std::vector<Rating> ratings_;
  SparseMatrix R_;
  IdMap users_;
  IdMap items_;
  std::vector<Index> item_counts_;
};

namespace detail {

inline std::vector<std::string_view> split_on(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + sep.size();
  }
  return out;
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace detail

/// Reads raw rating records. Rejects malformed lines and duplicate (user, item) pairs,
/// reporting the offending line number.
inline std::vector<RatingRecord> read_rating_records(const std::string& path, RatingsFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<RatingRecord> records;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    std::vector<std::string_view> fields = format == RatingsFormat::movielens_1m ? detail::split_on(text, "::")
                                                                                 : detail::split_whitespace(text);
    const std::size_t expected = format == RatingsFormat::yahoo_r2 ? 3 : 4;
    if (fields.size() != expected && !(format == RatingsFormat::yahoo_r2 && fields.size() == 4))
      throw ParseError(path, line_no, "expected " + std::to_string(expected) + " fields");
    RatingRecord rec;
    if (!detail::parse_number(fields[0], rec.user) || !detail::parse_number(fields[1], rec.item) ||
        !detail::parse_number(fields[2], rec.value))
      throw ParseError(path, line_no, "non-numeric field");
    if (!std::isfinite(rec.value) || rec.value < 0.0) throw ParseError(path, line_no, "rating must be nonnegative");
    auto [it, fresh] = seen.emplace(std::pair(rec.user, rec.item), line_no);
    if (!fresh)
      throw ParseError(path, line_no, "duplicate (user, item) pair, first seen on line " + std::to_string(it->second));
    records.push_back(rec);
  }
  if (records.empty()) throw ParseError(path, 0, "no ratings");
  return records;
}

inline IdMap user_ids_of(const std::vector<RatingRecord>& records) {
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.user);
  return IdMap::from_ids(std::move(ids));
}

inline IdMap item_ids_of(const std::vector<RatingRecord>& records) {
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.item);
  return IdMap::from_ids(std::move(ids));
}

/// Loads a ratings file, densifying user and item ids in ascending raw order.
inline RatingsDataset load_ratings(const std::string& path, RatingsFormat format) {
  auto records = read_rating_records(path, format);
  return RatingsDataset::from_records(records, user_ids_of(records), item_ids_of(records), Coverage::strict);
}

/// Loads a ratings file into an existing id universe (e.g. a train/test split of a full dataset).
inline RatingsDataset load_ratings_in(const std::string& path, RatingsFormat format, const RatingsDataset& universe) {
  auto records = read_rating_records(path, format);
  return RatingsDataset::from_records(records, universe.users(), universe.items(), Coverage::allow_empty);
}

/// A user's ratings normalized to sum to one; zero outside the rated set.
struct PreferenceVector {
  Vector entries;
};

inline PreferenceVector preference_vector(const RatingsDataset& data, Index user) {
  if (user < 0 || user >= data.n_users()) throw ParameterError("user index out of range");
  PreferenceVector pv{Vector::Zero(data.n_items())};
  double total = 0.0;
  for (SparseMatrix::InnerIterator it(data.R(), user); it; ++it) total += it.value();
  if (total <= 0.0) throw ModelAssumptionError("user " + std::to_string(data.users().raw(user)) + " has no positive rating");
  for (SparseMatrix::InnerIterator it(data.R(), user); it; ++it) pv.entries[it.col()] = it.value() / total;
  return pv;
}

}  // namespace ncdrec
