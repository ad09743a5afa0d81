#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "sparse.hpp"

namespace ncdrec {

enum class DecompositionFormat {
  movielens_100k,  // u.item: "id|title|date|video date|url|19 genre flags"
  movielens_1m,    // movies.dat: "id::title::Genre|Genre"
  tsv,             // "item<TAB>label,label"
};

inline DecompositionFormat parse_decomposition_format(std::string_view name) {
  if (name == "movielens-100k" || name == "ml100k" || name == "u.item") return DecompositionFormat::movielens_100k;
  if (name == "movielens-1m" || name == "ml1m" || name == "movies.dat") return DecompositionFormat::movielens_1m;
  if (name == "tsv") return DecompositionFormat::tsv;
  throw ParameterError("unknown decomposition format '" + std::string(name) + "'");
}

/// What to do with items that carry no block label.
enum class UnlabeledPolicy { error, catch_all };

struct DecompositionOptions {
  UnlabeledPolicy unlabeled = UnlabeledPolicy::error;
  /// Skip file rows whose item never occurs in the ratings instead of failing.
  bool skip_unknown_items = false;
  std::string catch_all_label = "(unlabeled)";
};

/// Indexed family of non-empty, possibly overlapping item blocks that cover the item set,
/// plus the m x K 0/1 aggregation matrix.
class Decomposition {
public:
  Decomposition() = default;

  static Decomposition from_blocks(Index n_items, std::vector<std::vector<Index>> blocks,
                                   std::vector<std::string> labels = {},
                                   UnlabeledPolicy unlabeled = UnlabeledPolicy::error,
                                   std::vector<std::string> warnings = {}, const std::string& catch_all_label = "(unlabeled)") {
    if (labels.empty())
      for (std::size_t k = 0; k < blocks.size(); ++k) labels.push_back("block" + std::to_string(k));
    if (labels.size() != blocks.size()) throw ParameterError("one label per block required");

    Decomposition d;
    d.n_items_ = n_items;
    d.warnings_ = std::move(warnings);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      auto& b = blocks[k];
      std::sort(b.begin(), b.end());
      b.erase(std::unique(b.begin(), b.end()), b.end());
      for (Index j : b)
        if (j < 0 || j >= n_items) throw ReferenceError("block '" + labels[k] + "' references item out of range");
      if (b.empty()) {
        d.warnings_.push_back("dropped empty block '" + labels[k] + "'");
        continue;
      }
      d.blocks_.push_back(std::move(b));
      d.labels_.push_back(std::move(labels[k]));
    }

    std::vector<char> covered(static_cast<std::size_t>(n_items), 0);
    for (const auto& b : d.blocks_)
      for (Index j : b) covered[static_cast<std::size_t>(j)] = 1;
    std::vector<Index> missing;
    for (Index j = 0; j < n_items; ++j)
      if (!covered[static_cast<std::size_t>(j)]) missing.push_back(j);
    if (!missing.empty()) {
      if (unlabeled == UnlabeledPolicy::error)
        throw CoverError(std::to_string(missing.size()) + " item(s) belong to no block (first: index " +
                         std::to_string(missing.front()) + ")");
      d.blocks_.push_back(missing);
      d.labels_.push_back(catch_all_label);
      d.warnings_.push_back(std::to_string(missing.size()) + " unlabeled item(s) assigned to block '" +
                            catch_all_label + "'");
    }
    if (d.blocks_.empty()) throw CoverError("decomposition has no blocks");

    std::vector<Triplet> entries;
    for (std::size_t k = 0; k < d.blocks_.size(); ++k)
      for (Index j : d.blocks_[k]) entries.emplace_back(j, static_cast<Index>(k), 1.0);
    d.aggregation_ = make_sparse(n_items, static_cast<Index>(d.blocks_.size()), entries);
    d.blocks_of_.assign(static_cast<std::size_t>(n_items), {});
    for (std::size_t k = 0; k < d.blocks_.size(); ++k)
      for (Index j : d.blocks_[k]) d.blocks_of_[static_cast<std::size_t>(j)].push_back(static_cast<Index>(k));
    return d;
  }

  Index n_items() const noexcept { return n_items_; }
  Index n_blocks() const noexcept { return static_cast<Index>(blocks_.size()); }
  const std::vector<std::vector<Index>>& blocks() const noexcept { return blocks_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  /// m x K, entry (j, k) = 1 iff item j is in block k.
  const SparseMatrix& aggregation() const noexcept { return aggregation_; }
  /// Blocks containing `item`; its size is N_v.
  const std::vector<Index>& blocks_of(Index item) const { return blocks_of_.at(static_cast<std::size_t>(item)); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Union of all blocks containing `item`, ascending.
  std::vector<Index> proximal_set(Index item) const {
    std::vector<Index> out;
    for (Index k : blocks_of(item)) out.insert(out.end(), blocks_[static_cast<std::size_t>(k)].begin(),
                                               blocks_[static_cast<std::size_t>(k)].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

private:
  Index n_items_ = 0;
  std::vector<std::vector<Index>> blocks_;
  std::vector<std::string> labels_;
  SparseMatrix aggregation_;
  std::vector<std::vector<Index>> blocks_of_;
  std::vector<std::string> warnings_;
};

/// Genre columns of the MovieLens 100K u.item file, in file order.
inline const std::vector<std::string>& movielens_100k_genres() {
  static const std::vector<std::string> genres = {
      "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
      "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical", "Mystery",
      "Romance", "Sci-Fi", "Thriller", "War", "Western"};
  return genres;
}

/// Reads item-to-label assignments and builds the decomposition over `data`'s item index.
inline Decomposition load_decomposition(const std::string& path, DecompositionFormat format,
                                        const RatingsDataset& data, const DecompositionOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");

  std::vector<std::string> label_order;
  if (format == DecompositionFormat::movielens_100k) label_order = movielens_100k_genres();
  std::map<std::string, std::vector<Index>> by_label;
  std::vector<std::string> warnings;
  std::size_t skipped = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = detail::trim(line);
    if (text.empty()) continue;

    std::string_view id_text;
    std::vector<std::string> item_labels;
    if (format == DecompositionFormat::movielens_100k) {
      auto fields = detail::split_on(text, "|");
      const std::size_t n_genres = label_order.size();
      if (fields.size() < 5 + n_genres) throw ParseError(path, line_no, "expected 24 '|'-separated fields");
      id_text = fields[0];
      for (std::size_t g = 0; g < n_genres; ++g) {
        auto flag = detail::trim(fields[fields.size() - n_genres + g]);
        if (flag == "1")
          item_labels.push_back(label_order[g]);
        else if (flag != "0")
          throw ParseError(path, line_no, "genre flag must be 0 or 1");
      }
    } else if (format == DecompositionFormat::movielens_1m) {
      auto fields = detail::split_on(text, "::");
      if (fields.size() != 3) throw ParseError(path, line_no, "expected 'id::title::genres'");
      id_text = fields[0];
      for (auto g : detail::split_on(fields[2], "|"))
        if (!detail::trim(g).empty()) item_labels.emplace_back(detail::trim(g));
    } else {
      auto tab = text.find('\t');
      id_text = text.substr(0, tab);
      if (tab != std::string_view::npos)
        for (auto g : detail::split_on(text.substr(tab + 1), ","))
          if (!detail::trim(g).empty()) item_labels.emplace_back(detail::trim(g));
    }

    std::int64_t raw = 0;
    if (!detail::parse_number(id_text, raw)) throw ParseError(path, line_no, "non-numeric item id");
    Index item = data.items().find(raw);
    if (item < 0) {
      if (!options.skip_unknown_items)
        throw ReferenceError(path + ":" + std::to_string(line_no) + ": item " + std::to_string(raw) +
                             " does not occur in the ratings");
      ++skipped;
      continue;
    }
    for (auto& label : item_labels) {
      if (format != DecompositionFormat::movielens_100k &&
          std::find(label_order.begin(), label_order.end(), label) == label_order.end())
        label_order.push_back(label);
      by_label[label].push_back(item);
    }
  }
  if (skipped > 0) warnings.push_back("skipped " + std::to_string(skipped) + " item(s) absent from the ratings");
  if (format != DecompositionFormat::movielens_100k) std::sort(label_order.begin(), label_order.end());

  std::vector<std::vector<Index>> blocks;
  for (const auto& label : label_order) blocks.push_back(by_label[label]);
  return Decomposition::from_blocks(data.n_items(), std::move(blocks), std::move(label_order), options.unlabeled,
                                    std::move(warnings), options.catch_all_label);
}

}  // namespace ncdrec
