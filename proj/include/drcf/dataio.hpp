#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace drcf {

enum class RatingFormat { ml100k, ml1m };

/// Parses "ml100k" / "ml1m"; throws InvalidArgument otherwise.
RatingFormat parse_format(std::string_view name);

/// One observed rating with the dataset's raw identifiers.
struct RatingTriplet {
    std::string user_raw;
    std::string item_raw;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;

    bool operator==(const RatingTriplet&) const = default;
};

/// Raw ID <-> dense index. Indices are handed out in first-seen order.
class Vocab {
public:
    Vocab() = default;
    explicit Vocab(std::vector<std::string> ids);

    /// Index of `raw`, inserting it at the end if unseen.
    std::uint32_t intern(const std::string& raw);
    std::optional<std::uint32_t> find(const std::string& raw) const;
    const std::string& raw(std::uint32_t index) const { return backward_.at(index); }

    std::size_t size() const { return backward_.size(); }
    const std::vector<std::string>& ids() const { return backward_; }

    bool operator==(const Vocab& other) const { return backward_ == other.backward_; }

private:
    std::unordered_map<std::string, std::uint32_t> forward_;
    std::vector<std::string> backward_;
};

/// Rating with dense indices.
struct IndexedRating {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    double rating = 0.0;

    bool operator==(const IndexedRating&) const = default;
};

struct Dataset {
    std::vector<IndexedRating> ratings;
    Vocab users;
    Vocab items;
    double k_max = 5.0;

    std::size_t size() const { return ratings.size(); }
    bool empty() const { return ratings.empty(); }
    /// Mean rating; throws DataError on an empty dataset.
    double mean_rating() const;
};

/// Reads a MovieLens rating file (u.data or ratings.dat). LF and CRLF are both accepted.
std::vector<RatingTriplet> parse_movielens(const std::filesystem::path& path, RatingFormat format);

/// Same parser over an in-memory buffer; `source` names it in error messages.
std::vector<RatingTriplet> parse_movielens_text(std::string_view text, RatingFormat format,
                                                std::string_view source = "<memory>");

/// Builds vocabularies in first-seen order. Without an explicit `k_max` the
/// ceiling is the largest rating rounded up to an integer.
Dataset build_dataset(const std::vector<RatingTriplet>& triplets, std::optional<double> k_max = {});

/// Seeded global shuffle, then the first ceil(n * train_fraction) ratings go to
/// train. Both halves keep the full vocabularies and k_max.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// y / k_max.
double normalize_target(double y, double k_max);

}  // namespace drcf
