#include "drcf/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "drcf/error.hpp"
#include "drcf/random.hpp"

namespace drcf {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

[[noreturn]] void malformed(std::string_view source, std::size_t line_no, std::string_view text) {
    std::ostringstream msg;
    msg << source << ":" << line_no << ": malformed rating line '" << text << "'";
    throw DataError(msg.str());
}

}  // namespace

RatingFormat parse_format(std::string_view name) {
    if (name == "ml100k") return RatingFormat::ml100k;
    if (name == "ml1m") return RatingFormat::ml1m;
    throw InvalidArgument("unknown rating format '" + std::string(name) + "' (expected ml100k or ml1m)");
}

Vocab::Vocab(std::vector<std::string> ids) {
    for (auto& id : ids) {
        if (forward_.contains(id)) throw DataError("duplicate vocabulary entry '" + id + "'");
        intern(id);
    }
}

std::uint32_t Vocab::intern(const std::string& raw) {
    const auto [it, inserted] = forward_.try_emplace(raw, static_cast<std::uint32_t>(backward_.size()));
    if (inserted) backward_.push_back(raw);
    return it->second;
}

std::optional<std::uint32_t> Vocab::find(const std::string& raw) const {
    const auto it = forward_.find(raw);
    if (it == forward_.end()) return std::nullopt;
    return it->second;
}

double Dataset::mean_rating() const {
    if (ratings.empty()) throw DataError("mean of an empty dataset");
    double sum = 0.0;
    for (const auto& r : ratings) sum += r.rating;
    return sum / static_cast<double>(ratings.size());
}

std::vector<RatingTriplet> parse_movielens_text(std::string_view text, RatingFormat format, std::string_view source) {
    const std::string_view sep = format == RatingFormat::ml100k ? "\t" : "::";
    std::vector<RatingTriplet> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto fields = split_fields(line, sep);
        if (fields.size() != 3 && fields.size() != 4) malformed(source, line_no, line);
        RatingTriplet t;
        if (fields[0].empty() || fields[1].empty()) malformed(source, line_no, line);
        t.user_raw = std::string(fields[0]);
        t.item_raw = std::string(fields[1]);
        if (!parse_double(fields[2], t.rating)) malformed(source, line_no, line);
        if (fields.size() == 4) {
            std::int64_t ts = 0;
            if (!parse_int(fields[3], ts)) malformed(source, line_no, line);
            t.timestamp = ts;
        }
        out.push_back(std::move(t));
    }
    if (out.empty()) throw DataError(std::string(source) + ": no ratings");
    return out;
}

std::vector<RatingTriplet> parse_movielens(const std::filesystem::path& path, RatingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open rating file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading " + path.string());
    return parse_movielens_text(buf.str(), format, path.string());
}

Dataset build_dataset(const std::vector<RatingTriplet>& triplets, std::optional<double> k_max) {
    if (triplets.empty()) throw DataError("no ratings");
    if (k_max && !(*k_max > 0.0 && std::isfinite(*k_max))) throw InvalidArgument("k_max must be positive and finite");

    Dataset ds;
    ds.ratings.reserve(triplets.size());
    double observed_max = 0.0;
    for (const auto& t : triplets) {
        if (!std::isfinite(t.rating) || t.rating < 0.0) {
            throw DataError("rating " + std::to_string(t.rating) + " for user " + t.user_raw + " is negative or non-finite");
        }
        if (k_max && t.rating > *k_max) {
            throw DataError("rating " + std::to_string(t.rating) + " for user " + t.user_raw + " exceeds k_max " +
                            std::to_string(*k_max));
        }
        observed_max = std::max(observed_max, t.rating);
        ds.ratings.push_back({ds.users.intern(t.user_raw), ds.items.intern(t.item_raw), t.rating});
    }
    if (k_max) {
        ds.k_max = *k_max;
    } else {
        ds.k_max = std::ceil(observed_max);
        if (ds.k_max <= 0.0) throw DataError("all ratings are zero; pass k_max explicitly");
    }
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must lie in (0, 1)");
    if (dataset.empty()) throw DataError("cannot split an empty dataset");

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng({seed});
    shuffle(std::span<std::size_t>(order), rng);

    const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(dataset.size()) * train_fraction - 1e-9));
    Dataset train{{}, dataset.users, dataset.items, dataset.k_max};
    Dataset test{{}, dataset.users, dataset.items, dataset.k_max};
    train.ratings.reserve(n_train);
    test.ratings.reserve(dataset.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : test).ratings.push_back(dataset.ratings[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

double normalize_target(double y, double k_max) {
    if (!(k_max > 0.0)) throw InvalidArgument("k_max must be positive");
    return y / k_max;
}

}  // namespace drcf
