#include "drcf/persist.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "drcf/error.hpp"

namespace drcf {

namespace {

void put_real(std::ostream& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.write(buf, res.ptr - buf);
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        std::string line;
        if (!std::getline(in_, line)) throw ShapeError(std::string("model file truncated: expected ") + what);
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

std::size_t parse_count(const std::string& s, std::size_t line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ShapeError("line " + std::to_string(line) + ": bad count '" + s + "'");
    }
    return v;
}

double parse_real(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    const bool special = s.find_first_of("nNiI") != std::string::npos;
    if ((ec != std::errc{} || ptr != s.data() + s.size()) && !special) {
        throw ShapeError("line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    if (special || !std::isfinite(v)) throw NonFiniteError("line " + std::to_string(line) + ": non-finite value '" + s + "'");
    return v;
}

Vocab read_vocab(LineReader& reader, char tag, std::size_t expected) {
    const auto head = tokens(reader.next("vocabulary header"));
    if (head.size() != 2 || head[0] != std::string(1, tag)) {
        throw ShapeError("line " + std::to_string(reader.line_no()) + ": expected '" + tag + " <count>'");
    }
    const std::size_t n = parse_count(head[1], reader.line_no());
    if (n != expected) throw ShapeError(std::string("vocabulary ") + tag + " size disagrees with header");
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(reader.next("vocabulary entry"));
    return Vocab(std::move(ids));
}

}  // namespace

void write_model(const TrainedModel& model, std::ostream& out) {
    const auto& shape = model.params.shape();
    if (model.users.size() != shape.users || model.items.size() != shape.items) {
        throw ShapeError("vocabulary sizes do not match the parameter tables");
    }
    out << "DRCF " << model_format_version << '\n';
    out << "H " << shape.d << ' ' << shape.h << ' ';
    put_real(out, model.params.k_max());
    out << ' ' << shape.users << ' ' << shape.items << ' ';
    put_real(out, model.lambda);
    out << ' ';
    put_real(out, model.global_mean);
    out << '\n';
    out << "U " << model.users.size() << '\n';
    for (const auto& id : model.users.ids()) out << id << '\n';
    out << "I " << model.items.size() << '\n';
    for (const auto& id : model.items.ids()) out << id << '\n';
    const auto values = model.params.values();
    for (const auto& slot : model.params.layout().slots()) {
        out << "T " << slot.name << ' ' << slot.rows << ' ' << slot.cols << '\n';
        for (std::size_t r = 0; r < slot.rows; ++r) {
            for (std::size_t c = 0; c < slot.cols; ++c) {
                if (c) out << ' ';
                put_real(out, values[slot.offset + r * slot.cols + c]);
            }
            out << '\n';
        }
    }
}

std::string to_string(const TrainedModel& model) {
    std::ostringstream out;
    write_model(model, out);
    return out.str();
}

void save(const TrainedModel& model, const std::filesystem::path& path) {
    const std::string text = to_string(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

TrainedModel read_model(std::istream& in) {
    LineReader reader(in);
    const auto magic = tokens(reader.next("format tag"));
    if (magic.size() != 2 || magic[0] != "DRCF") throw FormatError("not a DRCF model file");
    if (magic[1] != std::to_string(model_format_version)) {
        throw VersionError("unsupported model format version " + magic[1]);
    }

    const auto head = tokens(reader.next("header"));
    if (head.size() != 8 || head[0] != "H") throw ShapeError("malformed header line");
    const std::size_t line = reader.line_no();
    ModelShape shape;
    shape.d = parse_count(head[1], line);
    shape.h = parse_count(head[2], line);
    const double k_max = parse_real(head[3], line);
    shape.users = parse_count(head[4], line);
    shape.items = parse_count(head[5], line);

    TrainedModel model;
    model.lambda = parse_real(head[6], line);
    model.global_mean = parse_real(head[7], line);
    model.users = read_vocab(reader, 'U', shape.users);
    model.items = read_vocab(reader, 'I', shape.items);

    const ParamLayout layout(shape);
    std::vector<double> values(layout.total());
    for (const auto& slot : layout.slots()) {
        const auto th = tokens(reader.next("tensor header"));
        const std::size_t tl = reader.line_no();
        if (th.size() != 4 || th[0] != "T" || th[1] != slot.name || parse_count(th[2], tl) != slot.rows ||
            parse_count(th[3], tl) != slot.cols) {
            throw ShapeError("line " + std::to_string(tl) + ": expected 'T " + slot.name + " " +
                             std::to_string(slot.rows) + " " + std::to_string(slot.cols) + "'");
        }
        for (std::size_t r = 0; r < slot.rows; ++r) {
            const auto row = tokens(reader.next("tensor row"));
            if (row.size() != slot.cols) {
                throw ShapeError("line " + std::to_string(reader.line_no()) + ": expected " +
                                 std::to_string(slot.cols) + " values");
            }
            for (std::size_t c = 0; c < slot.cols; ++c) {
                values[slot.offset + r * slot.cols + c] = parse_real(row[c], reader.line_no());
            }
        }
    }
    model.params = ModelParams(shape, k_max, std::move(values));
    return model;
}

TrainedModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path.string());
    return read_model(in);
}

}  // namespace drcf
