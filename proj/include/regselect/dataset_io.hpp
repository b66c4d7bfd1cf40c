#pragma once

/*
 * Text dataset container, one record per line:
 *
 *   regselect-dataset 1
 *   model <descriptor>
 *   operator dense <rows> <cols>        followed by <rows> lines of <cols> numbers
 *   operator convolution <d> <origin>   followed by one line of d kernel taps
 *   operator gradient <side>
 *   pairs <n> <dim y> <dim x>
 *   y <numbers>                         n times, each followed by
 *   x <numbers>
 *   end
 *
 * Numbers use the shortest decimal form that round-trips exactly.
 */

#include "regselect/data_models.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace regselect {

inline constexpr int dataset_format_version = 1;

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dataset {
    DataModel model;
    ForwardOperator op;
    TrainingSet data;
};

namespace detail {

inline void write_numbers(std::ostream& os, const char* tag, const Vector& v)
{
    if (tag) os << tag;
    for (Index i = 0; i < v.size(); ++i) {
        if (tag || i > 0) os << ' ';
        os << format_double(v[i]);
    }
    os << '\n';
}

inline std::istringstream next_record(std::istream& is, const std::string& expect)
{
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) break;
    }
    if (!is && line.empty()) throw DatasetError("unexpected end of file, wanted '" + expect + "'");
    std::istringstream rec(line);
    std::string tag;
    rec >> tag;
    if (!expect.empty() && tag != expect) {
        throw DatasetError("expected '" + expect + "' record, found '" + tag + "'");
    }
    return rec;
}

inline Vector read_numbers(std::istringstream& rec, Index count)
{
    Vector v(count);
    std::string tok;
    for (Index i = 0; i < count; ++i) {
        if (!(rec >> tok)) throw DatasetError("short numeric record");
        try {
            v[i] = parse_double(tok);
        } catch (const std::invalid_argument& e) {
            throw DatasetError(e.what());
        }
    }
    if (rec >> tok) throw DatasetError("numeric record too long");
    return v;
}

} // namespace detail

inline void write_dataset(std::ostream& os, const Dataset& ds)
{
    os << "regselect-dataset " << dataset_format_version << '\n';
    os << "model " << describe(ds.model) << '\n';
    std::visit(
        [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, DenseOperator>) {
                const Matrix& m = op.matrix();
                os << "operator dense " << m.rows() << ' ' << m.cols() << '\n';
                for (Index i = 0; i < m.rows(); ++i) detail::write_numbers(os, nullptr, m.row(i).transpose());
            } else if constexpr (std::is_same_v<T, ConvolutionOperator>) {
                os << "operator convolution " << op.kernel().size() << ' ' << op.origin() << '\n';
                detail::write_numbers(os, nullptr, op.kernel());
            } else {
                os << "operator gradient " << op.side() << '\n';
            }
        },
        ds.op);
    const auto& first = ds.data[0];
    os << "pairs " << ds.data.size() << ' ' << first.y.size() << ' ' << first.x.size() << '\n';
    for (const auto& s : ds.data) {
        detail::write_numbers(os, "y", s.y);
        detail::write_numbers(os, "x", s.x);
    }
    os << "end\n";
}

inline Dataset read_dataset(std::istream& is)
{
    auto header = detail::next_record(is, "regselect-dataset");
    int version = 0;
    if (!(header >> version)) throw DatasetError("missing format version");
    if (version != dataset_format_version) {
        throw DatasetError("unsupported dataset version " + std::to_string(version));
    }

    auto model_rec = detail::next_record(is, "model");
    std::string descriptor;
    std::getline(model_rec >> std::ws, descriptor);
    Dataset ds;
    try {
        ds.model = parse_model(descriptor);
    } catch (const std::invalid_argument& e) {
        throw DatasetError(e.what());
    }

    auto op_rec = detail::next_record(is, "operator");
    std::string kind;
    op_rec >> kind;
    if (kind == "dense") {
        Index rows = -1, cols = -1;
        if (!(op_rec >> rows >> cols) || rows < 0 || cols < 0) throw DatasetError("bad dense operator header");
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            std::string line;
            if (!std::getline(is, line)) throw DatasetError("truncated operator payload");
            std::istringstream rec(line);
            m.row(i) = detail::read_numbers(rec, cols).transpose();
        }
        ds.op = DenseOperator(std::move(m));
    } else if (kind == "convolution") {
        Index d = -1, origin = 0;
        if (!(op_rec >> d >> origin) || d < 1) throw DatasetError("bad convolution operator header");
        std::string line;
        if (!std::getline(is, line)) throw DatasetError("truncated operator payload");
        std::istringstream rec(line);
        ds.op = ConvolutionOperator(detail::read_numbers(rec, d), origin);
    } else if (kind == "gradient") {
        Index side = 0;
        if (!(op_rec >> side) || side < 1) throw DatasetError("bad gradient operator header");
        ds.op = GradientOperator(side);
    } else {
        throw DatasetError("unknown operator kind '" + kind + "'");
    }

    auto pairs_rec = detail::next_record(is, "pairs");
    std::size_t n = 0;
    Index dy = 0, dx = 0;
    if (!(pairs_rec >> n >> dy >> dx) || n < 1) throw DatasetError("bad pairs header");
    if (dy != rows(ds.op) || dx != cols(ds.op)) throw DatasetError("pair dimensions do not match operator");
    std::vector<Sample> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto yr = detail::next_record(is, "y");
        Vector y = detail::read_numbers(yr, dy);
        auto xr = detail::next_record(is, "x");
        Vector x = detail::read_numbers(xr, dx);
        pairs.push_back({std::move(y), std::move(x)});
    }
    detail::next_record(is, "end");
    ds.data = TrainingSet(std::move(pairs));
    return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DatasetError("cannot write " + path);
    write_dataset(os, ds);
    if (!os) throw DatasetError("write failed for " + path);
}

inline Dataset load_dataset(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DatasetError("cannot open " + path);
    return read_dataset(is);
}

} // namespace regselect
