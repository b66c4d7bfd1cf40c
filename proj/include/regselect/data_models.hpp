#pragma once

// Synthetic data models, the IDX image reader and model descriptors.

#include "regselect/operators.hpp"
#include "regselect/param_select.hpp"
#include "regselect/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace regselect {

struct SpectralSource {
    Index d = 70;
    double s = 0.5;
    double tau = 0.01;
    std::uint64_t operator_seed = 0;
};

struct SparseDenoise {
    Index d = 1024;
    Index sparsity = 16;
    double tau = 0.1;
};

struct SparseDeblur {
    Index d = 256;
    Index sparsity = 8;
    double tau = 0.1;
};

struct TvImages {
    std::string images;        // IDX file; empty selects synthetic digits
    Index side = 28;           // synthetic image side
    std::size_t pool = 200;    // images kept from the source
    double train_fraction = 0.5;
    double tau = 0.1;
    std::uint64_t pool_seed = 0;
};

using DataModel = std::variant<SpectralSource, SparseDenoise, SparseDeblur, TvImages>;

/// Which part of an image pool a draw comes from; ignored by the vector models.
enum class Split { Train, Test };

/// z uniform in the unit ball of R^d: Gaussian direction, radius U^(1/d).
inline Vector sample_unit_ball(Index d, Rng& rng)
{
    if (d < 1) throw std::invalid_argument("sample_unit_ball: d must be >= 1");
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector z(d);
    double n2 = 0.0;
    do {
        for (Index i = 0; i < d; ++i) z[i] = g(rng);
        n2 = z.squaredNorm();
    } while (n2 == 0.0);
    return z * (std::pow(u(rng), 1.0 / static_cast<double>(d)) / std::sqrt(n2));
}

inline Vector gaussian_noise(Index d, double tau, Rng& rng)
{
    std::normal_distribution<double> g;
    Vector e(d);
    for (Index i = 0; i < d; ++i) e[i] = tau * g(rng);
    return e;
}

/// d x d standard Gaussian matrix scaled to unit spectral norm.
inline DenseOperator gaussian_operator(Index d, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, 0, Stream::Operator));
    std::normal_distribution<double> g;
    Matrix a(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i) a(i, j) = g(rng);
    return DenseOperator(std::move(a)).normalized();
}

/// Exactly `sparsity` nonzeros at uniform positions, random signs and magnitudes, ||x|| = 1.
inline Vector sparse_signal(Index d, Index sparsity, Rng& rng)
{
    if (sparsity < 1 || sparsity > d) throw std::invalid_argument("sparsity must lie in [1, d]");
    std::vector<Index> idx(static_cast<std::size_t>(d));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector x = Vector::Zero(d);
    for (Index k = 0; k < sparsity; ++k) {
        std::uniform_int_distribution<Index> pick(k, d - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
        const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
        x[idx[static_cast<std::size_t>(k)]] = sign * (1.0 - u(rng));
    }
    return x / x.norm();
}

// ---------------------------------------------------------------------------
// IDX images

class IdxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ImageSet {
    Index rows = 0;
    Index cols = 0;
    std::vector<Vector> images;  // row-major, values in [0, 1]
};

inline ImageSet parse_idx_images(std::span<const unsigned char> bytes)
{
    auto be32 = [&](std::size_t off) {
        return (std::uint32_t{bytes[off]} << 24) | (std::uint32_t{bytes[off + 1]} << 16)
               | (std::uint32_t{bytes[off + 2]} << 8) | std::uint32_t{bytes[off + 3]};
    };
    if (bytes.size() < 4) throw IdxError("truncated");
    if (be32(0) != 0x00000803u) throw IdxError("bad magic");
    if (bytes.size() < 16) throw IdxError("truncated");
    const std::uint64_t count = be32(4);
    const std::uint64_t rows = be32(8);
    const std::uint64_t cols = be32(12);
    const std::uint64_t limit = std::uint64_t{1} << 40;
    if (rows != 0 && cols > limit / rows) throw IdxError("dimension overflow");
    const std::uint64_t pixels = rows * cols;
    if (pixels != 0 && count > limit / pixels) throw IdxError("dimension overflow");
    if (bytes.size() - 16 < count * pixels) throw IdxError("truncated");

    ImageSet out;
    out.rows = static_cast<Index>(rows);
    out.cols = static_cast<Index>(cols);
    out.images.reserve(count);
    std::size_t off = 16;
    for (std::uint64_t c = 0; c < count; ++c) {
        Vector img(static_cast<Index>(pixels));
        for (Index p = 0; p < img.size(); ++p) img[p] = bytes[off++] / 255.0;
        out.images.push_back(std::move(img));
    }
    return out;
}

inline ImageSet load_idx_images(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxError("cannot open " + path);
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    return parse_idx_images(bytes);
}

/// Serializes images (values rounded to bytes) in the IDX image layout.
inline std::vector<unsigned char> encode_idx_images(const ImageSet& set)
{
    std::vector<unsigned char> out;
    auto put32 = [&](std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
    };
    put32(0x00000803u);
    put32(static_cast<std::uint32_t>(set.images.size()));
    put32(static_cast<std::uint32_t>(set.rows));
    put32(static_cast<std::uint32_t>(set.cols));
    for (const auto& img : set.images) {
        for (Index p = 0; p < img.size(); ++p) {
            out.push_back(static_cast<unsigned char>(std::lround(std::clamp(img[p], 0.0, 1.0) * 255.0)));
        }
    }
    return out;
}

/*
 * Seven-segment digit glyphs on a side x side canvas with random stroke
 * width and offset. Piecewise constant, values in {0, 1}.
 */
inline Vector synthetic_digit(Index side, int digit, Rng& rng)
{
    static constexpr std::array<unsigned, 10> segments{0x3F, 0x06, 0x5B, 0x4F, 0x66,
                                                       0x6D, 0x7D, 0x07, 0x7F, 0x6F};
    if (side < 8) throw std::invalid_argument("synthetic_digit: side must be >= 8");
    std::uniform_int_distribution<Index> jitter(-side / 10, side / 10);
    std::uniform_int_distribution<Index> width(std::max<Index>(1, side / 14), std::max<Index>(1, side / 9));
    const Index w = width(rng);
    const Index top = side / 6 + jitter(rng);
    const Index left = side / 4 + jitter(rng);
    const Index h = side - 2 * (side / 6);
    const Index half = h / 2;
    const Index wd = side / 2;
    Matrix img = Matrix::Zero(side, side);
    auto fill = [&](Index r0, Index c0, Index r1, Index c1) {
        for (Index r = std::max<Index>(0, r0); r < std::min(side, r1); ++r)
            for (Index c = std::max<Index>(0, c0); c < std::min(side, c1); ++c) img(r, c) = 1.0;
    };
    const unsigned m = segments[static_cast<std::size_t>(digit % 10)];
    if (m & 0x01) fill(top, left, top + w, left + wd);                          // a
    if (m & 0x02) fill(top, left + wd - w, top + half, left + wd);              // b
    if (m & 0x04) fill(top + half, left + wd - w, top + h, left + wd);          // c
    if (m & 0x08) fill(top + h - w, left, top + h, left + wd);                  // d
    if (m & 0x10) fill(top + half, left, top + h, left + w);                    // e
    if (m & 0x20) fill(top, left, top + half, left + w);                        // f
    if (m & 0x40) fill(top + half - w / 2, left, top + half - w / 2 + w, left + wd);  // g
    Vector out(side * side);
    for (Index r = 0; r < side; ++r)
        for (Index c = 0; c < side; ++c) out[r * side + c] = img(r, c);
    return out;
}

// ---------------------------------------------------------------------------
// Problem instances

/// A data model with its forward operator and, for images, the image pool.
class Problem {
public:
    explicit Problem(DataModel model) : model_(std::move(model))
    {
        std::visit([this](const auto& m) { init(m); }, model_);
    }

    /// Spectral model with a caller-supplied operator instead of the seeded Gaussian one.
    Problem(const SpectralSource& model, DenseOperator a) : model_(model)
    {
        if (a.rows() != model.d || a.cols() != model.d) throw DimensionError("operator does not match d");
        if (!(model.s >= 0.0)) throw std::invalid_argument("spectral model: s must be >= 0");
        check_tau(model.tau);
        a.decomposition();
        op_ = std::move(a);
    }

    const DataModel& model() const { return model_; }
    const ForwardOperator& op() const { return op_; }
    /// Present for SpectralSource.
    const DenseOperator* dense() const { return std::get_if<DenseOperator>(&op_); }
    Index signal_dim() const { return cols(op_); }
    /// Side of the square images for TvImages, 0 otherwise.
    Index image_side() const { return side_; }
    const std::vector<Vector>& pool() const { return pool_; }
    double tau() const
    {
        return std::visit([](const auto& m) { return m.tau; }, model_);
    }

    Sample draw(Rng& rng, Split split = Split::Train) const
    {
        return std::visit([&](const auto& m) { return draw_impl(m, rng, split); }, model_);
    }

    std::vector<Sample> draw_many(std::size_t n, Rng& rng, Split split = Split::Train) const
    {
        std::vector<Sample> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng, split));
        return out;
    }

private:
    void init(const SpectralSource& m)
    {
        if (m.d < 1) throw std::invalid_argument("spectral model: d must be >= 1");
        if (!(m.s >= 0.0)) throw std::invalid_argument("spectral model: s must be >= 0");
        check_tau(m.tau);
        const DenseOperator a = gaussian_operator(m.d, m.operator_seed);
        a.decomposition();
        op_ = a;
    }
    void init(const SparseDenoise& m)
    {
        check_tau(m.tau);
        sparse_signal_check(m.d, m.sparsity);
        Vector delta = Vector::Zero(m.d);
        delta[0] = 1.0;
        op_ = ConvolutionOperator(delta);
    }
    void init(const SparseDeblur& m)
    {
        check_tau(m.tau);
        sparse_signal_check(m.d, m.sparsity);
        op_ = gaussian_deriv2_blur(m.d);
    }
    void init(const TvImages& m)
    {
        check_tau(m.tau);
        if (!(m.train_fraction > 0.0 && m.train_fraction < 1.0)) {
            throw std::invalid_argument("tv model: train fraction must lie in (0, 1)");
        }
        if (m.pool < 2) throw std::invalid_argument("tv model: pool must hold >= 2 images");
        if (m.images.empty()) {
            Rng rng(derive_seed(m.pool_seed, 0, Stream::Pool));
            side_ = m.side;
            for (std::size_t i = 0; i < m.pool; ++i) {
                pool_.push_back(synthetic_digit(m.side, static_cast<int>(i % 10), rng));
            }
        } else {
            ImageSet set = load_idx_images(m.images);
            if (set.rows != set.cols) throw std::invalid_argument("tv model: images must be square");
            if (set.images.size() < 2) throw std::invalid_argument("tv model: need >= 2 images");
            side_ = set.rows;
            set.images.resize(std::min(set.images.size(), m.pool));
            pool_ = std::move(set.images);
        }
        train_count_ = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::floor(m.train_fraction * static_cast<double>(pool_.size()))),
            1, pool_.size() - 1);
        Vector delta = Vector::Zero(side_ * side_);
        delta[0] = 1.0;
        op_ = ConvolutionOperator(delta);
    }

    static void check_tau(double tau)
    {
        if (!(tau >= 0.0)) throw std::invalid_argument("tau must be >= 0");
    }
    static void sparse_signal_check(Index d, Index sparsity)
    {
        if (d < 1 || sparsity < 1 || sparsity > d) {
            throw std::invalid_argument("sparse model: need 1 <= sparsity <= d");
        }
    }
    static void check_ball(const Vector& x)
    {
        if (x.norm() > 1.0 + 1e-12) throw std::logic_error("generated truth violates ||x|| <= 1");
    }

    Sample draw_impl(const SpectralSource& m, Rng& rng, Split) const
    {
        const DenseOperator& a = std::get<DenseOperator>(op_);
        const Vector z = sample_unit_ball(m.d, rng);
        Vector x = fractional_power_apply(a.decomposition(), m.s, z);
        check_ball(x);
        Vector y = a.apply(x) + gaussian_noise(m.d, m.tau, rng);
        return {std::move(y), std::move(x)};
    }
    Sample draw_impl(const SparseDenoise& m, Rng& rng, Split) const
    {
        Vector x = sparse_signal(m.d, m.sparsity, rng);
        check_ball(x);
        Vector y = x + gaussian_noise(m.d, m.tau, rng);
        return {std::move(y), std::move(x)};
    }
    Sample draw_impl(const SparseDeblur& m, Rng& rng, Split) const
    {
        Vector x = sparse_signal(m.d, m.sparsity, rng);
        check_ball(x);
        Vector y = regselect::apply(op_, x) + gaussian_noise(m.d, m.tau, rng);
        return {std::move(y), std::move(x)};
    }
    Sample draw_impl(const TvImages& m, Rng& rng, Split split) const
    {
        const std::size_t lo = split == Split::Train ? 0 : train_count_;
        const std::size_t hi = split == Split::Train ? train_count_ : pool_.size();
        std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
        Vector x = pool_[pick(rng)];
        Vector y = x + gaussian_noise(x.size(), m.tau, rng);
        return {std::move(y), std::move(x)};
    }

    DataModel model_;
    ForwardOperator op_;
    std::vector<Vector> pool_;
    std::size_t train_count_ = 0;
    Index side_ = 0;
};

/// Operator fixed by the model's operator seed; pairs x = (A^T A)^s z, y = A x + eps.
inline std::pair<DenseOperator, TrainingSet> gen_spectral_dataset(const SpectralSource& model,
                                                                  std::size_t n, Rng& rng)
{
    if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
    const Problem p(model);
    return {*p.dense(), TrainingSet(p.draw_many(n, rng))};
}

template <class Model>
    requires std::same_as<Model, SparseDenoise> || std::same_as<Model, SparseDeblur>
std::pair<ForwardOperator, TrainingSet> gen_sparse_dataset(const Model& model, std::size_t n,
                                                           Rng& rng)
{
    if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
    const Problem p(model);
    return {p.op(), TrainingSet(p.draw_many(n, rng))};
}

// ---------------------------------------------------------------------------
// Descriptors: "<kind> key=value ..." on one line.

inline std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

template <class T>
T parse_integer(std::string_view s)
{
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

inline std::string model_name(const DataModel& m)
{
    static constexpr std::array<const char*, 4> names{"spectral", "sparse-denoise", "sparse-deblur",
                                                      "tv-images"};
    return names[m.index()];
}

inline std::string describe(const DataModel& model)
{
    std::ostringstream os;
    os << model_name(model);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SpectralSource>) {
                os << " d=" << m.d << " s=" << format_double(m.s) << " tau=" << format_double(m.tau)
                   << " operator_seed=" << m.operator_seed;
            } else if constexpr (std::is_same_v<T, TvImages>) {
                if (!m.images.empty()) os << " images=" << m.images;
                os << " side=" << m.side << " pool=" << m.pool
                   << " train_fraction=" << format_double(m.train_fraction)
                   << " tau=" << format_double(m.tau) << " pool_seed=" << m.pool_seed;
            } else {
                os << " d=" << m.d << " sparsity=" << m.sparsity << " tau=" << format_double(m.tau);
            }
        },
        model);
    return os.str();
}

inline DataModel parse_model(const std::string& line)
{
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    std::map<std::string, std::string> kv;
    for (std::string tok; is >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("model descriptor: bad token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto take = [&](const char* key, auto& field) {
        const auto it = kv.find(key);
        if (it == kv.end()) return;
        using F = std::decay_t<decltype(field)>;
        if constexpr (std::is_same_v<F, double>) field = parse_double(it->second);
        else if constexpr (std::is_same_v<F, std::string>) field = it->second;
        else field = parse_integer<F>(it->second);
        kv.erase(it);
    };
    DataModel out;
    if (kind == "spectral") {
        SpectralSource m;
        take("d", m.d), take("s", m.s), take("tau", m.tau), take("operator_seed", m.operator_seed);
        out = m;
    } else if (kind == "sparse-denoise" || kind == "sparse-deblur") {
        auto fill = [&](auto m) {
            take("d", m.d), take("sparsity", m.sparsity), take("tau", m.tau);
            return DataModel(m);
        };
        out = kind == "sparse-denoise" ? fill(SparseDenoise{}) : fill(SparseDeblur{});
    } else if (kind == "tv-images") {
        TvImages m;
        take("images", m.images), take("side", m.side), take("pool", m.pool);
        take("train_fraction", m.train_fraction), take("tau", m.tau), take("pool_seed", m.pool_seed);
        out = m;
    } else {
        throw std::invalid_argument("unknown model '" + kind + "'");
    }
    if (!kv.empty()) throw std::invalid_argument("model descriptor: unknown key '" + kv.begin()->first + "'");
    return out;
}

} // namespace regselect
