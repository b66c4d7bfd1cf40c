#pragma once

// Finite-dimensional linear forward operators: dense matrices, circular
// convolutions and the 2-D forward-difference gradient, together with
// spectral decompositions and fractional powers of A*A.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace regselect {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void check_dim(Index got, Index want, const char* what)
{
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected dimension "
                             + std::to_string(want) + ", got "
                             + std::to_string(got));
    }
}

inline Index wrap(Index i, Index n)
{
    const Index r = i % n;
    return r < 0 ? r + n : r;
}

} // namespace detail

/// Relative cutoff below which singular values count as zero.
inline constexpr double rank_cutoff = 1e-12;

/*
 * Thin SVD A = U diag(sigma) V^T with sigma sorted nonincreasing.
 * Only the first rank() triplets are used by fractional powers and filters;
 * the rest are kept for reconstruction.
 */
struct SpectralDecomposition {
    Vector singular_values;
    Matrix left;   // m x p
    Matrix right;  // d x p

    static SpectralDecomposition of(const Matrix& a)
    {
        Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
    }

    Index rank() const
    {
        if (singular_values.size() == 0 || singular_values[0] <= 0.0) return 0;
        const double cut = rank_cutoff * singular_values[0];
        Index r = 0;
        while (r < singular_values.size() && singular_values[r] > cut) ++r;
        return r;
    }

    Index rows() const { return left.rows(); }
    Index cols() const { return right.rows(); }

    Matrix reconstruct() const
    {
        return left * singular_values.asDiagonal() * right.transpose();
    }
};

class DenseOperator {
public:
    DenseOperator() : DenseOperator(Matrix(0, 0)) {}

    explicit DenseOperator(Matrix m)
        : matrix_(std::make_shared<const Matrix>(std::move(m))),
          cache_(std::make_shared<Cache>())
    {}

    Index rows() const { return matrix_->rows(); }
    Index cols() const { return matrix_->cols(); }
    const Matrix& matrix() const { return *matrix_; }

    Vector apply(const Vector& x) const
    {
        detail::check_dim(x.size(), cols(), "apply");
        return (*matrix_) * x;
    }

    Vector adjoint_apply(const Vector& y) const
    {
        detail::check_dim(y.size(), rows(), "adjoint_apply");
        return matrix_->transpose() * y;
    }

    // Computed once and shared by every copy of this operator.
    const SpectralDecomposition& decomposition() const
    {
        std::call_once(cache_->once, [this] {
            cache_->decomp = SpectralDecomposition::of(*matrix_);
        });
        return *cache_->decomp;
    }

    bool has_cached_decomposition() const { return cache_->decomp.has_value(); }

    double norm() const
    {
        const auto& sv = decomposition().singular_values;
        return sv.size() == 0 ? 0.0 : sv[0];
    }

    DenseOperator normalized() const
    {
        const double n = norm();
        if (!(n > 0.0)) throw std::invalid_argument("normalize: zero operator");
        return DenseOperator((*matrix_) / n);
    }

private:
    struct Cache {
        std::once_flag once;
        std::optional<SpectralDecomposition> decomp;
    };
    std::shared_ptr<const Matrix> matrix_;
    std::shared_ptr<Cache> cache_;
};

/*
 * Circular convolution (Ax)_i = sum_k h_k x_{i - (k - origin)}, indices mod d.
 * `origin` is the kernel index that acts as zero shift.
 */
class ConvolutionOperator {
public:
    ConvolutionOperator() = default;

    explicit ConvolutionOperator(Vector kernel, Index origin = 0)
        : kernel_(std::move(kernel)), origin_(origin)
    {
        if (kernel_.size() == 0) {
            throw std::invalid_argument("convolution: empty kernel");
        }
        origin_ = detail::wrap(origin_, kernel_.size());
        norm_ = spectral_radius(kernel_);
    }

    Index rows() const { return kernel_.size(); }
    Index cols() const { return kernel_.size(); }
    const Vector& kernel() const { return kernel_; }
    Index origin() const { return origin_; }

    Vector apply(const Vector& x) const
    {
        detail::check_dim(x.size(), cols(), "apply");
        const Index d = kernel_.size();
        Vector out = Vector::Zero(d);
        for (Index k = 0; k < d; ++k) {
            const double h = kernel_[k];
            if (h == 0.0) continue;
            const Index shift = k - origin_;
            for (Index i = 0; i < d; ++i) {
                out[i] += h * x[detail::wrap(i - shift, d)];
            }
        }
        return out;
    }

    Vector adjoint_apply(const Vector& y) const
    {
        detail::check_dim(y.size(), rows(), "adjoint_apply");
        const Index d = kernel_.size();
        Vector out = Vector::Zero(d);
        for (Index k = 0; k < d; ++k) {
            const double h = kernel_[k];
            if (h == 0.0) continue;
            const Index shift = k - origin_;
            for (Index i = 0; i < d; ++i) {
                out[detail::wrap(i - shift, d)] += h * y[i];
            }
        }
        return out;
    }

    Matrix to_dense() const
    {
        const Index d = kernel_.size();
        Matrix c(d, d);
        for (Index i = 0; i < d; ++i) {
            for (Index j = 0; j < d; ++j) {
                c(i, j) = kernel_[detail::wrap(i - j + origin_, d)];
            }
        }
        return c;
    }

    double norm() const { return norm_; }

    ConvolutionOperator normalized() const
    {
        const double n = norm();
        if (!(n > 0.0)) throw std::invalid_argument("normalize: zero operator");
        return ConvolutionOperator(kernel_ / n, origin_);
    }

private:
    // Circulant matrices are normal, so the 2-norm is the largest DFT modulus.
    static double spectral_radius(const Vector& kernel)
    {
        const Index d = kernel.size();
        double best = 0.0;
        for (Index f = 0; f < d; ++f) {
            double re = 0.0;
            double im = 0.0;
            for (Index k = 0; k < d; ++k) {
                if (kernel[k] == 0.0) continue;
                const double phase = 2.0 * std::numbers::pi
                                     * static_cast<double>((f * k) % d)
                                     / static_cast<double>(d);
                re += kernel[k] * std::cos(phase);
                im -= kernel[k] * std::sin(phase);
            }
            best = std::max(best, std::hypot(re, im));
        }
        return best;
    }

    Vector kernel_;
    Index origin_ = 0;
    double norm_ = 0.0;
};

/*
 * Forward differences of a side x side image stored row-major.
 * Output layout: [vertical differences (side-1) x side | horizontal
 * differences side x (side-1)], total 2 side (side-1) entries.
 */
class GradientOperator {
public:
    GradientOperator() = default;

    explicit GradientOperator(Index side) : side_(side)
    {
        if (side < 1) throw std::invalid_argument("gradient: side must be >= 1");
    }

    Index side() const { return side_; }
    Index rows() const { return 2 * side_ * (side_ - 1); }
    Index cols() const { return side_ * side_; }

    Vector apply(const Vector& x) const
    {
        detail::check_dim(x.size(), cols(), "apply");
        const Index n = side_;
        const Index half = n * (n - 1);
        Vector p(rows());
        for (Index r = 0; r + 1 < n; ++r) {
            for (Index c = 0; c < n; ++c) {
                p[r * n + c] = x[(r + 1) * n + c] - x[r * n + c];
            }
        }
        for (Index r = 0; r < n; ++r) {
            for (Index c = 0; c + 1 < n; ++c) {
                p[half + r * (n - 1) + c] = x[r * n + c + 1] - x[r * n + c];
            }
        }
        return p;
    }

    // Negative divergence.
    Vector adjoint_apply(const Vector& p) const
    {
        detail::check_dim(p.size(), rows(), "adjoint_apply");
        const Index n = side_;
        const Index half = n * (n - 1);
        Vector x = Vector::Zero(cols());
        for (Index r = 0; r + 1 < n; ++r) {
            for (Index c = 0; c < n; ++c) {
                const double v = p[r * n + c];
                x[(r + 1) * n + c] += v;
                x[r * n + c] -= v;
            }
        }
        for (Index r = 0; r < n; ++r) {
            for (Index c = 0; c + 1 < n; ++c) {
                const double v = p[half + r * (n - 1) + c];
                x[r * n + c + 1] += v;
                x[r * n + c] -= v;
            }
        }
        return x;
    }

    Matrix to_dense() const
    {
        Matrix m(rows(), cols());
        Vector e = Vector::Zero(cols());
        for (Index j = 0; j < cols(); ++j) {
            e[j] = 1.0;
            m.col(j) = apply(e);
            e[j] = 0.0;
        }
        return m;
    }

    // D^T D is the Neumann Laplacian; its top eigenvalue is 2(2 - 2cos(pi(n-1)/n)).
    double norm() const
    {
        if (side_ < 2) return 0.0;
        const double n = static_cast<double>(side_);
        return std::sqrt(2.0 * (2.0 - 2.0 * std::cos(std::numbers::pi * (n - 1.0) / n)));
    }

private:
    Index side_ = 1;
};

template <class Op>
concept LinearMap = requires(const Op& op, const Vector& v) {
    { op.rows() } -> std::convertible_to<Index>;
    { op.cols() } -> std::convertible_to<Index>;
    { op.apply(v) } -> std::convertible_to<Vector>;
    { op.adjoint_apply(v) } -> std::convertible_to<Vector>;
    { op.norm() } -> std::convertible_to<double>;
};

using ForwardOperator = std::variant<DenseOperator, ConvolutionOperator, GradientOperator>;

inline Vector apply(const ForwardOperator& op, const Vector& x)
{
    return std::visit([&](const auto& o) { return o.apply(x); }, op);
}

inline Vector adjoint_apply(const ForwardOperator& op, const Vector& y)
{
    return std::visit([&](const auto& o) { return o.adjoint_apply(y); }, op);
}

inline double operator_norm(const ForwardOperator& op)
{
    return std::visit([](const auto& o) { return o.norm(); }, op);
}

inline Index rows(const ForwardOperator& op)
{
    return std::visit([](const auto& o) { return o.rows(); }, op);
}

inline Index cols(const ForwardOperator& op)
{
    return std::visit([](const auto& o) { return o.cols(); }, op);
}

inline Matrix to_dense(const ForwardOperator& op)
{
    return std::visit(
        [](const auto& o) -> Matrix {
            if constexpr (std::is_same_v<std::decay_t<decltype(o)>, DenseOperator>) {
                return o.matrix();
            } else {
                return o.to_dense();
            }
        },
        op);
}

inline DenseOperator normalize(const DenseOperator& op) { return op.normalized(); }

/*
 * (A*A)^s z = sum_i (sigma_i^2)^s <v_i, z> v_i over the numerical range.
 * For s = 0 this is the orthogonal projection onto range(A*A).
 */
inline Vector fractional_power_apply(const SpectralDecomposition& decomp, double s,
                                     const Vector& z)
{
    if (!(s >= 0.0)) throw std::invalid_argument("fractional power: s must be >= 0");
    detail::check_dim(z.size(), decomp.cols(), "fractional_power_apply");
    const Index r = decomp.rank();
    const auto v = decomp.right.leftCols(r);
    Vector coeff = v.transpose() * z;
    for (Index i = 0; i < r; ++i) {
        coeff[i] *= std::pow(decomp.singular_values[i], 2.0 * s);
    }
    return v * coeff;
}

/*
 * Second derivative of phi(x) = exp(-x^2 / (2 pi^2)) sampled at integer
 * offsets from the center index d/2, with its mean removed.
 */
inline Vector gaussian_deriv2_kernel(Index d)
{
    if (d < 3) throw std::invalid_argument("gaussian kernel: length must be >= 3");
    constexpr double pi = std::numbers::pi;
    const Index center = d / 2;
    Vector h(d);
    for (Index i = 0; i < d; ++i) {
        const double x = static_cast<double>(i - center);
        const double phi = std::exp(-x * x / (2.0 * pi * pi));
        h[i] = phi * (x * x / (pi * pi * pi * pi) - 1.0 / (pi * pi));
    }
    h.array() -= h.mean();
    return h;
}

/// Normalized circular blur built from gaussian_deriv2_kernel, centered.
inline ConvolutionOperator gaussian_deriv2_blur(Index d)
{
    return ConvolutionOperator(gaussian_deriv2_kernel(d), d / 2).normalized();
}

} // namespace regselect
