#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <vector>

namespace pxgen {

using Vector = std::vector<double>;

// Vectorized reductions peel a data-dependent number of leading elements when
// the buffer is not packet aligned, so heap placement would leak into the
// rounding of matrix products. Fixing the alignment keeps results reproducible.
template <typename T>
struct CacheAlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    CacheAlignedAllocator() = default;
    template <typename U>
    CacheAlignedAllocator(const CacheAlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const CacheAlignedAllocator<U>&) const noexcept { return true; }
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    Matrix transposed() const;
    double trace() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double, CacheAlignedAllocator<double>> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool is_symmetric(const Matrix& a, double tol = 1e-10);

// Averages A and Aᵀ in place; used after products that are symmetric in exact
// arithmetic.
void symmetrize(Matrix& a);

struct MomentPair {
    Vector mean;
    Matrix covariance;
};

struct EigenDecomposition {
    Vector values;   // descending
    Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi eigensolver for symmetric matrices.
EigenDecomposition sym_eig(const Matrix& a);

// Symmetric square root of a positive semidefinite matrix, computed as
// V·diag(sqrt(λ + regularizer))·Vᵀ. Eigenvalues in [-1e-8, 0) are treated as 0.
Matrix spd_sqrt(const Matrix& a, double regularizer = 0.0);

// Sample mean and (n - 1)-divisor covariance.
MomentPair mean_cov(std::span<const Vector> samples);

// Nearest-rank percentile: the ceil(p·n/100)-th smallest value, p in (0, 100].
double percentile(std::span<const double> values, double p);

Matrix pairwise_distances(std::span<const Vector> points);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace pxgen
