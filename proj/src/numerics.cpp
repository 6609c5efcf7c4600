#include "pxgen/numerics.hpp"

#include "pxgen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pxgen {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw InvalidArgument("Matrix: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        m(i, i) = values[i];
    }
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) {
        t += (*this)(i, i);
    }
    return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw InvalidArgument("matrix product: inner dimensions differ");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

namespace {

Matrix elementwise(const Matrix& a, const Matrix& b, double sign) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidArgument("matrix sum: shapes differ");
    }
    Matrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += sign * src[i];
    }
    return out;
}

void require_symmetric(const Matrix& a, const char* who) {
    if (!a.square()) {
        throw InvalidArgument(std::string(who) + ": matrix is not square");
    }
    if (!is_symmetric(a, 1e-10)) {
        throw InvalidArgument(std::string(who) + ": matrix is not symmetric");
    }
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) { return elementwise(a, b, 1.0); }
Matrix operator-(const Matrix& a, const Matrix& b) { return elementwise(a, b, -1.0); }

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) {
        s += v * v;
    }
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.values()) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

bool is_symmetric(const Matrix& a, double tol) {
    if (!a.square()) {
        return false;
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            if (!(std::abs(a(i, j) - a(j, i)) <= tol)) {
                return false;
            }
        }
    }
    return true;
}

void symmetrize(Matrix& a) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            const double m = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = m;
            a(j, i) = m;
        }
    }
}

EigenDecomposition sym_eig(const Matrix& input) {
    require_symmetric(input, "sym_eig");
    const std::size_t n = input.rows();
    Matrix a = input;
    symmetrize(a);
    Matrix v = Matrix::identity(n);

    double scale = 0.0;
    for (double x : a.values()) {
        scale = std::max(scale, std::abs(x));
    }

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps && scale > 0.0; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (std::sqrt(off) <= 1e-15 * scale * static_cast<double>(n)) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // A <- Jᵀ A J, touching only rows/columns p and q.
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out{Vector(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) {
            out.vectors(k, j) = v(k, order[j]);
        }
    }
    return out;
}

Matrix spd_sqrt(const Matrix& a, double regularizer) {
    if (!(regularizer >= 0.0)) {
        throw InvalidArgument("spd_sqrt: regularizer must be non-negative");
    }
    const EigenDecomposition eig = sym_eig(a);
    const std::size_t n = a.rows();
    Vector roots(n);
    for (std::size_t j = 0; j < n; ++j) {
        double lambda = eig.values[j];
        if (lambda < -1e-8) {
            throw NotPositiveSemidefinite("spd_sqrt: eigenvalue " + std::to_string(lambda) +
                                          " below -1e-8");
        }
        lambda = std::max(lambda, 0.0) + regularizer;
        roots[j] = std::sqrt(lambda);
    }
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                acc += eig.vectors(i, k) * roots[k] * eig.vectors(j, k);
            }
            s(i, j) = acc;
            s(j, i) = acc;
        }
    }
    return s;
}

MomentPair mean_cov(std::span<const Vector> samples) {
    if (samples.size() < 2) {
        throw InsufficientData("mean_cov: need at least 2 samples");
    }
    const std::size_t d = samples.front().size();
    for (const auto& s : samples) {
        if (s.size() != d) {
            throw InvalidArgument("mean_cov: samples differ in dimension");
        }
    }
    const double n = static_cast<double>(samples.size());
    MomentPair out{Vector(d, 0.0), Matrix(d, d)};
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < d; ++i) {
            out.mean[i] += s[i];
        }
    }
    for (double& m : out.mean) {
        m /= n;
    }
    Vector centered(d);
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < d; ++i) {
            centered[i] = s[i] - out.mean[i];
        }
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                out.covariance(i, j) += centered[i] * centered[j];
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const double c = out.covariance(i, j) / (n - 1.0);
            out.covariance(i, j) = c;
            out.covariance(j, i) = c;
        }
    }
    return out;
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) {
        throw InsufficientData("percentile: empty sequence");
    }
    if (!(p > 0.0 && p <= 100.0)) {
        throw InvalidArgument("percentile: p must lie in (0, 100]");
    }
    const auto n = values.size();
    // 1e-9 keeps exact products such as 95·300/100 from rounding up a rank.
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) / 100.0 - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::vector<double> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     sorted.end());
    return sorted[rank - 1];
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("euclidean_distance: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Matrix pairwise_distances(std::span<const Vector> points) {
    const std::size_t n = points.size();
    if (n > 0) {
        const std::size_t d = points.front().size();
        for (const auto& p : points) {
            if (p.size() != d) {
                throw InvalidArgument("pairwise_distances: points differ in dimension");
            }
        }
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dist = euclidean_distance(points[i], points[j]);
            out(i, j) = dist;
            out(j, i) = dist;
        }
    }
    return out;
}

}  // namespace pxgen
