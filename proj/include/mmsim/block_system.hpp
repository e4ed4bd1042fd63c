#pragma once

// Two-scale block systems: a sparse macro block plus one tridiagonal block per
// active macro node, where cell a couples only to macro unknown a.
//
// Unknown layout: [u_0 .. u_{na-1} | cell 0 interior | cell 1 interior | ...].

#include "mmsim/error.hpp"
#include "mmsim/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <complex>
#include <vector>

namespace mmsim {

template <class T>
struct Tridiagonal {
    std::vector<T> lower; // lower[i] = A(i, i-1); lower[0] unused
    std::vector<T> diag;
    std::vector<T> upper; // upper[i] = A(i, i+1); upper[n-1] unused

    Tridiagonal() = default;
    explicit Tridiagonal(std::size_t n) : lower(n, T{}), diag(n, T{}), upper(n, T{}) {}

    std::size_t size() const { return diag.size(); }

    template <class In, class Out>
    void apply(const In& x, Out& y) const
    {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            T s = diag[i] * x[i];
            if (i > 0)
                s += lower[i] * x[i - 1];
            if (i + 1 < n)
                s += upper[i] * x[i + 1];
            y[i] = s;
        }
    }
};

/// LU without pivoting (Thomas). The cell blocks we factor are symmetric
/// positive definite or have positive definite real part.
template <class T>
class TridiagonalLU {
public:
    TridiagonalLU() = default;
    explicit TridiagonalLU(const Tridiagonal<T>& a) : lower_(a.lower), upper_(a.upper), pivot_(a.size())
    {
        const std::size_t n = a.size();
        for (std::size_t i = 0; i < n; ++i) {
            T p = a.diag[i];
            if (i > 0) {
                lower_[i] = a.lower[i] / pivot_[i - 1];
                p -= lower_[i] * a.upper[i - 1];
            }
            if (std::abs(p) == 0.0 || !std::isfinite(std::abs(p)))
                throw Error("singular cell block");
            pivot_[i] = p;
        }
    }

    template <class Vec>
    void solve_in_place(Vec& x) const
    {
        const std::size_t n = pivot_.size();
        for (std::size_t i = 1; i < n; ++i)
            x[i] -= lower_[i] * x[i - 1];
        for (std::size_t i = n; i-- > 0;) {
            if (i + 1 < n)
                x[i] -= upper_[i] * x[i + 1];
            x[i] /= pivot_[i];
        }
    }

private:
    std::vector<T> lower_;
    std::vector<T> upper_;
    std::vector<T> pivot_;
};

template <class T>
struct BlockOperator {
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    Eigen::SparseMatrix<T> macro;
    std::vector<Tridiagonal<T>> cells;
    Matrix macro_from_cell; // nc × na, column a: macro row a against cell a
    Matrix cell_from_macro; // nc × na, column a: cell a rows against u_a

    std::size_t macro_size() const { return static_cast<std::size_t>(macro.rows()); }
    std::size_t cell_size() const { return static_cast<std::size_t>(macro_from_cell.rows()); }
    std::size_t size() const { return macro_size() * (1 + cell_size()); }

    Vector apply(const Vector& x) const
    {
        const auto na = static_cast<Eigen::Index>(macro_size());
        const auto nc = static_cast<Eigen::Index>(cell_size());
        Vector y(x.size());
        y.head(na) = macro * x.head(na);
        parallel_for(macro_size(), [&](std::size_t a) {
            const auto ia = static_cast<Eigen::Index>(a);
            auto xc = x.segment(na + ia * nc, nc);
            auto yc = y.segment(na + ia * nc, nc);
            cells[a].apply(xc, yc);
            yc += cell_from_macro.col(ia) * x(ia);
        });
        for (Eigen::Index a = 0; a < na; ++a)
            y(a) += macro_from_cell.col(a).dot(x.segment(na + a * nc, nc));
        return y;
    }

    /// Assembled sparse matrix in the unknown layout.
    Eigen::SparseMatrix<T> to_sparse() const
    {
        const auto na = static_cast<Eigen::Index>(macro_size());
        const auto nc = static_cast<Eigen::Index>(cell_size());
        std::vector<Eigen::Triplet<T>> trip;
        for (Eigen::Index k = 0; k < macro.outerSize(); ++k)
            for (typename Eigen::SparseMatrix<T>::InnerIterator it(macro, k); it; ++it)
                trip.emplace_back(it.row(), it.col(), it.value());
        for (Eigen::Index a = 0; a < na; ++a) {
            const Eigen::Index off = na + a * nc;
            const auto& t = cells[static_cast<std::size_t>(a)];
            for (Eigen::Index i = 0; i < nc; ++i) {
                const auto si = static_cast<std::size_t>(i);
                trip.emplace_back(off + i, off + i, t.diag[si]);
                if (i > 0)
                    trip.emplace_back(off + i, off + i - 1, t.lower[si]);
                if (i + 1 < nc)
                    trip.emplace_back(off + i, off + i + 1, t.upper[si]);
                if (macro_from_cell(i, a) != T{})
                    trip.emplace_back(a, off + i, macro_from_cell(i, a));
                if (cell_from_macro(i, a) != T{})
                    trip.emplace_back(off + i, a, cell_from_macro(i, a));
            }
        }
        Eigen::SparseMatrix<T> m(na * (1 + nc), na * (1 + nc));
        m.setFromTriplets(trip.begin(), trip.end());
        return m;
    }

    template <class U>
    BlockOperator<U> cast() const
    {
        BlockOperator<U> out;
        out.macro = macro.template cast<U>();
        out.cells.resize(cells.size());
        for (std::size_t a = 0; a < cells.size(); ++a) {
            const auto& t = cells[a];
            auto& o = out.cells[a];
            o.lower.assign(t.lower.begin(), t.lower.end());
            o.diag.assign(t.diag.begin(), t.diag.end());
            o.upper.assign(t.upper.begin(), t.upper.end());
        }
        out.macro_from_cell = macro_from_cell.template cast<U>();
        out.cell_from_macro = cell_from_macro.template cast<U>();
        return out;
    }
};

/// Exact block elimination: every cell is eliminated onto its macro unknown
/// with a pre-factored tridiagonal solve, leaving a sparse macro Schur system.
template <class T>
class BlockFactorization {
public:
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    explicit BlockFactorization(const BlockOperator<T>& op)
        : na_(op.macro_size()), nc_(op.cell_size()), macro_from_cell_(op.macro_from_cell)
    {
        cells_.resize(na_);
        response_ = op.cell_from_macro;
        parallel_for(na_, [&](std::size_t a) {
            cells_[a] = TridiagonalLU<T>(op.cells[a]);
            auto col = response_.col(static_cast<Eigen::Index>(a));
            cells_[a].solve_in_place(col);
        });
        Eigen::SparseMatrix<T> schur = op.macro;
        for (std::size_t a = 0; a < na_; ++a) {
            const auto ia = static_cast<Eigen::Index>(a);
            schur.coeffRef(ia, ia) -= macro_from_cell_.col(ia).dot(response_.col(ia));
        }
        schur.makeCompressed();
        solver_.analyzePattern(schur);
        solver_.factorize(schur);
        if (solver_.info() != Eigen::Success)
            throw Error("macro Schur matrix factorization failed (singular system)");
    }

    Vector solve(const Vector& rhs) const
    {
        const auto na = static_cast<Eigen::Index>(na_);
        const auto nc = static_cast<Eigen::Index>(nc_);
        Vector x = rhs;
        parallel_for(na_, [&](std::size_t a) {
            auto xc = x.segment(na + static_cast<Eigen::Index>(a) * nc, nc);
            cells_[a].solve_in_place(xc);
        });
        Vector reduced = rhs.head(na);
        for (Eigen::Index a = 0; a < na; ++a)
            reduced(a) -= macro_from_cell_.col(a).dot(x.segment(na + a * nc, nc));
        Vector u = solver_.solve(reduced);
        if (solver_.info() != Eigen::Success)
            throw Error("macro Schur solve failed");
        x.head(na) = u;
        parallel_for(na_, [&](std::size_t a) {
            const auto ia = static_cast<Eigen::Index>(a);
            x.segment(na + ia * nc, nc) -= response_.col(ia) * u(ia);
        });
        return x;
    }

private:
    std::size_t na_;
    std::size_t nc_;
    std::vector<TridiagonalLU<T>> cells_;
    Matrix response_;
    Matrix macro_from_cell_;
    Eigen::SparseLU<Eigen::SparseMatrix<T>> solver_;
};

} // namespace mmsim
