#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "meshmorph/error.hpp"
#include "meshmorph/mesh.hpp"

namespace meshmorph {

/// Structurally symmetric sparse matrix. DOF ordering throughout the library is
/// node-major, x then y: dof(node, c) = 2 * node + c.
using SparseSymmetric = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Scatter-add accumulator for element blocks.
class Assembler {
public:
    explicit Assembler(int dimension) : dimension_(dimension) {}

    int dimension() const noexcept { return dimension_; }

    void reserve(std::size_t entries) { triplets_.reserve(entries); }

    template <class Block>
    void add(std::span<const int> dofs, const Block& block) {
        const auto n = static_cast<Eigen::Index>(dofs.size());
        if (block.rows() != n || block.cols() != n)
            throw Error("Assembler::add: block size does not match dof map");
        for (int d : dofs) {
            if (d < 0 || d >= dimension_)
                throw Error("Assembler::add: dof index " + std::to_string(d) + " out of range");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                triplets_.emplace_back(dofs[i], dofs[j], block(i, j));
            }
        }
    }

    SparseSymmetric matrix() const {
        SparseSymmetric a(dimension_, dimension_);
        a.setFromTriplets(triplets_.begin(), triplets_.end());
        a.makeCompressed();
        return a;
    }

private:
    int dimension_;
    std::vector<Eigen::Triplet<double>> triplets_;
};

/// Assembly into a fixed sparsity pattern. The pattern and every element's
/// value slots are computed once; re-assembly only zeroes and adds values.
class PatternAssembler {
public:
    PatternAssembler() = default;

    PatternAssembler(int dimension, const std::vector<std::vector<int>>& element_dofs)
        : dimension_(dimension) {
        std::vector<Eigen::Triplet<double>> entries;
        std::size_t total = 0;
        for (const auto& dofs : element_dofs) total += dofs.size() * dofs.size();
        entries.reserve(total);
        for (const auto& dofs : element_dofs) {
            for (int d : dofs) {
                if (d < 0 || d >= dimension)
                    throw Error("PatternAssembler: dof index " + std::to_string(d) + " out of range");
            }
            for (int i : dofs)
                for (int j : dofs) entries.emplace_back(i, j, 0.0);
        }
        matrix_.resize(dimension, dimension);
        matrix_.setFromTriplets(entries.begin(), entries.end());
        matrix_.makeCompressed();
        offsets_.reserve(element_dofs.size() + 1);
        offsets_.push_back(0);
        slots_.reserve(total);
        const int* outer = matrix_.outerIndexPtr();
        const int* inner = matrix_.innerIndexPtr();
        for (const auto& dofs : element_dofs) {
            for (int i : dofs) {
                for (int j : dofs) {
                    // Column-major: entry (i, j) lives in column j.
                    const int* pos = std::lower_bound(inner + outer[j], inner + outer[j + 1], i);
                    slots_.push_back(static_cast<int>(pos - inner));
                }
            }
            sizes_.push_back(static_cast<int>(dofs.size()));
            offsets_.push_back(slots_.size());
        }
    }

    int dimension() const noexcept { return dimension_; }
    std::size_t element_count() const noexcept { return sizes_.size(); }

    void clear() { std::fill_n(matrix_.valuePtr(), matrix_.nonZeros(), 0.0); }

    template <class Block>
    void add(std::size_t element, const Block& block) {
        const int n = sizes_.at(element);
        if (block.rows() != n || block.cols() != n)
            throw Error("PatternAssembler::add: block size does not match element " +
                        std::to_string(element));
        double* values = matrix_.valuePtr();
        const int* slot = slots_.data() + offsets_[element];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) values[*slot++] += block(i, j);
    }

    const SparseSymmetric& matrix() const noexcept { return matrix_; }

private:
    int dimension_ = 0;
    SparseSymmetric matrix_;
    std::vector<int> slots_;
    std::vector<std::size_t> offsets_;
    std::vector<int> sizes_;
};

struct ElementBlock {
    std::vector<int> dofs;
    Eigen::MatrixXd matrix;
};

struct Constraint {
    int dof;
    double value;
};

struct ConstrainedSystem {
    SparseSymmetric matrix;
    Vector rhs;
};

/// Sorted, de-duplicated constraint map. Duplicate dofs must agree exactly.
inline std::map<int, double> constraint_map(std::span<const Constraint> constraints, int dimension) {
    std::map<int, double> out;
    for (const Constraint& c : constraints) {
        if (c.dof < 0 || c.dof >= dimension)
            throw Error("constraint dof " + std::to_string(c.dof) + " out of range");
        auto [it, inserted] = out.emplace(c.dof, c.value);
        if (!inserted && it->second != c.value)
            throw Error("conflicting values for constrained dof " + std::to_string(c.dof));
    }
    return out;
}

/// Dirichlet elimination that keeps the matrix symmetric: constrained rows and
/// columns are zeroed, their diagonal set to one, the rhs carries the prescribed
/// value, and free rows absorb -A(free, p) * value. The sparsity pattern is kept
/// (eliminated entries become explicit zeros) so symbolic factorizations can be reused.
inline ConstrainedSystem apply_constraints(SparseSymmetric a, Vector rhs,
                                           std::span<const Constraint> constraints) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n || rhs.size() != n) throw Error("apply_constraints: dimension mismatch");
    const auto fixed = constraint_map(constraints, n);
    std::vector<char> is_fixed(n, 0);
    Vector value = Vector::Zero(n);
    for (const auto& [dof, v] : fixed) {
        is_fixed[dof] = 1;
        value[dof] = v;
    }
    for (int col = 0; col < a.outerSize(); ++col) {
        for (SparseSymmetric::InnerIterator it(a, col); it; ++it) {
            const auto row = static_cast<int>(it.row());
            if (!is_fixed[row] && !is_fixed[col]) continue;
            if (!is_fixed[row]) rhs[row] -= it.value() * value[col];
            it.valueRef() = (row == col) ? 1.0 : 0.0;
        }
    }
    for (const auto& [dof, v] : fixed) {
        rhs[dof] = v;
        if (a.coeff(dof, dof) != 1.0) a.coeffRef(dof, dof) = 1.0;
    }
    a.makeCompressed();
    return {std::move(a), std::move(rhs)};
}

/// Scatter-adds `blocks` and eliminates `constraints` (zero rhs otherwise).
inline ConstrainedSystem assemble(int dimension, std::span<const ElementBlock> blocks,
                                  std::span<const Constraint> constraints) {
    Assembler assembler(dimension);
    for (const ElementBlock& b : blocks) assembler.add(std::span<const int>(b.dofs), b.matrix);
    return apply_constraints(assembler.matrix(), Vector::Zero(dimension), constraints);
}

/// Sparse Cholesky solver that reuses the symbolic analysis while the sparsity
/// pattern stays the same.
class SpdSolver {
public:
    explicit SpdSolver(double tolerance = 1e-10) : tolerance_(tolerance) {}

    Vector solve(const SparseSymmetric& a, const Vector& b) {
        if (a.rows() != a.cols() || a.rows() != b.size())
            throw SolverError("solve_spd: dimension mismatch");
        if (!same_pattern(a)) {
            llt_.analyzePattern(a);
            outer_.assign(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1);
            inner_.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
        }
        llt_.factorize(a);
        if (llt_.info() != Eigen::Success)
            throw SolverError("solve_spd: factorization failed (matrix not positive definite)");
        Vector x = llt_.solve(b);
        if (!x.allFinite()) throw SolverError("solve_spd: non-finite solution");
        const double bnorm = b.norm();
        if (bnorm == 0.0) return x;
        Vector r = b - a * x;
        if (r.norm() > tolerance_ * bnorm) {
            x += llt_.solve(r);
            r = b - a * x;
        }
        if (!(r.norm() <= tolerance_ * bnorm))
            throw SolverError("solve_spd: relative residual " + std::to_string(r.norm() / bnorm) +
                              " above tolerance");
        return x;
    }

private:
    double tolerance_;
    Eigen::SimplicialLLT<SparseSymmetric, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
    std::vector<int> outer_;
    std::vector<int> inner_;

    bool same_pattern(const SparseSymmetric& a) const {
        if (!a.isCompressed() || outer_.size() != static_cast<std::size_t>(a.outerSize() + 1) ||
            inner_.size() != static_cast<std::size_t>(a.nonZeros()))
            return false;
        return std::equal(outer_.begin(), outer_.end(), a.outerIndexPtr()) &&
               std::equal(inner_.begin(), inner_.end(), a.innerIndexPtr());
    }
};

/// Dirichlet solve by reduction: prescribed dofs are removed, the free block
/// A_ff x_f = b_f - A_fp x_p is factorized, and x_p is set to its values.
/// Mathematically the same system as apply_constraints, with less fill.
class ConstrainedSolver {
public:
    ConstrainedSolver(int dimension, std::span<const Constraint> constraints, double tolerance = 1e-10)
        : solver_(tolerance), reduced_of_(dimension, -1), fixed_(dimension, 0) {
        for (const auto& [dof, v] : constraint_map(constraints, dimension)) fixed_[dof] = 1;
        for (int i = 0; i < dimension; ++i) {
            if (fixed_[i]) continue;
            reduced_of_[i] = static_cast<int>(free_.size());
            free_.push_back(i);
        }
    }

    int dimension() const noexcept { return static_cast<int>(fixed_.size()); }

    /// `values` must constrain exactly the dofs given at construction.
    Vector solve(const SparseSymmetric& a, const Vector& b, std::span<const Constraint> values) {
        const int n = dimension();
        if (a.rows() != n || a.cols() != n || b.size() != n)
            throw SolverError("constrained solve: dimension mismatch");
        Vector x = Vector::Zero(n);
        std::size_t count = 0;
        for (const auto& [dof, v] : constraint_map(values, n)) {
            if (!fixed_[dof]) throw Error("constrained solve: dof " + std::to_string(dof) + " was not declared");
            x[dof] = v;
            ++count;
        }
        if (count + free_.size() != static_cast<std::size_t>(n))
            throw Error("constrained solve: constraint set differs from the declared one");
        if (free_.empty()) return x;

        const int nf = static_cast<int>(free_.size());
        Vector rhs(nf);
        for (int k = 0; k < nf; ++k) rhs[k] = b[free_[k]];
        outer_.assign(1, 0);
        inner_.clear();
        values_.clear();
        for (int c = 0; c < n; ++c) {
            const bool col_fixed = fixed_[c];
            for (SparseSymmetric::InnerIterator it(a, c); it; ++it) {
                const auto r = static_cast<int>(it.row());
                if (fixed_[r]) continue;
                if (col_fixed) {
                    rhs[reduced_of_[r]] -= it.value() * x[c];
                } else {
                    inner_.push_back(reduced_of_[r]);
                    values_.push_back(it.value());
                }
            }
            if (!col_fixed) outer_.push_back(static_cast<int>(inner_.size()));
        }
        reduced_ = Eigen::Map<const SparseSymmetric>(nf, nf, static_cast<Eigen::Index>(inner_.size()),
                                                     outer_.data(), inner_.data(), values_.data());
        const Vector xf = solver_.solve(reduced_, rhs);
        for (int k = 0; k < nf; ++k) x[free_[k]] = xf[k];
        return x;
    }

private:
    SpdSolver solver_;
    std::vector<int> reduced_of_;
    std::vector<char> fixed_;
    std::vector<int> free_;
    std::vector<int> outer_, inner_;
    std::vector<double> values_;
    SparseSymmetric reduced_;
};

/// Solves A x = b for symmetric positive definite A with ||Ax - b|| <= tol ||b||.
inline Vector solve_spd(const SparseSymmetric& a, const Vector& b, double tol = 1e-10) {
    SpdSolver solver(tol);
    return solver.solve(a, b);
}

inline std::vector<Constraint> to_constraints(std::span<const DirichletValue> values) {
    std::vector<Constraint> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back({v.dof, v.value});
    return out;
}

/// Matrix Market coordinate dump (1-based), for debugging.
inline void write_matrix_market(const std::string& path, const SparseSymmetric& a) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    out << std::setprecision(17);
    for (int col = 0; col < a.outerSize(); ++col) {
        for (SparseSymmetric::InnerIterator it(a, col); it; ++it)
            out << it.row() + 1 << ' ' << col + 1 << ' ' << it.value() << '\n';
    }
    if (!out) throw Error("error writing " + path);
}

}  // namespace meshmorph
