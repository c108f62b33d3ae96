#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace m2spec {

using cdouble = std::complex<double>;

/// Shape of the index grid Z^d_N: d axes, N_j points along axis j.
/// Grid points are linearized row-major in axis order.
class GridShape {
public:
    GridShape() = default;
    explicit GridShape(std::vector<int> dims);

    int dim() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    std::int64_t total() const { return total_; }

    std::int64_t index_of(std::span<const int> point) const;
    std::vector<int> point_at(std::int64_t index) const;

    /// Angular frequency 2*pi*l_j/N_j of a grid point, one value per axis.
    std::vector<double> frequencies_at(std::span<const int> point) const;

    bool operator==(const GridShape& other) const { return dims_ == other.dims_; }

private:
    std::vector<int> dims_;
    std::int64_t total_ = 0;
};

/// A signed multi-index k = (k_1,...,k_d).
using Lag = std::vector<int>;

/// Componentwise k_j mod N_j, mapped into [0, N_j - 1].
std::vector<int> wrap_lag(const Lag& k, const GridShape& shape);

/// The symmetric lag box {k : |k_j| <= n_j}, enumerated lexicographically.
/// The canonical half enumeration lists the zero lag first, then every lag
/// that is lexicographically positive; the negative half is implied by
/// conjugate symmetry of the structures indexed over the box.
class LagBox {
public:
    LagBox() = default;
    LagBox(std::vector<int> radii, std::vector<Lag> lags, std::vector<int> half);

    int dim() const { return static_cast<int>(radii_.size()); }
    const std::vector<int>& radii() const { return radii_; }
    const std::vector<Lag>& lags() const { return lags_; }
    std::size_t size() const { return lags_.size(); }

    /// Indices into lags(): zero lag first, then the lexicographically
    /// positive half in lexicographic order.
    const std::vector<int>& half() const { return half_; }

    /// Position of k in lags(); throws std::out_of_range if |k_j| > n_j.
    int index_of(const Lag& k) const;
    bool contains(const Lag& k) const;

private:
    std::vector<int> radii_;
    std::vector<Lag> lags_;
    std::vector<int> half_;
};

/// All lags with |k_j| <= radii[j], lexicographic.
std::vector<Lag> enumerate_symmetric_box(const std::vector<int>& radii);

/// Builds the lag box for the given radii and checks N_j > 2 n_j against
/// the grid, rejecting with the offending axis named otherwise.
LagBox lambda_box(const std::vector<int>& radii, const GridShape& shape);

/// Throws std::invalid_argument naming the first axis with N_j <= 2 n_j.
void require_grid_supports_box(const LagBox& box, const GridShape& shape);

/// Grid-indexed field of m x m complex matrices, one per grid point.
/// Layout: values[p*m*m + r*m + c] for grid point p, matrix entry (r, c).
struct MatrixField {
    GridShape shape;
    int m = 0;
    std::vector<cdouble> values;

    MatrixField() = default;
    MatrixField(GridShape shape_, int m_);

    cdouble* at(std::int64_t point) { return values.data() + point * m * m; }
    const cdouble* at(std::int64_t point) const { return values.data() + point * m * m; }

    /// Field with the same matrix at every grid point.
    static MatrixField constant(GridShape shape, int m, std::span<const cdouble> matrix);
    static MatrixField identity(GridShape shape, int m);
};

/// Grid-indexed field of complex m-vectors.
/// Layout: values[p*m + c] for grid point p, channel c.
struct VectorField {
    GridShape shape;
    int m = 0;
    std::vector<cdouble> values;

    VectorField() = default;
    VectorField(GridShape shape_, int m_);

    cdouble* at(std::int64_t point) { return values.data() + point * m; }
    const cdouble* at(std::int64_t point) const { return values.data() + point * m; }
};

/// Matrix coefficients indexed over a lag box (covariance sets, dual
/// certificates materialized over the full box, trig-polynomial input).
/// Layout: values[lag_index*m*m + r*m + c] following box.lags() order.
struct LagMatrixSet {
    LagBox box;
    int m = 0;
    std::vector<cdouble> values;

    LagMatrixSet() = default;
    LagMatrixSet(LagBox box_, int m_);

    cdouble* at(int lag_index) { return values.data() + static_cast<std::int64_t>(lag_index) * m * m; }
    const cdouble* at(int lag_index) const {
        return values.data() + static_cast<std::int64_t>(lag_index) * m * m;
    }
};

enum class DftDirection { Forward, Inverse };

/// Entrywise d-dimensional DFT. Forward sums f(t) e^{-i<t,theta_l>} over the
/// grid with no normalization; inverse sums with e^{+i<t,theta_l>} and divides
/// by |N|, so inverse(forward(f)) == f.
MatrixField dft_field(const MatrixField& f, DftDirection direction);
VectorField dft_field(const VectorField& f, DftDirection direction);

/// Q(zeta_l) = sum_k Q_k e^{-i<k,theta_l>}, evaluated at every grid point by
/// scattering the coefficients onto the wrapped grid and one forward DFT.
MatrixField eval_trig_polynomial(const LagMatrixSet& coeffs, const GridShape& shape);

/// The moment map Gamma: Sigma_k = (1/|N|) sum_l zeta_l^k Phi(zeta_l) for
/// every k in the box, via one inverse DFT and wrapped-lag gathering.
LagMatrixSet moment_map(const MatrixField& phi, const LagBox& box);

}  // namespace m2spec
