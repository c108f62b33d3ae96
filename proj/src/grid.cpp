#include "m2spec/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace m2spec {

GridShape::GridShape(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("GridShape: dimension count must be >= 1");
    total_ = 1;
    for (std::size_t j = 0; j < dims_.size(); ++j) {
        if (dims_[j] < 1)
            throw std::invalid_argument("GridShape: N_" + std::to_string(j + 1) + " must be >= 1");
        total_ *= dims_[j];
    }
}

std::int64_t GridShape::index_of(std::span<const int> point) const {
    std::int64_t idx = 0;
    for (std::size_t j = 0; j < dims_.size(); ++j) idx = idx * dims_[j] + point[j];
    return idx;
}

std::vector<int> GridShape::point_at(std::int64_t index) const {
    std::vector<int> point(dims_.size());
    for (int j = dim() - 1; j >= 0; --j) {
        point[j] = static_cast<int>(index % dims_[j]);
        index /= dims_[j];
    }
    return point;
}

std::vector<double> GridShape::frequencies_at(std::span<const int> point) const {
    std::vector<double> theta(dims_.size());
    for (std::size_t j = 0; j < dims_.size(); ++j)
        theta[j] = 2.0 * std::numbers::pi * point[j] / dims_[j];
    return theta;
}

std::vector<int> wrap_lag(const Lag& k, const GridShape& shape) {
    if (static_cast<int>(k.size()) != shape.dim())
        throw std::invalid_argument("wrap_lag: lag dimension does not match grid");
    std::vector<int> wrapped(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) {
        const int n = shape.dims()[j];
        int r = k[j] % n;
        if (r < 0) r += n;
        wrapped[j] = r;
    }
    return wrapped;
}

LagBox::LagBox(std::vector<int> radii, std::vector<Lag> lags, std::vector<int> half)
    : radii_(std::move(radii)), lags_(std::move(lags)), half_(std::move(half)) {}

bool LagBox::contains(const Lag& k) const {
    if (k.size() != radii_.size()) return false;
    for (std::size_t j = 0; j < k.size(); ++j)
        if (std::abs(k[j]) > radii_[j]) return false;
    return true;
}

int LagBox::index_of(const Lag& k) const {
    if (!contains(k)) throw std::out_of_range("LagBox: lag outside the box");
    int idx = 0;
    for (std::size_t j = 0; j < k.size(); ++j) idx = idx * (2 * radii_[j] + 1) + (k[j] + radii_[j]);
    return idx;
}

std::vector<Lag> enumerate_symmetric_box(const std::vector<int>& radii) {
    std::size_t count = 1;
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (radii[j] < 0)
            throw std::invalid_argument("box radius n_" + std::to_string(j + 1) +
                                        " must be >= 0");
        count *= static_cast<std::size_t>(2 * radii[j] + 1);
    }
    std::vector<Lag> lags;
    lags.reserve(count);
    Lag k(radii.size());
    for (std::size_t j = 0; j < radii.size(); ++j) k[j] = -radii[j];
    for (;;) {
        lags.push_back(k);
        int axis = static_cast<int>(radii.size()) - 1;
        while (axis >= 0 && k[axis] == radii[axis]) {
            k[axis] = -radii[axis];
            --axis;
        }
        if (axis < 0) break;
        ++k[axis];
    }
    return lags;
}

LagBox lambda_box(const std::vector<int>& radii, const GridShape& shape) {
    if (static_cast<int>(radii.size()) != shape.dim())
        throw std::invalid_argument("lambda_box: radii dimension does not match grid");
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (shape.dims()[j] <= 2 * radii[j])
            throw std::invalid_argument(
                "lambda_box: axis " + std::to_string(j + 1) + " requires N_j > 2 n_j (got N=" +
                std::to_string(shape.dims()[j]) + ", n=" + std::to_string(radii[j]) + ")");
    }

    std::vector<Lag> lags = enumerate_symmetric_box(radii);
    const std::size_t count = lags.size();

    // Zero lag sits in the middle of the lexicographic enumeration; the
    // canonical half lists it first, then everything lexicographically above.
    const int zero_index = static_cast<int>((count - 1) / 2);
    std::vector<int> half;
    half.reserve((count + 1) / 2);
    half.push_back(zero_index);
    for (std::size_t i = zero_index + 1; i < count; ++i) half.push_back(static_cast<int>(i));

    return LagBox(radii, std::move(lags), std::move(half));
}

void require_grid_supports_box(const LagBox& box, const GridShape& shape) {
    if (box.dim() != shape.dim())
        throw std::invalid_argument("lag box dimension does not match grid");
    for (int j = 0; j < box.dim(); ++j)
        if (shape.dims()[j] <= 2 * box.radii()[j])
            throw std::invalid_argument("axis " + std::to_string(j + 1) +
                                        " requires N_j > 2 n_j (got N=" +
                                        std::to_string(shape.dims()[j]) +
                                        ", n=" + std::to_string(box.radii()[j]) + ")");
}

MatrixField::MatrixField(GridShape shape_, int m_)
    : shape(std::move(shape_)), m(m_), values(static_cast<std::size_t>(shape.total()) * m * m) {}

MatrixField MatrixField::constant(GridShape shape, int m, std::span<const cdouble> matrix) {
    MatrixField f(std::move(shape), m);
    const std::int64_t total = f.shape.total();
    for (std::int64_t p = 0; p < total; ++p)
        std::copy(matrix.begin(), matrix.end(), f.at(p));
    return f;
}

MatrixField MatrixField::identity(GridShape shape, int m) {
    std::vector<cdouble> eye(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) eye[i * m + i] = 1.0;
    return constant(std::move(shape), m, eye);
}

VectorField::VectorField(GridShape shape_, int m_)
    : shape(std::move(shape_)), m(m_), values(static_cast<std::size_t>(shape.total()) * m) {}

LagMatrixSet::LagMatrixSet(LagBox box_, int m_)
    : box(std::move(box_)), m(m_), values(box.size() * m * m) {}

namespace {

// One axis of the row-column transform: every line along `axis` of every
// scalar component is replaced by its length-N DFT. Twiddles are indexed by
// (j*k) mod N so conjugate-symmetric phases are bit-exact; the summation
// order over k is fixed ascending regardless of threading.
void dft_axis(std::vector<cdouble>& data, const GridShape& shape, int stride_per_point, int axis,
              bool inverse) {
    const int n = shape.dims()[axis];
    if (n == 1) return;

    std::vector<cdouble> twiddle(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) {
        const double angle = sign * 2.0 * std::numbers::pi * j / n;
        twiddle[j] = cdouble(std::cos(angle), std::sin(angle));
    }

    std::int64_t inner = 1;
    for (int j = axis + 1; j < shape.dim(); ++j) inner *= shape.dims()[j];
    inner *= stride_per_point;
    const std::int64_t outer = static_cast<std::int64_t>(data.size()) / (inner * n);
    const std::int64_t line_count = outer * inner;

#pragma omp parallel
    {
        std::vector<cdouble> line(n);
#pragma omp for schedule(static)
        for (std::int64_t li = 0; li < line_count; ++li) {
            const std::int64_t o = li / inner;
            const std::int64_t i = li % inner;
            cdouble* base = data.data() + o * n * inner + i;
            for (int k = 0; k < n; ++k) line[k] = base[static_cast<std::int64_t>(k) * inner];
            for (int out = 0; out < n; ++out) {
                cdouble acc = 0.0;
                for (int k = 0; k < n; ++k)
                    acc += line[k] * twiddle[static_cast<std::int64_t>(out) * k % n];
                base[static_cast<std::int64_t>(out) * inner] = acc;
            }
        }
    }
}

void dft_buffer(std::vector<cdouble>& data, const GridShape& shape, int stride_per_point,
                DftDirection direction) {
    const bool inverse = direction == DftDirection::Inverse;
    for (int axis = 0; axis < shape.dim(); ++axis)
        dft_axis(data, shape, stride_per_point, axis, inverse);
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(shape.total());
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.size()); ++i)
            data[i] *= scale;
    }
}

}  // namespace

MatrixField dft_field(const MatrixField& f, DftDirection direction) {
    MatrixField out = f;
    dft_buffer(out.values, out.shape, out.m * out.m, direction);
    return out;
}

VectorField dft_field(const VectorField& f, DftDirection direction) {
    VectorField out = f;
    dft_buffer(out.values, out.shape, out.m, direction);
    return out;
}

MatrixField eval_trig_polynomial(const LagMatrixSet& coeffs, const GridShape& shape) {
    require_grid_supports_box(coeffs.box, shape);
    const int m = coeffs.m;
    MatrixField scattered(shape, m);
    for (std::size_t i = 0; i < coeffs.box.size(); ++i) {
        const std::vector<int> cell = wrap_lag(coeffs.box.lags()[i], shape);
        cdouble* dst = scattered.at(shape.index_of(cell));
        const cdouble* src = coeffs.at(static_cast<int>(i));
        for (int e = 0; e < m * m; ++e) dst[e] += src[e];
    }
    return dft_field(scattered, DftDirection::Forward);
}

LagMatrixSet moment_map(const MatrixField& phi, const LagBox& box) {
    require_grid_supports_box(box, phi.shape);
    const MatrixField spectrum = dft_field(phi, DftDirection::Inverse);
    LagMatrixSet out(box, phi.m);
    for (std::size_t i = 0; i < box.size(); ++i) {
        const std::vector<int> cell = wrap_lag(box.lags()[i], phi.shape);
        const cdouble* src = spectrum.at(phi.shape.index_of(cell));
        std::copy(src, src + phi.m * phi.m, out.at(static_cast<int>(i)));
    }
    return out;
}

}  // namespace m2spec
