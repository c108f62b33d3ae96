#pragma once

#include "m2spec/covariance.hpp"
#include "m2spec/grid.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace m2spec {

/// On-disk container for signals, spectra, and covariance sets.
/// Layout: magic "M2SF", version u32 LE, header length u32 LE, header JSON,
/// then the payload as little-endian f64 re/im pairs, row-major over grid
/// points (or lags) then entries. Indices inside the payload are 0-based;
/// human-facing output elsewhere is 1-based.
enum class FieldKind { Signal, Spectrum, Covariance };

struct FieldFile {
    FieldKind kind = FieldKind::Signal;
    GridShape shape;
    int m = 0;
    std::optional<double> epsilon;   // recorded when a ridge was applied
    std::vector<int> radii;          // covariance kind only
    std::vector<cdouble> payload;

    static FieldFile from_signal(const VectorField& y);
    static FieldFile from_spectrum(const MatrixField& phi, std::optional<double> epsilon = {});
    static FieldFile from_covariance(const CovarianceSet& sigma, const GridShape& shape,
                                     std::optional<double> epsilon = {});

    VectorField to_signal() const;
    MatrixField to_spectrum() const;
    CovarianceSet to_covariance() const;

    void write(const std::filesystem::path& path) const;
    static FieldFile read(const std::filesystem::path& path);
};

}  // namespace m2spec
