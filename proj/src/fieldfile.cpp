#include "m2spec/fieldfile.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace m2spec {

namespace {

constexpr char kMagic[4] = {'M', '2', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

const char* kind_name(FieldKind kind) {
    switch (kind) {
        case FieldKind::Signal: return "signal";
        case FieldKind::Spectrum: return "spectrum";
        case FieldKind::Covariance: return "covariance";
    }
    return "?";
}

FieldKind kind_from_name(const std::string& name) {
    if (name == "signal") return FieldKind::Signal;
    if (name == "spectrum") return FieldKind::Spectrum;
    if (name == "covariance") return FieldKind::Covariance;
    throw std::runtime_error("field file: unknown kind '" + name + "'");
}

std::size_t expected_payload(const FieldFile& f) {
    if (f.kind == FieldKind::Signal)
        return static_cast<std::size_t>(f.shape.total()) * f.m;
    if (f.kind == FieldKind::Spectrum)
        return static_cast<std::size_t>(f.shape.total()) * f.m * f.m;
    std::size_t lags = 1;
    for (int r : f.radii) lags *= static_cast<std::size_t>(2 * r + 1);
    return lags * f.m * f.m;
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

FieldFile FieldFile::from_signal(const VectorField& y) {
    FieldFile f;
    f.kind = FieldKind::Signal;
    f.shape = y.shape;
    f.m = y.m;
    f.payload = y.values;
    return f;
}

FieldFile FieldFile::from_spectrum(const MatrixField& phi, std::optional<double> epsilon) {
    FieldFile f;
    f.kind = FieldKind::Spectrum;
    f.shape = phi.shape;
    f.m = phi.m;
    f.epsilon = epsilon;
    f.payload = phi.values;
    return f;
}

FieldFile FieldFile::from_covariance(const CovarianceSet& sigma, const GridShape& shape,
                                     std::optional<double> epsilon) {
    FieldFile f;
    f.kind = FieldKind::Covariance;
    f.shape = shape;
    f.m = sigma.m;
    f.epsilon = epsilon;
    f.radii = sigma.box.radii();
    f.payload = sigma.values;
    return f;
}

VectorField FieldFile::to_signal() const {
    if (kind != FieldKind::Signal) throw std::runtime_error("field file: not a signal file");
    VectorField y(shape, m);
    y.values = payload;
    return y;
}

MatrixField FieldFile::to_spectrum() const {
    if (kind != FieldKind::Spectrum) throw std::runtime_error("field file: not a spectrum file");
    MatrixField phi(shape, m);
    phi.values = payload;
    return phi;
}

CovarianceSet FieldFile::to_covariance() const {
    if (kind != FieldKind::Covariance)
        throw std::runtime_error("field file: not a covariance file");
    CovarianceSet sigma(lambda_box(radii, shape), m);
    sigma.values = payload;
    return sigma;
}

void FieldFile::write(const std::filesystem::path& path) const {
    nlohmann::json header;
    header["version"] = kVersion;
    header["kind"] = kind_name(kind);
    header["d"] = shape.dim();
    header["dims"] = shape.dims();
    header["m"] = m;
    if (epsilon) header["epsilon"] = *epsilon;
    if (kind == FieldKind::Covariance) header["radii"] = radii;
    const std::string header_text = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(header_text.size()));
    os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const cdouble& v : payload) {
        const double re = v.real();
        const double im = v.imag();
        os.write(reinterpret_cast<const char*>(&re), sizeof(double));
        os.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

FieldFile FieldFile::read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not an M2SF file: " + path.string());
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("unsupported M2SF version " + std::to_string(version));
    const std::uint32_t header_len = read_u32(is);
    std::string header_text(header_len, '\0');
    is.read(header_text.data(), header_len);
    if (!is) throw std::runtime_error("truncated header: " + path.string());

    const nlohmann::json header = nlohmann::json::parse(header_text);
    FieldFile f;
    f.kind = kind_from_name(header.at("kind").get<std::string>());
    f.shape = GridShape(header.at("dims").get<std::vector<int>>());
    if (header.at("d").get<int>() != f.shape.dim())
        throw std::runtime_error("field file: header d does not match dims");
    f.m = header.at("m").get<int>();
    if (f.m < 1) throw std::runtime_error("field file: m must be >= 1");
    if (header.contains("epsilon")) f.epsilon = header.at("epsilon").get<double>();
    if (f.kind == FieldKind::Covariance) f.radii = header.at("radii").get<std::vector<int>>();

    const std::size_t count = expected_payload(f);
    f.payload.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        double re = 0.0, im = 0.0;
        is.read(reinterpret_cast<char*>(&re), sizeof(double));
        is.read(reinterpret_cast<char*>(&im), sizeof(double));
        f.payload[i] = cdouble(re, im);
    }
    if (!is) throw std::runtime_error("truncated payload: " + path.string());
    is.peek();
    if (!is.eof()) throw std::runtime_error("trailing bytes after payload: " + path.string());
    return f;
}

}  // namespace m2spec
