#include "slag/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

namespace slag {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

void fnv(std::uint64_t& h, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
}

}  // namespace

std::uint64_t patchHash(const SimplicialPatch& M) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::int64_t dims[3] = {M.n, M.vertexCount(), M.simplexCount()};
    fnv(h, dims, sizeof(dims));
    for (int v = 0; v < M.vertexCount(); ++v)
        for (int j = 0; j < M.ambientDim(); ++j) {
            double x = M.vertices(v, j);
            fnv(h, &x, sizeof(x));
        }
    for (int s = 0; s < M.simplexCount(); ++s)
        for (int j = 0; j <= M.n; ++j) {
            std::int32_t idx = M.simplices(s, j);
            fnv(h, &idx, sizeof(idx));
        }
    return h;
}

std::string patchHashHex(const SimplicialPatch& M) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(patchHash(M)));
    return buf;
}

void writeCochainCsv(std::ostream& out, const SimplicialPatch& M,
                     const std::vector<Cochain>& columns,
                     const std::vector<std::string>& names) {
    if (columns.empty())
        throw ValidationError("io: no cochain columns to export");
    int degree = columns.front().degree;
    for (const Cochain& c : columns)
        if (c.degree != degree || c.values.size() != M.faceCount(degree))
            throw ValidationError("io: cochain columns disagree in degree or size");
    out << "# cochain degree=" << degree << " patch=" << patchHashHex(M) << "\n";
    out << "simplex_index";
    for (size_t j = 0; j < columns.size(); ++j)
        out << "," << (j < names.size() ? names[j] : "value");
    out << "\n";
    for (int i = 0; i < M.faceCount(degree); ++i) {
        out << i;
        for (const Cochain& c : columns) out << "," << fmt17(c.values[i]);
        out << "\n";
    }
}

void writeCochainCsv(const std::string& path, const SimplicialPatch& M,
                     const std::vector<Cochain>& columns,
                     const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("io: cannot open '" + path + "' for writing");
    writeCochainCsv(out, M, columns, names);
}

}  // namespace slag
