#pragma once

#include "slag/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace slag {

// Shortest round-trippable decimal form (17 significant digits).
std::string fmt17(double x);

// FNV-1a over the patch's vertex bytes and simplex indices; stable across
// runs for identical inputs.
std::uint64_t patchHash(const SimplicialPatch& M);
std::string patchHashHex(const SimplicialPatch& M);

// CSV with columns (simplex_index, value); the header names the degree and
// the patch hash.  Extra columns hold additional cochains of the same
// degree (e.g. a harmonic basis).
void writeCochainCsv(std::ostream& out, const SimplicialPatch& M,
                     const std::vector<Cochain>& columns,
                     const std::vector<std::string>& names);
void writeCochainCsv(const std::string& path, const SimplicialPatch& M,
                     const std::vector<Cochain>& columns,
                     const std::vector<std::string>& names);

}  // namespace slag
