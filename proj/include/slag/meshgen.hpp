#pragma once

#include "slag/mesh.hpp"

#include <random>

namespace slag {

/* Deterministic planar test meshes embedded in the x-plane of C^n (n = 2):
 * (u, v) -> (u, 0, v, 0).  All three generators use center-split (crossed)
 * quads, which keeps every mirror symmetry of the underlying shape; the
 * symmetric rims are what lets discrete boundary normals and harmonic traces
 * hit their structural zeros at machine precision.
 *
 *   disk    — unit disk, fan core plus res/8 crossed annular bands
 *   annulus — radii 1..2, crossed bands, resolution = angular segments
 *   pants   — unit square grid with two square holes (three rims, b1 = 2)
 */
SimplicialPatch generateMesh(const std::string& shape, int resolution);

// Barycentric 1->3 subdivision of `count` randomly chosen simplices; breaks
// the generators' symmetry while preserving topology and orientation.
SimplicialPatch refineRandom(const SimplicialPatch& M, int count, std::mt19937_64& rng);

}  // namespace slag
