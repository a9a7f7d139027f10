#include "doctest.h"
#include "slag/mesh.hpp"
#include "slag/meshgen.hpp"
#include "testutil.hpp"

#include <sstream>

using namespace slag;
using namespace slag::testutil;

TEST_CASE("single triangle loads with its boundary") {
    SimplicialPatch M = singleTriangle();
    CHECK(M.vertexCount() == 3);
    CHECK(M.simplexCount() == 1);
    CHECK(M.boundaryFaces.size() == 3);
    CHECK(M.boundaryVertices.size() == 3);
}

TEST_CASE("slmesh parsing matches in-memory construction") {
    std::istringstream in(
        "# a triangle in C^2\n"
        "slmesh 2 3 1\n"
        "0 0 0 0\n"
        "1 0 0 0\n"
        "0 0 1 0\n"
        "\n"
        "0 1 2\n");
    SimplicialPatch M = parseMesh(in, "inline");
    CHECK(M.vertexCount() == 3);
    CHECK(M.simplexCount() == 1);
    CHECK(M.boundaryFaces.size() == 3);
}

TEST_CASE("slmesh parse errors") {
    std::istringstream bad1("slmash 2 3 1\n0 0 0 0\n1 0 0 0\n0 0 1 0\n0 1 2\n");
    CHECK_THROWS_AS(parseMesh(bad1, "t"), ParseError);
    std::istringstream bad2("slmesh 2 3 1\n0 0 0 0\n1 0 0 0\n0 1 2\n");
    CHECK_THROWS_AS(parseMesh(bad2, "t"), ParseError);
    std::istringstream bad3("slmesh 2 3 1\n0 0 0 0\n1 0 0 x\n0 0 1 0\n0 1 2\n");
    CHECK_THROWS_AS(parseMesh(bad3, "t"), ParseError);
}

TEST_CASE("save / load round trip") {
    SimplicialPatch M = generateMesh("disk", 8);
    std::string path = "roundtrip.slmesh";
    saveMesh(M, path);
    SimplicialPatch R = loadMesh(path);
    CHECK(R.vertexCount() == M.vertexCount());
    CHECK(R.simplexCount() == M.simplexCount());
    CHECK((R.vertices - M.vertices).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("validation failures") {
    Mat v(3, 4);
    v << 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0;

    SUBCASE("repeated triangle with the same orientation is non-orientable") {
        Eigen::MatrixXi s(2, 3);
        s << 0, 1, 2, 0, 1, 2;
        CHECK_THROWS_AS(SimplicialPatch::fromData(2, v, s), ValidationError);
    }
    SUBCASE("degenerate simplex") {
        Mat vd(3, 4);
        vd << 0, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0;  // collinear
        Eigen::MatrixXi s(1, 3);
        s << 0, 1, 2;
        CHECK_THROWS_AS(SimplicialPatch::fromData(2, vd, s), ValidationError);
    }
    SUBCASE("face shared by three simplices is non-manifold") {
        Mat v4(5, 4);
        v4 << 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1;
        Eigen::MatrixXi s(3, 3);
        s << 0, 1, 2, 0, 3, 1, 0, 1, 4;
        CHECK_THROWS_AS(SimplicialPatch::fromData(2, v4, s), ValidationError);
    }
    SUBCASE("disconnected patch is rejected") {
        Mat v6(6, 4);
        v6 << 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0,  //
            5, 0, 0, 0, 6, 0, 0, 0, 5, 0, 1, 0;
        Eigen::MatrixXi s(2, 3);
        s << 0, 1, 2, 3, 4, 5;
        CHECK_THROWS_AS(SimplicialPatch::fromData(2, v6, s), ValidationError);
    }
    SUBCASE("unused vertex is rejected") {
        Mat v4(4, 4);
        v4 << 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 9, 9, 9, 9;
        Eigen::MatrixXi s(1, 3);
        s << 0, 1, 2;
        CHECK_THROWS_AS(SimplicialPatch::fromData(2, v4, s), ValidationError);
    }
}

TEST_CASE("generated mesh census") {
    SimplicialPatch annulus = generateMesh("annulus", 16);
    // Crossed-quad annulus, 2 bands x 16 segments: 3 vertex rings + 2 center
    // rings, 4 triangles per quad, two 16-gon rims.
    CHECK(annulus.vertexCount() == 80);
    CHECK(annulus.simplexCount() == 128);
    CHECK(annulus.boundaryFaces.size() == 32);

    SimplicialPatch disk = generateMesh("disk", 16);
    CHECK(disk.boundaryFaces.size() == 16);

    SimplicialPatch pants = generateMesh("pants", 16);
    auto comps = pants.boundaryComponents();
    int nc = 0;
    for (int c : comps) nc = std::max(nc, c + 1);
    CHECK(nc == 3);

    CHECK_THROWS_AS(generateMesh("disk", 3), ValidationError);
    CHECK_THROWS_AS(generateMesh("torus", 8), ValidationError);
}

TEST_CASE("betti numbers of the test shapes") {
    CHECK(bettiNumbers(generateMesh("disk", 8)) == std::make_pair(1, 0));
    CHECK(bettiNumbers(generateMesh("disk", 16)) == std::make_pair(1, 0));
    CHECK(bettiNumbers(generateMesh("annulus", 8)) == std::make_pair(1, 1));
    CHECK(bettiNumbers(generateMesh("annulus", 16)) == std::make_pair(1, 1));
    CHECK(bettiNumbers(generateMesh("pants", 8)) == std::make_pair(1, 2));
    CHECK(bettiNumbers(generateMesh("pants", 16)) == std::make_pair(1, 2));
    CHECK(bettiNumbers(octahedron()) == std::make_pair(1, 0));
    CHECK(bettiNumbers(tetraR6()) == std::make_pair(1, 0));
}

TEST_CASE("betti numbers are invariant under vertex relabeling") {
    SimplicialPatch M = generateMesh("annulus", 8);
    std::mt19937_64 rng(7);
    std::vector<int> perm(M.vertexCount());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat v(M.vertexCount(), 4);
    for (int i = 0; i < M.vertexCount(); ++i) v.row(perm[i]) = M.vertices.row(i);
    Eigen::MatrixXi s = M.simplices;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < 3; ++j) s(i, j) = perm[s(i, j)];
    CHECK(bettiNumbers(SimplicialPatch::fromData(2, v, s)) == bettiNumbers(M));
}

TEST_CASE("volume cochain") {
    SUBCASE("unit right triangle has area 1/2") {
        Cochain vol = volumeCochain(singleTriangle());
        CHECK(vol.values[0] == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("annulus total approaches 3 pi") {
        SimplicialPatch M16 = generateMesh("annulus", 16);
        SimplicialPatch M32 = generateMesh("annulus", 32);
        double exact = 3.0 * M_PI;
        double e16 = std::abs(integrateTop(M16, volumeCochain(M16)) - exact);
        double e32 = std::abs(integrateTop(M32, volumeCochain(M32)) - exact);
        CHECK(e16 < 0.3);
        CHECK(e32 < e16 / 3.0);  // O(h^2) under refinement
    }
    SUBCASE("value flips sign with orientation reversal") {
        SimplicialPatch M = singleTriangle();
        Cochain vol = volumeCochain(M);
        CHECK(valueOn(M, vol, {0, 1, 2}) == doctest::Approx(0.5));
        CHECK(valueOn(M, vol, {1, 0, 2}) == doctest::Approx(-0.5));
    }
    SUBCASE("total is invariant under rigid motions") {
        SimplicialPatch M = generateMesh("disk", 8);
        double v0 = integrateTop(M, volumeCochain(M));
        std::mt19937_64 rng(3);
        Mat Q = randomOrthogonal(4, rng);
        Vec t = randomVec(4, rng);
        Mat moved = (M.vertices * Q.transpose()).rowwise() + t.transpose();
        SimplicialPatch R = M.withVertices(moved);
        CHECK(std::abs(integrateTop(R, volumeCochain(R)) - v0) < 1e-10);
    }
}

TEST_CASE("boundary data") {
    SUBCASE("single triangle: all vertices on the rim, inward unit normals") {
        SimplicialPatch M = singleTriangle();
        BoundaryData B = boundaryData(M);
        CHECK(B.vertexIds.size() == 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(B.normals.row(i).norm() - 1.0) < 1e-12);
            // orthogonal to the averaged rim tangent
            CHECK(std::abs(B.normals.row(i).dot(B.boundaryTangents.row(i))) < 1e-10);
        }
        // at vertex (1,0,0,0) the normal points back into the triangle
        int row = B.indexOf(1);
        Vec inward = B.normals.row(row);
        Vec toInterior(4);
        toInterior << -1.0, 0.0, 1.0, 0.0;  // towards the opposite edge midpoint... roughly
        CHECK(inward.dot(toInterior) > 0.0);
    }
    SUBCASE("disk rim normals are radial (exact by symmetry)") {
        SimplicialPatch M = generateMesh("disk", 16);
        BoundaryData B = boundaryData(M);
        for (size_t i = 0; i < B.vertexIds.size(); ++i) {
            Vec p = M.vertices.row(B.vertexIds[i]);
            Vec radial = p / p.norm();
            CHECK((Vec(B.normals.row(i)) + radial).norm() < 1e-9);
        }
    }
    SUBCASE("closed patch has no boundary data") {
        CHECK_THROWS_WITH_AS(boundaryData(octahedron()),
                             "mesh.boundary_data: empty boundary", ValidationError);
    }
}

TEST_CASE("boundary faces are exactly the faces with one coface") {
    SimplicialPatch M = generateMesh("pants", 8);
    const auto& d = M.complex.d[1];
    std::vector<int> count(M.faceCount(1), 0);
    for (int c = 0; c < d.cols(); ++c)
        for (SparseMat::InnerIterator it(d, c); it; ++it) count[c]++;
    std::vector<int> expect;
    for (int f = 0; f < M.faceCount(1); ++f)
        if (count[f] == 1) expect.push_back(f);
    CHECK(expect == M.boundaryFaces);
}

TEST_CASE("random refinement keeps topology") {
    SimplicialPatch M = generateMesh("annulus", 8);
    std::mt19937_64 rng(11);
    SimplicialPatch R = refineRandom(M, 10, rng);
    CHECK(R.simplexCount() == M.simplexCount() + 20);
    CHECK(bettiNumbers(R) == std::make_pair(1, 1));
}

TEST_CASE("tetrahedron in C^3 has four boundary faces") {
    SimplicialPatch T = tetraR6();
    CHECK(T.boundaryFaces.size() == 4);
    CHECK(T.faceCount(1) == 6);
    Cochain vol = volumeCochain(T);
    CHECK(vol.values[0] == doctest::Approx(1.0 / 6.0));
}
