#include "chemofem/mesh.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace chemofem;

TEST(Mesh, SmallestMesh) {
    const auto m = build_rect_mesh(1, 1, 1, 1);
    EXPECT_EQ(m.n_nodes(), 4u);
    EXPECT_EQ(m.n_triangles(), 2u);
    double area = 0.0;
    for (std::size_t e = 0; e < m.n_triangles(); ++e) area += element_geometry(m, e).area;
    EXPECT_NEAR(area, 1.0, 1e-15);
}

TEST(Mesh, CountsAndMeshSize) {
    const auto m = build_rect_mesh(1, 1, 10, 10);
    EXPECT_EQ(m.n_nodes(), 121u);
    EXPECT_EQ(m.n_triangles(), 200u);
    EXPECT_NEAR(m.h, std::sqrt(2.0) / 10.0, 1e-15);

    const auto t1 = build_rect_mesh(2, 1, 80, 40);
    EXPECT_EQ(t1.n_nodes(), 3321u);
    EXPECT_EQ(t1.n_triangles(), 6400u);
}

TEST(Mesh, AreasSumToDomainAndOrientation) {
    for (std::size_t kx : {1, 3, 17, 100}) {
        for (std::size_t ky : {1, 7, 40, 100}) {
            const auto m = build_rect_mesh(2.0, 0.5, kx, ky);
            double area = 0.0;
            for (std::size_t e = 0; e < m.n_triangles(); ++e) {
                const auto g = element_geometry(m, e);
                const auto& v = g.vertices;
                const double signed_det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
                ASSERT_GT(signed_det, 0.0);
                area += g.area;
            }
            EXPECT_NEAR(area, 1.0, 1e-12);
        }
    }
}

TEST(Mesh, EveryInteriorEdgeSharedByTwoTriangles) {
    const auto m = build_rect_mesh(1, 1, 6, 4);
    std::map<std::pair<std::size_t, std::size_t>, int> count;
    for (const auto& t : m.triangles) {
        for (int a = 0; a < 3; ++a) {
            auto i = t[a], j = t[(a + 1) % 3];
            count[{std::min(i, j), std::max(i, j)}]++;
        }
    }
    std::size_t boundary = 0;
    for (const auto& [edge, c] : count) {
        ASSERT_LE(c, 2);
        if (c == 1) ++boundary;
    }
    EXPECT_EQ(boundary, m.boundary_edges.size());
    EXPECT_EQ(boundary, 2u * (6 + 4));
}

TEST(Mesh, InvalidArguments) {
    EXPECT_THROW(build_rect_mesh(0.0, 1.0, 2, 2), InvalidArgument);
    EXPECT_THROW(build_rect_mesh(1.0, -1.0, 2, 2), InvalidArgument);
    EXPECT_THROW(build_rect_mesh(1.0, 1.0, 0, 2), InvalidArgument);
}

TEST(ElementGeometry, ReferenceTriangle) {
    const auto m = oracle::single_triangle({0, 0}, {1, 0}, {0, 1});
    const auto g = element_geometry(m, 0);
    EXPECT_DOUBLE_EQ(g.area, 0.5);
    EXPECT_NEAR(g.grad_bary[0].x, -1.0, 1e-15);
    EXPECT_NEAR(g.grad_bary[0].y, -1.0, 1e-15);
    EXPECT_NEAR(g.grad_bary[1].x, 1.0, 1e-15);
    EXPECT_NEAR(g.grad_bary[2].y, 1.0, 1e-15);
    const Vec2 sum = g.grad_bary[0] + g.grad_bary[1] + g.grad_bary[2];
    EXPECT_NEAR(norm(sum), 0.0, 1e-15);
}

TEST(ElementGeometry, ScaledTriangle) {
    const double h = 0.125;
    const auto g = element_geometry(oracle::single_triangle({0, 0}, {h, 0}, {0, h}), 0);
    EXPECT_NEAR(g.area, h * h / 2.0, 1e-16);
}

TEST(ElementGeometry, CollinearThrows) {
    const auto m = oracle::single_triangle({0, 0}, {1, 1}, {2, 2});
    EXPECT_THROW(element_geometry(m, 0), GeometryError);
}

TEST(Boundary, Classification) {
    const auto b1 = classify_boundary(build_rect_mesh(1, 1, 1, 1));
    EXPECT_EQ(b1.corners.size(), 4u);
    for (const auto& s : b1.sides) EXPECT_TRUE(s.empty());

    const auto b2 = classify_boundary(build_rect_mesh(1, 1, 2, 2));
    EXPECT_EQ(b2.corners.size(), 4u);
    for (const auto& s : b2.sides) EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(b2.all.size(), 8u);

    const auto m = build_rect_mesh(1, 1, 10, 10);
    const auto b10 = classify_boundary(m);
    EXPECT_EQ(b10.all.size(), 40u);
    std::size_t side_nodes = 0;
    for (const auto& s : b10.sides) side_nodes += s.size();
    EXPECT_EQ(side_nodes, 36u);
    for (std::size_t n : b10.sides[static_cast<int>(Side::Left)]) EXPECT_EQ(m.nodes[n].x, 0.0);
    for (std::size_t n : b10.sides[static_cast<int>(Side::Top)]) EXPECT_EQ(m.nodes[n].y, 1.0);
}
