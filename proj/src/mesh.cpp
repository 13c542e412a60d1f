#include "podrhc/mesh.hpp"

#include <stdexcept>

namespace podrhc {

Mesh build_mesh(int n_per_side) {
    if (n_per_side < 3)
        throw std::invalid_argument("build_mesh: n_per_side must be at least 3");

    Mesh mesh;
    mesh.n_per_side = n_per_side;
    const int n = n_per_side;
    const double h = 1.0 / (n - 1);

    mesh.nodes.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            mesh.nodes.emplace_back(i * h, j * h);

    auto node = [n](int i, int j) { return i + j * n; };

    mesh.triangles.reserve(2u * (n - 1) * (n - 1));
    for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
            const int a = node(i, j);
            const int b = node(i + 1, j);
            const int c = node(i, j + 1);
            const int d = node(i + 1, j + 1);
            mesh.triangles.push_back({a, b, d});
            mesh.triangles.push_back({a, d, c});
        }
    }

    mesh.dof_of_node.assign(mesh.nodes.size(), -1);
    for (int j = 1; j + 1 < n; ++j) {
        for (int i = 1; i + 1 < n; ++i) {
            const int g = node(i, j);
            mesh.dof_of_node[static_cast<std::size_t>(g)] = static_cast<int>(mesh.interior_dofs.size());
            mesh.interior_dofs.push_back(g);
        }
    }
    return mesh;
}

double triangle_area(const Mesh& mesh, int tri_index) {
    const auto& t = mesh.triangles.at(static_cast<std::size_t>(tri_index));
    const Eigen::Vector2d& p0 = mesh.nodes[static_cast<std::size_t>(t[0])];
    const Eigen::Vector2d& p1 = mesh.nodes[static_cast<std::size_t>(t[1])];
    const Eigen::Vector2d& p2 = mesh.nodes[static_cast<std::size_t>(t[2])];
    return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

}  // namespace podrhc
