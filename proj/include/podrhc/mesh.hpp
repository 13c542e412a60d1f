#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace podrhc {

/// Uniform structured triangulation of the unit square (0,1)^2 with
/// homogeneous Dirichlet boundary. Nodes are laid out lexicographically
/// (x fastest); every square cell is split along its main diagonal into
/// two positively oriented triangles.
struct Mesh {
    int n_per_side = 0;
    std::vector<Eigen::Vector2d> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> interior_dofs;  // node indices of non-Dirichlet nodes
    std::vector<int> dof_of_node;    // node index -> interior dof index, -1 on the boundary

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_interior() const { return static_cast<int>(interior_dofs.size()); }
    double h() const { return 1.0 / (n_per_side - 1); }
};

/// Builds the n x n node mesh. Rejects n_per_side < 3 (no interior dof).
Mesh build_mesh(int n_per_side);

/// Signed area of a triangle of the mesh (positive by construction).
double triangle_area(const Mesh& mesh, int tri_index);

}  // namespace podrhc
