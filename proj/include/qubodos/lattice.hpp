#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace qubodos {

using Point3 = std::array<int, 3>;

// Pair of perpendicular bonds (first, center) and (center, last) with first < last.
struct CornerTriplet {
    int first;
    int center;
    int last;
    int edge_a;  // edge (first, center)
    int edge_b;  // edge (center, last)
};

// Simple cubic cuboid with open boundaries. Sites are indexed x + Lx * (y + Ly * z).
class CuboidLattice {
public:
    CuboidLattice(int lx, int ly, int lz);

    int lx() const { return dims_[0]; }
    int ly() const { return dims_[1]; }
    int lz() const { return dims_[2]; }
    const std::array<int, 3>& dims() const { return dims_; }
    int num_sites() const { return dims_[0] * dims_[1] * dims_[2]; }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_corners() const { return static_cast<int>(corners_.size()); }

    int site(const Point3& p) const { return p[0] + dims_[0] * (p[1] + dims_[1] * p[2]); }
    Point3 coords(int site) const;

    // Edges as (i, j) with i < j, ordered by i then by direction (+x, +y, +z).
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }
    const std::vector<CornerTriplet>& corners() const { return corners_; }
    // Edge index between two sites, or -1 when they are not neighbours.
    int edge_between(int a, int b) const;
    // Edge indices incident to a site.
    const std::vector<int>& incident_edges(int site) const { return incident_[site]; }
    // Corner indices centred on a site.
    const std::vector<int>& corners_at(int site) const { return corners_at_[site]; }

private:
    std::array<int, 3> dims_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<CornerTriplet> corners_;
    std::vector<std::vector<int>> incident_;
    std::vector<std::vector<int>> corners_at_;
};

}  // namespace qubodos
