#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "qubodos/lattice.hpp"
#include "qubodos/melt.hpp"

namespace qubodos {

// Closed polygon on the cubic lattice; the last vertex connects back to the first.
using LatticePolygon = std::vector<Point3>;

// Throws GeometryError unless the polygon is simple, closed and has unit steps.
void validate_polygon(const LatticePolygon& poly);

// Gauss linking number as a real sum of signed solid angles over segment pairs.
double gauss_linking_sum(const LatticePolygon& a, const LatticePolygon& b);
// Rounded linking number; rejects shared vertices and non-integral sums.
int gauss_linking(const LatticePolygon& a, const LatticePolygon& b);

// |Delta(-1)| from a regular projection. axis selects the near-axis viewing
// direction (0 = x, 1 = y, 2 = z); -1 tries z, x, y in turn.
long long knot_determinant(const LatticePolygon& poly, int axis = -1);

// Number of crossings of the projection along the chosen axis; -1 when degenerate.
int projected_crossings(const LatticePolygon& poly, int axis);

struct EntanglementReport {
    int n_rings = 0;
    std::map<std::pair<int, int>, int> linking;  // i < j
    std::vector<long long> determinants;
    bool is_linked = false;
    bool is_knotted = false;
    int max_abs_linking = 0;
};

std::vector<LatticePolygon> ring_polygons(const RingConfiguration& config, const CuboidLattice& lattice);
EntanglementReport analyze(const RingConfiguration& config, const CuboidLattice& lattice);

// "state_id n_c n_rings linked knotted max|lk|"
void write_report_line(std::ostream& out, long long state_id, int n_c, const EntanglementReport& report);

}  // namespace qubodos
