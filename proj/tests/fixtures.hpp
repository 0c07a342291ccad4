#pragma once

#include <vector>

#include "qubodos/topology.hpp"

namespace fixtures {

using qubodos::LatticePolygon;

// Minimal-length cubic-lattice trefoil (24 unit edges), obtained by shrinking a
// lattice-rounded (2,3) torus curve with length-reducing BFACF moves.
inline LatticePolygon trefoil()
{
    return {{1, 1, 1}, {1, 0, 1}, {1, 0, 2}, {1, 0, 3}, {1, 1, 3}, {2, 1, 3}, {2, 2, 3}, {2, 2, 2},
            {2, 2, 1}, {2, 2, 0}, {1, 2, 0}, {0, 2, 0}, {0, 1, 0}, {0, 1, 1}, {0, 1, 2}, {1, 1, 2},
            {2, 1, 2}, {3, 1, 2}, {3, 2, 2}, {3, 3, 2}, {2, 3, 2}, {1, 3, 2}, {1, 2, 2}, {1, 2, 1}};
}

// 2x2 square in the z = 0 plane.
inline LatticePolygon hopf_square()
{
    return {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {2, 1, 0}, {2, 2, 0}, {1, 2, 0}, {0, 2, 0}, {0, 1, 0}};
}

// 2x2 rectangle in the y = 1 plane piercing the square at (1, 1, 0).
inline LatticePolygon hopf_ring()
{
    return {{1, 1, -1}, {2, 1, -1}, {3, 1, -1}, {3, 1, 0}, {3, 1, 1}, {2, 1, 1}, {1, 1, 1}, {1, 1, 0}};
}

inline LatticePolygon unit_square(int x, int y, int z)
{
    return {{x, y, z}, {x + 1, y, z}, {x + 1, y + 1, z}, {x, y + 1, z}};
}

inline LatticePolygon rectangle(int w, int h)
{
    LatticePolygon p;
    for (int x = 0; x < w; ++x) p.push_back({x, 0, 0});
    for (int y = 0; y < h; ++y) p.push_back({w, y, 0});
    for (int x = w; x > 0; --x) p.push_back({x, h, 0});
    for (int y = h; y > 0; --y) p.push_back({0, y, 0});
    return p;
}

}  // namespace fixtures
