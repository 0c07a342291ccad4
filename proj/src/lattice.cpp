#include "qubodos/lattice.hpp"

#include <algorithm>
#include <string>

#include "qubodos/errors.hpp"

namespace qubodos {

namespace {

constexpr std::array<std::array<int, 3>, 6> kDirections{{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
}};

}  // namespace

CuboidLattice::CuboidLattice(int lx, int ly, int lz) : dims_{lx, ly, lz}
{
    if (lx < 1 || ly < 1 || lz < 1) {
        throw InvalidArgument("lattice dimensions must be positive");
    }
    const int n = num_sites();
    incident_.resize(n);
    corners_at_.resize(n);
    for (int s = 0; s < n; ++s) {
        const Point3 p = coords(s);
        for (int axis = 0; axis < 3; ++axis) {
            Point3 q = p;
            ++q[axis];
            if (q[axis] < dims_[axis]) {
                const int t = site(q);
                incident_[s].push_back(num_edges());
                incident_[t].push_back(num_edges());
                edges_.push_back({s, t});
            }
        }
    }
    for (auto& list : incident_) {
        std::sort(list.begin(), list.end());
    }
    for (int j = 0; j < n; ++j) {
        const Point3 p = coords(j);
        std::vector<std::pair<int, int>> nbrs;  // (direction, site)
        for (int d = 0; d < 6; ++d) {
            Point3 q{p[0] + kDirections[d][0], p[1] + kDirections[d][1], p[2] + kDirections[d][2]};
            if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= dims_[0] || q[1] >= dims_[1] || q[2] >= dims_[2]) {
                continue;
            }
            nbrs.emplace_back(d, site(q));
        }
        for (std::size_t a = 0; a < nbrs.size(); ++a) {
            for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
                if (nbrs[a].first / 2 == nbrs[b].first / 2) {
                    continue;  // straight (antiparallel) pair is not a corner
                }
                const int i = std::min(nbrs[a].second, nbrs[b].second);
                const int k = std::max(nbrs[a].second, nbrs[b].second);
                corners_at_[j].push_back(num_corners());
                corners_.push_back(CornerTriplet{i, j, k, edge_between(i, j), edge_between(j, k)});
            }
        }
    }
}

Point3 CuboidLattice::coords(int s) const
{
    if (s < 0 || s >= num_sites()) {
        throw InvalidArgument("site index out of range: " + std::to_string(s));
    }
    return {s % dims_[0], (s / dims_[0]) % dims_[1], s / (dims_[0] * dims_[1])};
}

int CuboidLattice::edge_between(int a, int b) const
{
    if (a < 0 || b < 0 || a >= num_sites() || b >= num_sites()) {
        return -1;
    }
    for (int e : incident_[a]) {
        const auto& ed = edges_[e];
        if ((ed[0] == a && ed[1] == b) || (ed[0] == b && ed[1] == a)) {
            return e;
        }
    }
    return -1;
}

}  // namespace qubodos
