#include "qubodos/melt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qubodos/errors.hpp"

namespace qubodos {

std::vector<std::size_t> MeltLayout::slack_vars() const
{
    std::vector<std::size_t> out;
    for (int k = 0; k < m; ++k) {
        out.push_back(slack(k));
    }
    return out;
}

MeltModel build_melt(const CuboidLattice& lattice, const MeltCoefficients& coeffs, const CurvatureInterval& interval,
                     double A)
{
    if (!(coeffs.bonds > 0.0 && coeffs.branching > 0.0 && coeffs.consistency > 0.0 && A > 0.0)) {
        throw InvalidArgument("melt penalty coefficients must be positive");
    }
    if (interval.m < 0 || interval.m > 30 || interval.n_bar < 0 || interval.n_bar > lattice.num_sites()) {
        throw InvalidArgument("curvature interval [" + std::to_string(interval.lower()) + ", " +
                              std::to_string(interval.upper()) + "] does not intersect [0, " +
                              std::to_string(lattice.num_sites()) + "]");
    }
    MeltLayout layout{lattice.num_edges(), lattice.num_corners(), interval.m};
    QuboBuilder builder(layout.num_vars());

    // A_b (sum bonds - N)^2
    LinearForm bond_count;
    for (int e = 0; e < layout.num_edges; ++e) {
        bond_count.add(layout.bond(e), 1);
    }
    bond_count.constant = -lattice.num_sites();
    builder.add_squared_penalty(bond_count, coeffs.bonds);

    // A_c sum over ordered pairs of distinct corners sharing a centre.
    for (int j = 0; j < lattice.num_sites(); ++j) {
        const auto& at = lattice.corners_at(j);
        for (std::size_t a = 0; a < at.size(); ++a) {
            for (std::size_t b = a + 1; b < at.size(); ++b) {
                builder.add_quadratic(layout.corner(at[a]), layout.corner(at[b]), 2.0 * coeffs.branching);
            }
        }
    }

    // A_bc [3 G_c + G_ij G_jk - 2 G_c (G_ij + G_jk)]
    for (int c = 0; c < layout.num_corners; ++c) {
        const auto& t = lattice.corners()[c];
        const auto gc = layout.corner(c);
        builder.add_linear(gc, 3.0 * coeffs.consistency);
        builder.add_quadratic(layout.bond(t.edge_a), layout.bond(t.edge_b), coeffs.consistency);
        builder.add_quadratic(gc, layout.bond(t.edge_a), -2.0 * coeffs.consistency);
        builder.add_quadratic(gc, layout.bond(t.edge_b), -2.0 * coeffs.consistency);
    }

    // A (sum corners - n_bar - sum_k 2^k s_k)^2
    LinearForm curvature;
    for (int c = 0; c < layout.num_corners; ++c) {
        curvature.add(layout.corner(c), 1);
    }
    for (int k = 0; k < interval.m; ++k) {
        curvature.add(layout.slack(k), -(1LL << k));
    }
    curvature.constant = -interval.n_bar;
    builder.add_squared_penalty(curvature, A);

    return MeltModel{builder.build(), layout, interval};
}

RingConfiguration rings_from_bonds(const std::vector<int>& bonds, const CuboidLattice& lattice)
{
    const int n = lattice.num_sites();
    std::vector<std::vector<int>> nbrs(n);
    for (int e : bonds) {
        if (e < 0 || e >= lattice.num_edges()) {
            throw CorruptStateError("bond index out of range");
        }
        const auto& ed = lattice.edges()[e];
        nbrs[ed[0]].push_back(ed[1]);
        nbrs[ed[1]].push_back(ed[0]);
    }
    for (int s = 0; s < n; ++s) {
        if (nbrs[s].size() != 2) {
            throw CorruptStateError("degree violation: site " + std::to_string(s) + " has " +
                                    std::to_string(nbrs[s].size()) + " bonds");
        }
    }
    RingConfiguration config;
    config.dims = lattice.dims();
    std::vector<char> seen(n, 0);
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        std::vector<int> ring{start};
        seen[start] = 1;
        int prev = start;
        int cur = std::min(nbrs[start][0], nbrs[start][1]);
        while (cur != start) {
            ring.push_back(cur);
            seen[cur] = 1;
            const int next = nbrs[cur][0] == prev ? nbrs[cur][1] : nbrs[cur][0];
            prev = cur;
            cur = next;
        }
        config.rings.push_back(std::move(ring));
    }
    config.n_c = geometric_corner_count(config.rings, lattice);
    return config;
}

int geometric_corner_count(const std::vector<std::vector<int>>& rings, const CuboidLattice& lattice)
{
    int corners = 0;
    for (const auto& ring : rings) {
        const std::size_t len = ring.size();
        for (std::size_t k = 0; k < len; ++k) {
            const Point3 a = lattice.coords(ring[(k + len - 1) % len]);
            const Point3 b = lattice.coords(ring[k]);
            const Point3 c = lattice.coords(ring[(k + 1) % len]);
            int dot = 0;
            for (int ax = 0; ax < 3; ++ax) {
                dot += (b[ax] - a[ax]) * (c[ax] - b[ax]);
            }
            corners += dot == 0 ? 1 : 0;
        }
    }
    return corners;
}

RingConfiguration decode_melt(const SpinState& state, const MeltLayout& layout, const CuboidLattice& lattice)
{
    if (state.size() != layout.num_vars() || layout.num_edges != lattice.num_edges() ||
        layout.num_corners != lattice.num_corners()) {
        throw DimensionError("state or layout does not match the lattice");
    }
    std::vector<int> bonds;
    for (int e = 0; e < layout.num_edges; ++e) {
        if (state[layout.bond(e)]) bonds.push_back(e);
    }
    RingConfiguration config = rings_from_bonds(bonds, lattice);
    int active = 0;
    for (int c = 0; c < layout.num_corners; ++c) {
        const auto& t = lattice.corners()[c];
        const int expected = state[layout.bond(t.edge_a)] && state[layout.bond(t.edge_b)] ? 1 : 0;
        if (state[layout.corner(c)] != expected) {
            throw CorruptStateError("corner consistency violated at corner " + std::to_string(c));
        }
        active += expected;
    }
    if (active != config.n_c) {
        throw CorruptStateError("corner variables disagree with ring geometry");
    }
    return config;
}

Validation validate_melt_ground_state(const SpinState& state, const QuboModel& model, const MeltLayout& layout,
                                      const CuboidLattice& lattice, const CurvatureInterval& interval)
{
    Validation v;
    if (state.size() != layout.num_vars() || model.num_vars() != layout.num_vars()) {
        v.reason = "dimension mismatch";
        return v;
    }
    RingConfiguration config;
    try {
        config = decode_melt(state, layout, lattice);
    } catch (const CorruptStateError& e) {
        const std::string what = e.what();
        v.reason = what.find("corner") != std::string::npos ? "corner consistency" : "degree violation";
        return v;
    }
    v.bin = config.n_c;
    if (!interval.contains(config.n_c)) {
        v.reason = "n_c outside interval";
        return v;
    }
    if (std::abs(model.evaluate(state)) > 1e-9) {
        v.reason = "nonzero energy (slack not minimal)";
        return v;
    }
    v.ok = true;
    return v;
}

std::optional<std::vector<int>> slab_configuration(const CuboidLattice& lattice)
{
    const auto dims = lattice.dims();
    int even = -1;
    for (int a = 0; a < 3; ++a) {
        if (dims[a] % 2 == 0) even = a;
    }
    if (even < 0) return std::nullopt;
    // Tile lines along `along` into pieces of 2 (plus one of 3 when odd), doubled along `even`.
    int along = -1;
    for (int a = 0; a < 3; ++a) {
        if (a != even && dims[a] >= 2) along = a;
    }
    if (along < 0) return std::nullopt;
    const int third = 3 - even - along;
    std::vector<int> bonds;
    auto bond = [&](Point3 p, Point3 q) {
        bonds.push_back(lattice.edge_between(lattice.site(p), lattice.site(q)));
    };
    for (int t = 0; t < dims[third]; ++t) {
        for (int e = 0; e < dims[even]; e += 2) {
            for (int start = 0; start < dims[along];) {
                const int len = dims[along] - start == 3 ? 3 : 2;
                auto at = [&](int u, int v) {
                    Point3 p{};
                    p[along] = start + u;
                    p[even] = e + v;
                    p[third] = t;
                    return p;
                };
                for (int u = 0; u + 1 < len; ++u) {
                    bond(at(u, 0), at(u + 1, 0));
                    bond(at(u, 1), at(u + 1, 1));
                }
                bond(at(0, 0), at(0, 1));
                bond(at(len - 1, 0), at(len - 1, 1));
                start += len;
            }
        }
    }
    return bonds;
}

SpinState complete_melt_state(const std::vector<int>& bonds, const MeltLayout& layout, const CuboidLattice& lattice,
                              const CurvatureInterval& interval)
{
    const RingConfiguration config = rings_from_bonds(bonds, lattice);
    if (!interval.contains(config.n_c)) {
        throw InvalidArgument("bond set has n_c " + std::to_string(config.n_c) + " outside the interval");
    }
    SpinState state(layout.num_vars());
    for (int e : bonds) {
        state.set(layout.bond(e), true);
    }
    for (int c = 0; c < layout.num_corners; ++c) {
        const auto& t = lattice.corners()[c];
        state.set(layout.corner(c), state[layout.bond(t.edge_a)] && state[layout.bond(t.edge_b)]);
    }
    const int excess = config.n_c - interval.n_bar;
    for (int k = 0; k < layout.m; ++k) {
        state.set(layout.slack(k), (excess >> k) & 1);
    }
    return state;
}

void write_rings(std::ostream& out, const RingConfiguration& config)
{
    out << "rings " << config.dims[0] << ' ' << config.dims[1] << ' ' << config.dims[2] << ' ' << config.n_c << ' '
        << config.n_rings() << '\n';
    for (const auto& ring : config.rings) {
        for (std::size_t k = 0; k < ring.size(); ++k) {
            out << (k ? "," : "") << ring[k];
        }
        out << '\n';
    }
}

RingConfiguration read_rings(std::istream& in)
{
    RingConfiguration config;
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("missing rings header");
    }
    std::istringstream header(line);
    std::string tag;
    int count = 0;
    if (!(header >> tag >> config.dims[0] >> config.dims[1] >> config.dims[2] >> config.n_c >> count) ||
        tag != "rings" || count < 0) {
        throw FormatError("bad rings header: " + line);
    }
    for (int r = 0; r < count; ++r) {
        if (!std::getline(in, line)) {
            throw FormatError("truncated ring list");
        }
        std::vector<int> ring;
        std::istringstream fields(line);
        std::string item;
        while (std::getline(fields, item, ',')) {
            ring.push_back(std::stoi(item));
        }
        config.rings.push_back(std::move(ring));
    }
    return config;
}

void write_melt_layout(std::ostream& out, const CuboidLattice& lattice, const MeltLayout& layout,
                       const CurvatureInterval& interval)
{
    out << "layout melt dims " << lattice.lx() << ' ' << lattice.ly() << ' ' << lattice.lz() << " m " << layout.m
        << " n_bar " << interval.n_bar << '\n';
    out << "layout ranges bonds 0 " << layout.num_edges << " corners " << layout.corner(0) << ' '
        << layout.num_corners << " slack " << layout.slack(0) << ' ' << layout.m << '\n';
}

}  // namespace qubodos
