#include "qubodos/topology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "qubodos/errors.hpp"

namespace qubodos {

namespace {

using Vec = std::array<double, 3>;

Vec sub(const Point3& a, const Point3& b)
{
    return {double(a[0] - b[0]), double(a[1] - b[1]), double(a[2] - b[2])};
}

Vec cross(const Vec& a, const Vec& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

bool unit_normal(Vec& v)
{
    const double n = std::sqrt(dot(v, v));
    if (n < 1e-12) return false;
    for (auto& x : v) x /= n;
    return true;
}

double safe_asin(double x) { return std::asin(std::clamp(x, -1.0, 1.0)); }

// Signed solid angle subtended by segment pair (p1->p2, p3->p4), divided by 4 pi.
double segment_linking(const Point3& p1, const Point3& p2, const Point3& p3, const Point3& p4)
{
    const Vec r13 = sub(p3, p1), r14 = sub(p4, p1), r23 = sub(p3, p2), r24 = sub(p4, p2);
    const Vec r12 = sub(p2, p1), r34 = sub(p4, p3);
    const double triple = dot(cross(r34, r12), r13);
    if (triple == 0.0) return 0.0;  // coplanar segments contribute nothing
    Vec n1 = cross(r13, r14), n2 = cross(r14, r24), n3 = cross(r24, r23), n4 = cross(r23, r13);
    if (!unit_normal(n1) || !unit_normal(n2) || !unit_normal(n3) || !unit_normal(n4)) return 0.0;
    const double omega = safe_asin(dot(n1, n2)) + safe_asin(dot(n2, n3)) + safe_asin(dot(n3, n4)) +
                         safe_asin(dot(n4, n1));
    return (triple > 0.0 ? omega : -omega) / (4.0 * std::numbers::pi);
}

// Projection along an integer direction d: p -> (c p_u - p_w a, c p_v - p_w b)
// where w is the viewing axis. Depth along the view is p . d.
struct Projection {
    int axis;
    std::array<long long, 3> dir;

    std::array<long long, 2> map(const Point3& p) const
    {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        return {dir[axis] * p[u] - dir[u] * p[axis], dir[axis] * p[v] - dir[v] * p[axis]};
    }
    long long depth(const Point3& p) const { return dir[0] * p[0] + dir[1] * p[1] + dir[2] * p[2]; }
};

Projection make_projection(int axis, int attempt)
{
    static const std::array<std::array<long long, 2>, 4> tilts{{{2, 3}, {5, 7}, {11, 4}, {3, 13}}};
    Projection pr{axis, {0, 0, 0}};
    pr.dir[axis] = 997;
    pr.dir[(axis + 1) % 3] = tilts[attempt][0];
    pr.dir[(axis + 2) % 3] = tilts[attempt][1];
    return pr;
}

long long cross2(const std::array<long long, 2>& a, const std::array<long long, 2>& b)
{
    return a[0] * b[1] - a[1] * b[0];
}

// Rational parameter num / den with den > 0.
struct Param {
    long long num;
    long long den;
    bool operator<(const Param& o) const { return num * o.den < o.num * den; }
};

struct Passage {
    int crossing;
    Param t;
    bool over;
};

struct Diagram {
    bool regular = true;
    int crossings = 0;
    std::vector<std::vector<Passage>> passages;  // per segment, ordered along the traversal
};

Diagram build_diagram(const LatticePolygon& poly, const Projection& pr)
{
    const int n = static_cast<int>(poly.size());
    std::vector<std::array<long long, 2>> q(n);
    for (int i = 0; i < n; ++i) q[i] = pr.map(poly[i]);
    Diagram dg;
    dg.passages.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& a0 = q[i];
        const auto& a1 = q[(i + 1) % n];
        const std::array<long long, 2> s{a1[0] - a0[0], a1[1] - a0[1]};
        for (int j = i + 1; j < n; ++j) {
            const auto& b0 = q[j];
            const auto& b1 = q[(j + 1) % n];
            const std::array<long long, 2> r{b1[0] - b0[0], b1[1] - b0[1]};
            const std::array<long long, 2> w{b0[0] - a0[0], b0[1] - a0[1]};
            const long long den = cross2(s, r);
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (den == 0) {
                if (adjacent) {
                    // Consecutive segments folding back onto each other in projection.
                    if (s[0] * r[0] + s[1] * r[1] < 0) dg.regular = false;
                    continue;
                }
                if (cross2(w, s) != 0) continue;
                // Collinear projections: degenerate when they overlap.
                const long long ss = s[0] * s[0] + s[1] * s[1];
                const long long t0 = w[0] * s[0] + w[1] * s[1];
                const long long t1 = t0 + r[0] * s[0] + r[1] * s[1];
                if (std::max(t0, t1) >= 0 && std::min(t0, t1) <= ss) dg.regular = false;
                continue;
            }
            long long tn = cross2(w, r), un = cross2(w, s), d = den;
            if (d < 0) {
                tn = -tn;
                un = -un;
                d = -d;
            }
            if (tn < 0 || tn > d || un < 0 || un > d) continue;
            if (adjacent) {
                // Only the shared vertex may coincide.
                const bool shared = j == i + 1 ? (tn == d && un == 0) : (tn == 0 && un == d);
                if (!shared) dg.regular = false;
                continue;
            }
            if (tn == 0 || tn == d || un == 0 || un == d) {
                dg.regular = false;  // a vertex projects onto another segment
                continue;
            }
            // Depths at the crossing, scaled by d.
            const Point3& p0 = poly[i];
            const Point3& p1 = poly[(i + 1) % n];
            const Point3& o0 = poly[j];
            const Point3& o1 = poly[(j + 1) % n];
            const long long da = pr.depth(p0) * d + (pr.depth(p1) - pr.depth(p0)) * tn;
            const long long db = pr.depth(o0) * d + (pr.depth(o1) - pr.depth(o0)) * un;
            if (da == db) {
                dg.regular = false;
                continue;
            }
            // Larger depth along the view direction is closer to the viewer.
            const int c = dg.crossings++;
            dg.passages[i].push_back({c, {tn, d}, da > db});
            dg.passages[j].push_back({c, {un, d}, db > da});
        }
    }
    for (auto& p : dg.passages) {
        std::sort(p.begin(), p.end(), [](const Passage& x, const Passage& y) { return x.t < y.t; });
    }
    return dg;
}

using BigInt = boost::multiprecision::cpp_int;

// Exact determinant by fraction-free Gaussian elimination.
BigInt bareiss(std::vector<std::vector<BigInt>> m)
{
    const std::size_t n = m.size();
    if (n == 0) return 1;
    BigInt sign = 1, prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            std::size_t swap = k + 1;
            while (swap < n && m[swap][k] == 0) ++swap;
            if (swap == n) return 0;
            std::swap(m[k], m[swap]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

long long determinant_from_diagram(const Diagram& dg)
{
    const int nc = dg.crossings;
    if (nc == 0) return 1;
    // Walk the curve; a new arc starts after every under-passage.
    std::vector<int> over_arc(nc, -1), under_in(nc, -1), under_out(nc, -1);
    int arc = 0;
    std::vector<std::pair<int, bool>> events;
    for (const auto& seg : dg.passages) {
        for (const auto& p : seg) events.emplace_back(p.crossing, p.over);
    }
    for (const auto& [c, over] : events) {
        if (over) {
            over_arc[c] = arc;
        } else {
            under_in[c] = arc;
            ++arc;
            under_out[c] = arc;
        }
    }
    const int arcs = arc;
    // The arc before the first under-passage continues the last one.
    for (int c = 0; c < nc; ++c) {
        if (over_arc[c] == arcs) over_arc[c] = 0;
        if (under_in[c] == arcs) under_in[c] = 0;
        if (under_out[c] == arcs) under_out[c] = 0;
    }
    std::vector<std::vector<BigInt>> mat(nc, std::vector<BigInt>(arcs, 0));
    for (int c = 0; c < nc; ++c) {
        mat[c][over_arc[c]] += 2;
        mat[c][under_in[c]] -= 1;
        mat[c][under_out[c]] -= 1;
    }
    std::vector<std::vector<BigInt>> minor;
    for (int c = 1; c < nc; ++c) minor.emplace_back(mat[c].begin() + 1, mat[c].end());
    BigInt det = bareiss(std::move(minor));
    if (det < 0) det = -det;
    return det.convert_to<long long>();
}

}  // namespace

void validate_polygon(const LatticePolygon& poly)
{
    if (poly.size() < 4) throw GeometryError("polygon needs at least 4 vertices");
    std::set<Point3> seen(poly.begin(), poly.end());
    if (seen.size() != poly.size()) throw GeometryError("polygon revisits a vertex");
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        const int step = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
        if (step != 1) throw GeometryError("polygon step " + std::to_string(i) + " is not a unit lattice step");
    }
}

double gauss_linking_sum(const LatticePolygon& a, const LatticePolygon& b)
{
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            total += segment_linking(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()]);
        }
    }
    return total;
}

int gauss_linking(const LatticePolygon& a, const LatticePolygon& b)
{
    validate_polygon(a);
    validate_polygon(b);
    std::set<Point3> va(a.begin(), a.end());
    for (const auto& p : b) {
        if (va.count(p)) throw GeometryError("polygons share a vertex");
    }
    const double lk = gauss_linking_sum(a, b);
    const double rounded = std::round(lk);
    if (std::abs(lk - rounded) > 1e-6) {
        throw NumericalError("linking sum " + std::to_string(lk) + " is not integral");
    }
    return static_cast<int>(rounded);
}

int projected_crossings(const LatticePolygon& poly, int axis)
{
    if (axis < 0 || axis > 2) throw InvalidArgument("axis must be 0, 1 or 2");
    for (int attempt = 0; attempt < 4; ++attempt) {
        const Diagram dg = build_diagram(poly, make_projection(axis, attempt));
        if (dg.regular) return dg.crossings;
    }
    return -1;
}

long long knot_determinant(const LatticePolygon& poly, int axis)
{
    validate_polygon(poly);
    const std::vector<int> axes = axis < 0 ? std::vector<int>{2, 0, 1} : std::vector<int>{axis};
    for (int ax : axes) {
        if (ax < 0 || ax > 2) throw InvalidArgument("axis must be 0, 1 or 2");
        for (int attempt = 0; attempt < 4; ++attempt) {
            const Diagram dg = build_diagram(poly, make_projection(ax, attempt));
            if (dg.regular) return determinant_from_diagram(dg);
        }
    }
    throw GeometryError("no regular projection found");
}

std::vector<LatticePolygon> ring_polygons(const RingConfiguration& config, const CuboidLattice& lattice)
{
    std::vector<LatticePolygon> out;
    for (const auto& ring : config.rings) {
        LatticePolygon poly;
        for (int s : ring) poly.push_back(lattice.coords(s));
        out.push_back(std::move(poly));
    }
    return out;
}

EntanglementReport analyze(const RingConfiguration& config, const CuboidLattice& lattice)
{
    const auto polys = ring_polygons(config, lattice);
    EntanglementReport rep;
    rep.n_rings = static_cast<int>(polys.size());
    for (std::size_t i = 0; i < polys.size(); ++i) {
        for (std::size_t j = i + 1; j < polys.size(); ++j) {
            const int lk = gauss_linking(polys[i], polys[j]);
            rep.linking[{static_cast<int>(i), static_cast<int>(j)}] = lk;
            rep.max_abs_linking = std::max(rep.max_abs_linking, std::abs(lk));
        }
        const long long det = knot_determinant(polys[i]);
        rep.determinants.push_back(det);
        rep.is_knotted = rep.is_knotted || det != 1;
    }
    rep.is_linked = rep.max_abs_linking != 0;
    return rep;
}

void write_report_line(std::ostream& out, long long state_id, int n_c, const EntanglementReport& report)
{
    out << state_id << '\t' << n_c << '\t' << report.n_rings << '\t' << (report.is_linked ? 1 : 0) << '\t'
        << (report.is_knotted ? 1 : 0) << '\t' << report.max_abs_linking << '\n';
}

}  // namespace qubodos
