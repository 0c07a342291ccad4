#!/usr/bin/env python3
"""Independent check of the topology fixtures.

Linking numbers come from numerical Gauss double integrals over segment pairs.
Knot determinants come from the coloring matrix of a tilted projection, with
exact rational elimination. The polygons are read from tests/fixtures.hpp.
"""

import math
import re
import sys
from fractions import Fraction
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures.hpp"

# Gauss-Legendre nodes and weights on [0, 1], 16 points.
_GL_X = [
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499,
]
_GL_W = [
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541,
]
NODES = [((x + 1) / 2, w / 2) for x, w in zip(_GL_X, _GL_W)]


def polygon(name):
    text = FIXTURES.read_text()
    m = re.search(r"LatticePolygon " + name + r"\(\)\s*\{(.*?)\n\}", text, re.S)
    if not m:
        raise SystemExit(f"fixture {name} not found")
    return [tuple(int(v) for v in t) for t in re.findall(r"\{(-?\d+), (-?\d+), (-?\d+)\}", m.group(1))]


def unit_square(x, y, z):
    return [(x, y, z), (x + 1, y, z), (x + 1, y + 1, z), (x, y + 1, z)]


def rectangle(w, h):
    pts = [(x, 0, 0) for x in range(w)] + [(w, y, 0) for y in range(h)]
    pts += [(x, h, 0) for x in range(w, 0, -1)] + [(0, y, 0) for y in range(h, 0, -1)]
    return pts


def segments(poly):
    return [(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))]


def gauss_integral(a, b):
    total = 0.0
    for p0, p1 in segments(a):
        da = [p1[k] - p0[k] for k in range(3)]
        for q0, q1 in segments(b):
            db = [q1[k] - q0[k] for k in range(3)]
            cross = (da[1] * db[2] - da[2] * db[1], da[2] * db[0] - da[0] * db[2], da[0] * db[1] - da[1] * db[0])
            if cross == (0, 0, 0):
                continue
            for s, ws in NODES:
                x = [p0[k] + s * da[k] for k in range(3)]
                for t, wt in NODES:
                    y = [q0[k] + t * db[k] for k in range(3)]
                    r = [x[k] - y[k] for k in range(3)]
                    d = math.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2)
                    total += ws * wt * (cross[0] * r[0] + cross[1] * r[1] + cross[2] * r[2]) / d ** 3
    return total / (4 * math.pi)


TILT = (0.1234567, 0.0765432)


def project(p):
    a, b = TILT
    return (p[0] + a * p[2], p[1] + b * p[2], p[2] - a * p[0] - b * p[1])


def crossings(poly):
    """(over segment, over param, under segment, under param) for each crossing."""
    segs = [(project(p), project(q)) for p, q in segments(poly)]
    out = []
    n = len(segs)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            (p, q), (r, s) = segs[i], segs[j]
            d1 = (q[0] - p[0], q[1] - p[1])
            d2 = (s[0] - r[0], s[1] - r[1])
            den = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(den) < 1e-12:
                continue
            u = ((r[0] - p[0]) * d2[1] - (r[1] - p[1]) * d2[0]) / den
            v = ((r[0] - p[0]) * d1[1] - (r[1] - p[1]) * d1[0]) / den
            if not (0 < u < 1 and 0 < v < 1):
                continue
            hi = p[2] + u * (q[2] - p[2])
            hj = r[2] + v * (s[2] - r[2])
            out.append((i, u, j, v) if hi > hj else (j, v, i, u))
    return out


def determinant(poly):
    xs = crossings(poly)
    if not xs:
        return 1
    unders = sorted((c[2], c[3]) for c in xs)

    def arc(seg, t):
        # arcs are numbered by the undercrossing that starts them
        k = sum(1 for u in unders if u < (seg, t))
        return k % len(unders)

    n = len(xs)
    m = [[Fraction(0)] * n for _ in range(n)]
    for row, (os_, ot, us, ut) in enumerate(xs):
        idx = unders.index((us, ut))
        incoming = (idx) % n
        outgoing = (idx + 1) % n
        m[row][arc(os_, ot)] += 2
        m[row][incoming] -= 1
        m[row][outgoing] -= 1
    minor = [r[1:] for r in m[1:]]
    det = Fraction(1)
    size = len(minor)
    for c in range(size):
        piv = next((r for r in range(c, size) if minor[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            minor[c], minor[piv] = minor[piv], minor[c]
            det = -det
        det *= minor[c][c]
        for r in range(c + 1, size):
            f = minor[r][c] / minor[c][c]
            for k in range(c, size):
                minor[r][k] -= f * minor[c][k]
    return abs(int(det))


def main():
    failures = []

    def expect(label, got, want):
        status = "ok" if got == want else "MISMATCH"
        print(f"{label}: {got} (expected {want}) {status}")
        if got != want:
            failures.append(label)

    for label, a, b, want in [
        ("coplanar squares", unit_square(0, 0, 0), unit_square(2, 0, 0), 0),
        ("stacked squares", unit_square(0, 0, 0), unit_square(0, 0, 1), 0),
        ("Hopf pair", polygon("hopf_square"), polygon("hopf_ring"), 1),
    ]:
        lk = gauss_integral(a, b)
        if abs(lk - round(lk)) > 0.01:
            failures.append(label + " not integral")
        expect(label + " |lk|", abs(round(lk)), want)

    trefoil = polygon("trefoil")
    expect("trefoil edges", len(trefoil), 24)
    steps_ok = all(sum(abs(p[k] - q[k]) for k in range(3)) == 1 for p, q in segments(trefoil))
    expect("trefoil unit steps", steps_ok, True)
    expect("trefoil self-avoiding", len(set(trefoil)), 24)
    expect("trefoil determinant", determinant(trefoil), 3)
    expect("rectangle determinant", determinant(rectangle(4, 2)), 1)
    expect("square determinant", determinant(unit_square(0, 0, 0)), 1)

    if failures:
        print("FAILED:", ", ".join(failures))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
