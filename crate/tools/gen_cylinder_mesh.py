#!/usr/bin/env python3
"""Generate the cylinder benchmark mesh in the latinflow-mesh v1 format.

Channel [0, 2.2] x [0, 0.41] with a cylinder of radius 0.05 centred at
(0.2, 0.2). A square box [0.1, 0.3]^2 around the cylinder is meshed as an
O-grid; the rest of the channel is a tensor-product grid. Q2 mid-edge nodes
on the cylinder lie exactly on the circle.

Usage: gen_cylinder_mesh.py [output] [--box N] [--radial N]
"""
import argparse
import math

import numpy as np

LENGTH, HEIGHT = 2.2, 0.41
CX, CY, R = 0.2, 0.2, 0.05
BOX = (0.1, 0.3)


def graded(a, b, n, first):
    """n intervals on [a, b] growing geometrically from width `first`."""
    if abs(first * n - (b - a)) < 1e-12:
        return np.linspace(a, b, n + 1)
    lo, hi = 1.0 + 1e-12, 2.0
    f = lambda q: first * (q**n - 1) / (q - 1) - (b - a)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    q = 0.5 * (lo + hi)
    widths = first * q ** np.arange(n)
    widths *= (b - a) / widths.sum()
    return np.concatenate([[a], a + np.cumsum(widths)])


def refine(coords):
    """Insert midpoints so that Q2 nodes sit at half intervals."""
    out = np.empty(2 * len(coords) - 1)
    out[0::2] = coords
    out[1::2] = 0.5 * (coords[:-1] + coords[1:])
    return out


class Builder:
    def __init__(self):
        self.nodes = []
        self.index = {}
        self.elements = []

    def node(self, p):
        key = (round(p[0], 10), round(p[1], 10))
        if key not in self.index:
            self.index[key] = len(self.nodes)
            self.nodes.append((float(p[0]), float(p[1])))
        return self.index[key]

    def block(self, mapping, ns, nt):
        """Map a (2ns+1) x (2nt+1) parameter grid on [0,1]^2 through `mapping`."""
        ids = [[self.node(mapping(i / (2 * ns), j / (2 * nt))) for j in range(2 * nt + 1)] for i in range(2 * ns + 1)]
        for i in range(ns):
            for j in range(nt):
                a, b = 2 * i, 2 * j
                conn = [
                    ids[a][b], ids[a + 2][b], ids[a + 2][b + 2], ids[a][b + 2],
                    ids[a + 1][b], ids[a + 2][b + 1], ids[a + 1][b + 2], ids[a][b + 1],
                    ids[a + 1][b + 1],
                ]
                self.elements.append(self.orient(conn))

    def orient(self, conn):
        p = [self.nodes[k] for k in conn[:4]]
        area = sum(p[k][0] * p[(k + 1) % 4][1] - p[(k + 1) % 4][0] * p[k][1] for k in range(4))
        if area < 0:
            c = conn
            conn = [c[0], c[3], c[2], c[1], c[7], c[6], c[5], c[4], c[8]]
        return conn


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("output", nargs="?", default="cylinder.mesh")
    ap.add_argument("--box", type=int, default=12, help="elements per box side")
    ap.add_argument("--radial", type=int, default=6, help="elements between cylinder and box")
    args = ap.parse_args()
    nb, nr = args.box, args.radial
    h = (BOX[1] - BOX[0]) / nb

    xs = np.concatenate([
        np.linspace(0.0, BOX[0], 7)[:-1],
        np.linspace(BOX[0], BOX[1], nb + 1)[:-1],
        graded(BOX[1], LENGTH, 40, h),
    ])
    ys = np.concatenate([
        np.linspace(0.0, BOX[0], 7)[:-1],
        np.linspace(BOX[0], BOX[1], nb + 1)[:-1],
        np.linspace(BOX[1], HEIGHT, 7),
    ])
    xq, yq = refine(xs), refine(ys)

    b = Builder()
    nx, ny = len(xs) - 1, len(ys) - 1
    for i in range(nx):
        for j in range(ny):
            xc, yc = 0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])
            if BOX[0] < xc < BOX[1] and BOX[0] < yc < BOX[1]:
                continue
            b.block(lambda s, t, i=i, j=j: (xq[2 * i + round(2 * s)], yq[2 * j + round(2 * t)]), 1, 1)

    # O-grid: four sides of the box, parameter s along the side, t radial
    x0, x1 = BOX
    sides = [
        lambda s: (x0 + s * (x1 - x0), x0),  # bottom
        lambda s: (x1, x0 + s * (x1 - x0)),  # right
        lambda s: (x1 - s * (x1 - x0), x1),  # top
        lambda s: (x0, x1 - s * (x1 - x0)),  # left
    ]
    radial = graded(0.0, 1.0, nr, 0.6 / nr)
    radial_q = refine(radial)

    for side in sides:
        def mapping(s, t, side=side):
            # s along the side (uniform, matches the Cartesian neighbours), t from circle to box
            px, py = side(s)
            ang = math.atan2(py - CY, px - CX)
            cx, cy = CX + R * math.cos(ang), CY + R * math.sin(ang)
            tt = radial_q[round(t * 2 * nr)]
            return ((1 - tt) * cx + tt * px, (1 - tt) * cy + tt * py)
        b.block(mapping, nb, nr)

    nodes = b.nodes
    sets = {"inflow": [], "outflow": [], "walls": [], "cylinder": []}
    corner_edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    count = {}
    for e, conn in enumerate(b.elements):
        for le, (a, c) in enumerate(corner_edges):
            key = tuple(sorted((conn[a], conn[c])))
            count.setdefault(key, []).append((e, le))
    for key, owners in count.items():
        if len(owners) != 1:
            continue
        e, le = owners[0]
        (xa, ya), (xc, yc) = nodes[key[0]], nodes[key[1]]
        tol = 1e-9
        if abs(xa) < tol and abs(xc) < tol:
            sets["inflow"].append((e, le))
        elif abs(xa - LENGTH) < tol and abs(xc - LENGTH) < tol:
            sets["outflow"].append((e, le))
        elif (abs(ya) < tol and abs(yc) < tol) or (abs(ya - HEIGHT) < tol and abs(yc - HEIGHT) < tol):
            sets["walls"].append((e, le))
        elif abs(math.hypot(xa - CX, ya - CY) - R) < 1e-9 and abs(math.hypot(xc - CX, yc - CY) - R) < 1e-9:
            sets["cylinder"].append((e, le))
        else:
            raise SystemExit(f"unclassified boundary edge {key}")

    with open(args.output, "w") as f:
        f.write("latinflow-mesh v1 dim 2\n")
        f.write("# cylinder benchmark: channel 2.2 x 0.41, cylinder r = 0.05 at (0.2, 0.2)\n")
        f.write(f"nodes {len(nodes)}\n")
        for x, y in nodes:
            f.write(f"{x!r} {y!r}\n")
        f.write(f"elements {len(b.elements)}\n")
        for conn in b.elements:
            f.write(" ".join(map(str, conn)) + "\n")
        for name in ["cylinder", "inflow", "outflow", "walls"]:
            f.write(f"boundary {name} {len(sets[name])}\n")
            for e, le in sorted(sets[name]):
                f.write(f"{e} {le}\n")
    q1 = len({k for c in b.elements for k in c[:4]})
    print(f"{len(b.elements)} elements, {len(nodes)} Q2 nodes, {q1} Q1 nodes")


if __name__ == "__main__":
    main()
