#!/usr/bin/env python3
"""Generate data/genus2.off: a closed, connected, orientable genus-2 surface.

Builds the boundary surface of a voxel solid (a block with two rectangular
tunnels), splits each boundary quad into two outward-oriented triangles, and
writes the result as an OFF file. The tunnels are kept strictly interior so
the surface is manifold; two independent handles give Euler characteristic
V - E + F = -2.
"""
import sys
from pathlib import Path

NX, NY, NZ = 11, 7, 2
HOLES = [(2, 4), (7, 9)]  # x-ranges [lo, hi); both use y-range [2, 5)


def solid(x, y, z):
    if not (0 <= x < NX and 0 <= y < NY and 0 <= z < NZ):
        return False
    for lo, hi in HOLES:
        if lo <= x < hi and 2 <= y < 5:
            return False
    return True


# Outward quads, as corner offsets in CCW order seen from outside.
FACES = {
    (1, 0, 0): [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)],
    (-1, 0, 0): [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)],
    (0, 1, 0): [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)],
    (0, -1, 0): [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)],
    (0, 0, 1): [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
    (0, 0, -1): [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)],
}


def main(out_path):
    verts = {}
    tris = []

    def vid(p):
        if p not in verts:
            verts[p] = len(verts)
        return verts[p]

    for x in range(NX):
        for y in range(NY):
            for z in range(NZ):
                if not solid(x, y, z):
                    continue
                for (dx, dy, dz), corners in FACES.items():
                    if solid(x + dx, y + dy, z + dz):
                        continue
                    q = [vid((x + cx, y + cy, z + cz)) for cx, cy, cz in corners]
                    tris.append((q[0], q[1], q[2]))
                    tris.append((q[0], q[2], q[3]))

    edges = set()
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    v_n, e_n, f_n = len(verts), len(edges), len(tris)
    chi = v_n - e_n + f_n
    print(f"V={v_n} E={e_n} F={f_n} chi={chi}")
    assert chi == -2, "expected genus 2"

    # edge-manifold + closed: every edge in exactly two triangles
    from collections import Counter
    cnt = Counter()
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            cnt[(min(u, v), max(u, v))] += 1
    assert all(n == 2 for n in cnt.values()), "surface not closed/manifold"

    order = sorted(verts, key=verts.get)
    with open(out_path, "w") as f:
        f.write("OFF\n")
        f.write(f"{v_n} {f_n} {e_n}\n")
        for x, y, z in order:
            f.write(f"{float(x)} {float(y)} {float(z)}\n")
        for a, b, c in tris:
            f.write(f"3 {a} {b} {c}\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "data/genus2.off"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    main(out)
