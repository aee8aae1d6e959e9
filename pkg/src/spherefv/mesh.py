"""Web-like latitude/longitude mesh with non-conformal polar coarsening.

The sphere is sliced into n_bands latitude bands of uniform width
pi/n_bands.  The two outermost bands are single polar cap cells; every
interior band is split into a uniform number of longitude cells.  Walking
from the equator toward a pole, a band's longitude count is halved
(cumulatively) while 2^level * cos(phi_mid) stays below the coarsening
threshold, which keeps zonal cell widths comparable to the equatorial one.

Orientation convention: the in-surface unit normal nu of an edge points from
its left cell into its right cell -- east for meridional edges, north for
zonal and polar-cap-rim edges.  The stored traversal (start -> end) is the
one whose unit tangent t satisfies nu = t x n: south -> north on meridians,
east -> west on latitude circles.  With this convention the boundary of a
cell, taken with outward signs, is a single closed loop.

Zonal interfaces between bands with different longitude counts are stored as
the fine side's sub-edges; the coarse cell lists every sub-edge in its
boundary, so each flux is computed exactly once per sub-edge.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import HALF_PI, TWO_PI, SpherePoint, zonal_patch_area

MERIDIONAL, ZONAL, POLAR_RIM = 0, 1, 2
KIND_NAMES = {MERIDIONAL: "meridional", ZONAL: "zonal", POLAR_RIM: "polar-cap-rim"}


class InvalidResolution(Exception):
    """Resolution parameters incompatible with the coarsening rule."""


class UnknownCell(Exception):
    """Cell id outside the mesh."""


@dataclass(frozen=True)
class CoarseningRule:
    """Halve a band's longitude count while 2^level * cos(phi_mid) < threshold."""

    threshold: float = 0.5

    @staticmethod
    def none() -> "CoarseningRule":
        return CoarseningRule(threshold=0.0)


@dataclass
class Cell:
    id: int
    lam_w: float
    lam_e: float
    phi_s: float
    phi_n: float
    area: float
    band: int
    is_cap: bool = False


@dataclass
class Edge:
    id: int
    kind: str
    start: SpherePoint
    end: SpherePoint
    length: float
    left: int
    right: int


@dataclass
class ValidationReport:
    passed: bool
    area_sum_error: float
    checks: dict
    failures: list = field(default_factory=list)


class WebMesh:
    """Immutable-after-construction cell/edge complex with flat array views."""

    def __init__(self, n_bands, equator_lon_count, merge_rule, cells, edges,
                 band_counts, band_phis):
        self.n_bands = n_bands
        self.equator_lon_count = equator_lon_count
        self.merge_rule = merge_rule
        self.cells = cells
        self.edges = edges
        self.band_counts = band_counts
        self.band_phis = band_phis
        self._stencil = None
        self._build_arrays()

    # -- array views ------------------------------------------------------

    def _build_arrays(self):
        nc, ne = len(self.cells), len(self.edges)
        self.n_cells, self.n_edges = nc, ne
        self.cell_area = np.array([c.area for c in self.cells])
        self.cell_band = np.array([c.band for c in self.cells], dtype=np.int64)
        self.cell_is_cap = np.array([c.is_cap for c in self.cells], dtype=bool)
        self.cell_lam_w = np.array([c.lam_w for c in self.cells])
        self.cell_lam_e = np.array([c.lam_e for c in self.cells])
        self.cell_phi_s = np.array([c.phi_s for c in self.cells])
        self.cell_phi_n = np.array([c.phi_n for c in self.cells])
        lam_c = 0.5 * (self.cell_lam_w + self.cell_lam_e)
        phi_c = 0.5 * (self.cell_phi_s + self.cell_phi_n)
        # caps are represented by their pole point
        lam_c[self.cell_is_cap] = 0.0
        phi_c[self.cell_is_cap] = np.where(
            self.cell_phi_s[self.cell_is_cap] < 0.0, -HALF_PI, HALF_PI)
        self.cell_lam_c = lam_c
        self.cell_phi_c = phi_c

        self.edge_left = np.array([e.left for e in self.edges], dtype=np.int64)
        self.edge_right = np.array([e.right for e in self.edges], dtype=np.int64)
        self.edge_length = np.array([e.length for e in self.edges])
        kind_code = {v: k for k, v in KIND_NAMES.items()}
        self.edge_kind = np.array([kind_code[e.kind] for e in self.edges],
                                  dtype=np.int8)
        self.edge_start_lam = np.array([e.start.lam for e in self.edges])
        self.edge_start_phi = np.array([e.start.phi for e in self.edges])
        self.edge_end_lam = np.array([e.end.lam for e in self.edges])
        self.edge_end_phi = np.array([e.end.phi for e in self.edges])
        from .geometry import sph_to_cart_arrays
        self.edge_start_cart = sph_to_cart_arrays(self.edge_start_lam,
                                                  self.edge_start_phi)
        self.edge_end_cart = sph_to_cart_arrays(self.edge_end_lam,
                                                self.edge_end_phi)
        # per-edge difference of endpoint positions, used by gradient fluxes
        self.edge_cart_diff = self.edge_start_cart - self.edge_end_cart

        # boundary lists in CSR form; sign +1 iff the cell is the edge's left
        counts = np.zeros(nc, dtype=np.int64)
        np.add.at(counts, self.edge_left, 1)
        np.add.at(counts, self.edge_right, 1)
        ptr = np.zeros(nc + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        idx = np.empty(ptr[-1], dtype=np.int64)
        sgn = np.empty(ptr[-1], dtype=np.int64)
        cursor = ptr[:-1].copy()
        for e in range(ne):
            c = self.edge_left[e]
            idx[cursor[c]] = e
            sgn[cursor[c]] = 1
            cursor[c] += 1
        for e in range(ne):
            c = self.edge_right[e]
            idx[cursor[c]] = e
            sgn[cursor[c]] = -1
            cursor[c] += 1
        self.cell_edge_ptr = ptr
        self.cell_edge_idx = idx
        self.cell_edge_sign = sgn

    # -- public surface ---------------------------------------------------

    def boundary(self, cell_id: int):
        """Signed edge list of a cell: sign +1 when nu points out of it."""
        if not 0 <= cell_id < self.n_cells:
            raise UnknownCell(f"cell {cell_id} not in mesh of {self.n_cells}")
        lo, hi = self.cell_edge_ptr[cell_id], self.cell_edge_ptr[cell_id + 1]
        return [(int(self.cell_edge_idx[k]), int(self.cell_edge_sign[k]))
                for k in range(lo, hi)]

    def max_cell_diameter(self) -> float:
        """Largest great-circle diameter over all cells."""
        from .geometry import great_circle_distance, sph_to_cart_arrays
        diam = 0.0
        for c in self.cells:
            if c.is_cap:
                diam = max(diam, math.pi - 2.0 * min(abs(c.phi_s), abs(c.phi_n)))
                continue
            a = sph_to_cart_arrays(c.lam_w, c.phi_s)
            b = sph_to_cart_arrays(c.lam_e, c.phi_n)
            a2 = sph_to_cart_arrays(c.lam_w, c.phi_n)
            b2 = sph_to_cart_arrays(c.lam_e, c.phi_s)
            diam = max(diam, great_circle_distance(a, b),
                       great_circle_distance(a2, b2))
        return diam

    def stencil(self):
        if self._stencil is None:
            self._stencil = _build_stencil(self)
        return self._stencil


def band_longitude_counts(n_bands, n_lon_equator, merge_rule):
    """Per-band longitude counts; caps get 0."""
    counts = [0] * n_bands
    for half in (range(n_bands // 2 - 1, 0, -1), range(n_bands // 2, n_bands - 1)):
        level = 0
        for b in half:
            mid = 0.5 * (-HALF_PI + b * (math.pi / n_bands)
                         - HALF_PI + (b + 1) * (math.pi / n_bands))
            while (1 << level) * math.cos(mid) < merge_rule.threshold:
                level += 1
            if n_lon_equator % (1 << level):
                raise InvalidResolution(
                    f"n_lon_equator={n_lon_equator} not divisible by 2^{level}")
            c = n_lon_equator >> level
            if c < 2:
                raise InvalidResolution(
                    f"band {b} would coarsen below 2 longitude cells")
            counts[b] = c
    return counts


def build_web_mesh(n_bands: int, n_lon_equator: int,
                   merge_rule: CoarseningRule | float = CoarseningRule()) -> WebMesh:
    """Construct the web mesh at the given resolution.

    n_bands must be even and >= 4 (the outermost bands are the polar caps);
    n_lon_equator must be >= 4 and divisible by every halving the merge rule
    triggers.
    """
    if isinstance(merge_rule, (int, float)):
        merge_rule = CoarseningRule(float(merge_rule))
    if n_bands < 4 or n_bands % 2 != 0:
        raise InvalidResolution("n_bands must be even and >= 4")
    if n_lon_equator < 4:
        raise InvalidResolution("n_lon_equator must be >= 4")

    nb = n_bands
    phis = [-HALF_PI + k * (math.pi / nb) for k in range(nb + 1)]
    phis[0], phis[nb] = -HALF_PI, HALF_PI
    counts = band_longitude_counts(nb, n_lon_equator, merge_rule)
    lam_grids = {
        b: [-math.pi + i * (TWO_PI / counts[b]) for i in range(counts[b])]
        for b in range(1, nb - 1)
    }

    cells = []
    id_of = {}

    def add_cell(band, key, lam_w, lam_e, phi_s, phi_n, cap=False):
        cid = len(cells)
        area = zonal_patch_area(lam_w, lam_e, phi_s, phi_n)
        cells.append(Cell(cid, lam_w, lam_e, phi_s, phi_n, area, band, cap))
        id_of[(band, key)] = cid
        return cid

    add_cell(0, 0, -math.pi, math.pi, phis[0], phis[1], cap=True)
    for b in range(1, nb - 1):
        grid, c = lam_grids[b], counts[b]
        for i in range(c):
            lam_e = grid[i + 1] if i + 1 < c else math.pi
            add_cell(b, i, grid[i], lam_e, phis[b], phis[b + 1])
    add_cell(nb - 1, 0, -math.pi, math.pi, phis[nb - 1], phis[nb], cap=True)

    edges = []

    def add_edge(kind, s_lam, s_phi, e_lam, e_phi, length, left, right):
        eid = len(edges)
        edges.append(Edge(eid, KIND_NAMES[kind], SpherePoint(s_lam, s_phi),
                          SpherePoint(e_lam, e_phi), length, left, right))
        return eid

    dphi = math.pi / nb
    for b in range(1, nb - 1):
        grid, c = lam_grids[b], counts[b]
        for i in range(c):
            # edge at grid[i]: west face of cell i, east face of cell i-1
            add_edge(MERIDIONAL, grid[i], phis[b], grid[i], phis[b + 1], dphi,
                     left=id_of[(b, (i - 1) % c)], right=id_of[(b, i)])

    for k in range(1, nb):
        sb, nbnd = k - 1, k
        cs = counts[sb]
        cn = counts[nbnd]
        south_cap = cs == 0
        north_cap = cn == 0
        fine_band = nbnd if cn >= cs else sb
        nf = counts[fine_band]
        grid = lam_grids[fine_band]
        phi0 = phis[k]
        seg = (TWO_PI / nf) * math.cos(phi0)
        kind = POLAR_RIM if (south_cap or north_cap) else ZONAL
        for i in range(nf):
            east_lam = grid[(i + 1) % nf]
            south_cell = id_of[(sb, 0)] if south_cap else id_of[(sb, i // (nf // cs))]
            north_cell = id_of[(nbnd, 0)] if north_cap else id_of[(nbnd, i // (nf // cn))]
            add_edge(kind, east_lam, phi0, grid[i], phi0, seg,
                     left=south_cell, right=north_cell)

    return WebMesh(nb, n_lon_equator, merge_rule, cells, edges, counts, phis)


# -- second-order stencil ---------------------------------------------------


class _Stencil:
    """Static reconstruction data: lateral neighbors, area-weighted
    north/south averages (CSR), and per-edge midpoint offsets."""

    __slots__ = ("west", "east", "dlam", "dphi",
                 "north_ptr", "north_idx", "north_w",
                 "south_ptr", "south_idx", "south_w",
                 "off_l_lam", "off_l_phi", "off_r_lam", "off_r_phi")


def _wrap_delta(d):
    return d - TWO_PI * np.round(d / TWO_PI)


def _build_stencil(mesh: WebMesh) -> _Stencil:
    nc, ne = mesh.n_cells, mesh.n_edges
    st = _Stencil()
    west = np.full(nc, -1, dtype=np.int64)
    east = np.full(nc, -1, dtype=np.int64)
    dlam = np.ones(nc)
    # lateral neighbors come from meridional edges: left = west side cell
    for e in range(ne):
        if mesh.edge_kind[e] != MERIDIONAL:
            continue
        lc, rc = mesh.edge_left[e], mesh.edge_right[e]
        east[lc] = rc
        west[rc] = lc
    for c in mesh.cells:
        if not c.is_cap:
            dlam[c.id] = TWO_PI / mesh.band_counts[c.band]
    st.west, st.east, st.dlam = west, east, dlam
    st.dphi = math.pi / mesh.n_bands

    north = [[] for _ in range(nc)]
    south = [[] for _ in range(nc)]
    for e in range(ne):
        if mesh.edge_kind[e] == MERIDIONAL:
            continue
        lc, rc = int(mesh.edge_left[e]), int(mesh.edge_right[e])
        north[lc].append(rc)
        south[rc].append(lc)

    def to_csr(lists):
        ptr = np.zeros(nc + 1, dtype=np.int64)
        for i, lst in enumerate(lists):
            ptr[i + 1] = ptr[i] + len(set(lst))
        idx = np.empty(ptr[-1], dtype=np.int64)
        w = np.empty(ptr[-1])
        for i, lst in enumerate(lists):
            uniq = sorted(set(lst))
            a = mesh.cell_area[uniq]
            w_i = a / a.sum() if len(uniq) else a
            idx[ptr[i]:ptr[i + 1]] = uniq
            w[ptr[i]:ptr[i + 1]] = w_i
        return ptr, idx, w

    st.north_ptr, st.north_idx, st.north_w = to_csr(north)
    st.south_ptr, st.south_idx, st.south_w = to_csr(south)

    # edge midpoints in (lam, phi); zonal edges reconstruct the interval from
    # the stored west endpoint and the exact segment length
    merid = mesh.edge_kind == MERIDIONAL
    mid_lam = np.where(
        merid,
        mesh.edge_start_lam,
        mesh.edge_end_lam + 0.5 * mesh.edge_length / np.cos(mesh.edge_end_phi))
    mid_phi = np.where(merid,
                       0.5 * (mesh.edge_start_phi + mesh.edge_end_phi),
                       mesh.edge_start_phi)
    for side in ("l", "r"):
        cells = mesh.edge_left if side == "l" else mesh.edge_right
        off_lam = _wrap_delta(mid_lam - mesh.cell_lam_c[cells])
        off_phi = mid_phi - mesh.cell_phi_c[cells]
        cap = mesh.cell_is_cap[cells]
        off_lam[cap] = 0.0
        off_phi[cap] = 0.0
        setattr(st, f"off_{side}_lam", off_lam)
        setattr(st, f"off_{side}_phi", off_phi)
    return st


# -- validation and dump ------------------------------------------------------


def validate(mesh: WebMesh) -> ValidationReport:
    """Structural audit: area sum, per-cell loop closure, two-sided edges,
    non-conformal interface consistency, stored-area formula."""
    failures = []
    checks = {}

    area_err = abs(float(np.sum(mesh.cell_area)) - 2.0 * TWO_PI)
    checks["area_sum"] = area_err <= 1e-12
    if not checks["area_sum"]:
        failures.append(f"cell areas sum to 4*pi + {area_err:.3e}")

    ok = True
    for c in mesh.cells:
        expect = (c.lam_e - c.lam_w) * (math.sin(c.phi_n) - math.sin(c.phi_s))
        if abs(c.area - expect) > 1e-14 * max(1.0, abs(expect)):
            ok = False
            failures.append(f"cell {c.id}: stored area mismatch")
    checks["area_formula"] = ok

    ok = True
    for e in mesh.edges:
        if e.left == e.right or not (0 <= e.left < mesh.n_cells
                                     and 0 <= e.right < mesh.n_cells):
            ok = False
            failures.append(f"edge {e.id}: bad incidence")
    seen = np.zeros(mesh.n_edges, dtype=np.int64)
    signs = {}
    for cid in range(mesh.n_cells):
        for eid, s in mesh.boundary(cid):
            seen[eid] += 1
            signs.setdefault(eid, []).append(s)
    if not (np.all(seen == 2) and all(sorted(v) == [-1, 1] for v in signs.values())):
        ok = False
        failures.append("some edge is not shared by exactly two cells "
                        "with opposite signs")
    checks["two_sided"] = ok

    ok = True
    for cid in range(mesh.n_cells):
        if not _closed_loop(mesh, cid):
            ok = False
            failures.append(f"cell {cid}: boundary does not close")
    checks["loop_closure"] = ok

    checks["nonconformal"] = _check_interfaces(mesh, failures)

    passed = all(checks.values())
    return ValidationReport(passed, area_err, checks, failures)


def _closed_loop(mesh: WebMesh, cid: int) -> bool:
    """Signed boundary arcs must balance in/out degree at every vertex and
    form one connected component."""
    arcs = []
    for eid, s in mesh.boundary(cid):
        e = mesh.edges[eid]
        a = (e.start.lam, e.start.phi)
        b = (e.end.lam, e.end.phi)
        arcs.append((a, b) if s == 1 else (b, a))
    if not arcs:
        return False
    degree = {}
    adj = {}
    for a, b in arcs:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) - 1
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    if any(d != 0 for d in degree.values()):
        return False
    start = arcs[0][0]
    stack, visited = [start], {start}
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w not in visited:
                visited.add(w)
                stack.append(w)
    return len(visited) == len(adj)


def _contains_wrapped(lo, hi, a, b, tol=1e-9):
    """Interval [a, b] inside [lo, hi] modulo 2*pi."""
    shift = _wrap_delta(np.array([a - lo]))[0]
    return -tol <= shift and shift + (b - a) <= (hi - lo) + tol


def _check_interfaces(mesh: WebMesh, failures) -> bool:
    ok = True
    zonal = [e for e in mesh.edges if e.kind != "meridional"]
    by_phi = {}
    for e in zonal:
        by_phi.setdefault(e.start.phi, []).append(e)
    for phi0, group in by_phi.items():
        total = sum(e.length for e in group)
        if abs(total - TWO_PI * math.cos(phi0)) > 1e-12 * max(1.0, TWO_PI):
            ok = False
            failures.append(f"interface phi={phi0}: sub-edges do not tile")
        for e in group:
            width = e.length / math.cos(phi0)
            for cid in (e.left, e.right):
                c = mesh.cells[cid]
                if c.is_cap:
                    continue
                if not _contains_wrapped(c.lam_w, c.lam_e, e.end.lam,
                                         e.end.lam + width):
                    ok = False
                    failures.append(f"edge {e.id} escapes cell {cid}")
    return ok


def dump_csv(mesh: WebMesh, cells_path, edges_path):
    """Debug dump: one row per cell and one row per edge."""
    with open(cells_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "lam_w", "lam_e", "phi_s", "phi_n", "area"])
        for c in mesh.cells:
            w.writerow([c.id, repr(c.lam_w), repr(c.lam_e), repr(c.phi_s),
                        repr(c.phi_n), repr(c.area)])
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "kind", "lam_start", "phi_start", "lam_end",
                    "phi_end", "length", "left", "right"])
        for e in mesh.edges:
            w.writerow([e.id, e.kind, repr(e.start.lam), repr(e.start.phi),
                        repr(e.end.lam), repr(e.end.phi), repr(e.length),
                        e.left, e.right])
