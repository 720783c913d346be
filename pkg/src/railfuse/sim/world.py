"""Ray-castable world built from a track layout.

The environment is deliberately spartan, matching a rail corridor: track
bed, two railheads, catenary poles and wire, optional tunnel walls and
trackside boxes — nothing else. Surfaces are piecewise-planar patches
sampled along the centerline plus analytic cylinders, so every LiDAR ray
intersects the world in closed form.

Labels: 0 none, 1 bed, 2 rail, 3 pole, 4 wall, 5 catenary, 6 furniture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is normally available
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


LABELS = {"none": 0, "bed": 1, "rail": 2, "pole": 3, "wall": 4, "catenary": 5, "furniture": 6}
RAILHEAD_HALF_WIDTH = 0.035
PATCH_SPACING = 2.5


def bed_bump_height(x, y, amplitude: float):
    """Deterministic smooth roughness field, consistent across scans."""
    if amplitude == 0.0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return amplitude * (
        np.sin(2.3 * x + 0.7) * np.sin(1.9 * y + 1.3)
        + 0.6 * np.sin(5.1 * x + 2.9) * np.cos(4.3 * y + 0.5)
    )


@dataclass
class PlanePatch:
    origin: np.ndarray      # (3,)
    normal: np.ndarray      # (3,) unit
    axis_u: np.ndarray      # in-plane longitudinal
    axis_v: np.ndarray      # in-plane lateral
    u_bounds: tuple
    v_bounds: tuple
    label: int
    station: float          # centerline arclength, used for range culling
    bumpy: bool = False


@dataclass
class Cylinder:
    base: np.ndarray
    axis: np.ndarray        # unit
    length: float
    radius: float
    label: int


class RailWorld:
    """Patch/cylinder soup for one layout, with vectorized ray casting."""

    def __init__(self, layout, patch_spacing: float = PATCH_SPACING):
        self.layout = layout
        self.patch_spacing = patch_spacing
        self.patches: list[PlanePatch] = []
        self.cylinders: list[Cylinder] = []
        self._build_patches()
        self._build_furniture()
        self._build_cylinders()
        self._stations = np.array([p.station for p in self.patches])

    # ------------------------------------------------------------ build

    def _build_patches(self):
        lay = self.layout
        n = max(int(np.ceil(lay.total_length / self.patch_spacing)), 1)
        ss = (np.arange(n) + 0.5) * lay.total_length / n
        self.patch_half = 0.5 * lay.total_length / n
        data, rot = lay.frames(ss)
        gauge_half = 0.5 * lay.gauge
        for i, s in enumerate(ss):
            origin = data["position"][i]
            t_axis, lat_axis, up_axis = rot[i, :, 0], rot[i, :, 1], rot[i, :, 2]
            half = self.patch_half + 0.05
            self.patches.append(PlanePatch(
                origin - lay.bed_depth * up_axis, up_axis, t_axis, lat_axis,
                (-half, half), (-lay.bed_half_width, lay.bed_half_width),
                LABELS["bed"], s, bumpy=lay.bed_roughness > 0))
            for sgn in (1.0, -1.0):
                self.patches.append(PlanePatch(
                    origin, up_axis, t_axis, lat_axis,
                    (-half, half),
                    (sgn * gauge_half - RAILHEAD_HALF_WIDTH, sgn * gauge_half + RAILHEAD_HALF_WIDTH),
                    LABELS["rail"], s))
            tunnel = lay.tunnel_at(s)
            if tunnel is not None:
                width = tunnel.half_width
                if tunnel.cross_passage_spacing > 0:
                    phase = s % tunnel.cross_passage_spacing
                    if phase < 2.0:
                        width = tunnel.half_width + tunnel.cross_passage_depth
                for sgn in (1.0, -1.0):
                    self.patches.append(PlanePatch(
                        origin + sgn * width * lat_axis, -sgn * lat_axis, t_axis, up_axis,
                        (-half, half), (-lay.bed_depth - 0.3, tunnel.height),
                        LABELS["wall"], s))
                self.patches.append(PlanePatch(
                    origin + tunnel.height * up_axis, -up_axis, t_axis, lat_axis,
                    (-half, half), (-width, width), LABELS["wall"], s))

    def _build_furniture(self):
        lay = self.layout
        if lay.furniture is None:
            return
        spec = lay.furniture
        ss = np.arange(spec.start, lay.total_length, spec.spacing)
        if len(ss) == 0:
            return
        data, rot = lay.frames(ss)
        du, dv, dh = spec.size
        for i, s in enumerate(ss):
            if lay.tunnel_at(s) is not None:
                continue
            sides = {"left": [1.0], "right": [-1.0], "both": [1.0, -1.0]}[spec.side]
            for sgn in sides:
                t_axis, lat_axis, up_axis = rot[i, :, 0], rot[i, :, 1], rot[i, :, 2]
                base = (data["position"][i] + sgn * spec.lateral_offset * lat_axis
                        - lay.bed_depth * up_axis)
                for face_sgn in (1.0, -1.0):
                    self.patches.append(PlanePatch(
                        base + face_sgn * 0.5 * du * t_axis, face_sgn * t_axis, lat_axis, up_axis,
                        (-0.5 * dv, 0.5 * dv), (0.0, dh), LABELS["furniture"], s))
                    self.patches.append(PlanePatch(
                        base + face_sgn * 0.5 * dv * lat_axis, face_sgn * lat_axis, t_axis, up_axis,
                        (-0.5 * du, 0.5 * du), (0.0, dh), LABELS["furniture"], s))
                self.patches.append(PlanePatch(
                    base + dh * up_axis, up_axis, t_axis, lat_axis,
                    (-0.5 * du, 0.5 * du), (-0.5 * dv, 0.5 * dv), LABELS["furniture"], s))

    def _build_cylinders(self):
        lay = self.layout
        bases, _ = lay.pole_positions()
        for base in bases:
            self.cylinders.append(Cylinder(
                base=base - np.array([0, 0, lay.bed_depth]),
                axis=np.array([0.0, 0.0, 1.0]),
                length=lay.poles.height + lay.bed_depth,
                radius=lay.poles.radius,
                label=LABELS["pole"]))
        if lay.catenary_height is not None:
            n = max(int(np.ceil(lay.total_length / self.patch_spacing)), 1)
            ss = np.linspace(0, lay.total_length, n + 1)
            data, rot = lay.frames(ss)
            pts = data["position"] + lay.catenary_height * rot[:, :, 2]
            for i in range(n):
                seg = pts[i + 1] - pts[i]
                length = np.linalg.norm(seg)
                if length < 1e-6:
                    continue
                self.cylinders.append(Cylinder(
                    base=pts[i], axis=seg / length, length=length,
                    radius=0.06, label=LABELS["catenary"]))

    # ------------------------------------------------------------ casting

    def _pack(self):
        """Struct-of-arrays form of the primitives for the fast kernel."""
        p = self.patches
        self._pk = {
            "origin": np.array([x.origin for x in p]),
            "normal": np.array([x.normal for x in p]),
            "axis_u": np.array([x.axis_u for x in p]),
            "axis_v": np.array([x.axis_v for x in p]),
            "u0": np.array([x.u_bounds[0] for x in p]),
            "u1": np.array([x.u_bounds[1] for x in p]),
            "v0": np.array([x.v_bounds[0] for x in p]),
            "v1": np.array([x.v_bounds[1] for x in p]),
            "label": np.array([x.label for x in p], dtype=np.int64),
            "bumpy": np.array([x.bumpy for x in p], dtype=np.uint8),
            "station": self._stations.copy(),
        }
        c = self.cylinders
        self._ck = {
            "base": np.array([x.base for x in c]).reshape(-1, 3),
            "axis": np.array([x.axis for x in c]).reshape(-1, 3),
            "length": np.array([x.length for x in c]),
            "radius": np.array([x.radius for x in c]),
            "label": np.array([x.label for x in c], dtype=np.int64),
        }

    def cast(self, origins: np.ndarray, dirs: np.ndarray, s_center: float,
             max_range: float = 80.0, min_range: float = 0.5):
        """Closest intersection per ray. Misses get range inf, label 0.
        Patches stationed beyond max_range of s_center are skipped."""
        origins = np.ascontiguousarray(np.atleast_2d(origins), dtype=np.float64)
        dirs = np.ascontiguousarray(np.atleast_2d(dirs), dtype=np.float64)
        if not hasattr(self, "_pk"):
            self._pack()
        pk, ck = self._pk, self._ck
        near = np.flatnonzero(np.abs(pk["station"] - s_center) <= max_range + self.patch_half + 1.0)
        origin_center = origins.mean(axis=0)
        if len(ck["base"]):
            cyl_near = np.flatnonzero(
                np.linalg.norm(ck["base"] - origin_center, axis=1) <= max_range + ck["length"]
            )
        else:
            cyl_near = np.zeros(0, dtype=int)
        out_t = np.full(len(origins), np.inf)
        out_label = np.zeros(len(origins), dtype=np.int64)
        _cast_kernel(
            origins, dirs,
            pk["origin"], pk["normal"], pk["axis_u"], pk["axis_v"],
            pk["u0"], pk["u1"], pk["v0"], pk["v1"], pk["label"], pk["bumpy"],
            near.astype(np.int64), float(self.layout.bed_roughness),
            ck["base"], ck["axis"], ck["length"], ck["radius"], ck["label"],
            cyl_near.astype(np.int64),
            float(min_range), float(max_range), out_t, out_label,
        )
        return out_t, out_label


def generate_world(layout, spacing: float = 0.25) -> dict:
    """Labeled reference point sets for extraction ground truth.

    Returns class-name → (N, 3) arrays sampled directly from the layout
    primitives (not ray-cast): railhead centerlines, bed grid, pole axes,
    tunnel walls, catenary wire.
    """
    ss = np.arange(0.0, layout.total_length, spacing)
    left, right = layout.rail_points(ss)
    data, rot = layout.frames(ss)

    bed = []
    for offset in np.linspace(-layout.bed_half_width, layout.bed_half_width, 13):
        pts = data["position"] + offset * rot[:, :, 1] - layout.bed_depth * rot[:, :, 2]
        if layout.bed_roughness > 0:
            pts = pts + np.column_stack([
                np.zeros(len(pts)), np.zeros(len(pts)),
                bed_bump_height(pts[:, 0], pts[:, 1], layout.bed_roughness)])
        bed.append(pts)
    bed = np.vstack(bed)

    poles = []
    bases, _ = layout.pole_positions()
    for base in bases:
        zs = np.arange(0.0, layout.poles.height, spacing)
        poles.append(base[None, :] + np.column_stack([np.zeros(len(zs)), np.zeros(len(zs)), zs]))
    poles = np.vstack(poles) if poles else np.zeros((0, 3))

    walls = []
    for i, s in enumerate(ss):
        tunnel = layout.tunnel_at(s)
        if tunnel is None:
            continue
        for sgn in (1.0, -1.0):
            base = data["position"][i] + sgn * tunnel.half_width * rot[i, :, 1]
            zs = np.arange(0.0, tunnel.height, 4 * spacing)
            walls.append(base[None, :] + np.outer(zs, rot[i, :, 2]))
    walls = np.vstack(walls) if walls else np.zeros((0, 3))

    if layout.catenary_height is not None:
        catenary = data["position"] + layout.catenary_height * rot[:, :, 2]
    else:
        catenary = np.zeros((0, 3))

    return {
        "rail": np.vstack([left, right]),
        "rail_left": left,
        "rail_right": right,
        "bed": bed,
        "pole": poles,
        "wall": walls,
        "catenary": catenary,
    }
