"""Track geometry and motion profiles.

A layout is a chain of segments (straight / arc / clothoid), each with a
grade and bank ramp. The centerline is the midpoint between the two
railheads at railhead level; arclength s parameterizes the whole chain.
Straights and arcs evaluate in closed form; clothoid positions come from
a fine Hermite table with exact tangents, keeping everything C¹ so that
finite-differenced vehicle kinematics stay clean.

Conventions: world z-up; heading ψ measured from +x; body axes x forward,
y left, z up; positive bank lifts the left (+y) rail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import rot_z

STANDARD_GAUGE = 1.435


@dataclass(frozen=True)
class Segment:
    """One horizontal-geometry piece with linear grade and bank ramps.

    curvature is 1/m, positive turning left; a clothoid ramps linearly
    from curvature_start to curvature. grade is dimensionless (dz/ds);
    bank in radians.
    """

    kind: str                 # "straight" | "arc" | "clothoid"
    length: float
    curvature: float = 0.0
    curvature_start: float = 0.0
    grade_start: float = 0.0
    grade_end: float = 0.0
    bank_start: float = 0.0
    bank_end: float = 0.0

    def __post_init__(self):
        if self.kind not in ("straight", "arc", "clothoid"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.length <= 0:
            raise ValueError("segment length must be positive")


@dataclass(frozen=True)
class PoleSchedule:
    """Catenary-pole placement along the line."""

    spacing: float = 50.0
    lateral_offset: float = 3.0   # meters from centerline, +y side when side="left"
    height: float = 6.0
    radius: float = 0.15
    side: str = "left"            # "left" | "right" | "both"
    start: float = 10.0


@dataclass(frozen=True)
class FurnitureSpec:
    """Periodic trackside boxes (cabinets, platforms): the texture that makes
    open scenes well-conditioned for registration."""

    spacing: float = 18.0
    lateral_offset: float = 5.0
    size: tuple = (1.0, 1.2, 1.6)   # (along-track, lateral, height)
    side: str = "both"
    start: float = 5.0


@dataclass(frozen=True)
class TunnelSpec:
    """Tunnel interval [s_start, s_end]; rectangular corridor cross-section.

    cross_passage_spacing > 0 carves periodic 2 m wall recesses, the only
    longitudinal texture a plain tunnel offers.
    """

    s_start: float
    s_end: float
    half_width: float = 2.3
    height: float = 5.5
    cross_passage_spacing: float = 0.0
    cross_passage_depth: float = 1.0


@dataclass
class TrackLayout:
    segments: list[Segment]
    gauge: float = STANDARD_GAUGE
    poles: PoleSchedule | None = None
    tunnels: list[TunnelSpec] = field(default_factory=list)
    furniture: FurnitureSpec | None = None
    catenary_height: float | None = 5.3
    bed_half_width: float = 3.0
    bed_depth: float = 0.2       # railhead sits this high above the bed
    bed_roughness: float = 0.0   # amplitude of the deterministic bed bump field

    _table: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.gauge <= 0:
            raise ValueError("gauge must be positive")
        self._build()

    # ------------------------------------------------------------- build

    def _build(self):
        s0 = 0.0
        heading = 0.0
        pos = np.zeros(2)
        z = 0.0
        starts, headings, positions, zs = [], [], [], []
        clothoid_tables = []
        for seg in self.segments:
            starts.append(s0)
            headings.append(heading)
            positions.append(pos.copy())
            zs.append(z)
            if seg.kind == "clothoid":
                clothoid_tables.append(self._clothoid_table(seg, heading, pos))
            else:
                clothoid_tables.append(None)
            heading = heading + self._heading_delta(seg, seg.length)
            pos = pos + self._xy_delta(seg, seg.length, headings[-1], clothoid_tables[-1])
            z = z + seg.grade_start * seg.length + 0.5 * (seg.grade_end - seg.grade_start) * seg.length
            s0 += seg.length
        self._table = {
            "starts": np.array(starts),
            "headings": np.array(headings),
            "positions": np.array(positions),
            "zs": np.array(zs),
            "clothoids": clothoid_tables,
            "total": s0,
        }

    @property
    def total_length(self) -> float:
        return self._table["total"]

    @staticmethod
    def _heading_delta(seg: Segment, u) -> np.ndarray:
        if seg.kind == "straight":
            return np.zeros_like(np.asarray(u, dtype=float))
        if seg.kind == "arc":
            return seg.curvature * np.asarray(u, dtype=float)
        u = np.asarray(u, dtype=float)
        rate = (seg.curvature - seg.curvature_start) / seg.length
        return seg.curvature_start * u + 0.5 * rate * u * u

    def _clothoid_table(self, seg: Segment, heading0: float, pos0: np.ndarray, step: float = 0.05):
        n = max(int(np.ceil(seg.length / step)), 2)
        u = np.linspace(0.0, seg.length, n + 1)
        psi = heading0 + self._heading_delta(seg, u)
        # Cumulative trapezoid at a 5 cm pitch; Hermite interpolation with
        # the exact tangents keeps position error ~O(h⁴ κ').
        dx = np.cos(psi)
        dy = np.sin(psi)
        x = np.concatenate([[0.0], np.cumsum(0.5 * (dx[1:] + dx[:-1]) * np.diff(u))])
        y = np.concatenate([[0.0], np.cumsum(0.5 * (dy[1:] + dy[:-1]) * np.diff(u))])
        return {"u": u, "x": x + pos0[0], "y": y + pos0[1], "dx": dx, "dy": dy}

    def _xy_delta(self, seg: Segment, u, heading0: float, table) -> np.ndarray:
        u = float(u)
        if seg.kind == "straight":
            return u * np.array([np.cos(heading0), np.sin(heading0)])
        if seg.kind == "arc":
            k = seg.curvature
            psi1 = heading0 + k * u
            return np.array([(np.sin(psi1) - np.sin(heading0)) / k, (-np.cos(psi1) + np.cos(heading0)) / k])
        x, y = self._clothoid_eval(table, np.array([u]))
        return np.array([x[0], y[0]]) - np.array([table["x"][0], table["y"][0]])

    @staticmethod
    def _clothoid_eval(table, u):
        """Cubic Hermite interpolation of the tabulated clothoid."""
        grid = table["u"]
        idx = np.clip(np.searchsorted(grid, u, side="right") - 1, 0, len(grid) - 2)
        h = grid[idx + 1] - grid[idx]
        t = (u - grid[idx]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        x = (h00 * table["x"][idx] + h10 * h * table["dx"][idx]
             + h01 * table["x"][idx + 1] + h11 * h * table["dx"][idx + 1])
        y = (h00 * table["y"][idx] + h10 * h * table["dy"][idx]
             + h01 * table["y"][idx + 1] + h11 * h * table["dy"][idx + 1])
        return x, y

    # ------------------------------------------------------------- sample

    def _segment_index(self, s):
        starts = self._table["starts"]
        return np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(self.segments) - 1)

    def sample(self, s):
        """Evaluate the centerline at arclength(s). Vectorized.

        Returns a dict with position (N,3) at railhead level, heading,
        grade, bank, curvature arrays.
        """
        s_raw = np.atleast_1d(np.asarray(s, dtype=float))
        s = np.clip(s_raw, 0.0, self.total_length)
        overshoot = s_raw - s
        idx = self._segment_index(s)
        starts = self._table["starts"]
        u = s - starts[idx]

        pos = np.zeros((len(s), 3))
        heading = np.zeros(len(s))
        grade = np.zeros(len(s))
        bank = np.zeros(len(s))
        curvature = np.zeros(len(s))
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if not np.any(mask):
                continue
            ui = u[mask]
            h0 = self._table["headings"][i]
            p0 = self._table["positions"][i]
            z0 = self._table["zs"][i]
            heading[mask] = h0 + self._heading_delta(seg, ui)
            if seg.kind == "straight":
                pos[mask, 0] = p0[0] + ui * np.cos(h0)
                pos[mask, 1] = p0[1] + ui * np.sin(h0)
                curvature[mask] = 0.0
            elif seg.kind == "arc":
                k = seg.curvature
                psi1 = h0 + k * ui
                pos[mask, 0] = p0[0] + (np.sin(psi1) - np.sin(h0)) / k
                pos[mask, 1] = p0[1] + (-np.cos(psi1) + np.cos(h0)) / k
                curvature[mask] = k
            else:
                x, y = self._clothoid_eval(self._table["clothoids"][i], ui)
                pos[mask, 0] = x
                pos[mask, 1] = y
                rate = (seg.curvature - seg.curvature_start) / seg.length
                curvature[mask] = seg.curvature_start + rate * ui
            g_rate = (seg.grade_end - seg.grade_start) / seg.length
            pos[mask, 2] = z0 + seg.grade_start * ui + 0.5 * g_rate * ui * ui
            grade[mask] = seg.grade_start + g_rate * ui
            bank[mask] = seg.bank_start + (seg.bank_end - seg.bank_start) * ui / seg.length
        # Linear extension beyond the chain ends keeps kinematics C¹ there.
        ext = overshoot != 0.0
        if np.any(ext):
            pos[ext, 0] += overshoot[ext] * np.cos(heading[ext])
            pos[ext, 1] += overshoot[ext] * np.sin(heading[ext])
            pos[ext, 2] += overshoot[ext] * grade[ext]
        return {"position": pos, "heading": heading, "grade": grade, "bank": bank, "curvature": curvature}

    def frames(self, s):
        """Body-aligned axes at arclength(s): rotations (N, 3, 3) built as
        Rz(heading) · Ry(-atan(grade)) · Rx(bank)."""
        data = self.sample(s)
        psi = data["heading"]
        pitch = np.arctan(data["grade"])
        roll = data["bank"]
        n = len(psi)
        cz, sz = np.cos(psi), np.sin(psi)
        cy, sy = np.cos(-pitch), np.sin(-pitch)
        cx, sx = np.cos(roll), np.sin(roll)
        rot = np.zeros((n, 3, 3))
        # Rz @ Ry @ Rx expanded.
        rot[:, 0, 0] = cz * cy
        rot[:, 0, 1] = cz * sy * sx - sz * cx
        rot[:, 0, 2] = cz * sy * cx + sz * sx
        rot[:, 1, 0] = sz * cy
        rot[:, 1, 1] = sz * sy * sx + cz * cx
        rot[:, 1, 2] = sz * sy * cx - cz * sx
        rot[:, 2, 0] = -sy
        rot[:, 2, 1] = cy * sx
        rot[:, 2, 2] = cy * cx
        return data, rot

    def rail_points(self, s):
        """Left/right railhead centers at arclength(s), shaped (N, 3) each."""
        data, rot = self.frames(s)
        lateral = rot[:, :, 1]
        half = 0.5 * self.gauge
        left = data["position"] + half * lateral
        right = data["position"] - half * lateral
        return left, right

    def in_tunnel(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        mask = np.zeros(len(s), dtype=bool)
        for t in self.tunnels:
            mask |= (s >= t.s_start) & (s <= t.s_end)
        return mask

    def tunnel_at(self, s: float) -> TunnelSpec | None:
        for t in self.tunnels:
            if t.s_start <= s <= t.s_end:
                return t
        return None

    def pole_positions(self):
        """World positions of pole bases (M, 3) plus their arclengths."""
        if self.poles is None:
            return np.zeros((0, 3)), np.zeros(0)
        ss = np.arange(self.poles.start, self.total_length, self.poles.spacing)
        if len(ss) == 0:
            return np.zeros((0, 3)), np.zeros(0)
        data, rot = self.frames(ss)
        lateral = rot[:, :, 1]
        bases = []
        s_list = []
        for i, s in enumerate(ss):
            sides = {"left": [1.0], "right": [-1.0], "both": [1.0, -1.0]}[self.poles.side]
            for sgn in sides:
                bases.append(data["position"][i] + sgn * self.poles.lateral_offset * lateral[i])
                s_list.append(s)
        return np.array(bases), np.array(s_list)


@dataclass
class MotionProfile:
    """Speed along arclength as piecewise-linear v(t) knots.

    The vehicle stays glued to the track: yaw follows the tangent, roll the
    bank, pitch the grade; there is no independent 6-DoF excitation.
    """

    knots_t: np.ndarray
    knots_v: np.ndarray

    def __post_init__(self):
        self.knots_t = np.asarray(self.knots_t, dtype=float)
        self.knots_v = np.asarray(self.knots_v, dtype=float)
        if np.any(self.knots_v < 0):
            raise ValueError("speeds must be non-negative")
        if np.any(np.diff(self.knots_t) <= 0):
            raise ValueError("knot times must increase")

    @staticmethod
    def constant(speed: float, duration: float) -> "MotionProfile":
        return MotionProfile(knots_t=[0.0, duration], knots_v=[speed, speed])

    @property
    def duration(self) -> float:
        return float(self.knots_t[-1])

    def speed(self, t):
        return np.interp(np.asarray(t, dtype=float), self.knots_t, self.knots_v)

    def arclength(self, t):
        """s(t) = ∫v dt, exact for the piecewise-linear profile."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        kt, kv = self.knots_t, self.knots_v
        seg_area = 0.5 * (kv[1:] + kv[:-1]) * np.diff(kt)
        cum = np.concatenate([[0.0], np.cumsum(seg_area)])
        idx = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, len(kt) - 2)
        dt = t - kt[idx]
        v0 = kv[idx]
        slope = (kv[idx + 1] - kv[idx]) / (kt[idx + 1] - kt[idx])
        return cum[idx] + v0 * dt + 0.5 * slope * dt * dt
