"""Physical layout of the system: antenna moving regions, antenna layouts,
node placement, and the scenario container that every other module consumes.

Conventions
-----------
Positions are 3-vectors (x, y, z) in meters.  Both antenna moving regions are
coplanar squares in the z = 0 plane, separated along x by a configurable gap
and centered as a pair on the origin.  All randomness goes through an explicit
``numpy.random.Generator``; nothing touches global RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleLayoutError

# Rejection sampling gives up after this many total draws.
DEFAULT_SAMPLE_ATTEMPT_CAP = 10**6

# Spacing checks allow this relative slack so exact half-wavelength grids
# (distance == min_spacing up to rounding) validate cleanly.
SPACING_RTOL = 1e-9


def rayleigh_distance(side_length: float, wavelength: float) -> float:
    """Near-field/far-field boundary 4*A^2/lambda for a region of side A."""
    if side_length <= 0 or wavelength <= 0:
        raise ValueError(
            f"side_length and wavelength must be positive, got "
            f"A={side_length}, lambda={wavelength}"
        )
    return 4.0 * side_length**2 / wavelength


@dataclass(frozen=True)
class MovingRegion:
    """Square antenna moving region in the z = 0 plane, stored as bounds so
    edge coordinates stay bit-stable when the side length varies."""

    lo: np.ndarray  # (2,) lower x/y corner
    hi: np.ndarray  # (2,) upper x/y corner

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != (2,) or hi.shape != (2,):
            raise ValueError("region bounds must be 2-vectors")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("region bounds must be finite")
        if np.any(hi <= lo):
            raise ValueError(f"region bounds are empty: {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_center(cls, center, side_length: float) -> "MovingRegion":
        center = np.asarray(center, dtype=float)[:2]
        if side_length <= 0:
            raise ValueError(f"side_length must be positive, got {side_length}")
        half = side_length / 2.0
        return cls(lo=center - half, hi=center + half)

    @property
    def side_length(self) -> float:
        return float(self.hi[0] - self.lo[0])

    @property
    def center(self) -> np.ndarray:
        mid = (self.lo + self.hi) / 2.0
        return np.array([mid[0], mid[1], 0.0])

    def contains(self, points: np.ndarray, rtol: float = SPACING_RTOL) -> bool:
        """True if every (n, 3) point lies in the region (z = 0)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        slack = rtol * max(self.side_length, 1.0)
        in_plane = np.all(np.abs(pts[:, 2]) <= slack)
        in_square = np.all(pts[:, :2] >= self.lo - slack) and np.all(
            pts[:, :2] <= self.hi + slack
        )
        return bool(in_plane and in_square)


def make_region_pair(
    side_length: float, gap: float, plane_z: float = 0.0
) -> tuple[MovingRegion, MovingRegion]:
    """Transmit/receive regions: coplanar squares separated along x by
    ``gap``, the pair centered on the origin.

    The inner edges sit at -gap/2 and +gap/2 for every side length, so
    regions with different sizes are nested and share those edges exactly.
    """
    if plane_z != 0.0:
        raise ValueError("antenna regions are confined to the z = 0 plane")
    if side_length <= 0:
        raise ValueError(f"side_length must be positive, got {side_length}")
    half_gap = gap / 2.0
    half_side = side_length / 2.0
    tx = MovingRegion(lo=np.array([-half_gap - side_length, -half_side]),
                      hi=np.array([-half_gap, half_side]))
    rx = MovingRegion(lo=np.array([half_gap, -half_side]),
                      hi=np.array([half_gap + side_length, half_side]))
    return tx, rx


def min_pairwise_distance(points: np.ndarray) -> float:
    """Smallest pairwise Euclidean distance; +inf for fewer than two points."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        return np.inf
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    iu = np.triu_indices(pts.shape[0], k=1)
    return float(dist[iu].min())


@dataclass(frozen=True)
class AntennaLayout:
    """Transmit and receive antenna positions with their spacing constraint."""

    transmit: np.ndarray  # (N, 3)
    receive: np.ndarray  # (M, 3)
    min_spacing: float

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.transmit, dtype=float))
        r = np.atleast_2d(np.asarray(self.receive, dtype=float))
        if t.shape[1] != 3 or r.shape[1] != 3:
            raise ValueError("antenna positions must be (n, 3) arrays")
        if t.shape[0] == 0 or r.shape[0] == 0:
            raise ValueError("layout needs at least one antenna on each side")
        object.__setattr__(self, "transmit", t)
        object.__setattr__(self, "receive", r)

    @property
    def n_transmit(self) -> int:
        return self.transmit.shape[0]

    @property
    def n_receive(self) -> int:
        return self.receive.shape[0]

    def validate(self, region_t: MovingRegion, region_r: MovingRegion) -> None:
        """Check region membership and the minimum inter-antenna spacing."""
        if not region_t.contains(self.transmit):
            raise InfeasibleLayoutError("transmit antennas leave the transmit region")
        if not region_r.contains(self.receive):
            raise InfeasibleLayoutError("receive antennas leave the receive region")
        floor = self.min_spacing * (1.0 - SPACING_RTOL)
        if min_pairwise_distance(self.transmit) < floor:
            raise InfeasibleLayoutError("transmit antennas violate the minimum spacing")
        if min_pairwise_distance(self.receive) < floor:
            raise InfeasibleLayoutError("receive antennas violate the minimum spacing")


def _sample_positions_in_region(
    region: MovingRegion,
    count: int,
    min_spacing: float,
    rng: np.random.Generator,
    attempt_cap: int,
) -> np.ndarray:
    """Sequential rejection sampling of ``count`` points at pairwise spacing."""
    # Disk-packing guard: each point excludes a disk of radius D/2.
    if count * (np.pi / 4.0) * min_spacing**2 >= region.side_length**2 and count > 1:
        raise InfeasibleLayoutError(
            f"{count} antennas at spacing {min_spacing} cannot pack into a "
            f"{region.side_length} x {region.side_length} region"
        )
    accepted = np.empty((count, 3))
    n_done = 0
    attempts = 0
    while n_done < count:
        if attempts >= attempt_cap:
            raise InfeasibleLayoutError(
                f"rejection sampling exceeded {attempt_cap} attempts "
                f"({n_done}/{count} antennas placed)"
            )
        attempts += 1
        u = rng.random(2)
        cand = np.array(
            [region.lo[0] + u[0] * (region.hi[0] - region.lo[0]),
             region.lo[1] + u[1] * (region.hi[1] - region.lo[1]),
             0.0]
        )
        if n_done > 0:
            d2 = np.sum((accepted[:n_done] - cand) ** 2, axis=1)
            if np.min(d2) < min_spacing**2:
                continue
        accepted[n_done] = cand
        n_done += 1
    return accepted


def sample_layout(
    region_t: MovingRegion,
    region_r: MovingRegion,
    n_transmit: int,
    n_receive: int,
    min_spacing: float,
    rng: np.random.Generator | int,
    attempt_cap: int = DEFAULT_SAMPLE_ATTEMPT_CAP,
) -> AntennaLayout:
    """Draw a uniform random layout satisfying the region and spacing constraints.

    Deterministic given the generator state (or the integer seed).  The two
    regions are sampled independently, transmit side first.
    """
    if n_transmit < 1 or n_receive < 1:
        raise ValueError("antenna counts must be >= 1")
    if min_spacing < 0:
        raise ValueError("min_spacing must be nonnegative")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    t = _sample_positions_in_region(region_t, n_transmit, min_spacing, rng, attempt_cap)
    r = _sample_positions_in_region(region_r, n_receive, min_spacing, rng, attempt_cap)
    return AntennaLayout(transmit=t, receive=r, min_spacing=min_spacing)


def _most_square_grid(count: int) -> tuple[int, int]:
    """Factor count into (nx, ny) with nx >= ny as close to square as possible."""
    ny = int(np.sqrt(count))
    while ny >= 1 and count % ny != 0:
        ny -= 1
    return count // ny, ny


def full_aperture_layout(
    region_t: MovingRegion,
    region_r: MovingRegion,
    n_transmit: int,
    n_receive: int,
    min_spacing: float,
) -> AntennaLayout:
    """Fixed-position baseline: uniform planar grids spanning the full regions."""
    t = _full_span_grid(region_t, n_transmit)
    r = _full_span_grid(region_r, n_receive)
    return AntennaLayout(transmit=t, receive=r, min_spacing=min_spacing)


def _full_span_grid(region: MovingRegion, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("antenna count must be >= 1")
    nx, ny = _most_square_grid(count)
    mid = region.center
    xs = np.linspace(region.lo[0], region.hi[0], nx) if nx > 1 else mid[:1]
    ys = np.linspace(region.lo[1], region.hi[1], ny) if ny > 1 else mid[1:2]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.zeros((gx.size, 3))
    pts[:, 0] = gx.ravel()
    pts[:, 1] = gy.ravel()
    return pts


def _pitch_grid(region: MovingRegion, count: int, pitch: float,
                inner_edge_x: float, direction: float) -> np.ndarray:
    """Fixed-pitch grid anchored against the region edge at ``inner_edge_x``
    and extending in ``direction`` (+1/-1 along x), centered in y.

    Anchoring on the inner edge keeps the geometry independent of the region
    side length, which only grows the region outward.
    """
    if count < 1:
        raise ValueError("antenna count must be >= 1")
    nx, ny = _most_square_grid(count)
    span_x = (nx - 1) * pitch
    span_y = (ny - 1) * pitch
    if span_x > region.side_length or span_y > region.side_length:
        raise InfeasibleLayoutError(
            f"{count}-antenna grid at pitch {pitch} does not fit a "
            f"{region.side_length}-side region"
        )
    center_x = inner_edge_x + direction * span_x / 2.0
    xs = center_x + (np.arange(nx) - (nx - 1) / 2.0) * pitch
    ys = region.center[1] + (np.arange(ny) - (ny - 1) / 2.0) * pitch
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.zeros((gx.size, 3))
    pts[:, 0] = gx.ravel()
    pts[:, 1] = gy.ravel()
    return pts


def half_wavelength_layout(
    wavelength: float,
    region_t: MovingRegion,
    region_r: MovingRegion,
    n_transmit: int,
    n_receive: int,
    min_spacing: float,
) -> AntennaLayout:
    """Fixed-position baseline: half-wavelength-pitch grids anchored on the
    inner region edges (the edges facing each other across the gap), so the
    geometry depends only on the wavelength and antenna counts, never on the
    region size."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    pitch = wavelength / 2.0
    # The transmit region sits on the lower-x side, the receive on the other.
    if region_t.center[0] <= region_r.center[0]:
        t = _pitch_grid(region_t, n_transmit, pitch, region_t.hi[0], -1.0)
        r = _pitch_grid(region_r, n_receive, pitch, region_r.lo[0], +1.0)
    else:
        t = _pitch_grid(region_t, n_transmit, pitch, region_t.lo[0], +1.0)
        r = _pitch_grid(region_r, n_receive, pitch, region_r.hi[0], -1.0)
    return AntennaLayout(transmit=t, receive=r, min_spacing=min_spacing)


@dataclass(frozen=True)
class Scenario:
    """Everything a single run needs: geometry, nodes, budgets, weights.

    Amplitude coefficients (rho_*) are linear field amplitudes; powers and
    noise variances are in watts.  Immutable after construction.
    """

    wavelength: float
    region_t: MovingRegion
    region_r: MovingRegion
    layout: AntennaLayout
    q_ul: np.ndarray  # (J, 3) uplink user positions
    q_dl: np.ndarray  # (K, 3) downlink user positions
    q_targets: np.ndarray  # (L, 3) target positions
    rho_ul: np.ndarray  # (J,) path-loss amplitudes
    rho_dl: np.ndarray  # (K,)
    rho_targets: np.ndarray  # (L,) round-trip amplitudes
    rho_si: float
    noise_bs: float
    noise_dl: np.ndarray  # (K,) per downlink user
    p_dl_max: float
    p_ul_max: float
    weight_targets: np.ndarray  # (L,)
    weight_ul: np.ndarray  # (J,)
    weight_dl: np.ndarray  # (K,)

    def __post_init__(self):
        for name in ("q_ul", "q_dl", "q_targets", "rho_ul", "rho_dl",
                     "rho_targets", "noise_dl", "weight_targets", "weight_ul",
                     "weight_dl"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if not (0.0 < self.rho_si < 1.0):
            raise ValueError(f"SI amplitude must lie in (0, 1), got {self.rho_si}")
        if self.noise_bs <= 0 or np.any(self.noise_dl <= 0):
            raise ValueError("noise variances must be positive")
        if self.p_dl_max <= 0 or self.p_ul_max <= 0:
            raise ValueError("power budgets must be positive")
        w = np.concatenate([self.weight_targets, self.weight_ul, self.weight_dl])
        if np.any(w < 0):
            raise ValueError("rate weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"rate weights must sum to 1, got {w.sum()!r}")
        self.layout.validate(self.region_t, self.region_r)

    @property
    def n_targets(self) -> int:
        return self.q_targets.shape[0]

    @property
    def n_ul(self) -> int:
        return self.q_ul.shape[0]

    @property
    def n_dl(self) -> int:
        return self.q_dl.shape[0]

    def with_layout(self, layout: AntennaLayout) -> "Scenario":
        """Same scenario with different antenna positions."""
        kwargs = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kwargs["layout"] = layout
        return Scenario(**kwargs)
