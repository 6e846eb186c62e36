"""Near-field beamfocusing analysis for the transmit array.

A focusing beamformer is the sum of array response vectors at the desired
focus points; the normalized gain \|w^H a(q)\| / N is evaluated over spatial
grids or cuts to show joint angle/range resolution inside the Rayleigh
distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import response_vector
from .errors import ResourceGuardError

MAX_GRID_POINTS = 10**7
_CHUNK_ROWS = 64  # grid rows evaluated per batch to bound memory


def focusing_beamformer(
    transmit: np.ndarray, focus_points: np.ndarray, wavelength: float
) -> np.ndarray:
    """Sum of the array response vectors at the focus points."""
    focus = np.atleast_2d(np.asarray(focus_points, float))
    if focus.shape[0] < 1:
        raise ValueError("need at least one focus point")
    w = np.zeros(np.atleast_2d(transmit).shape[0], dtype=complex)
    for q in focus:
        w += response_vector(transmit, q, wavelength)
    return w


def beam_gain(
    w: np.ndarray, transmit: np.ndarray, q: np.ndarray, wavelength: float
) -> float:
    """Normalized beamforming gain |w^H a(q)| / N at one position."""
    a = response_vector(transmit, q, wavelength)
    return float(abs(np.vdot(w, a)) / a.shape[0])


def beam_gains(
    w: np.ndarray, transmit: np.ndarray, points: np.ndarray, wavelength: float
) -> np.ndarray:
    """Vectorized gain over (P, 3) query positions."""
    pts = np.atleast_2d(np.asarray(points, float))
    t = np.atleast_2d(np.asarray(transmit, float))
    d = np.linalg.norm(t[None, :, :] - pts[:, None, :], axis=-1)  # (P, N)
    a = np.exp(1j * (2.0 * np.pi / wavelength) * d)
    return np.abs(a @ np.conj(w)) / t.shape[0]


@dataclass(frozen=True)
class GainGrid:
    """Dense gain evaluation over a rectangle at fixed height.

    ``gain[iy, ix]`` is the gain at (x[ix], y[iy], z); serialization iterates
    rows over y with x fastest (row-major).
    """

    x: np.ndarray
    y: np.ndarray
    z: float
    gain: np.ndarray  # (ny, nx)


def beampattern_grid(
    transmit: np.ndarray,
    w: np.ndarray,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    z: float,
    nx: int,
    ny: int,
    wavelength: float,
) -> GainGrid:
    """Evaluate the gain over an nx-by-ny rectangle on the plane z."""
    if nx < 2 or ny < 2:
        raise ValueError("grid resolution must be at least 2x2")
    if nx * ny > MAX_GRID_POINTS:
        raise ResourceGuardError(
            f"grid of {nx}x{ny} = {nx * ny} points exceeds {MAX_GRID_POINTS}"
        )
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    gain = np.zeros((ny, nx))
    for start in range(0, ny, _CHUNK_ROWS):
        rows = ys[start:start + _CHUNK_ROWS]
        gx, gy = np.meshgrid(xs, rows, indexing="xy")
        pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])
        gain[start:start + len(rows)] = beam_gains(
            w, transmit, pts, wavelength
        ).reshape(len(rows), nx)
    return GainGrid(x=xs, y=ys, z=z, gain=gain)
