"""Potential integrals of the reduced thin-wire kernel.

For a straight cell of length ``d`` and radius ``a`` and an observation point,

    psi = 1 / (4 pi d) * integral over the cell of exp(-jkR) / R dl,

with R = sqrt(|r - r'|**2 + a**2) measured from the cell axis. Close to the
cell the 1/R part is integrated in closed form and the smooth remainder
(exp(-jkR) - 1) / R with Gauss-Legendre on both sides of the foot of the
perpendicular; a cell observed at its own centre is integrated adaptively.
Further away a two-point rule suffices, and far away a single evaluation at
the cell centre.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from scripts import config

# centre distances, in cell lengths, below which the finer rules apply; half-integer
# so that two cells of one wire never sit on a band edge
NEAR_CELLS: float = 3.5
FAR_CELLS: float = 12.5


@dataclass(frozen=True, eq=False)
class Cells:
    """Straight integration cells: start points, unit directions, lengths, radii."""

    start: np.ndarray
    direction: np.ndarray
    length: np.ndarray
    radius: np.ndarray

    def __len__(self) -> int:
        return len(self.length)

    @property
    def centers(self) -> np.ndarray:
        return self.start + self.direction * (self.length / 2)[:, None]

    def take(self, index) -> "Cells":
        return Cells(
            self.start[index], self.direction[index], self.length[index], self.radius[index]
        )

    @classmethod
    def concat(cls, parts: list["Cells"]) -> "Cells":
        return cls(
            start=np.concatenate([p.start for p in parts]),
            direction=np.concatenate([p.direction for p in parts]),
            length=np.concatenate([p.length for p in parts]),
            radius=np.concatenate([p.radius for p in parts]),
        )


def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    # mapped to [0, 1]
    return (nodes + 1) / 2, weights / 2


def _psi_accurate(points, start, direction, length, radius, k, order):
    """Elementwise psi with the closed-form static part; arguments broadcast."""
    u, w = _gauss_legendre(order)

    rel = points - start
    t = np.sum(rel * direction, axis=-1)
    rho2 = np.maximum(np.sum(rel * rel, axis=-1) - t**2, 0.0)
    rho_e = np.sqrt(rho2 + radius**2)
    length = np.broadcast_to(length, t.shape)

    static = np.arcsinh((length - t) / rho_e) + np.arcsinh(t / rho_e)

    foot = np.clip(t, 0.0, length)
    dynamic = np.zeros(t.shape, dtype=complex)
    for lo, hi in ((np.zeros_like(foot), foot), (foot, length)):
        span = hi - lo
        s = lo[..., None] + span[..., None] * u
        r = np.sqrt((s - t[..., None]) ** 2 + rho_e[..., None] ** 2)
        dynamic += span * np.sum(w * np.expm1(-1j * k * r) / r, axis=-1)

    return (static + dynamic) / (4 * np.pi * length)


def _psi_two_point(points, start, direction, length, radius, k):
    """Elementwise psi by two-point Gauss-Legendre over the source cell."""
    u, w = _gauss_legendre(2)
    total = 0j
    for node, weight in zip(u, w):
        x = start + direction * (length * node)[..., None]
        r = np.sqrt(np.sum((points - x) ** 2, axis=-1) + radius**2)
        total = total + weight * np.exp(-1j * k * r) / r

    return total / (4 * np.pi)


def potential_integrals(
    observers: np.ndarray,
    cells: Cells,
    k: float,
    order: int = config.QUADRATURE_ORDER,
    block_rows: int = config.FILL_BLOCK_ROWS,
) -> np.ndarray:
    """Accurate psi[i, j] of cell j seen from observation point i.

    Args:
        observers (np.ndarray): (m, 3) observation points.
        cells (Cells): n source cells.
        k (float): Wavenumber (rad/m).
        order (int): Gauss-Legendre order per piece.
        block_rows (int): Observation points handled per vectorized block.

    Returns:
        np.ndarray: (m, n) complex matrix.

    """
    observers = np.atleast_2d(observers)
    out = np.empty((len(observers), len(cells)), dtype=complex)

    for first in range(0, len(observers), block_rows):
        block = observers[first : first + block_rows]
        out[first : first + block_rows] = _psi_accurate(
            block[:, None, :],
            cells.start[None],
            cells.direction[None],
            cells.length[None],
            cells.radius[None],
            k,
            order,
        )

    return out


def self_potentials(
    length: np.ndarray,
    radius: np.ndarray,
    k: float,
    rtol: float = config.SELF_TERM_RTOL,
) -> np.ndarray:
    """psi of each cell observed at its own centre, integrated adaptively.

    Cells sharing (length, radius) are integrated once.
    """
    pairs = np.stack([np.asarray(length, float), np.asarray(radius, float)], axis=1)
    unique, inverse = np.unique(pairs, axis=0, return_inverse=True)
    d, a = unique[:, 0], unique[:, 1]

    static = 2 * np.arcsinh(d / (2 * a))

    def remainder(x):
        r = np.sqrt(((x - 0.5) * d) ** 2 + a**2)
        value = d * np.expm1(-1j * k * r) / r
        return np.concatenate([value.real, value.imag])

    magnitude = np.min(np.abs(static / (4 * np.pi * d)))
    integral, _ = quad_vec(
        remainder, 0.0, 1.0, epsabs=rtol * magnitude, epsrel=0.0, points=(0.5,)
    )
    dynamic = integral[: len(d)] + 1j * integral[len(d) :]

    psi = (static + dynamic) / (4 * np.pi * d)

    return psi[np.ravel(inverse)]


def potential_matrix(
    rows: Cells,
    cols: Cells,
    k: float,
    order: int = config.QUADRATURE_ORDER,
    same: bool = False,
    block_rows: int = config.FILL_BLOCK_ROWS,
) -> np.ndarray:
    """Symmetric interaction psi between every cell of ``rows`` and ``cols``.

    Entry (i, j) averages psi of cell j observed at the centre of cell i with
    psi of cell i observed at the centre of cell j, so swapping the two sets
    transposes the result exactly. With ``same`` the two sets are one and the
    diagonal holds the adaptively integrated self terms.
    """
    out = np.empty((len(rows), len(cols)), dtype=complex)
    row_centers = rows.centers
    col_centers = cols.centers

    for first in range(0, len(rows), block_rows):
        r = rows.take(slice(first, first + block_rows))
        rc = row_centers[first : first + block_rows]

        distance = np.linalg.norm(rc[:, None, :] - col_centers[None, :, :], axis=-1)
        scale = np.maximum(r.length[:, None], cols.length[None, :])
        radius = np.sqrt((r.radius[:, None] ** 2 + cols.radius[None, :] ** 2) / 2)

        reach = np.sqrt(distance**2 + radius**2)
        value = np.exp(-1j * k * reach) / (4 * np.pi * reach)

        for rule, mask in (
            ("two_point", (distance < FAR_CELLS * scale) & (distance >= NEAR_CELLS * scale)),
            ("accurate", distance < NEAR_CELLS * scale),
        ):
            i, j = np.nonzero(mask)
            if not i.size:
                continue
            forward = (rc[i], cols.start[j], cols.direction[j], cols.length[j], cols.radius[j])
            backward = (col_centers[j], r.start[i], r.direction[i], r.length[i], r.radius[i])
            if rule == "accurate":
                value[i, j] = (
                    _psi_accurate(*forward, k, order) + _psi_accurate(*backward, k, order)
                ) / 2
            else:
                value[i, j] = (_psi_two_point(*forward, k) + _psi_two_point(*backward, k)) / 2

        out[first : first + block_rows] = value

    if same:
        np.fill_diagonal(out, self_potentials(cols.length, cols.radius, k))

    return out


def segment_distances(
    p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray
) -> np.ndarray:
    """Minimum distance between segments [p0, p1] and [q0, q1], broadcast."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    f = np.sum(d2 * r, axis=-1)

    denom = a * e - b * b
    parallel = denom <= 1e-12 * a * e
    s = np.where(parallel, 0.0, np.clip((b * f - c * e) / np.where(parallel, 1.0, denom), 0, 1))
    t = (b * s + f) / e

    below = t < 0
    above = t > 1
    s = np.where(below, np.clip(-c / a, 0, 1), s)
    s = np.where(above, np.clip((b - c) / a, 0, 1), s)
    t = np.clip(t, 0, 1)

    gap = (p0 + d1 * s[..., None]) - (q0 + d2 * t[..., None])

    return np.linalg.norm(gap, axis=-1)
