"""Gaussian-process radio maps and acquisition functions.

The model is a zero-centered GP on ``y - prior_mean`` with a squared-exponential
kernel over horizontal ENU coordinates and a white-noise term on the training
diagonal.  Hyperparameters are fixed; nothing here optimizes the marginal
likelihood.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import ndtr

from .geodesy import EnuPoint, GeoPoint, GeoRect, to_enu, to_geo


@dataclass(frozen=True)
class KernelParams:
    lengthscale_m: float = 60.0
    signal_var: float = 100.0
    noise_var: float = 25.0
    prior_mean_dbm: float = -80.0

    def __post_init__(self):
        if not 1.0 < self.lengthscale_m < 1000.0:
            raise ValueError(f"lengthscale_m must lie in (1, 1000), got {self.lengthscale_m}")
        if not (self.signal_var > 0 and self.noise_var > 0):
            raise ValueError("signal_var and noise_var must be positive")


def kernel_eval(a: EnuPoint, b: EnuPoint, k: KernelParams) -> float:
    """Squared-exponential covariance between two points (horizontal distance only)."""
    d2 = (a.x - b.x) ** 2 + (a.y - b.y) ** 2
    return k.signal_var * math.exp(-d2 / (2.0 * k.lengthscale_m ** 2))


def kernel_matrix(xa: np.ndarray, xb: np.ndarray, k: KernelParams) -> np.ndarray:
    d2 = (
        np.sum(xa * xa, axis=1)[:, None]
        + np.sum(xb * xb, axis=1)[None, :]
        - 2.0 * xa @ xb.T
    )
    np.maximum(d2, 0.0, out=d2)
    return k.signal_var * np.exp(d2 * (-0.5 / k.lengthscale_m ** 2))


def as_xy(points) -> np.ndarray:
    """Coerce EnuPoints or an (n, 2+) array-like into a float (n, 2) array."""
    points = list(points) if not isinstance(points, np.ndarray) else points
    if len(points) and isinstance(points[0], EnuPoint):
        return np.array([[p.x, p.y] for p in points], dtype=float)
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, arr.shape[-1] if arr.ndim > 1 else 2)[:, :2]


class GpModel:
    """Fitted GP posterior; holds the Cholesky factor of ``K + noise_var * I``."""

    def __init__(self, train_x: np.ndarray, train_y: np.ndarray, kernel: KernelParams,
                 chol, alpha: np.ndarray):
        self.train_x = train_x
        self.train_y = train_y
        self.kernel = kernel
        self.chol = chol
        self.alpha = alpha

    @property
    def n(self) -> int:
        return len(self.train_y)

    def predict(self, q: np.ndarray, return_var: bool = True):
        """Posterior mean (dBm) and latent variance (dB^2) at query rows `q`."""
        k = self.kernel
        ks = kernel_matrix(q, self.train_x, k)
        mean = k.prior_mean_dbm + ks @ self.alpha
        if not return_var:
            return mean, None
        c, lower = self.chol
        v = solve_triangular(c, ks.T, lower=lower, trans="T" if not lower else "N", check_finite=False)
        var = k.signal_var - np.einsum("ij,ij->j", v, v)
        np.maximum(var, 0.0, out=var)
        return mean, var


def gp_fit(x, y, k: KernelParams) -> GpModel:
    """Condition the GP on observations `y` (dBm) at horizontal positions `x`."""
    xa = as_xy(x)
    ya = np.asarray(y, dtype=float).ravel()
    if len(xa) != len(ya):
        raise ValueError(f"{len(xa)} positions but {len(ya)} values")
    if not 1 <= len(ya) <= 2000:
        raise ValueError(f"gp_fit supports 1..2000 training points, got {len(ya)}")
    kmat = kernel_matrix(xa, xa, k)
    kmat[np.diag_indices_from(kmat)] += k.noise_var
    chol = cho_factor(kmat, lower=True, check_finite=False)
    assert np.all(np.diag(chol[0]) > 0), "covariance factorization failed"
    alpha = cho_solve(chol, ya - k.prior_mean_dbm, check_finite=False)
    return GpModel(xa, ya, k, chol, alpha)


def gp_predict(model: GpModel, q: EnuPoint) -> tuple[float, float]:
    mean, var = model.predict(np.array([[q.x, q.y]]))
    return float(mean[0]), float(var[0])


class RadioMapGrid:
    """Regular lat/lon grid over a rectangle holding posterior mean and variance.

    Nodes are stored row-major: row 0 is the southern edge, column 0 the
    western edge, so node 0 is the south-west corner.
    """

    def __init__(self, rect: GeoRect, origin: GeoPoint, nx: int = 30, ny: int = 30):
        if nx < 2 or ny < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        self.rect = rect
        self.origin = origin
        self.nx, self.ny = nx, ny
        lats = np.linspace(rect.south, rect.north, ny)
        lons = np.linspace(rect.west, rect.east, nx)
        lat_g, lon_g = np.meshgrid(lats, lons, indexing="ij")
        self.lats = lat_g.ravel()
        self.lons = lon_g.ravel()
        cos0 = math.cos(math.radians(origin.lat))
        r = 6_371_000.0
        self.xy = np.column_stack([
            r * np.radians(self.lons - origin.lon) * cos0,
            r * np.radians(self.lats - origin.lat),
        ])
        self.mean = np.full(nx * ny, np.nan)
        self.var = np.full(nx * ny, np.nan)

    def __len__(self):
        return self.nx * self.ny

    @property
    def populated(self) -> bool:
        return not np.isnan(self.mean[0])

    def update(self, model: GpModel, with_var: bool = True):
        mean, var = model.predict(self.xy, return_var=with_var)
        self.mean = mean
        self.var = var if var is not None else np.full(len(self), np.nan)

    def set_values(self, mean, var):
        self.mean = np.asarray(mean, dtype=float).ravel().copy()
        self.var = np.asarray(var, dtype=float).ravel().copy()
        if self.mean.shape != (len(self),) or self.var.shape != (len(self),):
            raise ValueError("values must have one entry per grid node")

    def node(self, index: int, alt: float = 0.0) -> GeoPoint:
        return GeoPoint(float(self.lats[index]), float(self.lons[index]), alt)

    def node_enu(self, index: int) -> EnuPoint:
        return EnuPoint(float(self.xy[index, 0]), float(self.xy[index, 1]))

    def cell_size_m(self) -> tuple[float, float]:
        return (
            float(self.xy[1, 0] - self.xy[0, 0]),
            float(self.xy[self.nx, 1] - self.xy[0, 1]),
        )

    def to_csv(self, path):
        """Write ``lon,lat,mean_dbm,var_db2`` rows in node order."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lon", "lat", "mean_dbm", "var_db2"])
            for lon, lat, mu, var in zip(self.lons, self.lats, self.mean, self.var):
                w.writerow([f"{lon:.9g}", f"{lat:.9g}", f"{mu:.9g}", f"{var:.9g}"])


def _first_argmax(values: np.ndarray) -> int:
    # np.argmax returns the first occurrence, i.e. the lowest row-major index
    return int(np.argmax(values))


def acquire_ucb(grid: RadioMapGrid, kappa: float = 2.0) -> GeoPoint:
    """Grid node maximizing ``mean + kappa * std``."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if not grid.populated:
        raise ValueError("grid has not been populated")
    score = grid.mean if kappa == 0 else grid.mean + kappa * np.sqrt(grid.var)
    return grid.node(_first_argmax(score))


def acquire_ei(grid: RadioMapGrid, best_dbm: float, xi: float = 0.01) -> GeoPoint:
    """Grid node maximizing expected improvement over `best_dbm`."""
    if not grid.populated:
        raise ValueError("grid has not been populated")
    sd = np.sqrt(grid.var)
    imp = grid.mean - best_dbm - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, imp / sd, 0.0)
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    ei = np.where(sd > 0, imp * ndtr(z) + sd * pdf, np.maximum(imp, 0.0))
    return grid.node(_first_argmax(ei))


def estimate_peak(grid: RadioMapGrid, model: GpModel | None = None, refine: bool = False) -> GeoPoint:
    """Location of the largest posterior mean on the grid.

    With `refine` and a model, the winning node is polished on an 11x11
    sub-grid spanning one cell around it (clipped to the grid rectangle).
    """
    if not grid.populated:
        raise ValueError("grid has not been populated")
    idx = _first_argmax(grid.mean)
    if not (refine and model is not None):
        return grid.node(idx)
    cx, cy = grid.cell_size_m()
    x0, y0 = grid.xy[idx]
    xs = np.clip(x0 + np.linspace(-cx, cx, 11), grid.xy[0, 0], grid.xy[-1, 0])
    ys = np.clip(y0 + np.linspace(-cy, cy, 11), grid.xy[0, 1], grid.xy[-1, 1])
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    q = np.column_stack([gx.ravel(), gy.ravel()])
    mean, _ = model.predict(q, return_var=False)
    j = _first_argmax(mean)
    if mean[j] <= grid.mean[idx]:
        return grid.node(idx)
    p = to_geo(EnuPoint(float(q[j, 0]), float(q[j, 1])), grid.origin)
    return GeoPoint(min(max(p.lat, grid.rect.south), grid.rect.north),
                    min(max(p.lon, grid.rect.west), grid.rect.east), 0.0)


def enu_xy(points: list[GeoPoint], origin: GeoPoint) -> np.ndarray:
    out = np.empty((len(points), 2))
    for i, p in enumerate(points):
        e = to_enu(p, origin)
        out[i] = e.x, e.y
    return out
