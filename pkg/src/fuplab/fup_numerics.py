r"""Masked-transform uncertainty experiments on grids and spheres.

The experiments all share one shape: cut off to a porous set, apply a unitary
or oscillatory transform, cut off to another porous set, and watch the
operator norm decay as the grid refines.  With the semiclassical parameter
tied to the grid (h = 1/N) the discretized transform is the unitary DFT, so
unitarity and the single-column norm are exact and serve as hard anchors.

Norms are estimated matrix-free by power iteration on the normal operator; on
small problems a dense singular-value computation of the masked submatrix
must agree to 1e-6 and runs automatically.  Power-law exponents are fitted by
least squares in log-log coordinates with the residual always reported.

The sphere section provides the oscillatory kernel with logarithmic phase,
equal-weight quadrature grids on S^1 and S^2, gnomonic chart atlases with
measured bi-Lipschitz constants, chart-level porosity checks, and the mixed
Hessian determinant probes for the phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .porosity import BoxSet, CantorSpec, PorosityReport, Verdict, cantor_generate
from .porosity import ball_porosity_check, line_porosity_check

__all__ = [
    "FourierCore",
    "KernelCore",
    "MaskedOperator",
    "DecayFit",
    "NormInfo",
    "semiclassical_dft",
    "resample_mask",
    "masked_operator_from_sets",
    "masked_norm",
    "dense_norm",
    "beta_fit",
    "general_phase_fio",
    "SphereGrid",
    "circle_grid",
    "sphere2_grid",
    "smooth_step",
    "chordal_cutoff",
    "log_phase_kernel",
    "log_phase_masked_operator",
    "SubmatrixKernelCore",
    "mixed_hessian_det",
    "log_phase_hessian_factors",
    "SphereAtlas",
    "sphere_porosity_check",
    "thicken_mask",
    "FupConfig",
    "fup_experiment",
]


# ---------------------------------------------------------------------------
# operator cores


@dataclass(frozen=True)
class FourierCore:
    """Unitary DFT on the grid {j/N}^n, the h = 1/N discretization."""

    N: int
    n: int

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def apply(self, u: np.ndarray) -> np.ndarray:
        shape = (self.N,) * self.n
        return (np.fft.fftn(u.reshape(shape)) * self.N ** (-self.n / 2)).reshape(-1)

    def adjoint(self, u: np.ndarray) -> np.ndarray:
        shape = (self.N,) * self.n
        return (np.fft.ifftn(u.reshape(shape)) * self.N ** (self.n / 2)).reshape(-1)

    def submatrix(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        a = np.stack(np.unravel_index(rows, (self.N,) * self.n), axis=1)
        b = np.stack(np.unravel_index(cols, (self.N,) * self.n), axis=1)
        phase = (a @ b.T) % self.N
        return np.exp(-2j * np.pi * phase / self.N) * self.N ** (-self.n / 2)


@dataclass(frozen=True)
class KernelCore:
    """Dense quadrature kernel; apply is a matrix product."""

    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u

    def adjoint(self, u: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ u

    def submatrix(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self.matrix[np.ix_(rows, cols)]


@dataclass(frozen=True)
class SubmatrixKernelCore:
    """Kernel stored only on its support: rows x cols block of a large grid.

    Lets masked sphere kernels on fine grids stay small: porous masks keep a
    few hundred nodes, so the stored block is tiny even when the ambient grid
    has thousands of points.
    """

    ambient: int
    rows: np.ndarray
    cols: np.ndarray
    block: np.ndarray

    @property
    def size(self) -> int:
        return self.ambient

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros(self.ambient, dtype=complex)
        out[self.rows] = self.block @ u[self.cols]
        return out

    def adjoint(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros(self.ambient, dtype=complex)
        out[self.cols] = self.block.conj().T @ u[self.rows]
        return out

    def submatrix(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rpos = {int(g): i for i, g in enumerate(self.rows)}
        cpos = {int(g): i for i, g in enumerate(self.cols)}
        rr = np.array([rpos.get(int(g), -1) for g in rows])
        cc = np.array([cpos.get(int(g), -1) for g in cols])
        out = np.zeros((rows.size, cols.size), dtype=complex)
        rok = rr >= 0
        cok = cc >= 0
        out[np.ix_(rok, cok)] = self.block[np.ix_(rr[rok], cc[cok])]
        return out


def semiclassical_dft(N: int, n: int) -> FourierCore:
    """The DFT core; N should be 2- or 3-smooth for fast transforms."""
    if N < 2:
        raise ValueError("need N >= 2")
    m = N
    for p in (2, 3, 5):
        while m % p == 0:
            m //= p
    if m != 1:
        raise ValueError(f"N={N} is not smooth (factors of 2, 3, 5 only)")
    return FourierCore(N, n)


@dataclass
class MaskedOperator:
    """mask_left . core . mask_right, exposed through apply/adjoint."""

    core: object
    left: np.ndarray     # boolean, flat length core.size
    right: np.ndarray

    def __post_init__(self):
        if self.left.shape != (self.core.size,) or self.right.shape != (self.core.size,):
            raise ValueError("mask length does not match the operator size")

    @property
    def size(self) -> int:
        return self.core.size

    def apply(self, u: np.ndarray) -> np.ndarray:
        v = np.where(self.right, u, 0.0)
        w = self.core.apply(v)
        w[~self.left] = 0.0
        return w

    def adjoint_apply(self, u: np.ndarray) -> np.ndarray:
        v = np.where(self.left, u, 0.0)
        w = self.core.adjoint(v)
        w[~self.right] = 0.0
        return w

    def dense_submatrix(self) -> np.ndarray:
        rows = np.flatnonzero(self.left)
        cols = np.flatnonzero(self.right)
        if rows.size == 0 or cols.size == 0:
            return np.zeros((max(rows.size, 1), max(cols.size, 1)), dtype=complex)
        return self.core.submatrix(rows, cols)


def resample_mask(x: BoxSet, N: int) -> np.ndarray:
    """Flat boolean mask of x rasterized at resolution 1/N per axis."""
    if N == x.m:
        return x.mask.reshape(-1).copy()
    if N % x.m == 0:
        k = N // x.m
        out = x.mask
        for axis in range(x.n):
            out = np.repeat(out, k, axis=axis)
        return out.reshape(-1).copy()
    if x.m % N == 0:
        k = x.m // N
        out = x.mask
        for axis in range(x.n):
            shape = out.shape[:axis] + (N, k) + out.shape[axis + 1:]
            out = out.reshape(shape).any(axis=axis + 1)
        return out.reshape(-1).copy()
    # general overlap rasterization along each axis
    out = x.mask
    for axis in range(x.n):
        first = np.floor(np.arange(N) * x.m / N).astype(int)
        last = np.ceil((np.arange(N) + 1) * x.m / N).astype(int) - 1
        moved = np.moveaxis(out, axis, 0)
        acc = np.zeros((N,) + moved.shape[1:], dtype=bool)
        for j in range(N):
            acc[j] = moved[first[j]:last[j] + 1].any(axis=0)
        out = np.moveaxis(acc, 0, axis)
    return out.reshape(-1).copy()


def masked_operator_from_sets(core, x_minus: BoxSet, x_plus: BoxSet) -> MaskedOperator:
    if isinstance(core, FourierCore):
        left = resample_mask(x_minus, core.N)
        right = resample_mask(x_plus, core.N)
    else:
        raise ValueError("set-based masking is defined for grid cores")
    return MaskedOperator(core, left, right)


# ---------------------------------------------------------------------------
# norms


@dataclass
class NormInfo:
    value: float
    iters: int
    converged: bool
    restarts: int
    dense_value: float | None = None

    @property
    def dense_gap(self) -> float | None:
        if self.dense_value is None:
            return None
        return abs(self.value - self.dense_value)


def dense_norm(op: MaskedOperator) -> float:
    """Largest singular value of the masked submatrix (exact operator norm)."""
    sub = op.dense_submatrix()
    if sub.size == 0 or not op.left.any() or not op.right.any():
        return 0.0
    return float(np.linalg.svd(sub, compute_uv=False)[0])


def masked_norm(op: MaskedOperator, tol: float = 1e-8, restarts: int = 3,
                seed: int = 0, maxiter: int | None = None,
                dense_limit: int = 4096) -> NormInfo:
    """Power iteration on the normal operator, with a dense cross-check.

    The iteration restarts from ``restarts`` random vectors and keeps the
    largest Rayleigh estimate; convergence means the estimate moved less than
    ``tol`` relatively between sweeps.  When the ambient size is at most
    ``dense_limit`` the dense singular value is computed as well and a
    disagreement beyond 1e-6 raises.
    """
    if not op.left.any() or not op.right.any():
        info = NormInfo(0.0, 0, True, 0)
        if op.size <= dense_limit:
            info.dense_value = 0.0
        return info
    if maxiter is None:
        maxiter = 10 * op.size
    rng = np.random.default_rng(seed)
    best = 0.0
    best_iters = 0
    converged = False
    support = np.flatnonzero(op.right)
    for _ in range(restarts):
        v = np.zeros(op.size, dtype=complex)
        v[support] = rng.standard_normal(support.size) + 1j * rng.standard_normal(support.size)
        v /= np.linalg.norm(v)
        sigma_prev = 0.0
        d_prev = None
        iters = 0
        for iters in range(1, maxiter + 1):
            w = op.adjoint_apply(op.apply(v))
            lam = float(np.linalg.norm(w))
            if lam == 0.0:
                sigma_prev = 0.0
                converged = True
                break
            v = w / lam
            sigma = math.sqrt(lam)
            d = sigma - sigma_prev
            # with a small spectral gap the per-sweep increments decay
            # geometrically; stop on the extrapolated remaining tail, not on
            # the raw increment, so stagnation cannot fake convergence
            if d <= 1e-14 * max(sigma, 1e-30):
                sigma_prev = sigma
                converged = True
                break
            if d_prev is not None and 0.0 < d < d_prev:
                q = d / d_prev
                tail = d * q / (1.0 - q)
                if tail <= max(tol * sigma, 5e-8):
                    sigma_prev = sigma
                    converged = True
                    break
            sigma_prev = sigma
            d_prev = d
        if sigma_prev > best:
            best = sigma_prev
            best_iters = iters
    info = NormInfo(best, best_iters, converged, restarts)
    if op.size <= dense_limit:
        info.dense_value = dense_norm(op)
        if abs(info.dense_value - best) > 1e-6 * max(1.0, info.dense_value):
            raise ArithmeticError(
                f"power iteration ({best:.12g}) disagrees with dense norm "
                f"({info.dense_value:.12g})")
    return info


@dataclass
class DecayFit:
    """Power-law fit norm ~ C h^beta over a ladder of (h, norm) samples."""

    samples: list[tuple[float, float]]
    beta: float
    intercept: float
    residual: float


def beta_fit(samples) -> DecayFit:
    """Least squares of log(norm) against log(h); beta is the slope."""
    samples = [(float(h), float(v)) for h, v in samples]
    if len(samples) < 4:
        raise ValueError("need at least 4 ladder samples for a fit")
    if any(v <= 0 for _, v in samples):
        raise ValueError("norms must be positive for a log-log fit")
    lh = np.log([h for h, _ in samples])
    lv = np.log([v for _, v in samples])
    a = np.vstack([lh, np.ones_like(lh)]).T
    (beta, intercept), *_ = np.linalg.lstsq(a, lv, rcond=None)
    residual = float(np.max(np.abs(a @ np.array([beta, intercept]) - lv)))
    return DecayFit(samples, float(beta), float(intercept), residual)


# ---------------------------------------------------------------------------
# general-phase and spherical kernels


def general_phase_fio(phi, b, N: int, n: int, h: float) -> KernelCore:
    """Quadrature kernel h^{-n/2} e^{i phi(x,y)/h} b(x,y) dy on the cube grid."""
    if N ** n > 8192:
        raise ValueError("dense quadrature kernel too large; shrink the grid")
    axes = [np.arange(N) / N for _ in range(n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    amp = np.asarray(b(pts[:, None, :], pts[None, :, :]), dtype=np.float64)
    if amp.shape != (N ** n, N ** n):
        raise ValueError("amplitude oracle must broadcast over point pairs")
    phase = np.asarray(phi(pts[:, None, :], pts[None, :, :]), dtype=np.float64)
    kernel = (h ** (-n / 2)) * np.exp(1j * phase / h) * amp * (N ** (-n))
    kernel[amp == 0.0] = 0.0
    return KernelCore(kernel)


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature nodes and weights on the unit sphere S^n in R^{n+1}."""

    points: np.ndarray
    weights: np.ndarray
    n: int

    @property
    def size(self) -> int:
        return self.points.shape[0]


def circle_grid(count: int) -> SphereGrid:
    ang = 2.0 * np.pi * np.arange(count) / count
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    w = np.full(count, 2.0 * np.pi / count)
    return SphereGrid(pts, w, 1)


def sphere2_grid(count: int) -> SphereGrid:
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    k = np.arange(count)
    z = 1.0 - (2.0 * k + 1.0) / count
    phi = 2.0 * np.pi * k / golden
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    w = np.full(count, 4.0 * np.pi / count)
    return SphereGrid(pts, w, 2)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        bb = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + bb)


def chordal_cutoff(gap: float, width: float):
    """Smooth cutoff chi(y, y') of chordal distance: 0 below gap, 1 above gap+width."""
    def chi(y, yp):
        d = np.linalg.norm(y - yp, axis=-1)
        return smooth_step((d - gap) / width)
    return chi


def log_phase_kernel(w: float, h: float, chi, grid: SphereGrid,
                     diag_margin: float = 1e-6) -> KernelCore:
    """Oscillatory kernel (2 pi h)^{-n/2} |(y-y')/2|^{2iw/h} chi(y,y') dy'.

    The cutoff must vanish at chordal distances below ``diag_margin``; the
    modulus of the kernel is chi times the quadrature factor, independent of
    w, since the phase exponent is purely imaginary.
    """
    y = grid.points
    d = np.linalg.norm(y[:, None, :] - y[None, :, :], axis=-1)
    chi_mat = np.asarray(chi(y[:, None, :], y[None, :, :]), dtype=np.float64)
    near = d < diag_margin
    if np.any(chi_mat[near] != 0.0):
        raise ValueError("cutoff does not vanish near the diagonal")
    amp = (2.0 * np.pi * h) ** (-grid.n / 2) * chi_mat * grid.weights[None, :]
    with np.errstate(divide="ignore"):
        logd = np.where(d > 0.0, np.log(np.maximum(d, 1e-300) / 2.0), 0.0)
    kernel = amp * np.exp(1j * (2.0 * w / h) * logd)
    kernel[chi_mat == 0.0] = 0.0
    return KernelCore(kernel)


# ---------------------------------------------------------------------------
# mixed Hessian probes


def log_phase_masked_operator(w: float, h: float, chi, grid: SphereGrid,
                              left: np.ndarray, right: np.ndarray,
                              diag_margin: float = 1e-6) -> MaskedOperator:
    """Masked log-phase kernel built only on the mask supports."""
    rows = np.flatnonzero(left)
    cols = np.flatnonzero(right)
    ya = grid.points[rows]
    yb = grid.points[cols]
    d = np.linalg.norm(ya[:, None, :] - yb[None, :, :], axis=-1)
    chi_mat = np.asarray(chi(ya[:, None, :], yb[None, :, :]), dtype=np.float64)
    if np.any(chi_mat[d < diag_margin] != 0.0):
        raise ValueError("cutoff does not vanish near the diagonal")
    amp = (2.0 * np.pi * h) ** (-grid.n / 2) * chi_mat * grid.weights[cols][None, :]
    with np.errstate(divide="ignore"):
        logd = np.where(d > 0.0, np.log(np.maximum(d, 1e-300) / 2.0), 0.0)
    block = amp * np.exp(1j * (2.0 * w / h) * logd)
    block[chi_mat == 0.0] = 0.0
    core = SubmatrixKernelCore(grid.size, rows, cols, block)
    return MaskedOperator(core, left, right)


def mixed_hessian_det(phi, y: np.ndarray, yprime: np.ndarray, fd_step: float = 1e-5) -> float:
    """Determinant of the finite-difference mixed Hessian in ambient coordinates."""
    y = np.asarray(y, dtype=np.float64)
    yprime = np.asarray(yprime, dtype=np.float64)
    if np.array_equal(y, yprime):
        raise ValueError("mixed Hessian probe needs distinct points")
    m = y.shape[0]
    hess = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            ei = np.zeros(m)
            ej = np.zeros(m)
            ei[i] = fd_step
            ej[j] = fd_step
            hess[i, j] = (phi(y + ei, yprime + ej) - phi(y + ei, yprime - ej)
                          - phi(y - ei, yprime + ej) + phi(y - ei, yprime - ej)) \
                / (4.0 * fd_step * fd_step)
    return float(np.linalg.det(hess))


def log_phase_hessian_factors(w: float, y: np.ndarray, yprime: np.ndarray):
    """Scalar prefactor and structured matrix of the log-phase mixed Hessian.

    The mixed Hessian of 2 w log|y-y'| equals (4 w |v|^{-4}) times
    v v^T - (|v|^2/2) I with v = y - y'; the determinant is the product of
    the prefactor to the ambient power and the small determinant.
    """
    v = np.asarray(y, dtype=np.float64) - np.asarray(yprime, dtype=np.float64)
    r2 = float(v @ v)
    if r2 == 0.0:
        raise ValueError("coincident points")
    m = v.shape[0]
    pref = 4.0 * w / (r2 * r2)
    struct = np.outer(v, v) - 0.5 * r2 * np.eye(m)
    det = (pref ** m) * float(np.linalg.det(struct))
    return pref, struct, det


# ---------------------------------------------------------------------------
# gnomonic atlas and chart porosity


@dataclass
class SphereAtlas:
    """Charts of geodesic radius ``radius`` covering the sphere, with gnomonic
    projection onto the tangent hyperplane at each center."""

    centers: np.ndarray
    frames: np.ndarray      # (K, n, n+1): orthonormal tangent bases
    radius: float = 0.5

    @property
    def chart_count(self) -> int:
        return self.centers.shape[0]

    @property
    def n(self) -> int:
        return self.centers.shape[1] - 1

    @classmethod
    def for_circle(cls, count: int = 8, radius: float = 0.5) -> "SphereAtlas":
        grid = circle_grid(count)
        frames = np.stack([np.stack([-grid.points[k, 1:2],
                                     grid.points[k, 0:1]], axis=1).reshape(1, 2)
                           for k in range(count)])
        return cls(grid.points, frames, radius)

    @classmethod
    def for_sphere2(cls, count: int = 48, radius: float = 0.5) -> "SphereAtlas":
        grid = sphere2_grid(count)
        frames = []
        for c in grid.points:
            a = np.zeros(3)
            a[int(np.argmin(np.abs(c)))] = 1.0
            u = a - (a @ c) * c
            u /= np.linalg.norm(u)
            v = np.cross(c, u)
            frames.append(np.stack([u, v]))
        return cls(grid.points, np.stack(frames), radius)

    def covers(self, points: np.ndarray) -> bool:
        cos_r = math.cos(self.radius)
        return bool(np.all(np.max(points @ self.centers.T, axis=1) >= cos_r))

    def contains(self, k: int, y: np.ndarray) -> bool:
        return float(y @ self.centers[k]) >= math.cos(self.radius)

    def project(self, k: int, y: np.ndarray) -> np.ndarray:
        """Gnomonic chart coordinates of y in chart k (rays through the origin
        meet the tangent hyperplane at the center)."""
        y = np.asarray(y, dtype=np.float64)
        c = float(y @ self.centers[k]) if y.ndim == 1 else y @ self.centers[k]
        if np.any(np.asarray(c) < math.cos(self.radius) - 1e-12):
            raise ValueError("point outside the chart")
        if y.ndim == 1:
            return self.frames[k] @ (y / c)
        return (y / np.asarray(c)[..., None]) @ self.frames[k].T

    def unproject(self, k: int, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if s.ndim == 1:
            u = self.centers[k] + self.frames[k].T @ s
            return u / np.linalg.norm(u)
        u = self.centers[k][None, :] + s @ self.frames[k]
        return u / np.linalg.norm(u, axis=-1, keepdims=True)

    def measured_bilipschitz(self, k: int, rng: np.random.Generator,
                             pairs: int = 1000) -> float:
        """Worst observed ratio of intrinsic distances chart-plane vs sphere."""
        s_max = math.tan(self.radius)
        worst = 1.0
        a = rng.uniform(-s_max, s_max, size=(pairs, self.n))
        b = rng.uniform(-s_max, s_max, size=(pairs, self.n))
        keep = (np.linalg.norm(a, axis=1) <= s_max) & (np.linalg.norm(b, axis=1) <= s_max)
        a, b = a[keep], b[keep]
        ya = self.unproject(k, a)
        yb = self.unproject(k, b)
        plane = np.linalg.norm(a - b, axis=1)
        cosang = np.clip(np.sum(ya * yb, axis=1), -1.0, 1.0)
        sphere = np.arccos(cosang)
        ok = plane > 1e-9
        ratios = plane[ok] / np.maximum(sphere[ok], 1e-300)
        return float(ratios.max())


def _chart_raster(atlas: SphereAtlas, k: int, oracle, m: int, sub: int = 2) -> BoxSet:
    """Rasterize the chart image of a sphere set into [0,1]^n."""
    n = atlas.n
    s_max = math.tan(atlas.radius)
    axes = [np.arange(m) / m for _ in range(n)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    offs = np.stack(np.meshgrid(*([np.linspace(0.0, 1.0 / m, sub + 1)] * n),
                                indexing="ij"), axis=-1).reshape(-1, n)
    mask = np.zeros(m ** n, dtype=bool)
    for off in offs:
        s = (centers + off[None, :]) * (2.0 * s_max) - s_max
        inside = np.linalg.norm(s, axis=1) <= s_max
        if not inside.any():
            continue
        y = atlas.unproject(k, s[inside])
        hit = oracle(y)
        idx = np.flatnonzero(inside)[np.asarray(hit, dtype=bool)]
        mask[idx] = True
    return BoxSet(n, m, mask.reshape((m,) * n))


def sphere_porosity_check(oracle, nu: float, alpha0: float, alpha1: float,
                          atlas: SphereAtlas, m: int = 128, kind: str = "ball",
                          directions: int = 8) -> tuple[Verdict, list[PorosityReport]]:
    """Run the Euclidean porosity decider on every gnomonic chart image.

    Scales are intrinsic; they convert to normalized chart units through the
    chart half-width.  The aggregate verdict is the worst chart verdict.
    """
    s_max = math.tan(atlas.radius)
    lam = 1.0 / (2.0 * s_max)
    reports = []
    worst = Verdict.CERTIFIED
    for k in range(atlas.chart_count):
        x = _chart_raster(atlas, k, oracle, m)
        a0 = alpha0 * lam
        a1 = alpha1 * lam
        if kind == "ball":
            rep = ball_porosity_check(x, nu, a0, a1)
        else:
            rep = line_porosity_check(x, nu, a0, a1, directions)
        reports.append(rep)
        if rep.verdict is Verdict.COUNTEREXAMPLE:
            worst = Verdict.COUNTEREXAMPLE
        elif rep.verdict is Verdict.INCONCLUSIVE and worst is Verdict.CERTIFIED:
            worst = Verdict.INCONCLUSIVE
    return worst, reports


# ---------------------------------------------------------------------------
# experiment driver


def thicken_mask(mask: np.ndarray, radius_cells: int, n: int) -> np.ndarray:
    """Dilate a flat grid mask by the discrete ball of center distance radius."""
    if radius_cells <= 0:
        return mask.copy()
    side = round(mask.size ** (1.0 / n))
    shaped = mask.reshape((side,) * n)
    rng = np.arange(-radius_cells, radius_cells + 1)
    grids = np.meshgrid(*([rng] * n), indexing="ij")
    se = sum(g.astype(np.int64) ** 2 for g in grids) <= radius_cells ** 2
    return ndimage.binary_dilation(shaped, structure=se).reshape(-1)


@dataclass
class FupConfig:
    """Configuration of one decay experiment."""

    core: str = "fourier"                  # fourier | general_phase | log_phase
    n: int = 1
    ladder: tuple[int, ...] = (27, 81, 243, 729)
    cantor_base: int = 3
    cantor_kept: tuple[int, ...] = (0, 2)
    set_minus: BoxSet | None = None        # overrides the Cantor family
    set_plus: BoxSet | None = None
    rho: float | None = None               # mask thickening exponent
    phase_quadratic: float = 0.0           # general phase: -2 pi <x,y> + c <y,y>
    w_list: tuple[float, ...] = (1.0,)
    chi_gap: float = 0.4
    chi_width: float = 0.3
    arc_minus: tuple[float, float] = (0.5, 0.75)
    arc_plus: tuple[float, float] = (0.0, 0.25)
    lower_bound_mode: bool = False
    power_tol: float = 1e-8
    restarts: int = 3
    seed: int = 0
    dense_limit: int = 4096

    def validate(self) -> None:
        if self.core not in ("fourier", "general_phase", "log_phase"):
            raise ValueError(f"unknown core {self.core!r}")
        if self.n < 1 or len(self.ladder) == 0:
            raise ValueError("bad dimensions or empty ladder")
        if self.core == "log_phase" and self.n != 1:
            raise ValueError("the log-phase ladder runs on circle grids (n = 1)")
        if self.rho is not None and not 0.0 < self.rho <= 1.0:
            raise ValueError("thickening exponent must lie in (0, 1]")


def _family_mask(cfg: FupConfig, which: str, N: int) -> np.ndarray:
    explicit = cfg.set_minus if which == "minus" else cfg.set_plus
    if explicit is not None:
        return resample_mask(explicit, N)
    depth = max(1, round(math.log(N, cfg.cantor_base)))
    if cfg.cantor_base ** depth != N:
        raise ValueError(f"ladder value {N} is not a power of base {cfg.cantor_base}")
    spec = CantorSpec.uniform(cfg.cantor_base, cfg.cantor_kept, depth, cfg.n)
    return cantor_generate(spec, cfg.n).mask.reshape(-1)


def _arc_cantor_mask(cfg: FupConfig, arc: tuple[float, float], grid: SphereGrid) -> np.ndarray:
    """Cantor set of angles inside an arc, sampled on the circle grid.

    The construction depth tracks the number of grid nodes the arc holds, so
    the mask refines with the ladder the way the cube-grid families do;
    grids with J = 4 * base^k nodes align the quarter-arc cells exactly.
    """
    J = grid.size
    lo, hi = arc
    depth = min(8, max(1, round(math.log(max(J * (hi - lo), cfg.cantor_base), cfg.cantor_base))))
    base = cantor_generate(CantorSpec.uniform(cfg.cantor_base, cfg.cantor_kept, depth, 1), 1)
    ang = np.arange(J) / J          # angle fraction of each node
    inside = (ang >= lo) & (ang < hi)
    frac = (ang - lo) / (hi - lo)
    idx = np.clip((frac * base.m).astype(int), 0, base.m - 1)
    return inside & base.mask[idx]


def _sanity(norm: float) -> bool:
    return norm <= 1.0 + 1e-10


def fup_experiment(cfg: FupConfig):
    """Run the configured ladder; returns (rows, fits, ok).

    Each row is a dict with keys core, n, N, h, rho, w, norm, iters,
    converged.  ``fits`` maps the energy w (None for grid cores) to the
    DecayFit across the ladder.  ``ok`` reports the sanity invariants:
    unitarity cap everywhere and, in lower-bound mode, the exact
    single-column value.
    """
    cfg.validate()
    rows: list[dict] = []
    fits: dict = {}
    ok = True
    if cfg.core in ("fourier", "general_phase"):
        samples = []
        for N in cfg.ladder:
            h = 1.0 / N
            left = _family_mask(cfg, "minus", N)
            right = _family_mask(cfg, "plus", N)
            if cfg.rho is not None:
                rad = int(round(N ** (1.0 - cfg.rho)))
                left = thicken_mask(left, rad, cfg.n)
                right = thicken_mask(right, rad, cfg.n)
            if cfg.core == "fourier":
                core = semiclassical_dft(N, cfg.n)
            else:
                c = cfg.phase_quadratic
                phi = lambda x, y: -2.0 * np.pi * np.sum(x * y, axis=-1) \
                    + c * np.sum(y * y, axis=-1)
                amp = lambda x, y: np.ones(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))
                core = general_phase_fio(phi, amp, N, cfg.n, h)
            op = MaskedOperator(core, left, right)
            info = masked_norm(op, cfg.power_tol, cfg.restarts, cfg.seed,
                               dense_limit=cfg.dense_limit)
            ok = ok and _sanity(info.value) and info.converged
            if cfg.lower_bound_mode and cfg.core == "fourier":
                single = np.zeros(core.size, dtype=bool)
                single[np.flatnonzero(right)[0]] = True
                lb = masked_norm(MaskedOperator(core, left, single), cfg.power_tol,
                                 1, cfg.seed, dense_limit=0)
                expected = math.sqrt(left.sum() / core.size)
                ok = ok and abs(lb.value - expected) <= 1e-12
            rows.append(dict(core=cfg.core, n=cfg.n, N=N, h=h, rho=cfg.rho, w=None,
                             norm=info.value, iters=info.iters, converged=info.converged))
            samples.append((h, info.value))
        if len(samples) >= 4 and all(v > 0 for _, v in samples):
            fits[None] = beta_fit(samples)
    else:
        for w in cfg.w_list:
            samples = []
            for J in cfg.ladder:
                h = 1.0 / J
                grid = circle_grid(J)
                chi = chordal_cutoff(cfg.chi_gap, cfg.chi_width)
                left = _arc_cantor_mask(cfg, cfg.arc_minus, grid)
                right = _arc_cantor_mask(cfg, cfg.arc_plus, grid)
                if cfg.rho is not None:
                    rad = int(round(J * h ** cfg.rho / (2.0 * np.pi)))
                    left = thicken_mask(left, rad, 1)
                    right = thicken_mask(right, rad, 1)
                op = log_phase_masked_operator(w, h, chi, grid, left, right)
                info = masked_norm(op, cfg.power_tol, cfg.restarts, cfg.seed,
                                   dense_limit=cfg.dense_limit)
                ok = ok and info.converged
                rows.append(dict(core=cfg.core, n=cfg.n, N=J, h=h, rho=cfg.rho, w=w,
                                 norm=info.value, iters=info.iters,
                                 converged=info.converged))
                samples.append((h, info.value))
            if len(samples) >= 4 and all(v > 0 for _, v in samples):
                fits[w] = beta_fit(samples)
    return rows, fits, ok
