"""Discrete twisted Zak transform and the analyses built on it.

    G(z, w) = sum_k f(z - k) e^{2 pi i Im(w kbar)},   w = r + i s,

so the character is ``e^{2 pi i (s k1 - r k2)}``.  ``f`` lives on a grid
truncated to ``[-K, K)^2`` and only ``(2K)^2`` lattice points contribute,
hence ``N_w >= 2K`` w-samples per axis make the transform exactly invertible
and, with matched quadrature weights, exactly unitary.

On the sample grid the characters are evaluated with integer modular
arithmetic, so quasi-periodicity and covariance hold to rounding.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .field import GridError, GridSpec, SampledField, diff1, inner_product, norm
from .twistop import _bilinear, n_epsilon, twisted_translate, z_apply, zbar_apply, lemma41_fields

ZAK_MAGIC = b"TZAKFLD1"
DEFAULT_GUARD = 1e-3
MAX_DOUBLINGS = 12


class ZakError(ValueError):
    """Invalid Zak-transform request."""


class NotAFrameError(ZakError):
    """The window's Zak transform has (near-)zeros."""


class WindingError(ZakError):
    """Phase tracking failed."""


@dataclass(frozen=True, eq=False)
class ZakField:
    """Samples ``G[jx, jy, lr, ls]`` at ``z = (jx + i jy)/N_z``, ``w = (lr + i ls)/N_w``."""

    N_z: int
    N_w: int
    K: int
    values: np.ndarray = field(repr=False)
    N: int | None = None  # resolution of the source field, if known

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != (self.N_z, self.N_z, self.N_w, self.N_w):
            raise ZakError(f"values shape {v.shape} does not match ({self.N_z}, {self.N_z}, {self.N_w}, {self.N_w})")
        if not np.all(np.isfinite(v)):
            raise ValueError("Zak values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def z_coords(self) -> np.ndarray:
        return np.arange(self.N_z) / self.N_z

    @property
    def w_coords(self) -> np.ndarray:
        return np.arange(self.N_w) / self.N_w

    def norm(self) -> float:
        """Quadrature norm on ``Q x Q``."""
        return float(np.linalg.norm(self.values.ravel()) / (self.N_z * self.N_w))

    def with_values(self, values) -> "ZakField":
        return ZakField(self.N_z, self.N_w, self.K, values, self.N)


# ---------------------------------------------------------------------------
# forward / inverse


def _lattice_block(f: SampledField, step: int, count: int, start: int = 0) -> np.ndarray:
    """``A[c, d, jx, jy] = f(x_j - k1, y_j - k2)`` with ``k = K - (c, d)``.

    The sample points are ``(start + j*step)/N`` for ``j < count``; indices that
    fall off the grid read as zero.
    """
    s = f.spec
    K, N, M = s.K, s.N, s.M
    v = f.values
    idx = start + step * np.arange(count)
    A = np.zeros((2 * K, 2 * K, count, count), dtype=np.complex128)
    for c in range(2 * K):
        ix = idx + c * N
        okx = (ix >= 0) & (ix < M)
        for d in range(2 * K):
            iy = idx + d * N
            oky = (iy >= 0) & (iy < M)
            blk = np.zeros((count, count), dtype=np.complex128)
            blk[np.ix_(okx, oky)] = v[np.ix_(ix[okx], iy[oky])]
            A[c, d] = blk
    return A


def _characters(K: int, N_w: int):
    """Exact characters on the w-grid: ``E1[c, ls] = e^{2 pi i s k1}``, ``E2[d, lr] = e^{-2 pi i r k2}``."""
    k = K - np.arange(2 * K)
    l = np.arange(N_w)
    E1 = np.exp(2j * np.pi * (np.outer(k, l) % N_w) / N_w)
    E2 = np.exp(-2j * np.pi * (np.outer(k, l) % N_w) / N_w)
    return E1, E2


def zak_forward(f: SampledField, N_w: int | None = None, N_z: int | None = None) -> ZakField:
    """Twisted Zak transform sampled on ``Q x Q``."""
    s = f.spec
    N_w = max(2 * s.K, 8) if N_w is None else int(N_w)
    N_z = s.N if N_z is None else int(N_z)
    if N_w < 2 * s.K:
        raise ZakError(f"N_w={N_w} < 2K={2 * s.K}: the lattice sum would alias")
    if N_z < 1 or s.N % N_z:
        raise ZakError(f"N_z={N_z} must divide the field resolution N={s.N}")
    # offset of z = 0 relative to the grid origin -K is K*N samples; the
    # block reads f at index j*step + (K - k1)*N, which _lattice_block encodes
    # through c = K - k1
    A = _lattice_block(f, s.N // N_z, N_z)
    E1, E2 = _characters(s.K, N_w)
    G = np.einsum("cdxy,dr,cs->xyrs", A, E2, E1, optimize=True)
    return ZakField(N_z, N_w, s.K, G, s.N)


def zak_inverse(G: ZakField, K: int, N: int) -> SampledField:
    """Recover ``f`` from ``G`` by orthogonality of the w-characters."""
    if G.N_z != N:
        raise ZakError(f"resolution mismatch: N_z={G.N_z}, N={N}")
    if K != G.K:
        raise ZakError(f"truncation mismatch: K={K}, field built with K={G.K}")
    if G.N_w < 2 * K:
        raise ZakError(f"N_w={G.N_w} < 2K={2 * K}")
    E1, E2 = _characters(K, G.N_w)
    A = np.einsum("xyrs,dr,cs->cdxy", G.values, E2.conj(), E1.conj(), optimize=True) / G.N_w**2
    spec = GridSpec(N, K)
    # A[c, d, jx, jy] = f at index (c*N + jx, d*N + jy)
    vals = A.transpose(0, 2, 1, 3).reshape(spec.M, spec.M)
    return SampledField(spec, vals)


def zak_block(f: SampledField, x_idx, y_idx, wr, ws) -> np.ndarray:
    """``G`` at grid coordinates of ``f`` (integer sample indices relative to 0)
    and arbitrary real ``r``, ``s``; returns shape ``(len(x), len(y), len(r), len(s))``."""
    s = f.spec
    K, N, M = s.K, s.N, s.M
    x_idx = np.asarray(x_idx)
    y_idx = np.asarray(y_idx)
    # every lattice offset that lands some sample on the grid; for z outside
    # Q this reaches beyond the 2K cells used by zak_forward
    lo = min(x_idx.min(), y_idx.min())
    hi = max(x_idx.max(), y_idx.max())
    cs = np.arange(-((hi + N - 1) // N), (M - lo) // N + 1)
    k = K - cs
    E1 = np.exp(2j * np.pi * np.outer(k, np.asarray(ws, dtype=float)))
    E2 = np.exp(-2j * np.pi * np.outer(k, np.asarray(wr, dtype=float)))
    A = np.zeros((cs.size, cs.size, x_idx.size, y_idx.size), dtype=np.complex128)
    for a, c in enumerate(cs):
        ix = x_idx + c * N
        okx = (ix >= 0) & (ix < M)
        for b, d in enumerate(cs):
            iy = y_idx + d * N
            oky = (iy >= 0) & (iy < M)
            A[a, b][np.ix_(okx, oky)] = f.values[np.ix_(ix[okx], iy[oky])]
    return np.einsum("cdxy,dr,cs->xyrs", A, E2, E1, optimize=True)


class ZakEvaluator:
    """Continuous evaluation of ``G(z, w)`` by direct lattice summation.

    ``f(z - k)`` comes either from an analytic callable or from bilinear
    interpolation of a sampled field (exact at grid points).
    """

    def __init__(self, f: SampledField | None = None, func=None, K: int | None = None):
        if (f is None) == (func is None):
            raise ValueError("give exactly one of a sampled field or a callable")
        self.f = f
        self.func = func
        if f is not None:
            self.K = f.spec.K
            self.krange = np.arange(-self.K, self.K + 1)
        else:
            self.K = 8 if K is None else K
            self.krange = np.arange(-self.K - 1, self.K + 2)

    def _fz(self, z):
        if self.func is not None:
            return self.func(z.real, z.imag)
        return _bilinear(self.f.values, self.f.spec, z.real, z.imag)

    def __call__(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        z, w = np.broadcast_arrays(z, w)
        out = np.zeros(z.shape, dtype=np.complex128)
        for k1 in self.krange:
            for k2 in self.krange:
                out += self._fz(z - (k1 + 1j * k2)) * np.exp(2j * np.pi * (w.imag * k1 - w.real * k2))
        return out


# ---------------------------------------------------------------------------
# checks


def zak_covariance_residual(f: SampledField, m: int, n: int, N_w: int | None = None) -> float:
    """Max residual of ``Z^t(T^t_{(m,n)} f) = e^{2 pi i (x n - y m)} e^{2 pi i (r n - s m)} Z^t f``."""
    G = zak_forward(f, N_w)
    Gt = zak_forward(twisted_translate(f, m, n), N_w)
    z = G.z_coords
    l = np.arange(G.N_w)
    pz = np.exp(2j * np.pi * (z[:, None] * n - z[None, :] * m))
    pw = np.exp(2j * np.pi * (((l[:, None] * n - l[None, :] * m) % G.N_w) / G.N_w))
    pred = G.values * pz[:, :, None, None] * pw[None, None, :, :]
    return float(np.max(np.abs(Gt.values - pred)))


def quasiperiodicity_check(G: ZakField, f: SampledField) -> dict:
    """Residuals of the four quasi-periodicity relations, evaluated by direct sums."""
    step = f.spec.N // G.N_z
    base = step * np.arange(G.N_z)
    N = f.spec.N
    l = np.arange(G.N_w)
    r = l / G.N_w
    g0 = zak_block(f, base, base, r, r)
    gx = zak_block(f, base + N, base, r, r)
    gy = zak_block(f, base, base + N, r, r)
    gw1 = zak_block(f, base, base, r + 1.0, r)
    gwi = zak_block(f, base, base, r, r + 1.0)
    es = np.exp(2j * np.pi * l / G.N_w)
    res = {
        "z_plus_1": float(np.max(np.abs(gx - es[None, None, None, :] * g0))),
        "z_plus_i": float(np.max(np.abs(gy - es.conj()[None, None, :, None] * g0))),
        "w_plus_1": float(np.max(np.abs(gw1 - g0))),
        "w_plus_i": float(np.max(np.abs(gwi - g0))),
        "grid_consistency": float(np.max(np.abs(g0 - G.values))),
    }
    res["max_residual"] = max(res.values())
    return res


# ---------------------------------------------------------------------------
# frame bounds


@dataclass
class FrameBounds:
    A_est: float
    B_est: float
    argmin: tuple  # (x, y, r, s)
    history: list = field(default_factory=list)  # (N_z, N_w, A_est, B_est)

    def __post_init__(self):
        if not 0 <= self.A_est <= self.B_est:
            raise ValueError("frame bounds must satisfy 0 <= A <= B")


def frame_bounds(G: ZakField, history: list | None = None) -> FrameBounds:
    a = np.abs(G.values) ** 2
    i = np.unravel_index(int(np.argmin(a)), a.shape)
    loc = (i[0] / G.N_z, i[1] / G.N_z, i[2] / G.N_w, i[3] / G.N_w)
    A, B = float(a.min()), float(a.max())
    hist = list(history or []) + [(G.N_z, G.N_w, A, B)]
    return FrameBounds(A, B, loc, hist)


def odd_wres(N_z: int) -> int:
    """Default w-resolution for refinement studies.

    An odd count keeps the w-grid off ``s = 1/2`` and ``r = 1/2`` where the
    Gaussian's Zak transform vanishes identically in ``z``-lines, so the
    grid minimum tracks the distance to the zero set instead of sitting on it.
    """
    return 2 * N_z + 1


def frame_bounds_refinement(f: SampledField, levels=(8, 16, 32), wres=odd_wres) -> FrameBounds:
    fb = None
    for nz in levels:
        nw = max(wres(nz), 2 * f.spec.K)
        fb = frame_bounds(zak_forward(f, nw, nz), fb.history if fb else None)
    return fb


# ---------------------------------------------------------------------------
# dual windows


def dual_zak(G: ZakField, guard: float = DEFAULT_GUARD, delta: float | None = None) -> ZakField:
    """Zak transform of the dual window, ``1/conj(G)``.

    With ``delta`` set, the Tikhonov form ``G/(|G|^2 + delta^2)`` is used
    instead; it tends to ``1/conj(G)`` as ``delta -> 0`` and never divides by zero.
    """
    v = G.values
    if delta is not None:
        return G.with_values(v / (np.abs(v) ** 2 + delta * delta))
    m = float(np.min(np.abs(v)))
    if m < guard:
        raise NotAFrameError(
            f"window has (near-)zero Zak transform (min |G| = {m:.3g} < guard {guard:g}); not an exact frame")
    return G.with_values(1.0 / np.conj(v))


def dual_window(G: ZakField, guard: float = DEFAULT_GUARD, delta: float | None = None) -> SampledField:
    if G.N is None:
        raise ZakError("Zak field has no source resolution")
    return zak_inverse(dual_zak(G, guard, delta), G.K, G.N)


def biorthogonality_check(g: SampledField, g_dual: SampledField, rng: int = 2) -> dict:
    """``<g_dual, T^t_{(m,n)} g>`` for ``|m|, |n| <= rng`` against ``delta_{m,0} delta_{n,0}``."""
    table = {}
    worst = 0.0
    for m in range(-rng, rng + 1):
        for n in range(-rng, rng + 1):
            v = inner_product(g_dual, twisted_translate(g, m, n))
            table[(m, n)] = v
            worst = max(worst, abs(v - (1.0 if m == 0 and n == 0 else 0.0)))
    return {"table": table, "max_residual": worst, "range": rng}


def frame_sum(f: SampledField, g: SampledField, R: int = 3) -> float:
    """``sum_{|m|,|n| <= R} |<f, T^t_{(m,n)} g>|^2``."""
    return float(sum(abs(inner_product(f, twisted_translate(g, m, n))) ** 2
                     for m in range(-R, R + 1) for n in range(-R, R + 1)))


# ---------------------------------------------------------------------------
# winding


@dataclass
class WindingReport:
    loop: list
    increments: list
    total: float
    max_step: float
    steps: list
    valid: bool = True

    @property
    def winding_number(self) -> float:
        return self.total / (2 * np.pi)


def _segment_phase(evaluator, p, q, steps, min_abs):
    t = np.linspace(0.0, 1.0, steps + 1)
    z = p[0] + t * (q[0] - p[0])
    w = p[1] + t * (q[1] - p[1])
    v = evaluator(z, w)
    if np.min(np.abs(v)) < min_abs:
        raise WindingError("loop passes too near a zero")
    d = np.angle(v[1:] / v[:-1])
    return float(d.sum()), float(np.max(np.abs(d)))


def winding(evaluator, loop, steps: int = 64, max_step: float = np.pi / 4,
            min_abs: float = 1e-8, max_doublings: int = MAX_DOUBLINGS) -> WindingReport:
    """Unwrapped phase change of ``G`` along a polyline of ``(z, w)`` vertices.

    Each segment is refined by doubling until every phase step is below
    ``max_step`` (which must be below pi for nearest-branch unwrapping).
    """
    if not 0 < max_step < np.pi:
        raise ValueError("max_step must lie in (0, pi)")
    if isinstance(evaluator, ZakField):
        raise ZakError("winding needs a continuous evaluator; wrap the source field in ZakEvaluator")
    loop = [(complex(a), complex(b)) for a, b in loop]
    incs, used, worst = [], [], 0.0
    for p, q in zip(loop[:-1], loop[1:]):
        n = steps
        for _ in range(max_doublings + 1):
            inc, big = _segment_phase(evaluator, p, q, n, min_abs)
            if big < max_step:
                break
            n *= 2
        else:
            raise WindingError("phase step too large after max refinement")
        incs.append(inc)
        used.append(n)
        worst = max(worst, big)
    return WindingReport(loop, incs, float(sum(incs)), worst, used, worst < np.pi)


def obstruction_loop():
    """The four-segment loop ``(0,1) -> (0,i) -> (i,i) -> (i,1) -> (0,1)`` in ``(z, w)``."""
    return [(0, 1), (0, 1j), (1j, 1j), (1j, 1), (0, 1)]


def circle_loop(center, radius: float, plane=("x", "s"), points: int = 16):
    """Closed polygon approximating a circle in one coordinate plane of
    ``(x, y, r, s)`` around ``center``; returns ``(z, w)`` vertices."""
    names = ("x", "y", "r", "s")
    i, j = names.index(plane[0]), names.index(plane[1])
    out = []
    for t in np.linspace(0, 2 * np.pi, points + 1):
        c = list(center)
        c[i] += radius * math.cos(t)
        c[j] += radius * math.sin(t)
        out.append((complex(c[0], c[1]), complex(c[2], c[3])))
    out[-1] = out[0]
    return out


def zero_circle_plane(argmin) -> tuple:
    """Pick the plane transversal to the nearer zero line of a separable Zak transform.

    The Gaussian's zeros lie on ``{x = 1/2, s = 1/2}`` and ``{y = 1/2, r = 1/2}``,
    both of real codimension two; a circle in a transversal plane links one of them.
    """
    x, y, r, s = argmin
    if abs(x - 0.5) + abs(s - 0.5) <= abs(y - 0.5) + abs(r - 0.5):
        return ("x", "s")
    return ("y", "r")


# ---------------------------------------------------------------------------
# G_r smoothing


def zak_extended(G: ZakField, ix, iy, il, im) -> np.ndarray:
    """``G`` at integer sample indices anywhere in ``C^2`` via quasi-periodicity."""
    qx, px = np.divmod(ix, G.N_z)
    qy, py = np.divmod(iy, G.N_z)
    pl = np.mod(il, G.N_w)
    pm = np.mod(im, G.N_w)
    phase = np.exp(2j * np.pi * (((pm * qx - pl * qy) % G.N_w) / G.N_w))
    return G.values[px, py, pl, pm] * phase


def _steps(r: float, n: int, what: str) -> int:
    s = r * n
    k = int(round(s))
    if k < 1 or abs(s - k) > 1e-9:
        raise ZakError(f"r={r} is not a positive multiple of the {what} step 1/{n}")
    return k


def smooth_gr_values(G: ZakField, r: float, z_shift: complex = 0, w_shift: complex = 0) -> np.ndarray:
    """``G_r(z + z_shift, w + w_shift)`` on the sample grid of ``G``.

    ``G_r = r^{-4} \\int_{[0,r)^4} G(z - z', w - w') e^{-2 pi i Im(z zbar' + w wbar')} dz' dw'``
    by the rectangle rule; shifts must be Gaussian integers.
    """
    if not 0 < r <= 1:
        raise ZakError("r must lie in (0, 1]")
    a_n = _steps(r, G.N_z, "z")
    c_n = _steps(r, G.N_w, "w")
    zs, ws = complex(z_shift), complex(w_shift)
    for v in (zs.real, zs.imag, ws.real, ws.imag):
        if v != int(v):
            raise ZakError("shifts must be Gaussian integers")
    ox, oy = int(zs.real) * G.N_z, int(zs.imag) * G.N_z
    ol, om = int(ws.real) * G.N_w, int(ws.imag) * G.N_w
    jx = np.arange(G.N_z)[:, None, None, None] + ox
    jy = np.arange(G.N_z)[None, :, None, None] + oy
    lr = np.arange(G.N_w)[None, None, :, None] + ol
    ls = np.arange(G.N_w)[None, None, None, :] + om
    x, y = jx / G.N_z, jy / G.N_z
    wr, wsv = lr / G.N_w, ls / G.N_w
    acc = np.zeros((G.N_z, G.N_z, G.N_w, G.N_w), dtype=np.complex128)
    for a in range(a_n):
        for b in range(a_n):
            # Im(z zbar') with z' = (a + i b)/N_z
            pz = np.exp(-2j * np.pi * (y * a - x * b) / G.N_z)
            for c in range(c_n):
                for d in range(c_n):
                    pw = np.exp(-2j * np.pi * (wsv * c - wr * d) / G.N_w)
                    acc += zak_extended(G, jx - a, jy - b, lr - c, ls - d) * pz * pw
    return acc / (a_n * a_n * c_n * c_n)


def smooth_gr(G: ZakField, r: float) -> ZakField:
    return G.with_values(smooth_gr_values(G, r))


def window_inside_mask(G: ZakField, r: float) -> np.ndarray:
    """Samples whose averaging window ``p - [0, r)^4`` stays inside ``Q x Q``."""
    a_n = _steps(r, G.N_z, "z")
    c_n = _steps(r, G.N_w, "w")
    jz = np.arange(G.N_z) >= a_n - 1
    jw = np.arange(G.N_w) >= c_n - 1
    return jz[:, None, None, None] & jz[None, :, None, None] & jw[None, None, :, None] & jw[None, None, None, :]


def lipschitz_audit(G: ZakField, r: float, pairs: int = 200, seed: int = 42) -> dict:
    """Check ``|G_r(p1) - G_r(p2)| <= 2(pi(r + max(|z1|,|w1|)) + 1/r) B^{1/2} (|z1-z2| + |w1-w2|)``."""
    Gr = smooth_gr_values(G, r)
    B = float(np.max(np.abs(G.values)) ** 2)
    rng = np.random.default_rng(seed)
    shape = Gr.shape
    i1 = np.stack([rng.integers(0, n, pairs) for n in shape])
    # mostly nearby partners so the bound is probed where it is tightest
    i2 = np.stack([np.clip(i1[k] + rng.integers(-2, 3, pairs), 0, shape[k] - 1) for k in range(4)])
    z1 = (i1[0] + 1j * i1[1]) / G.N_z
    w1 = (i1[2] + 1j * i1[3]) / G.N_w
    z2 = (i2[0] + 1j * i2[1]) / G.N_z
    w2 = (i2[2] + 1j * i2[3]) / G.N_w
    lhs = np.abs(Gr[tuple(i1)] - Gr[tuple(i2)])
    rhs = 2 * (np.pi * (r + np.maximum(np.abs(z1), np.abs(w1))) + 1 / r) * math.sqrt(B) * (
        np.abs(z1 - z2) + np.abs(w1 - w2))
    margin = rhs - lhs
    return {"pairs": pairs, "min_margin": float(margin.min()), "max_lhs": float(lhs.max()),
            "pass": bool(np.all(margin >= 0))}


def psi_audit(G: ZakField, r: float) -> dict:
    """Check ``|psi_{j,r}| <= 2 pi B^{1/2} r`` for the four quasi-periodicity defects."""
    Gr = smooth_gr_values(G, r)
    B = float(np.max(np.abs(G.values)) ** 2)
    bound = 2 * np.pi * math.sqrt(B) * r
    l = np.arange(G.N_w)
    es = np.exp(2j * np.pi * l / G.N_w)  # e^{2 pi i s} = e^{2 pi i Im(w)}
    er = np.exp(-2j * np.pi * l / G.N_w)  # e^{-2 pi i r} = e^{-2 pi i Im(i w)}
    psi = {
        "psi1": smooth_gr_values(G, r, w_shift=1) - Gr,
        "psi2": smooth_gr_values(G, r, w_shift=1j) - Gr,
        "psi3": smooth_gr_values(G, r, z_shift=1) - es[None, None, None, :] * Gr,
        "psi4": smooth_gr_values(G, r, z_shift=1j) - er[None, None, :, None] * Gr,
    }
    out = {k: float(np.max(np.abs(v))) for k, v in psi.items()}
    out["bound"] = bound
    out["pass"] = all(out[k] <= bound for k in psi)
    return out


# ---------------------------------------------------------------------------
# oscillation audits


def _cube_indices(center: float, side: float, n: int):
    lo = center - side / 2
    start = lo * n
    count = side * n
    if abs(start - round(start)) > 1e-9 or abs(count - round(count)) > 1e-9:
        raise ZakError(f"cube at {center} of side {side} is not aligned with step 1/{n}")
    return int(round(start)) + np.arange(int(round(count)))


def _cube_mask(spec: GridSpec, center: complex, side: float) -> np.ndarray:
    X, Y = spec.mesh()
    lo_x, lo_y = center.real - side / 2, center.imag - side / 2
    eps = 1e-12
    return ((X >= lo_x - eps) & (X < lo_x + side - eps) &
            (Y >= lo_y - eps) & (Y < lo_y + side - eps))


def _translated_differences(f: SampledField, eps: complex, z0: complex, w0: complex, side: float, N_w: int):
    """``T^t_{eps,1}G - G`` and ``T^t_{eps,2}G - G`` on the cube ``Q(z0, side) x Q(w0, side)``.

    ``T^t_{eps,1}G(z,w) = e^{2 pi i Im(zbar eps)} G(z - eps, w)`` and
    ``T^t_{eps,2}G(z,w) = e^{2 pi i Im(wbar eps)} G(z, w - eps)``.
    """
    N = f.spec.N
    e1, e2 = eps.real, eps.imag
    sx = e1 * N
    sy = e2 * N
    if abs(sx - round(sx)) > 1e-9 or abs(sy - round(sy)) > 1e-9:
        raise ZakError(f"eps={eps} is not commensurate with the grid step 1/{N}")
    sx, sy = int(round(sx)), int(round(sy))
    xi = _cube_indices(z0.real, side, N)
    yi = _cube_indices(z0.imag, side, N)
    r = w0.real - side / 2 + np.arange(int(round(side * N_w))) / N_w
    s = w0.imag - side / 2 + np.arange(int(round(side * N_w))) / N_w
    G = zak_block(f, xi, yi, r, s)
    Gz = zak_block(f, xi - sx, yi - sy, r, s)
    Gw = zak_block(f, xi, yi, r - e1, s - e2)
    x, y = xi / N, yi / N
    p1 = np.exp(2j * np.pi * (x[:, None] * e2 - y[None, :] * e1))
    p2 = np.exp(2j * np.pi * (r[:, None] * e2 - s[None, :] * e1))
    d1 = p1[:, :, None, None] * Gz - G
    d2 = p2[None, None, :, :] * Gw - G
    weight = (1.0 / N) ** 2 * (1.0 / N_w) ** 2
    return d1, d2, weight


def oscillation_audit(f: SampledField, eps: complex, z0: complex = 0, w0: complex = 0.5 + 0.5j,
                      radii=(0.5, 0.25, 0.125), N_w: int = 16) -> dict:
    """Both oscillation bounds on ``Q[alpha0, 1]`` and their L^1 versions on ``Q[alpha0, r]``.

    ``C_{j,f}^eps(r)`` is the bracket obtained from the norms of ``f``,
    ``Z f_tilde`` and ``Zbar f_tilde`` restricted to ``Q(z0, r)``; it is reported
    per component.
    """
    eps = complex(eps)
    z0, w0 = complex(z0), complex(w0)
    out = {"eps_re": eps.real, "eps_im": eps.imag}
    if eps == 0:
        out.update({"lhs_1": 0.0, "lhs_2": 0.0, "pass": True})
        for r in radii:
            out[f"C1_r{r:g}"] = 0.0
            out[f"C2_r{r:g}"] = 0.0
            out[f"l1_lhs_1_r{r:g}"] = 0.0
            out[f"l1_lhs_2_r{r:g}"] = 0.0
        out["C_decreasing"] = True
        return out
    a = abs(eps)
    Ne = n_epsilon(eps)
    grow = (1 + a) ** Ne
    f_tilde, _, _ = lemma41_fields(f, eps)
    zf, zbf = z_apply(f_tilde), zbar_apply(f_tilde)

    d1, d2, wt = _translated_differences(f, eps, z0, w0, 1.0, N_w)
    lhs1 = math.sqrt(wt * np.sum(np.abs(d1) ** 2))
    lhs2 = math.sqrt(wt * np.sum(np.abs(d2) ** 2))
    nf = norm(f)
    rhs1 = 8 * np.pi * a * nf + 7.5 * np.pi * a * (norm(zf) + norm(zbf) + norm(f_tilde) + grow * nf)
    rhs2 = 2 * np.pi * a * grow * nf + 8 * np.pi * a * nf
    out.update({"N_eps": Ne, "lhs_1": lhs1, "rhs_1": rhs1, "margin_1": rhs1 - lhs1,
                "lhs_2": lhs2, "rhs_2": rhs2, "margin_2": rhs2 - lhs2})
    ok = lhs1 <= rhs1 and lhs2 <= rhs2
    c1s, c2s = [], []
    for r in radii:
        chi = _cube_mask(f.spec, z0, r)
        loc = lambda g: norm(g.multiply(chi))  # noqa: E731
        nfl = loc(f)
        c1 = 8 * np.pi * nfl + 7.5 * np.pi * (loc(zf) + loc(zbf) + loc(f_tilde) + grow * nfl)
        c2 = 8 * np.pi * grow * nfl + 8 * np.pi * nfl
        e1_, e2_, wt_r = _translated_differences(f, eps, z0, w0, r, N_w)
        l1a = float(wt_r * np.sum(np.abs(e1_)))
        l1b = float(wt_r * np.sum(np.abs(e2_)))
        out[f"C1_r{r:g}"] = c1
        out[f"C2_r{r:g}"] = c2
        out[f"l1_lhs_1_r{r:g}"] = l1a
        out[f"l1_rhs_1_r{r:g}"] = r * r * a * c1
        out[f"l1_lhs_2_r{r:g}"] = l1b
        out[f"l1_rhs_2_r{r:g}"] = r * r * a * c2
        ok = ok and l1a <= r * r * a * c1 and l1b <= r * r * a * c2
        c1s.append(c1)
        c2s.append(c2)
    dec = all(x > y for x, y in zip(c1s, c1s[1:])) and all(x > y for x, y in zip(c2s, c2s[1:]))
    out["C_decreasing"] = bool(dec)
    out["pass"] = bool(ok)
    return out


# ---------------------------------------------------------------------------
# differential identities


def _periodic_d1(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    c = (np.roll(v, 2, axis) - 8 * np.roll(v, 1, axis) + 8 * np.roll(v, -1, axis) - np.roll(v, -2, axis))
    return c / (12 * h)


def zak_derivative_identity(f: SampledField, N_w: int = 16) -> dict:
    """Residuals of the Zak-side forms of ``Z`` and ``Zbar``:

        Z^t(Zf)    = (d_x - i d_y) G + zbar G / 2 - (1/2pi) d_w G
        Z^t(Zbar f) = (d_x + i d_y) G - z G / 2 - (1/2pi) d_wbar G

    with ``d_w = (d_r - i d_s)/2``.  The z-derivatives of ``G`` use the same
    stencil as the field operators on a z-block padded by two samples, and
    the w-derivatives a periodic fourth-order stencil, so the residual
    measures the w-discretisation alone.
    """
    s = f.spec
    N = s.N
    pad = 2
    idx = np.arange(-pad, N + pad)
    w = np.arange(N_w) / N_w
    Gp = zak_block(f, idx, idx, w, w)
    h = 1.0 / N
    gx = diff1(Gp, h, 0)[pad:-pad, pad:-pad]
    gy = diff1(Gp, h, 1)[pad:-pad, pad:-pad]
    G = Gp[pad:-pad, pad:-pad]
    hw = 1.0 / N_w
    gr = _periodic_d1(G, hw, 2)
    gs = _periodic_d1(G, hw, 3)
    z = (np.arange(N) / N)
    Z = z[:, None] + 1j * z[None, :]
    Zb = Z.conj()[:, :, None, None]
    Z = Z[:, :, None, None]
    rhs12 = gx - 1j * gy + 0.5 * Zb * G - (0.5 * (gr - 1j * gs)) / (2 * np.pi)
    rhs13 = gx + 1j * gy - 0.5 * Z * G - (0.5 * (gr + 1j * gs)) / (2 * np.pi)
    lhs12 = zak_forward(z_apply(f), N_w).values
    lhs13 = zak_forward(zbar_apply(f), N_w).values
    wt = 1.0 / (N * N_w)
    r12 = float(wt * np.linalg.norm((lhs12 - rhs12).ravel()))
    r13 = float(wt * np.linalg.norm((lhs13 - rhs13).ravel()))
    return {"N": N, "N_w": N_w, "residual_12": r12, "residual_13": r13,
            "norm_G": float(wt * np.linalg.norm(G.ravel()))}


# ---------------------------------------------------------------------------
# I/O


def write_zak(G: ZakField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(ZAK_MAGIC)
        fh.write(struct.pack("<III", G.N_z, G.N_w, G.K))
        fh.write(np.ascontiguousarray(G.values, dtype="<c16").tobytes(order="C"))


def read_zak(path) -> ZakField:
    from .field import FieldFormatError

    data = Path(path).read_bytes()
    if len(data) < 20 or data[:8] != ZAK_MAGIC:
        raise FieldFormatError("bad magic")
    nz, nw, K = struct.unpack("<III", data[8:20])
    need = nz * nz * nw * nw * 16
    body = data[20:]
    if len(body) < need:
        raise FieldFormatError(f"truncated payload: {len(body)} of {need} bytes")
    if len(body) > need:
        raise FieldFormatError("dimension mismatch")
    vals = np.frombuffer(body, dtype="<c16").reshape(nz, nz, nw, nw)
    return ZakField(nz, nw, K, vals)
