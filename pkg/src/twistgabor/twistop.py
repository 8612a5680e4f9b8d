"""Twisted translations, the ladder operators Z, Zbar, the operator L and
twisted convolution on sampled fields.

Derivative convention: ``Z = (d_x - i d_y) + zbar/2`` and
``Zbar = (d_x + i d_y) - z/2``.  This is the normalisation under which
``[Z, Zbar] = -2I`` and ``Z phi_{m,n} = i sqrt(2n) phi_{m,n-1}``; with the
half-weighted Wirtinger derivative the commutator would be ``-I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import GridError, GridSpec, SampledField, diff1, diff2

MAX_CONVOLVE_M = 64


@dataclass(frozen=True)
class TwistedShift:
    m: float
    n: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.n)):
            raise ValueError("shift parameters must be finite")


def _grid_steps(spec: GridSpec, a: float):
    """Return the integer sample count for shift ``a`` or None if off-grid."""
    s = a * spec.N
    r = round(s)
    return int(r) if abs(s - r) < 1e-9 else None


def shift_values(v: np.ndarray, sx: int, sy: int) -> np.ndarray:
    """``out[i, j] = v[i - sx, j - sy]`` with zero fill."""
    M = v.shape[0]
    out = np.zeros_like(v)
    if abs(sx) >= M or abs(sy) >= M:
        return out
    dst_x = slice(max(sx, 0), M + min(sx, 0))
    src_x = slice(max(-sx, 0), M + min(-sx, 0))
    dst_y = slice(max(sy, 0), M + min(sy, 0))
    src_y = slice(max(-sy, 0), M + min(-sy, 0))
    out[dst_x, dst_y] = v[src_x, src_y]
    return out


def _bilinear(v: np.ndarray, spec: GridSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of grid samples at points (X, Y), zero outside."""
    M = spec.M
    u = (X + spec.K) * spec.N
    w = (Y + spec.K) * spec.N
    i0 = np.floor(u).astype(int)
    j0 = np.floor(w).astype(int)
    fu = u - i0
    fw = w - j0
    out = np.zeros(np.broadcast(X, Y).shape, dtype=np.complex128)
    for di, wx in ((0, 1 - fu), (1, fu)):
        for dj, wy in ((0, 1 - fw), (1, fw)):
            ii = i0 + di
            jj = j0 + dj
            ok = (ii >= 0) & (ii < M) & (jj >= 0) & (jj < M)
            vals = np.where(ok, v[np.clip(ii, 0, M - 1), np.clip(jj, 0, M - 1)], 0.0)
            out += wx * wy * vals
    return out


def translate(f: SampledField, a: float, b: float) -> SampledField:
    """Plain translation ``f(x - a, y - b)``; exact on grid-commensurate shifts."""
    sx, sy = _grid_steps(f.spec, a), _grid_steps(f.spec, b)
    if sx is not None and sy is not None:
        return SampledField(f.spec, shift_values(f.values, sx, sy))
    X, Y = f.spec.mesh()
    return SampledField(f.spec, _bilinear(f.values, f.spec, X - a, Y - b))


def twisted_translate(f: SampledField, m: float, n: float) -> SampledField:
    """``T^t_{(m,n)} f(z) = e^{2 pi i (n x - m y)} f(x - m, y - n)``."""
    shifted = translate(f, m, n)
    X, Y = f.spec.mesh()
    return shifted.multiply(np.exp(2j * np.pi * (n * X - m * Y)))


# ---------------------------------------------------------------------------
# differential operators


def _d(f: SampledField):
    h = f.spec.h
    return diff1(f.values, h, 0), diff1(f.values, h, 1)


def z_apply(f: SampledField) -> SampledField:
    dx, dy = _d(f)
    X, Y = f.spec.mesh()
    return SampledField(f.spec, dx - 1j * dy + 0.5 * (X - 1j * Y) * f.values)


def zbar_apply(f: SampledField) -> SampledField:
    dx, dy = _d(f)
    X, Y = f.spec.mesh()
    return SampledField(f.spec, dx + 1j * dy - 0.5 * (X + 1j * Y) * f.values)


def l_apply(f: SampledField) -> SampledField:
    """``L = -Laplacian + |z|^2/4 - i (x d_y - y d_x)``."""
    h = f.spec.h
    v = f.values
    X, Y = f.spec.mesh()
    dx, dy = _d(f)
    lap = diff2(v, h, 0) + diff2(v, h, 1)
    return SampledField(f.spec, -lap + 0.25 * (X * X + Y * Y) * v - 1j * (X * dy - Y * dx))


def l_apply_ladder(f: SampledField) -> SampledField:
    """``L = -(Z Zbar + Zbar Z)/2`` by composing the grid operators."""
    return -0.5 * (z_apply(zbar_apply(f)) + zbar_apply(z_apply(f)))


# ---------------------------------------------------------------------------
# oscillation-lemma helpers: f_tilde, tau_eps f, f_eps


def lemma41_fields(f: SampledField, eps: complex):
    """Return ``(f_tilde, tau_eps f, f_eps)`` for the shift ``eps = e1 + i e2``."""
    eps = complex(eps)
    e1, e2 = eps.real, eps.imag
    if abs(eps) >= f.spec.K / 2:
        raise GridError(f"shift |eps|={abs(eps):.3g} too large for K={f.spec.K}")
    X, Y = f.spec.mesh()
    f_tilde = f.multiply(np.exp(2j * np.pi * (Y * e1 - X * e2)))
    tau = translate(f, e1, e2)
    f_eps = tau.multiply(np.exp(2j * np.pi * (X * e2 - Y * e1)))
    return f_tilde, tau, f_eps


def n_epsilon(eps: complex) -> int:
    """Smallest positive integer ``N`` with ``(1 + |eps|)^{-N} < |eps|``."""
    a = abs(complex(eps))
    if a == 0:
        raise ValueError("n_epsilon is undefined at eps = 0")
    if a > 1:
        return 1
    # start near the log estimate and settle by direct comparison
    n = max(1, int(math.floor(-math.log(a) / math.log1p(a))))
    while n > 1 and (1 + a) ** -(n - 1) < a:
        n -= 1
    while not (1 + a) ** -n < a:
        n += 1
    return n


def commensurate_shifts(spec: GridSpec, count: int = 20, max_abs: float = 0.5, seed: int = 42):
    """``count`` distinct nonzero shifts ``(a + ib)/N`` with ``|eps| <= max_abs``."""
    rng = np.random.default_rng(seed)
    lim = int(math.floor(max_abs * spec.N))
    cands = [complex(a, b) / spec.N for a in range(-lim, lim + 1) for b in range(-lim, lim + 1)
             if 0 < abs(complex(a, b)) / spec.N <= max_abs + 1e-12]
    if len(cands) < count:
        raise GridError(f"only {len(cands)} grid-commensurate shifts with |eps| <= {max_abs} at N={spec.N}")
    idx = rng.choice(len(cands), size=count, replace=False)
    return [cands[i] for i in sorted(idx)]


def lemma41_audit(f: SampledField, shifts) -> dict:
    """Check the three norm bounds on ``f_tilde``, ``tau_eps f`` and ``f_eps``.

    Bound (i): ``||f_tilde - f|| <= 2 pi |eps| (1+|eps|)^N_eps ||f||``.
    Bounds (ii), (iii): ``||tau f - f||`` and ``||f_eps - f||`` against
    ``(15/2) pi |eps| (||Z f_tilde|| + ||Zbar f_tilde|| + ||f_tilde|| + (1+|eps|)^N_eps ||f||)``.
    Only the inequalities are asserted; the constants have slack.
    """
    nf = f.norm()
    out = {"count": 0, "min_margin_1": np.inf, "min_margin_2": np.inf, "min_margin_3": np.inf}
    for eps in shifts:
        a = abs(complex(eps))
        ft, tau, fe = lemma41_fields(f, eps)
        grow = (1 + a) ** n_epsilon(eps)
        rhs1 = 2 * np.pi * a * grow * nf
        rhs23 = 7.5 * np.pi * a * (z_apply(ft).norm() + zbar_apply(ft).norm() + ft.norm() + grow * nf)
        out["min_margin_1"] = min(out["min_margin_1"], rhs1 - (ft - f).norm())
        out["min_margin_2"] = min(out["min_margin_2"], rhs23 - (tau - f).norm())
        out["min_margin_3"] = min(out["min_margin_3"], rhs23 - (fe - f).norm())
        out["count"] += 1
    out["pass"] = bool(min(out["min_margin_1"], out["min_margin_2"], out["min_margin_3"]) >= 0)
    return out


# ---------------------------------------------------------------------------
# twisted convolution


def twisted_convolve(f: SampledField, g: SampledField, override: bool = False) -> SampledField:
    """``(f x g)(z) = \\int f(z - w) g(w) e^{-2 pi i Im(z wbar)} dw`` by direct summation.

    Cost is O(M^4); grids with ``M > 64`` need ``override=True``.
    """
    f._check(g)
    s = f.spec
    M, N, K = s.M, s.N, s.K
    if M > MAX_CONVOLVE_M and not override:
        raise GridError(f"twisted_convolve is O(M^4); M={M} > {MAX_CONVOLVE_M} needs override")
    c = s.coords
    fv, gv = f.values, g.values
    off = K * N  # index of coordinate 0
    out = np.zeros((M, M), dtype=np.complex128)
    # Im(z wbar) = y u - x v for z = x + iy, w = u + iv
    ey = np.exp(-2j * np.pi * np.outer(c, c))  # [y, u] -> e^{-2 pi i y u}
    for a in range(M):
        ev = np.exp(2j * np.pi * c[a] * c)  # e^{2 pi i x v}
        acc = np.zeros(M, dtype=np.complex128)
        for b in range(M):
            ia = a - b + off
            if not 0 <= ia < M:
                continue
            gb = gv[b] * ev
            conv = np.convolve(fv[ia], gb)[off:off + M]
            acc += ey[:, b] * conv
        out[a] = acc
    return SampledField(s, s.h**2 * out)
