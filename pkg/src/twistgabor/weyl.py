"""Weyl transform as an explicit kernel operator on a 1-D grid.

``W(f)`` acts by ``(W(f) phi)(xi) = \\int K_f(xi, eta) phi(eta) d eta`` with

    K_f(xi, eta) = \\int f(x, eta - xi) e^{i c x (xi + eta)} dx,   c = 2 pi.

Weight convention: ``WeylKernel.values`` holds the kernel itself; the
operator matrix is ``h1 * values`` so that matrix products are quadratures
of kernel compositions.  Every other routine here derives its weights from
that one rule.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .field import FieldFormatError, GridError, GridSpec, SampledField, diff1_matrix

KERNEL_MAGIC = b"TWKERNL1"
PHASE_SCALE = 2 * np.pi


@dataclass(frozen=True, eq=False)
class WeylKernel:
    grid: GridSpec  # 1-D grid: only N, K and coords are used
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        M = self.grid.M
        if v.shape != (M, M):
            raise GridError(f"kernel shape {v.shape} does not match 1-D grid size {M}")
        if not np.all(np.isfinite(v)):
            raise ValueError("kernel values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return self.grid.h

    def matrix(self) -> np.ndarray:
        return self.h * self.values

    def hs_norm(self) -> float:
        return hs_norm(self)

    def __add__(self, other):
        _check(self, other)
        return WeylKernel(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check(self, other)
        return WeylKernel(self.grid, self.values - other.values)

    def __mul__(self, c):
        return WeylKernel(self.grid, self.values * c)

    __rmul__ = __mul__


def _check(a: WeylKernel, b: WeylKernel):
    if a.grid != b.grid:
        raise GridError(f"kernel grid mismatch: {a.grid} vs {b.grid}")


def default_grid1d(spec: GridSpec) -> GridSpec:
    return GridSpec(spec.N, max(1, spec.K // 2))


def weyl_kernel(f: SampledField, grid1d: GridSpec | None = None,
                phase_scale: float = PHASE_SCALE) -> WeylKernel:
    """Kernel of ``W(f)`` by rectangle-rule quadrature in ``x``.

    ``f(x, eta - xi)`` is read directly when ``eta - xi`` is a sample of ``f``
    and linearly interpolated in ``y`` otherwise.  ``phase_scale`` is the
    ``c`` in ``e^{i c x (xi + eta)}``.
    """
    s = f.spec
    g1 = default_grid1d(s) if grid1d is None else grid1d
    if 2 * g1.K > s.K:
        raise GridError(f"1-D truncation K1={g1.K} exceeds K/2={s.K / 2}: eta - xi leaves f's range")
    x = s.coords
    xi = g1.coords
    M1 = g1.M
    out = np.zeros((M1, M1), dtype=np.complex128)
    fv = f.values
    for d in range(-(M1 - 1), M1):
        a = np.arange(max(0, -d), min(M1, M1 - d))
        b = a + d
        y = d / g1.N  # eta - xi
        j = (y + s.K) * s.N
        j0 = int(math.floor(j + 1e-9))
        t = j - j0
        if abs(t) < 1e-9:
            col = fv[:, j0]
        else:
            col = (1 - t) * fv[:, j0] + t * fv[:, min(j0 + 1, s.M - 1)]
        ph = np.exp(1j * phase_scale * np.outer(x, xi[a] + xi[b]))
        out[a, b] = s.h * (col @ ph)
    return WeylKernel(g1, out)


def hs_inner(kf: WeylKernel, kg: WeylKernel) -> complex:
    _check(kf, kg)
    return complex(kf.h**2 * np.vdot(kg.values.ravel(), kf.values.ravel()))


def hs_norm(k: WeylKernel) -> float:
    return float(k.h * np.linalg.norm(k.values.ravel()))


def compose(kf: WeylKernel, kg: WeylKernel) -> WeylKernel:
    """Kernel of ``W(f) W(g)``."""
    _check(kf, kg)
    return WeylKernel(kf.grid, kf.h * (kf.values @ kg.values))


def ladder_matrices(grid1d: GridSpec):
    """Matrices of ``A = -d/dx + x`` and ``A* = d/dx + x`` on the 1-D grid."""
    D = diff1_matrix(grid1d.M, grid1d.h)
    X = np.diag(grid1d.coords)
    return -D + X, D + X


def intertwine_residuals(f: SampledField, grid1d: GridSpec | None = None,
                         phase_scale: float = PHASE_SCALE, sign: complex = 1j) -> dict:
    """Relative HS residuals of ``W(Zf) = sign W(f) A`` and ``W(Zbar f) = sign W(f) A*``.

    The kernel of ``W(f) A`` is ``K_f @ A`` in the weight convention above.
    """
    from .twistop import z_apply, zbar_apply

    kf = weyl_kernel(f, grid1d, phase_scale)
    A, As = ladder_matrices(kf.grid)
    kz = weyl_kernel(z_apply(f), kf.grid, phase_scale)
    kzb = weyl_kernel(zbar_apply(f), kf.grid, phase_scale)
    base = hs_norm(kf)
    r1 = hs_norm(WeylKernel(kf.grid, kz.values - sign * kf.values @ A)) / base
    r2 = hs_norm(WeylKernel(kf.grid, kzb.values - sign * kf.values @ As)) / base
    return {"residual_Z": r1, "residual_Zbar": r2}


def intertwine_ladder_check(f: SampledField, grid1d: GridSpec | None = None, tol: float = 5e-3) -> dict:
    """The ladder intertwining relations as stated, with ``c = 2 pi`` and factor ``i``."""
    res = intertwine_residuals(f, grid1d)
    res["tol"] = tol
    res["pass"] = bool(res["residual_Z"] <= tol and res["residual_Zbar"] <= tol)
    return res


def pi_action(m: int, n: int, kf: WeylKernel) -> WeylKernel:
    """Kernel ``(xi, eta) -> e^{4 pi i (m xi + m n / 2)} K_f(xi + n, eta)``; zero beyond the grid."""
    g = kf.grid
    if int(m) != m or int(n) != n:
        raise ValueError("pi_action needs integer (m, n)")
    m, n = int(m), int(n)
    if abs(n) >= g.K:
        raise GridError(f"shift n={n} leaves no margin on the 1-D grid with K1={g.K}")
    s = n * g.N
    M = g.M
    shifted = np.zeros_like(kf.values)
    if s >= 0:
        shifted[: M - s] = kf.values[s:]
    else:
        shifted[-s:] = kf.values[: M + s]
    phase = np.exp(4j * np.pi * (m * g.coords + 0.5 * m * n))
    return WeylKernel(g, phase[:, None] * shifted)


def homomorphism_distance(f: SampledField, g: SampledField, grid1d: GridSpec | None = None,
                          override: bool = False) -> float:
    """HS distance between ``W(f x g)`` and ``W(g) W(f)``.

    With the twisted convolution phase ``e^{-2 pi i Im(z wbar)}`` the Weyl
    transform reverses products, so ``W(f x g)`` is compared against
    ``W(g) W(f)``.
    """
    from .twistop import twisted_convolve

    fg = twisted_convolve(f, g, override=override)
    kfg = weyl_kernel(fg, grid1d)
    prod = compose(weyl_kernel(g, grid1d), weyl_kernel(f, grid1d))
    return hs_norm(kfg - prod)


def write_kernel(k: WeylKernel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(KERNEL_MAGIC)
        fh.write(struct.pack("<II", k.grid.N, k.grid.K))
        fh.write(np.ascontiguousarray(k.values, dtype="<c16").tobytes(order="C"))


def read_kernel(path) -> WeylKernel:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != KERNEL_MAGIC:
        raise FieldFormatError("bad magic")
    N, K = struct.unpack("<II", data[8:16])
    g = GridSpec(N, K)
    need = g.M * g.M * 16
    body = data[16:]
    if len(body) < need:
        raise FieldFormatError(f"truncated payload: {len(body)} of {need} bytes")
    if len(body) > need:
        raise FieldFormatError("dimension mismatch")
    return WeylKernel(g, np.frombuffer(body, dtype="<c16").reshape(g.M, g.M))


def plancherel_ratio(f: SampledField, grid1d: GridSpec | None = None) -> float:
    """``||K_f||_HS / ||f||_2``.

    The stated norm identity predicts 1/2.  With ``u = eta - xi``,
    ``v = xi + eta`` and Plancherel in ``x`` the kernel above gives
    ``||K_f||^2 = (1/2)(2 pi / c) ||f||^2``, i.e. ``1/sqrt(2)`` at ``c = 2 pi``.
    """
    return hs_norm(weyl_kernel(f, grid1d)) / f.norm()


def polarized_ratio(f: SampledField, g: SampledField, grid1d: GridSpec | None = None) -> complex:
    """``<K_f, K_g>_HS / <f, g>``; the polarized identity as stated predicts 1/2."""
    from .field import inner_product

    return hs_inner(weyl_kernel(f, grid1d), weyl_kernel(g, grid1d)) / inner_product(f, g)


def _smooth_pair(spec: GridSpec):
    f = SampledField.from_function(spec, lambda x, y: np.exp(-(x * x + y * y) / 2) * (1 + 0.3j * x))
    g = SampledField.from_function(spec, lambda x, y: np.exp(-((x - 0.3) ** 2 + y * y) / 3))
    return f, g


def prop11_audit(N: int = 16, K: int = 8, caps: int = 5, tol: float = 1e-4,
                 intertwine_tol: float = 5e-3) -> dict:
    """The four operator relations for ``Z``, ``Zbar`` on one grid.

    Ladder relations on ``phi_{m,n}`` with ``m, n < caps`` and the commutator
    are measured on the interior (one-sided stencils excluded); the adjoint
    relation on a pair of smooth decaying fields; intertwining as stated, with
    the rescaled variant reported alongside for diagnosis.
    """
    from .field import inner_product, interior_mask, make_grid
    from .hermite import special_hermite
    from .twistop import z_apply, zbar_apply

    spec = make_grid(N, K)
    mask = interior_mask(spec, 4)
    lad = 0.0
    for m in range(caps):
        for n in range(caps):
            p = special_hermite(m, n, spec)
            down = 1j * np.sqrt(2 * n) * special_hermite(m, n - 1, spec).values if n else 0.0
            up = 1j * np.sqrt(2 * n + 2) * special_hermite(m, n + 1, spec).values
            lad = max(lad, float(np.max(np.abs((z_apply(p).values - down)[mask]))),
                      float(np.max(np.abs((zbar_apply(p).values - up)[mask]))))
    f, g = _smooth_pair(spec)
    comm = z_apply(zbar_apply(f)) - zbar_apply(z_apply(f))
    comm_res = float(np.max(np.abs((comm.values + 2 * f.values)[mask])))
    adj_res = abs(inner_product(z_apply(f), g) + inner_product(f, zbar_apply(g)))
    tw = intertwine_residuals(f)
    alt = intertwine_residuals(f, phase_scale=0.5, sign=-1j)
    out = {
        "ladder_residual": lad,
        "commutator_residual": comm_res,
        "adjoint_residual": adj_res,
        "intertwine_residual_Z": tw["residual_Z"],
        "intertwine_residual_Zbar": tw["residual_Zbar"],
        "intertwine_rescaled_residual_Z": alt["residual_Z"],
        "intertwine_rescaled_residual_Zbar": alt["residual_Zbar"],
        "pass_ladder": lad <= tol,
        "pass_commutator": comm_res <= tol,
        "pass_adjoint": adj_res <= tol,
        "pass_intertwine": max(tw.values()) <= intertwine_tol,
    }
    out["pass"] = all(v for k, v in out.items() if k.startswith("pass_"))
    return out
