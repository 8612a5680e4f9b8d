"""Hermite functions, special Hermite functions and coefficient calculus.

Special Hermite functions are built by quadrature of

    phi_{m,n}(x, y) = (2 pi)^{-1/2} \\int e^{i xi x} h_m(xi + y/2) h_n(xi - y/2) d xi

on a uniform xi-grid.  Expansions in this basis carry the spectral calculus
of the special Hermite operator ``L`` (eigenvalue ``2n + 1`` on
``phi_{m,n}``) and of the ladder operators ``Z`` and ``Zbar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .field import GridSpec, SampledField, diff1, inner_product

MAX_DEGREE = 60
DEFAULT_CAPS = (10, 10)


class CapError(ValueError):
    """Requested degree exceeds a cap."""


def hermite_functions(x, kmax: int) -> np.ndarray:
    """Normalised Hermite functions ``h_0..h_kmax`` at points ``x``.

    Uses the normalised three-term recurrence, so no factorials appear.
    Returns an array of shape ``(kmax + 1,) + x.shape``.
    """
    if kmax < 0 or kmax > MAX_DEGREE:
        raise CapError(f"degree {kmax} outside [0, {MAX_DEGREE}]")
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_1d(k: int, grid: GridSpec) -> np.ndarray:
    if k < 0 or k > MAX_DEGREE:
        raise CapError(f"degree {k} outside [0, {MAX_DEGREE}]")
    return hermite_functions(grid.coords, k)[k]


def inner_1d(u, v, h: float) -> complex:
    return complex(h * np.vdot(v, u))


@dataclass(frozen=True, eq=False)
class HermiteBasis1D:
    cap: int
    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, cap: int, grid: GridSpec) -> "HermiteBasis1D":
        return cls(cap, grid, hermite_functions(grid.coords, cap))

    def gram(self) -> np.ndarray:
        s = self.samples
        return self.grid.h * s @ s.T


def ladder_apply(kind: str, f, grid: GridSpec) -> np.ndarray:
    """Apply ``A = -d/dx + x`` (kind ``"A"``) or ``A* = d/dx + x`` to 1-D samples."""
    x = grid.coords
    d = diff1(np.asarray(f), grid.h)
    if kind == "A":
        return -d + x * f
    if kind in ("A*", "Astar"):
        return d + x * f
    raise ValueError(f"kind must be 'A' or 'A*', got {kind!r}")


# ---------------------------------------------------------------------------
# special Hermite functions


def xi_truncation(K: int, degree: int) -> int:
    return int(math.ceil(K + degree / 2 + 6))


@lru_cache(maxsize=8)
def _phi_table(N: int, K: int, cap_m: int, cap_n: int) -> np.ndarray:
    spec = GridSpec(N, K)
    deg = max(cap_m, cap_n)
    xi = GridSpec(N, xi_truncation(K, deg)).coords
    c = spec.coords
    # E[x, xi] = e^{i xi x}
    E = np.exp(1j * np.outer(c, xi))
    hp = hermite_functions(xi[:, None] + 0.5 * c[None, :], cap_m)  # [m, xi, y]
    hm = hermite_functions(xi[:, None] - 0.5 * c[None, :], cap_n)  # [n, xi, y]
    table = np.empty((cap_m + 1, cap_n + 1, spec.M, spec.M), dtype=np.complex128)
    scale = spec.h / math.sqrt(2.0 * math.pi)
    for m in range(cap_m + 1):
        for n in range(cap_n + 1):
            table[m, n] = scale * (E @ (hp[m] * hm[n]))
    table.setflags(write=False)
    return table


def special_hermite(m: int, n: int, grid: GridSpec, caps=None) -> SampledField:
    cm, cn = caps if caps is not None else (max(m, DEFAULT_CAPS[0]), max(n, DEFAULT_CAPS[1]))
    if m < 0 or n < 0 or m > cm or n > cn:
        raise CapError(f"(m, n) = ({m}, {n}) exceeds caps {(cm, cn)}")
    if max(cm, cn) > MAX_DEGREE:
        raise CapError(f"caps {(cm, cn)} exceed {MAX_DEGREE}")
    return SampledField(grid, _phi_table(grid.N, grid.K, cm, cn)[m, n])


@dataclass(frozen=True, eq=False)
class SpecialHermiteBasis:
    caps: tuple
    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, grid: GridSpec, caps=DEFAULT_CAPS) -> "SpecialHermiteBasis":
        cm, cn = caps
        if max(cm, cn) > MAX_DEGREE:
            raise CapError(f"caps {caps} exceed {MAX_DEGREE}")
        return cls((cm, cn), grid, _phi_table(grid.N, grid.K, cm, cn))

    def phi(self, m: int, n: int) -> SampledField:
        if m > self.caps[0] or n > self.caps[1]:
            raise CapError(f"(m, n) = ({m}, {n}) exceeds caps {self.caps}")
        return SampledField(self.grid, self.samples[m, n])

    def gram(self) -> np.ndarray:
        cm, cn = self.caps
        flat = self.samples.reshape((cm + 1) * (cn + 1), -1)
        return self.grid.h**2 * flat.conj() @ flat.T


# ---------------------------------------------------------------------------
# expansions


@dataclass(frozen=True, eq=False)
class PhiExpansion:
    """Coefficients ``c[m, n]`` of ``sum c_{m,n} phi_{m,n}``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.ndim != 2:
            raise ValueError("coefficient matrix must be 2-D")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def caps(self) -> tuple:
        return (self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1)

    @classmethod
    def unit(cls, m: int, n: int, caps=None) -> "PhiExpansion":
        cm, cn = caps if caps is not None else (m, n)
        c = np.zeros((cm + 1, cn + 1), dtype=np.complex128)
        c[m, n] = 1.0
        return cls(c)

    @classmethod
    def random(cls, caps, rng: np.random.Generator) -> "PhiExpansion":
        shape = (caps[0] + 1, caps[1] + 1)
        return cls(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        a, b = _common(self.coeffs, other.coeffs)
        return PhiExpansion(a + b)

    def __sub__(self, other):
        a, b = _common(self.coeffs, other.coeffs)
        return PhiExpansion(a - b)

    def __mul__(self, c):
        return PhiExpansion(self.coeffs * c)

    __rmul__ = __mul__

    def truncate(self, caps) -> "PhiExpansion":
        c = np.zeros((caps[0] + 1, caps[1] + 1), dtype=np.complex128)
        a = self.coeffs[: caps[0] + 1, : caps[1] + 1]
        c[: a.shape[0], : a.shape[1]] = a
        return PhiExpansion(c)

    def to_rows(self):
        """``(m, n, re, im)`` rows for CSV export."""
        cm, cn = self.caps
        return [(m, n, float(self.coeffs[m, n].real), float(self.coeffs[m, n].imag))
                for m in range(cm + 1) for n in range(cn + 1)]


def _common(a, b):
    shape = (max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1]))
    out = []
    for x in (a, b):
        y = np.zeros(shape, dtype=np.complex128)
        y[: x.shape[0], : x.shape[1]] = x
        out.append(y)
    return out


def expand(f: SampledField, caps=DEFAULT_CAPS, basis: SpecialHermiteBasis | None = None) -> PhiExpansion:
    if basis is None:
        basis = SpecialHermiteBasis.build(f.spec, caps)
    if caps[0] > basis.caps[0] or caps[1] > basis.caps[1]:
        raise CapError(f"caps {caps} exceed basis caps {basis.caps}")
    if basis.grid != f.spec:
        raise ValueError("basis grid does not match field grid")
    cm, cn = caps
    phis = basis.samples[: cm + 1, : cn + 1].reshape((cm + 1) * (cn + 1), -1)
    h2 = f.spec.h**2
    c = h2 * (phis.conj() @ f.values.ravel())
    return PhiExpansion(c.reshape(cm + 1, cn + 1))


def synthesize(e: PhiExpansion, grid: GridSpec, basis: SpecialHermiteBasis | None = None) -> SampledField:
    if basis is None:
        basis = SpecialHermiteBasis.build(grid, e.caps)
    cm, cn = e.caps
    if cm > basis.caps[0] or cn > basis.caps[1]:
        raise CapError(f"expansion caps {e.caps} exceed basis caps {basis.caps}")
    vals = np.tensordot(e.coeffs, basis.samples[: cm + 1, : cn + 1], axes=([0, 1], [0, 1]))
    return SampledField(grid, vals)


def eigenvalues(caps) -> np.ndarray:
    """``2n + 1`` broadcast over a coefficient matrix of the given caps."""
    n = np.arange(caps[1] + 1)
    return np.broadcast_to(2 * n + 1.0, (caps[0] + 1, caps[1] + 1))


def l_power(e: PhiExpansion, s: float) -> PhiExpansion:
    return PhiExpansion(e.coeffs * eigenvalues(e.caps) ** s)


# Ladder action on coefficients:  Z phi_{m,n} = i sqrt(2n) phi_{m,n-1},
# Zbar phi_{m,n} = i sqrt(2n+2) phi_{m,n+1}.  Raising grows the n-cap by one so
# nothing is clipped.


def z_coeffs(e: PhiExpansion) -> PhiExpansion:
    c = e.coeffs
    n = np.arange(c.shape[1])
    out = np.zeros_like(c)
    out[:, :-1] = 1j * np.sqrt(2.0 * n[1:]) * c[:, 1:]
    return PhiExpansion(out)


def zbar_coeffs(e: PhiExpansion) -> PhiExpansion:
    c = e.coeffs
    n = np.arange(c.shape[1])
    out = np.zeros((c.shape[0], c.shape[1] + 1), dtype=np.complex128)
    out[:, 1:] = 1j * np.sqrt(2.0 * n + 2.0) * c
    return PhiExpansion(out)


def riesz_apply(kind: str, e: PhiExpansion) -> PhiExpansion:
    """``R = Z L^{-1/2}`` (kind ``"R"``) or ``Rbar = Zbar L^{-1/2}``."""
    if kind == "R":
        return z_coeffs(l_power(e, -0.5))
    if kind in ("Rbar", "R̄"):
        return zbar_coeffs(l_power(e, -0.5))
    raise ValueError(f"kind must be 'R' or 'Rbar', got {kind!r}")


def uncertainty_from_coeffs(e: PhiExpansion) -> float:
    """``||Zf||^2 + ||Zbar f||^2 = sum (4n + 2) |c_{m,n}|^2``."""
    return float(np.sum(2.0 * eigenvalues(e.caps) * np.abs(e.coeffs) ** 2))


def basis_inner(f: SampledField, m: int, n: int) -> complex:
    return inner_product(f, special_hermite(m, n, f.spec))
