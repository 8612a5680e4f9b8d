"""Sampled complex fields on a truncated square grid over the complex plane.

Samples sit at cell corners ``x_j = -K + j/N`` so that translation by an
integer is an exact index shift of ``N`` samples.  Everything outside
``[-K, K)^2`` is treated as zero.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FIELD_MAGIC = b"TGFIELD1"


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


class FieldFormatError(ValueError):
    """Malformed field file."""


@dataclass(frozen=True)
class GridSpec:
    N: int
    K: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 4 or self.N % 2:
            raise GridError(f"resolution N must be an even integer >= 4, got {self.N}")
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise GridError(f"truncation K must be an integer >= 1, got {self.K}")

    @property
    def M(self) -> int:
        return 2 * self.K * self.N

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def coords(self) -> np.ndarray:
        return (np.arange(self.M) - self.K * self.N) / self.N

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` arrays indexed ``[x_index, y_index]``."""
        c = self.coords
        return np.meshgrid(c, c, indexing="ij")

    def index_of(self, x: float) -> int:
        """Grid index of coordinate ``x`` (must be a sample point)."""
        j = (x + self.K) * self.N
        jr = int(round(j))
        if abs(j - jr) > 1e-9:
            raise GridError(f"{x} is not a grid coordinate for N={self.N}")
        return jr


def make_grid(N: int, K: int) -> GridSpec:
    return GridSpec(N, K)


@dataclass(frozen=True, eq=False)
class SampledField:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        M = self.spec.M
        if v.shape != (M, M):
            raise GridError(f"values shape {v.shape} does not match grid ({M}, {M})")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "SampledField":
        """Sample ``func(x, y)`` (vectorised) on the grid."""
        X, Y = spec.mesh()
        return cls(spec, func(X, Y))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "SampledField":
        return cls(spec, np.zeros((spec.M, spec.M), dtype=np.complex128))

    def norm(self) -> float:
        return norm(self)

    def _check(self, other: "SampledField"):
        if self.spec != other.spec:
            raise GridError(f"grid mismatch: {self.spec} vs {other.spec}")

    def __add__(self, other):
        self._check(other)
        return SampledField(self.spec, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledField(self.spec, self.values - other.values)

    def __mul__(self, c):
        return SampledField(self.spec, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledField(self.spec, -self.values)

    def multiply(self, arr) -> "SampledField":
        """Pointwise product with an array (or callable of ``(x, y)``)."""
        if callable(arr):
            X, Y = self.spec.mesh()
            arr = arr(X, Y)
        return SampledField(self.spec, self.values * arr)


def inner_product(f: SampledField, g: SampledField) -> complex:
    """Rectangle-rule ``<f, g> = h^2 sum f conj(g)``."""
    f._check(g)
    h = f.spec.h
    return complex(h * h * np.vdot(g.values.ravel(), f.values.ravel()))


def norm(f: SampledField) -> float:
    h = f.spec.h
    return float(h * np.linalg.norm(f.values.ravel()))


# Fourth-order finite differences.  Interior rows use the 5-point central
# stencil; the two rows nearest each boundary use one-sided closures.
_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_LEFT = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_LEFT = (
    np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
    np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
)


def _apply_stencil(v: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    v = np.moveaxis(np.asarray(v), axis, 0)
    n = v.shape[0]
    if n < 6:
        raise GridError("need at least 6 samples along an axis to differentiate")
    if order == 1:
        central, left, sign = _D1_CENTRAL, _D1_LEFT, -1.0
    else:
        central, left, sign = _D2_CENTRAL, _D2_LEFT, 1.0
    out = np.zeros_like(v, dtype=np.result_type(v.dtype, np.float64))
    for off, c in zip(range(-2, 3), central):
        if c:
            out[2:n - 2] += c * v[2 + off:n - 2 + off]
    for row, coeffs in enumerate(left):
        w = len(coeffs)
        out[row] = np.tensordot(coeffs, v[:w], axes=(0, 0))
        # mirrored closure at the far boundary; odd derivative flips sign
        out[n - 1 - row] = sign * np.tensordot(coeffs, v[::-1][:w], axes=(0, 0))
    out /= h**order
    return np.moveaxis(out, 0, axis)


def diff1(v: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Fourth-order first derivative of samples along ``axis``."""
    return _apply_stencil(v, h, axis, 1)


def diff2(v: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Fourth-order second derivative of samples along ``axis``."""
    return _apply_stencil(v, h, axis, 2)


def diff1_matrix(n: int, h: float) -> np.ndarray:
    """Dense matrix of :func:`diff1` acting on length-``n`` vectors."""
    return diff1(np.eye(n), h, axis=0)


def _axis(axis) -> int:
    if axis in ("x", 0):
        return 0
    if axis in ("y", 1):
        return 1
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def partial_derivative(f: SampledField, axis) -> SampledField:
    return SampledField(f.spec, diff1(f.values, f.spec.h, _axis(axis)))


def second_partial(f: SampledField, axis) -> SampledField:
    return SampledField(f.spec, diff2(f.values, f.spec.h, _axis(axis)))


def wirtinger(f: SampledField, conjugate: bool = False) -> SampledField:
    """``d/dz = (d_x - i d_y)/2`` or, with ``conjugate``, ``d/dzbar = (d_x + i d_y)/2``."""
    dx = diff1(f.values, f.spec.h, 0)
    dy = diff1(f.values, f.spec.h, 1)
    s = 1j if conjugate else -1j
    return SampledField(f.spec, 0.5 * (dx + s * dy))


def interior_mask(spec: GridSpec, width: int = 2) -> np.ndarray:
    """Boolean mask excluding ``width`` rows at each boundary (one-sided stencils)."""
    m = np.zeros((spec.M, spec.M), dtype=bool)
    m[width:spec.M - width, width:spec.M - width] = True
    return m


@dataclass(frozen=True)
class AmalgamNorm:
    p: float
    q: float
    value: float
    per_cell: list

    def recompute(self) -> float:
        return _lq([v for _, v in self.per_cell], self.q)


def _check_exponent(e, name):
    e = float(e)
    if not e > 0:
        raise ValueError(f"exponent {name} must be positive, got {e}")
    return e


def _lq(vals, q) -> float:
    vals = np.asarray(vals, dtype=float)
    if math.isinf(q):
        return float(vals.max()) if vals.size else 0.0
    return float(np.sum(vals**q) ** (1.0 / q))


def cell_norms(f: SampledField, p) -> np.ndarray:
    """Per-unit-cell L^p norms, shape ``(2K, 2K)`` indexed by ``k + K``."""
    p = _check_exponent(p, "p")
    s = f.spec
    a = np.abs(f.values).reshape(2 * s.K, s.N, 2 * s.K, s.N)
    if math.isinf(p):
        return a.max(axis=(1, 3))
    return (s.h * s.h * np.sum(a**p, axis=(1, 3))) ** (1.0 / p)


def amalgam_norm(f: SampledField, p, q) -> AmalgamNorm:
    """Wiener amalgam norm: L^p on each unit cell, l^q across cells."""
    p = _check_exponent(p, "p")
    q = _check_exponent(q, "q")
    cn = cell_norms(f, p)
    K = f.spec.K
    per_cell = [((i - K, j - K), float(cn[i, j]))
                for i in range(2 * K) for j in range(2 * K)]
    return AmalgamNorm(p, q, _lq(cn.ravel(), q), per_cell)


def write_field(f: SampledField, path) -> None:
    s = f.spec
    payload = np.ascontiguousarray(f.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<II", s.N, s.K))
        fh.write(payload.tobytes(order="C"))


def read_field(path) -> SampledField:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != FIELD_MAGIC:
        raise FieldFormatError("bad magic")
    N, K = struct.unpack("<II", data[8:16])
    try:
        spec = GridSpec(N, K)
    except GridError as exc:
        raise FieldFormatError(f"dimension mismatch: {exc}") from None
    need = spec.M * spec.M * 16
    body = data[16:]
    if len(body) < need:
        raise FieldFormatError(f"truncated payload: {len(body)} of {need} bytes")
    if len(body) > need:
        raise FieldFormatError(f"dimension mismatch: {len(body)} bytes, expected {need}")
    vals = np.frombuffer(body, dtype="<c16").reshape(spec.M, spec.M)
    return SampledField(spec, vals)


def write_field_csv(f: SampledField, path) -> None:
    X, Y = f.spec.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "re", "im"])
        for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def read_field_csv(path) -> SampledField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "y", "re", "im"]:
        raise FieldFormatError("bad CSV header, expected x,y,re,im")
    arr = np.array(rows[1:], dtype=float)
    xs = np.unique(arr[:, 0])
    if xs.size < 2:
        raise FieldFormatError("too few samples")
    N = int(round(1.0 / (xs[1] - xs[0])))
    K = int(round(-xs[0]))
    spec = GridSpec(N, K)
    if arr.shape[0] != spec.M * spec.M:
        raise FieldFormatError("dimension mismatch")
    ix = np.rint((arr[:, 0] + K) * N).astype(int)
    iy = np.rint((arr[:, 1] + K) * N).astype(int)
    vals = np.zeros((spec.M, spec.M), dtype=np.complex128)
    vals[ix, iy] = arr[:, 2] + 1j * arr[:, 3]
    return SampledField(spec, vals)
