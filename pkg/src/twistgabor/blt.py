"""Balian-Low demonstrators: counterexample windows, divergence scans,
the uncertainty functional, weak-BLT reports, L^{1/2} consequence checks, and Beurling
density estimates for point sets.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .field import GridError, GridSpec, SampledField, amalgam_norm, inner_product, norm
from .hermite import (PhiExpansion, eigenvalues, expand, l_power, riesz_apply, synthesize,
                      z_coeffs, zbar_coeffs)
from .twistop import twisted_translate, z_apply, zbar_apply

EXP_FLOOR = -745.0


# ---------------------------------------------------------------------------
# first counterexample: smooth bumps with summable weights


def bump(x, y):
    """``e^{-[1/(x(1-x)) + 1/(y(1-y))]}`` on the open unit square, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = (x > 0) & (x < 1) & (y > 0) & (y < 1)
    xs = np.where(inside, x, 0.5)
    ys = np.where(inside, y, 0.5)
    e = -(1.0 / (xs * (1 - xs)) + 1.0 / (ys * (1 - ys)))
    return np.where(inside, np.exp(np.maximum(e, EXP_FLOOR)), 0.0)


BUMP_SUP = math.exp(-8.0)


def example31_field(M: int, grid: GridSpec) -> SampledField:
    """``g_M = sum_{1 <= k1, k2 <= M} (k1 k2)^{-3/2} f(x - k1, y - k2)``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if grid.K < M + 1:
        raise GridError(f"example31 with M={M} needs truncation K >= {M + 1}, got K={grid.K}")
    X, Y = grid.mesh()
    kx = np.floor(X).astype(int)
    ky = np.floor(Y).astype(int)
    ok = (kx >= 1) & (kx <= M) & (ky >= 1) & (ky <= M)
    w = np.where(ok, np.abs(kx).clip(1) ** -1.5 * np.abs(ky).clip(1) ** -1.5, 0.0)
    return SampledField(grid, w * bump(X - kx, Y - ky))


def bump_norm(N: int = 64) -> float:
    """``||f||_2`` of the unit bump by the rectangle rule on the unit cell."""
    t = np.arange(N) / N
    v = bump(t[:, None], t[None, :])
    return float(np.sqrt(np.sum(v * v)) / N)


def harmonic(M: int) -> float:
    return float(sum(1.0 / m for m in range(1, M + 1)))


def example31_amalgam_comparator(M: int) -> float:
    s = sum(k ** -1.5 for k in range(1, M + 1))
    return BUMP_SUP * s * s


# ---------------------------------------------------------------------------
# second counterexample: tents with heights 1/(k log k)


@dataclass(frozen=True)
class TentRule:
    """Plateau ``[a_k, b_k]`` centred at ``k + 1/2`` with a default half-width.

    The half-width is halved until both ``[a - 1/k, b + 1/k] in [k, k+1]``
    and ``b^3 - a^3 < k`` hold.
    """

    half_width: float = 0.2
    max_halvings: int = 60

    def plateau(self, k: int):
        hw = self.half_width
        for _ in range(self.max_halvings):
            a, b = k + 0.5 - hw, k + 0.5 + hw
            if tent_constraints(k, a, b)["valid"]:
                return a, b
            hw /= 2
        raise ValueError(f"no admissible plateau found at k={k}")


def tent_constraints(k: int, a: float, b: float) -> dict:
    interval = (a - 1.0 / k >= k) and (b + 1.0 / k <= k + 1) and a < b
    cubic = b**3 - a**3 < k
    return {"interval": bool(interval), "cubic": bool(cubic), "valid": bool(interval and cubic)}


def check_rule(rule, k_values) -> None:
    for k in k_values:
        a, b = rule(k) if callable(rule) else rule.plateau(k)
        c = tent_constraints(k, a, b)
        if not c["valid"]:
            raise ValueError(f"tent rule violates the constraints at k={k}: {c}")


def _plateaus(k0: int, k_max: int, rule):
    rule = TentRule() if rule is None else rule
    fn = rule if callable(rule) else rule.plateau
    out = []
    for k in range(k0, k_max + 1):
        a, b = fn(k)
        c = tent_constraints(k, a, b)
        if not c["valid"]:
            raise ValueError(f"tent rule violates the constraints at k={k}: {c}")
        out.append((k, a, b))
    return out


def tent_profile(x, k_max: int, rule=None, k0: int = 3) -> np.ndarray:
    """The 1-D profile ``g = sum_{k0 <= k <= k_max} g_k``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k, a, b in _plateaus(k0, k_max, rule):
        lk = math.log(k)
        up = (x >= a - 1.0 / k) & (x < a)
        flat = (x >= a) & (x <= b)
        down = (x > b) & (x <= b + 1.0 / k)
        out = np.where(up, (x - a + 1.0 / k) / lk, out)
        out = np.where(flat, 1.0 / (k * lk), out)
        out = np.where(down, (b + 1.0 / k - x) / lk, out)
    return out


def example32_field(k_max: int, grid: GridSpec, rule=None, k0: int = 3) -> SampledField:
    """``f(x, y) = g(x) g(y)`` for the truncated tent profile ``g``."""
    if k_max < k0:
        raise ValueError(f"k_max={k_max} below the first admissible k={k0}")
    if grid.K < k_max + 1:
        raise GridError(f"example32 with k_max={k_max} needs truncation K >= {k_max + 1}, got K={grid.K}")
    g = tent_profile(grid.coords, k_max, rule, k0)
    return SampledField(grid, np.outer(g, g))


def example32_amalgam_comparator(k_max: int, k0: int = 3) -> float:
    s = sum(1.0 / (k * math.log(k)) for k in range(k0, k_max + 1))
    return s * s


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _gauss(fn, lo, hi) -> float:
    t = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
    return float(0.5 * (hi - lo) * np.sum(_GL_W * fn(t)))


def tent_norms(k_max: int, rule=None, k0: int = 3, k_from: int | None = None) -> dict:
    """Exact ``||g||^2``, ``||a||^2`` and ``||b||^2`` with ``a = g' + x g/2`` and
    ``b = g' - x g/2``, by Gauss-Legendre on each polynomial piece.

    With ``k_from`` only the tents ``k >= k_from`` are included.
    """
    gg = aa = bb = 0.0
    for k, a, b in _plateaus(k0, k_max, rule):
        if k_from is not None and k < k_from:
            continue
        lk = math.log(k)
        pieces = [
            (a - 1.0 / k, a, lambda x: (x - a + 1.0 / k) / lk, 1.0 / lk),
            (a, b, lambda x: np.full_like(x, 1.0 / (k * lk)), 0.0),
            (b, b + 1.0 / k, lambda x: (b + 1.0 / k - x) / lk, -1.0 / lk),
        ]
        for lo, hi, g, d in pieces:
            gg += _gauss(lambda x: g(x) ** 2, lo, hi)
            aa += _gauss(lambda x: (d + 0.5 * x * g(x)) ** 2, lo, hi)
            bb += _gauss(lambda x: (d - 0.5 * x * g(x)) ** 2, lo, hi)
    return {"g2": gg, "a2": aa, "b2": bb}


def example32_ladder_norms(k_max: int, rule=None, k0: int = 3) -> dict:
    """``||Zf||_2`` and ``||Zbar f||_2`` for ``f = g(x) g(y)``.

    ``Zf = a(x) g(y) - i g(x) a(y)`` with real factors, so the cross term
    vanishes and ``||Zf||^2 = 2 ||a||^2 ||g||^2``; likewise with ``b`` for ``Zbar``.
    The tents' ramps are much narrower than any practical grid step, hence the
    piecewise-exact route instead of finite differences.
    """
    n = tent_norms(k_max, rule, k0)
    return {"Zf": math.sqrt(2 * n["a2"] * n["g2"]), "Zbarf": math.sqrt(2 * n["b2"] * n["g2"]),
            "g": math.sqrt(n["g2"])}


def example32_increment_bound(k_lo: int, k_hi: int, rule=None, k0: int = 3) -> dict:
    """Triangle-inequality majorant of the change of ``||Zf||``, ``||Zbar f||`` from
    ``k_lo`` to ``k_hi``: with ``g = g_lo + t`` one has
    ``| ||a_hi|| ||g_hi|| - ||a_lo|| ||g_lo|| | <= ||a_t|| ||g_hi|| + ||a_lo|| ||t||``."""
    lo = tent_norms(k_lo, rule, k0)
    hi = tent_norms(k_hi, rule, k0)
    tail = tent_norms(k_hi, rule, k0, k_from=k_lo + 1)
    out = {}
    for key, name in (("a2", "Zf"), ("b2", "Zbarf")):
        out[name] = math.sqrt(2) * (math.sqrt(tail[key] * hi["g2"]) + math.sqrt(lo[key] * tail["g2"]))
    out["log_majorant"] = 2 * sum(1.0 / (k * math.log(k) ** 2) for k in range(k_lo + 1, k_hi + 1))
    return out


# ---------------------------------------------------------------------------
# divergence scans


@dataclass
class DivergenceScan:
    kind: str
    levels: list
    quantities: list
    comparators: list
    passes: list
    growth_slope: float
    extra: dict = field(default_factory=dict)

    def rows(self):
        return [(lv, q, c, p) for lv, q, c, p in zip(self.levels, self.quantities, self.comparators, self.passes)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "quantity", "comparator", "pass"])
            for lv, q, c, p in self.rows():
                w.writerow([lv, f"{q:.17g}", f"{c:.17g}", "true" if p else "false"])


SCAN_KINDS = ("example31_zbar", "example32_amalgam")


def divergence_scan(kind, levels, N: int = 16) -> DivergenceScan:
    if not isinstance(kind, str) or kind not in SCAN_KINDS:
        raise ValueError(f"kind mismatch: expected one of {SCAN_KINDS}, got {kind!r}")
    levels = [int(v) for v in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    qs, cs, ps = [], [], []
    extra = {}
    if kind == "example31_zbar":
        fn = bump_norm()
        extra["bump_norm"] = fn
        corrected = []
        amalg = []
        for M in levels:
            grid = GridSpec(N, M + 1)
            g = example31_field(M, grid)
            q = norm(zbar_apply(g)) ** 2
            c = 0.25 * fn * harmonic(M)
            zeta3 = sum(n ** -3.0 for n in range(1, M + 1))
            corrected.append(0.25 * fn * fn * harmonic(M) * zeta3)
            an = amalgam_norm(g, np.inf, 1).value
            amalg.append((an, example31_amalgam_comparator(M)))
            qs.append(q)
            cs.append(c)
            ps.append(q >= c)
        extra["corrected_comparator"] = corrected
        extra["amalgam"] = amalg
    else:
        for k in levels:
            grid = GridSpec(4, k + 1)
            f = example32_field(k, grid)
            q = amalgam_norm(f, np.inf, 1).value
            c = example32_amalgam_comparator(k)
            qs.append(q)
            cs.append(c)
            ps.append(0.9 <= q / c <= 1.1)
    slope = float(np.polyfit(np.log(levels), qs, 1)[0]) if len(levels) > 1 else 0.0
    return DivergenceScan(kind, levels, qs, cs, ps, slope, extra)


# ---------------------------------------------------------------------------
# uncertainty functional


def uncertainty_functional(f, grid: GridSpec | None = None, caps=None) -> dict:
    """``||Zf||^2 + ||Zbar f||^2`` on the grid and as ``sum (4n+2)|c_{m,n}|^2``.

    Accepts a sampled field (expanded at ``caps``) or an expansion
    (synthesised on ``grid``).
    """
    if isinstance(f, PhiExpansion):
        if grid is None:
            raise ValueError("an expansion needs a grid to be synthesised on")
        e = f
        field_ = synthesize(e, grid)
    else:
        field_ = f
        e = expand(f, caps or (5, 5))
    nf2 = norm(field_) ** 2
    grid_val = norm(z_apply(field_)) ** 2 + norm(zbar_apply(field_)) ** 2
    coeff_val = float(np.sum(2 * eigenvalues(e.caps) * np.abs(e.coeffs) ** 2))
    mass = np.sum(np.abs(e.coeffs) ** 2)
    n0 = np.sum(np.abs(e.coeffs[:, 0]) ** 2)
    return {
        "grid_functional": grid_val,
        "coeff_functional": coeff_val,
        "norm_sq": nf2,
        "ratio": grid_val / (2 * nf2),
        "coeff_ratio": coeff_val / (2 * float(mass)) if mass else float("nan"),
        "equality_case": bool(mass > 0 and n0 >= (1 - 1e-6) * mass),
    }


# ---------------------------------------------------------------------------
# weak BLT and L^{1/2} consequence reports


def weak_blt_report(g: SampledField, g_dual: SampledField, R: int = 2) -> dict:
    zg, zgd = z_apply(g), z_apply(g_dual)
    zbg, zbgd = zbar_apply(g), zbar_apply(g_dual)
    gg = inner_product(g, g_dual)
    zz = inner_product(zg, zgd)
    bb = inner_product(zbg, zbgd)
    out = {
        "g_gdual_re": gg.real, "g_gdual_im": gg.imag,
        "Zg_Zgdual_re": zz.real, "Zg_Zgdual_im": zz.imag,
        "Zbarg_Zbargdual_re": bb.real, "Zbarg_Zbargdual_im": bb.imag,
        "identity_residual": abs(gg + 0.5 * (zz - bb)),
        "norm_Zg": norm(zg), "norm_Zgdual": norm(zgd),
        "norm_Zbarg": norm(zbg), "norm_Zbargdual": norm(zbgd),
    }
    out["product"] = out["norm_Zg"] * out["norm_Zgdual"] * out["norm_Zbarg"] * out["norm_Zbargdual"]
    partial = []
    for r in range(1, R + 1):
        s = 0j
        for m in range(-r, r + 1):
            for n in range(-r, r + 1):
                s += inner_product(zg, twisted_translate(g_dual, m, n)) * \
                    inner_product(twisted_translate(g, m, n), zgd)
        partial.append(abs(s - zz))
        out[f"expansion_residual_R{r}"] = abs(s - zz)
    out["expansion_monotone"] = bool(all(b <= a for a, b in zip(partial, partial[1:])))
    return out


def _coeff_norm(e: PhiExpansion) -> float:
    return e.norm()


def remark56_checks(g: PhiExpansion, g_dual: PhiExpansion) -> dict:
    """The four paired quantities, computed on coefficients, with the
    identities ``||L^{1/2}g||^2 = (||Zg||^2 + ||Zbar g||^2)/2`` and
    ``-(Zbar R + Z Rbar)g/2 = L^{1/2} g`` checked exactly."""
    out = {}
    for tag, e in (("g", g), ("gdual", g_dual)):
        lh = l_power(e, 0.5)
        out[f"L_half_{tag}"] = _coeff_norm(lh)
        out[f"ZZbar_{tag}"] = _coeff_norm(z_coeffs(zbar_coeffs(e)))
        out[f"ZbarZ_{tag}"] = _coeff_norm(zbar_coeffs(z_coeffs(e)))
        out[f"L_{tag}"] = _coeff_norm(l_power(e, 1.0))
        out[f"norm_{tag}"] = _coeff_norm(e)
        out[f"ZbarR_{tag}"] = _coeff_norm(zbar_coeffs(riesz_apply("R", e)))
        out[f"ZRbar_{tag}"] = _coeff_norm(z_coeffs(riesz_apply("Rbar", e)))
        zn = _coeff_norm(z_coeffs(e)) ** 2
        zbn = _coeff_norm(zbar_coeffs(e)) ** 2
        out[f"item1_residual_{tag}"] = abs(_coeff_norm(lh) ** 2 - 0.5 * (zn + zbn))
        lhs = (zbar_coeffs(riesz_apply("R", e)) + z_coeffs(riesz_apply("Rbar", e))) * -0.5
        out[f"item4_residual_{tag}"] = (lhs - lh).norm()
    out["min_L_half"] = min(out["L_half_g"], out["L_half_gdual"])
    out["max_L_half"] = max(out["L_half_g"], out["L_half_gdual"])
    return out


# ---------------------------------------------------------------------------
# Beurling density


@dataclass(frozen=True, eq=False)
class LatticePointSet:
    d: int
    description: str
    points: np.ndarray = field(repr=False)
    radius: float = 0.0
    gap: float | None = None  # known minimum separation, if any

    def __post_init__(self):
        p = np.array(self.points, dtype=float, copy=True)
        if p.ndim != 2 or p.shape[1] != self.d:
            raise ValueError(f"points must have shape (n, {self.d})")
        if len(np.unique(p, axis=0)) != len(p):
            raise ValueError("points must be pairwise distinct")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def min_gap(self) -> float:
        """Smallest pairwise distance.

        Uses the known separation when the set was generated as a lattice;
        otherwise exact for up to 4096 points and a nearest-neighbour
        estimate over 256 sampled points beyond that.
        """
        if self.gap is not None:
            return self.gap
        p = self.points
        if len(p) < 2:
            return float("inf")
        n = len(p)
        idx = np.arange(n) if n <= 4096 else np.linspace(0, n - 1, 256).astype(int)
        best = np.inf
        for i in idx:
            d = np.linalg.norm(p - p[i], axis=1)
            d[i] = np.inf
            best = min(best, float(d.min()))
        return best

    @classmethod
    def lattice(cls, spacings, radius: float, description: str | None = None) -> "LatticePointSet":
        """Product lattice ``s_1 Z x ... x s_d Z`` inside the cube of half-side ``radius``."""
        axes = [s * np.arange(-int(radius // s), int(radius // s) + 1) for s in spacings]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        desc = description or " x ".join(f"{s:g}Z" for s in spacings)
        return cls(len(spacings), desc, pts, radius, float(min(spacings)))

    @classmethod
    def twisted_embedding(cls, a: float, b: float, radius: float) -> "LatticePointSet":
        """The rank-2 set ``{((am, bn), (bn, -am))}`` in R^4 indexing a twisted Gabor system."""
        mm = int(radius // a)
        nn = int(radius // b)
        m, n = np.meshgrid(np.arange(-mm, mm + 1), np.arange(-nn, nn + 1), indexing="ij")
        m, n = m.ravel(), n.ravel()
        pts = np.stack([a * m, b * n, b * n, -a * m], axis=1)
        keep = np.all(np.abs(pts) <= radius, axis=1)
        return cls(4, f"twisted embedding a={a:g}, b={b:g}", pts[keep], radius, math.sqrt(2) * min(a, b))


def _count_in_cubes(points: np.ndarray, centers: np.ndarray, r: float, chunk: int = 256) -> np.ndarray:
    half = r / 2
    out = np.empty(len(centers), dtype=np.int64)
    for i in range(0, len(centers), chunk):
        c = centers[i:i + chunk]
        lo = c - half
        hi = c + half
        inside = np.all((points[None, :, :] >= lo[:, None, :]) & (points[None, :, :] < hi[:, None, :]), axis=2)
        out[i:i + chunk] = inside.sum(axis=1)
    return out


def _aligned(v: float, step: float) -> bool:
    q = v / step
    return abs(q - round(q)) < 1e-9


def _count_by_table(points: np.ndarray, d: int, window: float, step: float, r: float,
                    n_ticks: int) -> np.ndarray:
    """Cube counts for every scan centre from a summed-area table of binned points.

    Valid when ``window`` and ``r/2`` are multiples of ``step``, so every cube
    face lies on a bin edge.
    """
    lo = -window - r / 2
    span = int(round(r / step))
    nb = n_ticks + span + 1
    edges = lo + step * np.arange(nb + 1)
    H, _ = np.histogramdd(points, bins=[edges] * d)
    S = np.zeros((nb + 1,) * d)
    S[(slice(1, None),) * d] = H
    for ax in range(d):
        S = np.cumsum(S, axis=ax)
    t = np.stack(np.meshgrid(*([np.arange(n_ticks)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    out = np.zeros(len(t))
    for corner in range(2 ** d):
        bits = [(corner >> k) & 1 for k in range(d)]
        idx = tuple(t[:, k] + bits[k] * span for k in range(d))
        sign = (-1) ** (d - sum(bits))
        out += sign * S[idx]
    return np.rint(out).astype(np.int64)


def beurling_density(points: LatticePointSet, radii, window: float = 2.0) -> dict:
    """``nu^+(r)/r^d`` and ``nu^-(r)/r^d`` over translates of the half-open cube of side ``r``.

    Translate centres run over a grid of step ``min_gap/2`` inside
    ``[-window, window]^d``.
    """
    radii = [float(r) for r in radii]
    if points.radius < 2 * max(radii):
        raise ValueError(f"insufficient point coverage: radius {points.radius} < 2 * max(radii) = {2 * max(radii)}")
    step = points.min_gap() / 2
    ticks = np.arange(-window, window + 1e-12, step)
    out = {"d": points.d, "scan_step": step, "scan_centers": len(ticks) ** points.d}
    for r in radii:
        # only points that can fall into some scanned cube matter
        reach = window + r / 2 + 1e-9
        pts = points.points[np.all(np.abs(points.points) <= reach, axis=1)]
        if _aligned(window, step) and _aligned(r / 2, step):
            counts = _count_by_table(pts, points.d, window, step, r, len(ticks))
        else:
            centers = np.stack([m.ravel() for m in np.meshgrid(*([ticks] * points.d), indexing="ij")], axis=1)
            counts = _count_in_cubes(pts, centers, r)
        vol = r ** points.d
        out[f"upper_r{r:g}"] = float(counts.max()) / vol
        out[f"lower_r{r:g}"] = float(counts.min()) / vol
    return out
