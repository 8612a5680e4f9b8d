"""The twelve acceptance criteria at their stated tolerances.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts.  Criteria 6, 7 and 9 fail under the stated conventions; see the
decision notes for the analysis.
"""
import math
import time

import numpy as np
import pytest

from twistgabor import zak
from twistgabor.blt import (
    LatticePointSet, beurling_density, bump_norm, divergence_scan, example32_ladder_norms, harmonic,
    uncertainty_functional,
)
from twistgabor.cli import chi_window, perturbed_chi
from twistgabor.field import SampledField, make_grid
from twistgabor.hermite import PhiExpansion, special_hermite
from twistgabor.twistop import commensurate_shifts, lemma41_audit
from twistgabor.weyl import hs_inner, prop11_audit, weyl_kernel
from twistgabor.field import inner_product

from conftest import ACCEPTANCE, interior_field


def record(n, title, checks, t0, limit):
    """``checks`` maps a short label to ``(ok, detail)``."""
    dt = time.perf_counter() - t0
    checks = dict(checks)
    checks["runtime"] = (dt < limit, f"{dt:.1f}s < {limit}s")
    ok = all(c[0] for c in checks.values())
    failed = [f"{k} ({d})" for k, (c, d) in checks.items() if not c]
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
    if failed:
        line += "  | failed: " + "; ".join(failed)
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_criterion_01_zak_unitarity():
    t0 = time.perf_counter()
    grid = make_grid(16, 4)
    rng = np.random.default_rng(42)
    fields = [chi_window(grid), special_hermite(0, 0, grid)]
    fields += [SampledField(grid, rng.standard_normal((grid.M, grid.M)) + 1j * rng.standard_normal((grid.M, grid.M)))
               for _ in range(5)]
    unit = inv = 0.0
    for f in fields:
        G = zak.zak_forward(f, 8)
        unit = max(unit, abs(G.norm() - f.norm()) / f.norm())
        inv = max(inv, (zak.zak_inverse(G, 4, 16) - f).norm() / f.norm())
    record(1, "Zak unitarity and inversion", {
        "unitarity": (unit <= 1e-10, f"{unit:.2e}"),
        "inversion": (inv <= 1e-10, f"{inv:.2e}"),
    }, t0, 10)


def test_criterion_02_quasiperiodicity_covariance():
    t0 = time.perf_counter()
    grid = make_grid(16, 6)
    f = special_hermite(0, 0, grid)
    qp = zak.quasiperiodicity_check(zak.zak_forward(f, 16), f)["max_residual"]
    h = interior_field(make_grid(8, 6), np.random.default_rng(42))
    cov = max(zak.zak_covariance_residual(h, m, n) for m in range(-2, 3) for n in range(-2, 3))
    record(2, "quasi-periodicity and covariance", {
        "quasi-periodicity": (qp <= 1e-10, f"{qp:.2e}"),
        "covariance": (cov <= 1e-10, f"{cov:.2e}"),
    }, t0, 10)


def test_criterion_03_orthonormal_basis():
    t0 = time.perf_counter()
    grid = make_grid(16, 6)
    G = zak.zak_forward(chi_window(grid))
    dev = float(np.max(np.abs(np.abs(G.values) - 1)))
    g = perturbed_chi(grid, 0.05)
    Gp = zak.zak_forward(g, 17)
    fb = zak.frame_bounds(Gp)
    bi = zak.biorthogonality_check(g, zak.dual_window(Gp), 2)["max_residual"]
    record(3, "orthonormal-basis criterion", {
        "|Zchi| = 1": (dev == 0.0, f"{dev:.1e}"),
        "0 < A <= B": (0 < fb.A_est <= fb.B_est, f"A={fb.A_est:.4f} B={fb.B_est:.4f}"),
        "biorthogonality": (bi <= 1e-6, f"{bi:.2e}"),
    }, t0, 60)


def test_criterion_04_zero_existence():
    t0 = time.perf_counter()
    f = special_hermite(0, 0, make_grid(32, 6))
    A = [h[2] for h in zak.frame_bounds_refinement(f, (8, 16, 32)).history]
    w = zak.winding(zak.ZakEvaluator(special_hermite(0, 0, make_grid(16, 6))), zak.obstruction_loop())
    record(4, "zero existence and winding obstruction", {
        "A_est decreasing": (A[0] > A[1] > A[2], ", ".join(f"{a:.2e}" for a in A)),
        "A(32) < A(8)/4": (A[2] < A[0] / 4, f"{A[2]:.2e}"),
        "winding -2pi": (abs(w.total + 2 * math.pi) <= 1e-2, f"{w.total:.6f}"),
    }, t0, 60)


def test_criterion_05_uncertainty():
    t0 = time.perf_counter()
    grid = make_grid(16, 8)
    worst = min(uncertainty_functional(PhiExpansion.random((3, 3), np.random.default_rng(s)), grid)["ratio"]
                for s in range(50))
    r0 = uncertainty_functional(special_hermite(0, 0, grid))
    r1 = uncertainty_functional(special_hermite(0, 1, grid))
    record(5, "uncertainty inequality", {
        "50 expansions": (worst >= 1 - 1e-3, f"min ratio {worst:.6f}"),
        "equality at n=0": (r0["equality_case"] and abs(r0["ratio"] - 1) <= 1e-4, f"{r0['ratio']:.7f}"),
        "phi01 ratio 3": (abs(r1["ratio"] - 3) <= 1e-3, f"{r1['ratio']:.6f}"),
    }, t0, 30)


def _smooth_fields(grid, count=10, seed=42):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x0, y0 = rng.uniform(-0.5, 0.5, 2)
        s = rng.uniform(1.0, 2.0)
        a, b = rng.standard_normal(2)
        out.append(SampledField.from_function(
            grid, lambda x, y: np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / s) * (1 + 0.2 * a * x + 0.2j * b * y)))
    return out


def test_criterion_06_weyl_plancherel():
    t0 = time.perf_counter()
    grid, g1 = make_grid(16, 8), make_grid(16, 4)
    fs = _smooth_fields(grid)
    ks = [weyl_kernel(f, g1) for f in fs]
    ratios = [k.hs_norm() / f.norm() for k, f in zip(ks, fs)]
    pol = max(abs(hs_inner(ka, kb) - 0.5 * inner_product(fa, fb)) / (fa.norm() * fb.norm())
              for ka, kb, fa, fb in zip(ks, ks[1:], fs, fs[1:]))
    worst = max(abs(r - 0.5) for r in ratios)
    record(6, "Weyl Plancherel", {
        "norm ratio 1/2": (worst <= 2e-3, f"ratios in [{min(ratios):.4f}, {max(ratios):.4f}]"),
        "polarized": (pol <= 2e-3, f"{pol:.2e}"),
    }, t0, 60)


def test_criterion_07_prop11():
    t0 = time.perf_counter()
    r = prop11_audit(16, 8)
    record(7, "ladder, intertwining, commutator, adjoint", {
        "ladder": (r["pass_ladder"], f"{r['ladder_residual']:.2e}"),
        "intertwining": (r["pass_intertwine"],
                         f"Z {r['intertwine_residual_Z']:.2e}, Zbar {r['intertwine_residual_Zbar']:.2e}"),
        "commutator": (r["pass_commutator"], f"{r['commutator_residual']:.2e}"),
        "adjoint": (r["pass_adjoint"], f"{r['adjoint_residual']:.2e}"),
    }, t0, 60)


def test_criterion_08_lemma41_oscillation():
    t0 = time.perf_counter()
    grid = make_grid(16, 6)
    f = special_hermite(0, 0, grid)
    shifts = commensurate_shifts(grid, 20, 0.5, 42)
    lem = lemma41_audit(f, shifts)
    osc = [zak.oscillation_audit(f, e) for e in shifts]
    record(8, "oscillation lemma and its corollaries", {
        "lemma margins": (lem["pass"] and lem["count"] == 20,
                          f"min margins {lem['min_margin_1']:.2e}, {lem['min_margin_2']:.2e}, {lem['min_margin_3']:.2e}"),
        "oscillation bounds": (all(o["pass"] for o in osc),
                               f"min margin {min(min(o['margin_1'], o['margin_2']) for o in osc):.2e}"),
        "C decreasing in r": (all(o["C_decreasing"] for o in osc), ""),
    }, t0, 120)


def test_criterion_09_example31():
    t0 = time.perf_counter()
    scan = divergence_scan("example31_zbar", [4, 8, 16])
    q, c = scan.quantities, scan.comparators
    fn = bump_norm()
    growth = q[-1] - q[0]
    need = 0.9 * 0.25 * fn * (harmonic(16) - harmonic(4))
    amal = max(abs(a - b) for a, b in scan.extra["amalgam"])
    record(9, "first counterexample scan", {
        "lower bound": (all(scan.passes), ", ".join(f"{x:.2e}>={y:.2e}" for x, y in zip(q, c))),
        "growth": (growth >= need, f"{growth:.2e} vs {need:.2e}"),
        "amalgam norm": (amal <= 1e-6, f"{amal:.1e}"),
    }, t0, 60)


def test_criterion_10_example32():
    t0 = time.perf_counter()
    scan = divergence_scan("example32_amalgam", [10, 20, 40])
    match = max(abs(q / c - 1) for q, c in zip(scan.quantities, scan.comparators))
    grows = all(b > a for a, b in zip(scan.quantities, scan.quantities[1:]))
    lo, hi = example32_ladder_norms(20), example32_ladder_norms(40)
    ch = max(abs(hi[k] / lo[k] - 1) for k in ("Zf", "Zbarf"))
    record(10, "second counterexample scan", {
        "amalgam match": (match <= 1e-6, f"{match:.1e}"),
        "amalgam grows": (grows, ", ".join(f"{v:.4f}" for v in scan.quantities)),
        "ladder norms settle": (ch < 0.05, f"{100 * ch:.2f}%"),
    }, t0, 60)


def test_criterion_11_derivative_identities():
    t0 = time.perf_counter()
    f = special_hermite(0, 0, make_grid(16, 8))
    ref = zak.zak_derivative_identity(f, 64)
    coarse = zak.zak_derivative_identity(f, 32)
    worst = max(ref["residual_12"], ref["residual_13"])
    gain = min(coarse["residual_12"] / ref["residual_12"], coarse["residual_13"] / ref["residual_13"])
    record(11, "Zak-side Z and Zbar identities", {
        "reference residual": (worst <= 1e-3, f"{worst:.2e} at K=8, N_w=64"),
        "refinement gain": (gain >= 8, f"{gain:.1f}x from N_w=32"),
    }, t0, 60)


def test_criterion_12_density():
    t0 = time.perf_counter()
    checks = {}
    for name, pts, radii, expect, tol in (
        ("Z^2", LatticePointSet.lattice([1, 1], 42), [10, 20], 1.0, 0.05),
        ("(2Z)^2", LatticePointSet.lattice([2, 2], 42), [10, 20], 0.25, 0.05),
        ("Z^2 x (2Z)^2", LatticePointSet.lattice([1, 1, 2, 2], 22), [6, 10], 0.25, 0.10),
    ):
        r = beurling_density(pts, radii)
        vals = [r[f"{s}_r{x:g}"] for x in radii for s in ("upper", "lower")]
        checks[name] = (all(abs(v - expect) <= tol * expect for v in vals), ", ".join(f"{v:.3f}" for v in vals))
    record(12, "Beurling density", checks, t0, 60)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
