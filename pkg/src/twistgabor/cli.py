"""Command-line front end: ``twistgabor <subcommand> [flags]``.

Exit codes: 0 pass, 1 usage or I/O error, 2 a failed audit (the report is
still written, with its fail flags set).
"""
from __future__ import annotations

import argparse
import shlex
import sys
import time

import numpy as np

from . import blt, hermite, twistop, weyl, zak
from .field import FieldFormatError, GridError, GridSpec, SampledField, make_grid, read_field, write_field
from .report import AnalysisReport

EXIT_OK, EXIT_USAGE, EXIT_AUDIT = 0, 1, 2
PERTURB_CELL = (1, 0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# windows


def chi_window(grid: GridSpec) -> SampledField:
    X, Y = grid.mesh()
    return SampledField(grid, ((X >= 0) & (X < 1) & (Y >= 0) & (Y < 1)).astype(float))


def perturbed_chi(grid: GridSpec, amp: float = 0.05) -> SampledField:
    """``chi_Q + amp sin^2(pi x) sin^2(pi y)`` on the unit cell at ``PERTURB_CELL``.

    The bump sits on a neighbouring cell, so the Zak transform becomes
    ``1 + amp c e^{...}`` with ``|amp c| < 1``: bounded away from zero.
    """
    X, Y = grid.mesh()
    cx, cy = PERTURB_CELL
    cell = (X >= cx) & (X < cx + 1) & (Y >= cy) & (Y < cy + 1)
    bump = np.where(cell, np.sin(np.pi * X) ** 2 * np.sin(np.pi * Y) ** 2, 0.0)
    return SampledField(grid, chi_window(grid).values + amp * bump)


def synth_window(kind: str, params, grid: GridSpec) -> SampledField:
    params = list(params or [])

    def need(k, cast=int):
        if len(params) != k:
            raise UsageError(f"window {kind!r} takes {k} parameter(s), got {len(params)}")
        try:
            return [cast(p) for p in params]
        except ValueError as exc:
            raise UsageError(f"bad parameter for {kind!r}: {exc}") from None

    if kind == "chi":
        need(0)
        return chi_window(grid)
    if kind == "gaussian":
        need(0)
        return hermite.special_hermite(0, 0, grid)
    if kind == "hermite":
        m, n = need(2)
        return hermite.special_hermite(m, n, grid)
    if kind == "example31":
        (M,) = need(1)
        return blt.example31_field(M, grid)
    if kind == "example32":
        (k,) = need(1)
        return blt.example32_field(k, grid)
    if kind == "perturbed-chi":
        (amp,) = need(1, float) if params else (0.05,)
        return perturbed_chi(grid, amp)
    raise UsageError(f"unknown window kind {kind!r}")


WINDOWS = ("chi", "gaussian", "hermite", "example31", "example32", "perturbed-chi")


# ---------------------------------------------------------------------------
# helpers


def _grid(a) -> GridSpec:
    return make_grid(a.resolution, a.truncation)


def _load(a, attr="inp") -> SampledField:
    path = getattr(a, attr)
    if path:
        return read_field(path)
    if a.window:
        return synth_window(a.window, a.params, _grid(a))
    raise UsageError("need --in or --window")


def _floats(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _complex(text: str) -> complex:
    v = _floats(text)
    if len(v) == 1:
        return complex(v[0])
    if len(v) != 2:
        raise UsageError(f"expected 're,im', got {text!r}")
    return complex(v[0], v[1])


def _fgrid(rep: AnalysisReport, f: SampledField):
    rep.grid.update({"N": f.spec.N, "K": f.spec.K})


# ---------------------------------------------------------------------------
# subcommands; each fills ``rep`` and returns nothing


def cmd_synth(a, rep):
    if not a.window:
        raise UsageError("synth needs --window")
    f = synth_window(a.window, a.params, _grid(a))
    _fgrid(rep, f)
    rep.add("window", a.window)
    rep.add("norm", f.norm())
    if a.out:
        write_field(f, a.out)
    if a.csv:
        from .field import write_field_csv
        write_field_csv(f, a.csv)


def cmd_zak(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    G = zak.zak_forward(f, a.wres)
    rep.grid["N_w"] = G.N_w
    back = zak.zak_inverse(G, f.spec.K, f.spec.N)
    fb = zak.frame_bounds(G)
    rep.add("norm_f", f.norm())
    rep.add("norm_G", G.norm())
    unit = abs(G.norm() - f.norm())
    inv = (back - f).norm()
    rep.add("unitarity_residual", unit)
    rep.add("inversion_residual", inv)
    rep.add("A_est", fb.A_est)
    rep.add("B_est", fb.B_est)
    for k, v in zip("xyrs", fb.argmin):
        rep.add(f"argmin_{k}", v)
    rep.flag("unitarity", unit <= a.tol * max(1.0, f.norm()))
    rep.flag("inversion", inv <= a.tol * max(1.0, f.norm()))
    if a.out:
        zak.write_zak(G, a.out)


def cmd_framebounds(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    L = a.refine or 1
    levels = [8 * 2 ** j for j in range(L)]
    bad = [n for n in levels if f.spec.N % n]
    if bad:
        raise UsageError(f"refinement level(s) {bad} do not divide resolution N={f.spec.N}")
    if a.wres:
        fb = zak.frame_bounds_refinement(f, levels, wres=lambda nz: a.wres)
    else:
        fb = zak.frame_bounds_refinement(f, levels)
    for nz, nw, A, B in fb.history:
        rep.add(f"A_est_Nz{nz}", A)
        rep.add(f"B_est_Nz{nz}", B)
        rep.add(f"N_w_Nz{nz}", nw)
    As = [h[2] for h in fb.history]
    rep.add("A_est", fb.A_est)
    rep.add("B_est", fb.B_est)
    rep.add("A_strictly_decreasing", bool(all(y < x for x, y in zip(As, As[1:]))) if len(As) > 1 else False)
    if a.csv:
        import csv
        with open(a.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N_z", "N_w", "A_est", "B_est"])
            for row in fb.history:
                w.writerow([row[0], row[1], f"{row[2]:.17g}", f"{row[3]:.17g}"])


def cmd_dual(a, rep):
    g = _load(a)
    _fgrid(rep, g)
    G = zak.zak_forward(g, a.wres)
    rep.grid["N_w"] = G.N_w
    rep.add("min_abs_G", float(np.min(np.abs(G.values))))
    rep.add("guard", a.guard)
    rep.add("regularized", a.delta is not None)
    try:
        d = zak.dual_window(G, a.guard, a.delta)
    except zak.NotAFrameError as exc:
        rep.add("error", str(exc))
        rep.flag("exact_frame", False)
        return
    rep.flag("exact_frame", True)
    rep.add("norm_dual", d.norm())
    if a.out:
        write_field(d, a.out)


def cmd_biortho(a, rep):
    g = _load(a)
    if not a.dual:
        raise UsageError("biortho needs --dual")
    d = read_field(a.dual)
    _fgrid(rep, g)
    res = zak.biorthogonality_check(g, d, a.range)
    rep.add("range", a.range)
    rep.add("max_residual", res["max_residual"])
    rep.add("inner_00", res["table"][(0, 0)])
    rep.flag("biorthogonal", res["max_residual"] <= a.tol)


def cmd_weyl(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    g1 = make_grid(f.spec.N, a.k1) if a.k1 else weyl.default_grid1d(f.spec)
    rep.grid["K1"] = g1.K
    k = weyl.weyl_kernel(f, g1)
    ratio = k.hs_norm() / f.norm()
    rep.add("hs_norm", k.hs_norm())
    rep.add("norm_f", f.norm())
    rep.add("plancherel_ratio", ratio)
    tw = weyl.intertwine_residuals(f, g1)
    rep.update(tw, "intertwine_")
    rep.flag("plancherel", abs(ratio - 0.5) <= 2e-3)
    rep.flag("intertwine", max(tw.values()) <= 5e-3)
    if a.compose_with:
        # W(f x g) against W(g) W(f); the O(M^4) convolution is size-guarded
        g = read_field(a.compose_with)
        d = weyl.homomorphism_distance(f, g, g1, override=a.override_size)
        rep.add("homomorphism_distance", d)
        rep.add("homomorphism_relative", d / (k.hs_norm() * weyl.weyl_kernel(g, g1).hs_norm()))
    if a.out:
        weyl.write_kernel(k, a.out)


def cmd_uncertainty(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    caps = (a.caps, a.caps)
    res = blt.uncertainty_functional(f, caps=caps)
    rep.grid["caps"] = a.caps
    rep.update(res)
    rep.flag("inequality", res["ratio"] >= 1 - 1e-3)


def cmd_blt_scan(a, rep):
    levels = [int(v) for v in _floats(a.levels)]
    scan = blt.divergence_scan(a.kind, levels, N=a.resolution)
    rep.grid["N"] = a.resolution if a.kind == "example31_zbar" else 4
    rep.add("kind", a.kind)
    for lv, q, c, p in scan.rows():
        rep.add(f"quantity_L{lv}", q)
        rep.add(f"comparator_L{lv}", c)
        rep.flag(f"level_L{lv}", p)
    rep.add("growth_slope", scan.growth_slope)
    for key, v in scan.extra.items():
        if isinstance(v, float):
            rep.add(key, v)
    if a.kind == "example31_zbar":
        for lv, c in zip(levels, scan.extra["corrected_comparator"]):
            rep.add(f"squared_norm_comparator_L{lv}", c)
        for lv, (an, ac) in zip(levels, scan.extra["amalgam"]):
            rep.add(f"amalgam_L{lv}", an)
            rep.flag(f"amalgam_L{lv}", abs(an - ac) <= 1e-6 * max(1.0, ac))
    if a.csv:
        scan.write_csv(a.csv)


def cmd_density(a, rep):
    radii = _floats(a.radii)
    cover = 2 * max(radii) + 2
    if a.twisted:
        ab = _floats(a.twisted)
        if len(ab) != 2:
            raise UsageError("--twisted takes 'a,b'")
        pts = blt.LatticePointSet.twisted_embedding(ab[0], ab[1], cover)
    else:
        pts = blt.LatticePointSet.lattice(_floats(a.lattice), cover)
    rep.add("description", pts.description)
    res = blt.beurling_density(pts, radii)
    rep.update(res)
    if a.expect is not None:
        for r in radii:
            for side in ("upper", "lower"):
                v = res[f"{side}_r{r:g}"]
                rep.flag(f"{side}_r{r:g}", abs(v - a.expect) <= a.tol * a.expect)


def cmd_audit(a, rep):
    suites = ("prop11", "lemma41", "zak") if a.suite == "all" else (a.suite,)
    rep.grid.update({"N": a.resolution, "K": a.truncation})
    for s in suites:
        if s == "prop11":
            res = weyl.prop11_audit(a.resolution, a.truncation)
        elif s == "lemma41":
            grid = _grid(a)
            f = hermite.special_hermite(0, 0, grid)
            res = twistop.lemma41_audit(f, twistop.commensurate_shifts(grid, 20, 0.5, a.seed))
        elif s == "zak":
            grid = _grid(a)
            f = hermite.special_hermite(0, 0, grid)
            G = zak.zak_forward(f, a.wres)
            back = zak.zak_inverse(G, grid.K, grid.N)
            res = {"unitarity_residual": abs(G.norm() - f.norm()),
                   "inversion_residual": (back - f).norm()}
            res["pass"] = max(res.values()) <= a.tol
        else:
            raise UsageError(f"unknown suite {s!r}")
        rep.update(res, f"{s}_")


def cmd_winding(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    ev = zak.ZakEvaluator(f)
    if a.loop == "obstruction":
        loop = zak.obstruction_loop()
    else:
        c = _floats(a.center)
        if len(c) != 4:
            raise UsageError("--center takes 'x,y,r,s'")
        plane = tuple(a.plane.split(","))
        loop = zak.circle_loop(c, a.radius, plane)
    try:
        w = zak.winding(ev, loop)
    except zak.WindingError as exc:
        rep.add("error", str(exc))
        rep.flag("valid", False)
        return
    rep.add("total_phase", w.total)
    rep.add("winding_number", w.winding_number)
    rep.add("max_step", w.max_step)
    for i, inc in enumerate(w.increments):
        rep.add(f"segment{i + 1}", inc)
    rep.flag("valid", w.valid)


def cmd_smooth(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    G = zak.zak_forward(f, a.wres)
    rep.grid["N_w"] = G.N_w
    rep.add("r", a.r)
    rep.update(zak.lipschitz_audit(G, a.r, seed=a.seed), "lipschitz_")
    if a.psi:
        rep.update(zak.psi_audit(G, a.r), "psi_")


def cmd_oscillation(a, rep):
    f = _load(a)
    _fgrid(rep, f)
    res = zak.oscillation_audit(f, _complex(a.eps), N_w=a.wres or 16)
    rep.update(res)


COMMANDS = {
    "synth": cmd_synth, "zak": cmd_zak, "framebounds": cmd_framebounds, "dual": cmd_dual,
    "biortho": cmd_biortho, "weyl": cmd_weyl, "uncertainty": cmd_uncertainty,
    "blt-scan": cmd_blt_scan, "density": cmd_density, "audit": cmd_audit,
    "winding": cmd_winding, "smooth": cmd_smooth, "oscillation": cmd_oscillation,
}


# ---------------------------------------------------------------------------
# self-tests: the trivial cases of each subcommand, in memory


def _selftest(name: str) -> dict:
    g = make_grid(8, 4)
    chi = chi_window(g)
    out = {}
    if name == "synth":
        out["chi_norm"] = abs(chi.norm() - 1) < 1e-12
        gs = make_grid(16, 6)
        out["hermite00_is_gaussian"] = (synth_window("hermite", [0, 0], gs) - synth_window("gaussian", [], gs)).norm() < 1e-6
        try:
            blt.example31_field(10, g)
            out["example31_names_K"] = False
        except GridError as exc:
            out["example31_names_K"] = "K" in str(exc)
    elif name in ("zak", "framebounds", "audit"):
        G = zak.zak_forward(chi)
        out["chi_unimodular"] = float(np.max(np.abs(np.abs(G.values) - 1))) < 1e-12
        out["roundtrip"] = (zak.zak_inverse(G, 4, 8) - chi).norm() < 1e-10
    elif name in ("dual", "biortho"):
        d = zak.dual_window(zak.zak_forward(chi))
        out["chi_self_dual"] = (d - chi).norm() < 1e-10
        out["biortho"] = zak.biorthogonality_check(chi, d, 1)["max_residual"] < 1e-10
    elif name == "weyl":
        k = weyl.weyl_kernel(SampledField.zeros(g))
        out["zero_kernel"] = k.hs_norm() == 0.0
    elif name == "uncertainty":
        gs = make_grid(16, 6)
        r = blt.uncertainty_functional(hermite.special_hermite(0, 0, gs), caps=(3, 3))
        out["gaussian_equality"] = abs(r["ratio"] - 1) < 1e-4
    elif name == "blt-scan":
        out["bump_sup"] = abs(blt.BUMP_SUP - np.exp(-8)) < 1e-15
        out["harmonic"] = abs(blt.harmonic(4) - 25 / 12) < 1e-14
    elif name == "density":
        pts = blt.LatticePointSet.lattice([1, 1], 12)
        r = blt.beurling_density(pts, [4])
        out["unit_lattice"] = r["upper_r4"] == 1.0 and r["lower_r4"] == 1.0
    elif name == "winding":
        w = zak.winding(lambda z, w: np.exp(1j * np.real(z)) + 0 * w, [(0, 0), (1, 0)])
        out["linear_phase"] = abs(w.total - 1.0) < 1e-12
    elif name == "smooth":
        G = zak.zak_forward(chi)
        out["unimodular_stays_bounded"] = float(np.max(np.abs(zak.smooth_gr(G, 0.25).values))) <= 1 + 1e-12
    elif name == "oscillation":
        out["zero_shift"] = zak.oscillation_audit(hermite.special_hermite(0, 0, make_grid(8, 4)), 0)["pass"]
    return out


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--resolution", type=int, default=16, help="samples per unit length N")
    common.add_argument("--truncation", type=int, default=6, help="half-width K of the domain")
    common.add_argument("--wres", type=int, default=None, help="w-grid size N_w")
    common.add_argument("--guard", type=float, default=zak.DEFAULT_GUARD)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out")
    common.add_argument("--report")
    common.add_argument("--csv")
    common.add_argument("--refine", type=int, default=None, help="number of refinement levels")
    common.add_argument("--override-size", action="store_true")
    common.add_argument("--selftest", action="store_true")
    common.add_argument("--in", dest="inp", help="input field (TGF1)")
    common.add_argument("--window", choices=WINDOWS)
    common.add_argument("--params", nargs="*", default=[], help="window parameters")

    p = _Parser(prog="twistgabor", description="Twisted time-frequency analysis on L2(C).")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "dual":
            sp.add_argument("--delta", type=float, default=None, help="Tikhonov regularization")
        elif name == "biortho":
            sp.add_argument("--dual")
            sp.add_argument("--range", type=int, default=2)
        elif name == "weyl":
            sp.add_argument("--k1", type=int, default=None)
            sp.add_argument("--compose-with", default=None, help="second field for the product check")
        elif name == "uncertainty":
            sp.add_argument("--caps", type=int, default=5)
        elif name == "blt-scan":
            sp.add_argument("--kind", choices=blt.SCAN_KINDS, default="example31_zbar")
            sp.add_argument("--levels", default="4,8,16")
        elif name == "density":
            sp.add_argument("--lattice", default="1,1", help="axis spacings")
            sp.add_argument("--twisted", default=None, help="'a,b' rank-2 embedding")
            sp.add_argument("--radii", default="10,20")
            sp.add_argument("--expect", type=float, default=None)
        elif name == "audit":
            sp.add_argument("--suite", choices=("prop11", "lemma41", "zak", "all"), default="all")
        elif name == "winding":
            sp.add_argument("--loop", choices=("obstruction", "circle"), default="obstruction")
            sp.add_argument("--center", default="0.5,0.3,0.2,0.5")
            sp.add_argument("--radius", type=float, default=0.2)
            sp.add_argument("--plane", default="x,s")
        elif name == "smooth":
            sp.add_argument("--r", type=float, default=0.25)
            sp.add_argument("--psi", action="store_true", help="also run the psi bound audit")
        elif name == "oscillation":
            sp.add_argument("--eps", default="0.125,0")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        a = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if not a.command:
        print("twistgabor: missing subcommand", file=sys.stderr)
        return EXIT_USAGE
    if a.command == "density" and "--tol" not in argv:
        a.tol = 0.05
    if a.command in ("biortho",) and "--tol" not in argv:
        a.tol = 1e-6
    rep = AnalysisReport(command=shlex.join(["twistgabor", *argv]))
    t0 = time.perf_counter()
    try:
        if a.selftest:
            for k, v in _selftest(a.command).items():
                rep.flag(f"selftest_{k}", v)
        else:
            COMMANDS[a.command](a, rep)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FieldFormatError) as exc:
        print(f"twistgabor: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GridError, hermite.CapError, ValueError) as exc:
        print(f"twistgabor {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep.wall_time = time.perf_counter() - t0
    text = rep.to_json()
    try:
        if a.report:
            rep.write(a.report)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"twistgabor: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if rep.passed else EXIT_AUDIT


if __name__ == "__main__":
    sys.exit(main())
