"""Command-line interface: ``holocap <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import channel_io
from .capacity import CapacityConfig, CapacityResult, capacity, mesh_lower_bound, planar_capacity
from .qubit import BlochVector, InvalidStateError, NotCompletelyPositiveError, QubitChannel, entropy, log_coefficients
from .product import (
    additivity_scan,
    concavity_curve,
    g_slice,
    min_output_entropy_product_floor,
)
from .relent import critical_census, equidistance, landscape, sup_relent
from .sphere import angular_distance

log = logging.getLogger("holocap")

FOUR_STATE = QubitChannel(0.6, 0.601, 0.5, 0.021, 0.0, 0.495)

# reference values
TABLE1 = {
    "capacity": 0.3214851589,
    "probs": [0.2322825705, 0.2133220819, 0.2771976738, 0.2771976738],
    "inputs": [
        [0.2530759862, 0.0, 0.9674464043],
        [0.9783950999, 0.0, 0.2067438718],
        [-0.4734087533, 0.8646461389, -0.1681404376],
        [-0.4734087533, -0.8646461389, -0.1681404376],
    ],
    "xi": [-0.0396622022, 0.0, -0.9621071440],
    "xi0": 0.9785055621,
    "log_coefficients": [1.299989, 0.039662, 0.962105],
}
TABLE2 = [
    (QubitChannel(0.6, 0.6, 0.5, 0.0, 0.0, 0.5), 0.324990),
    (QubitChannel(0.6, 0.601, 0.5, 0.0, 0.0, 0.5), 0.325555),
    (QubitChannel(0.6, 0.601, 0.5, 0.0, 0.0, 0.495), 0.320535),
]
TABLE3_CAPACITY = 0.3214609877
TABLE4 = {"sup": 0.321505535, "location": [-0.539291, 0.822613, -0.180202]}
MESH_KS = (10, 20, 40, 80)
MU_VALUES = (0.5, 1 / math.sqrt(2), 0.75)
MU_FLOORS = {1 / math.sqrt(2): 1.2017521, 0.75: 1.087129}


# ---------------------------------------------------------------------------
# helpers

def _parse_floats(text: str, n: Optional[int] = None) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _load_channel(args) -> QubitChannel:
    return channel_io.parse_channel_file(args.channel, allow_noncp=args.allow_noncp)


def _config(args) -> CapacityConfig:
    kw = {"seed": args.seed, "allow_noncp": args.allow_noncp}
    if getattr(args, "k", None):
        kw["mesh_ks"] = (args.k,)
    if getattr(args, "tol", None):
        kw["tol"] = args.tol
    if getattr(args, "starts", None):
        kw["rotations"] = args.starts
    return CapacityConfig(**kw)


def _resolve_avg(args, ch: QubitChannel) -> np.ndarray:
    if args.avg == "from-capacity":
        return capacity(ch, _config(args)).ensemble.average().as_array()
    return BlochVector(*_parse_floats(args.avg, 3)).as_array()


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def _emit(obj, out: Optional[str]) -> None:
    text = channel_io.dumps(obj)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def format_table(ch: QubitChannel, res: CapacityResult) -> str:
    """Ensemble table: probability, input, output and output entropy per row."""
    lines = [f"capacity = {res.capacity:.10f}"]
    head = f"{'probability':>13}  {'input (x, y, z)':^38}  {'output (x, y, z)':^38}  {'S[out]':>12}"
    lines.append(head)

    def vec(v):
        return "(" + ", ".join(f"{c:11.8f}" for c in v) + ")"

    for p, r in res.ensemble.entries:
        out = ch(r.as_array())
        lines.append(f"{p:13.10f}  {vec(r.as_array())}  {vec(out)}  {entropy(out):12.10f}")
    avg = res.ensemble.average().as_array()
    lines.append(f"{'average':>13}  {vec(avg)}  {vec(ch(avg))}  {entropy(ch(avg)):12.10f}")
    lines.append("xi = " + vec(res.xi) + f"   xi0 = {res.xi0:.10f}")
    lines.append(f"dual gap = {res.dual_gap:.3e}   max violation = {res.max_violation:.3e}   "
                 f"gradient norm = {res.grad_norm:.3e}   seed = {res.seed}")
    lines.extend(f"note: {n}" for n in res.notes)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands

def cmd_capacity(args) -> int:
    ch = _load_channel(args)
    cfg = _config(args)
    res = planar_capacity(ch, args.plane, config=cfg) if args.plane else capacity(ch, cfg)
    if args.json:
        _emit({"channel": ch.as_dict(), **res.as_dict()}, args.out)
    else:
        print(format_table(ch, res))
    return 0


def cmd_relent_map(args) -> int:
    ch = _load_channel(args)
    grid = landscape(ch, _resolve_avg(args, ch), args.n_phi, args.n_theta)
    grid.to_csv(args.out)
    return 0


def cmd_census(args) -> int:
    ch = _load_channel(args)
    pts = critical_census(ch, _resolve_avg(args, ch), args.n_phi, args.n_theta)
    _emit([p.as_dict() for p in pts], args.out)
    return 0


def cmd_additivity(args) -> int:
    ch = _load_channel(args)
    res = capacity(ch, _config(args))
    p_values = _parse_floats(args.p_values) if args.p_values else None
    scan = additivity_scan(ch, res.ensemble.average().as_array(), res.capacity, samples=args.samples,
                           ascents=args.ascents, seed=args.seed, p_values=p_values)
    record = {"capacity": res.capacity, "two_capacity": 2 * res.capacity, **scan.as_dict()}
    if args.json:
        _emit(record, args.out)
    else:
        print(f"2C = {2 * res.capacity:.10f}   max G = {scan.max_g:.10f}   margin = {scan.margin:.3e}")
        verdict = "superadditivity candidate" if scan.superadditivity_candidate else (
            "consistent with additivity" if scan.supports_additivity else "inconclusive")
        print(verdict)
    return 0


def _default_angles(res: CapacityResult) -> list[float]:
    from .qubit import bloch_to_angles

    pts = res.ensemble.points_array
    tu, fu = bloch_to_angles(pts[0])
    tv, fv = bloch_to_angles(pts[1 % len(pts)])
    return [float(tu), float(fu), float(tv), float(fv)]


def cmd_gslice(args) -> int:
    ch = _load_channel(args)
    res = capacity(ch, _config(args))
    angles = _parse_floats(args.angles, 4) if args.angles else _default_angles(res)
    rows = g_slice(ch, res.ensemble.average().as_array(), angles, p_grid=np.linspace(0, 1, args.points))
    _write_csv(args.out, ["nu", "p", "G"], rows)
    return 0


def cmd_concavity(args) -> int:
    rows = []
    for mu in _parse_floats(args.mu):
        curve = concavity_curve(mu, np.linspace(0, 1, args.points))
        rows.extend(curve.rows())
        log.info("mu=%.6g: %s, max |numeric - closed form| = %.2e", mu, curve.shape(), curve.max_deviation)
    _write_csv(args.out, ["mu", "p", "f_numeric", "f_closed_form"], rows)
    return 0


# ---------------------------------------------------------------------------
# reproduction driver

@dataclass
class Check:
    item: str
    name: str
    value: float
    target: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.item}: {self.name} = {self.value:.10g} (target {self.target:.10g}, tol {self.tol:.1e})"


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def near(self, item, name, value, target, tol):
        self.checks.append(Check(item, name, float(value), float(target), tol, bool(abs(value - target) <= tol)))

    def at_most(self, item, name, value, bound):
        self.checks.append(Check(item, name, float(value), float(bound), 0.0, bool(value <= bound)))

    def at_least(self, item, name, value, bound):
        self.checks.append(Check(item, name, float(value), float(bound), 0.0, bool(value >= bound)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.as_dict() for c in self.checks], "timings": self.timings}


def match_inputs(found, reference) -> float:
    """Largest angular distance after pairing each reference input with its
    nearest found input, minimized over the global y-reflection."""
    found = np.asarray(found, dtype=float)
    best = math.inf
    for sign in (1.0, -1.0):
        f = found * np.array([1.0, sign, 1.0])
        worst = max(min(angular_distance(r, q) for q in f) for r in reference)
        best = min(best, worst)
    return float(best)


class Context:
    def __init__(self, out: Path, seed: int):
        self.out = out
        self.seed = seed
        self._four: Optional[CapacityResult] = None
        self._planar: Optional[CapacityResult] = None

    @property
    def four(self) -> CapacityResult:
        if self._four is None:
            self._four = capacity(FOUR_STATE, CapacityConfig(seed=self.seed))
        return self._four

    @property
    def planar(self) -> CapacityResult:
        if self._planar is None:
            self._planar = planar_capacity(FOUR_STATE, "xz", config=CapacityConfig(seed=self.seed))
        return self._planar


def _table1(ctx: Context, rep: Report) -> None:
    res = ctx.four
    item = "table1"
    rep.near(item, "capacity", res.capacity, TABLE1["capacity"], 1e-7)
    rep.near(item, "support size", len(res.ensemble), 4, 0)
    probs = sorted(res.ensemble.probs)
    for p, q in zip(probs, sorted(TABLE1["probs"])):
        rep.near(item, "probability", p, q, 1e-5)
    rep.at_most(item, "input angular distance", match_inputs(res.ensemble.points_array, TABLE1["inputs"]), 1e-4)
    for i, (a, b) in enumerate(zip(res.xi, TABLE1["xi"])):
        rep.near(item, f"xi[{i}]", a, b, 1e-6)
    rep.near(item, "xi0", res.xi0, TABLE1["xi0"], 1e-6)
    rep.at_most(item, "max violation (k=200)", res.max_violation, 1e-8)
    c0, c = log_coefficients(FOUR_STATE(res.ensemble.average().as_array()))
    for name, a, b in zip(("I", "sigma_x", "sigma_z"), (-c0, c[0], c[2]), TABLE1["log_coefficients"]):
        rep.near(item, f"|log coefficient {name}|", a, b, 1e-5)
    eq = equidistance(FOUR_STATE, res.ensemble)
    rep.at_most(item, "equidistance spread", max(eq) - min(eq), 1e-8)
    for v in eq:
        rep.near(item, "H[out_i, out_avg]", v, TABLE1["capacity"], 1e-7)
    channel_io.write_json(ctx.out / "table1.json", {"channel": FOUR_STATE.as_dict(), **res.as_dict(),
                                                     "log_coefficients": {"c0": c0, "c": c}, "equidistance": eq})


def _table2(ctx: Context, rep: Report) -> None:
    records = []
    for ch, target in TABLE2:
        res = capacity(ch, CapacityConfig(seed=ctx.seed, allow_noncp=True))
        rep.near("table2", f"capacity lambda={ch.lam.tolist()} t={ch.shift.tolist()}", res.capacity, target, 1e-5)
        records.append({"channel": ch.as_dict(), "target": target, **res.as_dict()})
    channel_io.write_json(ctx.out / "table2.json", records)


def _table3(ctx: Context, rep: Report) -> None:
    res = ctx.planar
    rep.near("table3", "planar 3-state capacity", res.capacity, TABLE3_CAPACITY, 1e-6)
    gap = ctx.four.capacity - res.capacity
    rep.near("table3", "4-state minus 3-state", gap, 2.4e-5, 0.1e-5)
    channel_io.write_json(ctx.out / "table3.json", {"channel": FOUR_STATE.as_dict(), **res.as_dict(),
                                                     "gap_to_unrestricted": gap})


def _table4(ctx: Context, rep: Report) -> None:
    avg = ctx.planar.ensemble.average().as_array()
    sup, maxima = sup_relent(FOUR_STATE, avg)
    rep.near("table4", "sup relative entropy", sup, TABLE4["sup"], 1e-6)
    loc = TABLE4["location"]
    mirrored = [loc[0], -loc[1], loc[2]]
    top = [m.location.as_array() for m in maxima if m.value >= sup - 1e-9]
    dist = max(min(np.max(np.abs(t - np.asarray(ref))) for t in top) for ref in (loc, mirrored))
    rep.at_most("table4", "location error", dist, 1e-3)
    channel_io.write_json(ctx.out / "table4.json", {"reference_average": avg, "sup": sup,
                                                     "maxima": [m.as_dict() for m in maxima]})


def _fig2(ctx: Context, rep: Report) -> None:
    cap = ctx.four.capacity
    rows = []
    for k in MESH_KS:
        sol = mesh_lower_bound(FOUR_STATE, k)
        rows.append((k, k * k - k + 2, sol.chi, cap - sol.chi, 0.05 / k ** 2))
    ks = np.array([r[0] for r in rows], dtype=float)
    deficits = np.array([r[3] for r in rows])
    slope = -np.polyfit(np.log(ks), np.log(deficits), 1)[0]
    rep.near("fig2", "deficit exponent", slope, 2.0, 0.4)
    rep.at_most("fig2", "deficit at k=40", float(deficits[list(MESH_KS).index(40)]), 1e-4)
    _write_csv(ctx.out / "fig2_convergence.csv", ["k", "points", "lower_bound", "deficit", "reference_0.05_over_k2"],
               rows)


def _fig3(ctx: Context, rep: Report) -> None:
    pts = critical_census(FOUR_STATE, ctx.four.ensemble.average().as_array())
    kinds = [p.kind for p in pts]
    rep.near("fig3", "critical points", len(pts), 10, 0)
    for kind, n in (("maximum", 4), ("saddle", 4), ("minimum", 2)):
        rep.near("fig3", f"{kind} count", kinds.count(kind), n, 0)
    for p in pts:
        if p.kind == "maximum":
            rep.near("fig3", "maximum value", p.value, TABLE1["capacity"], 1e-7)
    channel_io.write_json(ctx.out / "census.json", [p.as_dict() for p in pts])


def _fig4(ctx: Context, rep: Report) -> None:
    res = ctx.four
    rows = g_slice(FOUR_STATE, res.ensemble.average().as_array(), _default_angles(res))
    for nu in sorted({r[0] for r in rows}):
        g = np.array([r[2] for r in rows if r[0] == nu])
        rep.at_least("fig4", f"endpoint minus interior minimum (nu={nu:.4f})", min(g[0], g[-1]) - g.min(), 1e-3)
    _write_csv(ctx.out / "fig4_gslice.csv", ["nu", "p", "G"], rows)


def _fig5(ctx: Context, rep: Report) -> None:
    rows = []
    for mu in MU_VALUES:
        curve = concavity_curve(mu)
        rows.extend(curve.rows())
        rep.at_most("fig5", f"closed form deviation mu={mu:.4f}", curve.max_deviation, 1e-10)
        expected = {0.5: "concave", 0.75: "convex"}.get(mu, "flat")
        rep.near("fig5", f"shape mu={mu:.4f} is {expected}", float(curve.shape() == expected), 1.0, 0)
    for mu, target in MU_FLOORS.items():
        rep.near("fig5", f"min output entropy floor mu={mu:.4f}", min_output_entropy_product_floor(mu), target, 1e-6)
    _write_csv(ctx.out / "fig5_concavity.csv", ["mu", "p", "f_numeric", "f_closed_form"], rows)


def _additivity(ctx: Context, rep: Report) -> None:
    res = ctx.four
    avg = res.ensemble.average().as_array()
    scan = additivity_scan(FOUR_STATE, avg, res.capacity, samples=100_000, ascents=50, seed=ctx.seed)
    rep.at_most("additivity", "max G", scan.max_g, 2 * TABLE1["capacity"] + 1e-8)
    product = additivity_scan(FOUR_STATE, avg, res.capacity, samples=10_000, ascents=20, seed=ctx.seed, p_values=(0, 1))
    rep.near("additivity", "max G over product states", product.max_g, 2 * TABLE1["capacity"], 1e-8)
    channel_io.write_json(ctx.out / "additivity.json", {"capacity": res.capacity, "scan": scan.as_dict(),
                                                         "product_scan": product.as_dict()})


ITEMS: dict[str, Callable[[Context, Report], None]] = {
    "table1": _table1,
    "table2": _table2,
    "table3": _table3,
    "table4": _table4,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "additivity": _additivity,
}


def reproduce(out_dir, only: Optional[list[str]] = None, seed: int = 0) -> Report:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = only or list(ITEMS)
    unknown = [n for n in names if n not in ITEMS]
    if unknown:
        raise ValueError(f"unknown item(s) {unknown}; choose from {list(ITEMS)}")
    ctx = Context(out, seed)
    rep = Report()
    for name in names:
        t0 = time.perf_counter()
        ITEMS[name](ctx, rep)
        rep.timings[name] = time.perf_counter() - t0
    channel_io.write_json(out / "summary.json", rep.as_dict())
    return rep


def cmd_reproduce(args) -> int:
    only = [s for s in args.only.split(",") if s] if args.only else None
    rep = reproduce(args.out, only, args.seed)
    for c in rep.checks:
        print(c.line())
    print("all checks passed" if rep.passed else "some checks FAILED")
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holocap", description="Holevo capacity of qubit channels")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def channel_cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("channel", help="channel file ('lambda = ...' and 't = ...' lines)")
        p.add_argument("--allow-noncp", action="store_true", help="warn instead of failing on non-CP channels")
        p.add_argument("--seed", type=int, default=0)
        return p

    def solver_opts(p):
        p.add_argument("--k", type=int, help="single mesh resolution (default: 20, 30 and 40)")
        p.add_argument("--tol", type=float, help="dual-gap tolerance")
        p.add_argument("--starts", type=int, help="rotated starts per mesh")

    def positive_int(text):
        v = int(text)
        if v < 1:
            raise argparse.ArgumentTypeError("must be >= 1")
        return v

    p = channel_cmd("capacity", "compute the Holevo capacity")
    solver_opts(p)
    p.add_argument("--plane", choices=("xy", "xz", "yz"), help="restrict inputs to a coordinate great circle")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_capacity)

    p = channel_cmd("relent-map", "relative entropy to the average output on an angular grid")
    solver_opts(p)
    p.add_argument("--avg", default="from-capacity", help="'from-capacity' or x,y,z")
    p.add_argument("--n-phi", type=positive_int, default=200)
    p.add_argument("--n-theta", type=positive_int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_relent_map)

    p = channel_cmd("census", "critical points of the relative-entropy landscape (JSON)")
    solver_opts(p)
    p.add_argument("--avg", default="from-capacity")
    p.add_argument("--n-phi", type=positive_int, default=400)
    p.add_argument("--n-theta", type=positive_int, default=800)
    p.add_argument("--out")
    p.set_defaults(func=cmd_census)

    p = channel_cmd("additivity", "Schmidt-state scan of the product-channel bound")
    solver_opts(p)
    p.add_argument("--samples", type=positive_int, default=100_000)
    p.add_argument("--ascents", type=positive_int, default=200)
    p.add_argument("--p-values", help="restrict the Schmidt weight, e.g. 0,1")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_additivity)

    p = channel_cmd("gslice", "G along the Schmidt weight for fixed angles")
    solver_opts(p)
    p.add_argument("--angles", help="theta_u,phi_u,theta_v,phi_v (default: first two optimal inputs)")
    p.add_argument("--points", type=positive_int, default=101)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gslice)

    p = sub.add_parser("concavity", help="output entropy of the mu-channel squared along the Schmidt weight")
    p.add_argument("--mu", default="0.5,0.707106781187,0.75")
    p.add_argument("--points", type=positive_int, default=101)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_concavity)

    p = sub.add_parser("reproduce", help="regenerate every table and figure dataset and check it")
    p.add_argument("--out", default="reproduction")
    p.add_argument("--only", help=f"comma-separated subset of {','.join(ITEMS)}")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except channel_io.ChannelSyntaxError as exc:
        print(f"syntax error: {exc}", file=sys.stderr)
        return 2
    except (NotCompletelyPositiveError, InvalidStateError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
