"""Batch command-line front end.

Subcommands: cz-index, iterate-indices, williamson, hamiltonian,
recurrence-search, ellipsoid, barcode, audit-lemma, fixed-point-index, fuzz.
Flags always win over --config file values; unknown config keys are
rejected.  Machine-readable artifacts go to --out (JSON, or CSV where the
format is tabular), a human summary goes to stdout.  Exit codes: 0 success,
2 validation or usage error, 3 failed audit.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import MODES, OrbitSystem, audit
from .ellipsoid import (
    EllipsoidSpec,
    action_spectrum,
    ellipsoid_periods,
    ellipsoid_profile,
    pseudo_rotation_instance,
    slope_valid,
)
from .errors import AuditError, ReebLabError
from .fixedpoint import PlanarMapSample, brouwer_index
from .floergraph import FilteredComplex, barcode, bars_to_csv_rows
from .hamiltonian import (
    CylinderTrace,
    action_tables,
    build_profile,
    check_action_ratio_monotone,
    check_cylinder_trace,
    transfer_map,
)
from .indices import (
    IterationProfile,
    cz_index_sampled,
    index_triple,
    profile_table,
    rotation_path,
    stretch_path,
)
from .recurrence import RecurrenceQuery, recurrence_search
from .symplectic import (
    random_symplectic,
    validate_symplectic,
    williamson_invariants,
)

USAGE_EXIT = 2
AUDIT_EXIT = 3


def _emit(args, payload, human: str, csv_rows=None, csv_header=None):
    """Write the machine artifact to --out (JSON, or CSV when rows are given
    and the path says .csv) and the human summary to stdout."""
    out = getattr(args, "out", None)
    if out:
        path = Path(out)
        if csv_rows is not None and path.suffix.lower() == ".csv":
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                if csv_header:
                    w.writerow(csv_header)
                w.writerows(csv_rows)
        else:
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(human)


def _load_json(path: str):
    return json.loads(Path(path).read_text())


def _positive(name: str, value: float):
    if value is not None and value <= 0:
        raise ReebLabError(f"{name} must be positive, got {value}")


# -- subcommand implementations ----------------------------------------------

def cmd_cz_index(args) -> int:
    if args.rotation is not None:
        path = rotation_path(args.rotation, args.samples)
        source = f"rotation rho={args.rotation}"
    elif args.stretch is not None:
        path = stretch_path(args.stretch, max(args.samples, 64))
        source = f"stretch lambda={args.stretch}"
    elif args.path_file:
        path = np.asarray(_load_json(args.path_file), dtype=float)
        source = args.path_file
    else:
        raise ReebLabError("give --rotation, --stretch or --path-file")
    index = cz_index_sampled(path, tol=args.tol)
    _emit(args, {"index": index, "source": source, "samples": int(path.shape[0])},
          f"index {index} ({source})")
    return 0


def cmd_iterate_indices(args) -> int:
    profile = IterationProfile.from_json(_load_json(args.profile))
    rows = profile_table(profile, args.k_max)
    payload = {"profile": profile.to_json(),
               "rows": [list(r) for r in rows]}
    last = rows[-1]
    _emit(args, payload,
          f"{args.k_max} iterates; at k={last[0]}: mu-=({last[1]}) mu+=({last[2]}) "
          f"mean={last[3]:.6g}",
          csv_rows=rows, csv_header=("k", "mu_minus", "mu_plus", "mu_hat"))
    return 0


def cmd_williamson(args) -> int:
    M = validate_symplectic(np.asarray(_load_json(args.matrix), dtype=float),
                            tol=args.tol)
    inv = williamson_invariants(M, tol=args.tol)
    _emit(args, inv.to_json(),
          "invariants: " + json.dumps(inv.to_json(), sort_keys=True)
          + "  [zero planes of width one are counted in nu0]")
    return 0


def _profile_from_args(args):
    params = {}
    if args.family == "cubic":
        params["theta"] = args.theta
    elif args.family == "exp":
        params["beta"] = args.beta
    elif args.family == "spline":
        if not args.knots:
            raise ReebLabError("spline family needs --knots")
        params["knots"] = tuple(float(v) for v in args.knots.split(","))
    return build_profile(args.family, slope=args.slope, r_max=args.r_max,
                         c0=args.c0, **params)


def cmd_hamiltonian(args) -> int:
    profile = _profile_from_args(args)
    lines = [f"profile {args.family}: slope={profile.slope} r_max={profile.r_max} "
             f"c={profile.c:.6g} h'''>=0 up to {profile.h_triple_nonneg_up_to:.6g}"]
    payload = {"profile": profile.to_json(), "c": profile.c,
               "h_triple_nonneg_up_to": profile.h_triple_nonneg_up_to}
    csv_rows = None
    csv_header = None
    if args.tables:
        tables = action_tables(profile, grid=args.grid)
        csv_rows = [("r", *row, "") for row in tables.r_rows] + \
                   [("T", T, "", "", "", v, r) for (T, v, r) in tables.t_rows]
        csv_header = ("table", "x", "h", "dh", "d2h", "A", "level")
        lines.append(f"tables: {len(tables.r_rows)} level rows, "
                     f"{len(tables.t_rows)} period rows")
    if args.check_ratio_r0 is not None:
        ok = check_action_ratio_monotone(profile, args.check_ratio_r0)
        payload["action_ratio_monotone"] = ok
        lines.append(f"A(r)/r nondecreasing on [1, {args.check_ratio_r0}]: {ok}")
    if args.transfer:
        k, lam = (float(v) for v in args.transfer.split(","))
        taus = np.linspace(0.0, k * profile.c, 101)
        res = transfer_map(profile, k, lam, taus)
        payload["transfer"] = {"k": k, "lam": lam,
                               "upper_slack": res.upper_slack,
                               "lower_slack": res.lower_slack}
        lines.append(f"transfer sandwich slacks: upper {res.upper_slack:.3e}, "
                     f"lower {res.lower_slack:.3e}")
    if args.trace:
        if args.trace_r_plus is None or args.trace_r_minus is None or args.trace_k is None:
            raise ReebLabError("--trace needs --trace-r-plus, --trace-r-minus, --trace-k")
        trace = CylinderTrace.from_csv(Path(args.trace).read_text(),
                                       r_plus=args.trace_r_plus,
                                       r_minus=args.trace_r_minus)
        report = check_cylinder_trace(trace, profile, args.trace_k)
        payload["trace"] = report.to_json()
        lines.append(f"trace checks ok: {report.ok}")
    _emit(args, payload, "\n".join(lines), csv_rows=csv_rows, csv_header=csv_header)
    return 0


def cmd_recurrence_search(args) -> int:
    if args.profiles:
        profiles = tuple(IterationProfile.from_json(p)
                         for p in _load_json(args.profiles))
    elif args.weights:
        spec = EllipsoidSpec(tuple(float(w) for w in args.weights.split(",")))
        profiles = tuple(ellipsoid_profile(spec, j) for j in range(1, spec.n + 1))
    else:
        raise ReebLabError("give --profiles or --weights")
    query = RecurrenceQuery(profiles=profiles, eta=args.eta, ell0=args.ell0,
                            n_divisor=args.divisor, k_bound=args.k_bound,
                            count=args.count)
    stream = sys.stdout if not args.out else Path(args.out).open("w")
    try:
        result = recurrence_search(
            query,
            on_solution=lambda s: print(json.dumps(s.to_json(), sort_keys=True),
                                        file=stream, flush=True))
    finally:
        if args.out:
            stream.close()
    summary = (f"{len(result.solutions)} solutions below k_bound={args.k_bound}"
               + ("; horizon exhausted before the requested count"
                  if result.horizon_exhausted else ""))
    print(summary, file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_ellipsoid(args) -> int:
    spec = EllipsoidSpec(tuple(float(w) for w in args.weights.split(",")))
    payload = {"spec": spec.to_json(), "periods": ellipsoid_periods(spec),
               "irrational": spec.irrational}
    lines = [f"ellipsoid weights={list(spec.weights)} irrational={spec.irrational}"]
    csv_rows = None
    csv_header = None
    if args.spectrum is not None:
        spectrum = action_spectrum(spec, args.spectrum)
        csv_rows = spectrum.to_csv_rows()
        csv_header = ("value", "orbit", "multiple")
        payload["spectrum"] = [list(r) for r in csv_rows]
        lines.append(f"spectrum: {len(csv_rows)} values up to {args.spectrum}")
    if args.slope is not None:
        ok = slope_valid(spec, args.slope)
        payload["slope_valid"] = ok
        lines.append(f"slope {args.slope} avoids the spectrum: {ok}")
    if args.convexity:
        seed = pseudo_rotation_instance(spec, k_max=args.k_max)
        payload["pseudo_rotation"] = seed.to_json()
        rep = seed.convexity
        lines.append(f"convexity ok={rep.ok} min mu_-={rep.min_mu_minus} "
                     f"(k <= {args.k_max})")
    _emit(args, payload, "\n".join(lines), csv_rows=csv_rows, csv_header=csv_header)
    return 0


def cmd_barcode(args) -> int:
    complex_ = FilteredComplex.from_json(_load_json(args.complex))
    bars = barcode(complex_)
    rows = bars_to_csv_rows(bars)
    finite = [b for b in bars if not math.isinf(b.death)]
    _emit(args, {"bars": [list(r) for r in rows]},
          f"{len(bars)} bars ({len(finite)} finite); "
          f"longest finite: "
          f"{max((b.length for b in finite), default=0.0):.6g}",
          csv_rows=rows, csv_header=("birth", "death", "degree"))
    return 0


def cmd_audit_lemma(args) -> int:
    system = OrbitSystem.from_json(_load_json(args.system))
    if args.mode and args.mode != system.mode:
        system = OrbitSystem.from_json({**system.to_json(), "mode": args.mode})
    report = audit(system, count=args.count, k_bound=args.k_bound)
    _emit(args, report.to_json(), report.text_summary())
    return 0


def cmd_fixed_point_index(args) -> int:
    rows = list(csv.reader(Path(args.samples).read_text().strip().splitlines()))
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    center = tuple(float(v) for v in args.center.split(",")) if args.center else (0.0, 0.0)
    sample = PlanarMapSample.from_csv_rows(
        [[float(v) for v in row] for row in rows], center=center, eps=args.eps)
    index = brouwer_index(sample)
    _emit(args, {"index": index, "samples": len(rows)},
          f"fixed point index {index}")
    return 0


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def cmd_fuzz(args) -> int:
    rng = np.random.default_rng(args.seed)
    report = {"seed": args.seed, "cases": args.cases}

    # mean-index sandwich on random profiles
    violations = 0
    for _ in range(args.cases):
        profile = _random_profile(rng)
        m = profile.dim_half
        k = int(rng.integers(1, 51))
        t = index_triple(profile, k)
        if not (t.mu_hat - m <= t.mu_minus <= t.mu_plus <= t.mu_hat + m):
            violations += 1
    report["sandwich_violations"] = violations

    # conjugation invariance of unipotent invariants
    invariant_failures = 0
    base = np.eye(4)
    base[0, 2] = 1.0   # one positive chain, one zero plane
    inv0 = williamson_invariants(validate_symplectic(base)).to_json()
    for _ in range(min(args.cases, 200)):
        C = random_symplectic(rng, 2, scale=0.4)
        M = validate_symplectic(np.linalg.inv(C) @ base @ C, tol=1e-6)
        if williamson_invariants(M, tol=1e-6).to_json() != inv0:
            invariant_failures += 1
    report["conjugation_failures"] = invariant_failures

    # transfer sandwich on a quadratic profile
    profile = build_profile("quadratic", slope=5.0, r_max=2.0)
    worst_slack = 0.0
    for _ in range(min(args.cases, 200)):
        k = float(rng.uniform(1.0, 6.0))
        lam = float(rng.uniform(0.1, 4.0))
        tau = float(rng.uniform(0.0, k * profile.c))
        res = transfer_map(profile, k, lam, [tau])
        worst_slack = min(worst_slack, res.upper_slack, res.lower_slack)
    report["transfer_worst_slack"] = worst_slack

    ok = violations == 0 and invariant_failures == 0 and worst_slack >= -1e-9
    report["ok"] = ok
    _emit(args, report,
          f"fuzz seed={args.seed}: sandwich violations {violations}, "
          f"conjugation failures {invariant_failures}, "
          f"transfer slack {worst_slack:.2e}")
    return 0 if ok else USAGE_EXIT


def _random_profile(rng) -> IterationProfile:
    n_ell = int(rng.integers(0, 3))
    n_hyp = int(rng.integers(0, 3))
    if n_ell + n_hyp == 0:
        n_ell = 1
    elliptic = tuple(float(rng.uniform(-3, 3)) for _ in range(n_ell))
    hyperbolic = tuple(int(rng.integers(-6, 7)) for _ in range(n_hyp))
    return IterationProfile(loop_index=2 * int(rng.integers(-2, 3)),
                            elliptic=elliptic, hyperbolic=hyperbolic)


# -- wiring --------------------------------------------------------------------

_COMMANDS = {
    "cz-index": cmd_cz_index,
    "iterate-indices": cmd_iterate_indices,
    "williamson": cmd_williamson,
    "hamiltonian": cmd_hamiltonian,
    "recurrence-search": cmd_recurrence_search,
    "ellipsoid": cmd_ellipsoid,
    "barcode": cmd_barcode,
    "audit-lemma": cmd_audit_lemma,
    "fixed-point-index": cmd_fixed_point_index,
    "fuzz": cmd_fuzz,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reeb-lab",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the machine-readable artifact here")
        p.add_argument("--config", help="JSON config file; flags win")

    p = sub.add_parser("cz-index", help="index of a sampled symplectic path")
    p.add_argument("--path-file", help="JSON list of matrices, identity first")
    p.add_argument("--rotation", type=float, help="rotation number in turns")
    p.add_argument("--stretch", type=float, help="hyperbolic stretch factor")
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)

    p = sub.add_parser("iterate-indices", help="exact iterate index table")
    p.add_argument("--profile", required=True, help="profile JSON file")
    p.add_argument("--k-max", type=int, default=50)
    common(p)

    p = sub.add_parser("williamson", help="unipotent block invariants")
    p.add_argument("--matrix", required=True, help="JSON matrix file")
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)

    p = sub.add_parser("hamiltonian", help="profile certification and tables")
    p.add_argument("--family", default="quadratic",
                   choices=("quadratic", "cubic", "exp", "spline"))
    p.add_argument("--slope", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--c0", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--knots", help="comma-separated h'' knot values (spline)")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--tables", action="store_true")
    p.add_argument("--check-ratio-r0", type=float)
    p.add_argument("--transfer", help="k,lam for a transfer sandwich check")
    p.add_argument("--trace", help="cylinder trace CSV (s,t,r)")
    p.add_argument("--trace-r-plus", type=float)
    p.add_argument("--trace-r-minus", type=float)
    p.add_argument("--trace-k", type=float)
    common(p)

    p = sub.add_parser("recurrence-search", help="search index recurrences")
    p.add_argument("--profiles", help="JSON file: list of profiles")
    p.add_argument("--weights", help="ellipsoid weights instead of --profiles")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--ell0", type=int, required=True)
    p.add_argument("--divisor", type=int, default=1)
    p.add_argument("--k-bound", type=int, default=10 ** 6)
    p.add_argument("--count", type=int, default=3)
    common(p)

    p = sub.add_parser("ellipsoid", help="model flow data")
    p.add_argument("--weights", required=True, help="comma-separated weights")
    p.add_argument("--spectrum", type=float, help="list periods up to this value")
    p.add_argument("--slope", type=float, help="check a slope against the spectrum")
    p.add_argument("--convexity", action="store_true")
    p.add_argument("--k-max", type=int, default=100)
    common(p)

    p = sub.add_parser("barcode", help="persistence bars of a filtered complex")
    p.add_argument("--complex", required=True, help="JSON complex file")
    common(p)

    p = sub.add_parser("audit-lemma", help="orbit-system exclusion audit")
    p.add_argument("--system", required=True, help="orbit system JSON file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--k-bound", type=int, default=10 ** 6)
    common(p)

    p = sub.add_parser("fixed-point-index", help="planar displacement winding")
    p.add_argument("--samples", required=True, help="CSV x,y,fx,fy")
    p.add_argument("--center", help="x,y of the fixed point")
    p.add_argument("--eps", type=float, default=1.0)
    common(p)

    p = sub.add_parser("fuzz", help="seeded invariant sweeps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=500)
    common(p)

    return parser


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser,
                  argv) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise ReebLabError("config file must hold a JSON object")
    valid = set(vars(args))
    explicit = _explicit_dests(parser, argv)
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in valid:
            raise ReebLabError(f"unknown config key {key!r}")
        if "tol" in dest and isinstance(value, (int, float)):
            _positive(key, value)
        if dest not in explicit:
            setattr(args, dest, value)
    return args


def _explicit_dests(parser, argv) -> set:
    # flags actually present on the command line win over config values
    out = set()
    for token in argv:
        if token.startswith("--"):
            out.add(token[2:].split("=")[0].replace("-", "_"))
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args, parser, argv)
        if getattr(args, "tol", None) is not None:
            _positive("tol", args.tol)
        return _COMMANDS[args.command](args)
    except AuditError as exc:
        print(f"audit failed: {exc}", file=sys.stderr)
        return AUDIT_EXIT
    except (ReebLabError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
