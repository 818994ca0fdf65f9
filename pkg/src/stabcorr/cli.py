"""Command line entry point.

    stabcorr stability region --condition rstar --mu 0.01:10:200 --nu 0.01:5:200 --out region.csv
    stabcorr stability sharpness --s 2 --alpha 0.05 --samples 100000 --seed 1
    stabcorr converge heat --table 2 --out table2.csv
    stabcorr converge wave --epsilon 0.02 --h-list 0.04 0.02 0.01 --out wave.csv
    stabcorr converge schnak --nsub 32 --t 0.5 --dt-list 0.01 0.005 0.0025 --out schnak.csv
    stabcorr snapshot schnak --nsub 32 --t 0.5 --out snap.csv

Any option may also be given in a ``--config`` file of ``key = value`` lines
(an optional ``[section]`` header is ignored); command line values win.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys

import numpy as np

from . import femdd, harness, stability

log = logging.getLogger("stabcorr")


def _range(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_region(args) -> int:
    mask = stability.scan_stability_region(args.mu, args.nu, args.condition, args.phi_samples)
    if args.out:
        stability.write_region_csv(args.out, args.mu, args.nu, mask)
    else:
        stability.write_region_csv(sys.stdout, args.mu, args.nu, mask)
    log.info("stable cells: %d of %d", int(mask.sum()), mask.size)
    return 0


def cmd_sharpness(args) -> int:
    alphas = args.alphas if args.alphas else None
    worst = stability.sample_wedge_max(args.s, args.alpha, args.samples, args.seed, args.z0_mode, alphas)
    verdict = "violation" if worst > 1.0 + stability.UNIT_TOL else "bounded"
    print(f"s={args.s} alpha={args.alpha:.6g} z0={args.z0_mode} max|r|={worst:.15g} {verdict}")
    return 0


def cmd_heat(args) -> int:
    records = harness.heat_table(args.table)
    _emit(harness.write_records_csv(records), args.out)
    expected = harness.REFERENCE_ERRORS[args.table]
    for rec in records:
        ref = expected[rec.scheme][harness.TABLE_STEPS.index(round(1 / rec.dt))]
        log.info("%-8s 1/dt=%4d error=%.3e reference=%.2e rel=%+.2f%%", rec.scheme, round(1 / rec.dt),
                 rec.error, ref, 100 * (rec.error - ref) / ref)
    return 0


def cmd_wave(args) -> int:
    records = harness.wave_study(args.epsilon, args.h_list, args.schemes, args.t)
    _emit(harness.write_records_csv(records), args.out)
    return 0


def cmd_schnak(args) -> int:
    records = harness.schnak_study(args.nsub, args.t, args.dt_list, args.schemes, args.dt_ref)
    _emit(harness.write_records_csv(records), args.out)
    return 0


def cmd_snapshot(args) -> int:
    setup = harness.schnak_setup(args.nsub)
    y = harness.integrate(setup.system, args.scheme, setup.y0, 0.0, args.t, args.dt)
    femdd.write_snapshot(args.out or sys.stdout, setup.mesh, y)
    if args.mesh_out:
        setup.mesh.write(args.mesh_out)
    return 0


ALL_SCHEMES = ["DOUGLAS", "SC1A", "SC1B", "HV", "HW", "CS"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabcorr", description="Douglas-type splitting experiments")
    parser.add_argument("--config", help="key = value file with option overrides")
    parser.add_argument("-v", "--verbose", action="store_true")
    top = parser.add_subparsers(dest="command", required=True)

    st = top.add_parser("stability").add_subparsers(dest="action", required=True)
    p = st.add_parser("region", help="(mu, nu) stability mask for central advection-diffusion")
    p.add_argument("--condition", choices=["r", "rstar"], default="r")
    p.add_argument("--mu", type=_range, default=_range("0.01:10:200"))
    p.add_argument("--nu", type=_range, default=_range("0.01:5:200"))
    p.add_argument("--phi-samples", type=int, default=1024)
    p.add_argument("--out")
    p.set_defaults(func=cmd_region)

    p = st.add_parser("sharpness", help="sample |r| over wedge boundaries")
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--alphas", type=float, nargs="+", help="per-part wedge angles")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z0-mode", choices=["zero", "unit_disk_shifted"], default="zero")
    p.set_defaults(func=cmd_sharpness)

    cv = top.add_parser("converge").add_subparsers(dest="problem", required=True)
    p = cv.add_parser("heat", help="manufactured heat problem error tables")
    p.add_argument("--table", type=int, choices=[1, 2, 3], default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_heat)

    p = cv.add_parser("wave", help="traveling wave errors versus h")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--h-list", type=float, nargs="+", default=[1 / 25, 1 / 50, 1 / 100])
    p.add_argument("--schemes", nargs="+", default=ALL_SCHEMES)
    p.add_argument("--t", type=float, default=1.0, help="final time")
    p.add_argument("--out")
    p.set_defaults(func=cmd_wave)

    p = cv.add_parser("schnak", help="Schnakenberg temporal errors on the hexagon")
    p.add_argument("--nsub", type=int, default=32)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--dt-list", type=float, nargs="+", default=[1 / 100, 1 / 200, 1 / 400])
    p.add_argument("--dt-ref", type=float)
    p.add_argument("--schemes", nargs="+", default=ALL_SCHEMES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_schnak)

    sn = top.add_parser("snapshot").add_subparsers(dest="problem", required=True)
    p = sn.add_parser("schnak", help="CSV x,y,u,v of the Schnakenberg solution")
    p.add_argument("--nsub", type=int, default=32)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=1 / 800)
    p.add_argument("--scheme", default="SC1A")
    p.add_argument("--mesh-out")
    p.add_argument("--out")
    p.set_defaults(func=cmd_snapshot)
    return parser


def _leaf_parsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                yield sub
                yield from _leaf_parsers(sub)


def read_config(path) -> dict:
    with open(path) as fh:
        text = fh.read()
    cp = configparser.ConfigParser()
    if not text.lstrip().startswith("["):
        text = "[stabcorr]\n" + text
    cp.read_string(text)
    values = {}
    for section in cp.sections():
        values.update({k.replace("-", "_"): v for k, v in cp[section].items()})
    return values


def apply_config(parser, values: dict) -> None:
    """Install config values as defaults on every subcommand that knows the key."""
    for sub in _leaf_parsers(parser):
        defaults = {}
        for action in sub._actions:
            if action.dest not in values:
                continue
            raw = values[action.dest]
            conv = action.type or str
            if action.nargs in ("+", "*"):
                defaults[action.dest] = [conv(x) for x in raw.replace(",", " ").split()]
            else:
                defaults[action.dest] = conv(raw)
        if defaults:
            sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        cfg_path = pre.parse_known_args(argv)[0].config
        if cfg_path:
            apply_config(parser, read_config(cfg_path))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
