"""Command-line front end: ``mstground run | compare | presets | show-config``."""

import argparse
import dataclasses
import sys
import time

import numpy as np

from . import config as cfgmod
from .errors import ConfigurationError, MSTError
from .geometry import doubled_free_scene
from .ground import FreeField, RigidGround
from .sweep import SweepAborted, find_extrema, run_sweep

HEADER = "frequency_hz,il_db,p_total_re,p_total_im,p_ref_re,p_ref_im,flags"
_FMT = "%.11e"


def format_row(entry):
    nums = (
        entry.frequency,
        entry.il,
        entry.p_total.real,
        entry.p_total.imag,
        entry.p_reference.real,
        entry.p_reference.imag,
    )
    flags = "|".join(sorted(entry.flags))
    return ",".join(_FMT % v for v in nums) + "," + flags


def write_spectrum(spectrum, fh):
    fh.write(HEADER + "\n")
    for e in spectrum.entries:
        fh.write(format_row(e) + "\n")


def read_spectrum(path):
    """Read a spectrum table back as (frequency, il) arrays."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, usecols=(0, 1))
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1]


def summary(spectrum, out):
    f = spectrum.frequencies
    il = spectrum.il
    ok = np.isfinite(il)
    out.write(f"points: {len(spectrum)}  failed: {int((~ok).sum())}\n")
    if ok.sum() == 0:
        return
    i = int(np.argmax(np.where(ok, il, -np.inf)))
    out.write(f"max IL: {il[i]:.2f} dB at {f[i]:.1f} Hz\n")
    try:
        ext = find_extrema(spectrum, (f[0], f[-1]))
    except ValueError:
        ext = []
    if ext:
        out.write("kind  frequency_hz  il_db\n")
        for e in ext:
            out.write(f"{e.kind:<5} {e.frequency:12.1f} {e.il:7.2f}\n")
    for e in spectrum.errors():
        out.write(f"error at {e.frequency:.3f} Hz: {e.error}\n")


def _load(args):
    if args.config and args.preset:
        raise ConfigurationError([("", "give --config or --preset, not both")])
    if args.preset:
        data = cfgmod.preset_dict(args.preset)
    elif args.config:
        text = args.config
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        data = cfgmod.parse_text(text)
    else:
        raise ConfigurationError([("", "one of --config or --preset is required")])
    return cfgmod.from_dict(cfgmod.apply_overrides(data, args.set or []))


def doubled_config(cfg):
    """The grounded configuration re-posed as array plus image in free field."""
    return dataclasses.replace(
        cfg,
        scene=doubled_free_scene(cfg.scene),
        ground=FreeField(),
        array=None,
        ground_data={"type": "free"},
    )


def cmd_run(args, out):
    cfg = _load(args)
    start = time.perf_counter()
    spectrum = run_sweep(cfg, workers=args.workers, fail_fast=args.fail_fast)
    if args.output == "-":
        write_spectrum(spectrum, out)
    else:
        with open(args.output, "w") as fh:
            write_spectrum(spectrum, fh)
    report = sys.stderr if args.output == "-" else out
    summary(spectrum, report)
    report.write(f"elapsed: {time.perf_counter() - start:.1f} s\n")
    return 0


def cmd_compare(args, out):
    if not (args.config or args.preset):
        args.preset = "fig2"
    cfg = _load(args)
    if not isinstance(cfg.ground, RigidGround):
        raise ConfigurationError([("ground.type", "compare needs a rigid ground")])
    doubled = doubled_config(cfg)
    a = run_sweep(cfg, workers=args.workers, fail_fast=args.fail_fast)
    b = run_sweep(doubled, frequencies=a.frequencies, workers=args.workers, fail_fast=args.fail_fast)
    diff = np.abs(a.il - b.il)
    i = int(np.nanargmax(diff))
    out.write(
        f"rigid ground: {len(cfg.scene.scatterers)} cylinders, "
        f"free field: {len(doubled.scene.scatterers)} cylinders\n"
    )
    out.write(f"max |dIL| = {diff[i]:.3e} dB at {a.frequencies[i]:.1f} Hz\n")
    return 0


def cmd_presets(args, out):
    for name in sorted(cfgmod.PRESETS):
        d = cfgmod.PRESETS[name]
        arr = d["array"]
        out.write(
            f"{name:<12} {arr['rows']}x{arr['columns']} L={arr['lattice_constant']:g} "
            f"scatterer={d['scatterer']['type']} ground={d['ground']['type']} "
            f"receiver={tuple(d['receiver'])}\n"
        )
    return 0


def cmd_show(args, out):
    out.write(cfgmod.dumps(_load(args)) + "\n")
    return 0


def _add_config_args(p):
    p.add_argument("-c", "--config", help="config file path or inline JSON")
    p.add_argument("-p", "--preset", help="named preset (see 'presets')")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. order=9")


def build_parser():
    parser = argparse.ArgumentParser(prog="mstground", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep a configuration and write the IL table")
    _add_config_args(run)
    run.add_argument("-o", "--output", default="-", help="output CSV path ('-' for stdout)")
    run.add_argument("-j", "--workers", type=int, default=1, help="parallel worker processes")
    run.add_argument("--fail-fast", action="store_true", help="stop at the first failed frequency")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="grounded array vs doubled array in free field")
    _add_config_args(cmp_)
    cmp_.add_argument("-j", "--workers", type=int, default=1)
    cmp_.add_argument("--fail-fast", action="store_true")
    cmp_.set_defaults(func=cmd_compare)

    pre = sub.add_parser("presets", help="list the built-in presets")
    pre.set_defaults(func=cmd_presets)

    show = sub.add_parser("show-config", help="print the validated configuration")
    _add_config_args(show)
    show.set_defaults(func=cmd_show)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ConfigurationError as exc:
        sys.stderr.write("configuration error:\n")
        for path, msg in exc.problems:
            sys.stderr.write(f"  {path or '<root>'}: {msg}\n")
        return 2
    except SweepAborted as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (MSTError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
