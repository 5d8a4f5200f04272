"""Command-line entry point: ``qsup {ingest,simulate,sweep,fit,compare}``.

Exit codes: 0 success, 1 computation error (no fringes, fit failure, ...),
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__, kernels
from .config import RunConfig
from .errors import QsupError
from .interferometer import (
    build_map,
    compare_visibility,
    extract_visibility,
    integrate_angles,
    weighted_visibility,
)
from .io import read_visibility, to_jsonable, write_fringe, write_map, write_visibility
from .spectra import (
    AtrConversionConfig,
    atr_to_transmissivity,
    check_amide_band,
    read_spectrum,
    write_spectrum,
)
from .structfit import (
    FitConfig,
    analyze,
    baseline_correct,
    preprocess,
    subtract_reference,
    write_report,
)
from .sweep import locate_collapse, run_sweep, summarize, write_sweep

log = logging.getLogger("qsup")


def _write_meta(out_dir, command, args, extra):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "command": command,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
    }
    meta.update(extra)
    p = out / f"{command}_metadata.json"
    p.write_text(json.dumps(to_jsonable(meta), indent=1))
    return p


def _load_config(args):
    cfg = RunConfig.load(args.config)
    if args.out_dir is not None:
        cfg.raw["output_dir"] = args.out_dir
    if args.threads is not None:
        cfg.raw["threads"] = args.threads
    return cfg


def _out_dir(cfg):
    return cfg.path(cfg.raw["output_dir"])


# --------------------------------------------------------------- commands


def cmd_ingest(args):
    cfg = _load_config(args)
    pre = cfg.raw["preprocess"]
    if args.reference is not None:
        pre["reference"] = args.reference
    if args.reference_scale is not None:
        pre["reference_scale"] = args.reference_scale
    if args.baseline_window is not None:
        pre["baseline_window_cm1"] = args.baseline_window
    if args.negative_tolerance is not None:
        pre["negative_tolerance"] = args.negative_tolerance
    conv = cfg.raw["conversion"]
    if args.penetration_depth_nm is not None:
        conv["penetration_depth_nm"] = args.penetration_depth_nm
    if args.pass_count is not None:
        conv["pass_count"] = args.pass_count
    if args.sample_path_um is not None:
        cfg.raw["geometry"]["L_m_um"] = args.sample_path_um

    spec = read_spectrum(args.input)
    if pre["reference"] is not None:
        spec = subtract_reference(spec, read_spectrum(cfg.path(pre["reference"])), float(pre["reference_scale"]))
    if pre["baseline_window_cm1"] is not None:
        spec = baseline_correct(spec, pre["baseline_window_cm1"])
    if spec.unit == "cm-1" and len(spec.window(1480.0, 1800.0)):
        check_amide_band(spec)
    conversion: AtrConversionConfig = cfg.conversion()
    tau = atr_to_transmissivity(spec, conversion, float(pre["negative_tolerance"]))
    out = _out_dir(cfg)
    name = args.output or f"{Path(args.input).stem}_tau.csv"
    path = write_spectrum(tau, out / name)
    _write_meta(out, "ingest", args, {"input": str(args.input), "output": str(path), "config": cfg.echo()})
    print(f"wrote {path}")
    return 0


def cmd_simulate(args):
    cfg = _load_config(args)
    s = cfg.raw["sample"]
    if args.flat_tau is not None or args.transmissivity is not None or args.absorbance is not None:
        s.update(flat_tau=args.flat_tau, transmissivity=args.transmissivity, absorbance=args.absorbance)
    geom = cfg.geometry()
    sample = cfg.sample()
    ls, th = cfg.grid()
    t0 = time.perf_counter()
    m = build_map(geom, sample, ls, th, backend=cfg.raw["backend"])
    fs = integrate_angles(m)
    out = _out_dir(cfg)
    echo = {"config": cfg.echo(geom)}
    write_fringe(fs, out, metadata=echo)
    if not args.no_map:
        write_map(m, out, metadata=echo)
    curve = extract_visibility(fs, smoothing=int(cfg.raw["smoothing"]))
    write_visibility(curve, out, metadata=echo)
    extra = dict(echo, elapsed_s=time.perf_counter() - t0, n_visibility_points=len(curve))
    wa, wb = cfg.windows_nm()
    try:
        b = weighted_visibility(curve, wa, wb)
        extra["beta"] = {"beta": b.beta, "V_A": b.V_A, "V_B": b.V_B, "window_A_nm": wa, "window_B_nm": wb}
        print(f"beta={b.beta:.6g} V_A={b.V_A:.6g} V_B={b.V_B:.6g}")
    except QsupError as exc:
        extra["beta"] = {"error": str(exc), "window_A_nm": wa, "window_B_nm": wb}
        log.warning("beta not computed: %s", exc)
    _write_meta(out, "simulate", args, extra)
    print(f"wrote {len(curve)} visibility points to {out}")
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    sw = dict(cfg.raw["sweep"] or {})
    if args.parameter is not None:
        sw = {"parameter": args.parameter}
    if args.values is not None:
        sw["values"] = args.values
    for k in ("start", "stop", "count"):
        if getattr(args, k) is not None:
            sw[k] = getattr(args, k)
    cfg.raw["sweep"] = sw
    geom = cfg.geometry()
    spec = cfg.sweep_spec(geometry=geom)
    res = run_sweep(spec, threads=int(cfg.raw["threads"]), backend=cfg.raw["backend"])
    out = _out_dir(cfg)
    csv_path, _ = write_sweep(res, out, stem=f"sweep_{spec.parameter}", echo=to_jsonable(cfg.echo(geom)))
    summ = summarize(res)
    _write_meta(out, "sweep", args, {"summary": {k: summ[k] for k in ("argmax", "beta_at_argmax", "null_points", "collapse")}})
    print(f"argmax={summ['argmax']} beta={summ['beta_at_argmax']} null_points={summ['null_points']}")
    print(f"collapse at {locate_collapse(res)} {res.unit}")
    print(f"wrote {csv_path}")
    return 0


def cmd_fit(args):
    cfg = _load_config(args)
    fit = dict(cfg.raw["fit"])
    if args.band_window is not None:
        fit["band_window_cm1"] = args.band_window
    if args.baseline_window is not None:
        fit["baseline_window_cm1"] = args.baseline_window
    if args.seeds is not None:
        fit["seeds_cm1"] = args.seeds
    fc = FitConfig.from_dict(fit)
    spec = read_spectrum(args.input)
    pre = cfg.raw["preprocess"]
    ref = read_spectrum(cfg.path(pre["reference"])) if pre["reference"] else None
    report, _, seeds = analyze(spec, fc, ref, float(pre["reference_scale"]))
    out = _out_dir(cfg)
    stem = args.output or f"{Path(args.input).stem}_structure"
    paths = write_report(report, out, stem, spectrum=preprocess(spec, fc, ref, float(pre["reference_scale"])))
    _write_meta(out, "fit", args, {"fit_config": fc.__dict__, "seeds_cm1": seeds})
    for c in report.components:
        print(f"{c.center:8.2f}  {c.assignment:12s} {c.area_percent:6.2f}%")
    print(f"wrote {paths[0]}")
    return 0


def cmd_compare(args):
    cfg = _load_config(args)
    curve = read_visibility(args.visibility)
    tau = read_spectrum(args.transmissivity)
    pump_nm = args.pump_nm if args.pump_nm is not None else cfg.pump().wavelength_nm
    window = None
    if args.idler_window is not None:
        window = args.idler_window
    elif args.cm1_window is not None:
        window = sorted(1e4 / v for v in args.cm1_window)
    cmp = compare_visibility(curve, tau, pump_nm, window)
    out = _out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    p = out / (args.output or "compare.csv")
    with open(p, "w") as fh:
        fh.write("idler_um,signal_nm,visibility,tau,deviation\n")
        fh.writelines(",".join(repr(float(v)) for v in row) + "\n" for row in zip(cmp.idler_um, cmp.signal_nm, cmp.visibility, cmp.tau, cmp.deviation))
    stats = cmp.stats()
    (out / (p.stem + "_stats.json")).write_text(json.dumps(dict(stats, pump_nm=pump_nm, idler_window_um=window), indent=1))
    _write_meta(out, "compare", args, {"stats": stats})
    print(json.dumps(stats))
    return 0


# ----------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON")
    common.add_argument("--out-dir", help="output directory (overrides config output_dir)")
    common.add_argument("--threads", type=int, help="parallel sweep workers (overrides config threads)")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    p = argparse.ArgumentParser(prog="qsup", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"qsup {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="ATR absorbance -> amplitude transmissivity")
    s.add_argument("input")
    s.add_argument("--output", help="output file name inside the output directory")
    s.add_argument("--reference", help="reference spectrum to subtract (water vapour, CO2)")
    s.add_argument("--reference-scale", type=float)
    s.add_argument("--baseline-window", type=float, nargs=2, metavar=("LO", "HI"), help="cm-1")
    s.add_argument("--penetration-depth-nm", type=float)
    s.add_argument("--sample-path-um", type=float)
    s.add_argument("--pass-count", type=int)
    s.add_argument("--negative-tolerance", type=float)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("simulate", parents=[common], help="interference map, fringe spectrum and visibility")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--flat-tau", type=float)
    g.add_argument("--transmissivity", help="transmissivity spectrum file")
    g.add_argument("--absorbance", help="ATR absorbance spectrum file (converted at L_m)")
    s.add_argument("--no-map", action="store_true", help="skip writing the 2D map")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", parents=[common], help="1D sweep of beta")
    s.add_argument("--parameter", choices=["crystal_L", "sample_L_m", "gap_L_a"])
    s.add_argument("--values", type=float, nargs="+")
    s.add_argument("--start", type=float)
    s.add_argument("--stop", type=float)
    s.add_argument("--count", type=int)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", parents=[common], help="Amide I secondary-structure fit")
    s.add_argument("input")
    s.add_argument("--output", help="output stem")
    s.add_argument("--band-window", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--baseline-window", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--seeds", type=float, nargs="+", help="explicit band centres (cm-1)")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("compare", parents=[common], help="visibility vs transmissivity overlay")
    s.add_argument("visibility")
    s.add_argument("transmissivity")
    s.add_argument("--pump-nm", type=float)
    s.add_argument("--output")
    w = s.add_mutually_exclusive_group()
    w.add_argument("--idler-window", type=float, nargs=2, metavar=("LO", "HI"), help="um")
    w.add_argument("--cm1-window", type=float, nargs=2, metavar=("LO", "HI"))
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except QsupError as exc:
        print(f"qsup: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"qsup: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
