"""Batch command-line front end.

    hazekit run IMG_OR_DIR ... --out DIR [--method kmap|dcp]
    hazekit synth CLEAN ... --out DIR (--t T | --depth D.png [--scatter B]) [--k K]
    hazekit assess HAZY DEHAZED [HAZY DEHAZED ...] [--out DIR] [--table]
    hazekit validate PAIR_DIR --out DIR

Parameter precedence is flag > ``--config`` JSON file > built-in default.
Exit status: 0 success, 1 some records failed, 2 invalid invocation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dcp import DcpParams, dcp_dehaze, dcp_transmission, dark_channel, estimate_airlight_dcp
from .dehaze import DehazeParams, HazeSynthesisParams, dehaze_pipeline, neglected_term_score, synthesize_haze
from .imaging import FilterParams, ImageIOError, channel_mean, load_image, save_image
from .metrics import MetricParams, assess_pair
from .plotting import plot_dehaze_panel, plot_metric_bars, plot_neglected_terms
from .report import METRIC_KEYS, dumps_csv, dumps_json, format_table, write_text

log = logging.getLogger("hazekit")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

DEFAULTS = {
    "method": "kmap",
    "omega": 0.95,
    "patch": 9,
    "k0": 0.8,
    "t_floor": 0.1,
    "avg_radius": 15,
    "gf_radius": 30,
    "gf_eps": 1e-3,
    "top_fraction": 0.001,
    "directions": 1000,
    "min_cluster": 20,
    "edge_threshold": 0.05,
    "format": "json",
}

_INT_KEYS = {"patch", "avg_radius", "gf_radius", "directions", "min_cluster"}


class ConfigError(ValueError):
    pass


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("parameters")
    g.add_argument("--out", help="output directory")
    g.add_argument("--method", choices=("kmap", "dcp"), default=None)
    g.add_argument("--omega", type=float, default=None, help="haze retention factor (default 0.95)")
    g.add_argument("--patch", type=int, default=None, help="odd patch side in pixels (default 9)")
    g.add_argument("--k0", type=float, default=None, help="lower bound of the K map (default 0.8)")
    g.add_argument("--t-floor", dest="t_floor", type=float, default=None)
    g.add_argument("--avg-radius", dest="avg_radius", type=int, default=None)
    g.add_argument("--gf-radius", dest="gf_radius", type=int, default=None)
    g.add_argument("--gf-eps", dest="gf_eps", type=float, default=None)
    g.add_argument("--top-fraction", dest="top_fraction", type=float, default=None,
                   help="dark-channel fraction used for airlight selection (default 0.001)")
    g.add_argument("--directions", type=int, default=None, help="haze-line sphere directions")
    g.add_argument("--min-cluster", dest="min_cluster", type=int, default=None)
    g.add_argument("--edge-threshold", dest="edge_threshold", type=float, default=None)
    g.add_argument("--format", choices=("json", "csv"), default=None)
    g.add_argument("--config", help="JSON file of parameter defaults")
    g.add_argument("--dump-config", dest="dump_config", action="store_true",
                   help="print the effective parameters and exit")
    g.add_argument("--no-figures", dest="no_figures", action="store_true",
                   help="skip the matplotlib report figures")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="hazekit", description="Single-image dehazing and haze-removal assessment.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="dehaze images")
    run.add_argument("inputs", nargs="*", help="image files or directories")
    run.add_argument("--figure", action="store_true", help="also render a four-panel figure per image")

    synth = sub.add_parser("synth", parents=[common], help="add synthetic haze to clean images")
    synth.add_argument("inputs", nargs="*")
    src = synth.add_mutually_exclusive_group()
    src.add_argument("--t", type=float, default=None, help="constant transmission in (0, 1]")
    src.add_argument("--depth", help="depth map image; transmission = exp(-scatter * depth)")
    synth.add_argument("--scatter", type=float, default=1.0, help="scattering coefficient for --depth")
    synth.add_argument("--k", type=float, default=1.0, help="airlight coefficient in (0, 1]")

    assess = sub.add_parser("assess", parents=[common], help="score (hazy, dehazed) pairs")
    assess.add_argument("inputs", nargs="*", help="HAZY DEHAZED [HAZY DEHAZED ...]")
    assess.add_argument("--table", action="store_true", help="print a metric-by-image comparison table")

    validate = sub.add_parser("validate", parents=[common], help="neglected-term check on NAME.hazy/NAME.clean pairs")
    validate.add_argument("inputs", nargs="*", help="directory of pairs")
    for sp in (run, synth, assess, validate):
        sp.set_defaults(subparser=sp)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    for key in _INT_KEYS:
        if int(cfg[key]) != cfg[key]:
            raise ConfigError(f"{key} must be an integer")
        cfg[key] = int(cfg[key])
    return cfg


def build_params(cfg: dict) -> tuple[DehazeParams, DcpParams, MetricParams]:
    """Validate every numeric parameter up front; raises ConfigError."""
    patch = cfg["patch"]
    if patch < 3 or patch % 2 == 0:
        raise ConfigError(f"--patch must be an odd side length >= 3, got {patch}")
    if cfg["method"] not in ("kmap", "dcp"):
        raise ConfigError(f"unknown method {cfg['method']!r}")
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    radius = patch // 2
    try:
        guided = FilterParams(radius=cfg["gf_radius"], epsilon=cfg["gf_eps"])
        dehaze = DehazeParams(
            omega=cfg["omega"], patch_radius=radius, k_floor=cfg["k0"], t_floor=cfg["t_floor"],
            guided=guided, avg_radius=cfg["avg_radius"],
        )
        dcp = DcpParams(
            patch_radius=radius, omega=cfg["omega"], t_floor=cfg["t_floor"],
            top_fraction=cfg["top_fraction"], guided=guided,
        )
        metrics = MetricParams(
            edge_threshold=cfg["edge_threshold"], patch_radius=radius, n_directions=cfg["directions"],
            min_cluster=cfg["min_cluster"], top_fraction=cfg["top_fraction"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return dehaze, dcp, metrics


def _collect_images(inputs) -> list[Path]:
    paths = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_SUFFIXES))
        else:
            paths.append(p)
    return paths


def _stem(path: Path, drop=(".clean", ".hazy")) -> str:
    s = path.stem
    for suffix in drop:
        if s.endswith(suffix):
            return s[: -len(suffix)]
    return s


def _method_params(cfg: dict) -> dict:
    keys = ["method", "omega", "patch", "t_floor", "gf_radius", "gf_eps"]
    keys += ["k0", "avg_radius"] if cfg["method"] == "kmap" else ["top_fraction"]
    return {k: cfg[k] for k in keys}


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out: Path, name: str, cfg: dict, payload: dict, header: list[str], rows: list[dict]) -> Path:
    if cfg["format"] == "csv":
        return write_text(out / f"{name}.csv", dumps_csv(header, rows))
    return write_text(out / f"{name}.json", dumps_json(payload))


def cmd_run(args, cfg) -> int:
    dehaze_params, dcp_params, _ = build_params(cfg)
    out = _out_dir(args)
    params = _method_params(cfg)
    records = []
    for path in _collect_images(args.inputs):
        rec = {"input": str(path), "method": cfg["method"], "status": "ok", "params": params}
        start = time.perf_counter()
        try:
            img = load_image(path)
            if cfg["method"] == "kmap":
                result = dehaze_pipeline(img, dehaze_params)
            else:
                result = dcp_dehaze(img, dcp_params)
            stem = path.stem
            rec["outputs"] = {
                "dehazed": str(save_image(result.radiance, out / f"{stem}.dehazed.png")),
                "transmission": str(save_image(result.transmission, out / f"{stem}.t.png")),
                "k_map": str(save_image(result.k_map, out / f"{stem}.k.png")),
            }
            if args.figure and not args.no_figures:
                rec["outputs"]["figure"] = str(plot_dehaze_panel(img, result, out / f"{stem}.panel.png"))
            rec["normalizer"] = result.normalizer
            rec["gray_offset"] = result.gray_offset.alpha
            if result.airlight is not None:
                rec["airlight"] = [float(v) for v in result.airlight]
        except (ImageIOError, ValueError) as exc:
            log.warning("%s: %s", path, exc)
            rec["status"] = "failed"
            rec["error"] = str(exc)
        rec["wall_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
        records.append(rec)

    header = ["input", "method", "status", "wall_ms", "dehazed", "transmission", "k_map", "error"]
    header += [k for k in params if k != "method"]
    rows = [{**r, **r.get("outputs", {}), **r["params"]} for r in records]
    report = _write_report(out, "run", cfg, {"command": "run", "params": params, "records": records}, header, rows)
    print(report)
    return 1 if any(r["status"] == "failed" for r in records) else 0


def _synthesis_params(args, shape) -> HazeSynthesisParams:
    if args.depth:
        depth = channel_mean(load_image(args.depth))
        if depth.shape != shape:
            raise ValueError(f"depth map {depth.shape} does not match image {shape}")
        return HazeSynthesisParams.from_depth(depth, args.scatter, args.k)
    return HazeSynthesisParams(transmission=args.t, airlight_k=args.k)


def cmd_synth(args, cfg) -> int:
    if args.t is None and not args.depth:
        raise ConfigError("synth needs --t or --depth")
    if args.t is not None and not 0.0 < args.t <= 1.0:
        raise ConfigError(f"--t must lie in (0, 1], got {args.t}")
    if not 0.0 < args.k <= 1.0:
        raise ConfigError(f"--k must lie in (0, 1], got {args.k}")
    if args.scatter < 0:
        raise ConfigError("--scatter must be non-negative")
    out = _out_dir(args)
    params = {"t": args.t, "k": args.k, "depth": args.depth, "scatter": args.scatter if args.depth else None}
    records = []
    for path in _collect_images(args.inputs):
        rec = {"input": str(path), "status": "ok", "params": params}
        try:
            clean = load_image(path)
            p = _synthesis_params(args, clean.shape[:2])
            hazy = synthesize_haze(clean, p)
            t_map = np.broadcast_to(np.asarray(p.transmission, dtype=np.float64), clean.shape[:2])
            stem = _stem(path)
            rec["outputs"] = {
                "hazy": str(save_image(hazy, out / f"{stem}.hazy.png")),
                "transmission": str(save_image(t_map, out / f"{stem}.t.png")),
            }
        except (ImageIOError, ValueError) as exc:
            log.warning("%s: %s", path, exc)
            rec["status"] = "failed"
            rec["error"] = str(exc)
        records.append(rec)

    header = ["input", "status", "hazy", "transmission", "error", "t", "k", "depth", "scatter"]
    rows = [{**r, **r.get("outputs", {}), **params} for r in records]
    report = _write_report(out, "synth", cfg, {"command": "synth", "params": params, "records": records}, header, rows)
    print(report)
    return 1 if any(r["status"] == "failed" for r in records) else 0


def cmd_assess(args, cfg) -> int:
    _, _, metric_params = build_params(cfg)
    paths = [Path(p) for p in args.inputs]
    if len(paths) % 2:
        raise ConfigError("assess expects HAZY DEHAZED pairs (an even number of paths)")
    params = {k: cfg[k] for k in ("patch", "directions", "min_cluster", "edge_threshold", "top_fraction")}
    pairs = []
    for hazy_path, dehazed_path in zip(paths[::2], paths[1::2]):
        entry = {"hazy": str(hazy_path), "dehazed": str(dehazed_path), "status": "ok", "metrics": None}
        try:
            hazy, dehazed = load_image(hazy_path), load_image(dehazed_path)
            if hazy.shape != dehazed.shape:
                raise ValueError(f"dimension mismatch {hazy.shape[:2]} vs {dehazed.shape[:2]}")
            entry["metrics"] = assess_pair(hazy, dehazed, metric_params).as_dict()
        except (ImageIOError, ValueError) as exc:
            log.warning("%s / %s: %s", hazy_path, dehazed_path, exc)
            entry["status"] = "failed"
            entry["reason"] = str(exc)
        pairs.append(entry)

    payload = {"command": "assess", "params": params, "pairs": pairs}
    header = ["hazy", "dehazed", "status", *METRIC_KEYS, "reason", *params]
    rows = [{**p, **(p["metrics"] or {}), **params} for p in pairs]
    text = dumps_csv(header, rows) if cfg["format"] == "csv" else dumps_json(payload)
    if args.out:
        out = _out_dir(args)
        print(write_text(out / f"assess.{cfg['format']}", text))
        if not args.no_figures and pairs:
            labels = [Path(p["dehazed"]).stem for p in pairs]
            plot_metric_bars(labels, [p["metrics"] for p in pairs], out / "assess.png")
    else:
        sys.stdout.write(text)
    if args.table:
        by_hazy: dict[str, dict] = {}
        for p in pairs:
            by_hazy.setdefault(p["hazy"], {})[Path(p["dehazed"]).stem] = p["metrics"] or {}
        for hazy_name, cols in by_hazy.items():
            sys.stdout.write(format_table(cols, title=Path(hazy_name).name))
    return 1 if any(p["status"] == "failed" for p in pairs) else 0


def discover_pairs(directory: Path) -> list[tuple[str, Path, Path]]:
    """``NAME.hazy.<ext>`` / ``NAME.clean.<ext>`` pairs, sorted by name; orphans are warned about."""
    hazy, clean = {}, {}
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        if p.stem.endswith(".hazy"):
            hazy[p.stem[:-5]] = p
        elif p.stem.endswith(".clean"):
            clean[p.stem[:-6]] = p
    for name in sorted(set(hazy) ^ set(clean)):
        log.warning("unpaired image %s skipped", (hazy.get(name) or clean.get(name)).name)
    return [(name, hazy[name], clean[name]) for name in sorted(set(hazy) & set(clean))]


def cmd_validate(args, cfg) -> int:
    _, dcp_params, _ = build_params(cfg)
    if len(args.inputs) != 1 or not Path(args.inputs[0]).is_dir():
        raise ConfigError("validate expects exactly one directory of NAME.hazy/NAME.clean pairs")
    out = _out_dir(args)
    params = {k: cfg[k] for k in ("omega", "patch", "t_floor", "gf_radius", "gf_eps", "top_fraction")}
    rows, failed = [], 0
    for name, hazy_path, clean_path in discover_pairs(Path(args.inputs[0])):
        try:
            hazy, clean = load_image(hazy_path), load_image(clean_path)
            if hazy.shape != clean.shape:
                raise ValueError(f"dimension mismatch {hazy.shape[:2]} vs {clean.shape[:2]}")
            a = estimate_airlight_dcp(hazy, dark_channel(hazy, dcp_params.patch_radius), dcp_params.top_fraction)
            t = dcp_transmission(hazy, a, dcp_params)
            rows.append({"pair_name": name, "score": neglected_term_score(clean, t)})
        except (ImageIOError, ValueError) as exc:
            log.warning("%s: %s", name, exc)
            failed += 1

    scores = [r["score"] for r in rows]
    mean = float(np.mean(scores)) if scores else float("nan")
    write_text(out / "validate.csv", dumps_csv(["pair_name", "score"], rows))
    if cfg["format"] == "json":
        payload = {"command": "validate", "params": params, "pairs": rows, "mean": mean, "failed": failed}
        write_text(out / "validate.json", dumps_json(payload))
    if not args.no_figures and rows:
        plot_neglected_terms([r["pair_name"] for r in rows], scores, out / "validate.png", mean=mean)
    print(f"{len(rows)} pairs, mean neglected term {mean:.6f}")
    return 1 if failed else 0


COMMANDS = {"run": cmd_run, "synth": cmd_synth, "assess": cmd_assess, "validate": cmd_validate}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        build_params(cfg)
        if args.dump_config:
            sys.stdout.write(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
            return 0
        if not args.inputs:
            raise ConfigError("no inputs given")
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        args.subparser.print_usage(sys.stderr)
        sys.stderr.write(f"{args.subparser.prog}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
