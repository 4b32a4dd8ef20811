"""Batch entry points: train, eval, export, serve.

Every option has a built-in default, can be overridden by a GHSOM_-prefixed
environment variable (GHSOM_TAU1, GHSOM_SEED, ...), and finally by the
command-line flag itself.  Exit codes: 0 success, 2 usage error, 3 data
error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluate, model_io, treedoc
from .adaptive import AdaptiveParams
from .data import MINMAX, ZSCORE, Dataset, load_csv, load_iris
from .errors import (DegenerateMapError, GhsomError, GrowthRefused,
                     InputError, ModelFormatError, UnknownTargetError)
from .growth import (GROWTH_MODES, GhsomParams, GrowthParams, Hierarchy,
                     train_hierarchy)
from .policy import InteractiveParams
from .som import Schedules

ENV_PREFIX = "GHSOM_"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _tau2(text: str):
    if text.strip().lower() in ("off", "none"):
        return None
    return float(text)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# option name -> (type, default, help); shared by train and recluster-style
# overrides, and resolved against the environment in one place.
_TRAIN_OPTS: dict[str, tuple] = {
    "tau1": (float, 0.07, "horizontal growth threshold"),
    "tau2": (_tau2, 0.01, "stratification threshold, or 'off'"),
    "alpha": (float, 0.04, "veto fraction: units holding <= alpha*n samples stay leaves"),
    "beta": (float, 4.0, "insertion factor on the tau1 error share"),
    "seed": (int, 0, "run seed; equal seeds give byte-identical models"),
    "epochs": (_positive_int, 5, "passes over the map's samples per training phase"),
    "lr-start": (float, 0.5, "learning rate at phase start"),
    "lr-end": (float, 0.02, "learning rate at phase end"),
    "radius-start": (float, 1.5, "neighborhood radius at phase start"),
    "radius-end": (float, 0.25, "neighborhood radius at phase end"),
    "gamma-w": (float, 0.9, "walking-distance smoothing factor"),
    "gamma-v": (float, 0.9, "output-variance smoothing factor"),
    "gamma-a": (float, 0.9, "activation smoothing factor"),
    "theta-g": (float, 0.05, "unit generation threshold"),
    "theta-e": (float, 1e-4, "unit elimination threshold on output variance"),
    "theta-c": (float, 0.999, "redundancy correlation threshold"),
    "growth-mode": (str, "row_column", f"one of {GROWTH_MODES}"),
    "tau1-reference": (str, "sum", "compare against parent unit's 'sum' or 'mean' error"),
    "max-map-units": (_positive_int, 64, "hard cap on rows*cols per map"),
    "max-depth": (_positive_int, 5, "hard cap on hierarchy depth"),
    "jobs": (_positive_int, 1, "worker count for sibling subtrees (this build runs sequentially)"),
}


def _add_train_options(p: argparse.ArgumentParser) -> None:
    for name, (typ, default, help_text) in _TRAIN_OPTS.items():
        p.add_argument(f"--{name}", type=typ, default=default,
                       help=f"{help_text} (default: {default})")
    p.add_argument("--interactive", action="store_true",
                   help="enable the growth-restraint policy (default: off)")


def _add_data_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="CSV file with one sample per row")
    p.add_argument("--iris", action="store_true",
                   help="use the bundled 150-sample iris fixture")
    p.add_argument("--label-column",
                   help="label column name (or index for headerless files)")
    p.add_argument("--delimiter", default=",", help="CSV delimiter (default ,)")
    p.add_argument("--no-header", action="store_true",
                   help="treat the first row as data, not column names")
    p.add_argument("--norm", choices=[MINMAX, ZSCORE], default=MINMAX,
                   help="feature scaling recorded in the model (default minmax)")


def _apply_env(parser: argparse.ArgumentParser) -> None:
    """Environment variables override built-in defaults, flags override both."""
    updates = {}
    for name, (typ, _, _) in _TRAIN_OPTS.items():
        var = ENV_PREFIX + name.replace("-", "_").upper()
        if var in os.environ:
            try:
                updates[name.replace("-", "_")] = typ(os.environ[var])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                parser.error(f"{var}={os.environ[var]!r}: {exc}")
    if updates:
        parser.set_defaults(**updates)


def _params_from_args(args) -> GhsomParams:
    params = GhsomParams(
        growth=GrowthParams(
            tau1=args.tau1, tau2=args.tau2,
            max_map_units=args.max_map_units, max_depth=args.max_depth,
            growth_mode=args.growth_mode, tau1_reference=args.tau1_reference),
        schedules=Schedules(
            epochs=args.epochs, lr_start=args.lr_start, lr_end=args.lr_end,
            radius_start=args.radius_start, radius_end=args.radius_end),
        interactive=InteractiveParams(
            alpha=args.alpha, beta=args.beta, enabled=args.interactive),
        adaptive=AdaptiveParams(
            gamma_w=args.gamma_w, gamma_v=args.gamma_v, gamma_a=args.gamma_a,
            theta_g=args.theta_g, theta_e=args.theta_e, theta_c=args.theta_c),
    )
    params.validate()
    return params


def _resolved_config(args) -> dict:
    cfg = {name.replace("-", "_"): getattr(args, name.replace("-", "_"))
           for name in _TRAIN_OPTS}
    cfg["interactive"] = args.interactive
    for key in ("data", "iris", "label_column", "delimiter", "norm"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    cfg["header"] = not getattr(args, "no_header", False)
    return cfg


def _load_dataset(args) -> Dataset:
    if getattr(args, "iris", False):
        return load_iris(norm_kind=args.norm)
    if not getattr(args, "data", None):
        raise InputError("no dataset: pass --data FILE or --iris")
    label = args.label_column
    if label is not None and args.no_header:
        try:
            label = int(label)
        except ValueError:
            raise InputError(
                "--label-column must be an index when --no-header is set")
    return load_csv(args.data, delimiter=args.delimiter,
                    header=not args.no_header, label_column=label,
                    norm_kind=args.norm)


def _summary(h: Hierarchy, dataset: Dataset | None) -> dict:
    report = evaluate.hierarchy_qe(h, dataset)
    out = {
        "dataset": h.dataset_name,
        "seed": h.seed,
        "depth": h.depth(),
        "n_maps": len(h.maps),
        "n_units": sum(g.alive_count() for g in h.maps.values()),
        "total_qe": report.total_qe,
        "mean_qe": report.mean_qe,
        "leaf_unit_mean_qe": report.leaf_unit_mean_qe,
        "n_leaf_units": report.n_leaf_units,
    }
    if dataset is not None:
        out["mean_qe_orig"] = report.mean_qe_orig
        out["leaf_unit_mean_qe_orig"] = report.leaf_unit_mean_qe_orig
        out["criterion"] = evaluate.model_criterion(h, dataset)
    return out


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
        return
    width = max(len(k) for k in payload)
    for key, value in payload.items():
        if isinstance(value, float):
            value = f"{value:.6f}"
        print(f"{key:<{width}}  {value}")


def _write_audit(h: Hierarchy, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in h.audit:
            fh.write(entry.as_line() + "\n")


def _write_history(h: Hierarchy, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("map_id,layer,phase,n_units,mqe_map,mean_sample_qe\n")
        for mid in sorted(h.maps):
            g = h.maps[mid]
            for pt in g.qe_history:
                fh.write(f"{mid},{g.layer},{pt['phase']},{pt['n_units']},"
                         f"{pt['mqe_map']!r},{pt['mean_sample_qe']!r}\n")


def _write_qe_svg(h: Hierarchy, path: str) -> None:
    """A small line chart: per-sample QE of each map across its phases."""
    series = []
    for mid in sorted(h.maps):
        pts = [pt["mean_sample_qe"] for pt in h.maps[mid].qe_history]
        if pts:
            series.append((mid, pts))
    width, height, pad = 640, 360, 40
    top = max((max(pts) for _, pts in series), default=1.0) or 1.0
    longest = max((len(pts) for _, pts in series), default=1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="black"/>',
        f'<text x="{pad}" y="{pad-10}" font-size="12">per-sample QE by training phase '
        f'(top: {top:.4f})</text>',
    ]
    for k, (mid, pts) in enumerate(series):
        hue = (k * 47) % 360
        coords = []
        for i, v in enumerate(pts):
            x = pad + (width - 2 * pad) * (i / max(longest - 1, 1))
            y = height - pad - (height - 2 * pad) * (v / top)
            coords.append(f"{x:.1f},{y:.1f}")
        parts.append(f'<polyline fill="none" stroke="hsl({hue},70%,40%)" '
                     f'stroke-width="1.5" points="{" ".join(coords)}"/>')
        parts.append(f'<text x="{width-pad+4}" y="{pad + 14*k}" font-size="10" '
                     f'fill="hsl({hue},70%,40%)">map {mid}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def cmd_train(args) -> int:
    if args.dump_config:
        print(json.dumps(_resolved_config(args), sort_keys=True, indent=2))
        return EXIT_OK
    params = _params_from_args(args)
    if args.jobs > 1:
        print("note: parallel subtree training is not enabled in this build; "
              "running sequentially", file=sys.stderr)
    dataset = _load_dataset(args)
    h = train_hierarchy(dataset, params, args.seed)
    model_io.save_model(h, args.out)
    audit_path = args.audit_out or args.out + ".audit.log"
    _write_audit(h, audit_path)
    if args.history_out:
        _write_history(h, args.history_out)
    summary = _summary(h, dataset)
    summary["model"] = args.out
    summary["audit"] = audit_path
    _emit(summary, args.format)
    return EXIT_OK


def _check_dims(h: Hierarchy, dataset: Dataset) -> None:
    if dataset.dim != h.dim:
        raise InputError(
            f"model expects {h.dim} features, dataset has {dataset.dim}")


def _rescore(h: Hierarchy, dataset: Dataset) -> None:
    """Re-derive assignments for a loaded model against the given dataset.

    Model files carry training-time assignments keyed by row order, so an
    eval against any supplied file (including a permuted copy of the
    training data) recomputes them by descending the tree per sample.
    """
    from .som import find_bmu

    for g in h.maps.values():
        g.n_samples = 0
        for u in g.iter_units():
            u.assigned = []
            u.qe = 0.0
            u.mqe = 0.0
    for sid in range(dataset.n):
        x = dataset.features[sid]
        mid = 0
        while True:
            g = h.maps[mid]
            g.n_samples += 1
            r, c = find_bmu(g, x)
            u = g.unit_at(r, c)
            if u.child is not None and u.child in h.maps:
                mid = u.child
                continue
            u.assigned.append(sid)
            u.qe += float(np.linalg.norm(u.weight - x))
            break
    for g in h.maps.values():
        for u in g.iter_units():
            u.mqe = u.qe / len(u.assigned) if u.assigned else 0.0
        winners = g.winner_units()
        g.mqe_map = (sum(u.qe for u in winners) / len(winners)) if winners else 0.0


def cmd_eval(args) -> int:
    h = model_io.load_model(args.model)
    dataset = _load_dataset(args)
    _check_dims(h, dataset)
    _rescore(h, dataset)
    report = evaluate.hierarchy_qe(h, dataset)
    out = _summary(h, dataset)
    del out["seed"]
    out["model"] = args.model
    if dataset.labels is not None:
        _, purity = evaluate.class_purity(h, dataset)
        out["class_purity"] = purity
    _emit(out, args.format)
    if args.per_unit_csv:
        with open(args.per_unit_csv, "w", encoding="utf-8") as fh:
            fh.write("map_id,layer,row,col,n_samples,qe,mqe,r,g,b,child\n")
            for mid in sorted(h.maps):
                g = h.maps[mid]
                for u in g.iter_units():
                    r, gg, b = evaluate.unit_color(u)
                    fh.write(f"{mid},{g.layer},{u.row},{u.col},{len(u.assigned)},"
                             f"{u.qe!r},{u.mqe!r},{r},{gg},{b},"
                             f"{u.child if u.child is not None else ''}\n")
    if args.qe_svg:
        _write_qe_svg(h, args.qe_svg)
    return EXIT_OK


def cmd_export(args) -> int:
    h = model_io.load_model(args.model)
    doc = treedoc.build_tree_document(h)
    text = treedoc.document_json(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghsom",
        description="Growing hierarchical self-organizing maps with "
                    "interactive growth restraint.",
        epilog=f"Any training option can also be set via environment "
               f"variables prefixed {ENV_PREFIX} (e.g. {ENV_PREFIX}TAU1=0.05); "
               f"flags take precedence.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a hierarchy and write a model file")
    _add_data_options(p_train)
    _add_train_options(p_train)
    p_train.add_argument("--out", default="model.ghsom",
                         help="model file to write (default model.ghsom)")
    p_train.add_argument("--audit-out",
                         help="audit log path (default <out>.audit.log)")
    p_train.add_argument("--history-out", help="QE history CSV path")
    p_train.add_argument("--format", choices=["text", "json"], default="text")
    p_train.add_argument("--dump-config", action="store_true",
                         help="print the resolved configuration and exit")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a model against a dataset")
    p_eval.add_argument("--model", required=True, help="path to a .ghsom file")
    _add_data_options(p_eval)
    p_eval.add_argument("--per-unit-csv", help="write per-unit stats CSV here")
    p_eval.add_argument("--qe-svg", help="write a QE-history line chart here")
    p_eval.add_argument("--format", choices=["text", "json"], default="text")
    p_eval.set_defaults(func=cmd_eval)

    p_export = sub.add_parser("export", help="emit the tree display document")
    p_export.add_argument("--model", required=True, help="path to a .ghsom file")
    p_export.add_argument("--out", help="output path (default stdout)")
    p_export.set_defaults(func=cmd_export)

    p_serve = sub.add_parser("serve", help="run the steering session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.set_defaults(func=cmd_serve)

    _apply_env(p_train)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ModelFormatError, UnknownTargetError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateMapError, GrowthRefused, GhsomError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
