"""Command-line front end.

Subcommands: ``spectrum`` (bound states and resonances, Table-style),
``xsec`` (cross-section curves), ``residues`` (pole residue table and
phases), ``argand`` (S-matrix trajectories with arc detection) and
``ml-cache`` (persist the pole expansion for reuse).  Data goes to CSV or
JSON with at least 12 significant digits; every file report also renders a
matplotlib figure next to it unless ``--no-plot`` is given.

Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ScatteringError, ValidationError
from .jost import s_matrix
from .mittag import (
    Contour,
    argand_trajectory,
    build_expansion,
    default_contour,
    detect_arcs,
    load_expansion,
    ml_s_matrix,
    save_expansion,
)
from .model import (
    ChannelModel,
    EnergyPoint,
    channel_momenta,
    load_model,
    noro_taylor,
    physical_sheet,
)
from .odeint import IntegratorConfig
from .spectral import (
    BOUND_GRID,
    BOUND_REGION,
    RESONANCE_GRID,
    RESONANCE_REGION,
    find_spectrum,
)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jost-scatter",
        description="Coupled-channel scattering: spectra, cross sections, "
                    "residues and pole expansions of the S-matrix.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--model", metavar="PATH", help="model definition JSON file")
    src.add_argument("--builtin", choices=["noro-taylor"], default=None,
                     help="built-in benchmark model (default when --model absent)")
    common.add_argument("--theta", type=float, default=None,
                        help="rotation angle in radians (default: automatic)")
    common.add_argument("--r-min", type=float, default=1e-4)
    common.add_argument("--b", type=float, default=1.0)
    common.add_argument("--R", type=float, default=30.0)
    common.add_argument("--abs-tol", type=float, default=1e-10)
    common.add_argument("--rel-tol", type=float, default=1e-10)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", metavar="PATH", default=None,
                        help="output file (default: stdout)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="parallel workers for energy grids")
    common.add_argument("--no-plot", action="store_true",
                        help="do not render a figure next to the output file")
    # spectrum search boxes (used directly by `spectrum` and by any command
    # that needs to locate the poles before expanding)
    common.add_argument("--bound-re-min", type=float, default=BOUND_REGION[0])
    common.add_argument("--bound-re-max", type=float, default=BOUND_REGION[1])
    common.add_argument("--bound-grid-re", type=int, default=BOUND_GRID[0])
    common.add_argument("--region-re-min", type=float, default=RESONANCE_REGION[0])
    common.add_argument("--region-re-max", type=float, default=RESONANCE_REGION[1])
    common.add_argument("--region-im-min", type=float, default=RESONANCE_REGION[2])
    common.add_argument("--region-im-max", type=float, default=RESONANCE_REGION[3])
    common.add_argument("--region-grid-re", type=int, default=RESONANCE_GRID[0])
    common.add_argument("--region-grid-im", type=int, default=RESONANCE_GRID[1])

    p = sub.add_parser("spectrum", parents=[common],
                       help="locate bound states and resonances with widths")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("xsec", parents=[common],
                       help="cross sections over an energy grid")
    p.add_argument("--grid", default="0.2:20:0.02", metavar="A:B:STEP")
    p.add_argument("--transitions", default=None,
                   help="comma list like 1-1,1-2,2-2 (default: all n<=n')")
    p.add_argument("--k-power", type=int, choices=[1, 2], default=1,
                   help="momentum exponent in pi/k**p (printed-form default 1)")
    p.add_argument("--ml", action="store_true",
                   help="evaluate S from the pole expansion instead of directly")
    p.add_argument("--cache", metavar="PATH", help="expansion cache to reuse")
    p.add_argument("--exclude-pole", type=int, action="append", default=[],
                   metavar="K", help="drop pole K (1-based) from the expansion")
    p.add_argument("--exclude-all-poles", action="store_true")
    p.set_defaults(func=cmd_xsec)

    p = sub.add_parser("residues", parents=[common],
                       help="residue matrices of the S-matrix at its poles")
    p.add_argument("--pole", type=int, action="append", default=[],
                   metavar="K", help="restrict the table to pole K (repeatable)")
    p.add_argument("--epsilon", type=float, default=1e-6,
                   help="central-difference step for the determinant derivative")
    p.add_argument("--cache", metavar="PATH", help="expansion cache to reuse")
    p.add_argument("--contour", default=None, metavar="V1,V2,...")
    p.add_argument("--nodes", type=int, default=175)
    p.set_defaults(func=cmd_residues)

    p = sub.add_parser("argand", parents=[common],
                       help="Argand trajectory of one S-matrix element")
    p.add_argument("--element", default="1,1", metavar="TO,FROM")
    p.add_argument("--grid", default="0.5:20:0.05", metavar="A:B:STEP")
    p.add_argument("--min-run", type=int, default=3)
    p.add_argument("--ml", action="store_true")
    p.add_argument("--cache", metavar="PATH")
    p.add_argument("--exclude-pole", type=int, action="append", default=[],
                   metavar="K")
    p.add_argument("--exclude-all-poles", action="store_true")
    p.set_defaults(func=cmd_argand)

    p = sub.add_parser("ml-cache", parents=[common],
                       help="compute and persist the pole expansion")
    p.add_argument("--contour", default=None, metavar="V1,V2,...")
    p.add_argument("--nodes", type=int, default=175)
    p.add_argument("--contour-theta", type=float, default=0.3 * math.pi)
    p.set_defaults(func=cmd_ml_cache)

    return parser


def _load_model_arg(args) -> ChannelModel:
    if args.model:
        return load_model(args.model)
    return noro_taylor()


def _config(args) -> IntegratorConfig:
    return IntegratorConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol)


def _geometry(args) -> dict:
    return {"r_min": args.r_min, "b": args.b, "R": args.R}


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ValidationError(f"grid must be A:B:STEP, got {text!r}") from exc
    if not (step > 0 and b > a):
        raise ValidationError(f"grid {text!r} must have B > A and STEP > 0")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _parse_contour(args) -> Contour:
    if getattr(args, "contour", None):
        try:
            verts = tuple(complex(v) for v in args.contour.split(","))
        except ValueError as exc:
            raise ValidationError(f"bad contour vertex list: {exc}") from exc
        theta = getattr(args, "contour_theta", 0.3 * math.pi)
        return Contour(verts, nodes_per_segment=args.nodes, theta=theta)
    return default_contour(nodes_per_segment=getattr(args, "nodes", 175))


def _parse_transitions(text: str | None, n: int) -> list[tuple[int, int]]:
    if text is None:
        return [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    out = []
    for token in text.split(","):
        try:
            a, b = (int(x) for x in token.split("-"))
        except ValueError as exc:
            raise ValidationError(f"bad transition {token!r}; use like 1-2") from exc
        if not (1 <= a <= n and 1 <= b <= n):
            raise ValidationError(f"transition {token!r} outside 1..{n}")
        out.append((a, b))
    return out


def _emit(args, header: list[str], rows: list[list], json_payload: dict) -> None:
    """Write the delimited report to --out or stdout, deterministically."""
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else _fmt(x) for x in row])
        text = buf.getvalue()
    else:
        text = json.dumps(json_payload, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _figure_path(args) -> Path | None:
    if args.out and not args.no_plot:
        return Path(args.out).with_suffix(".png")
    return None


def _sheet_str(sheet) -> str:
    return "".join("+" if s > 0 else "-" for s in sheet)


def _find_spectrum_args(args, model: ChannelModel):
    if not args.region_im_max < 0:
        raise ValidationError(
            "resonance region must lie strictly below the real axis "
            "(--region-im-max < 0)"
        )
    if not (args.region_re_min < args.region_re_max
            and args.region_im_min < args.region_im_max):
        raise ValidationError("malformed resonance search region")
    if not args.bound_re_min < args.bound_re_max:
        raise ValidationError("malformed bound-state search region")
    return find_spectrum(
        model,
        bound_region=(args.bound_re_min, args.bound_re_max, -1e-6, 1e-6),
        resonance_region=(args.region_re_min, args.region_re_max,
                          args.region_im_min, args.region_im_max),
        bound_grid=(args.bound_grid_re, 3),
        resonance_grid=(args.region_grid_re, args.region_grid_im),
        theta=args.theta,
        config=_config(args),
        **_geometry(args),
    )


def cmd_spectrum(args) -> int:
    model = _load_model_arg(args)
    spectrum = _find_spectrum_args(args, model)

    n = model.n_channels
    header = (["kind", "e_r", "gamma"]
              + [f"gamma_{i + 1}" for i in range(n)]
              + ["sheet", "residual"])
    rows: list[list] = []
    for p in spectrum.bound:
        rows.append(["bound", p.energy.real, 0.0] + [0.0] * n
                    + [_sheet_str(p.sheet), p.det_residual])
    for p in spectrum.resonances:
        rows.append(["resonance", p.e_r, p.gamma] + list(p.partial_widths)
                    + [_sheet_str(p.sheet), p.det_residual])
    payload = {
        "bound": [{"e": p.energy.real, "sheet": _sheet_str(p.sheet),
                   "residual": p.det_residual} for p in spectrum.bound],
        "resonances": [{"e_r": p.e_r, "gamma": p.gamma,
                        "partial_widths": list(p.partial_widths),
                        "sheet": _sheet_str(p.sheet),
                        "residual": p.det_residual}
                       for p in spectrum.resonances],
        "failures": list(spectrum.failures),
    }
    _emit(args, header, rows, payload)
    fig = _figure_path(args)
    if fig is not None:
        from . import plots
        plots.save_spectrum_figure([p.energy for p in spectrum.bound],
                                   [p.energy for p in spectrum.resonances], fig)
    return 0


def _expansion_from_args(args, model: ChannelModel):
    if getattr(args, "cache", None):
        return load_expansion(args.cache)
    contour = _parse_contour(args)
    spectrum = _find_spectrum_args(args, model)
    poles = [p for p in spectrum.resonances
             if contour.contains(p.energy, margin=1e-9)]
    return build_expansion(model, poles, contour,
                           config=_config(args), **_geometry(args))


def _mask_expansion(exp, args):
    if getattr(args, "exclude_all_poles", False):
        return exp.excluding_all()
    if getattr(args, "exclude_pole", None):
        return exp.excluding(*args.exclude_pole)
    return exp


def _s_values_direct(model, grid, geometry, config, jobs):
    if jobs > 1 and grid.size >= 16:
        payloads = [(model, float(e), geometry, config) for e in grid]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_s_worker, payloads,
                                 chunksize=max(1, grid.size // (4 * jobs))))
    return [s_matrix(model, float(e), config=config, **geometry).s for e in grid]


def _s_worker(payload):
    model, e, geometry, config = payload
    return s_matrix(model, e, config=config, **geometry).s


def cmd_xsec(args) -> int:
    model = _load_model_arg(args)
    grid = _parse_grid(args.grid)
    transitions = _parse_transitions(args.transitions, model.n_channels)
    for n_from, _ in transitions:
        if not grid[0] > model.thresholds[n_from - 1]:
            raise ValidationError(
                f"energy grid starts below the threshold of entrance "
                f"channel {n_from}"
            )
    if args.k_power not in (1, 2):
        raise ValidationError("k-power must be 1 or 2")

    if args.ml:
        exp = _mask_expansion(_expansion_from_args(args, model), args)
        s_values = [ml_s_matrix(exp, float(e)) for e in grid]
    else:
        s_values = _s_values_direct(model, grid, _geometry(args),
                                    _config(args), args.jobs)

    labels = [f"sigma_{a}_{b}" for a, b in transitions]
    rows = []
    curves = {lab: [] for lab in labels}
    for e, s in zip(grid, s_values):
        point = EnergyPoint(float(e), physical_sheet(model.n_channels))
        k = channel_momenta(model, point)
        row = [float(e)]
        for (n_from, n_to), lab in zip(transitions, labels):
            kn = k[n_from - 1].real
            delta = 1.0 if n_from == n_to else 0.0
            sig = math.pi / kn**args.k_power * abs(delta - s[n_to - 1, n_from - 1]) ** 2
            row.append(sig)
            curves[lab].append(sig)
        rows.append(row)

    header = ["e"] + labels
    payload = {"columns": header, "rows": [[float(x) for x in r] for r in rows]}
    _emit(args, header, rows, payload)
    fig = _figure_path(args)
    if fig is not None:
        from . import plots
        plots.save_xsec_figure(grid, curves, fig)
    return 0


def cmd_residues(args) -> int:
    model = _load_model_arg(args)
    exp = _expansion_from_args(args, model)
    indices = range(1, len(exp.poles) + 1)
    if args.pole:
        for k in args.pole:
            if not 1 <= k <= len(exp.poles):
                raise ValidationError(f"pole {k} out of range 1..{len(exp.poles)}")
        indices = sorted(set(args.pole))

    n = exp.cache.s_values.shape[1]
    header = ["pole", "e_re", "e_im"]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            header += [f"res_{i}{j}_re", f"res_{i}{j}_im", f"phase_{i}{j}"]
    rows = []
    payload_rows = []
    for k in indices:
        rm = exp.poles[k - 1]
        row: list = [str(k), rm.pole.real, rm.pole.imag]
        entry = {"pole": k, "energy": [rm.pole.real, rm.pole.imag],
                 "residues": {}}
        for i in range(n):
            for j in range(n):
                v = rm.res[i, j]
                row += [v.real, v.imag, math.atan2(v.imag, v.real)]
                entry["residues"][f"{i + 1}{j + 1}"] = [v.real, v.imag]
        rows.append(row)
        payload_rows.append(entry)
    _emit(args, header, rows, {"poles": payload_rows})
    fig = _figure_path(args)
    if fig is not None:
        from . import plots
        plots.save_residues_figure([exp.poles[k - 1] for k in indices], fig)
    return 0


def cmd_argand(args) -> int:
    model = _load_model_arg(args)
    try:
        to_ch, from_ch = (int(x) for x in args.element.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad element {args.element!r}; use like 2,1") from exc
    grid = _parse_grid(args.grid)

    use_ml = args.ml or args.exclude_all_poles or bool(args.exclude_pole)
    if use_ml:
        exp = _mask_expansion(_expansion_from_args(args, model), args)
        traj = argand_trajectory(exp, (to_ch, from_ch), grid)
    else:
        s_values = _s_values_direct(model, grid, _geometry(args),
                                    _config(args), args.jobs)
        traj = np.array([s[to_ch - 1, from_ch - 1] for s in s_values])

    arcs = detect_arcs(traj, grid, min_run=args.min_run)
    header = ["e", "re", "im", "integer_marker"]
    rows = []
    for e, v in zip(grid, traj):
        marker = "1" if abs(e - round(e)) < 1e-9 else "0"
        rows.append([float(e), v.real, v.imag, marker])
    payload = {
        "element": [to_ch, from_ch],
        "trajectory": [[float(e), v.real, v.imag] for e, v in zip(grid, traj)],
        "arcs": [{"orientation": a.orientation, "e_start": a.e_start,
                  "e_end": a.e_end} for a in arcs],
    }
    _emit(args, header, rows, payload)
    for a in arcs:
        sys.stdout.write(f"arc {a.orientation} {_fmt(a.e_start)} {_fmt(a.e_end)}\n")
    fig = _figure_path(args)
    if fig is not None:
        from . import plots
        plots.save_argand_figure(grid, traj, (to_ch, from_ch), fig)
    return 0


def cmd_ml_cache(args) -> int:
    if not args.out:
        raise ValidationError("ml-cache requires --out PATH for the cache file")
    model = _load_model_arg(args)
    contour = _parse_contour(args)
    spectrum = _find_spectrum_args(args, model)
    poles = [p for p in spectrum.resonances
             if contour.contains(p.energy, margin=1e-9)]
    exp = build_expansion(model, poles, contour,
                          config=_config(args), **_geometry(args))
    save_expansion(exp, args.out)
    sys.stdout.write(
        f"cache written: {len(exp.poles)} poles, "
        f"{exp.cache.nodes.size} background nodes\n"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScatteringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
