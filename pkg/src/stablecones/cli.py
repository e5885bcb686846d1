"""Command line: ``stablecones sample | verify | decompose``.

Settings come from built-in defaults, then a YAML config file (``--config``),
then the environment (``STABLECONES_SEED``, ``STABLECONES_OUT``), then flags.
Every output carries the package version, a hash of the resolved config,
the master seed and the stream/batch ids.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import yaml

from .cones import DEFAULT_ALPHA, KINDS, ConeSpec, make_cone, spectral_from_name
from .core import MEASURE, FourierCharacter, IndicatorCharacter, StepFunction, TIME, as_element
from .errors import ConeError
from .lepage import sample_batch
from .polar import NormTransversal, PolarPair, RadialLaw, compose, decompose, tau
from .verify import (
    MUTATIONS,
    TestSet,
    VerificationReport,
    empirical_homogeneity_test,
    eps_condition_report,
    lepage_vs_cms_test,
    phi_homogeneity_test,
    series_points,
    stability_test,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FAIL = 0, 1, 2, 3
SUITES = ("stability", "phi", "cms", "homogeneity", "eps", "all")

DEFAULTS = {
    "cone": {"kind": "euclidean-sum", "dim": 1, "grid": None, "matrix": None},
    "alpha": None,
    "r": 1000.0,
    "n": 20000,
    "seed": 0,
    "spectral": "default",
    "probes": None,
    "batch_size": 1024,
    "workers": 1,
    "verify": {"suite": "all", "mutation": None, "n_perm": 400},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive linspace) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r} must look like start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(start, stop, num).tolist()
    return [float(v) for v in text.split(",") if v.strip()]


def parse_matrix(text: str) -> list[list[float]]:
    """Rows separated by ``;``, entries by ``,``."""
    return [[float(v) for v in row.split(",")] for row in text.split(";") if row.strip()]


def parse_probes(text, cone, defaults):
    """An integer keeps the first K default probes; otherwise ``;``-separated probes.

    Fourier cones take frequency vectors (``0.5;1,2``), the max cone takes
    ``index:threshold`` pairs (``0:1;3:2.5``).
    """
    if text is None:
        return defaults
    text = str(text).strip()
    if text.isdigit():
        k = int(text)
        if not 1 <= k <= len(defaults):
            raise UsageError(f"--probes count must be between 1 and {len(defaults)}")
        return defaults[:k]
    probes = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        if isinstance(defaults[0], IndicatorCharacter):
            i, _, a = item.partition(":")
            probes.append(IndicatorCharacter((int(i),), (float(a),)))
        elif isinstance(defaults[0], FourierCharacter):
            probes.append(FourierCharacter([float(v) for v in item.split(",")]))
        else:
            raise UsageError("explicit probes are supported for fourier and indicator cones only")
    return tuple(probes)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise UsageError(f"config {args.config} is not valid YAML: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a mapping")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = _merge(cfg, loaded)
    if os.environ.get("STABLECONES_SEED"):
        try:
            cfg["seed"] = int(os.environ["STABLECONES_SEED"])
        except ValueError:
            raise UsageError("STABLECONES_SEED must be an integer") from None
    if args.cone is not None:
        cfg["cone"]["kind"] = args.cone
    if args.dim is not None:
        cfg["cone"]["dim"] = args.dim
    if args.grid is not None:
        cfg["cone"]["grid"] = parse_grid(args.grid)
    if args.matrix is not None:
        cfg["cone"]["matrix"] = parse_matrix(args.matrix)
    for key in ("alpha", "r", "n", "seed", "spectral", "probes", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "suite", None) is not None:
        cfg["verify"]["suite"] = args.suite
    if getattr(args, "mutation", None) is not None:
        cfg["verify"]["mutation"] = args.mutation
    if cfg["alpha"] is None:
        cfg["alpha"] = DEFAULT_ALPHA.get(cfg["cone"]["kind"], 0.7)
    if cfg["cone"]["kind"] in ("max-grid", "time-stable") and cfg["cone"]["grid"] is None:
        cfg["cone"]["grid"] = np.linspace(0.0, 10.0, 11).tolist()
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def build(cfg: dict):
    c = cfg["cone"]
    if c["kind"] not in KINDS:
        raise UsageError(f"unknown cone {c['kind']!r}; choose from {', '.join(KINDS)}")
    try:
        spec = ConeSpec.from_dict(c)
        cone, trans, default_probes = make_cone(spec)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad cone settings {c!r}: {exc}") from None
    spectral = spectral_from_name(cfg["spectral"], spec, cone)
    probes = parse_probes(cfg["probes"], cone, default_probes)
    law = RadialLaw(float(cfg["alpha"]))
    return spec, cone, trans, probes, spectral, law


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_out(path: str | None, default_name: str):
    """Destination for a CSV: explicit path, else ``$STABLECONES_OUT/<name>``, else stdout."""
    if path is None and os.environ.get("STABLECONES_OUT"):
        path = str(Path(os.environ["STABLECONES_OUT"]) / default_name)
    if path is None:
        return None
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return Path(path)


def _write_text(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8", newline="")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args, cfg) -> int:
    spec, cone, _, _, spectral, law = build(cfg)
    n, r, seed = int(cfg["n"]), float(cfg["r"]), int(cfg["seed"])
    bs = int(cfg["batch_size"])
    batch = sample_batch(cone, law, spectral, r, n, seed, batch_size=bs, workers=int(cfg["workers"]))
    h, ver = config_hash(cfg), version()
    buf = io.StringIO()
    w = csv.writer(buf)
    meta = ["version", "config_hash", "seed", "stream", "batch"]
    if cone.element_kind == MEASURE:
        w.writerow(["run", *meta, "count", "n_atoms", "total_mass", "atoms", "bias_bound"])
        for i, m in enumerate(batch.elements):
            atoms = json.dumps([[*map(float, loc), float(wt)] for loc, wt in zip(m.locations, m.weights)])
            bias = batch.bias_bounds[i]
            w.writerow([i, ver, h, seed, 0, i // bs, int(batch.counts[i]), m.weights.size,
                        _fmt(m.total_mass), atoms, "" if np.isnan(bias) else _fmt(bias)])
    else:
        k = batch.rows.shape[1]
        w.writerow(["run", *meta, "count", *[f"v{j}" for j in range(k)], "bias_bound"])
        for i, row in enumerate(batch.rows):
            bias = batch.bias_bounds[i]
            w.writerow([i, ver, h, seed, 0, i // bs, int(batch.counts[i]), *map(_fmt, row),
                        "" if np.isnan(bias) else _fmt(bias)])
    _write_text(_open_out(args.out, "sample.csv"), buf.getvalue())
    return EXIT_OK


def _homogeneity(cone, trans, spectral, law, cfg):
    n, r, seed = int(cfg["n"]), float(cfg["r"]), int(cfg["seed"])
    runs = min(n, 10_000)
    if isinstance(trans, NormTransversal) and spectral.norm_bound is not None:
        m_hi, note = spectral.norm_bound, None
    else:
        rng = np.random.default_rng(seed)
        marks = spectral.elements(cone, rng, 2000)
        m_hi = max(tau(trans, cone, m) for m in marks)
        note = "visible radius uses the largest radial part among 2000 sampled marks"
    visible = r ** (-1.0 / law.alpha) * m_hi
    b = max(1.0, 4.0 * visible)
    pts = series_points(cone, law, spectral, r, runs, seed, trans)
    rep = empirical_homogeneity_test(
        pts, law.alpha, [TestSet(b, 2 * b, label=f"[{b:.4g}, {2 * b:.4g})")], [0.5, 2.0, 3.0],
        visible_radius=visible, seed=seed, r=r,
    )
    if note:
        rep.notes.append(note)
    return rep


def cmd_verify(args, cfg) -> int:
    suite = cfg["verify"]["suite"]
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    mutation = cfg["verify"]["mutation"]
    if mutation is not None and mutation not in MUTATIONS:
        raise UsageError(f"unknown mutation {mutation!r}; choose from {', '.join(MUTATIONS)}")
    spec, cone, trans, probes, spectral, law = build(cfg)
    n, r, seed = int(cfg["n"]), float(cfg["r"]), int(cfg["seed"])
    n_perm = int(cfg["verify"]["n_perm"])
    chosen = SUITES[:-1] if suite == "all" else (suite,)
    reports = []
    for name in chosen:
        if name == "stability":
            mut = mutation if mutation == "exponent-one" else None
            reports.append(stability_test(cone, law, spectral, 1.0, 1.0, n, r, probes, seed, mutation=mut, n_perm=n_perm))
        elif name == "phi":
            mut = mutation if mutation == "wrong-alpha" else None
            for a in (0.5, 2.0):
                reports.append(phi_homogeneity_test(cone, law, spectral, a, probes, n, r, seed, mutation=mut, n_boot=n_perm))
        elif name == "cms":
            if spec.kind != "euclidean-sum" or cone.dim != 1 or not 0 < law.alpha < 2:
                reports.append(VerificationReport("lepage-vs-cms", 0.0, 0.0, "none", None,
                                                  notes=["needs the euclidean-sum cone with d=1 and alpha in (0, 2)"]))
                continue
            mut = mutation if mutation == "skip-rescale" else None
            reports.append(lepage_vs_cms_test(law.alpha, n, r, seed, mutation=mut, n_perm=n_perm))
        elif name == "homogeneity":
            reports.append(_homogeneity(cone, trans, spectral, law, cfg))
        else:
            reports.append(eps_condition_report(cone, law, spectral, probes, seed=seed))
    h = config_hash(cfg)
    out_dir = Path(args.out or os.environ.get("STABLECONES_OUT") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow([*VerificationReport.CSV_HEADER, "version", "config_hash"])
    for i, rep in enumerate(reports):
        rep.seeds.setdefault("seed", seed)
        rep.notes.append(f"config_hash={h}")
        rep.notes.append(f"version={version()}")
        (out_dir / f"report-{i:02d}-{rep.name}.txt").write_text(rep.dumps(), encoding="utf-8")
        w.writerow([*rep.csv_row(), version(), h])
    (out_dir / "verify.csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
    for rep in reports:
        status = "skip" if rep.passed is None else ("PASS" if rep.passed else "FAIL")
        print(f"{status} {rep.name}: statistic={rep.statistic:.4g} threshold={rep.threshold:.4g}")
    return EXIT_FAIL if any(rep.passed is False for rep in reports) else EXIT_OK


def _read_rows(path: str):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            raw = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    rows, bad = [], []
    for lineno, rec in enumerate(raw, start=1):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            rows.append((lineno, [float(f) for f in rec]))
        except ValueError:
            if lineno == 1:
                continue  # header
            bad.append(lineno)
    if bad:
        raise UsageError(f"cannot parse numbers on line(s) {', '.join(map(str, bad))} of {path}")
    return rows


def cmd_decompose(args, cfg) -> int:
    spec, cone, trans, _, _, _ = build(cfg)
    if cone.element_kind == MEASURE:
        raise UsageError("decompose reads flat rows; atomic measures are not supported")
    rows = _read_rows(args.input)
    h = config_hash(cfg)
    size = cone.dim if cone.grid is None else cone.grid.size
    ok_buf, rej_buf = io.StringIO(), io.StringIO()
    ok_w, rej_w = csv.writer(ok_buf), csv.writer(rej_buf)
    rej_w.writerow(["line", "reason"])
    if args.inverse:
        ok_w.writerow(["line", *[f"v{j}" for j in range(size)], "version", "config_hash"])
    else:
        ok_w.writerow(["line", *[f"angular{j}" for j in range(size)], "radial", "version", "config_hash"])
    done = rejected = 0
    width = size + 1 if args.inverse else size
    for lineno, vals in rows:
        if len(vals) != width:
            raise UsageError(f"line {lineno}: expected {width} numbers, got {len(vals)}")
        try:
            if args.inverse:
                x = compose(cone, PolarPair(_element(cone, vals[:-1]), vals[-1]))
                out = list(x.payload)
            else:
                p = decompose(trans, cone, _element(cone, vals))
                out = [*p.angular.payload, p.radial]
        except ConeError as exc:
            rej_w.writerow([lineno, str(exc)])
            rejected += 1
            continue
        ok_w.writerow([lineno, *map(_fmt, out), version(), h])
        done += 1
    out_path = _open_out(args.out, "decompose.csv")
    _write_text(out_path, ok_buf.getvalue())
    if rejected:
        if args.rejects:
            rej_path = Path(args.rejects)
        elif out_path is not None:
            rej_path = out_path.with_name(out_path.stem + ".rejects.csv")
        else:
            rej_path = Path("rejects.csv")
        rej_path.parent.mkdir(parents=True, exist_ok=True)
        rej_path.write_text(rej_buf.getvalue(), encoding="utf-8", newline="")
        print(f"{rejected} row(s) rejected, see {rej_path}", file=sys.stderr)
    return EXIT_OK if done or not rejected else EXIT_USAGE


def _element(cone, vals):
    if cone.scaling_kind == TIME:
        return StepFunction.from_grid(cone.grid, np.array(vals))
    return as_element(cone, np.array(vals))


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stablecones", description="Simulate and verify strictly stable elements of cones.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--cone", help=f"cone kind: {', '.join(KINDS)}")
        sp.add_argument("--dim", type=int, help="vector dimension or atom location dimension")
        sp.add_argument("--grid", help="time grid, start:stop:num or a comma list")
        sp.add_argument("--matrix", help="operator matrix, rows by ';' and entries by ','")
        sp.add_argument("--alpha", type=float, help="stability index")
        sp.add_argument("--r", type=float, help="truncation level of the Poisson points")
        sp.add_argument("--n", type=int, help="number of realizations")
        sp.add_argument("--seed", type=int, help="master seed (env STABLECONES_SEED)")
        sp.add_argument("--spectral", help="spectral sampler: default, rademacher, constant, sphere, jump, atoms")
        sp.add_argument("--probes", help="probe count, or explicit probes separated by ';'")
        sp.add_argument("--workers", type=int, help="worker processes for sampling")
        sp.add_argument("--out", help="output path (env STABLECONES_OUT sets the directory)")

    s = sub.add_parser("sample", help="write one CSV row per realization")
    common(s)
    v = sub.add_parser("verify", help="run verification suites and write reports")
    common(v)
    v.add_argument("--suite", help=f"one of {', '.join(SUITES)}")
    v.add_argument("--mutation", help=f"deliberately break one test: {', '.join(MUTATIONS)}")
    d = sub.add_parser("decompose", help="polar coordinates of elements read from CSV")
    common(d)
    d.add_argument("input", help="CSV of element rows (or angular..., radial rows with --inverse)")
    d.add_argument("--inverse", action="store_true", help="compose instead: rows are angular..., radial")
    d.add_argument("--rejects", help="where rows without polar coordinates are listed")
    return p


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        cfg = resolve_config(args)
        handler = {"sample": cmd_sample, "verify": cmd_verify, "decompose": cmd_decompose}[args.command]
        return handler(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
