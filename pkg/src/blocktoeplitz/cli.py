"""Command line: ``run``, ``verify`` and ``table`` over JSON experiment configs.

Exit status: 0 ok, 2 config/validation error, 3 numerical failure.
Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .blocks import BlockSymbol
from .matfun import CLAMP_FLOOR, CLAMP_NEGATIVE, NotHPDError, clamp_tracking
from .spectral import TestFunction, ConvergenceError, _resample_sorted
from .symbols import DEFAULT_RESOLUTION, SymbolDomainError, SymbolSyntaxError, essinf_probe
from .verification import (
    ESSINF_GRID, HypothesisError, probably_positive, run_case, table_imaginary_decay,
    verify_circulant_approx, verify_geomean_circulant, verify_geomean_product,
    verify_mixed_mean_identity, verify_symmetrization,
)

log = logging.getLogger("blocktoeplitz")

CLAIMS = ("lemma2", "lemma3", "cor1", "thm1", "circ")
DEFAULT_VERIFY_N = [32, 64, 128, 256]
DEFAULT_TABLE_N = [24, 48, 96, 192, 384, 768, 1536]
DEFAULT_MAX_N = 384

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["name", "k", "layout", "blocks", "n_list"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "k": {"type": "integer", "minimum": 1},
        "layout": {"enum": ["tridiagonal", "full"]},
        "blocks": {
            "type": "object",
            "minProperties": 1,
            "propertyNames": {"pattern": r"^[0-9]+,[0-9]+$"},
            "additionalProperties": {"type": "string"},
        },
        "n_list": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
        "gridsize": {
            "oneOf": [
                {"const": "match_n"},
                {
                    "type": "object",
                    "required": ["fixed"],
                    "additionalProperties": False,
                    "properties": {"fixed": {"type": "integer", "minimum": 1}},
                },
            ]
        },
        "circulant": {"enum": ["optimal", "symbol_sampled", "symbol-sampled"]},
        "quadrature_resolution": {"type": "integer", "minimum": 4},
        "output_dir": {"type": "string"},
        "test_function": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"enum": ["gaussian_bump", "poly_window"]},
                "center": {"type": "number"},
                "width": {"type": "number", "exclusiveMinimum": 0},
                "degree": {"type": "integer", "minimum": 1},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
            },
        },
        "verify_n": {"type": "array", "minItems": 3, "items": {"type": "integer", "minimum": 2}},
        "table_n": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "spectra": {"type": "boolean"},
                "comparison": {"type": "boolean"},
                "table": {"type": "boolean"},
                "verify": {"type": "array", "items": {"enum": list(CLAIMS)}},
            },
        },
    },
}


class ConfigError(ValueError):
    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


@dataclass
class ExperimentConfig:
    name: str
    k: int
    layout: str
    blocks: dict
    n_list: list
    gridsize: object = "match_n"
    circulant: str = "optimal"
    quadrature_resolution: int = DEFAULT_RESOLUTION
    output_dir: str | None = None
    test_function: dict | None = None
    verify_n: list = field(default_factory=lambda: list(DEFAULT_VERIFY_N))
    table_n: list = field(default_factory=lambda: list(DEFAULT_TABLE_N))
    outputs: dict = field(default_factory=dict)
    blocksym: BlockSymbol | None = field(default=None, repr=False)
    digest: str = ""

    @property
    def fixed_gridsize(self):
        return None if self.gridsize == "match_n" else int(self.gridsize["fixed"])

    def testfn(self):
        tf = self.test_function
        if tf is None:
            return None
        if tf["family"] == "gaussian_bump":
            return TestFunction.gaussian_bump(tf.get("center", 0.0), tf.get("width", 1.0))
        return TestFunction.poly_window(tf.get("degree", 2), tf["lo"], tf["hi"])


def _pointer(path):
    return "".join(f"/{p}" for p in path)


def validate_config(data) -> ExperimentConfig:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        ptr = _pointer(err.absolute_path)
        if err.validator == "required":
            missing = [r for r in err.validator_value if r not in err.instance]
            ptr = f"{ptr}/{missing[0]}"
        raise ConfigError(err.message, ptr)

    k = data["k"]
    layout = data["layout"]
    for key in data["blocks"]:
        i, j = (int(s) for s in key.split(","))
        if not (1 <= i <= k and 1 <= j <= k):
            raise ConfigError(f"block key {key!r} outside 1..{k}", f"/blocks/{key}")
        if layout == "tridiagonal" and abs(i - j) > 1:
            raise ConfigError(f"tridiagonal layout cannot hold block {key!r}", f"/blocks/{key}")
    n_list = data["n_list"]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("n_list must be strictly ascending", "/n_list")
    res = data.get("quadrature_resolution", DEFAULT_RESOLUTION)
    if res & (res - 1):
        raise ConfigError("quadrature_resolution must be a power of two", "/quadrature_resolution")

    try:
        blocksym = BlockSymbol.from_strings(k, data["blocks"], layout)
    except SymbolSyntaxError as exc:
        bad = next(key for key, text in data["blocks"].items() if not _parses(text))
        raise ConfigError(str(exc), f"/blocks/{bad}") from exc

    fields = {key: data[key] for key in data}
    circ = fields.get("circulant", "optimal").replace("-", "_")
    fields["circulant"] = circ
    cfg = ExperimentConfig(**fields)
    cfg.blocksym = blocksym
    cfg.digest = hashlib.sha256(
        json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    return cfg


def _parses(text):
    from .symbols import parse_symbol

    try:
        parse_symbol(text)
    except SymbolSyntaxError:
        return False
    return True


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return validate_config(data)


# --- output ------------------------------------------------------------------


def fmt(x):
    return format(float(x), ".17g")


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj):
    return write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def spectrum_csv(result):
    vals = result.spectrum.sorted()
    ref = _resample_sorted(np.sort(np.real(result.symbol_sample.values)), len(vals))
    lines = ["index,re,im,symbol_sample"]
    for idx, (v, s) in enumerate(zip(vals, ref)):
        lines.append(f"{idx},{fmt(v.real)},{fmt(v.imag)},{fmt(s)}")
    return "\n".join(lines) + "\n"


def trend_csv(report):
    lines = ["n,residual,scaled_residual"]
    lines += [f"{n},{fmt(r)},{fmt(s)}" for n, r, s in report.rows()]
    return "\n".join(lines) + "\n"


def table_csv(table):
    lines = ["n,max_abs_imag"] + [f"{n},{fmt(v)}" for n, v in table.rows]
    return "\n".join(lines) + "\n"


def _trend_summary(report):
    return {
        "claim": report.claim,
        "n": report.n_values,
        "scaled_residuals": report.scaled,
        "verdict": report.verdict,
        "exact": report.exact,
        "loglog_slope": report.slope,
        "label": report.label,
        "proxy": "strict decrease of residual/sqrt(n) over the sweep",
    }


def hypothesis_status(blocksym):
    minima, ok = {}, True
    for (i, j), expr in sorted(blocksym.entries.items()):
        if i == j:
            continue
        minima[f"{i},{j}"] = essinf_probe(expr, ESSINF_GRID)[0]
        if not probably_positive(expr):
            ok = False
            log.warning("off-diagonal symbol %s,%s has grid minimum %.3g, not bounded away "
                        "from 0: positivity hypothesis not met, results are empirical only",
                        i, j, minima[f"{i},{j}"])
    return {"off_diagonal_positive": ok, "grid_minima": minima}


def _manifest(cfg, command, files, clamps, extra=None):
    m = {
        "tool": "blocktoeplitz",
        "version": __version__,
        "command": command,
        "config_name": cfg.name,
        "config_sha256": cfg.digest,
        "quadrature_resolution": cfg.quadrature_resolution,
        "circulant_strategy": cfg.circulant,
        "gridsize_policy": cfg.gridsize if cfg.gridsize == "match_n" else {"fixed": cfg.fixed_gridsize},
        "clamp_policy": {"negative_threshold": CLAMP_NEGATIVE, "floor": CLAMP_FLOOR,
                         "relative_to": "spectral norm"},
        "clamp_counts": dict(clamps),
        "essinf_grid": ESSINF_GRID,
        "x_axis": "sorted index / (k*n)",
        "files": sorted(str(f.name) for f in files),
    }
    if extra:
        m.update(extra)
    return m


def _out_dir(cfg, args):
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(cfg.output_dir or cfg.name)


# --- commands ----------------------------------------------------------------


def _do_verify(cfg, claims, n_list, out):
    bs = cfg.blocksym
    pairs = [(low, up) for low, up in bs.off_diagonal_pairs() if low is not None and up is not None]
    many = len(pairs) > 1
    files, summary = [], {}

    def emit(name, fn):
        try:
            rep = fn()
        except HypothesisError as exc:
            log.warning("%s refused: %s", name, exc)
            summary[name] = {"refused": str(exc)}
            return
        files.append(write_atomic(out / f"{name}_trend.csv", trend_csv(rep)))
        summary[name] = _trend_summary(rep)
        if rep.breakdown:
            summary[name]["breakdown"] = rep.breakdown

    res = cfg.quadrature_resolution
    for claim in claims:
        if claim == "circ":
            for (i, j), expr in sorted(bs.entries.items()):
                emit(f"circ_{i}_{j}", lambda e=expr: verify_circulant_approx(
                    e, n_list, cfg.circulant, res))
        elif claim == "thm1":
            emit("thm1", lambda: verify_symmetrization(bs, n_list, res))
        elif claim == "cor1":
            emit("cor1", lambda: verify_geomean_product(pairs, n_list, "inverse_first",
                                                        cfg.circulant, res))
        else:
            for j, (low, up) in enumerate(pairs, start=1):
                suffix = f"_p{j}" if many else ""
                if claim == "lemma2":
                    emit(f"lemma2{suffix}", lambda a=low, b=up: verify_geomean_circulant(
                        a, b, n_list, "plain", cfg.circulant, res))
                    emit(f"lemma2_inv{suffix}", lambda a=low, b=up: verify_geomean_circulant(
                        a, b, n_list, "inverse_first", cfg.circulant, res))
                else:
                    emit(f"lemma3{suffix}", lambda a=low, b=up: verify_mixed_mean_identity(
                        b, a, n_list, res))
    files.append(write_json(out / "verify.json", summary))
    return files, summary


def _do_table(cfg, n_list, out):
    table = table_imaginary_decay(cfg.blocksym, n_list, cfg.quadrature_resolution)
    files = [write_atomic(out / "table_imag.csv", table_csv(table))]
    summary = {"rows": [[n, v] for n, v in table.rows], "loglog_slope": table.slope,
               "exact_zero": table.exact_zero}
    files.append(write_json(out / "table.json", summary))
    return files, summary


def command_run(args):
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    hyp = hypothesis_status(cfg.blocksym)
    outputs = {"spectra": True, "comparison": True, "table": False, "verify": []}
    outputs.update(cfg.outputs)
    files = []
    with clamp_tracking() as clamps:
        results = run_case(cfg.blocksym, cfg.n_list, cfg.fixed_gridsize,
                           cfg.quadrature_resolution, cfg.testfn())
        for r in results:
            if outputs["spectra"]:
                files.append(write_atomic(out / f"spectrum_n{r.n}.csv", spectrum_csv(r)))
        if outputs["comparison"]:
            files.append(write_json(out / "metrics.json", {str(r.n): r.metrics for r in results}))
        if outputs["table"]:
            files += _do_table(cfg, cfg.table_n, out)[0]
        if outputs["verify"]:
            files += _do_verify(cfg, outputs["verify"], cfg.verify_n, out)[0]
    files.append(out / "manifest.json")
    write_json(out / "manifest.json", _manifest(cfg, "run", files, clamps, {"hypothesis": hyp}))
    return 0


def _parse_ints(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from exc


def command_verify(args):
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    claims = [c.strip() for c in args.claims.split(",") if c.strip()]
    unknown = [c for c in claims if c not in CLAIMS]
    if unknown or not claims:
        raise ConfigError(f"unknown claims {unknown}; choose from {list(CLAIMS)}")
    n_list = _parse_ints(args.n) if args.n else cfg.verify_n
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("--n needs at least three strictly ascending values")
    hyp = hypothesis_status(cfg.blocksym)
    with clamp_tracking() as clamps:
        files, summary = _do_verify(cfg, claims, n_list, out)
    files.append(out / "manifest.json")
    write_json(out / "manifest.json", _manifest(cfg, "verify", files, clamps, {"hypothesis": hyp}))
    for name, s in summary.items():
        print(f"{name}: {s.get('verdict', 'refused')}")
    return 0


def command_table(args):
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    n_list = _parse_ints(args.n) if args.n else cfg.table_n
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("--n must be a nonempty strictly ascending list")
    cap = args.max_n if args.max_n is not None else DEFAULT_MAX_N
    kept = [n for n in n_list if n <= cap]
    if not kept:
        raise ConfigError(f"no n value within --max-n {cap}")
    with clamp_tracking() as clamps:
        files, summary = _do_table(cfg, kept, out)
    files.append(out / "manifest.json")
    write_json(out / "manifest.json", _manifest(cfg, "table", files, clamps, {"max_n": cap}))
    for n, v in summary["rows"]:
        print(f"{n}\t{v:.4e}")
    print(f"slope\t{summary['loglog_slope']}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="blocktoeplitz", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="spectra and symbol comparison for each n")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.set_defaults(func=command_run)

    v = sub.add_parser("verify", help="residual trend sweeps")
    v.add_argument("--config", required=True)
    v.add_argument("--claims", required=True, help=",".join(CLAIMS))
    v.add_argument("--n", help="comma-separated ascending n values")
    v.add_argument("--out")
    v.set_defaults(func=command_verify)

    t = sub.add_parser("table", help="max |Im lambda| per n")
    t.add_argument("--config", required=True)
    t.add_argument("--n", help="comma-separated ascending n values")
    t.add_argument("--max-n", type=int, default=None,
                   help=f"drop n above this cap (default {DEFAULT_MAX_N})")
    t.add_argument("--out")
    t.set_defaults(func=command_table)
    return p


def _fail(kind, exc, status, **extra):
    payload = {"error": kind, "message": str(exc), "exit_status": status}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return status


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", exc, 2, pointer=exc.pointer)
    except (SymbolSyntaxError, SymbolDomainError, HypothesisError) as exc:
        return _fail("validation", exc, 2)
    except NotHPDError as exc:
        return _fail("not_hpd", exc, 3, block=list(exc.where) if exc.where else None)
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        return _fail("numerical", exc, 3)
    except ValueError as exc:
        return _fail("validation", exc, 2)


if __name__ == "__main__":
    sys.exit(main())
