"""Command-line experiment runner.

Subcommands: ``sample``, ``entropy-scan``, ``compare``, ``metric-check``.

Exit codes: 0 success/pass, 2 usage error, 3 statistical failure, 4 I/O error.

Sampling is split into blocks of :data:`BLOCK_SIZE` draws; block ``b`` uses
``RngStream(seed, b)``.  Workers only decide who computes which block, so
output is identical for any ``--workers``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analytic import (
    BlochRadialLaw,
    avg_entropy_induced_2N,
    avg_entropy_page,
    bures_line_element,
    bures_quadratic_form,
    density_bures_bloch,
    density_hs_bloch,
    get_density,
    perturbation_from_generators,
    radial_cdf_induced,
)
from .exceptions import QMeasureError
from .linalg import entanglement_entropy
from .samplers import GENERATOR_NAME, EnsembleSpec, RngStream, haar_unitary, sample_ensemble
from .stats import chi_square_simplex, ks_test, mean_with_stderr

SCHEMA_VERSION = "1.0"
BLOCK_SIZE = 4096
METRIC_SCALE = 1e-4
METRIC_TOLERANCE = 1e-6
ENV_SEED = "QMEASURE_DEFAULT_SEED"

EXIT_OK, EXIT_USAGE, EXIT_STAT, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "n": 10000,
    "seed": 0,
    "workers": 1,
    "format": "csv",
    "out": None,
    "m": 2,
    "dims": "2..10",
    "trials": 1000,
    "dim": None,
    "ensemble": None,
    "density": None,
}


class UsageError(Exception):
    pass


# -- sampling ---------------------------------------------------------------------------

def _sample_block(job):
    spec_text, seed, stream_id, size = job
    spec = EnsembleSpec.parse(spec_text)
    return sample_ensemble(spec, RngStream(seed, stream_id), size)


def run_blocks(spec: EnsembleSpec, n: int, seed: int, workers: int = 1, stream_base: int = 0):
    """Draw ``n`` members of ``spec`` in fixed blocks; return ``(spectra, bloch)``."""
    jobs = [(str(spec), seed, stream_base + b, min(BLOCK_SIZE, n - start))
            for b, start in enumerate(range(0, n, BLOCK_SIZE))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_block, jobs))
    else:
        parts = [_sample_block(j) for j in jobs]
    spectra = np.concatenate([p[0] for p in parts])
    bloch = None if parts[0][1] is None else np.concatenate([p[1] for p in parts])
    return spectra, bloch


# -- config -----------------------------------------------------------------------------

def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides env (seed only) and defaults."""
    cfg = {}
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
    opts = dict(DEFAULTS)
    if os.environ.get(ENV_SEED):
        opts["seed"] = os.environ[ENV_SEED]
    opts.update({k: v for k, v in cfg.items() if k in DEFAULTS})
    opts.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    try:
        for key in ("n", "seed", "workers", "m", "trials"):
            opts[key] = int(opts[key])
        if opts["dim"] is not None:
            opts["dim"] = int(opts["dim"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if opts["n"] < 1 or opts["workers"] < 1 or opts["trials"] < 1:
        raise UsageError("--n, --workers and --trials must be at least 1")
    if not 0 <= opts["seed"] < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if opts["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    return opts


def _parse_dims(text: str) -> list[int]:
    text = str(text)
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad dimension list {text!r}") from None


# -- output -----------------------------------------------------------------------------

def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(meta: dict, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _json_text(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _meta(command: str, **extra) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "generator": GENERATOR_NAME,
        "stream_partition": f"stream_id = block index, block size {BLOCK_SIZE}",
        "qmeasure_version": __version__,
        "created": _timestamp(),
    }
    meta.update(extra)
    return meta


def _parse_ensemble(text) -> EnsembleSpec:
    if not text:
        raise UsageError("--ensemble is required")
    try:
        return EnsembleSpec.parse(text)
    except QMeasureError as exc:
        raise UsageError(str(exc)) from None


# -- subcommands ------------------------------------------------------------------------

def cmd_sample(opts: dict) -> int:
    spec = _parse_ensemble(opts["ensemble"])
    spectra, bloch = run_blocks(spec, opts["n"], opts["seed"], opts["workers"])
    entropy = entanglement_entropy(spectra)
    columns = [f"lambda_{i + 1}" for i in range(spectra.shape[1])] + ["entropy_bits"]
    data = [spectra, entropy[:, None]]
    if bloch is not None:
        columns += ["bloch_x", "bloch_y", "bloch_z"]
        data.append(bloch)
    table = np.hstack(data)
    meta = _meta("sample", ensemble=str(spec), seed=opts["seed"], n_samples=opts["n"])
    if opts["format"] == "csv":
        text = _csv_text(meta, columns, table)
    else:
        text = _json_text({"schema_version": SCHEMA_VERSION, "metadata": meta,
                           "columns": columns, "records": table.tolist()})
    _emit(text, opts["out"])
    return EXIT_OK


def entropy_scan(m: int, dims, n_samples: int, seed: int, workers: int = 1) -> list[dict]:
    rows = []
    for row, n in enumerate(dims):
        if n < 1:
            raise UsageError("dimensions must be positive")
        small, big = min(m, n), max(m, n)
        if small == 2 and big >= 2:
            method = "series" if big <= 60 else "page"
            analytic = avg_entropy_induced_2N(big)
        else:
            method = "page"
            analytic = avg_entropy_page(small, big)
        spectra, _ = run_blocks(EnsembleSpec("induced", m, n), n_samples, seed, workers,
                                stream_base=row << 32)
        mean, err = mean_with_stderr(entanglement_entropy(spectra))
        z = (mean - analytic) / err if err > 0 else 0.0
        rows.append({"m": m, "n": n, "analytic_bits": analytic, "method": method,
                     "mc_mean_bits": mean, "stderr": err, "abs_z": abs(z)})
    return rows


def cmd_entropy_scan(opts: dict) -> int:
    dims = _parse_dims(opts["dims"])
    rows = entropy_scan(opts["m"], dims, opts["n"], opts["seed"], opts["workers"])
    meta = _meta("entropy-scan", m=opts["m"], seed=opts["seed"], n_samples=opts["n"])
    columns = ["m", "n", "analytic_bits", "method", "mc_mean_bits", "stderr", "abs_z"]
    if opts["format"] == "csv":
        text = _csv_text(meta, columns, [[str(r["m"]), str(r["n"]), r["analytic_bits"], r["method"],
                                          r["mc_mean_bits"], r["stderr"], r["abs_z"]] for r in rows])
    else:
        text = _json_text({"schema_version": SCHEMA_VERSION, "metadata": meta, "rows": rows})
    _emit(text, opts["out"])
    return EXIT_OK


def radial_cdf_for(density_id: str):
    """CDF of the Bloch radius for ``ball-uniform``, ``ball-bures`` or ``ball-induced-N``."""
    if density_id == "ball-uniform":
        return BlochRadialLaw(density_hs_bloch).cdf
    if density_id == "ball-bures":
        return BlochRadialLaw(density_bures_bloch).cdf
    if density_id.startswith("ball-induced-"):
        try:
            n = int(density_id.rsplit("-", 1)[1])
        except ValueError:
            raise UsageError(f"bad density id {density_id!r}") from None
        if n < 2:
            raise UsageError("ball-induced-N needs N >= 2")
        return lambda r: radial_cdf_induced(np.clip(r, 0.0, 1.0), n)
    raise UsageError(f"unknown radial density {density_id!r}")


def compare(spec: EnsembleSpec, density_id: str, n: int, seed: int, workers: int = 1):
    """Sample ``spec`` and test it against ``density_id``; returns a GofReport.

    ``ball-*`` ids run a KS test on the Bloch radius (qubits only); eigenvalue
    density ids (``hs``, ``bures``, ``induced-N``) run the chi-square test on
    the spectra.
    """
    if not density_id:
        raise UsageError("--density is required")
    if density_id.startswith("ball-"):
        if spec.m != 2:
            raise UsageError(f"{density_id} is a qubit law but the ensemble has m={spec.m}")
        cdf = radial_cdf_for(density_id)
        spectra, _ = run_blocks(spec, n, seed, workers)
        return ks_test(spectra[:, 0] - spectra[:, 1], cdf)
    try:
        dens = get_density(density_id, spec.m)
    except QMeasureError as exc:
        raise UsageError(str(exc)) from None
    if spec.m > 3:
        raise UsageError("chi-square comparison supports m <= 3")
    spectra, _ = run_blocks(spec, n, seed, workers)
    return chi_square_simplex(spectra, dens)


def cmd_compare(opts: dict) -> int:
    spec = _parse_ensemble(opts["ensemble"])
    report = compare(spec, opts["density"], opts["n"], opts["seed"], opts["workers"])
    meta = _meta("compare", ensemble=str(spec), density=opts["density"], seed=opts["seed"],
                 n_samples=opts["n"])
    _emit(_json_text({"schema_version": SCHEMA_VERSION, "metadata": meta, "report": report.to_dict()}),
          opts["out"])
    return EXIT_OK if report.passed else EXIT_STAT


def metric_check(trials: int, seed: int, dims=(2, 3), scale: float = METRIC_SCALE) -> dict:
    """Compare the Bures line element with its eigenvalue/generator quadratic form.

    For each trial: a spectrum from Dirichlet(1), a Haar eigenbasis, and
    Gaussian ``(dlambda, dx, dy)`` of size ``scale`` with ``sum dlambda = 0``.
    """
    results = []
    for k, m in enumerate(dims):
        gen = RngStream(seed, k).generator()
        worst = 0.0
        for _ in range(trials):
            lam = gen.dirichlet(np.ones(m))
            v = haar_unitary(m, gen)
            dlam = scale * gen.standard_normal(m)
            dlam -= dlam.mean()
            dx = scale * gen.standard_normal((m, m))
            dy = scale * gen.standard_normal((m, m))
            rho = (v * lam) @ v.conj().T
            drho = perturbation_from_generators(lam, v, dlam, dx, dy)
            direct = bures_line_element(rho, drho)
            form = bures_quadratic_form(lam, dlam, dx, dy)
            if direct != form:
                worst = max(worst, abs(direct - form) / (abs(form) or abs(direct)))
        results.append({"dim": m, "trials": trials, "max_rel_error": worst})
    ok = all(r["max_rel_error"] <= METRIC_TOLERANCE for r in results)
    return {"scale": scale, "tolerance": METRIC_TOLERANCE, "results": results, "pass": ok}


def cmd_metric_check(opts: dict) -> int:
    dims = (opts["dim"],) if opts["dim"] else (2, 3)
    if any(d < 2 for d in dims):
        raise UsageError("--dim must be at least 2")
    report = metric_check(opts["trials"], opts["seed"], dims)
    meta = _meta("metric-check", seed=opts["seed"], trials=opts["trials"])
    _emit(_json_text({"schema_version": SCHEMA_VERSION, "metadata": meta, "report": report}), opts["out"])
    return EXIT_OK if report["pass"] else EXIT_STAT


# -- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="number of samples")
    common.add_argument("--seed", type=int, help=f"master seed (fallback: ${ENV_SEED})")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--config", help="flat key = value config file")

    parser = argparse.ArgumentParser(prog="qmeasure", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw an ensemble and write one row per member")
    p.add_argument("--ensemble", help="induced:M,N | bures-qubit | hs-qubit | simplex:M,DENSITY")

    p = sub.add_parser("entropy-scan", parents=[common], help="analytic vs Monte-Carlo mean entropy")
    p.add_argument("--m", type=int, help="system dimension")
    p.add_argument("--dims", help="auxiliary dimensions, e.g. 2..10 or 2,5,100")

    p = sub.add_parser("compare", parents=[common], help="goodness-of-fit of an ensemble against a law")
    p.add_argument("--ensemble")
    p.add_argument("--density", help="ball-uniform | ball-bures | ball-induced-N | hs | bures | induced-N")

    p = sub.add_parser("metric-check", parents=[common], help="Bures line element consistency")
    p.add_argument("--trials", type=int)
    p.add_argument("--dim", type=int, help="restrict to one dimension (default: 2 and 3)")
    return parser


COMMANDS = {
    "sample": cmd_sample,
    "entropy-scan": cmd_entropy_scan,
    "compare": cmd_compare,
    "metric-check": cmd_metric_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        opts = _resolve(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"qmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qmeasure: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QMeasureError as exc:
        print(f"qmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
