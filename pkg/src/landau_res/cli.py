"""Command line front end: ``landau-res <subcommand> --config c.json --out dir``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.  Errors are
reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import shutil
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .axis import ThresholdError, chart_wavenumbers, resolvent_matrix
from .landau import (QuadratureError, asymptotic_law, counting_functions, fit_counting_exponent,
                     law_family, toeplitz_spectrum, weight_spectrum)
from .model import Config, ConfigError, load_config, serialize
from .operator import TailNotConverged, bq_spectrum, get_model, log_det2_total
from .resonances import (ContourError, Region, annulus_census, arg_increment, chart_log_det,
                         chart_log_fredholm, line, locate_resonances, sector_census)
from .ssf import (Cutoff, GaussianTest, Rect, UnlocatedResonance, UnwrapError, breit_wigner_residual,
                  phi_lambda, ssf_trace, trace_formula_check)

NUMERICAL_ERRORS = (ThresholdError, ContourError, TailNotConverged, QuadratureError, UnwrapError,
                    UnlocatedResonance, FloatingPointError, np.linalg.LinAlgError)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(fmt(v)) if math.isfinite(v) else repr(v)
    return str(obj)


def write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------ manifest


@dataclass
class RunManifest:
    config_hash: str
    subcommand: str
    parameters: dict
    version: str = __version__
    started: str = ""
    finished: str = ""
    outputs: list = field(default_factory=list)
    cache_hit: bool = False

    @property
    def key(self) -> str:
        text = json.dumps([self.config_hash, self.subcommand, _jsonable(self.parameters)], sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:24]

    def as_dict(self) -> dict:
        return {"config_hash": self.config_hash, "subcommand": self.subcommand,
                "parameters": self.parameters, "version": self.version, "started": self.started,
                "finished": self.finished, "outputs": self.outputs, "cache_hit": self.cache_hit,
                "key": self.key}


def cache_root() -> Path:
    env = os.environ.get("LANDAU_RES_CACHE")
    return Path(env) if env else Path.home() / ".cache" / "landau_res"


def cache_lookup(manifest: RunManifest, root: Path | None = None):
    """Artifact paths of a previous identical run, or None."""
    entry = (root or cache_root()) / manifest.key
    mpath = entry / "manifest.json"
    if not mpath.exists():
        return None
    try:
        with open(mpath) as fh:
            stored = json.load(fh)
        files = [entry / name for name in stored["outputs"]]
        if stored.get("key") != manifest.key or not all(p.is_file() for p in files):
            raise ValueError("incomplete entry")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        warnings.warn(f"ignoring corrupt cache entry {entry}: {exc}")
        return None
    return files


def cache_store(manifest: RunManifest, out: Path, root: Path | None = None):
    entry = (root or cache_root()) / manifest.key
    tmp = entry.with_name(entry.name + ".tmp")
    shutil.rmtree(tmp, ignore_errors=True)
    tmp.mkdir(parents=True)
    for name in manifest.outputs:
        shutil.copy2(out / name, tmp / name)
    write_json(tmp / "manifest.json", manifest.as_dict())
    shutil.rmtree(entry, ignore_errors=True)
    tmp.rename(entry)


# ------------------------------------------------------------------ parsing


def parse_region(spec: str, b: float) -> Region:
    parts = spec.split(":")
    kind, nums = parts[0], [float(p) for p in parts[1:]]
    if kind == "annulus" and len(nums) in (1, 2):
        return Region.annulus(*nums)
    if kind == "sector" and len(nums) == 4:
        return Region.sector(*nums)
    if kind == "box" and len(nums) == 4:
        return Region.box(*nums)
    if kind == "quadrant" and len(nums) == 2:
        # open first quadrant, 1e-3 sqrt(2b) away from both axes
        m = 1e-3 * math.sqrt(2 * b) / nums[0]
        return Region.sector(m, math.pi / 2 - m, *nums)
    raise ValueError(f"bad region spec {spec!r}")


def parse_window(spec: str):
    a, b, n = spec.split(":")
    a, b, n = float(a), float(b), int(n)
    if not a < b or n < 2:
        raise ValueError(f"bad window {spec!r}")
    return a, b, n


def parse_floats(spec: str):
    return [float(v) for v in spec.split(",") if v.strip()]


def parse_rect(spec: str) -> Rect:
    v = [float(p) for p in spec.split(":")]
    if len(v) != 4:
        raise ValueError(f"bad rectangle {spec!r}")
    return Rect(*v)


# ---------------------------------------------------------------- commands


def cmd_toeplitz(cfg: Config, args, out: Path) -> list:
    spec = toeplitz_spectrum(cfg.q, cfg.potential.radial, cfg.b, cfg.truncation.L_max,
                             floor=args.floor)
    write_csv(out / "spectrum.csv", ["ell", "lambda"], spec.pairs)
    files = ["spectrum.csv"]
    if args.s_range:
        a, b, n = parse_window(args.s_range)
        s = np.geomspace(a, b, n)
        rep = _counting(cfg, spec.eigenvalues, s)
        write_csv(out / "counting.csv", ["s", "n_plus", "sigma1", "sigma2", "ntilde1", "ntilde2",
                                         "law_predicted"], rep.rows())
        files.append("counting.csv")
    write_json(out / "summary.json", {"q": cfg.q, "count": len(spec.pairs), "floor_reached": spec.floor_reached})
    return files + ["summary.json"]


def _counting(cfg, eigs, s):
    radial = cfg.potential.radial
    try:
        law = [asymptotic_law(radial, v, cfg.b) for v in s]
    except ValueError:
        law = None
    rep = counting_functions(eigs, s)
    rep.law_predicted = np.array(law) if law is not None else None
    return rep


def cmd_fit(cfg: Config, args, out: Path) -> list:
    spec = toeplitz_spectrum(cfg.q, cfg.potential.radial, cfg.b, max(cfg.truncation.L_max, args.sectors), floor=0)
    a, b, n = parse_window(args.s_range or "1e-8:1e-2:25")
    s = np.geomspace(a, b, n)
    rep = _counting(cfg, spec.eigenvalues, s)
    fam = law_family(cfg.potential.radial)
    fit = fit_counting_exponent(s, rep.n_plus, fam)
    write_csv(out / "counting.csv", ["s", "n_plus", "sigma1", "sigma2", "ntilde1", "ntilde2", "law_predicted"],
              rep.rows())
    write_json(out / "fit.json", {"family": fam, "slope": fit.slope, "prefactor": fit.prefactor,
                                  "residual": fit.residual})
    return ["counting.csv", "fit.json"]


def _default_region(cfg: Config) -> Region:
    root = math.sqrt(2 * cfg.b)
    return Region.annulus(0.02 * root, 0.9 * root)


def cmd_resonances(cfg: Config, args, out: Path) -> list:
    region = parse_region(args.region, cfg.b) if args.region else _default_region(cfg)
    res = locate_resonances(region, cfg)
    write_json(out / "resonances.json", [r.as_dict() | {"iterations": r.iterations, "cluster": r.cluster}
                                         for r in res])
    return ["resonances.json"]


def cmd_census(cfg: Config, args, out: Path) -> list:
    root = math.sqrt(2 * cfg.b)
    radii = parse_floats(args.radii) if args.radii else [0.2 * 2.0**-i * root for i in range(4)]
    lf = chart_log_fredholm(cfg)

    def one(r):
        return annulus_census([r], cfg, log_f=lf)[0]

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(one, radii))
    else:
        rows = [one(r) for r in radii]
    rows.sort(key=lambda row: row.r)
    write_csv(out / "census.csv", ["r", "count", "n_plus", "bound", "ratio"],
              [(x.r, x.count, x.n_plus, x.bound, x.ratio) for x in rows])
    files = ["census.csv"]
    if args.delta is not None:
        if not cfg.potential.sign_definite:
            raise ValueError("sector census needs a sign-definite profile")
        lo, hi = min(radii), 2 * max(radii)
        sc = sector_census(args.delta, cfg.potential.sign, lo, hi, cfg)
        write_json(out / "sector.json", {"delta": args.delta, "r_lo": lo, "r_hi": hi,
                                         "inside": sc.inside, "outside": sc.outside})
        files.append("sector.json")
    return files


def cmd_ssf(cfg: Config, args, out: Path) -> list:
    a, b, n = parse_window(args.window or f"{2 * cfg.b * cfg.q + 1e-3}:{2 * cfg.b * cfg.q + 0.8 * cfg.b}:64")
    lam = np.linspace(a, b, n)
    tr = ssf_trace(lam, cfg)
    base = 2 * cfg.b * cfg.q
    phi = [phi_lambda(x - base, cfg) if x > base else math.nan for x in lam]
    write_csv(out / "ssf.csv", ["lambda", "xi2", "correction", "xi", "phi"],
              [(x, x2, c, xi, p) for (x, x2, c, xi), p in zip(tr.rows(), phi)])
    write_json(out / "ssf.json", {"anchor": tr.anchor, **tr.diagnostics})
    return ["ssf.csv", "ssf.json"]


def _resonances_for(cfg: Config, args, default: Region):
    region = parse_region(args.region, cfg.b) if args.region else default
    return locate_resonances(region, cfg)


def _region_for_window(cfg: Config, lo: float, hi: float) -> Region:
    """Annulus of k with k^2 + 2bq covering [lo, hi] (both sides of the level)."""
    base = 2 * cfg.b * cfg.q
    ends = [abs(lo - base), abs(hi - base)]
    r0 = 0.8 * math.sqrt(min(ends)) if not lo < base < hi else 2e-3 * math.sqrt(2 * cfg.b)
    r1 = min(1.25 * math.sqrt(max(ends)), 0.95 * math.sqrt(2 * cfg.b))
    return Region.annulus(r0, r1)


def cmd_bw(cfg: Config, args, out: Path) -> list:
    a, b, n = parse_window(args.window)
    res = _resonances_for(cfg, args, _region_for_window(cfg, a, b))
    bw = breit_wigner_residual((a, b), cfg, res, n0=n)
    write_csv(out / "bw.csv", ["mu", "xi_prime", "lorentzian_sum", "residual"], bw.rows())
    write_json(out / "bw.json", {
        "window": list(bw.window), "r": bw.r, "poles": bw.poles, "real_resonances": bw.real_resonances,
        "max_residual": bw.max_residual, "oscillation": bw.oscillation, "smoothness": bw.smoothness,
        "bound_scale": bw.bound_scale, "within_bound_scale": bw.max_residual <= bw.bound_scale})
    return ["bw.csv", "bw.json"]


def cmd_trace(cfg: Config, args, out: Path) -> list:
    inner, outer = parse_rect(args.inner), parse_rect(args.outer)
    ramp = args.ramp if args.ramp else 0.75 * min(inner.x0 - outer.x0, outer.x1 - inner.x1)
    psi = Cutoff(inner.x0, inner.x1, ramp, ramp)
    f = GaussianTest(tuple(parse_floats(args.test_coeffs)), args.test_center, args.test_width)
    base = 2 * cfg.b * cfg.q
    zs = [base + args.r * complex(x, 0) for x in (outer.x0, outer.x1)]
    res = _resonances_for(cfg, args, _region_for_window(cfg, zs[0].real, zs[1].real))
    tf = trace_formula_check(f, psi, args.r, cfg, res, outer=outer, inner=inner)
    write_json(out / "trace_formula.json", {
        "lhs": tf.lhs, "rhs": tf.rhs, "error": tf.error, "error_bound": tf.error_bound,
        "cutoff_constant": tf.cutoff_constant, "sup_f": tf.sup_f, "resonance_scale": tf.resonance_scale,
        "counted": [{"z": z, "multiplicity": m} for z, m in tf.counted]})
    return ["trace_formula.json"]


COMMANDS = {
    "toeplitz-spectrum": cmd_toeplitz,
    "resonances": cmd_resonances,
    "census": cmd_census,
    "ssf": cmd_ssf,
    "bw-check": cmd_bw,
    "trace-formula": cmd_trace,
    "asymptotics-fit": cmd_fit,
}


# ------------------------------------------------------------------ dumps


def dump_green(cfg: Config, level: int, k: complex, out: Path) -> str:
    m = get_model(cfg)
    kj = chart_wavenumbers([level], cfg.q, k, cfg.b)[0]
    G = resolvent_matrix(kj, m.grid)
    rows = [(a, c, G[a, c].real, G[a, c].imag) for a in range(G.shape[0]) for c in range(G.shape[1])]
    name = f"green_{level}.csv"
    write_csv(out / name, ["a", "b", "re", "im"], rows)
    return name


def dump_det_path(cfg: Config, spec: str, out: Path) -> str:
    a, b, n = spec.split(",")
    a, b, n = complex(a), complex(b), int(n)
    lf = chart_log_det(cfg)
    ks = [a + (b - a) * t for t in np.linspace(0, 1, n)]
    arg = lf(ks[0]).imag
    rows = [(ks[0].real, ks[0].imag, lf(ks[0]).real, arg)]
    for k0, k1 in zip(ks[:-1], ks[1:]):
        arg += arg_increment(lf, line(k0, k1), n0=1)
        rows.append((k1.real, k1.imag, lf(k1).real, arg))
    write_csv(out / "det_path.csv", ["re_k", "im_k", "log_abs", "arg"], rows)
    return "det_path.csv"


# ------------------------------------------------------------------ driver


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landau-res", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--region")
    p.add_argument("--window", help="a:b:n")
    p.add_argument("--epsilon", type=float, help="override the coupling")
    p.add_argument("--radii", help="comma separated annulus inner radii")
    p.add_argument("--delta", type=float, help="sector census aperture")
    p.add_argument("--s-range", help="a:b:n, log spaced")
    p.add_argument("--floor", type=float, default=1e-14)
    p.add_argument("--sectors", type=int, default=48)
    p.add_argument("--r", type=float, default=1e-3)
    p.add_argument("--inner", default="-2.1:-1.1:-0.1:0.1")
    p.add_argument("--outer", default="-2.5:-0.75:-0.2:0.2")
    p.add_argument("--ramp", type=float)
    p.add_argument("--test-coeffs", default="1")
    p.add_argument("--test-center", type=float, default=0.0)
    p.add_argument("--test-width", type=float, default=1.0)
    p.add_argument("--dump-green", type=int, help=argparse.SUPPRESS)
    p.add_argument("--dump-k", type=complex, default=0.3 + 0.1j, help=argparse.SUPPRESS)
    p.add_argument("--dump-det-path", help=argparse.SUPPRESS)
    return p


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ConfigError):
        err["field"] = exc.field
    if isinstance(exc, UnwrapError):
        err["interval"] = list(exc.interval)
    print(json.dumps(_jsonable(err)), file=sys.stderr)
    return code


def _parameters(args) -> dict:
    skip = {"config", "out", "threads", "no_cache", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = load_config(args.config)
        if args.epsilon is not None:
            if args.epsilon < 0:
                raise ConfigError("epsilon", "coupling must be nonnegative")
            cfg = cfg.with_coupling(args.epsilon)
        if args.threads < 1:
            raise ConfigError("threads", "must be positive")
    except (ConfigError, OSError) as exc:
        return _fail(1, exc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.hash(), args.command, _parameters(args) | {"config": serialize(cfg)})
    man.started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    use_cache = not args.no_cache
    if use_cache:
        hit = cache_lookup(man)
        if hit is not None:
            for src in hit:
                shutil.copy2(src, out / src.name)
            man.outputs = [p.name for p in hit]
            man.cache_hit = True
            man.finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
            write_json(out / "manifest.json", man.as_dict())
            return 0
    try:
        files = COMMANDS[args.command](cfg, args, out)
        if args.dump_green is not None:
            files.append(dump_green(cfg, args.dump_green, args.dump_k, out))
        if args.dump_det_path:
            files.append(dump_det_path(cfg, args.dump_det_path, out))
    except ConfigError as exc:
        return _fail(1, exc)
    except NUMERICAL_ERRORS as exc:
        return _fail(2, exc)
    except ValueError as exc:
        return _fail(1, exc)
    man.outputs = files
    man.finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if use_cache:
        try:
            cache_store(man, out)
        except OSError as exc:
            warnings.warn(f"cache write failed: {exc}")
    write_json(out / "manifest.json", man.as_dict())
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
