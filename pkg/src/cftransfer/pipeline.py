"""End-to-end transfer pipeline: thin subset, seed set, digit insertion, checks, witness.

The certificate is a pure function of the normalized config and the package
version; it carries no timestamps, host data or thread counts.
"""
from __future__ import annotations

import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cfcore import DigitWord, format_word
from .insertion import (canonical_seed_word, default_epsilons, empirical_holder, plan_banach, plan_relative, plan_to_json, splice,
                        spliced_mass_estimate, verify_plan)
from .intsets import ExplicitSet, SetError, build_set, fit_poly_density
from .moran import choose_seed_params, dimension_report
from .numerics import fmt, frac_str, parse_frac
from .progressions import find_ap, find_poly_progression, locate_in_digits
from .thinning import thin_subset

logger = logging.getLogger(__name__)

SCHEMA = "cftransfer.certificate/1"
SPLICED_MASS_TOL = Fraction(1, 20)

DEFAULTS = {
    "kind": "relative",
    "kmax": 3,
    "epsilons": None,
    "windowTol": None,
    "fit": {"alpha": "1", "beta": "0", "window": [10, 10**4]},
    "horizon": 10**6,
    "tauHorizon": 10**6,
    "thinBound": 10**5,
    "seedHorizon": 60,
    "depth": 300,
    "dimensionTolerance": "1/50",
    "holder": {"levels": [2], "samples": 1000, "seed": 0},
    "witness": {"kind": "ap", "ell": 4, "kBound": 10**3, "mBound": 10**3},
    "exportLength": None,
    "widths": None,
}


class ConfigError(ValueError):
    """Bad or incomplete configuration (a usage error)."""


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PipelineResult:
    certificate: dict
    exit_code: int
    failures: list = field(default_factory=list)

    def dumps(self) -> str:
        return dumps_certificate(self.certificate)


def dumps_certificate(cert: dict) -> str:
    return json.dumps(cert, indent=2, ensure_ascii=False) + "\n"


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if p.suffix == ".toml":
        if sys.version_info >= (3, 11):
            import tomllib as tomli
        else:
            import tomli
        try:
            return tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def normalize_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be an object")
    unknown = set(raw) - set(DEFAULTS) - {"S", "A"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "S" not in raw:
        raise ConfigError("config must name the set S")
    cfg = {"S": raw["S"], "A": raw.get("A")}
    for key, default in DEFAULTS.items():
        val = raw.get(key, default)
        if isinstance(default, dict) and isinstance(val, dict):
            val = {**default, **val}
        cfg[key] = val
    if cfg["kind"] not in ("relative", "banach"):
        raise ConfigError(f"kind must be 'relative' or 'banach', not {cfg['kind']!r}")
    if cfg["kind"] == "relative" and cfg["A"] is None:
        raise ConfigError("a relative pipeline needs the subset A")
    if cfg["widths"] is not None:
        try:
            cfg["widths"] = [int(w) for w in cfg["widths"]]
        except (TypeError, ValueError):
            raise ConfigError("widths must be a list of integers") from None
    for key in ("kmax", "horizon", "tauHorizon", "thinBound", "seedHorizon", "depth"):
        try:
            cfg[key] = int(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer") from None
        if cfg[key] < 1:
            raise ConfigError(f"{key} must be positive")
    try:
        if cfg["epsilons"] is None:
            cfg["epsilons"] = [frac_str(e) for e in default_epsilons(cfg["kmax"])]
        else:
            cfg["epsilons"] = [frac_str(parse_frac(e)) for e in cfg["epsilons"]]
        if cfg["windowTol"] is not None:
            cfg["windowTol"] = frac_str(parse_frac(cfg["windowTol"]))
        cfg["dimensionTolerance"] = frac_str(parse_frac(cfg["dimensionTolerance"]))
        fit = cfg["fit"]
        cfg["fit"] = {"alpha": frac_str(parse_frac(fit["alpha"])), "beta": frac_str(parse_frac(fit["beta"])),
                      "window": [int(fit["window"][0]), int(fit["window"][1])]}
    except (ValueError, ZeroDivisionError, KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"bad numeric parameter: {exc}") from None
    try:
        levels = [int(k) for k in cfg["holder"].get("levels", [])]
    except (TypeError, ValueError):
        raise ConfigError("holder levels must be integers") from None
    if any(not 1 <= k <= cfg["kmax"] for k in levels):
        raise ConfigError(f"holder levels must lie in 1..kmax = {cfg['kmax']}")
    cfg["holder"]["levels"] = levels
    w = cfg["witness"]
    if w is not None:
        if w.get("kind") not in ("ap", "poly"):
            raise ConfigError("witness kind must be 'ap' or 'poly'")
        if w["kind"] == "poly" and not w.get("polys"):
            raise ConfigError("poly witness needs a list of polynomials")
    return cfg


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StageError):
        raise
    except SetError as exc:
        raise StageError(name, str(exc)) from exc
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        raise StageError(name, f"{type(exc).__name__}: {exc}") from exc


def _search_witness(spec: dict, S, threads: int):
    kb, mb = int(spec.get("kBound", 10**3)), int(spec.get("mBound", 10**3))
    if spec["kind"] == "ap":
        return find_ap(S, int(spec["ell"]), kb, mb, threads=threads)
    return find_poly_progression(S, spec["polys"], kb, mb, positive_k=bool(spec.get("positiveK", False)),
                                 threads=threads)


def run_transfer_pipeline(config, out_dir=None, threads: int = 1) -> PipelineResult:
    """Run every stage and assemble the certificate.

    config is a path or an already-loaded mapping.  Exit code 0 means every
    verification passed, 1 that some check failed or a stage broke; usage
    errors raise ConfigError (exit code 2 at the command line).
    """
    raw = load_config(config) if isinstance(config, (str, Path)) else config
    cfg = normalize_config(raw)
    try:
        S = build_set(cfg["S"], cfg["horizon"])
        A = build_set(cfg["A"], cfg["horizon"]) if cfg["A"] is not None else None
    except (SetError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad set description: {exc}") from None

    cert = {"schema": SCHEMA, "version": __version__, "inputs": cfg,
            "tolerances": {"guardBand": "1e-9", "windowTol": cfg["windowTol"], "dimension": cfg["dimensionTolerance"],
                           "splicedMass": frac_str(SPLICED_MASS_TOL), "densityConvention": "tail window [ceil(N/2), N]"},
            "stages": {}}
    stages = cert["stages"]
    failures: list[str] = []

    try:
        thin = _stage("thinning", thin_subset, S, cfg["thinBound"])
        stages["thinning"] = thin.to_json(include_values=False)
        if thin.sandwich_from > 24:
            failures.append(f"thinning: sandwich holds only from {thin.sandwich_from}")

        if cfg["kind"] == "relative":
            f = cfg["fit"]
            fit = _stage("seed", fit_poly_density, S, f["alpha"], f["beta"], tuple(f["window"]))
            params = _stage("seed", choose_seed_params, fit, S, n_max=cfg["seedHorizon"])
            plan = _stage("plan", plan_relative, S, A, fit, cfg["epsilons"], cfg["kmax"], cfg["horizon"],
                          cfg["windowTol"], seed=params, seed_horizon=cfg["seedHorizon"])
            stages["fit"] = fit.to_json()
        else:
            plan = _stage("plan", plan_banach, S, cfg["epsilons"], cfg["kmax"], cfg["horizon"], widths=cfg["widths"],
                          window_tol=cfg["windowTol"], seed_horizon=cfg["seedHorizon"])
            params = plan.seed
        stages["seed"] = params.to_json()

        dim = _stage("levels", dimension_report, S if cfg["kind"] == "relative" else plan.base.base, params,
                     cfg["depth"], horizon=cfg["tauHorizon"], tolerance=float(parse_frac(cfg["dimensionTolerance"])),
                     K=plan.base, threads=threads)
        ledger = _stage("verify", verify_plan, plan)
        stages["plan"] = plan_to_json(plan, out_dir, ledger)
        if not ledger.passed:
            bad = [f"k={k}: {c.name}" for k, lv in enumerate(ledger.per_level, 1) for c in lv
                   if c.required and not c.passed]
            failures.append("verify: " + "; ".join(bad))

        holder = []
        for k in cfg["holder"].get("levels", []):
            if not 1 <= k <= plan.depth:
                holder.append({"k": k, "skipped": f"plan depth is {plan.depth}"})
                continue
            rep = _stage("holder", empirical_holder, plan, k, int(cfg["holder"].get("samples", 1000)),
                         int(cfg["holder"].get("seed", 0)), threads=threads)
            holder.append(rep.to_json())
            if not rep.passed:
                failures.append(f"holder: worst margin {fmt(rep.worst_margin)} at k={k}")
        stages["holder"] = holder

        dim_json = dim.to_json()
        if not dim.consistent:
            failures.append("dimension: mass-lemma lower bound exceeds tau/2 + tolerance")
        spliced = _stage("dimension", spliced_mass_estimate, plan, dim.levels)
        gap = abs(spliced.tail_min - dim.mass.tail_min)
        dim_json["spliced"] = {"liminfProxy": fmt(spliced.tail_min), "difference": fmt(gap),
                               "withinTolerance": bool(gap <= float(SPLICED_MASS_TOL))}
        if gap > float(SPLICED_MASS_TOL):
            failures.append("dimension: spliced family tail differs from the seed tail")
        stages["dimension"] = dim_json

        if cfg["witness"] is not None:
            stages["witness"] = _witness_stage(cfg["witness"], plan, A if A is not None else S, threads, failures)

        words = _stage("export", _export_words, plan, cfg["exportLength"], out_dir)
        stages["export"] = words
    except StageError as exc:
        failures.append(str(exc))
        cert["error"] = {"stage": exc.stage, "message": str(exc)}

    cert["verdict"] = {"passed": not failures, "failures": failures}
    return PipelineResult(cert, 0 if not failures else 1, failures)


def _revalidate(w, S) -> bool:
    return all(S.contains(v) for v in w.values)


def _witness_stage(spec, plan, target, threads, failures) -> dict:
    """Witness in the target set (with location diagnostics) and among the inserted digits.

    Not finding a progression within the bounds is reported, not failed; a
    witness that does not re-validate, or a located witness whose indices
    are not increasing, is a failure.
    """
    out = {}
    w_target = _stage("witness", _search_witness, spec, target, threads)
    out["targetSet"] = w_target.to_json() if w_target else None
    if w_target is not None:
        if not _revalidate(w_target, target):
            failures.append("witness: target-set witness does not re-validate")
        diag: list[str] = []
        try:
            loc = locate_in_digits(plan, w_target, diag)
            out["targetSetLocation"] = loc.to_json() if loc else {"located": False, "diagnostics": diag}
        except ValueError as exc:
            out["targetSetLocation"] = {"located": False, "diagnostics": [str(exc)]}

    inserted = plan.inserted_set()
    if not inserted:
        out["inserted"] = None
        out["note"] = "no digits were inserted"
        return out
    ins_set = ExplicitSet(inserted, {"kind": "inserted"})
    ins_spec = dict(spec, kBound=max(int(spec.get("kBound", 0)), inserted[-1]))
    w_ins = _stage("witness", _search_witness, ins_spec, ins_set, threads)
    out["inserted"] = w_ins.to_json() if w_ins else None
    if w_ins is None:
        out["note"] = "no progression among the inserted digits within the bounds"
        return out
    if not _revalidate(w_ins, ins_set):
        failures.append("witness: inserted-digit witness does not re-validate")
    diag = []
    loc = _stage("locate", locate_in_digits, plan, w_ins, diag)
    if loc is None:
        failures.append("locate: " + "; ".join(diag))
        out["location"] = {"located": False, "diagnostics": diag}
    else:
        out["location"] = loc.to_json()
    return out


def _export_words(plan, length, out_dir) -> dict:
    if plan.depth == 0:
        return {"length": 0}
    n = int(length) if length else plan.positions[-1] + 1
    y = canonical_seed_word(plan, n)
    x = splice(plan, y).digits
    out = {"seedLength": len(y), "splicedLength": len(x),
           "seedWordDigest": _digest(y), "splicedWordDigest": _digest(x)}
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "seed_word.txt").write_text(format_word(DigitWord(tuple(y))))
        (d / "spliced_word.txt").write_text(format_word(DigitWord(tuple(x))))
        out["files"] = ["seed_word.txt", "spliced_word.txt"]
    return out


def _digest(digits) -> str:
    return hashlib.sha256("\n".join(map(str, digits)).encode()).hexdigest()[:16]
