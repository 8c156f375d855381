"""cftransfer command line: one subcommand per module, `transfer` runs everything.

Exit codes: 0 all checks passed, 1 a verification failed, 2 usage error.
Reports are JSON with a `schema` field; `--pretty` prints an indented summary.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, cfcore
from .cfcore import DigitWord, InvalidWord
from .density import (ContainmentError, banach_density_est, convergence_exponent_est, lower_density_est,
                      relative_density_est, upper_density_est)
from .insertion import (PlanningError, canonical_seed_word, SeedWindowError, StructuralError, eliminate, empirical_holder,
                        plan_banach, plan_from_json, plan_relative, plan_to_json, splice, verify_plan)
from .intsets import ResourceLimit, SetError, build_set, fit_poly_density, write_set_file
from .moran import (MoranLevels, ParameterSearchError, choose_seed_params, dimension_report,
                    mass_dimension_estimate)
from .numerics import parse_frac
from .pipeline import ConfigError, load_config, run_transfer_pipeline
from .progressions import (WitnessError, find_ap, find_graph_ap, find_poly_progression, locate_in_digits)
from .thinning import thin_subset

THREADS_ENV = "CFTRANSFER_THREADS"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("cftransfer")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------- argument helpers

_SHORT = {
    "naturals": {"kind": "naturals"},
    "n": {"kind": "naturals"},
    "evens": {"kind": "evens"},
    "primes": {"kind": "primes"},
    "p1": {"kind": "p1_primes"},
    "p1_primes": {"kind": "p1_primes"},
    "square_blocks": {"kind": "square_blocks"},
}


def parse_set_arg(text: str) -> dict:
    """Set spec from JSON or a shorthand such as primes, ps:3/2, residue:4:1, file:PATH, thin:primes."""
    if isinstance(text, dict):
        return text
    s = text.strip()
    if s.startswith("{"):
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad set JSON: {exc}") from None
    head, _, rest = s.partition(":")
    h = head.lower()
    if not rest and h in _SHORT:
        return dict(_SHORT[h])
    if h == "ps" and rest:
        return {"kind": "piatetski_shapiro", "params": {"alpha": rest}}
    if h == "residue" and rest:
        try:
            m, r = rest.split(":")
            return {"kind": "residue_class", "params": {"modulus": int(m), "residue": int(r)}}
        except ValueError:
            raise UsageError("residue sets are written residue:MODULUS:RESIDUE") from None
    if h == "file" and rest:
        return {"kind": "file", "params": {"path": rest}}
    if h in ("thin", "complement") and rest:
        kind = "thin" if h == "thin" else "complement_in_naturals"
        return {"kind": kind, "params": {"of": parse_set_arg(rest)}}
    raise UsageError(f"unknown set {text!r}")


def _set(text, N=None):
    spec = parse_set_arg(text)
    try:
        return build_set(spec, N)
    except (SetError, KeyError, TypeError, ValueError, OSError) as exc:
        raise UsageError(f"cannot build set {text!r}: {exc}") from None


def _frac(text) -> Fraction:
    try:
        return parse_frac(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text!r}") from None


def _int_list(text) -> list[int]:
    try:
        return [int(x) for x in str(text).replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"not a list of integers: {text!r}") from None


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1")
    return n


# --------------------------------------------------------------------------- output

def _pretty_lines(obj, indent=0, max_items=12):
    pad = "  " * indent
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                yield f"{pad}{k}:"
                yield from _pretty_lines(v, indent + 1, max_items)
            else:
                yield f"{pad}{k}: {v}"
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            shown = ", ".join(str(v) for v in obj[:max_items])
            more = f", ... ({len(obj)} total)" if len(obj) > max_items else ""
            yield f"{pad}[{shown}{more}]"
        elif all(isinstance(v, list) and not any(isinstance(x, (dict, list)) for x in v) for v in obj):
            for v in obj[:max_items]:
                yield f"{pad}- [{', '.join(str(x) for x in v)}]"
            if len(obj) > max_items:
                yield f"{pad}... ({len(obj)} total)"
        else:
            for i, v in enumerate(obj[:max_items]):
                yield f"{pad}- [{i}]"
                yield from _pretty_lines(v, indent + 1, max_items)
            if len(obj) > max_items:
                yield f"{pad}... ({len(obj)} total)"
    else:
        yield f"{pad}{obj}"


def emit(report: dict, args, name: str | None = None) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name or args.command}.json").write_text(json.dumps(report, indent=2) + "\n")
    if args.pretty:
        print("\n".join(_pretty_lines(report)))
    else:
        print(json.dumps(report, indent=2))


def _report(kind: str, body: dict) -> dict:
    return {"schema": f"cftransfer.{kind}/1", "version": __version__, **body}


# --------------------------------------------------------------------------- subcommands

def cmd_cf(args) -> int:
    if args.file:
        try:
            word = cfcore.parse_word(Path(args.file).read_text())
        except OSError as exc:
            raise UsageError(str(exc)) from None
    elif args.word:
        digits = _int_list(args.word)
        signs = _int_list(args.signs) if args.signs else None
        word = DigitWord(tuple(digits), tuple(signs) if signs else None)
    else:
        raise UsageError("cf needs --word or --file")
    body = {"digits": [str(d) for d in word.digits]}
    if word.signs is not None and not word.regular:
        iv = cfcore.semi_regular_interval(word, _frac(args.constant) if args.constant else None)
        body["semiRegular"] = True
        body["signs"] = list(word.signs)
    else:
        iv = cfcore.fundamental_interval(word)
        body["convergents"] = [[str(c.p), str(c.q)] for c in cfcore.convergents(word)]
    body["interval"] = iv.to_json()
    emit(_report("cf", body), args)
    ok = iv.sandwich is None or iv.sandwich.holds
    if iv.constant_ok is False:
        ok = False
    return EXIT_OK if ok else EXIT_FAIL


def cmd_set(args) -> int:
    S = _set(args.set, args.N)
    vals = S.elements(args.N)
    body = {"set": S.spec, "N": args.N, "count": int(len(vals))}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_set_file(Path(args.out) / "set.txt", vals)
        body["file"] = "set.txt"
    body["head"] = [int(v) for v in vals[: args.head]]
    emit(_report("set", body), args)
    return EXIT_OK


def cmd_density(args) -> int:
    S = _set(args.set, args.N)
    kinds = args.kind or ["upper", "lower"]
    out = {}
    for k in kinds:
        if k == "upper":
            out[k] = upper_density_est(S, args.N).to_json()
        elif k == "lower":
            out[k] = lower_density_est(S, args.N).to_json()
        elif k == "banach":
            widths = _int_list(args.widths) if args.widths else [8, 16, 32]
            out[k] = banach_density_est(S, args.N, widths).to_json()
        elif k == "relative":
            if not args.within:
                raise UsageError("relative density needs --within S")
            out[k] = relative_density_est(S, _set(args.within, args.N), args.N).to_json()
        elif k == "tau":
            out[k] = convergence_exponent_est(S, args.N).to_json()
    emit(_report("density", {"set": S.spec, "estimates": out}), args)
    return EXIT_OK


def cmd_thin(args) -> int:
    S = _set(args.set, args.bound)
    res = thin_subset(S, args.bound)
    body = res.to_json(include_values=False)
    body["set"] = S.spec
    body["head"] = [int(v) for v in res.values[:20]]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        res.export_set_file(Path(args.out) / "thin.txt")
        body["file"] = "thin.txt"
    emit(_report("thin", body), args)
    return EXIT_OK if res.sandwich_from <= 24 else EXIT_FAIL


def _fit(args, S):
    alpha = _frac(args.alpha) if args.alpha else Fraction(S.spec.get("params", {}).get("alpha", 1))
    beta = _frac(args.beta) if args.beta else Fraction(0)
    window = tuple(_int_list(args.fit_window)) if args.fit_window else (10, 10**4)
    if len(window) != 2:
        raise UsageError("--fit-window takes two integers")
    return fit_poly_density(S, alpha, beta, window)


def cmd_seed(args) -> int:
    S = _set(args.set)
    fit = _fit(args, S)
    params = choose_seed_params(fit, S, n_max=args.n_max)
    emit(_report("seed", {"set": S.spec, "fit": fit.to_json(), "seed": params.to_json()}), args)
    return EXIT_OK


def cmd_dim(args) -> int:
    depth = args.depth or 300
    if args.geometric:
        r, base = args.geometric
        levels = MoranLevels.geometric(int(r), _frac(base), depth)
        mass = mass_dimension_estimate(levels)
        emit(_report("dim", {"moran": {"r": int(r), "deltaBase": base}, "mass": mass.to_json(max(1, depth // 16))}),
             args)
        return EXIT_OK
    if not args.set:
        raise UsageError("dim needs a set or --geometric R BASE")
    S = _set(args.set)
    fit = _fit(args, S)
    params = choose_seed_params(fit, S, n_max=args.n_max)
    rep = dimension_report(S, params, depth, horizon=args.horizon, threads=args.threads)
    emit(_report("dim", {"set": S.spec, **rep.to_json()}), args)
    return EXIT_OK if rep.consistent else EXIT_FAIL


def _make_plan(args):
    kmax = args.kmax or 3
    eps = [str(_frac(e)) for e in args.eps.split(",")] if args.eps else None
    S = _set(args.set, args.horizon)
    if args.banach:
        widths = _int_list(args.widths) if args.widths else None
        return plan_banach(S, eps, kmax, args.horizon, widths=widths, window_tol=args.window_tol)
    if not args.within_a:
        raise UsageError("a relative plan needs --A (or use --banach)")
    A = _set(args.within_a, args.horizon)
    return plan_relative(S, A, _fit(args, S), eps, kmax, args.horizon, args.window_tol)


def cmd_plan(args) -> int:
    plan = _make_plan(args)
    ledger = verify_plan(plan)
    data = plan_to_json(plan, args.out, ledger)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "plan.json").write_text(json.dumps(data, indent=2) + "\n")
    emit(_report("plan", data), args, name="plan_report")
    return EXIT_OK if ledger.passed else EXIT_FAIL


def _load_plan(path):
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read plan {path}: {exc}") from None
    return plan_from_json(data, p.parent)


def cmd_splice(args) -> int:
    plan = _load_plan(args.plan)
    if args.word_file:
        try:
            word = cfcore.parse_word(Path(args.word_file).read_text())
        except OSError as exc:
            raise UsageError(str(exc)) from None
    elif args.word:
        word = DigitWord(tuple(_int_list(args.word)))
    elif args.canonical:
        word = DigitWord(tuple(canonical_seed_word(plan, args.canonical)))
    else:
        raise UsageError("splice needs --word, --word-file or --canonical N")
    if args.eliminate:
        res = eliminate(plan, word)
    else:
        res = splice(plan, word, check=not args.no_check)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "word.txt").write_text(cfcore.format_word(res))
    body = {"operation": "eliminate" if args.eliminate else "splice", "planRef": plan.digest(),
            "inputLength": len(word), "outputLength": len(res), "digits": [str(d) for d in res.digits]}
    emit(_report("splice", body), args)
    return EXIT_OK


def cmd_holder(args) -> int:
    plan = _load_plan(args.plan)
    rep = empirical_holder(plan, args.k, args.samples, args.seed, threads=args.threads)
    emit(_report("holder", rep.to_json()), args)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_prog(args) -> int:
    if args.graph:
        if args.locate:
            raise UsageError("graph witnesses are points in the plane and cannot be located in digits")
        w = find_graph_ap(_frac(args.graph), args.ell, args.n_bound)
        emit(_report("prog", {"witness": w.to_json() if w else None}), args)
        return EXIT_OK
    if not args.set:
        raise UsageError("prog needs a set (or --graph ALPHA)")
    S = _set(args.set, max(args.k_bound + (args.ell + 1) * args.m_bound, 10**6))
    if args.poly:
        try:
            w = find_poly_progression(S, args.poly, args.k_bound, args.m_bound, positive_k=args.positive_k,
                                      threads=args.threads)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        w = find_ap(S, args.ell, args.k_bound, args.m_bound, threads=args.threads)
    body = {"set": S.spec, "witness": w.to_json() if w else None}
    code = EXIT_OK
    if w is not None:
        valid = all(S.contains(v) for v in w.values)
        body["revalidated"] = valid
        code = EXIT_OK if valid else EXIT_FAIL
    if w is not None and args.locate:
        diag: list[str] = []
        loc = locate_in_digits(_load_plan(args.locate), w, diag)
        body["location"] = loc.to_json() if loc else {"located": False, "diagnostics": diag}
    emit(_report("prog", body), args)
    return code


def cmd_transfer(args) -> int:
    if not args.config:
        raise UsageError("transfer needs --config PATH")
    raw = load_config(args.config)
    if args.depth is not None:
        raw["depth"] = args.depth
    if args.kmax is not None:
        raw["kmax"] = args.kmax
    res = run_transfer_pipeline(raw, args.out, threads=args.threads)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "certificate.json").write_text(res.dumps())
    if args.pretty:
        c = res.certificate
        print(f"schema {c['schema']}  version {c['version']}")
        for name, stage in c["stages"].items():
            print(f"[{name}]")
            print("\n".join(_pretty_lines(stage, 1, 6)))
        print("verdict:", "PASS" if res.exit_code == 0 else "FAIL")
        for f in res.failures:
            print("  -", f)
    else:
        sys.stdout.write(res.dumps())
    return res.exit_code


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    def common(suppress: bool) -> argparse.ArgumentParser:
        # subcommand copies must not overwrite values given before the subcommand
        kw = {"default": argparse.SUPPRESS} if suppress else {}
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--config", help="JSON (or TOML) file with option values; flags win", **kw)
        c.add_argument("--out", help="directory for reports and exported files", **kw)
        c.add_argument("--depth", type=int, help="Moran depth", **kw)
        c.add_argument("--kmax", type=int, help="number of insertion blocks", **kw)
        c.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)", **kw)
        c.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON", **kw)
        c.add_argument("-v", "--verbose", action="store_true", **kw)
        return c

    p = argparse.ArgumentParser(prog="cftransfer", description=__doc__.splitlines()[0], parents=[common(False)])
    p.add_argument("--version", action="version", version=f"cftransfer {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    shared = common(True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[shared])
        sp.set_defaults(func=fn)
        return sp

    sp = add("cf", cmd_cf, "fundamental interval of a digit word")
    sp.add_argument("--word", help="digits, comma separated")
    sp.add_argument("--signs", help="signs (+1/-1) for a semi-regular word")
    sp.add_argument("--file", help="word file, one digit per line (optionally signed)")
    sp.add_argument("--constant", help="constant C to compare for semi-regular words")

    sp = add("set", cmd_set, "enumerate a set")
    sp.add_argument("set")
    sp.add_argument("--N", type=int, default=100)
    sp.add_argument("--head", type=int, default=50)

    sp = add("density", cmd_density, "density proxies at a horizon")
    sp.add_argument("set")
    sp.add_argument("--N", type=int, default=10**6)
    sp.add_argument("--kind", action="append", choices=["upper", "lower", "banach", "relative", "tau"])
    sp.add_argument("--widths")
    sp.add_argument("--within", help="ambient set S for relative density")

    sp = add("thin", cmd_thin, "factorial-block thin subset")
    sp.add_argument("set")
    sp.add_argument("--bound", type=int, default=10**5)

    def fit_args(sp):
        sp.add_argument("--alpha")
        sp.add_argument("--beta")
        sp.add_argument("--fit-window")
        sp.add_argument("--n-max", type=int, default=60)

    sp = add("seed", cmd_seed, "seed parameters L, t, lambda")
    sp.add_argument("set")
    fit_args(sp)

    sp = add("dim", cmd_dim, "mass-lemma dimension estimate")
    sp.add_argument("set", nargs="?")
    fit_args(sp)
    sp.add_argument("--horizon", type=int, default=10**6)
    sp.add_argument("--geometric", nargs=2, metavar=("R", "BASE"), help="constant Moran input r, delta_n = BASE^n")

    sp = add("plan", cmd_plan, "insertion plan with verification ledger")
    sp.add_argument("set")
    sp.add_argument("--A", dest="within_a", help="subset A for the relative construction")
    sp.add_argument("--banach", action="store_true")
    sp.add_argument("--eps", help="comma separated epsilons")
    sp.add_argument("--window-tol")
    sp.add_argument("--widths")
    sp.add_argument("--horizon", type=int, default=10**6)
    fit_args(sp)

    sp = add("splice", cmd_splice, "insert (or remove) plan blocks in a digit word")
    sp.add_argument("--plan", required=True)
    sp.add_argument("--word")
    sp.add_argument("--word-file")
    sp.add_argument("--canonical", type=int, metavar="N", help="use the canonical seed word of length N")
    sp.add_argument("--eliminate", action="store_true")
    sp.add_argument("--no-check", action="store_true", help="skip the seed-window check")

    sp = add("holder", cmd_holder, "exact empirical Hölder check")
    sp.add_argument("--plan", required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("prog", cmd_prog, "progression witness search")
    sp.add_argument("set", nargs="?")
    sp.add_argument("--ell", type=int, default=3)
    sp.add_argument("--k-bound", type=int, default=10**3)
    sp.add_argument("--m-bound", type=int, default=10**3)
    sp.add_argument("--poly", action="append", help="polynomial such as X^2 (repeatable)")
    sp.add_argument("--positive-k", action="store_true")
    sp.add_argument("--graph", metavar="ALPHA", help="search the graph of floor(n^ALPHA)")
    sp.add_argument("--n-bound", type=int, default=10**3)
    sp.add_argument("--locate", metavar="PLAN", help="locate the witness in a plan's digits")

    add("transfer", cmd_transfer, "full pipeline, writes a certificate")
    return p


def _apply_config(args, parser) -> None:
    """Fill options the user did not pass from --config (flags win)."""
    if not args.config or args.command == "transfer":
        return
    data = load_config(args.config)
    section = data.get(args.command, data)
    defaults = {a.dest: a.default for a in parser._actions}
    for key, val in section.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and getattr(args, dest) in (None, False, defaults.get(dest)):
            setattr(args, dest, val)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(args, sub)
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except (UsageError, ConfigError, InvalidWord, SeedWindowError, StructuralError, WitnessError,
            ContainmentError) as exc:
        print(f"cftransfer {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SetError as exc:
        print(f"cftransfer {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlanningError, ParameterSearchError, ResourceLimit) as exc:
        print(f"cftransfer {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
