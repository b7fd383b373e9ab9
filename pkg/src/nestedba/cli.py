"""Command line front end: verification workflows with JSON reports.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 for usage or configuration errors.  Randomized commands need a seed,
either ``--seed`` or the NESTEDBA_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
import time
from fractions import Fraction

from . import __version__
from . import bethe as be
from . import blockgauss as bg
from . import chain as ch
from . import linalg as la
from . import rmat
from .errors import (AlgebraMismatch, ConfigError, Mismatch, NestedBAError, NotEndNode, RankTooSmall,
                     SingularPoint, UnsupportedType)
from .repkit import charge_decompose, check_table_row, decomposition_summary, defining_rep
from .rootsys import parse_algebra, remove_node, summary

SCHEMA = 1
SEED_ENV = "NESTEDBA_SEED"
FLOAT_TOL = 1e-12

RMATRIX_CHECKS = ("ybe", "unitarity", "prp", "ginv", "infinity")
GAUSS_CHECKS = ("reconstruct", "identities", "nested-ybe", "conjecture", "sl2")
CHAIN_CHECKS = ("rtt", "commute", "ginv", "grading", "vacuum", "daa", "ab")


class UsageError(Exception):
    pass


# --- helpers ------------------------------------------------------------------------

def _checklist(text, allowed):
    names = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in names if c not in allowed]
    if bad:
        raise UsageError(f"unknown check(s) {bad}; choose from {list(allowed)}")
    return names


def _seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise UsageError(f"this command is randomized: pass --seed or set {SEED_ENV}")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def _algebra_rmatrix(text, hbar=1):
    """'A2', 'B2', ... or 'A1:spin1' for the fused spin-1 sl_2 R-matrix."""
    name, _, variant = text.partition(":")
    rs = parse_algebra(name)
    if not variant:
        return rs, rmat.rmatrix_for(rs, hbar)
    if variant == "spin1" and rs.family == "A" and rs.rank == 1:
        return rs, rmat.sl2_spin1(hbar)["WW"]
    raise ConfigError(f"unknown R-matrix variant {variant!r}")


def _draw(rng, count, arity, trial, limit=400):
    """Seeded rational points on which ``trial`` does not hit a singular point."""
    out = []
    for _ in range(limit):
        if len(out) == count:
            break
        pt = tuple(rmat.random_rational(rng) for _ in range(arity))
        if len(set(pt)) < arity or any(x == 0 for x in pt):
            continue
        try:
            result = trial(*pt)
        except (SingularPoint, ZeroDivisionError):
            continue
        out.append((pt, result))
    if len(out) < count:
        raise ConfigError(f"could only draw {len(out)} of {count} regular sample points")
    return out


def _pts(p):
    return [str(x) for x in p]


def _record(name, results, witness_fn=None, inputs=None):
    """Fold [(point, (ok, payload))] into one check record."""
    ok = all(r[0] for _, r in results)
    rec = {"name": name, "inputs": inputs or {}, "points": [_pts(p) for p, _ in results], "pass": ok}
    if witness_fn:
        rec["witness"] = [witness_fn(r[1]) for _, r in results]
    return rec


# --- subcommands -------------------------------------------------------------------

def cmd_roots(args):
    rs = parse_algebra(args.algebra)
    nest = remove_node(rs, args.remove) if args.remove else None
    return {"summary": summary(rs, nest)}, [{"name": "roots", "pass": True}]


def cmd_rep(args):
    rs = parse_algebra(args.algebra)
    nest = remove_node(rs, args.remove)
    out = {}
    checks = []
    if args.decompose:
        dec = charge_decompose(defining_rep(rs), nest)
        out["decomposition"] = decomposition_summary(dec)
        row = check_table_row(rs, nest)
        row["measured"] = [list(w) for w in row["measured"]]
        if row["expected"] is not None:
            row["expected"] = [list(w) for w in row["expected"]]
            checks.append({"name": "table", "inputs": {}, "pass": row["pass"], "witness": row})
        else:
            checks.append({"name": "table", "pass": True, "skipped": "no tabulated row"})
    else:
        checks.append({"name": "rep", "pass": True})
    return out, checks


def cmd_rmatrix(args):
    names = _checklist(args.check, RMATRIX_CHECKS)
    seed = _seed(args)
    rs, R = _algebra_rmatrix(args.algebra, args.hbar)
    rng = random.Random(seed)
    sing = set(R.singular_set)
    checks = []
    for name in names:
        if name == "ybe":
            res = _draw(rng, args.samples, 2, lambda u, v: _guard(sing, [u, v, u - v], rmat.check_ybe, R, u, v))
        elif name == "unitarity":
            res = _draw(rng, args.samples, 1, lambda u: _guard(sing, [u, -u], rmat.check_unitarity, R, u))
        elif name == "prp":
            res = _draw(rng, args.samples, 1, lambda u: _guard(sing, [u], rmat.check_prp, R, u))
        elif name == "ginv":
            res = _draw(rng, args.samples, 1, lambda u: _guard(sing, [u], rmat.check_g_invariance, R, u))
        else:
            ok, norms = rmat.check_identity_at_infinity(R)
            checks.append({"name": name, "inputs": {}, "pass": ok, "witness": {"scaled_norms": norms}})
            continue
        checks.append(_record(name, res, lambda m: {"residual": rmat.residual_norm(m)}))
    return {"r_matrix": R.name, "dims": list(R.dims)}, checks


def _guard(sing, values, fn, *a):
    if any(Fraction(x) in sing for x in values):
        raise SingularPoint("sample hits the singular set")
    return fn(*a)


def cmd_gauss(args):
    names = _checklist(args.check, GAUSS_CHECKS)
    seed = _seed(args)
    rs, R = _algebra_rmatrix(args.algebra, args.hbar)
    nest = remove_node(rs, args.remove)
    s = bg.block_structure(R, nest)
    fam = bg.GaussFamily(R, s)
    fam_t = bg.GaussFamily(R, s, "LDU")
    rng = random.Random(seed)
    checks = []
    out = {"r_matrix": R.name, "block_dims": s.dec_a.dims()}

    def strict(u):
        for x in (u, -u):
            if fam.at(x).missing or fam_t.at(x).missing:
                raise SingularPoint("singular D block")

    for name in names:
        if name == "reconstruct":
            def trial(u):
                strict(u)
                f, g = bg.udl_decompose(R, s, u), bg.ldu_decompose(R, s, u)
                rel = bg.check_ldu_relations(bg.udl_decompose(R, s, -u), g)
                ok = (bg.check_reconstruction(R, f) and bg.check_reconstruction(R, g)
                      and bg.check_uniqueness(R, f) and rel["D"] and rel["L"] and rel["U"])
                return ok, {"D": {f"{I},{J}": [[str(x) for x in row] for row in la.to_rows(m)]
                                  for (I, J), m in sorted(f.D.items())}, "ldu_relations": rel}
            res = _draw(rng, args.samples, 1, trial)
            checks.append(_record(name, res, lambda w: w))
        elif name == "identities":
            def trial(u):
                strict(u)
                rep = bg.check_d_identities(R, s, u)
                return all(rep.values()), rep
            checks.append(_record(name, _draw(rng, args.samples, 1, trial), lambda w: w))
        elif name == "nested-ybe":
            N = s.N
            triples = [(I, J, K) for I in range(N + 1) for J in range(N + 1) for K in range(N + 1)]

            def trial(u, v):
                for x in (u, v, u + v):
                    strict(x)
                ok = True
                for t in triples:
                    ok &= bg.check_nested_ybe(fam, *t, u, v)[0] and bg.check_nested_ybe(fam_t, *t, u, v)[0]
                return ok, {"triples": len(triples)}
            checks.append(_record(name, _draw(rng, args.samples, 2, trial), lambda w: w))
        elif name == "conjecture":
            want = be.auxiliary_site(nest).dim
            recs = []
            for J in range(s.N):
                lim = bg.projector_limit(fam, J, want)
                recs.append(lim.to_json())
            out["conjecture"] = recs
            checks.append({"name": name, "inputs": {"expected_rank": want},
                           "pass": all(r["pass"] for r in recs), "witness": recs})
        elif name == "sl2":
            if not (rs.family == "A" and rs.rank == 1):
                checks.append({"name": name, "pass": True, "skipped": "sl2 formulas need A1"})
                continue
            N, ratios = bg.fit_sl2_ratio(fam)
            lres = _draw(rng, args.samples, 1, lambda u: (strict(u), bg.check_sl2_l_block(fam, u))[1])
            lok = all(r[0] for _, r in lres)
            checks.append({"name": name, "inputs": {},
                           "pass": N is not None and lok,
                           "witness": {"fitted_N": N, "dim_V": s.dec_a.rep.dim, "ratios": ratios,
                                       "l_block_points": [_pts(p) for p, _ in lres], "l_block": lok}})
    return out, checks


def cmd_chain(args):
    names = _checklist(args.checks, CHAIN_CHECKS)
    seed = _seed(args)
    spec = ch.load_chain(args.config)
    rng = random.Random(seed)
    N = spec.aux_decomposition.N
    checks = []
    for name in names:
        if name == "rtt":
            res = _draw(rng, args.samples, 2, lambda u, v: ch.check_rtt(spec, u, v))
            checks.append(_record(name, res, lambda m: {"residual": rmat.residual_norm(m)}))
        elif name == "commute":
            def trial(u, v):
                a, b = ch.transfer(spec, u), ch.transfer(spec, v)
                c = a * b - b * a
                return la.is_zero(c), {"residual": rmat.residual_norm(c)}
            checks.append(_record(name, _draw(rng, args.samples, 2, trial), lambda w: w))
        elif name == "ginv":
            res = _draw(rng, args.samples, 1, lambda u: (ch.check_g_invariance(spec, u), None))
            checks.append(_record(name, res))
        elif name == "grading":
            res = _draw(rng, args.samples, 1, lambda u: (ch.check_grading(spec, u), None))
            checks.append(_record(name, res))
        elif name == "vacuum":
            pts = [p for (p,), _ in _draw(rng, 3, 1, lambda u: ch.build_monodromy(spec, u))]
            _, rep = ch.vacuum_sector(spec, pts)
            checks.append({"name": name, "inputs": {}, "points": [str(p) for p in pts],
                           "pass": bool(rep["pass"]), "witness": rep})
        elif name in ("daa", "ab"):
            blocks = [(I, J) for I in range(N + 1) for J in range(N + 1 if name == "daa" else N)]
            fn = ch.check_daa if name == "daa" else ch.check_ab_relation

            def trial(u, v):
                ok, wit = True, {}
                for I, J in blocks:
                    r = fn(spec, I, J, u, v)
                    ok &= r[0]
                    if name == "ab":
                        wit[f"{I},{J}"] = r[1]["nonzero_terms"]
                return ok, wit
            checks.append(_record(name, _draw(rng, args.samples, 2, trial), lambda w: w))
    return {"chain": spec.to_json(), "dim_M": spec.dim_m}, checks


def _parse_m(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"--m expects comma-separated integers, got {text!r}") from None


def _grid(k):
    base = list(be.DEFAULT_GRID)
    while len(base) < k:
        j = len(base)
        base.append(complex(0.3 + 0.41 * j, (-1) ** j * (0.2 + 0.13 * j)))
    return tuple(base[:k])


def cmd_bethe_solve(args):
    seed = _seed(args)
    spec = ch.load_chain(args.config)
    m = _parse_m(args.m)
    problem = be.problem_from_chain(spec, m)
    sols = be.solve_bethe(problem, seeds=args.seeds, seed=seed, allow_singular=args.allow_singular)
    grid = _grid(args.grid)
    out_sols, checks = [], []
    for k, s in enumerate(sols):
        entry = s.to_json()
        if not args.no_certify:
            cert = be.certify_roots(spec, s, grid)
            entry["certification"] = cert
            checks.append({"name": f"certify[{k}]", "pass": bool(cert["pass"]),
                           "witness": {"max_residual": cert.get("max_residual"), "reason": cert.get("reason")}})
        out_sols.append(entry)
    if not checks:
        checks.append({"name": "solve", "pass": True})
    return {"problem": problem.to_json(), "chain": spec.to_json(), "solutions": out_sols}, checks


def cmd_bethe_verify(args):
    try:
        with open(args.roots) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read roots file {args.roots}: {exc}") from None
    results = data.get("results", data)
    if "chain" not in results or "solutions" not in results:
        raise ConfigError("roots file lacks the chain config or solutions")
    spec = ch.chain_from_dict(results["chain"])
    grid = _grid(args.grid)
    checks = []
    for k, sol in enumerate(results["solutions"]):
        roots = be.BetheRoots.from_json(sol)
        roots.problem = be.problem_from_chain(spec, [len(n) for n in roots.roots])
        cert = be.certify_roots(spec, roots, grid)
        checks.append({"name": f"verify[{k}]", "pass": bool(cert["pass"]), "witness": cert})
    return {"chain": results["chain"]}, checks


# --- reports -------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: complex -> [re, im], numpy scalars -> python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def build_report(argv, handler, args):
    t0 = time.perf_counter()
    results, checks = handler(args)
    ok = all(c["pass"] is not False for c in checks)
    return _clean({
        "tool": "nestedba",
        "version": __version__,
        "schema": SCHEMA,
        "config": {"argv": list(argv), "seed": getattr(args, "seed_used", None)},
        "results": results,
        "checks": checks,
        "pass": ok,
        "timing": {"seconds": time.perf_counter() - t0},
        "exit_status": 0 if ok else 1,
    })


def write_json(report, path):
    text = json.dumps(report, indent=2, sort_keys=True)
    if path == "-":
        sys.stdout.write(text + "\n")
        return
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def compare(a, b, path="", tol=FLOAT_TOL):
    """First difference between two report sections; strings compare exactly."""
    if isinstance(a, dict) and isinstance(b, dict):
        if set(a) != set(b):
            return f"{path}: keys differ"
        for k in sorted(a):
            d = compare(a[k], b[k], f"{path}.{k}", tol)
            if d:
                return d
        return None
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return f"{path}: lengths differ"
        for i, (x, y) in enumerate(zip(a, b)):
            d = compare(x, y, f"{path}[{i}]", tol)
            if d:
                return d
        return None
    if isinstance(a, float) or isinstance(b, float):
        if isinstance(a, (int, float)) and isinstance(b, (int, float)) and abs(a - b) <= tol * max(1.0, abs(a)):
            return None
        return f"{path}: {a!r} != {b!r}"
    return None if a == b else f"{path}: {a!r} != {b!r}"


def cmd_reproduce(args):
    try:
        with open(args.report) as fh:
            old = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {args.report}: {exc}") from None
    argv = old.get("config", {}).get("argv")
    if not argv:
        raise ConfigError("report has no recorded invocation")
    seed = old["config"].get("seed")
    argv = _strip_output(argv, ("--json", "--seed"))
    if seed is not None:
        argv += ["--seed", str(seed)]
    parser = make_parser()
    sub = parser.parse_args(argv)
    sub.seed_used = _maybe_seed(sub)
    new = build_report(argv, sub.handler, sub)
    diffs = {}
    for key in ("results", "checks", "pass"):
        d = compare(old.get(key), new.get(key), key)
        if d:
            diffs[key] = d
    if diffs:
        raise Mismatch(json.dumps(diffs))
    return {"reproduced": args.report, "argv": argv}, [{"name": "reproduce", "pass": True}]


def _strip_output(argv, flags=("--json",)):
    """argv without the given value-taking options (the recorded seed wins)."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in flags:
            skip = True
            continue
        if any(a.startswith(f + "=") for f in flags):
            continue
        out.append(a)
    return out


def _maybe_seed(args):
    if not getattr(args, "randomized", False):
        return getattr(args, "seed", None)
    s = _seed(args)
    args.seed = s
    return s


# --- parser ---------------------------------------------------------------------------

def make_parser():
    p = argparse.ArgumentParser(prog="nestedba", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sp = p.add_subparsers(dest="command", required=True)

    def common(q, randomized):
        q.add_argument("--json", metavar="PATH", help="write the report here ('-' for stdout)")
        if randomized:
            q.add_argument("--seed", type=int)
            q.add_argument("--samples", type=int, default=10)
        q.set_defaults(randomized=randomized)

    q = sp.add_parser("roots", help="Cartan data and nesting summary")
    q.add_argument("algebra")
    q.add_argument("--remove", type=int)
    common(q, False)
    q.set_defaults(handler=cmd_roots)

    q = sp.add_parser("rep", help="charge decomposition of the defining rep")
    q.add_argument("algebra")
    q.add_argument("--remove", type=int, required=True)
    q.add_argument("--decompose", action="store_true")
    common(q, False)
    q.set_defaults(handler=cmd_rep)

    q = sp.add_parser("rmatrix", help="verify R-matrix axioms")
    q.add_argument("--algebra", required=True)
    q.add_argument("--check", default=",".join(RMATRIX_CHECKS[:4]))
    q.add_argument("--hbar", type=Fraction, default=Fraction(1))
    common(q, True)
    q.set_defaults(handler=cmd_rmatrix)

    q = sp.add_parser("gauss", help="block Gauss decomposition checks")
    q.add_argument("--algebra", required=True)
    q.add_argument("--remove", type=int, default=1)
    q.add_argument("--check", default="reconstruct,identities,nested-ybe,conjecture")
    q.add_argument("--hbar", type=Fraction, default=Fraction(1))
    common(q, True)
    q.set_defaults(handler=cmd_gauss)

    q = sp.add_parser("chain", help="chain lemmas")
    csp = q.add_subparsers(dest="action", required=True)
    v = csp.add_parser("verify")
    v.add_argument("--config", required=True)
    v.add_argument("--checks", default=",".join(CHAIN_CHECKS))
    common(v, True)
    v.set_defaults(handler=cmd_chain, samples=3)

    q = sp.add_parser("bethe", help="Bethe equations")
    bsp = q.add_subparsers(dest="action", required=True)
    s = bsp.add_parser("solve")
    s.add_argument("--config", required=True)
    s.add_argument("--m", required=True)
    s.add_argument("--seeds", type=int, default=64)
    s.add_argument("--grid", type=int, default=5)
    s.add_argument("--allow-singular", action="store_true")
    s.add_argument("--no-certify", action="store_true")
    common(s, True)
    s.set_defaults(handler=cmd_bethe_solve)
    v = bsp.add_parser("verify")
    v.add_argument("--roots", required=True)
    v.add_argument("--grid", type=int, default=5)
    common(v, False)
    v.set_defaults(handler=cmd_bethe_verify)

    q = sp.add_parser("reproduce", help="rerun a report and compare")
    q.add_argument("report")
    common(q, False)
    q.set_defaults(handler=cmd_reproduce)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.seed_used = _maybe_seed(args)
        report = build_report(argv, args.handler, args)
    except (UsageError, ConfigError, UnsupportedType, RankTooSmall, NotEndNode, AlgebraMismatch) as exc:
        print(f"nestedba: error: {exc}", file=sys.stderr)
        return 2
    except Mismatch as exc:
        print(f"nestedba: mismatch: {exc}", file=sys.stderr)
        return 1
    except NestedBAError as exc:
        print(f"nestedba: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # report, never crash with a traceback
        print(f"nestedba: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.json:
        write_json(report, args.json)
    if args.json != "-":
        for c in report["checks"]:
            tag = "SKIP" if c.get("skipped") else ("PASS" if c["pass"] else "FAIL")
            print(f"{tag} {c['name']}")
        print("PASS" if report["pass"] else "FAIL")
    return report["exit_status"]


if __name__ == "__main__":
    sys.exit(main())
