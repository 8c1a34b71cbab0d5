"""Command-line front end.

    lintrans run <command> problem.json [--tol T] [--max-iter N] [--out PATH]
                                        [--format json|csv] [--seed S] [--timing]

Exit codes: 0 all certificates pass, 1 some certificate fails, 2 invalid
input, 3 numerical failure (the witness is embedded in the report).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from fractions import Fraction

import jsonschema
import numpy as np

from . import core, entropic, ergopt, mather, transfers, weakkam
from .errors import (DimensionMismatch, InvalidInput, LintransError, LPError, NegativeCycle,
                     NoConvergence, NoFiniteCycle)
from .extreal import as_cost, as_potential

COMMANDS = ("mather", "weakkam", "transfer", "sinkhorn", "schrodinger", "ergopt", "axioms")
LP_TOL = 1e-7

_ext = {"anyOf": [{"type": "number"}, {"enum": ["inf", "+inf", "-inf"]}]}
_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_mat = {"type": "array", "minItems": 1,
        "items": {"type": "array", "minItems": 1, "items": _ext}}

SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "cost": _mat,
        "potential": {"type": "array", "minItems": 1, "items": _ext},
        "mu": _vec,
        "nu": _vec,
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "transition_matrix": {"type": "array", "minItems": 1,
                              "items": {"type": "array", "items": {"type": "number"}}},
        "depth": {"type": "integer", "minimum": 1},
        "potential_table": {"anyOf": [
            {"type": "object", "additionalProperties": {"type": "number"}},
            {"type": "array"}]},
        "sense": {"enum": ["min", "max"]},
        "options": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "N": {"type": "integer", "minimum": 2},
                "trials": {"type": "integer", "minimum": 1},
            },
        },
    },
}

REQUIRED = {
    "mather": ["cost"],
    "weakkam": ["cost"],
    "transfer": ["cost", "mu", "nu"],
    "sinkhorn": ["cost", "mu", "nu", "epsilon"],
    "schrodinger": ["transition_matrix", "nu"],
    "ergopt": ["transition_matrix", "depth", "potential_table"],
    "axioms": ["kind"],
}


class InputError(Exception):
    pass


class NumericFailure(Exception):
    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


# --- serialisation -----------------------------------------------------------

def encode(v):
    """JSON-safe form: infinities become "inf"/"-inf", arrays become lists."""
    if isinstance(v, dict):
        return {str(k): encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [encode(x) for x in v]
    if isinstance(v, np.ndarray):
        return [encode(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating, Fraction)):
        f = float(v)
        if f == float("inf"):
            return "inf"
        if f == float("-inf"):
            return "-inf"
        return f + 0.0
    if v is None or isinstance(v, str):
        return v
    raise TypeError(f"cannot encode {type(v).__name__}")


def digest(problem) -> str:
    canon = json.dumps(problem, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _flatten(prefix, v, rows):
    if isinstance(v, dict):
        for k in sorted(v):
            _flatten(f"{prefix}.{k}" if prefix else k, v[k], rows)
    elif isinstance(v, list):
        if v and all(isinstance(x, list) for x in v):
            flat = [y for x in v for y in (x if isinstance(x, list) else [x])]
            if any(isinstance(y, (list, dict)) for y in flat):
                for i, x in enumerate(v):
                    _flatten(f"{prefix}[{i}]", x, rows)
            else:
                rows.append([prefix] + flat)
        elif any(isinstance(x, dict) for x in v):
            for i, x in enumerate(v):
                _flatten(f"{prefix}[{i}]", x, rows)
        else:
            rows.append([prefix] + v)
    else:
        rows.append([prefix, v])


def to_csv(report) -> str:
    rows = []
    _flatten("", report, rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


# --- certificates ------------------------------------------------------------

class Certificates:
    def __init__(self):
        self.data = {"fixed_point_residuals": {}, "duality_gaps": {}, "invariant_checks": {}}

    def add(self, group, name, residual, threshold):
        residual = float(residual)
        self.data[group][name] = {"residual": residual, "threshold": float(threshold),
                                  "pass": bool(residual <= threshold)}

    def flag(self, name, ok, detail=None):
        entry = {"pass": bool(ok)}
        if detail is not None:
            entry["detail"] = detail
        self.data["invariant_checks"][name] = entry

    @property
    def passed(self):
        return all(e["pass"] for g in self.data.values() for e in g.values())


# --- commands ----------------------------------------------------------------

def _cost(p):
    A = as_cost(p["cost"])
    if "n" in p and A.shape[0] != p["n"]:
        raise DimensionMismatch(f"field 'cost' has {A.shape[0]} rows but 'n' is {p['n']}")
    return A


def _cmd_mather(p, args, cert):
    A = _cost(p)
    n = A.shape[0]
    N = p.get("options", {}).get("N", 100)
    g = as_potential(p["potential"], n, bounded_above=True) if "potential" in p else np.zeros(n)
    try:
        c, cycle = mather.mather_constant_cycle(A)
    except NoFiniteCycle:
        # every cycle uses a +inf edge: c = +inf is a valid answer
        cert.flag("no_finite_cycle", True)
        return {"c_cycle": float("inf"), "cycle": []}
    c_lp, meas = mather.mather_constant_lp(A, tol=args.tol)
    diag = mather.convergence_diagnostics(A, g, N, c=c, measure=meas)
    h = mather.dual_certificate(A, c=c, tol=args.tol)
    dual = float(np.min(h - core.MaxPlusCost(A)(h)))
    cert.add("duality_gaps", "cycle_vs_lp", abs(c - c_lp), LP_TOL)
    cert.add("duality_gaps", "dual_certificate", abs(dual - c), args.tol)
    cert.add("invariant_checks", "cycle_mean", abs(mather.cycle_mean(A, cycle) - c), args.tol)
    cert.add("invariant_checks", "measure_equal_marginals", meas.residual(), LP_TOL)
    limit_err = abs(diag.estimates[-1] - c)
    if diag.bound_holds is None:
        cert.flag("limit_within_K_over_N", True, "not applicable: graph is not strongly connected")
    else:
        cert.add("invariant_checks", "limit_within_K_over_N",
                 max(0.0, limit_err - diag.K / diag.N), 1e-12)
    return {
        "c_cycle": c, "cycle": cycle, "c_lp": c_lp, "c_limit": diag.estimates[-1],
        "N": diag.N, "K": diag.K, "minimal_measure": meas.matrix,
        "dual_potential": h, "min_sequence": diag.minima,
    }


def _cmd_weakkam(p, args, cert):
    A = _cost(p)
    b = weakkam.weak_kam_bundle(A, tol=args.tol)
    _, meas = mather.mather_constant_lp(A, tol=args.tol)
    checks = weakkam.bundle_checks(b, measure=meas)
    for name in ("fixed_point",):
        cert.add("fixed_point_residuals", name, checks[name], args.tol)
    for name in ("idempotence", "absorption_left", "absorption_right", "null_factorization",
                 "aubry_is_critical", "conjugate_agree_on_aubry"):
        cert.add("invariant_checks", name, checks[name], args.tol)
    cert.add("invariant_checks", "measure_in_mather_set", checks["measure_in_mather_set"], LP_TOL)
    f = as_potential(p["potential"], A.shape[0]) if "potential" in p else np.zeros(A.shape[0])
    _, _, conj = weakkam.conjugate_pair(b, f)
    for name, v in conj.items():
        cert.add("invariant_checks", "conjugate_" + name, v, args.tol)
    return {
        "c": b.c, "A_inf": b.A_inf, "aubry": b.aubry, "mather_D": [list(d) for d in b.mather_D],
        "h": b.h, "psi0": b.conjugate[0], "psi1": b.conjugate[1],
    }


def _cmd_transfer(p, args, cert):
    P = transfers.CostOT(_cost(p))
    res = P.solve(p["mu"], p["nu"], tol=args.tol)
    out = {"value": res.value}
    if res.value == float("inf"):
        out["feasible"] = False
        return out
    dual, g = transfers.dual_value(P, p["mu"], p["nu"], tol=args.tol)
    cert.add("duality_gaps", "primal_dual", abs(res.value - dual), LP_TOL)
    mu = mather.as_prob(p["mu"], P.n)
    nu = mather.as_prob(p["nu"], P.n)
    cert.add("invariant_checks", "coupling_marginals", res.coupling.residual(mu, nu), LP_TOL)
    out.update({"feasible": True, "dual_value": dual, "g": g, "t": res.t,
                "coupling": res.coupling.matrix})
    return out


def _cmd_sinkhorn(p, args, cert):
    C = np.asarray(_cost(p), dtype=float)
    if not np.isfinite(C).all():
        raise InvalidInput("field 'cost' must be finite for sinkhorn")
    eps = float(p["epsilon"])
    res = entropic.sinkhorn_solve(C, p["mu"], p["nu"], eps, tol=args.tol, max_iter=args.max_iter)
    cert.add("fixed_point_residuals", "marginals", res.residual, args.tol)
    cert.flag("contraction_below_one", res.kappa < 1.0, {"kappa": res.kappa})
    op = core.Entropic(C, mather.as_prob(p["nu"], C.shape[1]), eps)
    lo, val, hi = entropic.sandwich(op, res.psi)
    cert.add("invariant_checks", "sandwich_lower", float(np.max(lo - val, initial=0.0)), 1e-12)
    cert.add("invariant_checks", "sandwich_upper", float(np.max(val - hi, initial=0.0)), 1e-12)
    return {"phi": res.phi, "psi": res.psi, "coupling": res.coupling.matrix,
            "iterations": res.iterations, "kappa": res.kappa}


def _cmd_schrodinger(p, args, cert):
    S = entropic.MarkovSemigroup(p["transition_matrix"])
    d = entropic.schrodinger_duality(S, p["nu"])
    cert.add("duality_gaps", "lp_vs_kl", d.gap, args.tol)
    cert.add("invariant_checks", "stationarity", S.stationarity_residual, 1e-10)
    out = {"m": S.m, "lp_value": d.lp_value, "kl_value": d.kl_value,
           "irreducible": S.irreducible, "period": S.period}
    if "potential" in p:
        f = as_potential(p["potential"], S.n)
        if S.irreducible and S.aperiodic:
            t, err = S.time_to_limit(f, tol=1e-10, max_t=int(min(args.max_iter, 10**6)))
            out.update({"time_to_limit": t, "limit": S.limit(f)})
            cert.add("fixed_point_residuals", "limit_distance", err, 1e-10)
        else:
            cert.flag("limit_distance", True, "not applicable: chain is periodic or reducible")
    return out


def _cmd_ergopt(p, args, cert):
    sense = p.get("sense", "min")
    table = p["potential_table"]
    G = ergopt.build_sft(p["transition_matrix"], p["depth"], table)
    value, cycle = ergopt.ergodic_value(G, sense)
    H = ergopt.holonomic_lp(G, sense, tol=args.tol)
    S = ergopt.subaction(G, sense)
    St = ergopt.stochastic_holonomic_lp(G, tol=args.tol)
    cert.add("duality_gaps", "cycle_vs_holonomic", abs(value - H.value), LP_TOL)
    cert.add("duality_gaps", "holonomic_vs_dual", H.gap, LP_TOL)
    cert.add("duality_gaps", "stochastic_primal_vs_dual", St.gap, LP_TOL)
    cert.add("fixed_point_residuals", "calibration_sigma", S.sigma_residual, 0.0)
    cert.add("fixed_point_residuals", "calibration_tau", S.tau_residual, 0.0)
    if sense == "min":
        cert.add("invariant_checks", "stochastic_le_deterministic",
                 max(0.0, St.primal - H.value), 1e-9)
    words = [ergopt._word_key(w) for w in G.nodes]
    return {
        "value": value, "cycle": [ergopt._word_key(w) for w in cycle],
        "holonomic_value": H.value, "holonomic_dual": H.dual_value, "holonomic_measure": H.measure,
        "nodes": words, "subaction": S.h, "subaction_exact": [str(x) for x in S.h],
        "forward_subaction": S.psi, "aubry": [ergopt._word_key(w) for w in S.aubry],
        "stochastic_primal": St.primal, "stochastic_dual": St.dual,
    }


def _operator(p):
    kind = p["kind"]
    if kind in ("max_plus_cost", "min_plus_forward", "recession"):
        A = _cost(p)
        return {"max_plus_cost": core.MaxPlusCost, "min_plus_forward": core.MinPlusForward,
                "recession": core.Recession}[kind](A)
    if kind == "entropic":
        for key in ("cost", "nu", "epsilon"):
            if key not in p:
                raise InputError(f"field '{key}' is required for kind 'entropic'")
        return core.Entropic(np.asarray(_cost(p), float), p["nu"], p["epsilon"])
    if kind in ("markov", "reduite", "filling_scheme"):
        if "transition_matrix" not in p:
            raise InputError(f"field 'transition_matrix' is required for kind '{kind}'")
        cls = {"markov": core.Markov, "reduite": core.Reduite,
               "filling_scheme": core.FillingScheme}[kind]
        return cls(p["transition_matrix"])
    if kind == "convex_energy":
        if "mu" not in p:
            raise InputError("field 'mu' (reference measure) is required for kind 'convex_energy'")
        return core.ConvexEnergy(p["mu"], p.get("epsilon", 0.0))
    raise InputError(f"field 'kind': unknown operator kind {kind!r}")


def _cmd_axioms(p, args, cert):
    op = _operator(p)
    opts = p.get("options", {})
    seed = args.seed if args.seed is not None else opts.get("seed", 0)
    rep = core.check_axioms(op, trials=opts.get("trials", 1000), seed=seed, tol=args.tol)
    for name in ("monotone", "affine", "convexity", "lipschitz"):
        cert.add("invariant_checks", name, getattr(rep, name), args.tol)
    return rep.as_dict()


HANDLERS = {
    "mather": _cmd_mather, "weakkam": _cmd_weakkam, "transfer": _cmd_transfer,
    "sinkhorn": _cmd_sinkhorn, "schrodinger": _cmd_schrodinger, "ergopt": _cmd_ergopt,
    "axioms": _cmd_axioms,
}


# --- driver ------------------------------------------------------------------

def _validate(command, problem):
    try:
        jsonschema.validate(problem, SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(x) for x in err.absolute_path) or "<root>"
        raise InputError(f"field '{where}': {err.message}") from None
    missing = [k for k in REQUIRED[command] if k not in problem]
    if missing:
        raise InputError(f"field '{missing[0]}' is required for command '{command}'")


def run(command, problem, args):
    """Execute one command; returns ``(report, exit_code)``."""
    if command not in HANDLERS:
        raise InputError(f"unknown command {command!r}")
    _validate(command, problem)
    report = {"command": command, "input_digest": digest(problem)}
    cert = Certificates()
    t0 = time.perf_counter()
    try:
        results = HANDLERS[command](problem, args, cert)
    except (InvalidInput, DimensionMismatch, InputError) as exc:
        raise InputError(str(exc)) from None
    except NegativeCycle as exc:
        raise NumericFailure(str(exc), {"type": "NegativeCycle", "cycle": exc.cycle,
                                        "weight": exc.weight}) from None
    except NoConvergence as exc:
        raise NumericFailure(str(exc), {"type": "NoConvergence", "residual": exc.residual,
                                        "iterations": exc.iterations}) from None
    except NoFiniteCycle as exc:
        raise NumericFailure(str(exc), {"type": "NoFiniteCycle", "value": "inf"}) from None
    except (LPError, LintransError) as exc:
        raise NumericFailure(str(exc), {"type": type(exc).__name__}) from None
    report["results"] = results
    report["certificates"] = cert.data
    report["passed"] = cert.passed
    if getattr(args, "timing", False):
        report["timing"] = {"seconds": time.perf_counter() - t0}
    return encode(report), (0 if cert.passed else 1)


def _emit(report, args):
    if args.format == "csv":
        text = to_csv(report)
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="lintrans", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="action", required=True)
    r = sub.add_parser("run", help="run one command on a problem file")
    r.add_argument("command", choices=COMMANDS)
    r.add_argument("problem", help="path to the problem JSON")
    r.add_argument("--tol", type=float, default=1e-9)
    r.add_argument("--max-iter", type=int, default=10**6)
    r.add_argument("--out", default=None)
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--timing", action="store_true",
                   help="add wall-clock timing (reports are then no longer byte-identical)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.problem, encoding="utf-8") as fh:
            problem = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: cannot read problem file: {exc}\n")
        return 2
    opts = problem.get("options", {}) if isinstance(problem, dict) else {}
    if isinstance(opts, dict):
        # file options fill in flags left at their defaults
        if "tol" in opts and args.tol == 1e-9:
            args.tol = float(opts["tol"])
        if "max_iter" in opts and args.max_iter == 10**6:
            args.max_iter = int(opts["max_iter"])
    try:
        report, code = run(args.command, problem, args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericFailure as exc:
        report = encode({"command": args.command, "input_digest": digest(problem),
                         "error": str(exc), "witness": exc.witness, "passed": False})
        _emit(report, args)
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    _emit(report, args)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
