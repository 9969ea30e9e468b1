"""Command-line front end.

Subcommands compute the adversary bound, query distances, bounded-error
distances, run the conversion simulator, compose functions, and exercise
the property/certificate suites. Every run emits one JSON report (stdout
or --out) that is deterministic for fixed inputs, seed, and tolerances,
modulo the wall_time_s field.

Input formats
-------------
Function file: either a uniform alphabet

    {"alphabet": 2, "arity": 2, "domain": ["00", "01", "10", "11"],
     "outputs": {"00": "0", "01": "1", "10": "1", "11": "1"}}

or per-coordinate alphabets

    {"alphabets": [["0", "1"], ["A", "B", "C"]],
     "domain": ["0A", "0B", "1C"], "outputs": {"0A": "A", "0B": "B", "1C": "C"}}

Gram file: {"size": d, "entries": [[re, im], ...]} with d*d row-major
entries; complex numbers are always [re, im] pairs.

Exit codes: 0 all checks passed, 1 a mathematical assertion failed,
2 malformed input or usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import composition, conversion, norms, sdp
from . import adversary as adv
from .adversary import CertificateError, ConsistencyError, FunctionSpec
from .conversion import BoundViolation

SCHEMA = "querynorms-report/1"


class InputError(ValueError):
    pass


def parse_function(path: str) -> FunctionSpec:
    data = _load_json(path)
    try:
        domain = [str(w) for w in data["domain"]]
        outputs = {str(k): str(v) for k, v in data["outputs"].items()}
        if "alphabets" in data:
            alphabets = tuple(tuple(str(s) for s in a) for a in data["alphabets"])
            labels = tuple(outputs[w] for w in domain)
            return FunctionSpec(alphabets=alphabets, domain=tuple(domain), out_labels=labels)
        alphabet = int(data["alphabet"])
        arity = int(data["arity"])
        return FunctionSpec.uniform(alphabet, arity, domain, outputs)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{path}: invalid function spec: {exc}") from exc


def parse_gram(path: str) -> np.ndarray:
    data = _load_json(path)
    try:
        size = int(data["size"])
        entries = data["entries"]
        if len(entries) != size * size:
            raise ValueError(f"expected {size * size} entries, got {len(entries)}")
        flat = np.array([complex(float(e[0]), float(e[1])) for e in entries])
        g = flat.reshape(size, size)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{path}: invalid Gram file: {exc}") from exc
    try:
        return adv.validate_gram(g, name=path)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def dump_gram(g: np.ndarray) -> dict:
    g = np.asarray(g, dtype=complex)
    return {"size": g.shape[0],
            "entries": [[float(z.real), float(z.imag)] for z in g.ravel()]}


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _digest(paths) -> dict:
    out = {}
    for path in paths:
        if path is None:
            continue
        with open(path, "rb") as fh:
            out[path] = hashlib.sha256(fh.read()).hexdigest()
    return out


def _evaluation_pair(spec: FunctionSpec, rho_path, sigma_path):
    n_pts = spec.size
    rho = parse_gram(rho_path) if rho_path else np.ones((n_pts, n_pts))
    sigma = parse_gram(sigma_path) if sigma_path else adv.output_gram(spec)
    if rho.shape != (n_pts, n_pts) or sigma.shape != (n_pts, n_pts):
        raise InputError("Gram matrices must match the function domain size")
    return rho, sigma


# -- subcommand bodies: return (results dict, ok flag) --------------------------


def _cmd_adv(args):
    spec = parse_function(args.function)
    tol = args.tol if args.tol is not None else adv.CROSSCHECK_TOL
    res = adv.adv_pm(spec, cross_tol=tol)
    check = adv.check_witness(res.witness, adv.build_filters(spec), adv.output_gram(spec))
    ok = (res.certified_lower <= res.value + tol
          and check.min_eigenvalue >= -1e-8 and check.trace_error <= 1e-8)
    return {
        "value": res.value,
        "filtered_value": res.filtered_value,
        "certified_lower_bound": res.certified_lower,
        "crosscheck_gap": res.crosscheck_gap,
        "witness": {"trace_error": check.trace_error,
                    "support_violation": check.support_violation,
                    "min_eigenvalue": check.min_eigenvalue,
                    "objective": check.objective},
    }, ok


def _cmd_qdist(args):
    spec = parse_function(args.function)
    rho, sigma = _evaluation_pair(spec, args.rho, args.sigma)
    res = adv.query_distance(rho, sigma, adv.build_filters(spec))
    if res.infeasible:
        return {"value": None, "infinite": True}, True
    rep = norms.check_factorization(rho - sigma, adv.build_filters(spec), res.cert)
    ok = rep.residual <= 1e-6 * (1 + float(np.max(np.abs(rho - sigma))))
    return {"value": res.value, "infinite": False,
            "certificate_residual": rep.residual,
            "certificate_objective": rep.objective}, ok


def _cmd_qdelta(args):
    spec = parse_function(args.function)
    rho, sigma = _evaluation_pair(spec, args.rho, args.sigma)
    delta = args.delta if args.delta is not None else 0.0
    deltas = adv.build_filters(spec)
    fn = adv.q_delta_nc if args.noncoherent else adv.q_delta
    res = fn(rho, sigma, deltas, delta)
    return {"delta": delta, "noncoherent": bool(args.noncoherent),
            "value": res.value}, True


def _cmd_simulate(args):
    spec = parse_function(args.function)
    eps = args.eps if args.eps is not None else 0.1
    rho, sigma = _evaluation_pair(spec, args.rho, args.sigma)
    inst = conversion.build_instance(spec, rho, sigma, eps)
    report = conversion.simulate(inst)
    if args.histogram_csv:
        with open(args.histogram_csv, "w", encoding="utf-8") as fh:
            fh.write(report.histogram_csv(0))
    return report.to_dict(), report.all_within_bounds


def _cmd_compose(args):
    outer = parse_function(args.outer)
    inner = parse_function(args.inner)
    n = args.copies if args.copies is not None else 2
    upper = composition.check_upper(outer, inner, n)
    results = {
        "composed_adv": upper.composed_adv,
        "outer_adv": upper.outer_adv,
        "inner_distance": upper.inner_distance,
        "upper_bound": upper.bound,
        "upper_ok": upper.passed,
    }
    ok = upper.passed
    boolean_case = all(s == 2 for s in outer.alphabet_sizes) and inner.is_boolean_output
    if boolean_case:
        lower = composition.compose_witness(outer, inner, n)
        results["witness_lower_bound"] = lower.value
        results["witness_min_eigenvalue"] = lower.min_eigenvalue
        lower_ok = (lower.value <= upper.composed_adv + 1e-3
                    and lower.value >= lower.outer_value * lower.inner_value - 1e-3)
        results["lower_ok"] = lower_ok
        ok = ok and lower_ok
    return results, ok


def _cmd_props(args):
    trials = args.trials if args.trials is not None else 50
    tol = args.tol if args.tol is not None else 1e-4
    rep = norms.property_suite(trials=trials, seed=args.seed, tol=tol)
    return rep.to_dict(), rep.all_passed


def _random_one_query_instance(rng, n_bits=2, work_dim=2, n_points=4):
    all_words = [format(i, f"0{n_bits}b") for i in range(2 ** n_bits)]
    idx = rng.choice(len(all_words), size=min(n_points, len(all_words)), replace=False)
    words = [all_words[i] for i in sorted(idx)]
    states = rng.normal(size=(len(words), n_bits * work_dim)) \
        + 1j * rng.normal(size=(len(words), n_bits * work_dim))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    oracles = []
    for _ in range(n_bits):
        per_symbol = []
        for _ in range(2):
            m = rng.normal(size=(work_dim, work_dim)) + 1j * rng.normal(size=(work_dim, work_dim))
            q, _ = np.linalg.qr(m)
            per_symbol.append(q)
        oracles.append(per_symbol)
    return words, states, oracles


def _cmd_certify_one_query(args):
    trials = args.trials if args.trials is not None else 20
    rng = np.random.default_rng(args.seed)
    worst_res, worst_obj = 0.0, 0.0
    for _ in range(trials):
        words, states, oracles = _random_one_query_instance(rng)
        cert = conversion.one_query_certificate(states, oracles, words)
        worst_res = max(worst_res, cert.residual)
        worst_obj = max(worst_obj, cert.objective)
    ok = worst_res <= 1e-8 and worst_obj <= 2 + 1e-8
    return {"trials": trials, "max_residual": worst_res,
            "max_objective": worst_obj, "bound": 2.0}, ok


def _cmd_certify_fractional(args):
    trials = args.trials if args.trials is not None else 5
    rng = np.random.default_rng(args.seed)
    lams = [args.lam] if args.lam is not None else [round(0.05 * i, 2) for i in range(1, 21)]
    records = []
    ok = True
    for _ in range(trials):
        words = [format(i, "02b") for i in range(4)]
        states = rng.normal(size=(4, 2 * 2)) + 1j * rng.normal(size=(4, 2 * 2))
        states /= np.linalg.norm(states, axis=1, keepdims=True)
        for lam in lams:
            try:
                cert = conversion.fractional_query_certificate(states, words, lam)
                records.append({"lam": lam, "cost": cert.cost, "bound": cert.bound,
                                "residual": cert.residual})
            except BoundViolation as exc:
                records.append({"lam": lam, "error": str(exc)})
                ok = False
    return {"trials": trials, "checks": len(records),
            "max_cost": max((r.get("cost", 0.0) for r in records), default=0.0),
            "all_verified": ok}, ok


def _cmd_output_condition(args):
    trials = args.trials if args.trials is not None else 50
    noise = args.eps if args.eps is not None else 0.15
    rng = np.random.default_rng(args.seed)
    fwd_ok = rev_ok = True
    worst_gap = 0.0
    for _ in range(trials):
        n_pts, dim = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        base = rng.normal(size=(n_pts, dim)) + 1j * rng.normal(size=(n_pts, dim))
        base /= np.linalg.norm(base, axis=1, keepdims=True)
        pert = base + noise * (rng.normal(size=(n_pts, dim)) + 1j * rng.normal(size=(n_pts, dim)))
        pert /= np.linalg.norm(pert, axis=1, keepdims=True)
        rep = conversion.output_condition(base, pert)
        fwd_ok = fwd_ok and rep.forward_ok
        rev_ok = rev_ok and rep.reverse_ok
        worst_gap = max(worst_gap, rep.gamma2_value - rep.forward_bound)
    ok = fwd_ok and rev_ok
    return {"trials": trials, "forward_ok": fwd_ok, "reverse_ok": rev_ok,
            "worst_forward_gap": worst_gap}, ok


COMMANDS = {
    "adv": (_cmd_adv, "general adversary bound of a function"),
    "qdist": (_cmd_qdist, "query distance between two Gram matrices"),
    "qdelta": (_cmd_qdelta, "bounded-error query distance"),
    "simulate": (_cmd_simulate, "run the state-conversion algorithm"),
    "compose": (_cmd_compose, "composition bounds for f o g^n"),
    "props": (_cmd_props, "randomized filtered-norm property suite"),
    "certify-one-query": (_cmd_certify_one_query, "one-query distance certificates"),
    "certify-fractional": (_cmd_certify_fractional, "fractional-query certificates"),
    "output-condition": (_cmd_output_condition, "output-condition lemma, both directions"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="querynorms",
                                     description="query-complexity norms and simulators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--function", help="function JSON file")
        p.add_argument("--outer", help="outer function JSON file (compose)")
        p.add_argument("--inner", help="inner function JSON file (compose)")
        p.add_argument("--copies", type=int, default=None, help="inner copies (compose)")
        p.add_argument("--rho", help="initial Gram JSON file")
        p.add_argument("--sigma", help="target Gram JSON file")
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--lam", type=float, default=None, help="fractional query weight")
        p.add_argument("--noncoherent", action="store_true")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--histogram-csv", help="write the first input's eigenphase histogram")
    return parser


def _required(args, names):
    for name in names:
        if getattr(args, name) is None:
            raise InputError(f"--{name} is required for this command")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command in ("adv", "qdist", "qdelta", "simulate"):
            _required(args, ["function"])
        if args.command == "compose":
            _required(args, ["outer", "inner"])
        if args.command == "qdelta":
            _required(args, ["delta"])
        body, _ = COMMANDS[args.command]
        results, ok = body(args)
        status = 0 if ok else 1
        error = None
    except InputError as exc:
        results, ok, status, error = None, False, 2, str(exc)
    except (BoundViolation, ConsistencyError, CertificateError, sdp.SdpError) as exc:
        results, ok, status, error = None, False, 1, str(exc)
    except ValueError as exc:
        results, ok, status, error = None, False, 2, str(exc)

    report = {
        "schema": SCHEMA,
        "command": args.command,
        "inputs": _digest([args.function, args.outer, args.inner, args.rho, args.sigma])
        if status != 2 else {},
        "parameters": {
            k: getattr(args, k)
            for k in ("eps", "delta", "lam", "trials", "seed", "tol", "copies", "noncoherent")
            if getattr(args, k) not in (None, False)
        },
        "passed": ok,
        "results": results,
        "error": error,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
