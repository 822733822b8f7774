"""Command-line experiment runner.

Every report carries the artifact version and a config echo; feeding a
report back through ``--config`` reruns the same experiment.  Reports are
deterministic functions of their config, so elapsed time is printed on
stderr unless ``--timing`` asks for it inside the report.

Exit codes: 0 success, 2 bad configuration, 3 infeasible parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from importlib import resources

import numpy as np

from . import __version__
from .distributions import Instance, load_instance, quantile_of_max
from .errors import ProphetBenchError
from .instances import (
    named_instance,
    sample_decomposition,
    thm2_optimal_value,
    topk_lb_event_probs,
    topk_lb_instance,
)
from .multithreshold import (
    algorithm2_policy,
    coupled_discrepancy,
    derive_params,
    lemma_checkers,
    superstar_fallback_policy,
)
from .policies import (
    CutoffPolicy,
    iid_optimal_policy,
    pi_single_threshold,
    ps_single_threshold,
    topk_single_threshold,
)
from .poissonization import lambda_star, lecam_check, optimize_lambda
from .simulator import BEST_CHOICE, TopK, derive_seed, estimate, exact_success_small

ARTIFACT = f"artifact-{__version__}"
EXIT_CONFIG, EXIT_INFEASIBLE = 2, 3


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# instance, policy and goal strings


def load_instance_spec(spec: str) -> Instance:
    """A JSON file path or a named generator such as ``iid-uniform:10``."""
    if spec.endswith(".json") or os.path.sep in spec:
        if not os.path.exists(spec):
            raise ConfigError(f"instance file not found: {spec}")
        return load_instance(spec)
    return named_instance(spec)


def parse_goal(spec: str):
    if spec == "best-choice":
        return BEST_CHOICE
    if spec.startswith("top-k:"):
        return TopK(int(spec.split(":", 1)[1]))
    raise ConfigError(f"unknown goal {spec!r}; use best-choice or top-k:K")


def build_policy(spec: str, instance: Instance, seed: int = 0):
    """``pi-single``, ``ps-single``, ``topk:K``, ``iid-optimal[:GRID]``, ``cutoff:I``,
    ``multi-threshold:GAMMA``, ``superstar-fallback:EPS``."""
    name, _, arg = spec.partition(":")
    if name == "pi-single":
        return pi_single_threshold(instance)
    if name == "ps-single":
        return ps_single_threshold(instance)
    if name == "topk":
        return topk_single_threshold(instance, int(arg))
    if name == "iid-optimal":
        if not instance.is_iid:
            raise ConfigError("iid-optimal needs an i.i.d. instance")
        return iid_optimal_policy(instance.distributions[0], instance.n, int(arg) if arg else 4000)
    if name == "cutoff":
        return CutoffPolicy(int(arg))
    if name == "multi-threshold":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return algorithm2_policy(instance, derive_params(float(arg), instance.n))
    if name == "superstar-fallback":
        return superstar_fallback_policy(instance, float(arg), seed=seed)
    raise ConfigError(f"unknown policy {spec!r}")


# --------------------------------------------------------------------------
# output


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def render_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in _clean(r).items()})
    return buf.getvalue()


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def csv_schema() -> dict:
    return json.loads(resources.files("prophet_bench").joinpath("data/csv_schema.json").read_text())


def _estimate_dict(e) -> dict:
    return {"trials": e.trials, "successes": e.successes, "point": e.point,
            "ci_low": e.ci_low, "ci_high": e.ci_high, "confidence": e.confidence, "stderr": e.stderr}


# --------------------------------------------------------------------------
# commands; each returns (result dict, optional csv rows)


def cmd_simulate(a):
    inst = load_instance_spec(a.instance)
    goal = parse_goal(a.goal)
    pol = build_policy(a.policy, inst, a.seed)
    out = {"instance_n": inst.n, "policy": pol.name, "goal": goal.name}
    if a.exact:
        out["exact"] = exact_success_small(inst, pol, goal)
    else:
        out["estimate"] = _estimate_dict(estimate(inst, pol, goal, a.trials, a.seed, a.confidence, a.workers))
    if getattr(pol, "predicted_success", None) is not None:
        out["predicted_success"] = pol.predicted_success
    rows = [{"instance": a.instance, "policy": a.policy, "goal": a.goal, "seed": a.seed,
             **(out.get("estimate") or {"point": out.get("exact")})}]
    return out, rows


def _threshold_dict(tau):
    return {"value": tau.value, "aux": tau.aux}


def cmd_threshold(a):
    inst = load_instance_spec(a.instance)
    kind, _, arg = a.kind.partition(":")
    if kind == "quantile":
        tau = quantile_of_max(inst.distributions, float(arg))
    else:
        tau = build_policy(a.kind, inst).thresholds[0]
    return {"kind": a.kind, "tau": _threshold_dict(tau)}, [{"kind": a.kind, "value": tau.value, "aux": tau.aux}]


def cmd_lambda_star(a):
    lam, val = optimize_lambda(tol=a.tol)
    return {"lambda_star": lam, "value": val}, [{"lambda_star": lam, "value": val}]


def cmd_lecam(a):
    if not a.probs and not a.random:
        raise ConfigError("give --probs or --random")
    if a.probs:
        vecs = [[float(x) for x in a.probs.split(",")]]
    else:
        if a.seed is None:
            raise ConfigError("--random needs --seed")
        rng = np.random.default_rng(derive_seed(a.seed, 0))
        vecs = [rng.uniform(0, a.pmax, rng.integers(1, a.max_n + 1)).tolist() for _ in range(a.random)]
    rows = []
    for i, p in enumerate(vecs):
        tv, bound = lecam_check(p)
        rows.append({"row": i, "n": len(p), "tv_exact": tv, "bound": bound, "violated": tv > bound})
    out = {"vectors": len(rows), "violations": sum(r["violated"] for r in rows)}
    if len(rows) == 1:
        out.update(tv_exact=rows[0]["tv_exact"], bound=rows[0]["bound"])
    else:
        out["max_ratio"] = max(r["tv_exact"] / r["bound"] for r in rows if r["bound"] > 0)
    return out, rows


def cmd_hard_instance(a):
    idx, val = thm2_optimal_value(a.n)
    out = {"n": a.n, "best_index": idx, "best_value": val, "best_fraction": idx / a.n,
           "gap_above_inv_e": val - math.exp(-1.0)}
    if a.trials:
        if a.seed is None:
            raise ConfigError("--trials needs --seed")
        inst = named_instance(f"thm2-band:{a.n}")
        out["estimate"] = _estimate_dict(estimate(inst, CutoffPolicy(idx), BEST_CHOICE, a.trials, a.seed,
                                                  a.confidence, a.workers))
    return out, [{k: v for k, v in out.items() if k != "estimate"}]


def cmd_topk_lb(a):
    ev = topk_lb_event_probs(a.n, a.k)
    out = {"n": a.n, "k": a.k, "p_A": ev.p_A, "p_B": ev.p_B, "p_Z2_zero": ev.p_Z2_zero,
           "p_Z2_ge_k": ev.p_Z2_ge_k, "trap_bound": ev.trap_bound}
    if a.trials:
        if a.seed is None:
            raise ConfigError("--trials needs --seed")
        inst = topk_lb_instance(a.n, a.k)
        e = estimate(inst, topk_single_threshold(inst, a.k), TopK(a.k), a.trials, a.seed, a.confidence, a.workers)
        out["estimate"] = _estimate_dict(e)
        out["failure"] = 1.0 - e.point
        rng = np.random.default_rng(derive_seed(a.seed, 1))
        dec = sample_decomposition(a.n, a.k, min(a.trials, 20000), rng)
        out["mc_p_A"] = float(dec.event_A.mean())
        out["mc_p_B"] = float(dec.event_B.mean())
    return out, [{k: v for k, v in out.items() if k != "estimate"}]


def cmd_multi_threshold(a):
    inst = load_instance_spec(a.instance)
    params = derive_params(a.gamma, inst.n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pol = algorithm2_policy(inst, params)
    out = {"params": {k: getattr(params, k) for k in params.__dataclass_fields__},
           "alpha": pol.alpha, "budget": pol.alpha - 13 * a.gamma,
           "warnings": [str(w.message) for w in caught]}
    if a.trials:
        if a.seed is None:
            raise ConfigError("--trials needs --seed")
        out["estimate"] = _estimate_dict(estimate(inst, pol, BEST_CHOICE, a.trials, a.seed, a.confidence, a.workers))
        if a.coupled:
            r = coupled_discrepancy(inst, pol, a.trials, a.seed)
            out["coupled"] = {"trials": r.trials, "alg1_success": r.alg1_success,
                              "alg2_success": r.alg2_success, "discrepancy": r.discrepancy,
                              "discrepancy_rate": r.discrepancy_rate, "budget": 3 * a.gamma}
    row = {"gamma": a.gamma, "alpha": pol.alpha, **(out.get("estimate") or {})}
    return out, [row]


def cmd_lemma_check(a):
    inst = load_instance_spec(a.instance)
    rep = lemma_checkers(inst, derive_params(a.gamma, inst.n), a.reps, a.seed)
    row = {"gamma": a.gamma}
    for k, v in rep.items():
        if isinstance(v, dict) and "fraction" in v:
            row[k] = v["fraction"]
    return rep, [row]


SWEEPABLE = {
    "simulate": cmd_simulate,
    "hard-instance": cmd_hard_instance,
    "lemma-check": cmd_lemma_check,
    "topk-lb": cmd_topk_lb,
    "multi-threshold": cmd_multi_threshold,
}


def _coerce(v: str):
    for f in (int, float):
        try:
            return f(v)
        except ValueError:
            pass
    return v


def cmd_sweep(a, base: argparse.Namespace):
    """Rerun a sub-experiment once per value of ``--param``.

    String options may contain ``{param}``, which is replaced by the value.
    Row ``i`` runs with seed ``derive_seed(master, i)``.
    """
    exp = SWEEPABLE[a.experiment]
    if a.seed is None and a.experiment != "hard-instance":
        raise ConfigError("sweeps need --seed")
    values = [_coerce(v) for v in a.values.split(",") if v != ""]
    if not values:
        raise ConfigError("--values is empty")
    rows = []
    for i, v in enumerate(values):
        ns = argparse.Namespace(**vars(base))
        for k, val in vars(ns).items():
            if isinstance(val, str) and "{" + a.param + "}" in val:
                setattr(ns, k, val.replace("{" + a.param + "}", str(v)))
        if hasattr(ns, a.param) and not isinstance(getattr(ns, a.param), str):
            setattr(ns, a.param, v)
        ns.seed = None if a.seed is None else derive_seed(a.seed, i) & 0x7FFFFFFF
        _, sub = exp(ns)
        for r in sub:
            rows.append({"row": i, "param": a.param, "value": v, "seed": ns.seed, **r})
    if a.experiment == "simulate" or a.experiment == "topk-lb":
        for r in rows:
            fail = r.get("failure", 1.0 - r["point"] if r.get("point") is not None else None)
            r["failure"] = fail
            r["log_failure"] = math.log(fail) if fail and fail > 0 else float("-inf")
    if a.experiment == "hard-instance":
        for r in rows:
            r["envelope"] = 2.0 / r["n"]
    out = {"rows": len(rows)}
    if a.experiment in ("simulate", "topk-lb") and len(rows) >= 2:
        xs = np.array([float(r["value"]) for r in rows])
        ys = np.array([r["log_failure"] for r in rows])
        ok = np.isfinite(ys)
        if ok.sum() >= 2:
            out["log_failure_slope"] = float(np.polyfit(xs[ok], ys[ok], 1)[0])
    out["table"] = rows
    return out, rows


# --------------------------------------------------------------------------
# argument parsing


def _common(p, seed_required=True, trials=True):
    p.add_argument("--seed", type=int, required=seed_required, default=None, help="master seed")
    if trials:
        p.add_argument("--trials", type=int, default=0 if not seed_required else 100000)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--workers", type=int, default=None)


def _output_options(p, default):
    p.add_argument("--config", default=default, help="rerun the config echoed in a previous JSON report")
    p.add_argument("--out", default=default, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=default,
                   help="report format; json except for sweep, which defaults to csv")
    p.add_argument("--timing", action="store_true", default=False if default is None else default,
                   help="put elapsed time in the report (breaks byte identity)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prophet-bench", description="Best-choice prophet experiments.")
    ap.add_argument("--version", action="version", version=ARTIFACT)
    _output_options(ap, None)
    # the same options after the subcommand; SUPPRESS keeps the top-level values otherwise
    shared = argparse.ArgumentParser(add_help=False)
    _output_options(shared, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command")
    _add = sub.add_parser
    sub.add_parser = lambda *args, **kw: _add(*args, parents=[shared], **kw)

    p = sub.add_parser("simulate", help="Monte Carlo or exact success of a policy")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--goal", default="best-choice")
    p.add_argument("--exact", action="store_true", help="exhaustive enumeration for small discrete instances")
    _common(p)

    p = sub.add_parser("sweep", help="one row per value of a swept parameter (CSV by default)")
    p.add_argument("--experiment", choices=sorted(SWEEPABLE), default="simulate")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma separated")
    p.add_argument("--instance")
    p.add_argument("--policy")
    p.add_argument("--goal", default="best-choice")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--coupled", action="store_true")
    _common(p, seed_required=False)

    p = sub.add_parser("threshold", help="single thresholds of an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--kind", default="ps-single", help="pi-single, ps-single, topk:K or quantile:P")

    p = sub.add_parser("lambda-star", help="maximizer of the Poisson success series")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("lecam", help="Poisson approximation distance against 2 sum p^2")
    p.add_argument("--probs", help="comma separated probabilities")
    p.add_argument("--random", type=int, default=0, help="number of random vectors")
    p.add_argument("--max-n", type=int, default=50)
    p.add_argument("--pmax", type=float, default=0.5)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("hard-instance", help="best cutoff rule on the index-order hard instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="accepted for clarity; the evaluator is always exact")
    _common(p, seed_required=False)

    p = sub.add_parser("topk-lb", help="event probabilities of the top-k lower bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    _common(p, seed_required=False)

    p = sub.add_parser("multi-threshold", help="Algorithm 2 with proxy-optimal inner thresholds")
    p.add_argument("--instance", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--coupled", action="store_true", help="also measure the Algorithm 1 coupling discrepancy")
    _common(p, seed_required=False)

    p = sub.add_parser("lemma-check", help="exact lemma checks over random subsets")
    p.add_argument("--instance", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    return ap


COMMANDS = {
    "simulate": cmd_simulate,
    "threshold": cmd_threshold,
    "lambda-star": cmd_lambda_star,
    "lecam": cmd_lecam,
    "hard-instance": cmd_hard_instance,
    "topk-lb": cmd_topk_lb,
    "multi-threshold": cmd_multi_threshold,
    "lemma-check": cmd_lemma_check,
}

_OUTPUT_KEYS = ("config", "out", "format", "timing")


def _validate(a):
    if getattr(a, "trials", None) is not None and a.trials < 0:
        raise ConfigError("trials must be positive")
    if a.command == "simulate" and not a.exact and a.trials < 1:
        raise ConfigError("trials must be at least 1")
    if not 0 < getattr(a, "confidence", 0.5) < 1:
        raise ConfigError("confidence must lie in (0, 1)")


def run(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.config:
        with open(a.config) as fh:
            echo = json.load(fh)["config"]
        rerun = argparse.Namespace(**echo)
        rerun.config, rerun.out, rerun.timing = None, a.out, a.timing
        rerun.format = a.format or echo.get("format")
        a = rerun
    if not a.command:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    a.format = a.format or ("csv" if a.command == "sweep" else "json")
    t0 = time.perf_counter()
    try:
        _validate(a)
        if a.command == "sweep":
            result, rows = cmd_sweep(a, a)
        else:
            result, rows = COMMANDS[a.command](a)
        fmt = a.format
    except ProphetBenchError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    elapsed = time.perf_counter() - t0

    if fmt == "csv":
        columns = list(dict.fromkeys(k for r in rows for k in r))
        text = render_csv(rows, columns)
    else:
        config = {k: v for k, v in sorted(vars(a).items()) if k not in ("config", "out", "timing")}
        report = {"artifact": ARTIFACT, "command": a.command, "config": config, "result": result}
        if a.timing:
            report["elapsed_seconds"] = elapsed
        text = render_json(report)
    if a.out:
        with open(a.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not a.timing:
        print(f"elapsed {elapsed:.3f} s", file=sys.stderr)
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
