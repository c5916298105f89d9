"""Command-line entry point: ``langevin-kit {plan,bound,sample,figure1,validate}``.

Every subcommand reads a JSON configuration (``--config``), optionally
overrides the seed (``--seed``) and the output directory (``--out``), writes
its results there and echoes the main result on stdout.  Failures print a
JSON object ``{"error": ..., "message": ...}`` on stderr and exit nonzero:

====  =======================================
code  meaning
====  =======================================
2     invalid configuration
3     precision unreachable for the bound
4     hard step-size hypothesis violated
1     any other failure
====  =======================================

``LANGEVIN_KIT_THREADS`` caps the number of worker processes used by
``figure1`` (default 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bounds as B
from .config import (
    ExperimentConfig,
    build_noise,
    build_target,
    load_config,
    step_size_of,
    theta0_of,
)
from .exceptions import ConfigError, HypothesisError, InfeasibleError
from .linalg import lmco_matrices
from .metrics import empirical_w2, gaussian_w2, lmc_pushforward, lmco_pushforward, target_law
from .model import DiagonalGaussian, initial_w2_bound
from .planner import figure1_summary, figure1_table, min_iterations
from .samplers import (
    StepSchedule,
    compute_K1,
    lmc_run,
    lmco_prime_run,
    lmco_run,
    nlmc_run,
)

__all__ = ["main", "cmd_plan", "cmd_bound", "cmd_sample", "cmd_figure1", "cmd_validate"]

FIGURE1_COLUMNS = ["p", "epsilon", "logK_thm1", "logK_thm2", "logK_dm"]
VALIDATE_COLUMNS = ["k", "h_k", "bound", "exact_w2", "empirical_w2"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _workers() -> int:
    raw = os.environ.get("LANGEVIN_KIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"LANGEVIN_KIT_THREADS must be an integer, got {raw!r}") from None


def _w2_0(cfg: ExperimentConfig, target) -> float:
    if cfg.bound.W2_0 is not None:
        return cfg.bound.W2_0
    return initial_w2_bound(target, theta0_of(cfg, target))


def _noise_levels(cfg, target):
    noise = build_noise(cfg.sampler.noise, target)
    if noise is None:
        return 0.0, 0.0
    return noise.delta, noise.sigma


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- commands: each returns the object echoed on stdout -------------------


def cmd_plan(cfg: ExperimentConfig, out: Path) -> dict:
    """Iteration budget for every configured bound at ``bound.epsilon``."""
    if cfg.bound.epsilon is None:
        raise ConfigError("bound.epsilon is required by the plan command")
    target = build_target(cfg.target)
    delta, sigma = _noise_levels(cfg, target)
    params = {
        "m": target.m,
        "M": target.M,
        "p": target.p,
        "W2_0": _w2_0(cfg, target),
        "delta": delta,
        "sigma": sigma,
        "M2": target.M2,
        "constants": cfg.bound.constants,
    }
    plans = [min_iterations(name, cfg.bound.epsilon, params).as_dict() for name in cfg.bound.theorems]
    result = {"plans": plans}
    _write_json(out / "plan.json", result)
    return result


def bound_values(cfg: ExperimentConfig) -> list:
    """Library evaluation of every configured bound at the sampler's ``(h, K)``."""
    target = build_target(cfg.target)
    delta, sigma = _noise_levels(cfg, target)
    W0 = _w2_0(cfg, target)
    K = cfg.sampler.K
    q = B.BoundQuery(
        m=target.m,
        M=target.M,
        p=target.p,
        h=step_size_of(cfg, target),
        K=K,
        W2_0=W0,
        delta=delta,
        sigma=sigma,
        M2=target.M2,
    )
    out = []
    for name in cfg.bound.theorems:
        if name == "thm1":
            v = B.bound_thm1(q)
        elif name == "thm2":
            v = B.bound_thm2(target.m, target.M, target.p, K, compute_K1(target.m, target.M, target.p, W0))
        elif name == "thm3":
            v = B.bound_thm3(q)
        elif name == "thm4":
            v = B.bound_thm4(q)
        elif name.startswith("thm5_"):
            v = B.bound_thm5(q, name[len("thm5_"):], cfg.bound.constants)
        else:
            v = B.bound_dm(q)
        out.append(v.as_dict())
    return out


def cmd_bound(cfg: ExperimentConfig, out: Path) -> dict:
    result = {"bounds": bound_values(cfg)}
    _write_json(out / "bound.json", result)
    return result


def run_sampler(cfg: ExperimentConfig):
    """Run the configured chain; returns ``(state, trace)``."""
    target = build_target(cfg.target)
    theta0 = theta0_of(cfg, target)
    s = cfg.sampler
    h = step_size_of(cfg, target)
    if s.algorithm == "lmc":
        if s.schedule == "theorem2":
            schedule = StepSchedule.theorem2_for(target, _w2_0(cfg, target))
        else:
            schedule = StepSchedule.constant(h)
        return lmc_run(target, theta0, schedule, s.K, s.seed, s.stride)
    if s.algorithm == "nlmc":
        noise = build_noise(s.noise, target)
        if noise is None:
            from .noise import ZeroNoise

            noise = ZeroNoise(target.p)
        return nlmc_run(target, theta0, h, s.K, noise, s.seed, s.stride)
    if s.algorithm == "lmco":
        return lmco_run(target, theta0, h, s.K, s.seed, s.stride)
    return lmco_prime_run(target, theta0, h, s.K, s.seed, s.stride)


def cmd_sample(cfg: ExperimentConfig, out: Path) -> dict:
    """Write ``trace.csv`` and ``final_state.json``."""
    state, trace = run_sampler(cfg)
    with open(out / "trace.csv", "w", newline="") as fh:
        trace.to_csv(fh)
    final = {
        "algorithm": cfg.sampler.algorithm,
        "seed": cfg.sampler.seed,
        "k": state.k,
        "theta": [float(v) for v in state.theta],
    }
    _write_json(out / "final_state.json", final)
    return final


def cmd_figure1(cfg: ExperimentConfig, out: Path) -> dict:
    """Write ``figure1.csv`` (log iteration budgets) and ``figure1_summary.json``."""
    f = cfg.figure1
    rows = figure1_table(f.m, f.M, f.epsilons, f.p_grid, workers=_workers())
    with open(out / "figure1.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIGURE1_COLUMNS)
        for r in rows:
            lk = r.logK
            w.writerow([r.p, _fmt(r.epsilon), _fmt(lk["thm1"]), _fmt(lk["thm2"]), _fmt(lk["dm"])])
    summary = {str(k): v for k, v in figure1_summary(rows).items()}
    _write_json(out / "figure1_summary.json", summary)
    return summary


def validation_rows(cfg: ExperimentConfig) -> list:
    """Bound, exact W2 and empirical W2 at every checkpoint of the configured run.

    Needs a Gaussian target.  The bound column is that of the first configured
    theorem (empty where it does not apply, e.g. before ``K1``).  The empirical
    column compares ``validate.n_chains`` independent chains with as many exact
    target draws; it is empty when ``n_chains`` is 0.
    """
    target = build_target(cfg.target)
    if not isinstance(target, DiagonalGaussian):
        raise ConfigError("validate needs a Gaussian target")
    s = cfg.sampler
    theta0 = theta0_of(cfg, target)
    h = step_size_of(cfg, target)
    W0 = _w2_0(cfg, target)
    noise = build_noise(s.noise, target)
    if s.algorithm == "lmc" and s.schedule == "theorem2":
        schedule = StepSchedule.theorem2_for(target, W0)
    else:
        schedule = StepSchedule.constant(h)
    if s.algorithm in ("lmc", "nlmc"):
        if schedule.kind == "constant" and h >= 2.0 / target.M:
            raise HypothesisError(f"constant step h={h} must be below 2/M = {2.0 / target.M}")
        laws = lmc_pushforward(target, theta0, schedule, s.K, noise=noise if s.algorithm == "nlmc" else None, full=True)
    elif s.algorithm == "lmco":
        laws = lmco_pushforward(target, theta0, h, s.K, full=True)
    else:
        raise ConfigError("validate supports lmc, nlmc and lmco")
    pi = target_law(target)
    theorem = cfg.bound.theorems[0]
    checkpoints = sorted(set(range(0, s.K + 1, s.stride)) | {s.K})

    emp = {}
    n = cfg.validate.n_chains
    if n > 0:
        rng_chain, rng_noise, rng_ref = (
            np.random.Generator(np.random.PCG64(c)) for c in np.random.SeedSequence(s.seed).spawn(3)
        )
        X = np.tile(theta0, (n, 1))
        ref = target.sample(n, rng_ref)
        emp[0] = empirical_w2(X, ref)
        for k in range(s.K):
            hk = schedule.step(k)
            if s.algorithm == "lmco":
                Mk, _, Sk = lmco_matrices(target.hess(X[0]), hk)
                X = X - target.grad_batch(X) @ Mk.T + rng_chain.standard_normal(X.shape) @ Sk.T
            else:
                G = target.grad_batch(X)
                if s.algorithm == "nlmc" and noise is not None:
                    G = G + noise.draw_batch(X, rng_noise)
                X = X - hk * G + math.sqrt(2 * hk) * rng_chain.standard_normal(X.shape)
            if k + 1 in checkpoints:
                emp[k + 1] = empirical_w2(X, ref)

    delta, sigma = (noise.delta, noise.sigma) if noise is not None else (0.0, 0.0)
    K1 = compute_K1(target.m, target.M, target.p, W0)
    rows = []
    for k in checkpoints:
        hk = 0.0 if k == 0 else schedule.step(k - 1)
        q = B.BoundQuery(target.m, target.M, target.p, h=h, K=k, W2_0=W0, delta=delta, sigma=sigma, M2=target.M2)
        if theorem == "thm2":
            bnd = B.bound_thm2(target.m, target.M, target.p, k, K1).value if k >= K1 else None
        elif theorem == "thm1":
            bnd = B.bound_thm1(q).value
        elif theorem == "thm3":
            bnd = B.bound_thm3(q).value
        elif theorem == "thm4":
            bnd = B.bound_thm4(q).value
        elif theorem.startswith("thm5_"):
            bnd = B.bound_thm5(q, theorem[len("thm5_"):], cfg.bound.constants).value
        else:
            bnd = B.bound_dm(q).value
        rows.append((k, hk, bnd, gaussian_w2(laws[k], pi), emp.get(k)))
    return rows


def cmd_validate(cfg: ExperimentConfig, out: Path) -> dict:
    rows = validation_rows(cfg)
    with open(out / "validate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VALIDATE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    violations = sum(1 for _, _, b, e, _ in rows if b is not None and e > b)
    return {"rows": len(rows), "violations": violations}


COMMANDS = {
    "plan": cmd_plan,
    "bound": cmd_bound,
    "sample": cmd_sample,
    "figure1": cmd_figure1,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langevin-kit",
        description="Langevin Monte Carlo samplers, W2 guarantees and iteration planning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "plan": "smallest iteration count reaching bound.epsilon (plan.json)",
        "bound": "evaluate guarantees at the sampler's (h, K) (bound.json)",
        "sample": "run the configured chain (trace.csv, final_state.json)",
        "figure1": "iteration budgets versus dimension (figure1.csv)",
        "validate": "guarantee versus exact and empirical W2 (validate.csv)",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, help="JSON configuration file (defaults if omitted)")
        sp.add_argument("--seed", type=int, help="override sampler.seed")
        sp.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig.from_dict({})
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = args.out if args.out is not None else Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](cfg, out)
        for w in caught:
            print(json.dumps({"warning": w.category.__name__, "message": str(w.message)}), file=sys.stderr)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), 2)
    except InfeasibleError as exc:
        return _fail("InfeasibleError", str(exc), 3)
    except HypothesisError as exc:
        return _fail("HypothesisError", str(exc), 4)
    except Exception as exc:  # noqa: BLE001 - report everything as JSON
        return _fail(type(exc).__name__, str(exc), 1)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
