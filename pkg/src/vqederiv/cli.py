"""Command-line driver: optimize, derive, pes, euler, excited, validate.

Every artifact embeds a manifest (input hashes, backend, seeds, tolerances,
tool version) and identical invocations produce byte-identical files, shot
noise included, because every random stream is derived from the one --seed.
Wall-clock timings are real nondeterminism, so they go to stderr instead of
into artifacts.

Exit codes: 0 success, 2 bad inputs or files, 3 a numerical guard refused to
proceed (non-stationary point, deflation collapse, drifted calibration),
1 anything unexpected.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from importlib import resources

import numpy as np

from . import __version__
from ._seeding import derive_seed
from .circuits import circuit_from_json
from .continuation import continuation_scan
from .energy_derivatives import (
    cost_estimate,
    energy_derivatives,
    fd_validate,
    taylor_pes,
)
from .excited import excited_derivatives, vqd_optimize
from .hamiltonians import family_from_json
from .optimize import OptimizerConfig, optimize
from .theta_derivatives import Backend

_BUNDLED = {
    "hamiltonian": "model1q_family.json",
    "ansatz": "model1q_ansatz.json",
}


@contextmanager
def _stage(name: str):
    t0 = time.perf_counter()
    yield
    print(f"[timing] {name}: {time.perf_counter() - t0:.3f} s", file=sys.stderr)


def _read_input(role: str, path: str | None) -> tuple[str, dict]:
    """File text plus its manifest record; defaults to the bundled model."""
    if path is None:
        name = _BUNDLED[role]
        text = resources.files("vqederiv").joinpath(f"data/{name}").read_text()
        shown = f"bundled:{name}"
    else:
        with open(path, "r") as f:
            text = f.read()
        shown = path
    digest = hashlib.sha256(text.encode()).hexdigest()
    return text, {"path": shown, "sha256": digest}


def _parse_x(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise ValueError(f"could not parse x values from {text!r}")


def _load_theta(path: str, n_params: int) -> tuple[np.ndarray, dict]:
    """Accept either an optimize artifact or a bare JSON list."""
    with open(path, "r") as f:
        text = f.read()
    record = {"path": path, "sha256": hashlib.sha256(text.encode()).hexdigest()}
    payload = json.loads(text)
    if isinstance(payload, dict):
        if "theta" not in payload:
            raise ValueError(f"{path} has no 'theta' field")
        payload = payload["theta"]
    theta = np.asarray(payload, dtype=float)
    if theta.shape != (n_params,):
        raise ValueError(
            f"theta from {path} has shape {theta.shape}, ansatz has "
            f"{n_params} parameters"
        )
    return theta, record


def _backend_from_args(args, master_seed: int) -> Backend | None:
    if args.backend == "exact" and not args.shots:
        return None
    shots = args.shots if args.shots else None
    return Backend(args.backend, shots=shots, seed=derive_seed(master_seed, "backend"))


def _opt_config(args, *parts, seeds: int | None = None) -> OptimizerConfig:
    return OptimizerConfig(
        tol=args.opt_tol,
        seeds=args.opt_seeds if seeds is None else seeds,
        seed=derive_seed(args.seed, "optimize", *parts),
    )


def _manifest(args, command: str, inputs: dict, **params) -> dict:
    return {
        "tool": "vqederiv",
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "seed": args.seed,
        "tolerances": {
            "optimizer": args.opt_tol,
            "stationarity": getattr(args, "stationarity_tol", None),
        },
        "workers": _worker_count(args),
        "parameters": params,
    }


def _worker_count(args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    env = os.environ.get("VQEDERIV_WORKERS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"VQEDERIV_WORKERS={env!r} is not an integer")
    return 1


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as f:
            f.write(text)


def _fmt(value: float | None) -> str:
    return "" if value is None else "%.17g" % value


def _emit_csv(manifest: dict, header: list[str], rows: list[list], out: str) -> None:
    lines = ["# " + json.dumps(manifest, sort_keys=True, separators=(",", ":"))]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(out, "w") as f:
        f.write("\n".join(lines) + "\n")


def _grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive ascending grid; empty when stop < start."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    if stop < start:
        return []
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_optimize(args) -> int:
    fam_text, fam_rec = _read_input("hamiltonian", args.hamiltonian)
    circ_text, circ_rec = _read_input("ansatz", args.ansatz)
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    x = _parse_x(args.x)
    config = _opt_config(args)
    with _stage("optimize"):
        result = optimize(circuit, np.zeros(circuit.n_params), family.eval(x), config)
    if not result.converged:
        raise RuntimeError(
            f"optimization did not converge (gradient norm {result.grad_norm:.3e})"
        )
    manifest = _manifest(
        args,
        "optimize",
        {"hamiltonian": fam_rec, "ansatz": circ_rec},
        x=x,
        opt_seeds=args.opt_seeds,
    )
    _emit_json(
        {
            "manifest": manifest,
            "x": x,
            "theta": result.theta.tolist(),
            "energy": result.energy,
            "grad_norm": result.grad_norm,
            "iterations": result.iterations,
            "converged": result.converged,
        },
        args.out,
    )
    return 0


def cmd_derive(args) -> int:
    fam_text, fam_rec = _read_input("hamiltonian", args.hamiltonian)
    circ_text, circ_rec = _read_input("ansatz", args.ansatz)
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    x = _parse_x(args.x)
    inputs = {"hamiltonian": fam_rec, "ansatz": circ_rec}
    if args.theta is not None:
        theta, inputs["theta"] = _load_theta(args.theta, circuit.n_params)
    else:
        with _stage("optimize"):
            result = optimize(
                circuit, np.zeros(circuit.n_params), family.eval(x), _opt_config(args)
            )
        if not result.converged:
            raise RuntimeError(
                f"optimization did not converge (gradient norm {result.grad_norm:.3e})"
            )
        theta = result.theta
    backend = _backend_from_args(args, args.seed)
    with _stage("derive"):
        bundle = energy_derivatives(
            circuit,
            theta,
            family,
            x,
            order=args.order,
            backend=backend,
            stationarity_tol=args.stationarity_tol,
            on_nonstationary=args.on_nonstationary,
        )
    manifest = _manifest(
        args,
        "derive",
        inputs,
        x=x,
        order=args.order,
        backend=args.backend,
        shots=args.shots or None,
    )
    _emit_json({"manifest": manifest, "bundle": bundle.to_dict()}, args.out)
    return 0


def _pes_task(payload: tuple) -> tuple[float, float]:
    fam_text, circ_text, x_val, tol, seeds, seed = payload
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    config = OptimizerConfig(tol=tol, seeds=seeds, seed=seed)
    result = optimize(circuit, np.zeros(circuit.n_params), family.eval([x_val]), config)
    if not result.converged:
        raise RuntimeError(
            f"VQE at x = {x_val:g} did not converge "
            f"(gradient norm {result.grad_norm:.3e})"
        )
    return x_val, result.energy


def cmd_pes(args) -> int:
    fam_text, fam_rec = _read_input("hamiltonian", args.hamiltonian)
    circ_text, circ_rec = _read_input("ansatz", args.ansatz)
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    if family.x_dim != 1:
        raise ValueError("pes scans take a one-component x")
    xs = _grid(args.start, args.stop, args.step)
    workers = _worker_count(args)
    manifest = _manifest(
        args,
        "pes",
        {"hamiltonian": fam_rec, "ansatz": circ_rec},
        start=args.start,
        stop=args.stop,
        step=args.step,
        order=args.order,
        at=args.at,
    )
    header = ["x", "E_vqe", "harmonic", "cubic"]
    if not xs:
        _emit_csv(manifest, header, [], args.out)
        return 0

    x0 = args.at if args.at is not None else xs[0]
    with _stage("expansion"):
        anchor = optimize(
            circuit,
            np.zeros(circuit.n_params),
            family.eval([x0]),
            _opt_config(args, "anchor"),
        )
        if not anchor.converged:
            raise RuntimeError(
                f"VQE at the expansion point x = {x0:g} did not converge"
            )
        bundle = energy_derivatives(
            circuit,
            anchor.theta,
            family,
            [x0],
            order=args.order,
            stationarity_tol=args.stationarity_tol,
        )
    with _stage("scan"):
        tasks = [
            (
                fam_text,
                circ_text,
                x_val,
                args.opt_tol,
                args.opt_seeds,
                derive_seed(args.seed, "optimize", "pes", i),
            )
            for i, x_val in enumerate(xs)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                energies = dict(pool.map(_pes_task, tasks))
        else:
            energies = dict(map(_pes_task, tasks))
    table = taylor_pes(bundle, (xs[0], xs[-1]), len(xs))
    rows = [
        [x_val, energies[x_val], table[i, 1], table[i, 2]]
        for i, x_val in enumerate(xs)
    ]
    _emit_csv(manifest, header, rows, args.out)
    return 0


def cmd_euler(args) -> int:
    fam_text, fam_rec = _read_input("hamiltonian", args.hamiltonian)
    circ_text, circ_rec = _read_input("ansatz", args.ansatz)
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    inputs = {"hamiltonian": fam_rec, "ansatz": circ_rec}
    if args.theta is not None:
        theta, inputs["theta"] = _load_theta(args.theta, circuit.n_params)
    else:
        with _stage("anchor"):
            anchor = optimize(
                circuit,
                np.zeros(circuit.n_params),
                family.eval([args.start]),
                _opt_config(args),
            )
        if not anchor.converged:
            raise RuntimeError("anchor optimization did not converge")
        theta = anchor.theta
    with _stage("scan"):
        traj = continuation_scan(
            family,
            circuit,
            theta,
            args.start,
            args.stop,
            args.step,
            reoptimize_every=args.reopt_every,
            # single-start keeps each re-optimization on the continued branch
            config=_opt_config(args, "reopt", seeds=1),
        )
    manifest = _manifest(
        args,
        "euler",
        inputs,
        start=args.start,
        stop=args.stop,
        step=args.step,
        reopt_every=args.reopt_every,
    )
    rows = [
        [s.x[0], s.energy, s.energy_reopt, s.grad_norm] for s in traj.steps
    ]
    _emit_csv(manifest, ["x", "E_euler", "E_reopt", "grad_norm"], rows, args.out)
    return 0


def cmd_excited(args) -> int:
    fam_text, fam_rec = _read_input("hamiltonian", args.hamiltonian)
    circ_text, circ_rec = _read_input("ansatz", args.ansatz)
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    x = _parse_x(args.x)
    with _stage("vqd"):
        stack = vqd_optimize(
            family,
            x,
            args.level + 1,
            circuit,
            betas=args.beta,
            config=_opt_config(args),
        )
    backend = _backend_from_args(args, args.seed)
    with _stage("derive"):
        bundle = excited_derivatives(
            stack,
            args.level,
            order=args.order,
            drop_inner_products=args.drop_inner_products == "true",
            backend=backend,
            stationarity_tol=args.stationarity_tol,
            on_nonstationary=args.on_nonstationary,
        )
    manifest = _manifest(
        args,
        "excited",
        {"hamiltonian": fam_rec, "ansatz": circ_rec},
        x=x,
        level=args.level,
        beta=args.beta,
        order=args.order,
        drop_inner_products=args.drop_inner_products,
        backend=args.backend,
        shots=args.shots or None,
    )
    _emit_json(
        {
            "manifest": manifest,
            "levels": [
                {"energy": lv.energy, "beta": lv.beta, "theta": lv.theta.tolist()}
                for lv in stack.levels
            ],
            "bundle": bundle.to_dict(),
        },
        args.out,
    )
    return 0


def cmd_validate(args) -> int:
    fam_text, fam_rec = _read_input("hamiltonian", args.hamiltonian)
    circ_text, circ_rec = _read_input("ansatz", args.ansatz)
    family = family_from_json(fam_text)
    circuit = circuit_from_json(circ_text)
    x = _parse_x(args.x)
    with _stage("validate"):
        report = fd_validate(
            family,
            circuit,
            x,
            args.order,
            args.fd_step,
            config=OptimizerConfig(
                tol=args.opt_tol,
                seeds=args.opt_seeds,
                seed=derive_seed(args.seed, "optimize"),
            ),
        )
    analytical = np.atleast_1d(np.asarray(report.analytical))
    numerical = np.atleast_1d(np.asarray(report.numerical))
    abs_diff = np.atleast_1d(np.asarray(report.abs_diff))
    manifest = _manifest(
        args,
        "validate",
        {"hamiltonian": fam_rec, "ansatz": circ_rec},
        x=x,
        order=args.order,
        fd_step=args.fd_step,
    )
    _emit_json(
        {
            "manifest": manifest,
            "analytical": analytical.tolist(),
            "numerical": numerical.tolist(),
            "abs_diff": abs_diff.tolist(),
            "max_abs_diff": float(np.max(abs_diff)),
        },
        args.out,
    )
    return 0


def cmd_cost(args) -> int:
    estimate = cost_estimate(
        args.n_qubits,
        args.n_params,
        args.order,
        args.epsilon,
        backend=args.backend,
        fd_step=args.fd_step,
        x_dim=args.x_dim,
    )
    manifest = _manifest(args, "cost", {})
    _emit_json({"manifest": manifest, "estimate": estimate}, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_io(sub, theta: bool = False):
    sub.add_argument("--hamiltonian", help="family JSON (default: bundled model)")
    sub.add_argument("--ansatz", help="circuit JSON (default: bundled model)")
    if theta:
        sub.add_argument("--theta", help="optimize artifact or JSON list")
    sub.add_argument("--out", help="output path (JSON commands default to stdout)")
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--opt-tol", type=float, default=1e-10)
    sub.add_argument("--opt-seeds", type=int, default=4, help="multi-start count")


def _add_backend(sub):
    sub.add_argument(
        "--backend", choices=["exact", "ancilla", "lowdepth"], default="exact"
    )
    sub.add_argument("--shots", type=int, default=0, help="0 means shotless")
    sub.add_argument("--stationarity-tol", type=float, default=1e-6)
    sub.add_argument(
        "--on-nonstationary",
        choices=["error", "warn"],
        default="error",
        help="shot noise swamps the guard; pass warn for sampled runs",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqederiv",
        description="Analytical energy derivatives for variational eigensolvers.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("optimize", help="find theta* at one x")
    _add_io(p)
    p.add_argument("--x", required=True, help="comma-separated components")
    p.set_defaults(func=cmd_optimize)

    p = subs.add_parser("derive", help="energy derivative bundle at one x")
    _add_io(p, theta=True)
    p.add_argument("--x", required=True)
    p.add_argument("--order", type=int, choices=[1, 2, 3], default=2)
    _add_backend(p)
    p.set_defaults(func=cmd_derive)

    p = subs.add_parser("pes", help="scan VQE energies plus Taylor curves")
    _add_io(p)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--order", type=int, choices=[2, 3], default=2)
    p.add_argument("--at", type=float, help="expansion point (default: --from)")
    p.add_argument("--workers", type=int, help="overrides VQEDERIV_WORKERS")
    p.add_argument("--stationarity-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_pes)
    p.set_defaults(out_required=True)

    p = subs.add_parser("euler", help="first-response continuation scan")
    _add_io(p, theta=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--reopt-every", type=int)
    p.set_defaults(func=cmd_euler)
    p.set_defaults(out_required=True)

    p = subs.add_parser("excited", help="deflation stack and level derivatives")
    _add_io(p)
    p.add_argument("--x", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--beta", type=float, help="penalty override")
    p.add_argument("--order", type=int, choices=[1, 2, 3], default=1)
    p.add_argument(
        "--drop-inner-products", choices=["true", "false"], default="true"
    )
    _add_backend(p)
    p.set_defaults(func=cmd_excited)

    p = subs.add_parser("validate", help="finite-difference cross-check")
    _add_io(p)
    p.add_argument("--x", required=True)
    p.add_argument("--order", type=int, choices=[1, 2, 3], default=2)
    p.add_argument("--fd-step", type=float, default=1e-3)
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("cost", help="circuit-run budget estimate")
    p.add_argument("--n-qubits", type=int, required=True)
    p.add_argument("--n-params", type=int, required=True)
    p.add_argument("--order", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--backend", choices=["ancilla", "lowdepth"], default="ancilla")
    p.add_argument("--fd-step", type=float, default=1e-3)
    p.add_argument("--x-dim", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--opt-tol", type=float, default=1e-10)
    p.add_argument("--opt-seeds", type=int, default=4)
    p.set_defaults(func=cmd_cost)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_required", False) and args.out is None:
        print("error: --out is required for CSV commands", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except NotImplementedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"guard failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - kept for operator sanity
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
