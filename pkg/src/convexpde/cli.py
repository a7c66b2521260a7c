"""Experiment driver.

    convexpde <subcommand> [task] --config FILE [--out DIR] [--seed N]

Subcommands: ot, iso, scl, euler, abi.  Every run writes its artifacts
plus a manifest.json echoing the config, library versions, the numeric
tolerances used, wall time and the name of any violated invariant.
Exit codes: 0 success, 1 configuration/input error, 2 invariant
violation.  All randomness flows from the single seed via spawned
generator streams, and numeric CSV output is byte-deterministic.
One experiment per process; internal thread counts follow the standard
environment variables (OMP_NUM_THREADS / NUMBA_NUM_THREADS).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, born_infeld, fluxes, godunov, isoperimetry, lifted, transport
from .config import ConfigError, ExperimentConfig, InvariantViolation, build_config, parse_flat_file
from .euler import (
    maximizer_margin,
    random_zero_mean_perturbations,
    rigid_rotation_solution,
    smallness_check,
)


def _rng_streams(seed, n):
    seqs = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(s) for s in seqs]


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# subcommand runners: each returns (outputs, tolerances, violation | None)
# ---------------------------------------------------------------------------


def _measure_from_param(text, rng):
    toks = text.split()
    if toks[0] == "random":
        if len(toks) != 3:
            raise ConfigError("random measure needs: random <n_atoms> <dim>")
        n, d = int(toks[1]), int(toks[2])
        pts = rng.normal(size=(n, d))
        return transport.DiscreteMeasure(pts, np.full(n, 1.0 / n))
    return transport.read_measure_csv(text)


def _run_ot(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    if p["task"] != "solve":
        raise ConfigError(f"unknown ot task {p['task']!r}")
    rng_a, rng_b, rng_cyc = _rng_streams(cfg.seed, 3)
    alpha = _measure_from_param(p["source"], rng_a)
    beta = _measure_from_param(p["target"], rng_b)
    plan, pot = transport.solve_discrete_ot(alpha, beta)

    transport.write_measure_csv(out / "source.csv", alpha)
    transport.write_measure_csv(out / "target.csv", beta)
    transport.write_plan_csv(out / "plan.csv", plan)
    transport.write_potentials_csv(out / "potentials.csv", pot)

    tol = {
        "marginal_tolerance": p["marginal_tolerance"],
        "gap_tolerance": p["gap_tolerance"],
        "cycle_tolerance": 1e-10,
    }
    violation = None
    if max(plan.marginal_residuals()) > p["marginal_tolerance"]:
        violation = "transport plan marginals"
    gap = transport.evaluate_J(pot, alpha, beta) - plan.inner_product_value()
    if violation is None and abs(gap) > p["gap_tolerance"] * max(
        1.0, abs(plan.inner_product_value())
    ):
        violation = "duality gap"
    if violation is None:
        bad = transport.cyclical_monotonicity_violations(
            plan, n_cycles=p["cycles"], rng=rng_cyc
        )
        if bad:
            violation = "cyclical monotonicity"
    extra = {
        "plan_value": plan.inner_product_value(),
        "duality_gap": gap,
        "quadratic_cost": plan.quadratic_cost(),
    }
    return ["source.csv", "target.csv", "plan.csv", "potentials.csv"], tol, violation, extra


def _run_iso(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    domain = isoperimetry.domain_from_spec(p["shape"], p["resolution"])
    lhs, rhs, margin = isoperimetry.isoperimetric_bound(domain)
    tol = {"margin_floor": -3.0 * domain.boundary_length * domain.cell_size}
    violation = None
    report = {
        "shape": p["shape"],
        "resolution": p["resolution"],
        "lhs": lhs,
        "rhs": rhs,
        "margin": margin,
        "volume": domain.volume,
        "boundary_length": domain.boundary_length,
        "cell_size": domain.cell_size,
    }
    if p["task"] == "chain":
        chain = isoperimetry.gromov_chain_check(domain, p["resolution"])
        report["chain"] = json.loads(chain.to_json())
        tol["chain_tolerance"] = chain.chain_tolerance
        if not chain.chain_holds:
            violation = "transport chain inequality"
    elif p["task"] != "bound":
        raise ConfigError(f"unknown iso task {p['task']!r}")
    if violation is None and margin < tol["margin_floor"]:
        violation = "isoperimetric bound margin"
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2))
    return ["report.json"], tol, violation, {"margin": margin}


def _initial_builder(text, rng):
    """Initial-data factory so refinement ladders reuse one realization."""
    toks = text.split()
    if toks[0] == "riemann":
        u_left, u_right, x_jump = float(toks[1]), float(toks[2]), float(toks[3])

        def build(n):
            x = (np.arange(n) + 0.5) / n
            return lifted.CellAverages(np.where(x < x_jump, u_left, u_right))

    elif toks[0] == "sine":
        modes, amp = int(toks[1]), float(toks[2])

        def build(n):
            x = (np.arange(n) + 0.5) / n
            return lifted.CellAverages(np.clip(0.5 + amp * np.sin(2 * np.pi * modes * x), 0.0, 1.0))

    elif toks[0] == "random":
        coef = rng.standard_normal(3)

        def build(n):
            x = (np.arange(n) + 0.5) / n
            f = 0.5 + 0.4 * coef @ np.array(
                [np.sin(2 * np.pi * x), np.sin(4 * np.pi * x), np.cos(2 * np.pi * x)]
            )
            return lifted.CellAverages(np.clip(f, 0.0, 1.0))

    else:
        arr = np.genfromtxt(text, delimiter=",")
        arr = arr[:, -1] if arr.ndim == 2 else arr

        def build(n):
            if n != len(arr):
                raise ConfigError(f"CSV initial data has {len(arr)} cells, config wants {n}")
            return lifted.CellAverages(arr)

    return build


def _run_scl(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    flux = fluxes.flux_from_spec(p["flux"])
    (rng_init,) = _rng_streams(cfg.seed, 1)
    outputs = []
    tol = {"level_mass_tolerance": p["level_mass_tolerance"]}
    violation = None

    if p["task"] == "evolve":
        u0 = _initial_builder(p["initial"], rng_init)(p["cells"])
        h = 1.0 / p["cells"]
        dt = p["dt_factor"] * h / max(flux.lipschitz_bound, 1e-12)
        every = p["snapshot_every"]
        n_steps = max(1, int(np.ceil(p["T"] / dt - 1e-12)))
        snaps = []
        level_mass = []
        Y = lifted.lift(u0, p["n_levels"])
        level_mass.append(Y.values.sum() / (p["cells"] * p["n_levels"]))
        snaps.append((0.0, lifted.reconstruct(Y)))
        step = p["T"] / n_steps
        for k in range(n_steps):
            Y = lifted.monotone_project(lifted.transport_step(Y, step, flux))
            level_mass.append(Y.values.sum() / (p["cells"] * p["n_levels"]))
            if (every and (k + 1) % every == 0) or k == n_steps - 1:
                snaps.append(((k + 1) * step, lifted.reconstruct(Y)))
        x = (np.arange(p["cells"]) + 0.5) / p["cells"]
        for idx, (t, u) in enumerate(snaps):
            name = f"snapshot_{idx:04d}.csv"
            _write_csv(out / name, "x,u", zip(x, u.values))
            outputs.append(name)
        drift = float(np.abs(np.array(level_mass) - level_mass[0]).max())
        if drift > p["level_mass_tolerance"]:
            violation = "level-field mass conservation"
        if violation is None and (
            np.any(snaps[-1][1].values < -1e-14) or np.any(snaps[-1][1].values > 1 + 1e-14)
        ):
            violation = "solution range [0,1]"
        extra = {
            "snapshots": [t for t, _ in snaps],
            "dt": step,
            "n_levels": p["n_levels"],
            "cells": p["cells"],
            "level_mass_drift": drift,
        }
    elif p["task"] == "compare":
        rows = []
        build = _initial_builder(p["initial"], rng_init)
        cells, n_levels = p["cells"], p["n_levels"]
        for _ in range(p["refinements"]):
            u0 = build(cells)
            h = 1.0 / cells
            dt = p["dt_factor"] * h / max(flux.lipschitz_bound, 1e-12)
            approx = lifted.evolve(u0, flux, p["T"], dt, n_levels)
            oracle = godunov.godunov_solve(u0, flux, p["T"])
            rows.append((h, n_levels, godunov.l1_distance(approx, oracle)))
            cells *= 2
            n_levels *= 2
        _write_csv(out / "refinement.csv", "cell_width,n_a,l1_gap", rows)
        outputs.append("refinement.csv")
        gaps = [r[2] for r in rows]
        if any(b > a * 1.05 for a, b in zip(gaps, gaps[1:])):
            violation = "refinement gap monotonicity"
        extra = {"l1_gaps": gaps}
    else:
        raise ConfigError(f"unknown scl task {p['task']!r}")
    return outputs, tol, violation, extra


def _run_euler(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    if p["task"] != "maximizer":
        raise ConfigError(f"unknown euler task {p['task']!r}")
    endpoints, pressure = rigid_rotation_solution(
        p["omega"],
        p["t0"],
        p["t1"],
        n_nodes=p["grid_nodes"],
        n_times=p["n_times"],
        n_samples=p["endpoints"],
    )
    ok, margin_small = smallness_check(pressure)
    tol = {"margin_floor": -1e-3, "eps_disc_ceiling": 1e-3, "gtol": 1e-8}
    report = {
        "omega": p["omega"],
        "interval": [p["t0"], p["t1"]],
        "smallness_ok": bool(ok),
        "smallness_margin": margin_small,
    }
    violation = None
    if not ok:
        report["skipped"] = True
        report["diagnostic"] = (
            "smallness condition (t1-t0)^2 max-eig D^2 p <= pi^2 fails "
            f"(margin {margin_small:.6f}); maximizer test not applicable"
        )
    else:
        report["skipped"] = False
        (rng_pert,) = _rng_streams(cfg.seed, 1)
        perts = random_zero_mean_perturbations(
            pressure, p["perturbations"], p["amplitude"], rng_pert
        )
        rep = maximizer_margin(pressure, perts, endpoints, n_seg=p["n_seg"])
        report.update(
            {
                "margin": rep.margin,
                "eps_disc": rep.eps_disc,
                "value_at_p": rep.value_at_p,
                "perturbed_values": rep.perturbed_values,
                "n_seg": rep.n_seg,
            }
        )
        if rep.margin < -max(rep.eps_disc, tol["margin_floor"] * -1.0):
            violation = "pressure maximality margin"
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2))
    return ["report.json"], tol, violation, {"smallness_margin": margin_small}


def _run_abi(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    if p["task"] != "evolve":
        raise ConfigError(f"unknown abi task {p['task']!r}")
    field = born_infeld.profile_from_spec(p["profile"], p["cells"])
    sums0 = field.component_sums()
    entropy = [field.total_entropy()]
    manifold = [born_infeld.manifold_residual(field)]
    hull_max = [float(born_infeld.hull_residuals(field).max())]
    drift = [0.0]
    every = p["snapshot_every"]
    outputs = []

    def dump(idx, t, fld):
        name = f"snapshot_{idx:04d}.csv"
        rows = np.concatenate([fld.x[:, None], fld.conserved()], axis=1)
        _write_csv(
            out / name,
            "x,h,q1,q2,q3,d1,d2,d3,b1,b2,b3",
            rows,
        )
        outputs.append(name)

    dump(0, 0.0, field)
    idx = 1
    last = field
    times = [0.0]
    for step_idx, (t, fld) in enumerate(
        born_infeld.evolve(field, p["T"], cfl=p["cfl"])
    ):
        if step_idx == 0:
            continue
        entropy.append(fld.total_entropy())
        manifold.append(born_infeld.manifold_residual(fld))
        hull_max.append(float(born_infeld.hull_residuals(fld).max()))
        sums = fld.component_sums()
        drift.append(float(np.max(np.abs(sums - sums0) / np.maximum(np.abs(sums0), 1.0))))
        times.append(t)
        if every and step_idx % every == 0:
            dump(idx, t, fld)
            idx += 1
        last = fld
    dump(idx, times[-1], last)

    tol = {
        "conservation_tolerance": p["conservation_tolerance"],
        "entropy_tolerance": p["entropy_tolerance"],
        "wave_speed_margin": born_infeld.WAVE_SPEED_MARGIN,
    }
    violation = None
    if max(drift) > p["conservation_tolerance"]:
        violation = "conserved component sums"
    ent = np.array(entropy)
    if violation is None and len(ent) > 1 and float(np.max(ent[1:] - ent[:-1])) > p[
        "entropy_tolerance"
    ]:
        violation = "entropy monotonicity"
    extra = {
        "times": times,
        "entropy": entropy,
        "manifold_residual": manifold,
        "hull_residual_max": hull_max,
        "conservation_drift": drift,
    }
    return outputs, tol, violation, extra


_RUNNERS = {
    "ot": _run_ot,
    "iso": _run_iso,
    "scl": _run_scl,
    "euler": _run_euler,
    "abi": _run_abi,
}


def run_experiment(cfg: ExperimentConfig):
    """Execute the configured pipeline; writes artifacts plus manifest.json
    and raises InvariantViolation (after writing the manifest) when a
    post-run check fails."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    outputs, tolerances, violation, extra = _RUNNERS[cfg.subcommand](cfg, out)
    manifest = {
        "subcommand": cfg.subcommand,
        "config": cfg.raw,
        "seed": cfg.seed,
        "parameters": cfg.parameters,
        "versions": {"convexpde": __version__, "numpy": np.__version__},
        "tolerances": tolerances,
        "outputs": outputs,
        "invariant_violation": violation,
        "results": extra,
        "wall_time_s": time.perf_counter() - start,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
    if violation is not None:
        raise InvariantViolation(violation)
    return [str(out / name) for name in outputs + ["manifest.json"]]


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="convexpde",
        description="Convex-reformulation experiments for four nonlinear PDE problems",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("task", nargs="?", default=None,
                        help="pipeline verb; may also come from the config")
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
    return parser.parse_args(argv)


def main(argv=None):
    try:
        args = _parse_args(argv)
        raw = parse_flat_file(args.config)
        if args.task is not None:
            if "task" in raw and raw["task"] != args.task:
                raise ConfigError(
                    f"task {args.task!r} on the command line conflicts with "
                    f"task {raw['task']!r} in the config"
                )
            raw["task"] = args.task
        out_dir = args.out if args.out is not None else "."
        cfg = build_config(args.subcommand, raw, out_dir, seed_override=args.seed)
        run_experiment(cfg)
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver failures etc. are input-level errors here
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
