"""Command-line experiment runner.

Subcommands: ``run`` executes a seed sweep and writes per-seed CSV
trajectories plus flat key=value summary and diagnostics records;
``report`` does the same and renders the standard figures next to the
CSVs; ``check`` validates a configuration and prints the guaranteed
gain-matrix bounds without running anything.

Exit codes: 0 success, 2 validation failure, 3 numeric-range abort.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import adp, config, dynamics, excitation, report, sim
from .basis import grad_sigma_at
from .errors import NumericRangeError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

# default output directory when neither --out nor the config names one
OUT_ENV = "KERNELCRITIC_OUT"

_PE_WINDOW_T = 1.0
_PROXY_STRIDE = 20


def _fmt(v):
    return "%.17g" % float(v)


def csv_header(traj):
    n_state = traj.states.shape[1]
    if traj.kind == "tracking":
        half = n_state // 2
        state_cols = [f"e{i + 1}" for i in range(half)]
        state_cols += [f"xd{i + 1}" for i in range(half)]
    else:
        state_cols = [f"x{i + 1}" for i in range(n_state)]
    cols = ["t"] + state_cols
    cols += [f"u{j + 1}" for j in range(traj.controls.shape[1])]
    cols += [f"Wc{i + 1}" for i in range(traj.w_critic.shape[1])]
    cols += [f"Wa{i + 1}" for i in range(traj.w_actor.shape[1])]
    cols += ["gamma_min", "gamma_max", "cost", "value_error"]
    if traj.theta is not None:
        p, n = traj.theta.shape[1], traj.theta.shape[2]
        cols += [f"theta{i + 1}{j + 1}" for i in range(p) for j in range(n)]
    return cols


def write_trajectory_csv(path, traj):
    """One row per recorded sample at 17 significant digits.

    The value_error cell is left empty when no analytic solution exists
    (the tracking experiment).
    """
    cols = csv_header(traj)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(len(traj.times)):
            row = [_fmt(traj.times[k])]
            row += [_fmt(v) for v in traj.states[k]]
            row += [_fmt(v) for v in traj.controls[k]]
            row += [_fmt(v) for v in traj.w_critic[k]]
            row += [_fmt(v) for v in traj.w_actor[k]]
            row += [_fmt(traj.gamma_min[k]), _fmt(traj.gamma_max[k]),
                    _fmt(traj.cost[k])]
            row.append("" if traj.value_error is None else _fmt(traj.value_error[k]))
            if traj.theta is not None:
                row += [_fmt(v) for v in traj.theta[k].ravel()]
            fh.write(",".join(row) + "\n")
    return Path(path)


def _experiment_pieces(setup):
    """The (system, cost) pair the Bellman regressors are evaluated on."""
    if setup.experiment == "regulation":
        system, cost, _ = dynamics.regulation_benchmark()
        return system, cost
    problem = dynamics.tracking_benchmark()
    n = problem.plant.n
    zeta_cost = dynamics.CostSpec(
        state_cost=lambda z: problem.error_cost.state_cost(z[:n]),
        control_weight=problem.error_cost.control_weight,
    )
    return dynamics.tracking_transform(problem), zeta_cost


def condition_proxies(setup, traj, stride=_PROXY_STRIDE):
    """Empirical sup-norms feeding the advisory gain inequalities.

    The unknowable ideal-weight factors are proxied by the recorded critic
    weights; with a symmetric policy-gradient matrix the two mixed-norm
    proxies coincide.
    """
    system, cost = _experiment_pieces(setup)
    g_sigma = g_w_sigma = w_norm = 0.0
    for k in range(0, len(traj.times), stride):
        x = traj.states[k]
        wc = traj.w_critic[k]
        grad = grad_sigma_at(setup.basis, x, x)
        gg = grad @ system.effectiveness(x)
        gs = gg @ cost.r_inv @ gg.T
        g_sigma = max(g_sigma, float(np.linalg.norm(gs, 2)))
        g_w_sigma = max(g_w_sigma, float(np.linalg.norm(gs @ wc)))
        w_norm = max(w_norm, float(np.linalg.norm(wc)))
    return {"g_sigma": g_sigma, "g_w_sigma": g_w_sigma,
            "w_g_sigma": g_w_sigma, "w": w_norm}


def seed_diagnostics(setup, traj):
    """Excitation estimates, gain-matrix bounds, and the advisory report
    for one completed trajectory."""
    duration = float(traj.times[-1]) if len(traj.times) else 0.0
    window = min(_PE_WINDOW_T, duration)
    if window > 0 and len(traj.times) >= 2:
        pe = excitation.pe_windows(traj.omega_norm, traj.extrap_norm,
                                   window, traj.dt_sample)
    else:
        pe = excitation.PeEstimate(0.0, 0.0, 0.0, _PE_WINDOW_T)
    eigs0 = np.linalg.eigvalsh(np.asarray(setup.initial["gamma0"], dtype=float))
    lower, upper = adp.gamma_bounds(setup.gains, eigs0[0], eigs0[-1], pe,
                                    pe.window_T)
    proxies = condition_proxies(setup, traj)
    c_min = (excitation.min_effective_eig(setup.gains, upper, pe.c2_hat)
             if setup.gains.eta_c2 > 0 else 0.0)
    advisory = excitation.sufficient_condition_report(setup.gains, proxies,
                                                      c_min, lower)
    out = {
        "pe_c1_hat": pe.c1_hat,
        "pe_c2_hat": pe.c2_hat,
        "pe_c3_hat": pe.c3_hat,
        "pe_window_T": pe.window_T,
        "pe_assumption_satisfied": pe.assumption_satisfied(),
        "gamma_lower_bound": lower,
        "gamma_upper_bound": upper,
        "gamma_min_observed": float(np.min(traj.gamma_min)),
        "gamma_max_observed": float(np.max(traj.gamma_max)),
        "clip_events": traj.clip_events,
    }
    for k, v in proxies.items():
        out[f"proxy_{k}"] = v
    out.update(advisory)
    return out


def _record_lines(record):
    for key, val in record.items():
        if isinstance(val, bool):
            yield f"{key}={'true' if val else 'false'}"
        elif isinstance(val, float):
            yield f"{key}={_fmt(val)}"
        else:
            yield f"{key}={val}"


def write_summary(path, setup, rows, failure=None):
    """Flat key=value metrics record; names follow the benchmark tables
    (total cost, steady-state RMS error)."""
    lines = [
        f"experiment={setup.experiment}",
        f"integrator={setup.sim.integrator}",
        f"dt={_fmt(setup.sim.dt)}",
        f"duration={_fmt(setup.sim.duration)}",
        f"seeds={','.join(str(r['seed']) for r in rows)}",
        f"num_seeds={len(rows)}",
    ]
    for r in rows:
        for key in ("total_cost", "steady_state_rms_error", "final_state_norm",
                    "wall_time"):
            lines.append(f"seed_{r['seed']}_{key}={_fmt(r[key])}")
    if rows:
        for key in ("total_cost", "steady_state_rms_error"):
            vals = np.array([r[key] for r in rows], dtype=float)
            lines.append(f"{key}_mean={_fmt(vals.mean())}")
            lines.append(f"{key}_stddev={_fmt(vals.std())}")
    if failure is not None:
        lines.append(f"failed_seed={failure['seed']}")
        lines.append(f"failed_t={_fmt(failure['t_fail'])}")
        lines.append(f"failed_reason={failure['reason']}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def write_diagnostics(path, entries):
    lines = []
    for entry in entries:
        seed = entry["seed"]
        for line in _record_lines({k: v for k, v in entry.items() if k != "seed"}):
            lines.append(f"seed_{seed}_{line}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def execute(setup, out_dir, figures=False):
    """Run the sweep, write all artifacts, return the process exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    effective = config.effective_dict(setup)
    (out / "config_effective.json").write_text(
        json.dumps(effective, indent=2) + "\n", encoding="utf-8")
    rows, diags, failure = [], [], None
    code = EXIT_OK
    for seed in setup.seeds:
        stem = f"{setup.experiment}_seed{seed}"
        try:
            traj = setup.run_one(seed)
        except NumericRangeError as err:
            failure = {"seed": seed, "t_fail": err.t_fail or 0.0,
                       "reason": str(err)}
            code = EXIT_NUMERIC
            if err.trajectory is not None and len(err.trajectory.times):
                write_trajectory_csv(out / f"{stem}.csv", err.trajectory)
                if figures:
                    report.render_figures(out, stem, err.trajectory)
            print(f"seed {seed}: numeric range failure at t={err.t_fail}: {err}",
                  file=sys.stderr)
            break
        write_trajectory_csv(out / f"{stem}.csv", traj)
        if figures:
            report.render_figures(out, stem, traj)
        m = sim.metrics(traj)
        m["seed"] = seed
        rows.append(m)
        diag = seed_diagnostics(setup, traj)
        diag["seed"] = seed
        diags.append(diag)
        print(f"seed {seed}: total_cost={m['total_cost']:.6g} "
              f"steady_state_rms_error={m['steady_state_rms_error']:.6g} "
              f"wall={m['wall_time']:.2f}s")
    write_summary(out / "summary.txt", setup, rows, failure)
    write_diagnostics(out / "diagnostics.txt", diags)
    print(f"artifacts written to {out}")
    return code


def check(setup):
    """Validate without running; print the guaranteed gain-matrix bounds
    and a placeholder excitation report."""
    bad = setup.gains.validate() + setup.sim.validate()
    if setup.id_gains is not None:
        bad += setup.id_gains.validate()
    eigs0 = np.linalg.eigvalsh(np.asarray(setup.initial["gamma0"], dtype=float))
    if eigs0[0] <= 0:
        bad.append("initial.gamma0 must be positive definite")
    if bad:
        raise ValidationError(bad)
    pe = excitation.PeEstimate(0.0, 0.0, 0.0, _PE_WINDOW_T)
    lower, upper = adp.gamma_bounds(setup.gains, eigs0[0], eigs0[-1], pe,
                                    pe.window_T)
    record = {
        "valid": True,
        "experiment": setup.experiment,
        "num_kernels": setup.basis.num_kernels,
        "num_extrap": setup.gains.num_extrap,
        "gamma_lower_bound": lower,
        "gamma_upper_bound_no_pe": upper,
        "pe_c1_hat": 0.0,
        "pe_c2_hat": 0.0,
        "pe_c3_hat": 0.0,
        "pe_window_T": pe.window_T,
        "pe_assumption_satisfied": False,
        "pe_note": "placeholder; run the experiment to measure excitation",
    }
    for line in _record_lines(record):
        print(line)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="kernelcritic",
        description="Online actor-critic optimal control benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("run", "run a seed sweep and write CSV/summary/diagnostics"),
            ("report", "run a seed sweep and also render figures"),
            ("check", "validate a configuration without running")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("experiment", nargs="?", choices=config.EXPERIMENTS,
                       help="experiment name; defaults to the config file's")
        p.add_argument("--config", help="JSON configuration file")
        if name != "check":
            p.add_argument("--seeds",
                           help="seed list: '1..10' or comma-separated '1,4,9'")
            p.add_argument("--out", help="output directory "
                           f"(default: config, then ${OUT_ENV}, then ./out)")
            p.add_argument("--duration", type=float, help="simulated seconds")
            p.add_argument("--dt", type=float, help="integrator step seconds")
    return parser


def _setup_from_args(args):
    doc = config.load_document(args.config)
    if not isinstance(doc, dict):
        raise ValidationError(["configuration document must be a JSON object"])
    if args.experiment:
        doc["experiment"] = args.experiment
    if getattr(args, "duration", None) is not None or getattr(args, "dt", None) is not None:
        section = dict(doc.get("sim", {}))
        if args.duration is not None:
            section["duration"] = args.duration
        if args.dt is not None:
            section["dt"] = args.dt
        doc["sim"] = section
    if getattr(args, "seeds", None):
        doc["seeds"] = config.parse_seed_list(args.seeds)
    if getattr(args, "out", None):
        doc["out"] = args.out
    elif not doc.get("out"):
        doc["out"] = os.environ.get(OUT_ENV) or "out"
    return config.from_dict(doc)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        setup = _setup_from_args(args)
        if args.command == "check":
            return check(setup)
        return execute(setup, setup.out, figures=args.command == "report")
    except ValidationError as err:
        for v in err.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericRangeError as err:
        print(f"numeric range failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
