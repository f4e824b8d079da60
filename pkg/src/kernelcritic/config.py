"""JSON experiment configuration with the benchmark defaults embedded.

An empty document reproduces the regulation benchmark verbatim; any field
can be overridden section by section.  Unknown keys are rejected by name so
typos fail loudly instead of silently running the defaults.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import adp, excitation, sim, sysid
from .basis import ShrinkFunction, StaFBasis, simplex_offsets, triangle_offsets
from .errors import ValidationError

EXPERIMENTS = ("regulation", "tracking")

_GAIN_KEYS = ("eta_c1", "eta_c2", "eta_a1", "eta_a2", "beta", "nu", "num_extrap")
_BASIS_KEYS = ("scale", "eps0", "nu2", "mode")
_POLICY_KEYS = ("kind", "half_width_factor", "num_points", "resample_every_step")
_SIM_KEYS = ("dt", "duration", "integrator", "seed", "record_stride")
_SYSID_KEYS = ("k", "k_theta", "gamma_theta", "stack_capacity",
               "sg_window", "sg_order", "stack_every")
_INITIAL_KEYS = ("x0", "w_c0", "w_a0", "gamma0", "x_hat0", "theta0")
_TOP_KEYS = ("experiment", "gains", "basis", "policy", "sim", "sysid",
             "initial", "seeds", "out")

_SYSID_EXTRA_DEFAULTS = {"stack_capacity": 10, "sg_window": 11,
                         "sg_order": 5, "stack_every": 10}


@dataclass
class ExperimentSetup:
    """Fully resolved experiment: every object the simulator needs."""

    experiment: str
    gains: adp.AdpGains
    basis: StaFBasis
    policy: excitation.ExtrapolationPolicy
    sim: sim.SimConfig
    initial: dict
    seeds: list
    out: Optional[str] = None
    id_gains: Optional[sysid.SysIdGains] = None
    sysid_extras: dict = field(default_factory=dict)

    def run_one(self, seed):
        """Run the configured experiment with the given RNG seed."""
        cfg = sim.SimConfig(dt=self.sim.dt, duration=self.sim.duration,
                            integrator=self.sim.integrator, seed=seed,
                            record_stride=self.sim.record_stride)
        if self.experiment == "regulation":
            return sim.run_regulation(cfg, gains=self.gains, basis=self.basis,
                                      policy=self.policy, initial=self.initial)
        return sim.run_tracking(cfg, gains=self.gains, basis=self.basis,
                                policy=self.policy, id_gains=self.id_gains,
                                initial=self.initial, **self.sysid_extras)


def _check_keys(section, d, allowed):
    bad = [k for k in d if k not in allowed]
    if bad:
        raise ValidationError(
            [f"unknown key {k!r} in section {section!r}" for k in sorted(bad)])


def _as_matrix(value, size, name):
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        return float(a) * np.eye(size)
    if a.shape != (size, size):
        raise ValidationError([f"{name} must be a scalar or {size}x{size} matrix"])
    return a


def _defaults(experiment):
    if experiment == "regulation":
        gains, basis, policy, initial = sim.regulation_defaults()
        return gains, basis, policy, initial, None
    gains, basis, policy, id_gains, initial = sim.tracking_defaults()
    return gains, basis, policy, initial, id_gains


def from_dict(doc):
    """Build an ExperimentSetup from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ValidationError(["configuration document must be a JSON object"])
    _check_keys("<top level>", doc, _TOP_KEYS)
    experiment = doc.get("experiment", "regulation")
    if experiment not in EXPERIMENTS:
        raise ValidationError(
            [f"experiment must be one of {EXPERIMENTS} (got {experiment!r})"])

    d_gains, d_basis, d_policy, d_init, d_idg = _defaults(experiment)

    g = dict(doc.get("gains", {}))
    _check_keys("gains", g, _GAIN_KEYS)
    gains = adp.AdpGains(
        eta_c1=float(g.get("eta_c1", d_gains.eta_c1)),
        eta_c2=float(g.get("eta_c2", d_gains.eta_c2)),
        eta_a1=float(g.get("eta_a1", d_gains.eta_a1)),
        eta_a2=float(g.get("eta_a2", d_gains.eta_a2)),
        beta=float(g.get("beta", d_gains.beta)),
        nu=float(g.get("nu", d_gains.nu)),
        num_extrap=int(g.get("num_extrap", d_gains.num_extrap)),
    )

    b = dict(doc.get("basis", {}))
    _check_keys("basis", b, _BASIS_KEYS)
    try:
        shrink = ShrinkFunction(
            eps0=float(b.get("eps0", d_basis.shrink.eps0)),
            nu2=float(b.get("nu2", d_basis.shrink.nu2)),
            scale=float(b.get("scale", d_basis.shrink.scale)),
            mode=str(b.get("mode", d_basis.shrink.mode)),
        )
        offsets = triangle_offsets() if experiment == "regulation" else simplex_offsets(4)
        basis = StaFBasis(dimension=d_basis.dimension, num_kernels=d_basis.num_kernels,
                          offsets=offsets, shrink=shrink)
    except ValueError as err:
        raise ValidationError([f"basis: {err}"]) from None

    p = dict(doc.get("policy", {}))
    _check_keys("policy", p, _POLICY_KEYS)
    try:
        policy = excitation.ExtrapolationPolicy(
            kind=str(p.get("kind", d_policy.kind)),
            half_width_factor=float(p.get("half_width_factor", d_policy.half_width_factor)),
            num_points=int(p.get("num_points", d_policy.num_points)),
            resample_every_step=bool(p.get("resample_every_step", d_policy.resample_every_step)),
        )
    except ValueError as err:
        raise ValidationError([f"policy: {err}"]) from None

    s = dict(doc.get("sim", {}))
    _check_keys("sim", s, _SIM_KEYS)
    sim_cfg = sim.SimConfig(
        dt=float(s.get("dt", 1e-3)),
        duration=float(s.get("duration", 10.0 if experiment == "regulation" else 40.0)),
        integrator=str(s.get("integrator", "rk4")),
        seed=int(s.get("seed", 1)),
        record_stride=int(s.get("record_stride", 1)),
    )

    sy = dict(doc.get("sysid", {}))
    id_gains, extras = None, {}
    if experiment == "tracking":
        _check_keys("sysid", sy, _SYSID_KEYS)
        id_gains = sysid.SysIdGains(
            k=float(sy.get("k", d_idg.k)),
            k_theta=float(sy.get("k_theta", d_idg.k_theta)),
            gamma_theta=_as_matrix(sy.get("gamma_theta", d_idg.gamma_theta), 3,
                                   "sysid.gamma_theta"),
        )
        extras = {k: int(sy.get(k, v)) for k, v in _SYSID_EXTRA_DEFAULTS.items()}
    elif sy:
        raise ValidationError(["section 'sysid' applies only to the tracking experiment"])

    init_doc = dict(doc.get("initial", {}))
    _check_keys("initial", init_doc, _INITIAL_KEYS)
    initial = {}
    for key, default in d_init.items():
        if key in init_doc:
            val = init_doc[key]
            if key == "gamma0":
                val = _as_matrix(val, basis.num_kernels, "initial.gamma0")
            initial[key] = np.asarray(val, dtype=float)
        else:
            initial[key] = np.asarray(default, dtype=float)
        if initial[key].shape != np.asarray(default).shape:
            raise ValidationError(
                [f"initial.{key} has shape {initial[key].shape}, "
                 f"expected {np.asarray(default).shape}"])
    for key in init_doc:
        if key not in d_init:
            raise ValidationError(
                [f"initial.{key} does not apply to the {experiment} experiment"])

    seeds = doc.get("seeds", [sim_cfg.seed])
    if not isinstance(seeds, list) or not seeds or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in seeds):
        raise ValidationError(["seeds must be a non-empty list of integers"])

    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ValidationError(["out must be a string path"])

    return ExperimentSetup(experiment=experiment, gains=gains, basis=basis,
                           policy=policy, sim=sim_cfg, initial=initial,
                           seeds=list(seeds), out=out, id_gains=id_gains,
                           sysid_extras=extras)


def load_document(path=None):
    """Read a JSON config file into a plain dict; None or empty file -> {}."""
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read().strip()
    if not text:
        return {}
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError([f"config is not valid JSON: {err}"]) from None
    return doc


def load(path=None):
    """Read a JSON config file; None or an empty file maps to the defaults."""
    return from_dict(load_document(path))


def effective_dict(setup):
    """Fully resolved, JSON-serializable view of a setup.

    Feeding the result back through from_dict reproduces the setup, so runs
    are replayable from the serialized record alone.
    """
    doc = {
        "experiment": setup.experiment,
        "gains": {k: getattr(setup.gains, k) for k in _GAIN_KEYS},
        "basis": {
            "scale": setup.basis.shrink.scale,
            "eps0": setup.basis.shrink.eps0,
            "nu2": setup.basis.shrink.nu2,
            "mode": setup.basis.shrink.mode,
        },
        "policy": {
            "kind": setup.policy.kind,
            "half_width_factor": setup.policy.half_width_factor,
            "num_points": setup.policy.num_points,
            "resample_every_step": setup.policy.resample_every_step,
        },
        "sim": {
            "dt": setup.sim.dt,
            "duration": setup.sim.duration,
            "integrator": setup.sim.integrator,
            "seed": setup.sim.seed,
            "record_stride": setup.sim.record_stride,
        },
        "initial": {k: np.asarray(v).tolist() for k, v in setup.initial.items()},
        "seeds": list(setup.seeds),
    }
    if setup.out is not None:
        doc["out"] = setup.out
    if setup.experiment == "tracking":
        doc["sysid"] = {
            "k": setup.id_gains.k,
            "k_theta": setup.id_gains.k_theta,
            "gamma_theta": np.asarray(setup.id_gains.gamma_theta).tolist(),
            **setup.sysid_extras,
        }
    return doc


def parse_seed_list(text):
    """Parse a --seeds argument: '1..10' (inclusive range) or '1,4,9'."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ValidationError([f"bad seed range {text!r}"]) from None
        if hi_i < lo_i:
            raise ValidationError([f"empty seed range {text!r}"])
        return list(range(lo_i, hi_i + 1))
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError([f"bad seed list {text!r}"]) from None
