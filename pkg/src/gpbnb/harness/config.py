"""
JSON experiment configuration.

Example::

    {
      "domain": {"lower": [0.0], "upper": [1.0]},
      "kernel": {"family": "se", "lengthscales": [0.2], "signal_variance": 1.0},
      "objective": {"kind": "gp_draw"},
      "optimizer": {"name": "bnb"},
      "baselines": [{"name": "plain_ucb", "resample": false}],
      "alpha": 0.1,
      "budget": 400,
      "max_depth": 9,
      "replications": 5,
      "output": "runs/gp1d",
      "seed": 0
    }

Unknown keys are rejected.  Every problem found is reported at once as a
``(path, message)`` pair inside :class:`~gpbnb.errors.ConfigError`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError, GpBnbError
from ..kernels import KernelSpec
from ..lattice import BoxDomain

__all__ = ["ObjectiveSpec", "OptimizerSpec", "ExperimentConfig", "load_config", "parse_config"]

OPTIMIZERS = ("bnb", "plain_ucb", "lipschitz")
OBJECTIVES = ("gp_draw", "synthetic_peak")


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str
    x_M: tuple | None = None  # None draws a fresh maximizer per replication
    f_M: float = 1.0
    c1: float = 2.0
    c2: float = 1.0
    rho0: float = 0.1

    def to_dict(self):
        if self.kind == "gp_draw":
            return {"kind": self.kind}
        return {"kind": self.kind, "x_M": None if self.x_M is None else list(self.x_M),
                "f_M": self.f_M, "c1": self.c1, "c2": self.c2, "rho0": self.rho0}


@dataclass(frozen=True)
class OptimizerSpec:
    name: str
    resample: bool = False
    lipschitz_constant: float | None = None

    def to_dict(self):
        out = {"name": self.name}
        if self.name == "plain_ucb":
            out["resample"] = self.resample
        if self.name == "lipschitz":
            out["lipschitz_constant"] = self.lipschitz_constant
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    domain: BoxDomain
    kernel: KernelSpec
    objective: ObjectiveSpec
    optimizer: OptimizerSpec
    alpha: float
    budget: int
    max_depth: int
    replications: int
    output: str
    seed: int
    baselines: tuple = field(default_factory=tuple)
    jitter: float | None = None

    def to_dict(self):
        return {
            "domain": self.domain.to_dict(),
            "kernel": self.kernel.to_dict(),
            "objective": self.objective.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "baselines": [b.to_dict() for b in self.baselines],
            "alpha": self.alpha,
            "budget": self.budget,
            "max_depth": self.max_depth,
            "replications": self.replications,
            "output": self.output,
            "seed": self.seed,
            "jitter": self.jitter,
        }


class _Reader:
    """Collects problems instead of stopping at the first one."""

    def __init__(self):
        self.problems = []

    def fail(self, path, msg):
        self.problems.append((path, msg))

    def table(self, obj, path, required, optional=()):
        if not isinstance(obj, dict):
            self.fail(path, "expected an object")
            return None
        for key in obj:
            if key not in required and key not in optional:
                self.fail(f"{path}.{key}" if path else key, "unknown field")
        ok = True
        for key in required:
            if key not in obj:
                self.fail(f"{path}.{key}" if path else key, "missing required field")
                ok = False
        return obj if ok or not path else None

    def number(self, v, path, positive=False, lo=None, hi=None):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(path, "expected a finite number")
            return None
        v = float(v)
        if positive and v <= 0:
            self.fail(path, "must be positive")
            return None
        if lo is not None and not lo < v:
            self.fail(path, f"must exceed {lo}")
            return None
        if hi is not None and not v < hi:
            self.fail(path, f"must be below {hi}")
            return None
        return v

    def integer(self, v, path, minimum):
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, "expected an integer")
            return None
        if v < minimum:
            self.fail(path, f"must be at least {minimum}")
            return None
        return v

    def vector(self, v, path, dim=None):
        if not isinstance(v, list) or not v:
            self.fail(path, "expected a nonempty list of numbers")
            return None
        out = [self.number(x, f"{path}[{i}]") for i, x in enumerate(v)]
        if any(x is None for x in out):
            return None
        if dim is not None and len(out) != dim:
            self.fail(path, f"expected {dim} entries, got {len(out)}")
            return None
        return out


def _optimizer(r, obj, path):
    t = r.table(obj, path, ("name",), ("resample", "lipschitz_constant"))
    if t is None:
        return None
    name = t["name"]
    if name not in OPTIMIZERS:
        r.fail(f"{path}.name", f"must be one of {', '.join(OPTIMIZERS)}")
        return None
    if "resample" in t and name != "plain_ucb":
        r.fail(f"{path}.resample", "only valid for plain_ucb")
    if "lipschitz_constant" in t and name != "lipschitz":
        r.fail(f"{path}.lipschitz_constant", "only valid for lipschitz")
    resample = t.get("resample", False)
    if not isinstance(resample, bool):
        r.fail(f"{path}.resample", "expected true or false")
        resample = False
    L = None
    if name == "lipschitz":
        if "lipschitz_constant" not in t:
            r.fail(f"{path}.lipschitz_constant", "missing required field")
        else:
            L = r.number(t["lipschitz_constant"], f"{path}.lipschitz_constant", positive=True)
    return OptimizerSpec(name, resample, L)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a decoded JSON object."""
    r = _Reader()
    top = r.table(
        raw, "",
        ("domain", "kernel", "objective", "optimizer", "alpha", "budget", "max_depth",
         "replications", "output", "seed"),
        ("baselines", "jitter"),
    )
    if top is None:
        raise ConfigError(r.problems)

    domain = None
    d = r.table(top["domain"], "domain", ("lower", "upper")) if "domain" in top else None
    if d is not None:
        lo = r.vector(d["lower"], "domain.lower")
        hi = r.vector(d["upper"], "domain.upper", None if lo is None else len(lo))
        if lo is not None and hi is not None:
            try:
                domain = BoxDomain(lo, hi)
            except GpBnbError as exc:
                r.fail("domain", str(exc))
    dim = domain.dim if domain is not None else None

    kernel = None
    k = r.table(top["kernel"], "kernel", ("family", "lengthscales"), ("signal_variance", "nu")) if "kernel" in top else None
    if k is not None:
        ls = r.vector(k["lengthscales"], "kernel.lengthscales", dim)
        if ls is not None:
            try:
                kernel = KernelSpec(k["family"], ls, k.get("signal_variance", 1.0), k.get("nu"))
            except (GpBnbError, TypeError, ValueError) as exc:
                r.fail("kernel", str(exc))

    objective = None
    o = r.table(top["objective"], "objective", ("kind",), ("x_M", "f_M", "c1", "c2", "rho0")) if "objective" in top else None
    if o is not None:
        kind = o["kind"]
        if kind == "gp_draw":
            for key in ("x_M", "f_M", "c1", "c2", "rho0"):
                if key in o:
                    r.fail(f"objective.{key}", "only valid for synthetic_peak")
            objective = ObjectiveSpec(kind)
        elif kind == "synthetic_peak":
            x_M = o.get("x_M")
            if x_M is not None:
                x_M = r.vector(x_M, "objective.x_M", dim)
            vals = {key: r.number(o.get(key, default), f"objective.{key}", positive=(key != "f_M"))
                    for key, default in (("f_M", 1.0), ("c1", 2.0), ("c2", 1.0), ("rho0", 0.1))}
            if vals["c1"] is not None and vals["c2"] is not None and not vals["c2"] < vals["c1"]:
                r.fail("objective.c2", "must be below c1")
            if None not in vals.values():
                objective = ObjectiveSpec(kind, None if x_M is None else tuple(x_M), **vals)
        else:
            r.fail("objective.kind", f"must be one of {', '.join(OBJECTIVES)}")

    optimizer = _optimizer(r, top["optimizer"], "optimizer") if "optimizer" in top else None
    baselines = []
    raw_b = top.get("baselines", [])
    if not isinstance(raw_b, list):
        r.fail("baselines", "expected a list")
    else:
        for i, b in enumerate(raw_b):
            spec = _optimizer(r, b, f"baselines[{i}]")
            if spec is not None:
                baselines.append(spec)

    alpha = r.number(top["alpha"], "alpha", lo=0.0, hi=1.0) if "alpha" in top else None
    budget = r.integer(top["budget"], "budget", 1) if "budget" in top else None
    max_depth = r.integer(top["max_depth"], "max_depth", 0) if "max_depth" in top else None
    reps = r.integer(top["replications"], "replications", 1) if "replications" in top else None
    seed = r.integer(top["seed"], "seed", 0) if "seed" in top else None
    output = top.get("output", "")
    if "output" in top and (not isinstance(output, str) or not output):
        r.fail("output", "expected a nonempty path string")
    jitter = top.get("jitter")
    if jitter is not None:
        jitter = r.number(jitter, "jitter", positive=True)

    if max_depth is not None and dim is not None and (2 ** max_depth + 1) ** dim > 2 ** 22:
        r.fail("max_depth", "lattice too large")

    if r.problems:
        raise ConfigError(r.problems)
    return ExperimentConfig(
        domain, kernel, objective, optimizer, alpha, budget, max_depth, reps, output, seed,
        tuple(baselines), jitter,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read: {exc.strerror}")]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([(str(path), f"invalid JSON: {exc.msg} at line {exc.lineno}")]) from None
    return parse_config(raw)
