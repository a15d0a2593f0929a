"""Run configuration: one YAML document with every default spelled out."""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .descent import DescentOptions
from .discretization import GridSpec
from .errors import ValidationError
from .fibering import Exponents


@dataclass(frozen=True)
class Tolerances:
    tol_root: float = 1e-12
    tol_opt: float = 1e-8
    tol_residual: float = 1e-5
    tol_energy: float = 1e-6

    def __post_init__(self):
        for name in ("tol_root", "tol_opt", "tol_residual", "tol_energy"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ValidationError(f"{name} must be a positive number, got {v!r}")


@dataclass(frozen=True)
class RunConfig:
    exponents: Exponents = field(default_factory=lambda: Exponents(1.5, 1.75, 3.0))
    grid: GridSpec = field(default_factory=lambda: GridSpec.interval(256))
    tolerances: Tolerances = field(default_factory=Tolerances)
    initial_step: float = 1.0
    max_iter: int = 10000
    seed: int = 42

    def __post_init__(self):
        if self.exponents.dim != self.grid.dim:
            raise ValidationError(
                f"exponent dim {self.exponents.dim} does not match grid dim {self.grid.dim}")
        if not self.initial_step > 0:
            raise ValidationError(f"initial_step must be positive, got {self.initial_step}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError(f"max_iter must be a positive integer, got {self.max_iter}")

    def descent_options(self) -> DescentOptions:
        return DescentOptions(initial_step=self.initial_step, max_iter=int(self.max_iter),
                              tol_opt=self.tolerances.tol_opt)

    def to_dict(self) -> dict:
        ex, g, t = self.exponents, self.grid, self.tolerances
        return {
            "exponents": {"q": ex.q, "alpha": ex.alpha, "gamma": ex.gamma},
            "grid": {"dim": g.dim, "lengths": list(g.lengths), "n": list(g.n)},
            "tolerances": {"tol_root": t.tol_root, "tol_opt": t.tol_opt,
                           "tol_residual": t.tol_residual, "tol_energy": t.tol_energy},
            "descent": {"initial_step": self.initial_step, "max_iter": int(self.max_iter)},
            "seed": self.seed,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data or {})
        unknown = set(data) - {"exponents", "grid", "tolerances", "descent", "seed"}
        if unknown:
            raise ValidationError(f"unknown config sections: {sorted(unknown)}")
        base = cls().to_dict()
        merged = {k: ({**base[k], **(data.get(k) or {})} if isinstance(base[k], dict) else data.get(k, base[k]))
                  for k in base}
        e, g = merged["exponents"], merged["grid"]
        try:
            return cls(
                exponents=Exponents(float(e["q"]), float(e["alpha"]), float(e["gamma"]), int(g["dim"])),
                grid=GridSpec(int(g["dim"]), g["lengths"], g["n"]),
                tolerances=Tolerances(**{k: float(v) for k, v in merged["tolerances"].items()}),
                initial_step=float(merged["descent"]["initial_step"]),
                max_iter=int(merged["descent"]["max_iter"]),
                seed=int(merged["seed"]),
            )
        except (TypeError, KeyError) as exc:
            raise ValidationError(f"malformed config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                data = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ValidationError(f"cannot parse config {path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ValidationError(f"config {path} must be a mapping")
        return cls.from_dict(data)
