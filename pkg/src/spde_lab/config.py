"""Experiment configuration read from YAML."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import yaml

from .schemes import SchemeConfig, SchemeKind, Sode1dConfig
from .spectral_core import SemigroupKind, SpectralState


class ConfigError(ValueError):
    """The file is not valid YAML or has the wrong shape."""


class ConfigInvariantError(ValueError):
    """The file parses but violates a parameter invariant."""


class ExperimentKind(str, enum.Enum):
    SWEEP = "sweep"
    SIMULATE = "simulate"
    BOUNDS = "bounds"
    VALIDATE_OU = "validate-ou"
    VALIDATE_GAUSSIAN_BOUNDS = "validate-gaussian-bounds"
    VALIDATE_ABSTRACT_BOUND = "validate-abstract-bound"
    SODE1D_SWEEP = "sode1d-sweep"


_SCHEME_KEYS = {"a", "T", "nu", "chi", "eta", "xi", "semigroup_kind", "scheme", "noise_scale",
                "embedding_constant", "p_exponent", "s_exponent", "N"}
_SODE_KEYS = {"drift", "diffusion", "T", "xi0", "N"}
_TOP_KEYS = {"kind", "master_seed", "n_samples", "N_list", "p_list", "r_list", "output",
             "scheme", "sode1d", "semigroup_kinds", "schemes", "dump_trajectory"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    master_seed: int = 20240601
    n_samples: int = 1000
    N_list: tuple = (8,)
    p_list: tuple = (2.0,)
    r_list: tuple = (1.0, 2.0)
    output: str = "results"
    scheme: SchemeConfig | None = None
    sode1d: Sode1dConfig | None = None
    semigroup_kinds: tuple = ()
    schemes: tuple = ()
    dump_trajectory: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))
        object.__setattr__(self, "r_list", tuple(float(r) for r in self.r_list))
        object.__setattr__(self, "semigroup_kinds", tuple(SemigroupKind(k) for k in self.semigroup_kinds))
        object.__setattr__(self, "schemes", tuple(SchemeKind(k) for k in self.schemes))
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigInvariantError("master_seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if self.n_samples < 1:
            raise ConfigInvariantError("n_samples must be positive")
        if not self.N_list or any(n < 1 for n in self.N_list):
            raise ConfigInvariantError("N_list must hold positive integers")
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ConfigInvariantError("N_list must be strictly increasing")
        if any(p <= 0 for p in self.p_list) or any(r <= 0 for r in self.r_list):
            raise ConfigInvariantError("moment orders must be positive")
        if self.kind is ExperimentKind.SODE1D_SWEEP:
            if self.sode1d is None:
                raise ConfigInvariantError("sode1d-sweep needs an sode1d section")
        elif self.kind not in (ExperimentKind.VALIDATE_GAUSSIAN_BOUNDS,
                               ExperimentKind.VALIDATE_ABSTRACT_BOUND) and self.scheme is None:
            raise ConfigInvariantError(f"{self.kind.value} needs a scheme section")

    def with_seed(self, seed: int) -> ExperimentConfig:
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["master_seed"] = seed
        return ExperimentConfig(**kw)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value, "master_seed": self.master_seed,
            "n_samples": self.n_samples, "N_list": list(self.N_list),
            "p_list": list(self.p_list), "r_list": list(self.r_list), "output": self.output,
            "semigroup_kinds": [k.value for k in self.semigroup_kinds],
            "schemes": [k.value for k in self.schemes],
            "dump_trajectory": self.dump_trajectory,
        }
        if self.scheme is not None:
            s = self.scheme
            out["scheme"] = {
                "N": s.N, "a": list(s.a), "T": s.T, "nu": s.nu, "chi": s.chi, "eta": s.eta,
                "xi": None if s.xi is None else {int(k): v for k, v in s.xi.to_modes().items()},
                "semigroup_kind": s.semigroup_kind.value, "scheme": s.scheme.value,
                "noise_scale": s.noise_scale, "embedding_constant": s.embedding_constant,
                "p_exponent": s.p_exponent, "s_exponent": s.s_exponent,
            }
        if self.sode1d is not None:
            d = self.sode1d
            out["sode1d"] = {"N": d.N, "drift": list(d.drift), "diffusion": list(d.diffusion),
                             "T": d.T, "xi0": d.xi0}
        return out


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def from_dict(raw: dict) -> ExperimentConfig:
    _check_keys(raw, _TOP_KEYS, "config")
    if "kind" not in raw:
        raise ConfigError("config needs a 'kind'")
    try:
        ExperimentKind(raw["kind"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kw = dict(raw)
    N_list = kw.get("N_list") or [8]
    try:
        if kw.get("scheme") is not None:
            sec = dict(kw["scheme"])
            _check_keys(sec, _SCHEME_KEYS, "scheme")
            xi = sec.pop("xi", None)
            if xi is not None:
                sec["xi"] = SpectralState.from_modes({int(k): float(v) for k, v in xi.items()})
            sec.setdefault("N", N_list[0])
            kw["scheme"] = SchemeConfig(**sec)
        if kw.get("sode1d") is not None:
            sec = dict(kw["sode1d"])
            _check_keys(sec, _SODE_KEYS, "sode1d")
            sec.setdefault("N", N_list[0])
            kw["sode1d"] = Sode1dConfig(**sec)
        return ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, AttributeError) as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigInvariantError(str(exc)) from exc


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a YAML mapping")
    return from_dict(raw)
