"""Experiment configuration: TOML schema, validation, overrides and hashing.

Layout (``schema = 1``)::

    schema = 1

    [population]
    n = 10000
    steps = 100

    [affinity]
    offdiag = { family = "gaussian", mu = 0.0, sigma = 1.0 }
    diag = { family = "gaussian", mu = 0.0, sigma = 1.0 }   # optional

    [policy]
    kind = "fixed"            # none | fixed | heterogeneous | adaptive
    lambda = [1.0, "none"]    # "none" means no marriage
    sigma_lambda = 0.0

    [partitions]              # optional
    sizes = [5000, 5000]
    cross_only = true

    [run]
    seeds = [0, 1, 2]
    n_max = 4
    output_dir = "results"
    analytic = false
    analytic_steps = 4
    workers = 1
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field

from .errors import ConfigError, MatchMarketError
from .matcher import MarriagePolicy, PartitionSpec, PolicyKind
from .model import DistributionSpec, Family

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = 1
NO_MARRIAGE = "none"


def parse_lambda(value, where="policy.lambda"):
    """``"none"`` (or ``inf``) means no marriage."""
    if isinstance(value, str):
        if value.strip().lower() in (NO_MARRIAGE, "inf", "infinity"):
            return math.inf
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{where}: expected a number or \"none\", got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number or \"none\", got {value!r}")
    value = float(value)
    if math.isnan(value) or value == -math.inf:
        raise ConfigError(f"{where}: invalid threshold {value}")
    return value


def format_lambda(lam):
    return NO_MARRIAGE if lam == math.inf else f"{lam:.12g}"


def parse_spec(value, where):
    """A dict ``{family, mu, sigma}`` (or ``value`` for point masses), or the
    compact string ``"gaussian:0:1"``."""
    if isinstance(value, DistributionSpec):
        return value
    if isinstance(value, str):
        parts = value.split(":")
        value = {"family": parts[0]}
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError(f"{where}: bad distribution string") from None
        if value["family"] == Family.POINT_MASS.value:
            value["value"] = nums[0] if nums else 0.0
        else:
            value.update(zip(("mu", "sigma"), nums))
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a table or \"family:mu:sigma\"")
    fam = value.get("family")
    try:
        fam = Family(fam)
    except ValueError:
        raise ConfigError(f"{where}.family: unknown family {fam!r}") from None
    try:
        if fam is Family.POINT_MASS:
            return DistributionSpec.point_mass(float(value.get("value", value.get("mu", 0.0))))
        return DistributionSpec(fam, float(value.get("mu", 0.0)), float(value.get("sigma", 1.0)))
    except (TypeError, MatchMarketError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _spec_dict(spec):
    if spec.family is Family.POINT_MASS:
        return {"family": spec.family.value, "value": spec.mu}
    return {"family": spec.family.value, "mu": spec.mu, "sigma": spec.sigma}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 1000
    steps: int = 100
    offdiag: DistributionSpec = field(default_factory=DistributionSpec.gaussian)
    diag: DistributionSpec | None = None
    policy: str = "fixed"
    lambdas: tuple = (math.inf,)
    sigma_lambda: float = 0.0
    partition_sizes: tuple | None = None
    cross_only: bool = True
    seeds: tuple = (0,)
    n_max: int = 4
    output_dir: str = "results"
    analytic: bool = False
    analytic_steps: int = 4
    workers: int = 1
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    @property
    def diag_spec(self):
        return self.offdiag if self.diag is None else self.diag

    def validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        need(self.schema == SCHEMA_VERSION, "schema", f"unsupported version {self.schema}")
        need(isinstance(self.n, int) and self.n >= 2, "population.n", "need an integer >= 2")
        need(isinstance(self.steps, int) and self.steps >= 1, "population.steps", "need an integer >= 1")
        need(isinstance(self.offdiag, DistributionSpec), "affinity.offdiag", "not a distribution")
        need(self.diag is None or isinstance(self.diag, DistributionSpec), "affinity.diag",
             "not a distribution")
        try:
            PolicyKind(self.policy)
        except ValueError:
            raise ConfigError(f"policy.kind: unknown policy {self.policy!r}") from None
        need(len(self.lambdas) >= 1, "policy.lambda", "need at least one value")
        for lam in self.lambdas:
            parse_lambda(lam)
        need(self.sigma_lambda >= 0, "policy.sigma_lambda", "must be >= 0")
        if self.partition_sizes is not None:
            need(sum(self.partition_sizes) == self.n, "partitions.sizes",
                 f"sizes sum to {sum(self.partition_sizes)}, population is {self.n}")
            need(all(s > 0 for s in self.partition_sizes), "partitions.sizes", "sizes must be > 0")
            need(not self.cross_only or len(self.partition_sizes) == 2, "partitions.sizes",
                 "cross-only pairing needs exactly two groups")
        need(len(self.seeds) >= 1, "run.seeds", "need at least one seed")
        need(all(isinstance(s, int) and s >= 0 for s in self.seeds), "run.seeds",
             "seeds must be non-negative integers")
        need(len(set(self.seeds)) == len(self.seeds), "run.seeds", "duplicate seeds")
        need(isinstance(self.n_max, int) and self.n_max >= 4, "run.n_max", "need an integer >= 4")
        need(isinstance(self.analytic_steps, int) and self.analytic_steps >= 1,
             "run.analytic_steps", "need an integer >= 1")
        need(isinstance(self.workers, int) and self.workers >= 1, "run.workers", "need >= 1")

    def policies(self):
        """``(label, MarriagePolicy)`` for every sweep threshold."""
        kind = PolicyKind(self.policy)
        if kind is PolicyKind.ADAPTIVE:
            return [("adaptive", MarriagePolicy.adaptive())]
        out = []
        for lam in self.lambdas:
            lam = parse_lambda(lam)
            if kind is PolicyKind.NONE or lam == math.inf:
                pol = MarriagePolicy.none()
            elif kind is PolicyKind.HETEROGENEOUS:
                pol = MarriagePolicy.heterogeneous(lam, self.sigma_lambda)
            else:
                pol = MarriagePolicy.fixed(lam)
            out.append((format_lambda(lam), pol))
        return out

    def partitions(self):
        if self.partition_sizes is None:
            return None
        return PartitionSpec.sizes(self.n, list(self.partition_sizes), cross_only=self.cross_only)

    def to_dict(self):
        d = asdict(self)
        d["offdiag"] = _spec_dict(self.offdiag)
        d["diag"] = None if self.diag is None else _spec_dict(self.diag)
        d["lambdas"] = [format_lambda(parse_lambda(v)) for v in self.lambdas]
        d["seeds"] = list(self.seeds)
        d["partition_sizes"] = None if self.partition_sizes is None else list(self.partition_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
        if "offdiag" in d:
            d["offdiag"] = parse_spec(d["offdiag"], "affinity.offdiag")
        if d.get("diag") is not None:
            d["diag"] = parse_spec(d["diag"], "affinity.diag")
        if "lambdas" in d:
            d["lambdas"] = tuple(parse_lambda(v) for v in d["lambdas"])
        for key in ("seeds", "partition_sizes"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    def hash(self):
        """sha256 of the canonical JSON, ignoring where and how fast it runs."""
        d = self.to_dict()
        for key in ("output_dir", "workers"):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        current = self.to_dict()
        current.update(kw)
        return ExperimentConfig.from_dict(current)


# TOML section.key -> config field
_TOML_FIELDS = {
    ("population", "n"): "n",
    ("population", "steps"): "steps",
    ("affinity", "offdiag"): "offdiag",
    ("affinity", "diag"): "diag",
    ("policy", "kind"): "policy",
    ("policy", "lambda"): "lambdas",
    ("policy", "sigma_lambda"): "sigma_lambda",
    ("partitions", "sizes"): "partition_sizes",
    ("partitions", "cross_only"): "cross_only",
    ("run", "seeds"): "seeds",
    ("run", "n_max"): "n_max",
    ("run", "output_dir"): "output_dir",
    ("run", "analytic"): "analytic",
    ("run", "analytic_steps"): "analytic_steps",
    ("run", "workers"): "workers",
}


def config_from_toml(data):
    flat = {}
    for section, body in data.items():
        if section == "schema":
            flat["schema"] = body
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a table")
        for key, value in body.items():
            name = _TOML_FIELDS.get((section, key))
            if name is None:
                raise ConfigError(f"{section}.{key}: unknown field")
            flat[name] = value
    if "schema" not in flat:
        raise ConfigError("schema: missing version")
    if "lambdas" in flat and not isinstance(flat["lambdas"], list):
        flat["lambdas"] = [flat["lambdas"]]
    return ExperimentConfig.from_dict(flat)


def load_config(path, **overrides):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_toml(data).with_overrides(**overrides)
