"""Experiment configuration: one record fully determining a run."""

from dataclasses import dataclass, field, asdict

from .datasets import SYSTEM_DEFAULTS, TASKS
from .errors import ConfigError
from .network import ARCHITECTURE_PRESETS, normalize_layers

METHODS = ("vanilla", "quadratic", "self-adaptive")


@dataclass
class ExperimentConfig:
    system: str
    task: str = "reconstruction"
    method: str = "self-adaptive"
    mu: float = None                 # quadratic only
    seed: int = 1
    k_max: int = 2000
    lr: float = 1e-5
    architecture: object = None      # preset name or explicit layer list
    solver_method: str = "rk4"
    substeps: int = 1
    scale: str = "desk"              # "desk" | "paper"
    feasibility_tol: float = 1e-4
    zero_threshold: float = 0.0
    system_params: dict = field(default_factory=dict)
    output_dir: str = None

    def __post_init__(self):
        if self.system not in SYSTEM_DEFAULTS:
            raise ConfigError(
                f"unknown system {self.system!r}; "
                f"valid systems: {', '.join(sorted(SYSTEM_DEFAULTS))}")
        if self.task not in TASKS:
            raise ConfigError(
                f"unknown task {self.task!r}; valid tasks: {', '.join(TASKS)}")
        if self.method not in METHODS:
            raise ConfigError(
                f"unknown method {self.method!r}; "
                f"valid methods: {', '.join(METHODS)}")
        if self.method == "quadratic":
            if self.mu is None or self.mu <= 0:
                raise ConfigError("method 'quadratic' requires --mu > 0")
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.solver_method not in ("euler", "rk4"):
            raise ConfigError("solver method must be 'euler' or 'rk4'")
        if self.substeps < 1:
            raise ConfigError("substeps must be >= 1")
        if self.scale not in ("desk", "paper"):
            raise ConfigError("scale must be 'desk' or 'paper'")
        if self.architecture is None:
            self.architecture = self.system
        self.layers()  # validate eagerly

    def layers(self):
        if isinstance(self.architecture, str):
            try:
                return ARCHITECTURE_PRESETS[self.architecture]
            except KeyError:
                raise ConfigError(
                    f"unknown architecture preset {self.architecture!r}") \
                    from None
        return normalize_layers(self.architecture)

    def method_label(self):
        if self.method == "quadratic":
            mu = self.mu
            mu_txt = f"{int(mu)}" if float(mu).is_integer() else f"{mu}"
            return f"quadratic(mu={mu_txt})"
        return self.method

    def to_dict(self):
        d = asdict(self)
        if not isinstance(d["architecture"], str):
            d["architecture"] = [list(l) if isinstance(l, tuple) else l
                                 for l in d["architecture"]]
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)
