"""Run configuration shared by the library entry points and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from enum import Enum

from .kde import DEFAULT_GRID_POINTS


class Method(str, Enum):
    AUTO = "auto"
    ASYMPTOTIC = "asymptotic"
    PERMUTATION = "permutation"


class DeltaKind(str, Enum):
    BUMP = "bump"
    EVALUATION = "evaluation"


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a run; serialized verbatim into each output record.

    ``bandwidth=None`` selects Silverman's rule on the combined sample.
    """

    level: float = 0.05
    method: Method = Method.AUTO
    n_perm: int = 500
    grid_points: int = DEFAULT_GRID_POINTS
    bandwidth: float | None = None
    seed: int = 0
    delta_policy: DeltaKind = DeltaKind.BUMP
    eta: float = 0.05
    output_format: str = "json"

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "delta_policy", DeltaKind(self.delta_policy))
        if self.n_perm < 19:
            raise ValueError("n_perm must be at least 19")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("fixed bandwidth must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.output_format not in ("json", "csv"):
            raise ValueError("output_format must be 'json' or 'csv'")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["delta_policy"] = self.delta_policy.value
        return d
