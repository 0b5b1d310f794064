"""Noisy responder models: constant-error machines and a human whose
error grows as the questions sharpen.

A machine is a binary symmetric channel with fixed crossover probability.
The human model's error probability depends on the current localization
error d = |X* - X_n| (X_n = posterior median when the question is asked):

    error(d) = 1/2 - min(delta0, mu * d^(kappa-1))

so the human is useless at distance 0 and approaches the floor
1/2 - delta0 at large distances. Parameters follow the standard
derivative-free-optimization human-response model: delta0 caps the
reliability advantage over coin flipping, mu and kappa set the scale and
sharpness of the distance law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BSC = "bsc"
HUMAN = "human"


@dataclass(frozen=True)
class PlayerModel:
    """One responder: a machine (kind="bsc") or a human (kind="human"),
    plus a nonnegative per-query cost."""

    kind: str
    eps: float | None = None
    delta0: float | None = None
    mu: float | None = None
    kappa: float | None = None
    cost: float = 0.0

    def __post_init__(self):
        if self.cost < 0.0:
            raise ValueError("query cost must be nonnegative")
        if self.kind == BSC:
            if self.eps is None or not 0.0 < self.eps < 0.5:
                raise ValueError(f"BSC crossover must lie in (0, 1/2), got {self.eps}")
        elif self.kind == HUMAN:
            if self.kappa is None or self.kappa <= 1.0:
                raise ValueError("human model requires kappa > 1")
            if (
                self.delta0 is None
                or self.mu is None
                or not 0.0 < self.delta0 < self.mu < 0.5
            ):
                raise ValueError("human model requires 0 < delta0 < mu < 1/2")
        else:
            raise ValueError(f"unknown player kind: {self.kind!r}")

    @classmethod
    def machine(cls, eps: float, cost: float = 0.0) -> "PlayerModel":
        return cls(kind=BSC, eps=eps, cost=cost)

    @classmethod
    def human(cls, delta0: float, mu: float, kappa: float, cost: float = 0.0) -> "PlayerModel":
        return cls(kind=HUMAN, delta0=delta0, mu=mu, kappa=kappa, cost=cost)

    @property
    def is_machine(self) -> bool:
        return self.kind == BSC

    def to_json_dict(self) -> dict:
        if self.is_machine:
            return {"kind": BSC, "eps": self.eps, "cost": self.cost}
        return {
            "kind": HUMAN,
            "delta0": self.delta0,
            "mu": self.mu,
            "kappa": self.kappa,
            "cost": self.cost,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PlayerModel":
        kind = d.get("kind")
        cost = float(d.get("cost", 0.0))
        if kind == BSC:
            return cls.machine(float(d["eps"]), cost=cost)
        if kind in (HUMAN, "human_dfo"):
            return cls.human(float(d["delta0"]), float(d["mu"]), float(d["kappa"]), cost=cost)
        raise ValueError(f"unknown player kind: {kind!r}")


def error_prob(model: PlayerModel, distance: float = 0.0) -> float:
    """Probability that the player flips the true answer.

    Constant for machines; for the human it is
    1/2 - min(delta0, mu * distance^(kappa-1)).
    """
    if distance < 0.0:
        raise ValueError("distance must be nonnegative")
    if model.is_machine:
        return model.eps
    return 0.5 - min(model.delta0, model.mu * distance ** (model.kappa - 1.0))


def respond(model: PlayerModel, truth: int, distance: float, rng: np.random.Generator) -> int:
    """Noisy answer to "is the target in the queried region?".

    Returns ``truth`` with probability 1 - error_prob(model, distance) and
    the flipped bit otherwise. Bit-for-bit reproducible given the rng state.
    """
    if truth not in (0, 1):
        raise ValueError(f"truth must be 0 or 1, got {truth}")
    flip = rng.random() < error_prob(model, distance)
    return 1 - truth if flip else truth
