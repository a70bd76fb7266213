"""Replicated-execution voting: unanimity (2oo2) and majority (2oo3),
with a Monte Carlo model of independent and common-mode faults.

Independent corruptions draw uniform wrong 32-bit values, so two wrong
replicas agreeing is a ~2^-32 event; any undetected wrong result the
campaign observes is therefore attributable to common-mode faults, which
corrupt all replicas identically.  Heterogeneous (diverse) redundancy is
modeled as a lower common-mode rate q.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .stats import wilson_interval

UNANIMITY = "unanimity"
MAJORITY = "majority"

POLICIES = (UNANIMITY, MAJORITY)

_VALUE_BITS = 32


@dataclass(frozen=True)
class VoteConfig:
    policy: str
    p: float  # independent fault probability per replica per cycle
    q: float  # common-mode fault probability per cycle

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("p and q must be probabilities")

    @property
    def replicas(self) -> int:
        return 2 if self.policy == UNANIMITY else 3


def vote(outputs, policy: str):
    """Agreement check over replica outputs.

    Returns the agreed value, or None for a safe halt (no agreement).
    Unanimity needs all replicas equal; majority needs at least 2 of 3.
    """
    outputs = list(outputs)
    if policy == UNANIMITY:
        if len(outputs) != 2:
            raise ValueError("unanimity vote needs exactly 2 outputs")
        return outputs[0] if outputs[0] == outputs[1] else None
    if policy == MAJORITY:
        if len(outputs) != 3:
            raise ValueError("majority vote needs exactly 3 outputs")
        a, b, c = outputs
        if a == b or a == c:
            return a
        if b == c:
            return b
        return None
    raise ValueError(f"unknown policy {policy!r}")


@dataclass
class RedundancyReport:
    config: VoteConfig
    trials: int
    seed: int
    correct: int
    safe_halt: int
    undetected_wrong: int
    rate_correct: float
    rate_safehalt: float
    rate_undetected_wrong: float
    undetected_ci: tuple[float, float]
    analytic_predictions: dict

    def to_json(self) -> str:
        doc = {
            "policy": self.config.policy,
            "p": self.config.p,
            "q": self.config.q,
            "trials": self.trials,
            "seed": self.seed,
            "correct": self.correct,
            "safe_halt": self.safe_halt,
            "undetected_wrong": self.undetected_wrong,
            "rate_correct": self.rate_correct,
            "rate_safehalt": self.rate_safehalt,
            "rate_undetected_wrong": self.rate_undetected_wrong,
            "undetected_ci": list(self.undetected_ci),
            "analytic_predictions": self.analytic_predictions,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _predictions(cfg: VoteConfig) -> dict:
    # Agreement between independently wrong replicas (~2^-32 per pair)
    # is neglected; these are the leading-order rates.
    p, q = cfg.p, cfg.q
    if cfg.policy == UNANIMITY:
        correct = (1 - q) * (1 - p) ** 2
        undetected = q
    else:
        # Majority tolerates one independent wrong replica.
        correct = (1 - q) * ((1 - p) ** 3 + 3 * p * (1 - p) ** 2)
        undetected = q
    return {
        "rate_correct": correct,
        "rate_undetected_wrong": undetected,
        "rate_safehalt": 1 - correct - undetected,
    }


def redundancy_campaign(cfg: VoteConfig, trials: int,
                        seed: int = 0) -> RedundancyReport:
    """Monte Carlo over `trials` cycles with reference value 0.

    Per trial: with probability q a common-mode event corrupts every
    replica to one identical wrong value; independently, each replica is
    corrupted with probability p to a uniform wrong 32-bit value.  Each
    trial derives its own generator from (seed, trial), so sweeps over p
    or q with a shared seed reuse the same underlying randomness.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    reference = 0
    correct = safe_halt = undetected = 0
    n = cfg.replicas
    for i in range(trials):
        rng = random.Random(f"vitalcode-redundancy:{seed}:{i}")
        u_common = rng.random()
        u_replica = [rng.random() for _ in range(n)]
        if u_common < cfg.q:
            common_value = 1 + rng.getrandbits(_VALUE_BITS)
            values = [common_value] * n
        else:
            values = [reference] * n
        for j in range(n):
            if u_replica[j] < cfg.p:
                wrong = 1 + rng.getrandbits(_VALUE_BITS)
                values[j] = wrong
        agreed = vote(values, cfg.policy)
        if agreed is None:
            safe_halt += 1
        elif agreed == reference:
            correct += 1
        else:
            undetected += 1
    return RedundancyReport(
        config=cfg, trials=trials, seed=seed, correct=correct,
        safe_halt=safe_halt, undetected_wrong=undetected,
        rate_correct=correct / trials,
        rate_safehalt=safe_halt / trials,
        rate_undetected_wrong=undetected / trials,
        undetected_ci=wilson_interval(undetected, trials),
        analytic_predictions=_predictions(cfg))
