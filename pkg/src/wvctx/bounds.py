"""Noncontextual upper bounds on ``p_minus`` and violation certificates.

Two templates cover every bound. The first holds under a disturbance
constraint on the unread channel. The second replaces that with a constraint
on the postselection alone, plus a preparation equivalence, and pays a
penalty ``(1 - C_S)/q_star``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .schemes import ExperimentStats

# Operational equivalences a certificate depends on. The keys are carried by
# certificates so a report can list exactly what must be verified in the lab.
ASSUMPTIONS = {
    "pointer_shifted_kernel": (
        "[x|M_W] ~ q(x-1)[1|M_E] + q(x)[0|M_E] for a median-zero distribution q"
    ),
    "pointer_trivial": "[x|M_W] ~ [x|M_triv], a system-independent median-zero sampler",
    "pointer_mixture": "[x|M_W] ~ p_m [x|M_E] + (1-p_m) [x|M_triv]",
    "negative_outcome_bound": "P(x < 0 | lambda) <= p_tilde for every ontic state",
    "channel_disturbance": "unread channel M ~ (1-p_d) identity + p_d M_D",
    "postselection_disturbance": "[y|M_F after M_W] ~ (1-p_d)[y|M_F] + p_d [y|M_D]",
    "preparation_ensemble": "q0 [0|S] + q1 [1|S] ~ q_star P_star + (1-q_star) P_perp",
}

THEOREM_ASSUMPTIONS = {
    "thm1": ("pointer_shifted_kernel", "channel_disturbance"),
    "thm2": ("pointer_trivial", "channel_disturbance"),
    "thm3": ("pointer_mixture", "channel_disturbance"),
    "thm4": ("pointer_shifted_kernel", "postselection_disturbance", "preparation_ensemble"),
    "lemma1": ("negative_outcome_bound", "channel_disturbance"),
    "lemma2": ("negative_outcome_bound", "postselection_disturbance", "preparation_ensemble"),
}

TEMPLATE_OF = {"thm1": 1, "thm2": 1, "thm3": 1, "lemma1": 1, "thm4": 2, "lemma2": 2}


class BoundInputError(ValueError):
    pass


def _check_unit(**values: float) -> None:
    for name, v in values.items():
        if not (0.0 <= v <= 1.0):
            raise BoundInputError(f"{name} must lie in [0, 1], got {v!r}")


def bound_template1(p_F: float, p_d: float, p_tilde: float) -> float:
    _check_unit(p_F=p_F, p_d=p_d, p_tilde=p_tilde)
    return p_F * p_tilde + (1.0 - p_F) * p_d


def bound_template2(p_F: float, p_d: float, p_tilde: float, C_S: float, q_star: float) -> float:
    _check_unit(p_F=p_F, p_d=p_d, p_tilde=p_tilde, C_S=C_S, q_star=q_star)
    if q_star == 0:
        raise BoundInputError("q_star must be positive")
    penalty = (1.0 - C_S) / q_star * max(p_tilde - p_d, 1.0 - p_tilde)
    return bound_template1(p_F, p_d, p_tilde) + penalty


@dataclass(frozen=True)
class BoundSpec:
    theorem_tag: str
    p_tilde: float
    p_d: float
    C_S: Optional[float] = None
    q_star: Optional[float] = None

    def __post_init__(self):
        if self.theorem_tag not in THEOREM_ASSUMPTIONS:
            raise BoundInputError(f"unknown theorem tag {self.theorem_tag!r}")
        if self.theorem_tag in ("thm1", "thm2", "thm4") and self.p_tilde != 0.5:
            raise BoundInputError(f"{self.theorem_tag} fixes p_tilde = 1/2")
        if self.template == 2 and (self.C_S is None or self.q_star is None):
            raise BoundInputError(f"{self.theorem_tag} needs C_S and q_star")

    @property
    def template(self) -> int:
        return TEMPLATE_OF[self.theorem_tag]

    def value(self, p_F: float) -> float:
        if self.template == 1:
            return bound_template1(p_F, self.p_d, self.p_tilde)
        return bound_template2(p_F, self.p_d, self.p_tilde, self.C_S, self.q_star)


@dataclass(frozen=True)
class Certificate:
    theorem_tag: str
    bound_value: float
    observed_p_minus: float
    margin: float
    violated: bool
    assumptions: tuple[str, ...]
    trivial: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    def describe_assumptions(self) -> list[str]:
        return [ASSUMPTIONS[a] for a in self.assumptions]


def certify(spec: BoundSpec, p_minus: float, p_F: float) -> Certificate:
    """Compare an observed ``p_minus`` with the bound of ``spec``.

    When ``p_d >= p_tilde`` only the trivial bound ``p_minus <= p_tilde`` is
    reported for the first template.
    """
    notes = []
    trivial = spec.template == 1 and spec.p_d >= spec.p_tilde
    if trivial:
        bound = spec.p_tilde
        notes.append("p_d >= p_tilde: only the trivial bound p_minus <= p_tilde applies")
    else:
        bound = spec.value(p_F)
    margin = p_minus - bound
    return Certificate(
        theorem_tag=spec.theorem_tag,
        bound_value=bound,
        observed_p_minus=p_minus,
        margin=margin,
        violated=margin > 0,
        assumptions=THEOREM_ASSUMPTIONS[spec.theorem_tag],
        trivial=trivial,
        notes=tuple(notes),
    )


def bound_theorem(
    stats: ExperimentStats,
    tag: str,
    *,
    C_S: Optional[float] = None,
    q_star: Optional[float] = None,
    p_tilde: Optional[float] = None,
) -> Certificate:
    """Certificate for one of the theorem or lemma bounds applied to ``stats``.

    ``thm1``, ``thm2`` and ``thm4`` use ``p_tilde = 1/2``; ``thm3`` uses
    ``(1 + p_m)/2`` and so needs ``stats.p_m``; the lemmas take ``p_tilde``
    explicitly, defaulting to ``stats.p_tilde``.
    """
    if tag in ("thm1", "thm2", "thm4"):
        pt = 0.5
    elif tag == "thm3":
        if stats.p_m is None:
            raise BoundInputError("thm3 needs the measurement-strength weight p_m")
        pt = 0.5 * (1.0 + stats.p_m)
    elif tag in ("lemma1", "lemma2"):
        pt = stats.p_tilde if p_tilde is None else p_tilde
    else:
        raise BoundInputError(f"unknown theorem tag {tag!r}")
    spec = BoundSpec(tag, pt, stats.p_d, C_S, q_star)
    return certify(spec, stats.p_minus, stats.p_F)


@dataclass(frozen=True)
class CsThreshold:
    c_s: float
    feasible: bool


def required_cs(p_minus: float, p_F: float, p_d: float, q_star: float) -> CsThreshold:
    """Smallest ``C_S`` above which the second-template bound at ``p_tilde = 1/2`` is violated.

    The value is not clamped: ``c_s >= 1`` means no realisable ``C_S`` certifies
    a violation and ``feasible`` is False.
    """
    _check_unit(p_minus=p_minus, p_F=p_F, p_d=p_d, q_star=q_star)
    if q_star == 0:
        raise BoundInputError("q_star must be positive")
    excess = p_minus - bound_template1(p_F, p_d, 0.5)
    c = 1.0 - 2.0 * q_star * excess
    return CsThreshold(c, c < 1.0)


def noise_threshold_eps(p_E: float) -> float:
    """Largest postselection noise for which a maximally negative KD value still violates."""
    _check_unit(p_E=p_E)
    return 1.0 / (2.0 + 8.0 * p_E)


def min_pd_for_cp(eigenvalues: Sequence[float], s: float) -> float:
    """Smallest ``p_d`` compatible with a completely positive disturbing branch."""
    if len(eigenvalues) == 0:
        raise BoundInputError("need at least one eigenvalue")
    if not s > 0:
        raise BoundInputError("s must be positive")
    spread = max(eigenvalues) - min(eigenvalues)
    return -0.5 * math.expm1(-(spread**2) / (4.0 * s * s))
