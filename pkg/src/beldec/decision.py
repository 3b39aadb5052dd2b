"""Decision rules over combined mass functions.

Four families are provided:

* ``decide_maxbel_reject`` -- pick the singleton with maximal credibility,
  but only when it is believed at least as much as its complement; reject
  otherwise.
* ``decide_weighted_power`` -- argmax over all subsets of a decision
  function weighted by a cardinality-discounting mass
  ``K * lambda_x / |X|**r`` (r=1 drives the choice to singletons, r=0 to
  total indecision).
* ``decide_two_step`` -- reject first, then the weighted rule on what
  remains (or, as an unevaluated variant, the weighted rule first and the
  reject test only on imprecise verdicts).
* ``decide_hyper_weighted`` -- same weighted argmax on the
  union/intersection lattice with Venn-part cardinality, optionally
  restricted to a specificity window; a single-cardinality window drops the
  weighting and compares the decision function directly.

``decide_cardinality4_with_reject`` specializes three-class frames: the
pignistic argmax over the four cardinality-4 lattice elements (the three
singletons and the union of pairwise intersections), reported together with
whether it agrees with max-credibility-with-reject when that union is read
as a reject.

Ties are broken deterministically: higher score, then larger cardinality
(the more cautious verdict), then canonical text order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .belief import MassFunction
from .lattice import (
    Frame,
    HyperElement,
    PowerElement,
    SpecificityWindow,
    canonical_key,
    elements_in_window,
    enumerate_hyper,
    format_element,
    parse_element,
)

__all__ = [
    "REJECT",
    "Reject",
    "DecisionConfig",
    "DecisionOutcome",
    "pick_best",
    "decide_max_singleton",
    "decide_maxbel_reject",
    "decide_weighted_power",
    "decide_two_step",
    "decide_hyper_weighted",
    "decide_cardinality4_with_reject",
]

DECISION_FUNCTIONS = ("credibility", "plausibility", "pignistic")


class Reject:
    """Sentinel verdict: the observation matches no learned class."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "REJECT"

    def __str__(self) -> str:
        return "REJECT"


REJECT = Reject()


@dataclass(frozen=True)
class DecisionConfig:
    """Knobs of the weighted rules.

    ``lambda_x`` maps element expressions to positive weights (default 1
    everywhere) for encoding prior preference among candidates.
    """

    r: float = 0.5
    decision_function: str = "plausibility"
    window: SpecificityWindow | None = None
    lambda_x: Mapping[str, float] | None = None

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")
        if self.decision_function not in DECISION_FUNCTIONS:
            raise ValueError(
                f"decision_function must be one of {DECISION_FUNCTIONS}"
            )


@dataclass
class DecisionOutcome:
    """A verdict (an element or REJECT) plus the scores that produced it."""

    verdict: object
    scores: dict
    rule: str
    r: float | None = None
    window: tuple[int, int] | None = None
    agrees_with_reject: bool | None = None

    @property
    def rejected(self) -> bool:
        return isinstance(self.verdict, Reject)

    def verdict_text(self) -> str:
        return "REJECT" if self.rejected else format_element(self.verdict)

    def to_json_dict(self) -> dict:
        scores = {
            format_element(el): v
            for el, v in sorted(self.scores.items(), key=lambda kv: canonical_key(kv[0]))
        }
        out = {
            "verdict": self.verdict_text(),
            "scores": scores,
            "rule": self.rule,
            "r": self.r,
            "window": list(self.window) if self.window else None,
        }
        if self.agrees_with_reject is not None:
            out["agrees_with_reject"] = self.agrees_with_reject
        return out


def pick_best(scored) -> object:
    """Deterministic argmax over (element, score) pairs.

    Exact score ties prefer the larger cardinality, then the smaller
    canonical text.
    """
    best = None
    best_score = best_card = best_text = None
    for el, score in scored:
        if best is None or score > best_score:
            best, best_score, best_card, best_text = el, score, el.cardinality, None
            continue
        if score == best_score:
            card = el.cardinality
            if card > best_card:
                best, best_card, best_text = el, card, None
            elif card == best_card:
                if best_text is None:
                    best_text = format_element(best)
                text = format_element(el)
                if text < best_text:
                    best, best_text = el, text
    if best is None:
        raise ValueError("empty candidate set")
    return best


def _require_power(m: MassFunction) -> None:
    if m.algebra != "power":
        raise ValueError("this rule expects a power-algebra mass function")
    if m.mass_on_empty() > m.tolerance:
        raise ValueError("mass on the empty set: renormalize (Dempster) first")


def _lambda_table(cfg: DecisionConfig, frame: Frame, algebra: str) -> dict[str, float] | None:
    if cfg.lambda_x is None:
        return None
    table = {}
    for key, value in cfg.lambda_x.items():
        value = float(value)
        if value <= 0.0:
            raise ValueError("lambda weights must be strictly positive")
        el = parse_element(frame, key, algebra) if isinstance(key, str) else key
        table[format_element(el)] = value
    return table


def _lambda_for(table, el) -> float:
    if table is None:
        return 1.0
    return table.get(format_element(el), 1.0)


def _decision_fn(m: MassFunction, name: str):
    if name == "credibility":
        return m.bel
    if name == "plausibility":
        return m.pl
    return m.betp if m.algebra == "power" else m.gpt


def decide_max_singleton(m: MassFunction, decision_function: str = "pignistic") -> DecisionOutcome:
    """Plain argmax of a decision function over the singletons."""
    _require_power(m)
    if decision_function not in DECISION_FUNCTIONS:
        raise ValueError(f"decision_function must be one of {DECISION_FUNCTIONS}")
    fd = _decision_fn(m, decision_function)
    scores = {m.frame.power_singleton(i): fd(m.frame.power_singleton(i)) for i in range(1, m.frame.n + 1)}
    best = pick_best(scores.items())
    return DecisionOutcome(best, scores, rule=f"max_{decision_function}")


def decide_maxbel_reject(m: MassFunction) -> DecisionOutcome:
    """Max-credibility singleton, rejected when its complement is more
    credible.

    The comparison uses >=, so a fully vacuous mass ties at 0 and decides
    (by the tie rule) rather than rejecting.
    """
    _require_power(m)
    frame = m.frame
    scores = {}
    for i in range(1, frame.n + 1):
        s = frame.power_singleton(i)
        scores[s] = m.bel(s)
    best = pick_best(scores.items())
    verdict = best if scores[best] >= m.bel(best.complement()) else REJECT
    return DecisionOutcome(verdict, scores, rule="maxbel_reject")


def decide_weighted_power(m: MassFunction, cfg: DecisionConfig) -> DecisionOutcome:
    """Cardinality-weighted argmax over every nonempty subset."""
    _require_power(m)
    frame = m.frame
    fd = _decision_fn(m, cfg.decision_function)
    lam = _lambda_table(cfg, frame, "power")
    cands = [PowerElement._trusted(frame, bits) for bits in range(1, 1 << frame.n)]
    weights = [_lambda_for(lam, el) / el.cardinality ** cfg.r for el in cands]
    scale = 1.0 / math.fsum(weights)
    scores = {el: scale * w * fd(el) for el, w in zip(cands, weights)}
    best = pick_best(scores.items())
    return DecisionOutcome(best, scores, rule="weighted_power", r=cfg.r)


def decide_two_step(
    m: MassFunction, cfg: DecisionConfig, order: str = "reject_first"
) -> DecisionOutcome:
    """Reject test and weighted-subset rule composed in either order.

    ``reject_first`` (the evaluated strategy) applies max-credibility with
    reject, then the weighted rule to accepted observations.
    ``unions_first`` applies the weighted rule and falls back to the reject
    test only when the verdict is imprecise; it ships as a variant with no
    claimed behavior.
    """
    if order not in ("reject_first", "unions_first"):
        raise ValueError("order must be 'reject_first' or 'unions_first'")
    first = decide_maxbel_reject(m)
    if order == "reject_first":
        if first.rejected:
            return DecisionOutcome(REJECT, first.scores, rule="two_step", r=cfg.r)
        out = decide_weighted_power(m, cfg)
        return DecisionOutcome(out.verdict, out.scores, rule="two_step", r=cfg.r)
    out = decide_weighted_power(m, cfg)
    if out.verdict.cardinality == 1:
        return DecisionOutcome(out.verdict, out.scores, rule="two_step_unions_first", r=cfg.r)
    return DecisionOutcome(first.verdict, first.scores, rule="two_step_unions_first", r=cfg.r)


def decide_hyper_weighted(m: MassFunction, cfg: DecisionConfig) -> DecisionOutcome:
    """Weighted argmax over the union/intersection lattice.

    Plausibility is refused: on the free lattice it is identically 1, so it
    cannot discriminate.  With a single-cardinality window the weighting is
    constant and the decision function is compared directly.
    """
    if m.algebra != "hyper":
        raise ValueError("this rule expects a hyper-algebra mass function")
    if cfg.decision_function == "plausibility":
        raise ValueError(
            "plausibility is identically 1 on the free lattice; "
            "use credibility or pignistic"
        )
    frame = m.frame
    if cfg.window is not None:
        cands = elements_in_window(frame, cfg.window)
        window = (cfg.window.min_s, cfg.window.max_s)
    else:
        cands = enumerate_hyper(frame)
        window = None
    if not cands:
        raise ValueError("empty candidate set")
    fd = _decision_fn(m, cfg.decision_function)
    if cfg.window is not None and cfg.window.min_s == cfg.window.max_s:
        scores = {el: fd(el) for el in cands}
        r_used = None
    else:
        lam = _lambda_table(cfg, frame, "hyper")
        weights = [_lambda_for(lam, el) / el.cardinality ** cfg.r for el in cands]
        scale = 1.0 / math.fsum(weights)
        scores = {el: scale * w * fd(el) for el, w in zip(cands, weights)}
        r_used = cfg.r
    best = pick_best(scores.items())
    return DecisionOutcome(best, scores, rule="hyper_weighted", r=r_used, window=window)


def pairwise_intersections_union(frame: Frame) -> HyperElement:
    """Union of all two-class intersections (for n=3 this is the element
    that absorbs rejects in the cardinality-4 decision)."""
    acc = None
    for i in range(1, frame.n + 1):
        for j in range(i + 1, frame.n + 1):
            cur = frame.singleton(i) & frame.singleton(j)
            acc = cur if acc is None else acc | cur
    return acc


def decide_cardinality4_with_reject(
    m_hyper: MassFunction, m_power: MassFunction
) -> DecisionOutcome:
    """Three-class pignistic argmax over the cardinality-4 lattice elements.

    The candidates are the three singletons and the union of pairwise
    intersections; the outcome carries a flag recording whether it agrees
    with max-credibility-with-reject when that union is read as REJECT.
    """
    if m_hyper.algebra != "hyper":
        raise ValueError("m_hyper must be a hyper-algebra mass function")
    if m_hyper.frame != m_power.frame:
        raise ValueError("the two mass functions belong to different frames")
    frame = m_hyper.frame
    if frame.n != 3:
        raise ValueError("the cardinality-4 mapping is specific to 3 classes")
    cfg = DecisionConfig(decision_function="pignistic", window=SpecificityWindow(4, 4))
    out = decide_hyper_weighted(m_hyper, cfg)
    baseline = decide_maxbel_reject(m_power)
    i2 = pairwise_intersections_union(frame)
    if baseline.rejected:
        agrees = out.verdict == i2
    else:
        label = baseline.verdict.labels()[0]
        agrees = out.verdict == frame.singleton(frame.index(label) + 1)
    return DecisionOutcome(
        out.verdict,
        out.scores,
        rule="gpt_cardinality4",
        window=(4, 4),
        agrees_with_reject=agrees,
    )
