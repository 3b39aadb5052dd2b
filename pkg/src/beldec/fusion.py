"""One-vs-one classifier scores turned into mass functions and fused.

Each class pair (i, j), i < j, has a score f with the convention f > 0
favors class i.  The score feeds a three-focal mass over {C_i, C_j, Theta}:

    f >= 0:  m(C_i) = a (1 - exp(-f / lambda_p)),  m(C_j) = a exp(-f / lambda_p)
    f <  0:  m(C_i) = a exp(-f / lambda_n),        m(C_j) = a (1 - exp(-f / lambda_n))
    m(Theta) = 1 - a

with lambda_p > 0 and lambda_n < 0 the signed means of the training scores.
As written the model jumps at f = 0 (m(C_i) is a just below zero and 0 just
above); the optional ``variant="continuous"`` swaps the two sub-expressions
of the negative branch, which removes the jump.  The verbatim form is the
default.

Fusing an observation combines its n(n-1)/2 pairwise masses: Dempster's
rule in the power algebra, or the unnormalized conjunctive rule on the
lattice, where class intersections survive as focal elements.

A small built-in scorer (per-pair z-scored mean-difference discriminant)
stands in for an external margin classifier; externally produced scores can
be ingested through the CSV interface instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .belief import MassFunction, conjunctive, dempster
from .lattice import Frame
from .serial import fmt17

__all__ = [
    "DegenerateScoreError",
    "PairParams",
    "MassModel",
    "fit_lambdas",
    "pairwise_mass",
    "fuse_observation",
    "PairDiscriminant",
    "LinearScorer",
    "fit_builtin_scorer",
    "model_to_json",
    "model_from_json",
    "scorer_to_json",
    "scorer_from_json",
    "write_scores_csv",
    "read_scores_csv",
    "all_pairs",
]

MASS_VARIANTS = ("verbatim", "continuous")


class DegenerateScoreError(ValueError):
    """Training data cannot support the score-to-mass model."""


def all_pairs(n: int) -> list[tuple[int, int]]:
    """The n(n-1)/2 class pairs (i, j), 1-based, i < j."""
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def fit_lambdas(scores: Sequence[float], *, divisor: str = "all") -> tuple[float, float]:
    """Signed score means (lambda_p, lambda_n) from training scores.

    ``divisor="all"`` divides both sums by the full sample count, as the
    model is written; ``"per_sign"`` divides each sum by the size of its own
    branch (f >= 0 counts on the positive side).  Both signs must occur
    strictly, otherwise one lambda would vanish and the model breaks.
    """
    xs = [float(s) for s in scores]
    if not xs:
        raise ValueError("need at least one training score")
    if divisor not in ("all", "per_sign"):
        raise ValueError("divisor must be 'all' or 'per_sign'")
    if not any(x > 0.0 for x in xs):
        raise DegenerateScoreError("no strictly positive training score")
    if not any(x < 0.0 for x in xs):
        raise DegenerateScoreError("no strictly negative training score")
    pos = math.fsum(x for x in xs if x > 0.0)
    neg = math.fsum(x for x in xs if x < 0.0)
    if divisor == "all":
        l = len(xs)
        return pos / l, neg / l
    n_pos = sum(1 for x in xs if x >= 0.0)
    n_neg = sum(1 for x in xs if x < 0.0)
    return pos / n_pos, neg / n_neg


@dataclass(frozen=True)
class PairParams:
    """Per-pair model parameters; ``l`` records the fitting sample count."""

    lambda_p: float
    lambda_n: float
    alpha: float = 0.95
    l: int | None = None

    def __post_init__(self):
        if not self.lambda_p > 0.0:
            raise ValueError("lambda_p must be strictly positive")
        if not self.lambda_n < 0.0:
            raise ValueError("lambda_n must be strictly negative")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass
class MassModel:
    """Fitted parameters for every class pair of a frame."""

    frame: Frame
    pairs: dict[tuple[int, int], PairParams]

    def __post_init__(self):
        for i, j in self.pairs:
            if not (1 <= i < j <= self.frame.n):
                raise ValueError(f"bad pair ({i}, {j}) for {self.frame.n} classes")

    def params(self, i: int, j: int) -> PairParams:
        try:
            return self.pairs[(i, j)]
        except KeyError:
            raise ValueError(f"no parameters for pair ({i}, {j})") from None


def pairwise_mass(
    frame: Frame,
    i: int,
    j: int,
    f: float,
    params: PairParams,
    algebra: str = "power",
    variant: str = "verbatim",
) -> MassFunction:
    """Mass over {C_i, C_j, Theta} from one score (f > 0 favors C_i)."""
    if not (1 <= i < j <= frame.n):
        raise ValueError(f"bad pair ({i}, {j})")
    if algebra not in ("power", "hyper"):
        raise ValueError("algebra must be 'power' or 'hyper'")
    if variant not in MASS_VARIANTS:
        raise ValueError(f"variant must be one of {MASS_VARIANTS}")
    f = float(f)
    a = params.alpha
    if f >= 0.0:
        e = math.exp(-f / params.lambda_p)
        mi, mj = a * (1.0 - e), a * e
    else:
        e = math.exp(-f / params.lambda_n)
        if variant == "verbatim":
            mi, mj = a * e, a * (1.0 - e)
        else:
            mi, mj = a * (1.0 - e), a * e
    if algebra == "power":
        ei, ej, theta = frame.power_singleton(i), frame.power_singleton(j), frame.theta_power()
    else:
        ei, ej, theta = frame.singleton(i), frame.singleton(j), frame.theta_hyper()
    return MassFunction(frame, [(ei, mi), (ej, mj), (theta, 1.0 - a)], algebra)


def fuse_observation(
    frame: Frame,
    scores: Mapping[tuple[int, int], float],
    model: MassModel,
    algebra: str = "power",
    variant: str = "verbatim",
) -> MassFunction:
    """Combine the pairwise masses of one observation.

    Power algebra: Dempster's rule (raises TotalConflictError when the
    sources fully contradict).  Hyper algebra: unnormalized conjunctive
    rule; intersections are kept and the conflict is identically zero.
    """
    expected = all_pairs(frame.n)
    if set(scores) != set(expected):
        raise ValueError("scores must cover exactly the pairs (i, j), i < j")
    masses = [
        pairwise_mass(frame, i, j, scores[(i, j)], model.params(i, j), algebra, variant)
        for i, j in expected
    ]
    if algebra == "power":
        return dempster(masses)
    return conjunctive(masses).result


# -- built-in linear scorer ----------------------------------------------


@dataclass(frozen=True)
class PairDiscriminant:
    """z-scoring stats plus the discriminant (w, b) of one class pair."""

    mean: np.ndarray
    std: np.ndarray
    w: np.ndarray
    b: float


@dataclass
class LinearScorer:
    frame: Frame
    pairs: dict[tuple[int, int], PairDiscriminant]

    def score(self, x) -> dict[tuple[int, int], float]:
        """Scores of one observation for every pair; f > 0 favors class i."""
        vec = np.asarray(x.as_array() if hasattr(x, "as_array") else x, dtype=float)
        out = {}
        for pair, d in self.pairs.items():
            z = (vec - d.mean) / d.std
            out[pair] = float(d.w @ z + d.b)
        return out


_VAR_FLOOR = 1e-12


def fit_builtin_scorer(frame: Frame, features: Sequence, labels: Sequence[str]) -> LinearScorer:
    """Per-pair mean-difference discriminant on z-scored features.

    For each pair the features are z-scored with the two classes' pooled
    statistics; w is the class-mean difference scaled by the inverse
    per-dimension pooled variance and b centers the score at the midpoint of
    the class-mean projections, so f > 0 leans toward class i.
    """
    X = np.asarray(
        [f.as_array() if hasattr(f, "as_array") else f for f in features], dtype=float
    )
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise ValueError("features and labels must align")
    rows: dict[str, np.ndarray] = {}
    for label in frame.labels:
        sel = X[[k for k, lab in enumerate(labels) if lab == label]]
        if sel.shape[0] < 2:
            raise ValueError(f"class {label!r} needs at least two observations")
        if not (sel.var(axis=0) > 0.0).any():
            raise DegenerateScoreError(
                f"class {label!r} has zero variance in every feature"
            )
        rows[label] = sel
    unknown = sorted(set(labels) - set(frame.labels))
    if unknown:
        raise ValueError(f"labels outside the frame: {unknown}")
    pairs = {}
    for i, j in all_pairs(frame.n):
        xi, xj = rows[frame.labels[i - 1]], rows[frame.labels[j - 1]]
        both = np.vstack([xi, xj])
        mean = both.mean(axis=0)
        std = both.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)
        zi = (xi - mean) / std
        zj = (xj - mean) / std
        mi, mj = zi.mean(axis=0), zj.mean(axis=0)
        pooled = np.maximum((zi.var(axis=0) + zj.var(axis=0)) / 2.0, _VAR_FLOOR)
        w = (mi - mj) / pooled
        b = -float(w @ (mi + mj)) / 2.0
        pairs[(i, j)] = PairDiscriminant(mean=mean, std=std, w=w, b=b)
    return LinearScorer(frame=frame, pairs=pairs)


# -- serialization --------------------------------------------------------


def model_to_json(model: MassModel) -> str:
    """``{"alpha": ..., "pairs": [{"i", "j", "lambda_p", "lambda_n"}, ...]}``."""
    alphas = {p.alpha for p in model.pairs.values()}
    if len(alphas) != 1:
        raise ValueError("JSON model interchange assumes one shared alpha")
    rows = []
    for (i, j) in sorted(model.pairs):
        p = model.pairs[(i, j)]
        rows.append(
            '{"i":%d,"j":%d,"lambda_p":%s,"lambda_n":%s}'
            % (i, j, fmt17(p.lambda_p), fmt17(p.lambda_n))
        )
    return '{"alpha":%s,"pairs":[%s]}' % (fmt17(alphas.pop()), ",".join(rows))


def model_from_json(doc, frame: Frame) -> MassModel:
    obj = json.loads(doc) if isinstance(doc, (str, bytes)) else doc
    alpha = float(obj["alpha"])
    pairs = {}
    for row in obj["pairs"]:
        i, j = int(row["i"]), int(row["j"])
        pairs[(i, j)] = PairParams(
            lambda_p=float(row["lambda_p"]),
            lambda_n=float(row["lambda_n"]),
            alpha=float(row.get("alpha", alpha)),
        )
    return MassModel(frame=frame, pairs=pairs)


def scorer_to_json(scorer: LinearScorer) -> str:
    rows = []
    for (i, j) in sorted(scorer.pairs):
        d = scorer.pairs[(i, j)]
        rows.append(
            '{"i":%d,"j":%d,"mean":[%s],"std":[%s],"w":[%s],"b":%s}'
            % (
                i,
                j,
                ",".join(fmt17(v) for v in d.mean),
                ",".join(fmt17(v) for v in d.std),
                ",".join(fmt17(v) for v in d.w),
                fmt17(d.b),
            )
        )
    return '{"frame":%s,"pairs":[%s]}' % (
        json.dumps(list(scorer.frame.labels)),
        ",".join(rows),
    )


def scorer_from_json(doc, frame: Frame | None = None) -> LinearScorer:
    obj = json.loads(doc) if isinstance(doc, (str, bytes)) else doc
    doc_frame = Frame(obj["frame"])
    if frame is None:
        frame = doc_frame
    elif frame != doc_frame:
        raise ValueError("scorer frame does not match the expected frame")
    pairs = {}
    for row in obj["pairs"]:
        pairs[(int(row["i"]), int(row["j"]))] = PairDiscriminant(
            mean=np.asarray(row["mean"], dtype=float),
            std=np.asarray(row["std"], dtype=float),
            w=np.asarray(row["w"], dtype=float),
            b=float(row["b"]),
        )
    return LinearScorer(frame=frame, pairs=pairs)


# -- score CSV (external-classifier boundary) -----------------------------

_SCORES_HEADER = "obs_id,i,j,f"


def write_scores_csv(path, rows: Iterable[tuple[str, int, int, float]]) -> None:
    """Rows of ``obs_id,i,j,f``, one per class pair per observation."""
    lines = [_SCORES_HEADER]
    for obs_id, i, j, f in rows:
        lines.append(f"{obs_id},{i},{j},{fmt17(f)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_scores_csv(path) -> dict[str, dict[tuple[int, int], float]]:
    """Scores grouped per observation, in first-appearance order."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != _SCORES_HEADER:
        raise ValueError(f"{path}: bad scores CSV header")
    out: dict[str, dict[tuple[int, int], float]] = {}
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 4:
            raise ValueError(f"{path}: bad scores CSV row {ln!r}")
        obs_id, i, j, f = cells[0], int(cells[1]), int(cells[2]), float(cells[3])
        out.setdefault(obs_id, {})[(i, j)] = f
    return out
