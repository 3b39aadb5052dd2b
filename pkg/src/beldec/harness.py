"""End-to-end experiment driver.

The pipeline mirrors a textured-image recognition protocol on synthetic
data: render imagettes, extract co-occurrence features, fit the built-in
pairwise scorer and the score-to-mass model on the learned classes, score
and fuse the test imagettes, decide under several rules, and tabulate
confusion reports.

Stages communicate through files in the output directory, so each can also
run standalone from the CLI:

    imagettes/<id>.pgm, index.csv          gen
    features_{train,test,hetero}.csv       features
    scorer.json, scores_train.csv,
    params.json                            fit
    scores_{test,hetero}.csv               score
    masses_{test,hetero}.jsonl             fuse
    decisions_{test,hetero}.jsonl          decide
    reports/*.csv,*.txt, summary.json      report

Every artifact is rendered deterministically, so a rerun with the same
configuration and seed is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .belief import MassFunction, mass_from_json, mass_to_json
from .decision import (
    REJECT,
    DecisionConfig,
    DecisionOutcome,
    decide_cardinality4_with_reject,
    decide_hyper_weighted,
    decide_max_singleton,
    decide_maxbel_reject,
    decide_two_step,
)
from .fusion import (
    LinearScorer,
    MassModel,
    PairParams,
    all_pairs,
    fit_builtin_scorer,
    fit_lambdas,
    fuse_observation,
    model_from_json,
    model_to_json,
    read_scores_csv,
    scorer_from_json,
    scorer_to_json,
    write_scores_csv,
)
from .lattice import (
    Frame,
    SpecificityWindow,
    canonical_key,
    cardinality_histogram,
    elements_in_window,
    format_element,
)
from .serial import dumps17
from .synth import DEFAULT_TEXTURES, DatasetSpec, TextureParams, generate_dataset
from .texture import (
    Imagette,
    imagette_features,
    read_features_csv,
    read_pgm,
    write_features_csv,
    write_pgm,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "config_from_dict",
    "load_config",
    "RULE_NAMES",
    "stage_gen",
    "stage_features",
    "stage_fit",
    "stage_score",
    "stage_fuse",
    "stage_decide",
    "stage_report",
    "run_pipeline",
    "lattice_stats_csv",
]


class ConfigError(ValueError):
    """Bad run configuration or missing pipeline input."""


@dataclass(frozen=True)
class RunConfig:
    frame_labels: tuple[str, ...] = ("rock", "sand", "silt")
    unlearned: str = "ride"
    seed: int = 20260810
    side: int = 32
    q: int = 16
    distance: int = 2
    alpha: float = 0.95
    r: float = 0.5
    r_weighted: float = 0.7
    weighted_window: tuple[int, int] = (2, 6)
    train_per_class: int = 200
    test_per_class: int = 100
    hetero_per_pair: int = 60
    hetero_pairs: tuple[tuple[str, str], ...] = (
        ("sand", "rock"),
        ("sand", "silt"),
        ("silt", "ride"),
        ("sand", "ride"),
    )
    lambda_divisor: str = "all"
    mass_variant: str = "verbatim"
    rule: str | None = None
    textures: dict[str, TextureParams] = field(
        default_factory=lambda: dict(DEFAULT_TEXTURES)
    )

    def __post_init__(self):
        try:
            frame = Frame(self.frame_labels)
        except ValueError as exc:
            raise ConfigError(f"bad frame: {exc}") from None
        if self.unlearned in self.frame_labels:
            raise ConfigError("the unlearned class must stay outside the frame")
        if self.lambda_divisor not in ("all", "per_sign"):
            raise ConfigError("lambda_divisor must be 'all' or 'per_sign'")
        if self.mass_variant not in ("verbatim", "continuous"):
            raise ConfigError("mass_variant must be 'verbatim' or 'continuous'")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if not (0.0 <= self.r <= 1.0 and 0.0 <= self.r_weighted <= 1.0):
            raise ConfigError("r values must lie in [0, 1]")
        lo, hi = self.weighted_window
        if not 1 <= lo <= hi <= frame.part_count:
            raise ConfigError("weighted_window must fit inside the lattice")
        if self.rule is not None and self.rule not in RULE_NAMES:
            raise ConfigError(f"unknown rule {self.rule!r}; pick from {RULE_NAMES}")
        try:
            self.dataset_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def frame(self) -> Frame:
        return Frame(self.frame_labels)

    def dataset_spec(self) -> DatasetSpec:
        return DatasetSpec(
            seed=self.seed,
            learned=tuple(self.frame_labels),
            unlearned=self.unlearned,
            textures=self.textures,
            side=self.side,
            train_per_class=self.train_per_class,
            test_per_class=self.test_per_class,
            hetero_pairs=tuple(tuple(p) for p in self.hetero_pairs),
            hetero_per_pair=self.hetero_per_pair,
        )

    def to_dict(self) -> dict:
        out = {
            "frame": list(self.frame_labels),
            "unlearned": self.unlearned,
            "seed": self.seed,
            "side": self.side,
            "q": self.q,
            "distance": self.distance,
            "alpha": self.alpha,
            "r": self.r,
            "r_weighted": self.r_weighted,
            "window": list(self.weighted_window),
            "train_per_class": self.train_per_class,
            "test_per_class": self.test_per_class,
            "hetero_per_pair": self.hetero_per_pair,
            "hetero_pairs": [list(p) for p in self.hetero_pairs],
            "lambda_divisor": self.lambda_divisor,
            "mass_variant": self.mass_variant,
            "rule": self.rule,
            "textures": {
                name: {
                    "kind": t.kind,
                    "mean": t.mean,
                    "std": t.std,
                    "corr_len": t.corr_len,
                    "amplitude": t.amplitude,
                    "period": t.period,
                    "orientation_deg": t.orientation_deg,
                }
                for name, t in self.textures.items()
            },
        }
        return out


_CONFIG_KEYS = {
    "frame": "frame_labels",
    "unlearned": "unlearned",
    "seed": "seed",
    "side": "side",
    "q": "q",
    "distance": "distance",
    "alpha": "alpha",
    "r": "r",
    "r_weighted": "r_weighted",
    "window": "weighted_window",
    "train_per_class": "train_per_class",
    "test_per_class": "test_per_class",
    "hetero_per_pair": "hetero_per_pair",
    "hetero_pairs": "hetero_pairs",
    "lambda_divisor": "lambda_divisor",
    "mass_variant": "mass_variant",
    "rule": "rule",
    "textures": "textures",
}


def config_from_dict(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("run configuration must be a JSON object")
    kwargs = {}
    for key, value in obj.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        name = _CONFIG_KEYS[key]
        if key == "frame":
            value = tuple(value)
        elif key == "window":
            value = tuple(int(v) for v in value)
        elif key == "hetero_pairs":
            value = tuple(tuple(p) for p in value)
        elif key == "textures":
            try:
                value = {name_: TextureParams(**params) for name_, params in value.items()}
            except TypeError as exc:
                raise ConfigError(f"bad texture entry: {exc}") from None
        kwargs[name] = value
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path=None, seed: int | None = None) -> RunConfig:
    """Configuration from a JSON file (defaults when absent), with an
    optional seed override."""
    if path is None:
        cfg = RunConfig()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        cfg = config_from_dict(obj)
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return cfg


# -- file layout -----------------------------------------------------------

IMAGE_DIR = "imagettes"
INDEX_FILE = "index.csv"
CONFIG_FILE = "config.json"
SPLITS = ("train", "test", "hetero")


def _features_file(split: str) -> str:
    return f"features_{split}.csv"


def _scores_file(split: str) -> str:
    return f"scores_{split}.csv"


def _masses_file(split: str) -> str:
    return f"masses_{split}.jsonl"


def _decisions_file(split: str) -> str:
    return f"decisions_{split}.jsonl"


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{path} is missing; run the '{stage}' stage first")
    return path


# -- stages ----------------------------------------------------------------


def stage_gen(cfg: RunConfig, out: Path) -> None:
    """Render the dataset, write PGM imagettes and the index."""
    out = Path(out)
    (out / IMAGE_DIR).mkdir(parents=True, exist_ok=True)
    ds = generate_dataset(cfg.dataset_spec())
    lines = ["id,label,split,file"]
    for split in SPLITS:
        for img in ds.split(split):
            rel = f"{IMAGE_DIR}/{img.id}.pgm"
            write_pgm(out / rel, img.pixels)
            lines.append(f"{img.id},{img.label},{split},{rel}")
    (out / INDEX_FILE).write_text("\n".join(lines) + "\n", encoding="ascii")
    (out / CONFIG_FILE).write_text(dumps17(cfg.to_dict()) + "\n", encoding="ascii")


def _read_index(out: Path) -> dict[str, list[tuple[str, str, str]]]:
    """Split -> [(id, label, file)] in index order."""
    text = _need(out / INDEX_FILE, "gen").read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != "id,label,split,file":
        raise ConfigError(f"{out / INDEX_FILE}: bad index header")
    table: dict[str, list[tuple[str, str, str]]] = {s: [] for s in SPLITS}
    for ln in lines[1:]:
        obs_id, label, split, rel = ln.split(",")
        if split not in table:
            raise ConfigError(f"{out / INDEX_FILE}: unknown split {split!r}")
        table[split].append((obs_id, label, rel))
    return table


def stage_features(cfg: RunConfig, out: Path) -> None:
    """Texture features for every imagette listed in the index."""
    out = Path(out)
    index = _read_index(out)
    for split in SPLITS:
        rows = []
        for obs_id, label, rel in index[split]:
            img = Imagette(read_pgm(out / rel), id=obs_id, label=label)
            rows.append((obs_id, label, imagette_features(img, cfg.q, cfg.distance)))
        if rows:
            write_features_csv(out / _features_file(split), rows)


def stage_fit(cfg: RunConfig, out: Path) -> None:
    """Fit the pairwise scorer on the training split, score it, and fit the
    signed score means of the mass model from those training scores."""
    out = Path(out)
    frame = cfg.frame
    rows = read_features_csv(_need(out / _features_file("train"), "features"))
    features = [fv for _, _, fv in rows]
    labels = [label or "" for _, label, _ in rows]
    scorer = fit_builtin_scorer(frame, features, labels)
    (out / "scorer.json").write_text(scorer_to_json(scorer) + "\n", encoding="ascii")

    score_rows = []
    per_pair: dict[tuple[int, int], list[float]] = {p: [] for p in all_pairs(frame.n)}
    for (obs_id, _, fv) in rows:
        scores = scorer.score(fv)
        for pair in all_pairs(frame.n):
            f = scores[pair]
            score_rows.append((obs_id, pair[0], pair[1], f))
            per_pair[pair].append(f)
    write_scores_csv(out / _scores_file("train"), score_rows)

    pairs = {}
    for pair, xs in per_pair.items():
        lp, ln = fit_lambdas(xs, divisor=cfg.lambda_divisor)
        pairs[pair] = PairParams(lambda_p=lp, lambda_n=ln, alpha=cfg.alpha, l=len(xs))
    model = MassModel(frame=frame, pairs=pairs)
    (out / "params.json").write_text(model_to_json(model) + "\n", encoding="ascii")


def stage_score(cfg: RunConfig, out: Path) -> None:
    """Score the test and hetero splits with the fitted scorer."""
    out = Path(out)
    frame = cfg.frame
    scorer = scorer_from_json(
        _need(out / "scorer.json", "fit").read_text(encoding="ascii"), frame
    )
    for split in ("test", "hetero"):
        feat_path = out / _features_file(split)
        if not feat_path.exists():
            continue
        rows = read_features_csv(feat_path)
        score_rows = []
        for obs_id, _, fv in rows:
            scores = scorer.score(fv)
            for pair in all_pairs(frame.n):
                score_rows.append((obs_id, pair[0], pair[1], scores[pair]))
        write_scores_csv(out / _scores_file(split), score_rows)


def stage_fuse(cfg: RunConfig, out: Path) -> None:
    """Fuse each observation's pairwise masses in both algebras."""
    out = Path(out)
    frame = cfg.frame
    model = model_from_json(
        _need(out / "params.json", "fit").read_text(encoding="ascii"), frame
    )
    seen = False
    for split in ("test", "hetero"):
        path = out / _scores_file(split)
        if not path.exists():
            continue
        seen = True
        lines = []
        for obs_id, scores in read_scores_csv(path).items():
            m_power = fuse_observation(frame, scores, model, "power", cfg.mass_variant)
            m_hyper = fuse_observation(frame, scores, model, "hyper", cfg.mass_variant)
            lines.append(
                '{"obs_id":%s,"power":%s,"hyper":%s}'
                % (json.dumps(obs_id), mass_to_json(m_power), mass_to_json(m_hyper))
            )
        (out / _masses_file(split)).write_text("\n".join(lines) + "\n", encoding="ascii")
    if not seen:
        raise ConfigError("no scores file found; run the 'score' stage first")


RULE_NAMES = (
    "pignistic",
    "maxbel_reject",
    "two_step",
    "gpt_card4",
    "gpt_card2",
    "gpt_card2_reject",
    "weighted_bel",
)


def _decide_all(
    cfg: RunConfig, frame: Frame, m_power: MassFunction, m_hyper: MassFunction
) -> dict[str, DecisionOutcome]:
    out: dict[str, DecisionOutcome] = {}
    out["pignistic"] = decide_max_singleton(m_power, "pignistic")
    maxbel = decide_maxbel_reject(m_power)
    out["maxbel_reject"] = maxbel
    out["two_step"] = decide_two_step(
        m_power, DecisionConfig(r=cfg.r, decision_function="plausibility")
    )
    if frame.n == 3:
        out["gpt_card4"] = decide_cardinality4_with_reject(m_hyper, m_power)
    card2 = decide_hyper_weighted(
        m_hyper,
        DecisionConfig(decision_function="pignistic", window=SpecificityWindow(2, 2)),
    )
    out["gpt_card2"] = card2
    out["gpt_card2_reject"] = DecisionOutcome(
        REJECT if maxbel.rejected else card2.verdict,
        card2.scores,
        rule="gpt_card2_reject",
        window=(2, 2),
    )
    out["weighted_bel"] = decide_hyper_weighted(
        m_hyper,
        DecisionConfig(
            r=cfg.r_weighted,
            decision_function="credibility",
            window=SpecificityWindow(*cfg.weighted_window),
        ),
    )
    return out


def stage_decide(cfg: RunConfig, out: Path, rules=None) -> None:
    """Apply the decision rules to every fused observation."""
    out = Path(out)
    frame = cfg.frame
    if rules is None:
        rules = RULE_NAMES
    unknown = sorted(set(rules) - set(RULE_NAMES))
    if unknown:
        raise ConfigError(f"unknown rules: {unknown}")
    seen = False
    for split in ("test", "hetero"):
        path = out / _masses_file(split)
        if not path.exists():
            continue
        seen = True
        lines = []
        for ln in path.read_text(encoding="ascii").splitlines():
            if not ln:
                continue
            row = json.loads(ln)
            obs_id = row["obs_id"]
            m_power = mass_from_json(row["power"], frame)
            m_hyper = mass_from_json(row["hyper"], frame)
            outcomes = _decide_all(cfg, frame, m_power, m_hyper)
            for rule in rules:
                if rule not in outcomes:
                    continue
                doc = {
                    "obs_id": obs_id,
                    "rule": rule,
                    "decision": outcomes[rule].to_json_dict(),
                }
                lines.append(dumps17(doc))
        (out / _decisions_file(split)).write_text(
            "\n".join(lines) + "\n", encoding="ascii"
        )
    if not seen:
        raise ConfigError("no masses file found; run the 'fuse' stage first")


# -- reports ---------------------------------------------------------------


def _rule_columns(cfg: RunConfig, rule: str) -> list[str]:
    frame = cfg.frame
    singles = sorted(
        (format_element(frame.power_singleton(i)) for i in range(1, frame.n + 1))
    )
    if rule == "pignistic":
        return singles
    if rule == "maxbel_reject":
        return singles + ["REJECT"]
    if rule == "two_step":
        from .lattice import PowerElement

        cands = [PowerElement._trusted(frame, bits) for bits in range(1, 1 << frame.n)]
        cands.sort(key=canonical_key)
        return [format_element(e) for e in cands] + ["REJECT"]
    if rule == "gpt_card4":
        elems = elements_in_window(frame, SpecificityWindow(4, 4))
        return [format_element(e) for e in elems]
    if rule in ("gpt_card2", "gpt_card2_reject"):
        elems = elements_in_window(frame, SpecificityWindow(2, 2))
        cols = [format_element(e) for e in elems]
        return cols + ["REJECT"] if rule == "gpt_card2_reject" else cols
    if rule == "weighted_bel":
        elems = elements_in_window(frame, SpecificityWindow(*cfg.weighted_window))
        return [format_element(e) for e in elems]
    raise ConfigError(f"unknown rule {rule!r}")


_REPORT_TABLES = (
    ("table1_pignistic", "pignistic", "test"),
    ("table1_reject", "maxbel_reject", "test"),
    ("table2_two_step", "two_step", "test"),
    ("table3_card4", "gpt_card4", "test"),
    ("table4_card4_hetero", "gpt_card4", "hetero"),
    ("table5_card2_hetero", "gpt_card2", "hetero"),
    ("table5_card2_reject_hetero", "gpt_card2_reject", "hetero"),
    ("table6_weighted_hetero", "weighted_bel", "hetero"),
)


def _render_text_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for k, cell in enumerate(row):
            widths[k] = max(widths[k], len(cell))
    def fmt(row):
        first = row[0].ljust(widths[0])
        rest = [cell.rjust(widths[k + 1]) for k, cell in enumerate(row[1:])]
        return "  ".join([first] + rest)
    return "\n".join([fmt(header)] + [fmt(r) for r in rows]) + "\n"


def _read_decisions(out: Path, split: str) -> dict[str, dict[str, dict]]:
    """rule -> obs_id -> decision dict, keyed by the pipeline rule name."""
    path = out / _decisions_file(split)
    if not path.exists():
        return {}
    table: dict[str, dict[str, dict]] = {}
    for ln in path.read_text(encoding="ascii").splitlines():
        if not ln:
            continue
        row = json.loads(ln)
        table.setdefault(row["rule"], {})[row["obs_id"]] = row["decision"]
    return table


def stage_report(cfg: RunConfig, out: Path) -> None:
    """Confusion tables per rule plus the agreement/reject summary."""
    out = Path(out)
    index = _read_index(out)
    reports_dir = out / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)

    labels_of_split = {
        "test": list(dict.fromkeys(label for _, label, _ in index["test"])),
        "hetero": list(dict.fromkeys(label for _, label, _ in index["hetero"])),
    }
    label_of_obs = {
        split: {obs_id: label for obs_id, label, _ in index[split]}
        for split in ("test", "hetero")
    }
    by_rule = {split: _read_decisions(out, split) for split in ("test", "hetero")}

    wrote_any = False
    for report_name, rule, split in _REPORT_TABLES:
        rows_labels = labels_of_split[split]
        per_obs = by_rule[split].get(rule)
        if not rows_labels or per_obs is None:
            continue
        wrote_any = True
        columns = _rule_columns(cfg, rule)
        counts = {lab: {col: 0 for col in columns} for lab in rows_labels}
        for obs_id, decision in per_obs.items():
            lab = label_of_obs[split][obs_id]
            verdict = decision["verdict"]
            if verdict not in counts[lab]:
                raise ConfigError(
                    f"verdict {verdict!r} outside the {rule} candidate set"
                )
            counts[lab][verdict] += 1
        header = ["true_label"] + columns
        csv_lines = [",".join(header)]
        text_rows = []
        for lab in rows_labels:
            row = [lab] + [str(counts[lab][col]) for col in columns]
            csv_lines.append(",".join(row))
            text_rows.append(row)
        (reports_dir / f"{report_name}.csv").write_text(
            "\n".join(csv_lines) + "\n", encoding="ascii"
        )
        (reports_dir / f"{report_name}.txt").write_text(
            _render_text_table(header, text_rows), encoding="ascii"
        )
    if not wrote_any:
        raise ConfigError("no decisions found; run the 'decide' stage first")

    summary: dict = {"observations": {}, "agreement_card4": {}, "reject_rates": {}}
    for split in ("test", "hetero"):
        summary["observations"][split] = len(index[split])
        per_obs = by_rule[split].get("gpt_card4", {})
        flags = [d.get("agrees_with_reject") for d in per_obs.values()]
        flags = [f for f in flags if f is not None]
        summary["agreement_card4"][split] = (
            sum(flags) / len(flags) if flags else None
        )
    reject_obs = by_rule["test"].get("maxbel_reject", {})
    for lab in labels_of_split["test"]:
        obs = [
            d
            for obs_id, d in reject_obs.items()
            if label_of_obs["test"][obs_id] == lab
        ]
        if obs:
            rate = sum(1 for d in obs if d["verdict"] == "REJECT") / len(obs)
            summary["reject_rates"][lab] = rate
    (out / "summary.json").write_text(dumps17(summary) + "\n", encoding="ascii")


def run_pipeline(cfg: RunConfig, out: Path) -> None:
    """All stages in order."""
    out = Path(out)
    stage_gen(cfg, out)
    stage_features(cfg, out)
    stage_fit(cfg, out)
    stage_score(cfg, out)
    stage_fuse(cfg, out)
    stage_decide(cfg, out)
    stage_report(cfg, out)


def lattice_stats_csv(n: int, path) -> None:
    """Histogram of element counts per cardinality, as ``cardinality,count``."""
    counts = cardinality_histogram(n)
    lines = ["cardinality,count"]
    lines.extend(f"{c},{k}" for c, k in enumerate(counts, start=1))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
