"""End-to-end run: ten cached stages from raw corpus to ordinal regression.

Each stage reads files and writes files. A stage is skipped (cache hit) when
the hash of its code version, its parameters and the bytes of its inputs
matches the previous run and its outputs are still intact on disk. All
writes are atomic, so an interrupted run never leaves a half-written file.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, _io, attribution, corpus as corpus_mod, lexicon, netcore, ordinal, survival, tailfit
from .community import DETECTORS
from .community.partition import concordance, read_reference, write_partition
from .lexicon import DEFAULT_TOPICS

logger = logging.getLogger(__name__)

CACHE_DIR = ".cache"
STATE_FILE = "state.json"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    corpus: str = ""
    dictionary: str = ""
    out: str = "run"
    reference: str | None = None
    min_occurrences: int = 500
    min_confidence: float = 0.9
    alpha: float = 0.05
    backbone_mode: str = "either"
    algorithms: tuple[str, ...] = ("walktrap", "multilevel", "fastgreedy")
    weighting: str = "presence"
    threshold: float = 0.95
    topics: tuple[str, ...] = DEFAULT_TOPICS
    min_likes: int = 4
    K: int = 4
    log_covariate: bool = False
    polarized_only_correlations: bool = False
    min_tail: int = 2
    bootstrap: int = 0
    survival_weighting: str = "gehan"
    censor_horizon: float | None = None
    exclude_zero: bool = False
    seed: int = 0

    def validate(self) -> None:
        if not self.corpus:
            raise ValueError("config needs a corpus path")
        if self.min_occurrences < 1:
            raise ValueError("min_occurrences must be >= 1")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.backbone_mode not in ("either", "both"):
            raise ValueError("backbone_mode must be 'either' or 'both'")
        unknown = [a for a in self.algorithms if a not in DETECTORS]
        if unknown or not self.algorithms:
            raise ValueError(f"unknown community algorithms {unknown}")
        if self.weighting not in ("presence", "occurrence"):
            raise ValueError("weighting must be 'presence' or 'occurrence'")
        if not 0.5 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0.5, 1]")
        if self.K != len(self.topics):
            raise ValueError("K must equal the number of topics")
        if self.min_likes < 1 or self.min_tail < 2 or self.bootstrap < 0:
            raise ValueError("min_likes >= 1, min_tail >= 2 and bootstrap >= 0 are required")
        if self.survival_weighting not in ("gehan", "peto", "logrank"):
            raise ValueError("survival_weighting must be gehan, peto or logrank")
        if self.censor_horizon is not None and self.censor_horizon < 0:
            raise ValueError("censor_horizon must be non-negative")
        out = Path(self.out)
        if out.exists() and not out.is_dir():
            raise ValueError(f"output path {out} is not a directory")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


# artifact name -> path relative to the output directory
ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "summary": "tables/summary.csv",
    "dtm": "dtm.csv",
    "network": "network.csv",
    "backbone": "backbone.csv",
    "communities": "tables/communities.csv",
    "post_labels": "post_labels.csv",
    "label_counts": "tables/label_counts.csv",
    "profiles": "user_profiles.csv",
    "polarization": "tables/polarization.csv",
    "correlations": "tables/correlations.csv",
    "engagement": "plots/engagement_quartiles.csv",
    "mobility": "mobility.csv",
    "fits_posts": "tables/tail_fits_posts.csv",
    "fits_users": "tables/tail_fits_users.csv",
    "fits_posts_wide": "tables/tail_table_posts.csv",
    "fits_users_wide": "tables/tail_table_users.csv",
    "ccdf": "plots/ccdf.csv",
    "lifetimes": "lifetimes.csv",
    "km": "plots/km.csv",
    "survtest": "tables/survtest.csv",
    "pom": "pom.json",
    "pom_table": "tables/pom.csv",
}


@dataclass(frozen=True)
class Stage:
    name: str
    inputs: tuple[str, ...]  # artifact names or "@field" for config paths
    params: tuple[str, ...]
    outputs: tuple[str, ...]
    run: Callable[["_Context"], dict]


@dataclass
class StageStatus:
    name: str
    status: str  # ran | cached | failed | skipped
    outputs: dict[str, str] = field(default_factory=dict)
    error: str | None = None


@dataclass
class RunReport:
    stages: list[StageStatus]
    manifest: list[dict]
    out_dir: str

    @property
    def ok(self) -> bool:
        return all(s.status in ("ran", "cached") for s in self.stages)

    @property
    def recomputed(self) -> int:
        return sum(s.status == "ran" for s in self.stages)

    @property
    def failed_stage(self) -> str | None:
        return next((s.name for s in self.stages if s.status == "failed"), None)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "recomputed": self.recomputed,
            "stages": [asdict(s) for s in self.stages],
            "manifest": self.manifest,
        }


class _Context:
    def __init__(self, cfg: PipelineConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self._memo: dict = {}

    def path(self, artifact: str) -> Path:
        return self.out / ARTIFACTS[artifact]

    def _load(self, key, loader):
        if key not in self._memo:
            self._memo[key] = loader()
        return self._memo[key]

    def corpus(self):
        return self._load("corpus", lambda: corpus_mod.ingest(self.path("corpus")))

    def dictionary(self):
        return self._load(
            "dictionary",
            lambda: lexicon.load_dictionary(self.cfg.dictionary, self.cfg.topics, self.cfg.min_confidence),
        )

    def dtm(self):
        return self._load("dtm", lambda: lexicon.read_dtm(self.path("dtm")))

    def post_labels(self):
        return self._load("post_labels", lambda: attribution.read_post_labels(self.path("post_labels")))

    def profiles(self):
        return self._load(
            "profiles",
            lambda: attribution.classify_users(
                self.corpus(), self.post_labels(), self.cfg.threshold, self.cfg.topics
            ),
        )


def _write_json(path: Path, obj) -> None:
    _io.atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n")


def _num(x):
    """JSON-safe float: NaN becomes None."""
    if x is None:
        return None
    x = float(x)
    return None if x != x else x


# ---------------------------------------------------------------------------
# stages


def _ingest(ctx: _Context) -> dict:
    corpus = corpus_mod.ingest(ctx.cfg.corpus)
    _io.atomic_write_text(ctx.path("corpus"), corpus.dumps())
    rows = corpus_mod.summarize(corpus).rows()
    _io.write_csv(ctx.path("summary"), ("entity", "count"), rows)
    return {"summary": dict(rows), "messages": sum(1 for _ in corpus.messages())}


def _dtm(ctx: _Context) -> dict:
    dictionary = ctx.dictionary()
    full = lexicon.build_dtm(ctx.corpus(), ctx.cfg.min_occurrences, phrases=dictionary.phrases)
    dtm = lexicon.restrict_to_dictionary(full, dictionary)
    lexicon.write_dtm(ctx.path("dtm"), dtm)
    return {"posts": dtm.shape[0], "vocabulary": full.shape[1], "dictionary_terms": dtm.shape[1]}


def _cooccur(ctx: _Context) -> dict:
    net = netcore.project_cooccurrence(ctx.dtm())
    netcore.write_network(ctx.path("network"), net)
    return {"nodes": net.n_nodes, "edges": net.n_edges}


def _backbone(ctx: _Context) -> dict:
    net = netcore.read_network(ctx.path("network"))
    bb = netcore.extract_backbone(net, ctx.cfg.alpha, ctx.cfg.backbone_mode)
    netcore.write_network(ctx.path("backbone"), net, bb)
    return {"alpha": ctx.cfg.alpha, "edges": net.n_edges, "retained": bb.n_retained}


def _communities(ctx: _Context) -> dict:
    net = netcore.read_network(ctx.path("backbone"), retained_only=True)
    ref_path = ctx.cfg.reference or ctx.cfg.dictionary
    reference = read_reference(ref_path, nodes=net.nodes, net=net)
    rows, out = [], {}
    for algo in ctx.cfg.algorithms:
        part = DETECTORS[algo](net)
        conc = concordance(part, reference)
        n_comm = int(len(np.unique(part.membership)))
        write_partition(ctx.out / f"partitions/{algo}.csv", part, reference)
        rows.append([algo, n_comm, _io.fmt(part.modularity, 10), _io.fmt(conc, 10)])
        out[algo] = {"communities": n_comm, "modularity": _num(part.modularity), "concordance": _num(conc)}
    write_partition(ctx.out / "partitions/reference.csv", reference)
    rows.append(["reference", len(reference.labels or ()), _io.fmt(reference.modularity, 10), "1"])
    _io.write_csv(ctx.path("communities"), ("algorithm", "communities", "modularity", "concordance"), rows)
    return out


def _label(ctx: _Context) -> dict:
    labels = attribution.label_posts(ctx.corpus(), ctx.dtm(), ctx.dictionary(), ctx.cfg.weighting)
    attribution.write_post_labels(ctx.path("post_labels"), labels)
    counts = attribution.label_counts(labels, ctx.cfg.topics)
    _io.write_csv(ctx.path("label_counts"), ("label", "posts"), list(counts.items()))
    return {"label_counts": counts}


def _classify(ctx: _Context) -> dict:
    cfg = ctx.cfg
    profiles = ctx.profiles()
    attribution.write_user_profiles(ctx.path("profiles"), profiles)
    table = attribution.polarization_table(profiles, cfg.topics)
    _io.write_csv(ctx.path("polarization"), ("topic", "users", "percent"), [(t, n, _io.fmt(p, 6)) for t, n, p in table])
    out: dict = {"polarization": [{"topic": t, "users": n, "percent": _num(p)} for t, n, p in table]}
    try:
        corr = attribution.topic_correlations(profiles, cfg.topics, cfg.polarized_only_correlations)
        attribution.write_correlations(ctx.path("correlations"), corr)
        out["correlations"] = {"users": corr.n_users, "matrix": [[_num(v) for v in r] for r in corr.values]}
    except attribution.AttributionError as exc:
        _io.write_csv(ctx.path("correlations"), ["topic", *cfg.topics], [])
        out["correlations"] = {"error": str(exc)}
    engagement = attribution.engagement_by_topic_count(profiles, len(cfg.topics), cfg.min_likes)
    attribution.write_engagement(ctx.path("engagement"), engagement)
    likes, k = attribution.mobility_data(profiles, cfg.min_likes)
    _io.write_csv(ctx.path("mobility"), ("x", "y"), zip(likes.tolist(), k.tolist()))
    out["engagement"] = engagement
    out["mobility_users"] = int(len(likes))
    return out


def _fit_one(sample, cfg: PipelineConfig, key) -> tailfit.PowerLawFit | None:
    x = np.asarray(sample, dtype=np.int64)
    x = x[x > 0]
    try:
        fit = tailfit.fit_power_law(x, min_tail=cfg.min_tail)
    except tailfit.TailFitError as exc:
        logger.warning("tail fit %s failed: %s", key, exc)
        return None
    if cfg.bootstrap:
        seq = np.random.SeedSequence(cfg.seed, spawn_key=tuple(int.from_bytes(s.encode(), "little") % (2**32) for s in key))
        p = tailfit.bootstrap_pvalue(x, fit, cfg.bootstrap, np.random.Generator(np.random.Philox(seq)))
        fit = tailfit.PowerLawFit(**{**asdict(fit), "p_value": p})
    return fit


def _fits(ctx: _Context) -> dict:
    cfg = ctx.cfg
    corpus, labels, profiles = ctx.corpus(), ctx.post_labels(), ctx.profiles()
    post_samples: dict[tuple[str, str], list[int]] = {(t, m): [] for t in cfg.topics for m in tailfit.METRICS}
    user_likes: dict[str, dict[str, int]] = {t: {} for t in cfg.topics}
    user_comments: dict[str, dict[str, int]] = {t: {} for t in cfg.topics}
    for post in corpus:
        topic = labels.get(post.post_id)
        if topic not in user_likes:
            continue
        post_samples[(topic, "likes")].append(len(post.likes))
        post_samples[(topic, "comments")].append(len(post.comments))
        post_samples[(topic, "shares")].append(post.shares)
    for user, prof in profiles.items():
        t = prof.polarization
        if t is not None:
            user_likes[t][user] = prof.likes_per_topic[t]
            user_comments[t][user] = prof.comments_per_topic[t]
    user_samples = {}
    for t in cfg.topics:
        user_samples[(t, "likes")] = list(user_likes[t].values())
        user_samples[(t, "comments")] = list(user_comments[t].values())

    jobs = {("posts",) + k: v for k, v in post_samples.items()}
    jobs.update({("users",) + k: v for k, v in user_samples.items()})
    with ThreadPoolExecutor() as pool:
        futures = {k: pool.submit(_fit_one, v, cfg, k) for k, v in jobs.items()}
        results = {k: f.result() for k, f in futures.items()}

    out: dict = {}
    for scope, metrics in (("posts", tailfit.METRICS), ("users", ("likes", "comments"))):
        fits = {(t, m): results[(scope, t, m)] for t in cfg.topics for m in metrics}
        tailfit.write_fits(ctx.path(f"fits_{scope}"), fits)
        header, rows = tailfit.wide_table(fits, cfg.topics, metrics)
        _io.write_csv(ctx.path(f"fits_{scope}_wide"), header, rows)
        out[scope] = [
            {"group": t, "metric": m, **({"x_min": f.x_min, "alpha": f.alpha, "n_tail": f.n_tail,
                                         "ks": f.ks_statistic, "p_value": f.p_value} if f else {"error": "NA"})}
            for (t, m), f in sorted(fits.items())
        ]
    curves = {}
    for (scope, t, m), v in jobs.items():
        if v:
            curves[(f"{scope}:{t}", m)] = tailfit.ccdf(v)
    tailfit.write_ccdf(ctx.path("ccdf"), curves)
    return out


def _survival(ctx: _Context) -> dict:
    cfg = ctx.cfg
    corpus, labels = ctx.corpus(), ctx.post_labels()
    rows_lt, rows_km, rows_test = [], [], []
    out: dict = {}
    for unit in ("user", "post"):
        profiles = ctx.profiles() if unit == "user" else None
        try:
            samples = survival.lifetimes(
                corpus, unit, labels, profiles, cfg.topics, cfg.censor_horizon, cfg.exclude_zero
            )
        except survival.SurvivalError as exc:
            out[unit] = {"error": str(exc)}
            continue
        for g, s in samples.items():
            rows_lt += [[unit, g, _io.fmt(d, 15), int(o)] for d, o in zip(s.durations, s.observed)]
            if len(s):
                c = survival.kaplan_meier(s)
                rows_km += [[unit, g, _io.fmt(t, 15), _io.fmt(v, 17), n, d] for t, v, n, d in c.points()]
        usable = [s for s in samples.values() if len(s) and s.observed.any()]
        tests = []
        if len(usable) >= 2:
            tests.append(usable)
            for i in range(len(usable)):
                for j in range(i + 1, len(usable)):
                    tests.append([usable[i], usable[j]])
        res_out = []
        for grp in tests:
            r = survival.gehan_wilcoxon(grp, cfg.survival_weighting)
            name = "+".join(s.group for s in grp)
            rows_test.append([unit, name, _io.fmt(r.statistic, 10), r.df, _io.fmt(r.p_value, 10), r.method])
            res_out.append({"groups": name, "statistic": _num(r.statistic), "df": r.df, "p_value": _num(r.p_value)})
        out[unit] = {"sizes": {g: len(s) for g, s in samples.items()}, "tests": res_out}
    _io.write_csv(ctx.path("lifetimes"), ("unit", "group", "duration", "observed"), rows_lt)
    _io.write_csv(ctx.path("km"), ("unit", "group", "t", "s_hat", "n_risk", "d"), rows_km)
    _io.write_csv(ctx.path("survtest"), ("unit", "groups", "statistic", "df", "p_value", "method"), rows_test)
    return out


def read_xy(path) -> tuple[np.ndarray, np.ndarray]:
    _, body = _io.read_csv(path)
    if not body:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    arr = np.array([[float(r[0]), float(r[1])] for r in body])
    return arr[:, 0], arr[:, 1].astype(np.int64)


def pom_table_rows(rep: dict) -> list[list]:
    rows = []
    for kind, items in (("coefficient", rep["coefficients"]), ("intercept", rep["intercepts"])):
        for c in items:
            rows.append([kind, c["name"], *[_io.fmt(c[k], 8) for k in ("value", "std_error", "t_value", "p_value")]])
    rows.append(["odds_ratio", rep["coefficients"][0]["name"], _io.fmt(rep["odds_ratio"]["value"], 8), "", "", ""])
    rows.append(["delta", "", _io.fmt(rep["delta"], 8), "", "", ""])
    return rows


def pom_report(x, y, K: int, covariate: str = "likes", log_covariate: bool = False) -> dict:
    xv = np.log(x) if log_covariate else x
    fit = ordinal.fit_pom(xv, y, K)
    return ordinal.report(fit, xv, y, covariate=("log_" + covariate) if log_covariate else covariate)


def write_pom(json_path, csv_path, rep: dict) -> None:
    _write_json(Path(json_path), rep)
    if csv_path is not None:
        _io.write_csv(csv_path, ("term", "name", "estimate", "se", "t_value", "p_value"), pom_table_rows(rep))


def _pom(ctx: _Context) -> dict:
    x, y = read_xy(ctx.path("mobility"))
    rep = pom_report(x, y, ctx.cfg.K, log_covariate=ctx.cfg.log_covariate)
    write_pom(ctx.path("pom"), ctx.path("pom_table"), rep)
    return rep


STAGES: tuple[Stage, ...] = (
    Stage("ingest", ("@corpus",), (), ("corpus", "summary"), _ingest),
    Stage("dtm", ("corpus", "@dictionary"), ("min_occurrences", "min_confidence", "topics"), ("dtm",), _dtm),
    Stage("cooccur", ("dtm",), (), ("network",), _cooccur),
    Stage("backbone", ("network",), ("alpha", "backbone_mode"), ("backbone",), _backbone),
    Stage("communities", ("backbone", "@reference"), ("algorithms",), ("communities",), _communities),
    Stage("label", ("corpus", "dtm", "@dictionary"), ("weighting", "min_confidence", "topics"),
          ("post_labels", "label_counts"), _label),
    Stage("classify", ("corpus", "post_labels"),
          ("threshold", "topics", "min_likes", "polarized_only_correlations"),
          ("profiles", "polarization", "correlations", "engagement", "mobility"), _classify),
    Stage("fits", ("corpus", "post_labels"), ("threshold", "topics", "min_tail", "bootstrap", "seed"),
          ("fits_posts", "fits_users", "fits_posts_wide", "fits_users_wide", "ccdf"), _fits),
    Stage("survival", ("corpus", "post_labels"),
          ("threshold", "topics", "censor_horizon", "exclude_zero", "survival_weighting"),
          ("lifetimes", "km", "survtest"), _survival),
    Stage("pom", ("mobility",), ("K", "log_covariate"), ("pom", "pom_table"), _pom),
)


def _input_path(ctx: _Context, name: str) -> Path:
    if name.startswith("@"):
        key = name[1:]
        value = getattr(ctx.cfg, key)
        if key == "reference" and not value:
            value = ctx.cfg.dictionary
        if not value:
            raise FileNotFoundError(f"no {key} path configured")
        return Path(value)
    return ctx.path(name)


def _stage_key(stage: Stage, ctx: _Context) -> str:
    h = hashlib.sha256()
    payload = {
        "stage": stage.name,
        "version": __version__,
        "params": {p: getattr(ctx.cfg, p) for p in stage.params},
        "inputs": {},
    }
    for name in stage.inputs:
        p = _input_path(ctx, name)
        if not p.is_file():
            raise FileNotFoundError(f"missing input {name.lstrip('@')}: {p}")
        payload["inputs"][name] = _io.sha256_file(p)
    h.update(json.dumps(payload, sort_keys=True, default=list).encode())
    return h.hexdigest()


def _emitted(out: Path) -> list[Path]:
    return sorted(
        p for p in out.rglob("*") if p.is_file() and CACHE_DIR not in p.relative_to(out).parts
    )


def build_manifest(out: Path, exclude: tuple[str, ...] = ("manifest.json",)) -> list[dict]:
    return [
        {"path": p.relative_to(out).as_posix(), "size": p.stat().st_size, "sha256": _io.sha256_file(p)}
        for p in _emitted(out)
        if p.relative_to(out).as_posix() not in exclude
    ]


def run_pipeline(cfg: PipelineConfig, force: bool = False) -> RunReport:
    """Run all stages in dependency order; stop at the first failure."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    state_path = out / CACHE_DIR / STATE_FILE
    try:
        state = json.loads(state_path.read_text()) if state_path.is_file() and not force else {}
    except json.JSONDecodeError:
        state = {}
    ctx = _Context(cfg, out)
    statuses: list[StageStatus] = []
    sections: dict[str, dict] = {}
    failed = False
    for stage in STAGES:
        if failed:
            statuses.append(StageStatus(stage.name, "skipped"))
            continue
        try:
            key = _stage_key(stage, ctx)
            prev = state.get(stage.name)
            section_path = out / CACHE_DIR / f"{stage.name}.json"
            if (
                prev is not None
                and prev["key"] == key
                and section_path.is_file()
                and all(
                    ctx.path(a).is_file() and _io.sha256_file(ctx.path(a)) == h for a, h in prev["outputs"].items()
                )
            ):
                sections[stage.name] = json.loads(section_path.read_text())
                statuses.append(StageStatus(stage.name, "cached", dict(prev["outputs"])))
                continue
            logger.info("running stage %s", stage.name)
            section = stage.run(ctx)
            hashes = {a: _io.sha256_file(ctx.path(a)) for a in stage.outputs}
            _write_json(section_path, section)
            sections[stage.name] = json.loads(section_path.read_text())
            state[stage.name] = {"key": key, "outputs": hashes}
            _write_json(state_path, state)
            statuses.append(StageStatus(stage.name, "ran", hashes))
        except Exception as exc:  # noqa: BLE001 - reported per stage
            logger.error("stage %s failed: %s", stage.name, exc)
            state.pop(stage.name, None)
            _write_json(state_path, state)
            statuses.append(StageStatus(stage.name, "failed", error=f"{type(exc).__name__}: {exc}"))
            failed = True

    if not failed:
        bundle = {
            "config": {k: v for k, v in asdict(cfg).items() if k not in ("corpus", "dictionary", "out", "reference")},
            "inputs": {
                "corpus_sha256": _io.sha256_file(cfg.corpus),
                "dictionary_sha256": _io.sha256_file(cfg.dictionary),
            },
            "version": __version__,
            **sections,
        }
        _write_json(out / "report.json", bundle)
    manifest = build_manifest(out)
    if not failed:
        _write_json(out / "manifest.json", {"files": manifest})
    return RunReport(statuses, manifest, str(out))
