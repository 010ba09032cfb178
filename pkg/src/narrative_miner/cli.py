"""``narrative-miner`` command line.

Every option can also come from an INI file given with ``--config``: keys in
``[common]`` apply to all subcommands, keys in a section named after the
subcommand apply to it alone, and flags on the command line win. Relative
paths in the file are resolved against the file's directory.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, _io, attribution, corpus as corpus_mod, kernels, lexicon, netcore, pipeline
from . import survival, synthgen, tailfit
from .community import DETECTORS
from .community.partition import concordance, read_reference, write_partition
from .lexicon import DEFAULT_TOPICS

logger = logging.getLogger("narrative_miner")

PATH_KEYS = {
    "input", "out", "corpus", "dict", "dictionary", "dtm", "net", "reference", "labels", "groups", "config",
}


class UsageError(Exception):
    pass


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


def _emit(text: str, out: str | None) -> None:
    if out:
        _io.atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _need(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _topics(args) -> tuple[str, ...]:
    return tuple(args.topics) if getattr(args, "topics", None) else DEFAULT_TOPICS


def _dictionary(args) -> lexicon.TermDictionary:
    return lexicon.load_dictionary(args.dict, _topics(args), args.min_confidence)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return synthgen.stream(seed, *key)


# ---------------------------------------------------------------------------
# handlers


def cmd_ingest(args) -> int:
    _need(args, "input", "out")
    corpus = corpus_mod.ingest(args.input)
    _io.atomic_write_text(args.out, corpus.dumps())
    s = corpus_mod.summarize(corpus)
    print(f"posts={s.posts} likes={s.likes} comments={s.comments} shares={s.shares}", file=sys.stderr)
    return 0


def cmd_summary(args) -> int:
    _need(args, "corpus")
    rows = corpus_mod.summarize(corpus_mod.ingest(args.corpus)).rows()
    _emit(_io.csv_text(("entity", "count"), rows), args.out)
    return 0


def cmd_dtm(args) -> int:
    _need(args, "corpus", "out")
    corpus = corpus_mod.ingest(args.corpus)
    dictionary = _dictionary(args) if args.dict else None
    dtm = lexicon.build_dtm(
        corpus, args.min_occurrences, phrases=dictionary.phrases if dictionary else None
    )
    if dictionary is not None and not args.keep_all_terms:
        dtm = lexicon.restrict_to_dictionary(dtm, dictionary)
    lexicon.write_dtm(args.out, dtm)
    print(f"posts={dtm.shape[0]} terms={dtm.shape[1]}", file=sys.stderr)
    return 0


def cmd_cooccur(args) -> int:
    _need(args, "dtm", "out")
    net = netcore.project_cooccurrence(lexicon.read_dtm(args.dtm))
    netcore.write_network(args.out, net)
    print(f"nodes={net.n_nodes} edges={net.n_edges}", file=sys.stderr)
    return 0


def cmd_backbone(args) -> int:
    _need(args, "net", "out")
    net = netcore.read_network(args.net)
    bb = netcore.extract_backbone(net, args.alpha, args.mode)
    netcore.write_network(args.out, net, bb)
    print(f"edges={net.n_edges} retained={bb.n_retained} alpha={args.alpha}", file=sys.stderr)
    return 0


def cmd_communities(args) -> int:
    _need(args, "net", "out")
    net = netcore.read_network(args.net, retained_only=True)
    part = DETECTORS[args.algo](net)
    reference = read_reference(args.reference, nodes=net.nodes, net=net) if args.reference else None
    write_partition(args.out, part, reference)
    line = f"algorithm={args.algo} communities={len(np.unique(part.membership))} modularity={part.modularity:.6f}"
    if reference is not None:
        line += f" concordance={concordance(part, reference):.6f}"
    print(line, file=sys.stderr)
    return 0


def cmd_label_posts(args) -> int:
    _need(args, "corpus", "dtm", "dict", "out")
    labels = attribution.label_posts(
        corpus_mod.ingest(args.corpus), lexicon.read_dtm(args.dtm), _dictionary(args), args.weighting
    )
    attribution.write_post_labels(args.out, labels)
    counts = attribution.label_counts(labels, _topics(args))
    print(" ".join(f"{k}={v}" for k, v in counts.items()), file=sys.stderr)
    return 0


def _profiles(args):
    return attribution.classify_users(
        corpus_mod.ingest(args.corpus),
        attribution.read_post_labels(args.labels),
        args.threshold,
        _topics(args),
        category=args.category,
        category_threshold=args.category_threshold,
    )


def cmd_classify_users(args) -> int:
    _need(args, "corpus", "labels", "out")
    profiles = _profiles(args)
    attribution.write_user_profiles(args.out, profiles)
    table = attribution.polarization_table(profiles, _topics(args))
    text = _io.csv_text(("topic", "users", "percent"), [(t, n, _io.fmt(p, 6)) for t, n, p in table])
    if args.table:
        _io.atomic_write_text(args.table, text)
    else:
        sys.stderr.write(text)
    return 0


def cmd_mobility_stats(args) -> int:
    _need(args, "corpus", "labels", "out")
    topics = _topics(args)
    profiles = _profiles(args)
    out = Path(args.out)
    corr = attribution.topic_correlations(profiles, topics, args.polarized_only)
    attribution.write_correlations(out / "correlations.csv", corr)
    attribution.write_engagement(
        out / "engagement_quartiles.csv", attribution.engagement_by_topic_count(profiles, len(topics), args.min_likes)
    )
    likes, k = attribution.mobility_data(profiles, args.min_likes)
    _io.write_csv(out / "mobility.csv", ("x", "y"), zip(likes.tolist(), k.tolist()))
    print(f"users={corr.n_users} mobility_rows={len(likes)}", file=sys.stderr)
    return 0


def _read_columns(spec: str, group_by: str | None) -> tuple[str, dict[str, list[int]]]:
    """``path[:column]`` -> metric name and samples per group."""
    path, column = spec, ""
    if not Path(spec).exists() and ":" in spec:
        path, _, column = spec.rpartition(":")
    header, body = _io.read_csv(path)
    if not header:
        raise UsageError(f"{path}: empty file")
    if column and column not in header:
        raise UsageError(f"{path}: no column {column!r}")
    col = header.index(column) if column else len(header) - 1
    gcol = None
    if group_by:
        if group_by not in header:
            raise UsageError(f"{path}: no column {group_by!r}")
        gcol = header.index(group_by)
    groups: dict[str, list[int]] = {}
    for row in body:
        value = row[col].strip()
        if not value or value == "NA":
            continue
        groups.setdefault(row[gcol] if gcol is not None else "all", []).append(int(float(value)))
    return header[col], groups


def cmd_fit_tail(args) -> int:
    _need(args, "input", "out")
    metric, groups = _read_columns(args.input, args.group_by)
    fits, curves = {}, {}
    for k, (g, values) in enumerate(sorted(groups.items())):
        x = np.asarray(values, dtype=np.int64)
        x = x[x > 0]
        try:
            fit = tailfit.fit_power_law(x, min_tail=args.min_tail)
            if args.bootstrap:
                p = tailfit.bootstrap_pvalue(x, fit, args.bootstrap, _rng(args.seed, 40, k))
                fit = tailfit.PowerLawFit(fit.x_min, fit.alpha, fit.n_tail, fit.ks_statistic,
                                          fit.log_likelihood, fit.n, p)
        except tailfit.TailFitError as exc:
            logger.warning("group %s: %s", g, exc)
            fit = None
        fits[(g, metric)] = fit
        if values:
            curves[(g, metric)] = tailfit.ccdf(values)
    tailfit.write_fits(args.out, fits)
    if args.ccdf:
        tailfit.write_ccdf(args.ccdf, curves)
    if args.bootstrap:
        for (g, m), f in sorted(fits.items()):
            if f is not None:
                print(f"{g},{m},p_value={f.p_value:.4f}", file=sys.stderr)
    return 0 if any(f is not None for f in fits.values()) else 1


def cmd_survival(args) -> int:
    _need(args, "corpus", "labels", "out")
    if args.by != "topic":
        raise UsageError("only --by topic is supported")
    corpus = corpus_mod.ingest(args.corpus)
    labels = attribution.read_post_labels(args.labels)
    topics = _topics(args)
    profiles = attribution.classify_users(corpus, labels, args.threshold, topics) if args.unit == "user" else None
    samples = survival.lifetimes(
        corpus, args.unit, labels, profiles, topics, args.censor_horizon, args.exclude_zero
    )
    curves = {g: survival.kaplan_meier(s) for g, s in samples.items() if len(s)}
    survival.write_curves(args.out, curves)
    if args.groups_out:
        survival.write_groups(args.groups_out, samples)
    print(" ".join(f"{g}={len(s)}" for g, s in samples.items()), file=sys.stderr)
    return 0


def cmd_survtest(args) -> int:
    _need(args, "groups")
    samples = survival.read_groups(args.groups)
    res = survival.gehan_wilcoxon(samples, args.weighting, exact=args.exact)
    rows = [[
        "+".join(res.groups), _io.fmt(res.statistic, 10), res.df, _io.fmt(res.p_value, 10), res.method, args.weighting,
    ]]
    _emit(_io.csv_text(("groups", "statistic", "df", "p_value", "method", "weighting"), rows), args.out)
    return 0


def cmd_pom(args) -> int:
    _need(args, "input", "out")
    x, y = pipeline.read_xy(args.input)
    rep = pipeline.pom_report(x, y, args.K, log_covariate=args.log_covariate)
    pipeline.write_pom(args.out, args.table, rep)
    print(
        f"beta={rep['coefficients'][0]['value']:.4f} OR={rep['odds_ratio']['value']:.4f} delta={rep['delta']:.4f}",
        file=sys.stderr,
    )
    return 0


def cmd_synth(args) -> int:
    _need(args, "out")
    if args.preset not in synthgen.PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {sorted(synthgen.PRESETS)}")
    spec = synthgen.PRESETS[args.preset](args.scale)
    synth = synthgen.generate_corpus(spec, args.seed)
    paths = synthgen.write_synthetic(args.out, synth, args.seed)
    c = synth.ledger["counts"]
    print(f"posts={c['posts']} likes={c['likes']} comments={c['comments']} -> {paths['corpus']}", file=sys.stderr)
    return 0


def cmd_pipeline(args) -> int:
    values = {}
    for name in pipeline.PipelineConfig.field_names():
        v = getattr(args, name, None)
        if v is not None:
            values[name] = tuple(v) if isinstance(v, list) else v
    cfg = pipeline.PipelineConfig(**values)
    report = pipeline.run_pipeline(cfg, force=args.force)
    for st in report.stages:
        line = f"{st.name:12s} {st.status}"
        if st.error:
            line += f"  {st.error}"
        print(line, file=sys.stderr)
    print(f"recomputed {report.recomputed} of {len(report.stages)} stages", file=sys.stderr)
    if args.report:
        _io.atomic_write_text(args.report, json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with option defaults")
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--topics", type=_csv_list, help="comma-separated topic labels")

    parser = argparse.ArgumentParser(
        prog="narrative-miner", description="Topic consumption analytics for social media corpora."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, handler, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(handler=handler)
        return p

    p = add("ingest", cmd_ingest, "validate line-delimited post records and write a normalized corpus")
    p.add_argument("--input")
    p.add_argument("--out")

    p = add("summary", cmd_summary, "entity breakdown table as CSV")
    p.add_argument("--corpus")
    p.add_argument("--out", help="file to write (default stdout)")

    p = add("dtm", cmd_dtm, "posts-by-terms count matrix as sparse triplets")
    p.add_argument("--corpus")
    p.add_argument("--dict", help="dictionary CSV term,label[,confidence]")
    p.add_argument("--min-occurrences", type=int, default=500)
    p.add_argument("--min-confidence", type=float, default=0.9)
    p.add_argument("--keep-all-terms", action="store_true", help="do not restrict columns to the dictionary")
    p.add_argument("--out")

    p = add("cooccur", cmd_cooccur, "term co-occurrence network from a matrix")
    p.add_argument("--dtm")
    p.add_argument("--out")

    p = add("backbone", cmd_backbone, "disparity-filter backbone")
    p.add_argument("--net")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mode", choices=("either", "both"), default="either")
    p.add_argument("--out")

    p = add("communities", cmd_communities, "community detection on the retained backbone")
    p.add_argument("--net")
    p.add_argument("--algo", choices=sorted(DETECTORS), default="multilevel")
    p.add_argument("--reference", help="reference labels CSV for the concordance index")
    p.add_argument("--out")

    p = add("label-posts", cmd_label_posts, "majority-rule topic label per post")
    p.add_argument("--corpus")
    p.add_argument("--dtm")
    p.add_argument("--dict")
    p.add_argument("--min-confidence", type=float, default=0.9)
    p.add_argument("--weighting", choices=("presence", "occurrence"), default="presence")
    p.add_argument("--out")

    for name, handler, help_ in (
        ("classify-users", cmd_classify_users, "per-user profiles and polarization"),
        ("mobility-stats", cmd_mobility_stats, "topic correlations, engagement quartiles and mobility data"),
    ):
        p = add(name, handler, help_)
        p.add_argument("--corpus")
        p.add_argument("--labels", help="post labels CSV post_id,label")
        p.add_argument("--threshold", type=float, default=0.95)
        p.add_argument("--category", help="keep users with most likes on pages of this category")
        p.add_argument("--category-threshold", type=float, default=0.95)
        p.add_argument("--out")
        if name == "classify-users":
            p.add_argument("--table", help="polarization table CSV (default stderr)")
        else:
            p.add_argument("--min-likes", type=int, default=4)
            p.add_argument("--polarized-only", action="store_true", help="correlations over polarized users only")

    p = add("fit-tail", cmd_fit_tail, "discrete power-law fits per group")
    p.add_argument("--input", help="CSV path, optionally PATH:COLUMN (default last column)")
    p.add_argument("--group-by", help="column holding the group name")
    p.add_argument("--min-tail", type=int, default=2)
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates for a GoF p-value")
    p.add_argument("--ccdf", help="also write CCDF points here")
    p.add_argument("--out")

    p = add("survival", cmd_survival, "Kaplan-Meier curves of lifetimes per topic")
    p.add_argument("--corpus")
    p.add_argument("--labels")
    p.add_argument("--unit", choices=("user", "post"), default="user")
    p.add_argument("--by", default="topic")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--censor-horizon", type=_opt_float, help="seconds before window end that censor a unit")
    p.add_argument("--exclude-zero", action="store_true")
    p.add_argument("--groups-out", help="also write group,duration,observed rows here")
    p.add_argument("--out")

    p = add("survtest", cmd_survtest, "weighted log-rank test across groups")
    p.add_argument("--groups", help="CSV group,duration[,observed]")
    p.add_argument("--weighting", choices=("gehan", "peto", "logrank"), default="gehan")
    p.add_argument("--exact", action="store_true", help="exact permutation p-value (two small groups)")
    p.add_argument("--out")

    p = add("pom", cmd_pom, "proportional odds model of an ordinal response")
    p.add_argument("--input", help="CSV with columns x,y")
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--log-covariate", action="store_true")
    p.add_argument("--table", help="also write the coefficient table CSV")
    p.add_argument("--out")

    p = add("synth", cmd_synth, "write a synthetic corpus with its ground-truth ledger")
    p.add_argument("--preset", default="paper-shaped")
    p.add_argument("--scale", type=float, default=0.01)
    p.add_argument("--out")

    p = add("pipeline", cmd_pipeline, "run every stage with caching and a manifest")
    p.add_argument("--corpus")
    p.add_argument("--dictionary", "--dict", dest="dictionary")
    p.add_argument("--reference")
    p.add_argument("--out")
    p.add_argument("--min-occurrences", type=int)
    p.add_argument("--min-confidence", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--backbone-mode", choices=("either", "both"))
    p.add_argument("--algorithms", type=_csv_list)
    p.add_argument("--weighting", choices=("presence", "occurrence"))
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-likes", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--log-covariate", action="store_true", default=None)
    p.add_argument("--polarized-only-correlations", action="store_true", default=None)
    p.add_argument("--min-tail", type=int)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--survival-weighting", choices=("gehan", "peto", "logrank"))
    p.add_argument("--censor-horizon", type=_opt_float)
    p.add_argument("--exclude-zero", action="store_true", default=None)
    p.add_argument("--force", action="store_true", help="ignore the stage cache")
    p.add_argument("--report", help="write the run report JSON here")
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _config_defaults(sub: argparse.ArgumentParser, path: Path, section: str) -> dict:
    """Typed defaults for ``sub`` from the ``[common]`` and ``[section]`` parts of an INI file."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path, encoding="utf-8"):
        raise UsageError(f"cannot read config file {path}")
    raw: dict[str, str] = {}
    for name in ("common", section):
        if cp.has_section(name):
            raw.update(cp.items(name))
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    out = {}
    for key, text in raw.items():
        dest = key.strip().replace("-", "_")
        act = actions.get(dest)
        if act is None:
            raise UsageError(f"{path}: unknown option {key!r} for {section}")
        text = text.strip()
        if act.nargs == 0:  # store_true / count
            low = text.lower()
            if low not in _TRUE | _FALSE:
                raise UsageError(f"{path}: {key} expects a boolean")
            out[dest] = low in _TRUE
            continue
        value = act.type(text) if act.type else text
        if dest in PATH_KEYS or dest in ("groups_out", "table", "ccdf", "report"):
            if value and not Path(value).is_absolute():
                value = str((path.parent / value).resolve())
        if act.choices is not None and value not in act.choices:
            raise UsageError(f"{path}: {key} must be one of {sorted(act.choices)}")
        out[dest] = value
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return 2
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        if args.config:
            sub.set_defaults(**_config_defaults(sub, Path(args.config), args.command))
            args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.handler(args)
    except UsageError as exc:
        print(f"narrative-miner {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"narrative-miner {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
