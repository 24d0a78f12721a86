"""Command-line front end: rank, mine, synth, and experiment subcommands.

Exit codes: 0 success, 1 input or parse failure, 2 solver non-convergence
(partial output is still flushed with error markers), 3 usage errors.
Errors print as a single machine-parsable line on stderr. Identical
invocations produce byte-identical outputs: query order, float formatting
(6 significant digits in CSV, full precision in JSON), and generator
seeding are all pinned.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .dataset import Dataset, Itemset, ParseError, parse_dense, parse_fimi, to_dense, to_fimi
from .derivability import mine_andi
from .experiment import (
    MEASURES,
    Table,
    correlation_table,
    flexible_win_table,
    monotonicity_table,
    resolve_threads,
    run_queries,
    significance_table,
    used_itemset_ratios,
)
from .family import ItemsetFamily, format_family, parse_family
from .maxent import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, SolverError
from .rank import DEFAULT_ALPHA, MODEL_KINDS, rank_normalized
from .synth import GenConfig, gen_copy, gen_ind

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_USAGE = 3

RANK_COLUMNS = ("itemset", "size", "frequency", "model", "raw_nats", "dof", "normalized")


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(f"usage: {message}", EXIT_USAGE)


def _fail(category: str, message: str, code: int) -> int:
    print(f"itemrank: error: {category}: {message}", file=sys.stderr)
    return code


def _read_dataset(args) -> Dataset:
    path = Path(args.input)
    try:
        text = path.read_text()
    except OSError as exc:
        raise _CliError(f"cannot read {path}: {exc.strerror}", EXIT_INPUT) from None
    try:
        d = parse_dense(text) if args.format == "dense" else parse_fimi(text)
    except ParseError as exc:
        raise _CliError(f"{path}: {exc}", EXIT_INPUT) from None
    if getattr(args, "max_cols", None):
        d = d.select_top_columns(args.max_cols)
    if getattr(args, "max_rows", None):
        d = d.take_rows(args.max_rows)
    return d


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _parse_models(spec: str) -> list[str]:
    models = [m.strip() for m in spec.split(",") if m.strip()]
    for m in models:
        if m not in MODEL_KINDS:
            raise _CliError(f"unknown model {m!r}; choose from {MODEL_KINDS}", EXIT_USAGE)
    return models


def _resolve_queries(args, d: Dataset) -> list[Itemset]:
    if args.family:
        try:
            text = Path(args.family).read_text()
        except OSError as exc:
            raise _CliError(f"cannot read {args.family}: {exc.strerror}", EXIT_INPUT) from None
        id_map = {raw: j for j, raw in enumerate(d.item_ids)}
        try:
            fam = parse_family(text, id_to_index=id_map)
        except (ValueError, KeyError) as exc:
            raise _CliError(f"{args.family}: {exc}", EXIT_INPUT) from None
        return list(fam.members)
    if args.query is None:
        return []
    if args.query.strip() == "all":
        if d.k_attrs > 12:
            raise _CliError(
                f"--query all over {d.k_attrs} attributes is too large", EXIT_USAGE
            )
        full = d.full_itemset()
        return sorted(full.subsets(nonempty=True))
    out = []
    for group in args.query.split(";"):
        group = group.strip()
        if not group:
            continue
        try:
            ids = [int(tok) for tok in group.split()]
        except ValueError:
            raise _CliError(f"malformed query itemset {group!r}", EXIT_INPUT) from None
        try:
            out.append(d.itemset_from_ids(ids))
        except ValueError as exc:
            raise _CliError(str(exc), EXIT_INPUT) from None
    return sorted(set(out))


_RANK_WORKER: tuple | None = None


def _rank_init(d, models, tol, max_sweeps):
    global _RANK_WORKER
    _RANK_WORKER = (d, models, tol, max_sweeps)


def _rank_one_bits(bits: int):
    d, models, tol, max_sweeps = _RANK_WORKER
    return _rank_one(d, Itemset(bits=bits), models, tol, max_sweeps)


def _rank_one(d, g, models, tol, max_sweeps):
    """Records for one itemset across models; solver failures become NaN rows."""
    records = []
    failed = False
    for kind in models:
        base = {
            "itemset": d.render_itemset(g),
            "size": g.size,
            "frequency": d.cover_count(g) / d.m_rows,
            "model": kind,
        }
        try:
            r = rank_normalized(g, kind, d, tol=tol, max_sweeps=max_sweeps)
            base.update(raw_nats=r.raw, dof=r.dof, normalized=r.normalized)
        except SolverError:
            failed = True
            base.update(raw_nats=math.nan, dof=math.nan, normalized=math.nan)
        records.append(base)
    return records, failed


def _records_csv(records) -> str:
    lines = [",".join(RANK_COLUMNS)]
    for rec in records:
        cells = []
        for col in RANK_COLUMNS:
            v = rec[col]
            if isinstance(v, float):
                cells.append("nan" if math.isnan(v) else format(v, ".6g"))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _records_json(records) -> str:
    def clean(rec):
        return {
            k: ("nan" if isinstance(v, float) and math.isnan(v) else v)
            for k, v in rec.items()
        }

    return json.dumps([clean(r) for r in records], indent=2) + "\n"


def cmd_rank(args) -> int:
    d = _read_dataset(args)
    models = _parse_models(args.model)
    queries = _resolve_queries(args, d)
    threads = resolve_threads(args.threads)

    if len(queries) > 1 and threads > 1:
        with ProcessPoolExecutor(
            max_workers=threads,
            initializer=_rank_init,
            initargs=(d, models, args.tol, args.max_sweeps),
        ) as pool:
            chunk = max(1, len(queries) // (4 * threads))
            outcomes = list(
                pool.map(_rank_one_bits, [g.bits for g in queries], chunksize=chunk)
            )
    else:
        outcomes = [_rank_one(d, g, models, args.tol, args.max_sweeps) for g in queries]

    records = [rec for recs, _ in outcomes for rec in recs]
    any_failed = any(failed for _, failed in outcomes)
    text = _records_json(records) if args.out_format == "json" else _records_csv(records)
    _write_text(args.out, text)
    if any_failed:
        print("itemrank: error: solver: some queries did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_mine(args) -> int:
    d = _read_dataset(args)
    fam = mine_andi(d, n=args.n, max_size=args.max_size)
    _write_text(args.out, format_family(fam, item_ids=d.item_ids))
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = GenConfig(k_attrs=args.k, m_rows=args.m, seed=args.seed)
    d = gen_ind(cfg) if args.gen == "ind" else gen_copy(cfg)
    try:
        text = to_fimi(d) if args.out_format == "fimi" else to_dense(d)
    except ValueError as exc:
        raise _CliError(str(exc), EXIT_INPUT) from None
    _write_text(args.out, text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.input is not None:
        d = _read_dataset(args)
        source = {"input": args.input, "format": args.format}
    else:
        k = args.k if args.k is not None else (100 if args.paper_scale else 20)
        m = args.m if args.m is not None else (5000 if args.paper_scale else 2000)
        cfg = GenConfig(k_attrs=k, m_rows=m, seed=args.seed)
        d = gen_ind(cfg) if args.gen == "ind" else gen_copy(cfg)
        source = {"gen": args.gen, "k": k, "m": m, "seed": args.seed}

    if args.family:
        id_map = {raw: j for j, raw in enumerate(d.item_ids)}
        fam = parse_family(Path(args.family).read_text(), id_to_index=id_map)
        fam = ItemsetFamily.from_dataset(fam.members, d)
    else:
        fam = mine_andi(d, n=args.n, max_size=args.max_size)

    measures = tuple(m.strip() for m in args.measures.split(",") if m.strip())
    for m in measures:
        if m not in MEASURES:
            raise _CliError(f"unknown measure {m!r}; choose from {MEASURES}", EXIT_USAGE)

    threads = resolve_threads(args.threads)
    mm = run_queries(
        d, fam, measures=measures, tol=args.tol, max_sweeps=args.max_sweeps,
        threads=threads,
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables: dict[str, Table] = {"measures": mm.to_table()}
    sig = significance_table(mm, alpha=args.alpha)
    tables["significance"] = sig
    corr = None
    if len(mm) >= 2:
        corr = correlation_table(mm)
        tables["correlations"] = corr
    mono, anti = monotonicity_table(mm, fam)
    tables["monotonicity"] = mono
    tables["anti_monotonicity"] = anti
    tables["flexible_wins"] = flexible_win_table(mm)
    if mm.greedy_families:
        tables["used_ratios"] = used_itemset_ratios(
            sorted(mm.greedy_families.items(), key=lambda kv: kv[0])
        )

    suffix = "json" if args.out_format == "json" else "csv"
    for name, table in tables.items():
        text = table.to_json() if suffix == "json" else table.to_csv()
        (out_dir / f"{name}.{suffix}").write_text(text)
    config = {
        "version": __version__,
        "source": source,
        "n": args.n,
        "max_size": args.max_size,
        "alpha": args.alpha,
        "tol": args.tol,
        "max_sweeps": args.max_sweeps,
        "measures": list(measures),
        "n_queries": len(mm),
    }
    (out_dir / "run_config.json").write_text(json.dumps(config, indent=2) + "\n")

    if args.figures and corr is not None:
        from .report import render_standard_figures

        render_standard_figures(mm, sig, corr, out_dir / "figures")
    if mm.errors:
        print(
            f"itemrank: error: solver: {len(mm.errors)} cells did not converge",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    return EXIT_OK


def _add_common_io(p, needs_input=True):
    if needs_input:
        p.add_argument("--input", required=True, help="dataset file")
        p.add_argument("--format", choices=("fimi", "dense"), default="fimi")
        p.add_argument("--max-rows", type=int, default=None, help="keep first N rows")
        p.add_argument(
            "--max-cols", type=int, default=None, help="keep N most frequent attributes"
        )
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itemrank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"itemrank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="rank itemsets under maxent models")
    _add_common_io(p)
    p.add_argument("--model", default=",".join(MODEL_KINDS),
                   help="comma-separated subset of ind,cov,all,tree,greedy")
    p.add_argument("--query", default=None,
                   help="semicolon-separated itemsets of raw item IDs, or 'all'")
    p.add_argument("--family", default=None, help="query family file")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: ITEMRANK_THREADS or CPU count)")
    p.add_argument("--out-format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("mine", help="mine almost-non-derivable itemsets")
    _add_common_io(p)
    p.add_argument("--n", type=int, default=0, help="width threshold in transactions")
    p.add_argument("--max-size", type=int, default=3)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--gen", choices=("ind", "copy"), required=True)
    p.add_argument("--k", type=int, default=20, help="attribute count")
    p.add_argument("--m", type=int, default=2000, help="row count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--out-format", choices=("fimi", "dense"), default="dense")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="run the full measure analysis")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="dataset file")
    src.add_argument("--gen", choices=("ind", "copy"), help="synthetic source")
    p.add_argument("--format", choices=("fimi", "dense"), default="fimi")
    p.add_argument("--max-rows", type=int, default=None)
    p.add_argument("--max-cols", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-scale", action="store_true",
                   help="default synthetic size 100x5000 instead of 20x2000")
    p.add_argument("--family", default=None, help="query family file (skips mining)")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--measures", default=",".join(MEASURES))
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out-format", choices=("csv", "json"), default="csv")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _CliError as exc:
        category = {EXIT_INPUT: "input", EXIT_USAGE: "usage"}.get(exc.code, "internal")
        return _fail(category, str(exc), exc.code)
    except ParseError as exc:
        return _fail("input", str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
