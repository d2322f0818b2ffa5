"""Command-line surface: generators, verifiers, the sequencing pipeline, the
gadget printer, connector counting, tilings, exact search, and the threshold
scanner.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 stage failure,
5 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import absorber, connect, oracle, pipeline, sequencing, tiling
from .errors import GraphFormatError, GraphValidationError, HampowError
from .graphs import (
    Config,
    MultipartiteGraph,
    balanced_sizes,
    degree_profile,
    gen_extremal,
    gen_random,
    load_graph,
    save_graph,
)
from .paths import VertexSeq, verify_ham_power_cycle_report

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_STAGE = 4
EXIT_BUDGET = 5


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational p/q: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _fraction_list(text: str) -> list[Fraction]:
    return [_fraction(x) for x in text.split(",") if x]


def _emit(args, payload: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")


def _read_graph(args) -> MultipartiteGraph:
    with open(args.graph, "rb") as fh:
        return load_graph(fh)


def _config(args) -> Config:
    overrides = {}
    for name in ("gamma", "sigma", "beta", "nu", "alpha"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return Config.default(args.r, seed=args.seed, **overrides)


def _seq_arg(text: str) -> tuple[int, ...]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = _int_list(text)
    return tuple(int(v) for v in data)


def _add_common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    if graph:
        p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--r", type=int, required=True, help="power parameter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=_fraction, default=None, help="rational p/q")
    p.add_argument("--sigma", type=_fraction, default=None, help="rational p/q")
    p.add_argument("--beta", type=_fraction, default=None, help="rational p/q")
    p.add_argument("--nu", type=_fraction, default=None, help="rational p/q")
    p.add_argument("--alpha", type=_fraction, default=None, help="rational p/q")
    p.add_argument("--out", default=None, help="write output to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hampow")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sizes", type=_int_list, required=True, help="comma-separated part sizes")
    p.add_argument("--delta", type=_fraction, default=None, help="edge probability p/q")
    p.add_argument("--extremal", action="store_true", help="planted independent-set instance")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="check a spanning power-cycle")
    _add_common(p)
    p.add_argument("--cycle", required=True, help="JSON int array or comma list")

    p = sub.add_parser("sequence", help="run the partition-and-sequence pipeline")
    _add_common(p)
    p.add_argument("--relaxed", action="store_true")

    p = sub.add_parser("absorber", help="print the gadget routings")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--print", action="store_true", dest="do_print")
    p.add_argument("--out", default=None)

    p = sub.add_parser("connect", help="count and sample connecting walks")
    _add_common(p)
    p.add_argument("--p1", type=_seq_arg, required=True)
    p.add_argument("--p2", type=_seq_arg, required=True)
    p.add_argument("--ell", type=int, default=None)

    p = sub.add_parser("tile", help="fractional (and optionally integral) tiling")
    _add_common(p)
    p.add_argument("--integral", action="store_true")
    p.add_argument("--cover", type=_fraction, default=None, metavar="ALPHA",
                   help="also cover by terminated paths, leftover at most ALPHA*n")

    p = sub.add_parser("search", help="exact spanning power-cycle search")
    _add_common(p)
    p.add_argument("--budget", type=int, default=2_000_000)

    p = sub.add_parser("scan", help="threshold scan over random instances")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated n values")
    p.add_argument("--delta", type=_fraction_list, required=True, help="comma-separated p/q")
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default=None)

    p = sub.add_parser("pipeline", help="end-to-end cycle construction")
    _add_common(p)
    p.add_argument("--mode", choices=["constructive", "oracle", "auto"], default="auto")
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--relaxed", action="store_true")

    return ap


def cmd_gen(args) -> int:
    if args.extremal:
        if args.r is None:
            raise GraphValidationError("--extremal requires --r")
        g = gen_extremal(args.k, args.sizes, args.r)
    else:
        if args.delta is None:
            raise GraphValidationError("need --delta or --extremal")
        g = gen_random(args.k, args.sizes, args.delta, args.seed)
    if args.name:
        g = MultipartiteGraph(g.parts, g.adj, args.name)
    _emit(args, save_graph(g))
    return EXIT_OK


def cmd_verify(args) -> int:
    g = _read_graph(args)
    ok, reason, index = verify_ham_power_cycle_report(g, _seq_arg(args.cycle), args.r)
    _emit(args, json.dumps({"ok": ok, "reason": reason, "index": index}))
    return EXIT_OK if ok else EXIT_STAGE


def cmd_sequence(args) -> int:
    g = _read_graph(args)
    cfg = _config(args)
    order = sorted(range(g.k), key=lambda i: (-len(g.parts[i]), i))
    res = sequencing.run_sequencing(g.with_parts(order), cfg, relaxed=args.relaxed)
    doc = {"plan": res.plan.to_json_dict(), "report": res.report.to_json_dict()}
    _emit(args, json.dumps(doc))
    return EXIT_OK if res.report.ok else EXIT_STAGE


def cmd_absorber(args) -> int:
    template = absorber.build_gadget(args.r)
    _emit(args, json.dumps(template.to_json_dict()))
    return EXIT_OK


def cmd_connect(args) -> int:
    g = _read_graph(args)
    cfg = _config(args)
    r = args.r
    ell = args.ell if args.ell is not None else connect.default_connector_length(r)
    p1 = VertexSeq(args.p1, r)
    p2 = VertexSeq(args.p2, r)
    terminal = set(p1.vertices) | set(p2.vertices)
    u_sets = [[v for v in g.parts[i] if v not in terminal] for i in range(r)]
    total, _ = connect.count_connecting_walks(g, u_sets, p1, p2, ell)
    doc: dict = {"count": total, "connector": None}
    if total:
        try:
            q = connect.find_connector(g, u_sets, p1, p2, ell, terminal, cfg)
            doc["connector"] = q.to_json()
        except HampowError:
            pass
    _emit(args, json.dumps(doc))
    return EXIT_OK


def cmd_tile(args) -> int:
    g = _read_graph(args)
    ft = tiling.fractional_tiling(g, args.r)
    doc: dict = {
        "optimum": str(ft.value),
        "perfect": ft.is_perfect,
        "dual": [str(y) for y in ft.dual],
        "tiling": ft.to_json_list(),
    }
    if args.integral:
        integral = tiling.perfect_tiling_bruteforce(g, args.r)
        doc["integral"] = [list(K) for K in integral] if integral else None
    if args.cover is not None:
        cover = tiling.cover_with_paths(g, args.r, args.cover, _config(args))
        doc["cover"] = cover.to_json_dict()
    _emit(args, json.dumps(doc))
    return EXIT_OK


def cmd_search(args) -> int:
    g = _read_graph(args)
    res = oracle.ham_power_cycle_exists(g, args.r, oracle.SearchBudget(args.budget))
    _emit(args, json.dumps(res.to_json_dict()))
    if res.answer == oracle.BUDGET_EXCEEDED:
        return EXIT_BUDGET
    return EXIT_OK


@dataclass(frozen=True)
class ScanRow:
    n: int
    k: int
    r: int
    sizes: tuple[int, ...]
    target_delta: Fraction
    measured_delta: Fraction
    answer: str
    nodes: int
    seed: int

    def __post_init__(self):
        if not 0 <= self.measured_delta <= 1:
            raise GraphValidationError("measured delta outside [0,1]")
        if self.answer not in (oracle.YES, oracle.NO, oracle.BUDGET_EXCEEDED):
            raise GraphValidationError(f"unknown answer {self.answer!r}")

    def to_csv(self) -> list[str]:
        return [
            str(self.n),
            str(self.k),
            str(self.r),
            ",".join(str(s) for s in self.sizes),
            str(self.target_delta),
            str(self.measured_delta),
            self.answer,
            str(self.nodes),
            str(self.seed),
        ]


def _scan_cell(task) -> list[str]:
    n, k, r, sizes, delta, node_limit, seed = task
    g = gen_random(k, sizes, delta, seed)
    measured = degree_profile(g).delta_p
    res = oracle.ham_power_cycle_exists(g, r, oracle.SearchBudget(node_limit))
    row = ScanRow(
        n=n,
        k=k,
        r=r,
        sizes=tuple(sizes),
        target_delta=delta,
        measured_delta=measured,
        answer=res.answer,
        nodes=res.nodes,
        seed=seed,
    )
    return row.to_csv()


def cmd_scan(args) -> int:
    """One row per (n, delta, sample): generate, measure, run the oracle.

    Cells are independent, so they fan out over worker processes with --jobs;
    rows are always emitted in cell order, byte-identical for a given seed.
    """
    tasks = []
    counter = 0
    for n in args.n:
        sizes = balanced_sizes(n, args.k)
        for delta in args.delta:
            for _ in range(args.samples):
                tasks.append(
                    (n, args.k, args.r, sizes, delta, args.budget, args.seed + counter)
                )
                counter += 1
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_scan_cell, tasks))
    else:
        rows = [_scan_cell(t) for t in tasks]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["n", "k", "r", "sizes", "target_delta", "measured_delta", "answer", "nodes", "seed"]
    )
    writer.writerows(rows)
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_pipeline(args) -> int:
    g = _read_graph(args)
    cfg = _config(args)
    rep = pipeline.run_pipeline(
        g,
        cfg,
        mode=args.mode,
        relaxed=args.relaxed,
        budget=oracle.SearchBudget(args.budget),
    )
    _emit(args, json.dumps(rep.to_json_dict()))
    if rep.ok:
        return EXIT_OK
    if rep.budget_exceeded:
        return EXIT_BUDGET
    return EXIT_STAGE


_COMMANDS = {
    "gen": cmd_gen,
    "verify": cmd_verify,
    "sequence": cmd_sequence,
    "absorber": cmd_absorber,
    "connect": cmd_connect,
    "tile": cmd_tile,
    "search": cmd_search,
    "scan": cmd_scan,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except GraphFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GraphValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except HampowError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
