"""Command-line interface: ``probgraphon <verb> [options]``.

Results go to stdout as canonical JSON, diagnostics to stderr. Exit code
0 on success, 2 on input errors, 3 when a size guard refuses the job.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import io as jio
from .cutmetric import (
    MetricChoice,
    compress,
    cut_distance,
    cut_norm_exact,
    cut_norm_heuristic,
    cut_norm_upper_bound,
    delta_cut,
    lift_witness,
    weak_regularity_partition,
)
from .exceptions import CapabilityLimitError, InputError
from .graphon import StepGraphon, stepping
from .harness import (
    default_pair,
    random_measure_graph,
    verify_counting,
    verify_graph_close,
    verify_norm_inequalities,
    verify_sampling_lemma_1,
    verify_sampling_lemma_2,
    verify_stepping,
)
from .homdensity import hom_density_exact, hom_density_graph, hom_density_mc
from .measures import WeightSpace
from .rng import make_rng
from .sampling import sample_g, sample_h

logger = logging.getLogger("probgraphon")

SUITES = ("norms", "stepping", "counting", "sampling1", "sampling2", "graph-close")


def _spaces(args):
    if not getattr(args, "spaces", None):
        return None
    table = jio.load_file(args.spaces)
    if not isinstance(table, dict):
        raise InputError("the spaces file must map names to weight spaces")
    return {name: jio.space_from_json(obj) for name, obj in table.items()}


def _graphon(path, args) -> StepGraphon:
    return jio.graphon_from_json(jio.load_file(path), _spaces(args))


def _metric(args, space: WeightSpace) -> MetricChoice:
    if args.metric == "fnorm":
        fam = jio.family_from_json(jio.load_file(args.family) if args.family else None, space)
        return MetricChoice.fnorm(fam)
    return MetricChoice(args.metric)


def _family(args, space):
    return jio.family_from_json(jio.load_file(args.family) if args.family else None, space)


# ---------------------------------------------------------------------------
# verbs


def cmd_dist(args) -> dict:
    spaces = _spaces(args)
    mu = jio.measure_from_json(jio.load_file(args.mu), spaces)
    nu = jio.measure_from_json(jio.load_file(args.nu), spaces)
    if mu.space != nu.space:
        raise InputError("measures live on different weight spaces")
    return {"metric": args.metric, "distance": _metric(args, mu.space).distance(mu, nu)}


def cmd_cutnorm(args) -> dict:
    d = _graphon(args.graphon, args)
    metric = _metric(args, d.space)
    c = compress(d)
    if args.mode == "exact":
        value, wit = cut_norm_exact(c, metric, args.max_blocks)
    elif args.mode == "heuristic":
        value, wit = cut_norm_heuristic(c, metric, args.restarts, args.seed)
    else:
        raise InputError(f"cutnorm takes --mode exact or heuristic, not {args.mode!r}")
    return {
        "metric": args.metric,
        "mode": args.mode,
        "value": value,
        "upper_bound": cut_norm_upper_bound(c, metric),
        "witness": _lift_witness(d, c, wit),
    }


def _lift_witness(d: StepGraphon, c: StepGraphon, wit) -> dict:
    """Express a witness on the compressed kernel in ``d``'s own blocks."""
    rows, cols = lift_witness(d, c, wit)
    return {**jio.witness_to_json(wit), "rows": sorted(rows), "cols": sorted(cols)}


def cmd_cutdist(args) -> dict:
    u, w = _graphon(args.u, args), _graphon(args.w, args)
    if args.mode not in ("exact", "heuristic"):
        raise InputError(f"cutdist takes --mode exact or heuristic, not {args.mode!r}")
    value, wit = cut_distance(u, w, _metric(args, u.space), args.mode, args.restarts, args.seed, args.max_blocks)
    return {"metric": args.metric, "mode": args.mode, "value": value, "witness": jio.witness_to_json(wit)}


def cmd_delta(args) -> dict:
    u, w = _graphon(args.u, args), _graphon(args.w, args)
    mode = args.mode if args.mode in ("brute", "anneal") else None
    if mode is None:
        raise InputError(f"delta takes --mode brute or anneal, not {args.mode!r}")
    res = delta_cut(
        u, w, _metric(args, u.space), mode, args.granularity, args.seed, args.iterations, args.max_blocks,
        args.restarts,
    )
    return {
        "metric": args.metric,
        "mode": mode,
        "value": res.value,
        "permutation": list(res.permutation),
        "granularity": res.granularity,
        "exact_inner": res.exact_inner,
    }


def cmd_sample(args) -> dict:
    w = _graphon(args.graphon, args)
    if args.measure_graph:
        h, types = sample_h(w, args.k, args.seed)
        return {"measure_graph": jio.measure_graph_to_json(h), "types": types.tolist()}
    g = sample_g(w, args.k, args.seed, args.symmetric)
    return {"graph": jio.graph_to_json(g)}


def cmd_homdens(args) -> dict:
    spaces = _spaces(args)
    if (args.graphon is None) == (args.graph is None):
        raise InputError("give exactly one of --graphon and --graph")
    target = jio.load_file(args.graphon or args.graph)
    if args.graphon:
        w = jio.graphon_from_json(target, spaces)
        space = w.space
    else:
        g = jio.graph_from_json(target, spaces)
        space = g.space
    f = jio.decorated_from_json(jio.load_file(args.decorated), space, _family(args, space))
    if args.graph:
        return {"mode": "exact", "density": hom_density_graph(f, g)}
    if args.mode == "exact":
        return {"mode": "exact", "density": hom_density_exact(f, w)}
    if args.mode == "mc":
        est, se = hom_density_mc(f, w, args.samples, args.seed)
        return {"mode": "mc", "density": est, "stderr": se, "samples": args.samples}
    raise InputError(f"homdens takes --mode exact or mc, not {args.mode!r}")


def cmd_regularize(args) -> dict:
    w = _graphon(args.graphon, args)
    fam = _family(args, w.space)
    pmap, stepped, err = weak_regularity_partition(
        w, args.target_k, fam, args.max_exact_blocks, args.restarts, args.seed
    )
    upper = cut_norm_upper_bound(compress(w - stepping(w, pmap, keep_grid=True)), MetricChoice.fnorm(fam))
    return {
        "classes": [list(c) for c in pmap.classes],
        "labels": pmap.labels.tolist(),
        "error": err,
        "error_upper_bound": upper,
        "stepped": jio.graphon_to_json(stepped),
    }


def cmd_verify(args) -> dict:
    if args.suite == "norms":
        rep = verify_norm_inequalities(args.trials, args.seed)
    elif args.suite == "stepping":
        rep = verify_stepping(args.trials, args.seed)
    elif args.suite == "counting":
        rep = verify_counting(args.trials, args.seed)
    elif args.suite == "sampling1":
        u, w = (_graphon(args.u, args), _graphon(args.w, args)) if args.u and args.w else default_pair()
        rep = verify_sampling_lemma_1(u, w, args.k or 1000, args.trials, args.seed)
    elif args.suite == "sampling2":
        w = _graphon(args.w, args) if args.w else default_pair()[1]
        try:
            ks = [int(x) for x in args.k_list.split(",")] if args.k_list else [16, 64, 256]
        except ValueError:
            raise InputError(f"bad --k-list {args.k_list!r}") from None
        rep = verify_sampling_lemma_2(w, ks, args.trials, args.seed)
    elif args.suite == "graph-close":
        if args.h:
            h = jio.measure_graph_from_json(jio.load_file(args.h), _spaces(args))
        else:
            space = WeightSpace.discrete((0, 1))
            h = random_measure_graph(make_rng(args.seed, 2**32), space, args.k or 16)
        rep = verify_graph_close(h, args.trials, args.seed)
    else:
        raise InputError(f"unknown suite {args.suite!r}")
    if args.out:
        rep.write_csv(args.out)
    return {"aggregate": rep.aggregate}


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, metric=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spaces", help="JSON file mapping names to weight spaces")
    if metric:
        p.add_argument("--metric", choices=("prohorov", "kr", "fm", "fnorm"), default="fnorm")
        p.add_argument("--family", help="test family JSON for --metric fnorm (default: indicators)")
        p.add_argument("--restarts", type=int, default=20)
        p.add_argument("--max-blocks", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probgraphon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("dist", help="distance between two measures")
    _common(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("cutnorm", help="cut norm of a signed kernel")
    _common(p)
    p.add_argument("--graphon", required=True)
    p.add_argument("--mode", default="exact")
    p.set_defaults(func=cmd_cutnorm, max_blocks_default=14)

    p = sub.add_parser("cutdist", help="labeled cut distance")
    _common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--w", required=True)
    p.add_argument("--mode", default="exact")
    p.set_defaults(func=cmd_cutdist)

    p = sub.add_parser("delta", help="unlabeled cut distance over block relabelings")
    _common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--w", required=True)
    p.add_argument("--mode", default="brute")
    p.add_argument("--granularity", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("sample", help="draw G(k, W) or H(k, W)")
    _common(p, metric=False)
    p.add_argument("--graphon", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--measure-graph", action="store_true", help="emit H(k, W) instead of G(k, W)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("homdens", help="homomorphism density of a decorated graph")
    _common(p, metric=False)
    p.add_argument("--decorated", required=True)
    p.add_argument("--graphon")
    p.add_argument("--graph")
    p.add_argument("--family")
    p.add_argument("--mode", default="exact")
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_homdens)

    p = sub.add_parser("regularize", help="weak regularity partition")
    _common(p, metric=False)
    p.add_argument("--graphon", required=True)
    p.add_argument("--target-k", type=int, required=True)
    p.add_argument("--family")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-exact-blocks", type=int, default=14)
    p.set_defaults(func=cmd_regularize)

    p = sub.add_parser("verify", help="run a verification suite")
    _common(p, metric=False)
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", help="CSV report path")
    p.add_argument("--u")
    p.add_argument("--w")
    p.add_argument("--h", help="measure graph JSON for graph-close")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--k-list", default=None, help="comma-separated k values for sampling2")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    if hasattr(args, "max_blocks") and args.max_blocks is None:
        args.max_blocks = getattr(args, "max_blocks_default", None)
    try:
        if getattr(args, "seed", 0) < 0:
            raise InputError("--seed must be non-negative")
        result = args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except CapabilityLimitError as exc:
        print(f"capability limit: {exc}", file=sys.stderr)
        return 3
    try:
        text = jio.dumps(result)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
