"""Command-line surface: fan inspection, validation, complexes, embeddings, counts.

All output is deterministic for a fixed invocation; JSON goes to --out or
standard output, human-readable summaries to standard error.  Exit codes:
0 success, 2 validation failure, 3 generic-position retries exhausted,
64 usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .counting import (
    Constraint,
    ConstraintConfig,
    CodimensionMismatchError,
    CountProblem,
    NonGenericError,
    count,
    count_result_to_json,
    generate_constraints,
    kontsevich_oracle,
)
from .exactmath import IntMatrix, rational_from_string
from .figures import fan_svg
from .maps import DiscreteData, map_from_json, validate
from .moduli import (
    assemble_complex,
    complex_to_json,
    embedding_to_json,
    gkm_embedding,
)
from .polyhedral import NAMED_FANS, fan_to_json, load_fan


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(64)


def _emit(data: dict, out: str | None) -> None:
    text = json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_contacts(spec: str, fan) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """Shorthand like p2-degree:3, p1xp1-bidegree:1,1, or a JSON file path."""
    if spec.startswith("p2-degree:"):
        d = int(spec[len("p2-degree:") :].split("-")[0])
        dirs = [(1, 0), (0, 1), (-1, -1)]
        return tuple((i + 1, dirs[i // d]) for i in range(3 * d))
    if spec.startswith("p1-degree:"):
        d = int(spec[len("p1-degree:") :].split("-")[0])
        return tuple(
            (i + 1, ((1,) if i < d else (-1,))) for i in range(2 * d)
        )
    if spec.startswith("p1xp1-bidegree:"):
        a, b = (int(x) for x in spec[len("p1xp1-bidegree:") :].split("-")[0].split(","))
        dirs = [(1, 0)] * a + [(-1, 0)] * a + [(0, 1)] * b + [(0, -1)] * b
        return tuple((i + 1, d) for i, d in enumerate(dirs))
    with open(spec) as fh:
        data = json.load(fh)
    out = []
    for i, entry in enumerate(data):
        if isinstance(entry[0], int) and isinstance(entry[1], list):
            out.append((entry[0], tuple(entry[1])))
        else:
            out.append((i + 1, tuple(entry)))
    return tuple(out)


def _parse_subspace(spec: str, rank: int):
    """BASIS[;TRANSLATION] with basis vectors separated by '|', e.g. '1,1;3/2,0'."""
    parts = spec.split(";")
    vectors = [
        [int(x) for x in vec.split(",")] for vec in parts[0].split("|") if vec
    ]
    if any(len(v) != rank for v in vectors):
        raise ValueError(f"subspace vectors must have {rank} coordinates")
    basis = IntMatrix(
        rank, len(vectors), tuple(vectors[j][i] for i in range(rank) for j in range(len(vectors)))
    )
    translation = None
    if len(parts) > 1 and parts[1]:
        translation = tuple(rational_from_string(x) for x in parts[1].split(","))
        if len(translation) != rank:
            raise ValueError(f"translation must have {rank} coordinates")
    return basis, translation


def _gamma_from_args(args, fan) -> tuple[DiscreteData, dict, dict]:
    contacts = _parse_contacts(args.contacts, fan) if args.contacts else ()
    n = len(contacts)
    points = getattr(args, "points", 0) or 0
    subspace_specs = getattr(args, "subspace", None) or []
    m = points + len(subspace_specs)
    trivial = tuple(range(n + 1, n + 1 + m))
    gamma = DiscreteData(fan, contacts, trivial)
    subspaces = {}
    overrides = {}
    for k, spec in enumerate(subspace_specs):
        basis, translation = _parse_subspace(spec, fan.rank)
        label = n + points + 1 + k
        subspaces[label] = basis
        if translation is not None:
            overrides[label] = translation
    return gamma, subspaces, overrides


def _build_problem(args, fan, seed: int) -> CountProblem:
    gamma, subspaces, overrides = _gamma_from_args(args, fan)
    config = generate_constraints(gamma, subspaces, seed, args.height_bound)
    if overrides:
        constraints = tuple(
            Constraint(c.label, c.subspace, overrides.get(c.label, c.translation))
            for c in config.constraints
        )
        config = ConstraintConfig(constraints, config.seed, config.height_bound)
    return CountProblem(fan, gamma, config)


def _cmd_fan(args) -> int:
    fan = load_fan(args.name if args.name else args.infile)
    _emit(fan_to_json(fan), args.out)
    return 0


def _cmd_validate(args) -> int:
    with (open(args.infile) if args.infile else sys.stdin) as fh:
        data = json.load(fh)
    fan = load_fan(args.fan) if args.fan else None
    report = validate(map_from_json(data, fan))
    _emit(
        {
            "schema": "tropcount/1",
            "kind": "validation",
            "valid": report.valid,
            "violations": [
                {"condition": v.condition, "detail": v.detail} for v in report.violations
            ],
        },
        args.out,
    )
    return 0 if report.valid else 2


def _cmd_complex(args) -> int:
    fan = load_fan(args.fan)
    gamma, _, _ = _gamma_from_args(args, fan)
    cx = assemble_complex(gamma)
    _emit(complex_to_json(cx), args.out)
    sys.stderr.write(f"f-vector = {list(cx.f_vector())}\n")
    if args.svg:
        emb = gkm_embedding(cx, args.root)
        if emb.ambient_rank != 2:
            sys.stderr.write("svg output needs an embedding of ambient rank 2\n")
            return 2
        with open(args.svg, "w") as fh:
            fh.write(fan_svg(emb.to_fan(), title=f"embedded fan ({fan.name})"))
    return 0


def _cmd_embed(args) -> int:
    fan = load_fan(args.fan)
    gamma, _, _ = _gamma_from_args(args, fan)
    emb = gkm_embedding(assemble_complex(gamma), args.root)
    _emit(embedding_to_json(emb), args.out)
    return 0


def _cmd_count(args) -> int:
    fan = load_fan(args.fan)
    seed = args.seed
    for attempt in range(args.retries + 1):
        problem = _build_problem(args, fan, seed)
        try:
            result = count(problem, threads=args.threads)
        except NonGenericError as exc:
            sys.stderr.write(f"seed {seed} is not generic ({exc}); retrying\n")
            seed += 1
            continue
        _emit(count_result_to_json(problem, result), args.out)
        sys.stderr.write(
            f"degree = {result.total} (types: {len(result.contributions)}, seed: {seed})\n"
        )
        return 0
    sys.stderr.write(f"gave up after {args.retries + 1} non-generic seeds\n")
    return 3


def _cmd_oracle(args) -> int:
    if args.which != "kontsevich":
        raise ValueError(f"unknown oracle {args.which!r}")
    sys.stdout.write(f"{kontsevich_oracle(args.degree)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tropcount", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fan", help="emit a fan in canonical JSON")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--name", choices=sorted(NAMED_FANS))
    group.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fan)

    p = sub.add_parser("validate", help="check a tropical stable map")
    p.add_argument("--in", dest="infile")
    p.add_argument("--fan")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_validate)

    for name, fn in (("complex", _cmd_complex), ("embed", _cmd_embed)):
        p = sub.add_parser(name, help=f"{name} of the moduli of tropical stable maps")
        p.add_argument("--fan", required=True)
        p.add_argument("--contacts")
        p.add_argument("--points", type=int, default=0)
        p.add_argument("--subspace", action="append")
        p.add_argument("--root", type=int, default=1)
        p.add_argument("--out")
        if name == "complex":
            p.add_argument("--svg")
        p.set_defaults(func=fn)

    p = sub.add_parser("count", help="degree of the constrained evaluation map")
    p.add_argument("--fan", required=True)
    p.add_argument("--contacts", required=True)
    p.add_argument("--points", type=int, default=0)
    p.add_argument("--subspace", action="append")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height-bound", type=int, default=32)
    p.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("TROPCOUNT_THREADS", "1")),
    )
    p.add_argument("--retries", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("oracle", help="independent enumerative oracles")
    p.add_argument("which", choices=["kontsevich"])
    p.add_argument("degree", type=int)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, CodimensionMismatchError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
