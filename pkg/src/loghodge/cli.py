"""Command line entry point: ``loghodge`` or ``python3 -m loghodge``.

Exit codes: 0 success, 2 failed hypothesis or invalid input (the violated
condition is named), 1 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .hodge import (
    HypothesisError, affine_hodge, e1_page, log_hodge, log_hypotheses, mirror_check,
    render_diamond, twisted_closed_form, twisted_sectors,
)
from .jacobian_koszul import (
    box_points, generic_equation, intro_formula_dims, jacobian_dims_linear,
    koszul_report, r0_dims_box, r_dims_coker,
)
from .lattice_core import (
    dual_polytope, format_polytope_text, is_elementary, is_reflexive, is_simplex,
    is_standard, lattice_points, parse_polytope_text, relint_points,
)
from .tropical_model import (
    ModelError, build_fermat, build_reflexive_boundary, delta0_components, discriminant,
    is_cit, is_ht, load_model, model_to_json,
)


class CommandFailed(Exception):
    """Carries an exit code and message out of a subcommand."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_polytope(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CommandFailed(2, f"cannot read {path}: {exc.strerror}") from None
    return parse_polytope_text(text)


def _read_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise CommandFailed(2, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CommandFailed(2, f"{path}: invalid JSON ({exc})") from None


def _table_lines(rows, header=None):
    lines = [] if header is None else [header]
    for row in rows:
        lines.append("  ".join(str(x) for x in row))
    return lines


# --- subcommands ------------------------------------------------------------------
# Each returns (payload, text lines).

def cmd_polytope(args):
    P = _read_polytope(args.path)
    act = args.action
    if act == "info":
        pts = lattice_points(P)
        payload = {"vertices": [list(v) for v in P.vertices], "dim": P.dim,
                   "ambient_rank": P.ambient_rank, "lattice_points": len(pts),
                   "interior_points": len(relint_points(P)), "simplex": is_simplex(P),
                   "reflexive": P.dim == P.ambient_rank and is_reflexive(P)}
        lines = [f"{k}: {v}" for k, v in payload.items()]
    elif act == "points":
        pts = [list(p) for p in lattice_points(P)]
        payload = {"points": pts, "count": len(pts)}
        lines = [" ".join(map(str, p)) for p in pts] + [f"count: {len(pts)}"]
    elif act == "box":
        if args.level is None:
            raise CommandFailed(2, "box needs a level")
        pts = [list(p) for p in box_points(P, args.level)]
        payload = {"level": args.level, "points": pts, "count": len(pts)}
        lines = [str(len(pts))]
    elif act in ("standard", "elementary"):
        value = is_standard(P) if act == "standard" else is_elementary(P)
        payload = {act: value}
        lines = [str(value).lower()]
    elif act == "dual":
        D = dual_polytope(P)
        payload = {"vertices": [list(v) for v in D.vertices]}
        lines = format_polytope_text(D).splitlines()
    else:
        raise CommandFailed(2, f"unknown action {act}")
    return payload, lines


def cmd_jacobian(args):
    P = _read_polytope(args.path)
    L = args.max_degree if args.max_degree is not None else P.dim
    methods = ["box", "linear", "coker", "intro"] if args.method == "all" else [args.method]
    f = generic_equation(P, seed=args.seed) if set(methods) & {"linear", "coker"} else None
    dims = {}
    for m in methods:
        if m == "box":
            dims[m] = list(r0_dims_box(P, L))
        elif m == "linear":
            dims[m] = list(jacobian_dims_linear(P, f, L))
        elif m == "coker":
            dims[m] = list(r_dims_coker(P, f, L))
        else:
            dims[m] = list(intro_formula_dims(P, L))
    agree = len({tuple(v) for v in dims.values()}) == 1
    payload = {"max_degree": L, "seed": args.seed, "dims": dims, "agreement": agree}
    lines = [f"{m}: {tuple(v)}" for m, v in dims.items()] + [f"agreement: {str(agree).lower()}"]
    if not agree:
        raise CommandFailed(1, "methods disagree: " + "; ".join(lines))
    return payload, lines


def cmd_koszul(args):
    P = _read_polytope(args.path)
    f = generic_equation(P, seed=args.seed)
    rep = koszul_report(P, f, args.twist, args.extra_rank)
    payload = {"twist": rep.twist, "extra_rank": rep.extra_rank, "n": rep.n,
               "term_dims": list(rep.term_dims), "cohomology_dims": list(rep.cohomology_dims),
               "expected": list(rep.expected), "verdict": rep.verdict}
    lines = [f"terms: {rep.term_dims}", f"cohomology: {rep.cohomology_dims}",
             f"expected: {rep.expected}", f"verdict: {'pass' if rep.verdict else 'fail'}"]
    if not rep.verdict:
        raise CommandFailed(2, "koszul_prediction: " + "; ".join(lines))
    return payload, lines


def cmd_build(args):
    if args.kind == "fermat":
        try:
            d = int(args.source)
        except ValueError:
            raise CommandFailed(2, "fermat needs an integer number of components") from None
        model = build_fermat(d)
    else:
        model = build_reflexive_boundary(_read_polytope(args.source))
    data = model_to_json(model)
    if args.output:
        Path(args.output).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    payload = {"model": data, "cells": list(model.cell_counts()), "dim_B": model.dim_B}
    lines = [f"dim B: {model.dim_B}", f"cells by dimension: {model.cell_counts()}"]
    if args.output:
        lines.append(f"written: {args.output}")
    return payload, lines


def _check_ledger(model):
    out = {"kappa_positivity": all(k >= 0 for k in model.kappa.values()),
           "ratio_consistency": True}
    model.a_check
    if model.form == "embedded":
        out["hypersurface_type"] = is_ht(model)
        out["complete_intersection_type"] = is_cit(model)
        bad = log_hypotheses(model)
        for name in ("simplex_hypothesis", "outer_polytopes_simplices", "component_contractibility",
                     "elementary_simplices", "dimension_bound"):
            out[name] = name not in bad
    return out


def cmd_model(args):
    model = _read_model(args.path)
    act = args.action
    threads = args.threads
    if act == "check":
        ledger = _check_ledger(model)
        payload = {"dim_B": model.dim_B, "cells": list(model.cell_counts()), "checks": ledger}
        lines = [f"{k}: {'pass' if v else 'fail'}" for k, v in ledger.items()]
    elif act == "discriminant":
        g = discriminant(model)
        comps = delta0_components(model) if 2 <= model.dim_B <= 3 and g.delta0 is not None else []
        payload = {"nodes": sorted(g.nodes), "edges": [list(e) for e in g.edges],
                   "delta0": sorted(g.delta0) if g.delta0 is not None else None,
                   "components": [{"nodes": sorted(c.nodes), "contractible": c.is_contractible,
                                   "representative": c.representative} for c in comps]}
        lines = [f"nodes: {len(g.nodes)}", f"edges: {len(g.edges)}",
                 f"marked points: {len(g.delta0 or ())}", f"components: {len(comps)}",
                 f"all contractible: {str(all(c.is_contractible for c in comps)).lower()}"]
    elif act == "monodromy":
        rows = [{"omega": w, "rho": r, "kappa": k, "a": model.a[w],
                 "a_check": model.a_check.get(r)} for (w, r), k in sorted(model.kappa.items())]
        payload = {"pairs": rows}
        lines = _table_lines([(x["omega"], x["rho"], x["kappa"], x["a"], x["a_check"]) for x in rows],
                             "omega  rho  kappa  a  a_check")
    elif act == "reduction":
        red = []
        for t, rc in sorted(model.reductions.items()):
            if rc.inner or rc.outer:
                red.append({"cell": t, "dim": model.dim(t),
                            "inner": [[list(v) for v in P.vertices] for P in rc.inner],
                            "outer": [[list(v) for v in P.vertices] for P in rc.outer]})
        payload = {"cells": red}
        lines = [f"cell {x['cell']} (dim {x['dim']}): inner {x['inner']} outer {x['outer']}" for x in red]
    elif act in ("affine", "log", "twisted"):
        if act == "affine":
            tab = affine_hodge(model, threads)
        elif act == "log":
            tab = log_hodge(model, threads)
        else:
            tab = twisted_sectors(model, threads)
            closed = twisted_closed_form(model)
            if closed.table != tab.table:
                raise CommandFailed(1, "twisted sectors disagree with the closed form")
        payload = tab.as_json()
        lines = [render_diamond(tab), ""] + _table_lines(tab.table, "table[p][q]:")
    elif act == "e1":
        page = e1_page(model, args.form_degree, threads)
        n = model.dim_B
        grid = [[page.dim(p, q) for p in range(n + 1)] for q in range(n + 1)]
        payload = {"form_degree": args.form_degree, "entries": grid}
        lines = _table_lines(reversed(grid), "rows q = n..0, columns p = 0..n:")
    elif act == "mirror":
        rep = mirror_check(model, threads)
        payload = {"table": rep.table.as_json()["table"], "dual_table": rep.dual_table.as_json()["table"],
                   "mismatches": [list(m) for m in rep.mismatches], "verdict": rep.verdict}
        lines = [f"verdict: {'pass' if rep.verdict else 'fail'}"]
        if not rep.verdict:
            raise CommandFailed(2, "mirror_transposition: " + str(rep.mismatches))
    else:
        raise CommandFailed(2, f"unknown action {act}")
    return payload, lines


# --- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def add_common(p, fmt, out, threads):
        p.add_argument("--format", choices=("text", "json"), default=fmt)
        p.add_argument("--out", default=out, help="write the output to this file")
        p.add_argument("--threads", type=int, default=threads)

    # the subcommand copies must not reset options given before the subcommand
    common = argparse.ArgumentParser(add_help=False)
    skip = argparse.SUPPRESS
    add_common(common, skip, skip, skip)
    parser = argparse.ArgumentParser(prog="loghodge",
                                     description="Hodge numbers of toric degenerations from polytope data.")
    add_common(parser, "text", None, 1)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("polytope", parents=[common], help="lattice polytope queries")
    p.add_argument("path")
    p.add_argument("action", choices=("info", "points", "box", "standard", "elementary", "dual"))
    p.add_argument("level", nargs="?", type=int)
    p.set_defaults(func=cmd_polytope, seed=None)

    p = sub.add_parser("jacobian", parents=[common], help="graded Jacobian ring dimensions")
    p.add_argument("path")
    p.add_argument("--max-degree", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("box", "linear", "coker", "intro", "all"), default="all")
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("koszul", parents=[common], help="Koszul complex cohomology")
    p.add_argument("path")
    p.add_argument("--twist", type=int, default=0)
    p.add_argument("--extra-rank", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_koszul)

    p = sub.add_parser("build", parents=[common], help="write a model file")
    p.add_argument("kind", choices=("fermat", "reflexive"))
    p.add_argument("source", help="number of components, or a polytope file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build, seed=None)

    p = sub.add_parser("model", parents=[common], help="queries on a model file")
    p.add_argument("path")
    p.add_argument("action", choices=("check", "discriminant", "monodromy", "reduction",
                                      "affine", "log", "twisted", "e1", "mirror"))
    p.add_argument("--form-degree", type=int, default=1)
    p.set_defaults(func=cmd_model, seed=None)
    return parser


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        payload, lines = args.func(args)
        code = 0
    except CommandFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - start
    if args.format == "json":
        report = {"command": args.command, "argv": list(argv if argv is not None else sys.argv[1:]),
                  "version": __version__, "seed": getattr(args, "seed", None),
                  "result": payload, "warnings": [], "elapsed_seconds": round(elapsed, 3)}
        _emit(args, json.dumps(report, indent=2, sort_keys=True))
    else:
        _emit(args, "\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())
