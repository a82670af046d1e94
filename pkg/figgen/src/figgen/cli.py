"""Command line: render every figure in a recipes manifest.

    figgen paper_suite.json            # render all
    figgen paper_suite.json --only decay_loglog --only optimum_scaling
    figgen paper_suite.json --list

Exit codes: 0 rendered, 2 bad manifest/recipe, 3 input data problem.
"""

import argparse
import sys

from .recipes import load_manifest, RecipeError
from .render import render, FigureDataError


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="figgen", description=__doc__)
    p.add_argument("manifest", help="recipes manifest JSON")
    p.add_argument("--only", action="append", default=[],
                   help="render only this figure id (repeatable)")
    p.add_argument("--list", action="store_true",
                   help="list figure ids and exit")
    args = p.parse_args(argv)

    try:
        recipes = load_manifest(args.manifest)
    except (RecipeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.list:
        for r in recipes:
            print(r.id)
        return 0
    if args.only:
        known = {r.id for r in recipes}
        missing = [i for i in args.only if i not in known]
        if missing:
            print(f"error: no such figure id(s): {', '.join(missing)}",
                  file=sys.stderr)
            return 2
        recipes = [r for r in recipes if r.id in args.only]

    status = 0
    for rec in recipes:
        try:
            out = render(rec)
            print(f"{rec.id}: wrote {out}")
        except FigureDataError as exc:
            print(f"{rec.id}: FAILED ({exc})", file=sys.stderr)
            status = 3
    return status


if __name__ == "__main__":
    sys.exit(main())
