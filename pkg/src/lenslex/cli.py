"""Command-line surface.

Subcommands: validate, trace, spot, score, score-batch, optimize, mask,
render. All machine output is JSON on stdout with a stable key order and
shortest round-trip float formatting, so identical inputs produce
byte-identical output. Exit codes: 0 success, 1 domain failure, 2 I/O or
syntax error. ``score`` is the exception by design: a zero reward is a
successful evaluation, so garbage input still exits 0.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import grpo, oddl, optimizer, render
from .errors import LensLexError, NothingToMask, ParseError, RenderError, UnknownMaterial
from .prescription import Specification, mask
from .reward import score, score_text
from .tracer import spot_paraxial, trace_first_order
from .validation import check_format, validate

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _fail(message: str, code: int) -> int:
    sys.stderr.write(f"lenslex: {message}\n")
    return code


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _parse_file(path: str):
    return oddl.parse(_read(path))


def _demand(args) -> Specification:
    return Specification(effl_target=args.effl, fov_full=args.fov, f_number=args.fno)


def _spec_flags(sub) -> None:
    sub.add_argument("--effl", type=float, default=None, help="target focal length, mm")
    sub.add_argument("--fov", type=float, default=None, help="full field of view, degrees")
    sub.add_argument("--fno", type=float, default=None, help="F-number")
    sub.add_argument("--json", action="store_true", default=True,
                     help="JSON output (always on)")


def cmd_validate(args) -> int:
    try:
        p = _parse_file(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except (ParseError, UnknownMaterial) as e:
        return _fail(str(e), EXIT_INPUT)
    report = validate(p)
    _emit(report.to_json_dict())
    return EXIT_OK if report.r_fmt == 1 and report.r_stru == 1 else EXIT_DOMAIN


def cmd_trace(args) -> int:
    try:
        p = _parse_file(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except (ParseError, UnknownMaterial) as e:
        return _fail(str(e), EXIT_INPUT)
    p = p.with_spec(_demand(args).merged_over(p.spec))
    if check_format(p).r_fmt != 1:
        return _fail("prescription failed format validation", EXIT_DOMAIN)
    _emit(trace_first_order(p).to_json_dict())
    return EXIT_OK


def cmd_spot(args) -> int:
    try:
        p = _parse_file(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except (ParseError, UnknownMaterial) as e:
        return _fail(str(e), EXIT_INPUT)
    p = p.with_spec(_demand(args).merged_over(p.spec))
    if check_format(p).r_fmt != 1:
        return _fail("prescription failed format validation", EXIT_DOMAIN)
    try:
        _emit(spot_paraxial(p).to_json_dict())
    except LensLexError as e:
        return _fail(str(e), EXIT_DOMAIN)
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        text = _read(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    breakdown = score_text(text, effl=args.effl, fov=args.fov, fno=args.fno,
                           gamma_from_calc=args.gamma_calc)
    _emit(breakdown.to_json_dict())
    return EXIT_OK


def cmd_score_batch(args) -> int:
    try:
        manifest = json.loads(_read(args.manifest))
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except json.JSONDecodeError as e:
        return _fail(f"malformed manifest: {e}", EXIT_INPUT)
    try:
        spec_obj = manifest.get("spec", {})
        candidates = manifest["candidates"]
        ids = [c["id"] for c in candidates]
    except (KeyError, TypeError) as e:
        return _fail(f"malformed manifest: missing {e}", EXIT_INPUT)
    if not candidates:
        return _fail("manifest has no candidates", EXIT_INPUT)
    if len(set(ids)) != len(ids):
        return _fail("candidate ids must be unique", EXIT_INPUT)

    root = Path(args.manifest).parent
    breakdowns = []
    for c in candidates:
        path = Path(c["path"])
        if not path.is_absolute():
            path = root / path
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            from .reward import RewardBreakdown
            breakdowns.append(RewardBreakdown(r_fmt=0, r_lex=0.0, note=f"unreadable: {e}"))
            continue
        breakdowns.append(score_text(text, effl=spec_obj.get("effl"),
                                     fov=spec_obj.get("fov"), fno=spec_obj.get("fno"),
                                     gamma_from_calc=args.gamma_calc))
    advantages = grpo.group_advantages([b.r_lex for b in breakdowns])
    _emit([
        {"id": c["id"], "reward_breakdown": b.to_json_dict(), "advantage": a}
        for c, b, a in zip(candidates, breakdowns, advantages)
    ])
    return EXIT_OK


def cmd_optimize(args) -> int:
    try:
        p = _parse_file(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except (ParseError, UnknownMaterial) as e:
        return _fail(str(e), EXIT_INPUT)
    report = validate(p)
    if report.r_fmt != 1 or report.r_stru != 1:
        return _fail("prescription must pass format and structure validation", EXIT_DOMAIN)
    cfg = optimizer.MeritConfig(
        w_effl=args.w_effl, w_spot=args.w_spot, penalty_scale=args.penalty,
        free_variables=args.free, max_iters=args.iters,
        rel_tolerance=args.tol, spot_metric=args.spot,
    )
    result = optimizer.refine(p, _demand(args), cfg)
    refined_text = oddl.serialize(result.refined)
    if args.out:
        Path(args.out).write_text(refined_text, encoding="utf-8")
    _emit({
        "refined": refined_text,
        "merit_initial": result.merit_initial,
        "merit_final": result.merit_final,
        "iterations": result.iterations,
        "converged": result.converged,
        "reward_before": result.reward_before.to_json_dict(),
        "reward_after": result.reward_after.to_json_dict(),
    })
    return EXIT_OK


def cmd_mask(args) -> int:
    try:
        p = _parse_file(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except (ParseError, UnknownMaterial) as e:
        return _fail(str(e), EXIT_INPUT)
    try:
        masked = mask(p, args.ratio, args.seed)
    except (NothingToMask, ValueError) as e:
        return _fail(str(e), EXIT_DOMAIN)
    _emit({
        "oddl": oddl.serialize(masked.base),
        "mask_sites": [{"surface": i, "field": f} for i, f in masked.mask_sites],
    })
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        p = _parse_file(args.path)
    except OSError as e:
        return _fail(str(e), EXIT_INPUT)
    except (ParseError, UnknownMaterial) as e:
        return _fail(str(e), EXIT_INPUT)
    p = p.with_spec(_demand(args).merged_over(p.spec))
    if check_format(p).r_fmt != 1:
        return _fail("prescription failed format validation", EXIT_DOMAIN)
    try:
        svg = render.render_svg(p)
    except RenderError as e:
        return _fail(str(e), EXIT_DOMAIN)
    if args.out:
        Path(args.out).write_text(svg, encoding="utf-8")
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lenslex",
                                     description="Lens prescription evaluation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="format/structure gate report")
    s.add_argument("path")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("trace", help="first-order marginal trace")
    s.add_argument("path")
    _spec_flags(s)
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("spot", help="stop-referenced paraxial spot report")
    s.add_argument("path")
    _spec_flags(s)
    s.set_defaults(func=cmd_spot)

    s = sub.add_parser("score", help="lexicographic reward breakdown")
    s.add_argument("path")
    _spec_flags(s)
    s.add_argument("--gamma-calc", action="store_true",
                   help="scale the spot tolerance by the traced focal length")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("score-batch", help="score a candidate group with advantages")
    s.add_argument("manifest")
    s.add_argument("--gamma-calc", action="store_true")
    s.set_defaults(func=cmd_score_batch)

    s = sub.add_parser("optimize", help="damped least-squares refinement")
    s.add_argument("path")
    _spec_flags(s)
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--free", choices=["radii", "gaps", "both"], default="both")
    s.add_argument("--spot", choices=["paraxial", "real"], default="paraxial")
    s.add_argument("--w-effl", type=float, default=1.0)
    s.add_argument("--w-spot", type=float, default=1.0)
    s.add_argument("--penalty", type=float, default=1e3)
    s.add_argument("--out", default=None, help="write the refined ODDL here")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("mask", help="blank numeric sites for completion tasks")
    s.add_argument("path")
    s.add_argument("--ratio", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_mask)

    s = sub.add_parser("render", help="SVG lens layout with real ray fans")
    s.add_argument("path")
    _spec_flags(s)
    s.add_argument("--out", default=None, help="write the SVG here (default: stdout)")
    s.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
