"""In-process bindings for reward evaluation inside training loops.

Four operations, all text-in / native-mapping-out, numerically bit-identical
to the ``lenslex`` CLI JSON for the same inputs:

    score_text(oddl, effl, fov, fno)      -> reward breakdown dict
    score_group(oddl_list, effl, fov, fno)-> [(breakdown dict, advantage)]
    trace_first_order(oddl, effl, fov, fno)-> first-order trace dict
    mask(oddl, ratio, seed)               -> masked document + site list

Contract: physics and parse failures are values (zero-stage breakdowns or
``{"error": ...}`` mappings), never exceptions — a rollout loop must survive
arbitrary candidate text. Exceptions are reserved for argument-type misuse.
Every call is a pure function of its arguments; nothing survives between
calls, so concurrent callers from any number of threads see the same
results as sequential ones (evaluation is pure Python and holds the
interpreter lock while it runs; purity, not lock juggling, is what makes
overlapped scheduling safe).
"""

from __future__ import annotations

import lenslex
from lenslex import grpo as _grpo
from lenslex import oddl as _oddl
from lenslex import prescription as _prescription
from lenslex import reward as _reward
from lenslex import tracer as _tracer
from lenslex import validation as _validation
from lenslex.errors import LensLexError, NothingToMask

__version__ = lenslex.__version__

__all__ = ["score_text", "score_group", "trace_first_order", "mask", "__version__"]


def _check_text(oddl, name: str = "oddl") -> None:
    if not isinstance(oddl, str):
        raise TypeError(f"{name} must be str, got {type(oddl).__name__}")


def _check_number(value, name: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"{name} must be a number or None, got {type(value).__name__}")
    return float(value)


def score_text(oddl: str, effl: float | None = None, fov: float | None = None,
               fno: float | None = None) -> dict:
    """Full lexicographic reward breakdown as a plain mapping.

    Field-for-field equal to ``lenslex score`` on the same inputs; a zero
    reward (including unparseable text) is a successful evaluation.
    """
    _check_text(oddl)
    breakdown = _reward.score_text(oddl, effl=_check_number(effl, "effl"),
                                   fov=_check_number(fov, "fov"),
                                   fno=_check_number(fno, "fno"))
    return breakdown.to_json_dict()


def score_group(oddl_list: list[str], effl: float | None = None,
                fov: float | None = None, fno: float | None = None) -> list[tuple[dict, float]]:
    """Score a rollout group and attach mean-centered advantages.

    Output order matches input order; advantages sum to zero.
    """
    if not isinstance(oddl_list, (list, tuple)):
        raise TypeError(f"oddl_list must be a list of str, got {type(oddl_list).__name__}")
    if not oddl_list:
        raise ValueError("oddl_list must be non-empty")
    for text in oddl_list:
        _check_text(text, "oddl_list entry")
    breakdowns = [score_text(text, effl=effl, fov=fov, fno=fno) for text in oddl_list]
    advantages = _grpo.group_advantages([b["r_lex"] for b in breakdowns])
    return list(zip(breakdowns, advantages))


def trace_first_order(oddl: str, effl: float | None = None, fov: float | None = None,
                      fno: float | None = None) -> dict:
    """First-order trace as a mapping; ``{"error": ...}`` when the text does
    not parse or fails format validation."""
    _check_text(oddl)
    demand = _prescription.Specification(
        effl_target=_check_number(effl, "effl"),
        fov_full=_check_number(fov, "fov"),
        f_number=_check_number(fno, "fno"),
    )
    try:
        p = _oddl.parse(oddl)
    except LensLexError as e:
        return {"error": f"parse failed: {e}"}
    p = p.with_spec(demand.merged_over(p.spec))
    if _validation.check_format(p).r_fmt != 1:
        return {"error": "prescription failed format validation"}
    return _tracer.trace_first_order(p).to_json_dict()


def mask(oddl: str, ratio: float, seed: int) -> dict:
    """Blank numeric completion sites; same payload as ``lenslex mask``."""
    _check_text(oddl)
    if isinstance(ratio, bool) or not isinstance(ratio, (int, float)):
        raise TypeError(f"ratio must be a number, got {type(ratio).__name__}")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise TypeError(f"seed must be an int, got {type(seed).__name__}")
    try:
        p = _oddl.parse(oddl)
    except LensLexError as e:
        return {"error": f"parse failed: {e}"}
    try:
        masked = _prescription.mask(p, float(ratio), seed)
    except (NothingToMask, ValueError) as e:
        return {"error": str(e)}
    return {
        "oddl": _oddl.serialize(masked.base),
        "mask_sites": [{"surface": i, "field": f} for i, f in masked.mask_sites],
    }
