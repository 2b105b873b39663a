"""Channel text files and JSON serialization.

Channel file grammar (one statement per line)::

    file      := line*
    line      := [statement] [comment] NEWLINE
    statement := key "=" number number number
    key       := "lambda" | "t"
    number    := decimal literal such as 0.6, -1e-3, .5
    comment   := "#" any text

``lambda`` is required, ``t`` defaults to ``0 0 0``, and each key may appear
once. Whitespace separates tokens; keys are case-sensitive.
"""
from __future__ import annotations

import json
import logging
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .qubit import NotCompletelyPositiveError, QubitChannel, cp_margin, is_cp

log = logging.getLogger(__name__)

SIG_DIGITS = 12
_NUMBER = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?\Z")
_TOKEN = re.compile(r"[^\s=#]+|=")


class ChannelSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int, source: str = "<text>"):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.source = source


def _tokens(text: str):
    for m in _TOKEN.finditer(text):
        yield m.group(), m.start() + 1


def parse_channel_text(text: str, *, allow_noncp: bool = False, source: str = "<text>") -> QubitChannel:
    values: dict[str, list[float]] = {}
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0]
        toks = list(_tokens(body))
        if not toks:
            continue

        def fail(msg: str, col: int) -> ChannelSyntaxError:
            return ChannelSyntaxError(msg, lineno, col, source)

        key, col = toks[0]
        if key not in ("lambda", "t"):
            raise fail(f"unknown key {key!r}; expected 'lambda' or 't'", col)
        if key in values:
            raise fail(f"duplicate key {key!r}", col)
        if len(toks) < 2 or toks[1][0] != "=":
            raise fail("expected '=' after key", toks[1][1] if len(toks) > 1 else col + len(key))
        nums = toks[2:]
        for tok, c in nums[:3]:
            if not _NUMBER.match(tok):
                raise fail(f"invalid number {tok!r}", c)
        if len(nums) != 3:
            c = nums[3][1] if len(nums) > 3 else len(body.rstrip()) + 1
            raise fail(f"expected 3 numbers after '{key} =', found {len(nums)}", c)
        values[key] = [float(tok) for tok, _ in nums]
    if "lambda" not in values:
        raise ChannelSyntaxError("missing 'lambda = l1 l2 l3' statement", max(1, len(lines) if values else 1), 1, source)
    ch = QubitChannel.from_params(values["lambda"], values.get("t", (0.0, 0.0, 0.0)))
    if not is_cp(ch):
        msg = f"channel {ch.as_dict()} is not completely positive (min Choi eigenvalue {cp_margin(ch):.3e})"
        if not allow_noncp:
            raise NotCompletelyPositiveError(msg)
        log.warning(msg)
    return ch


def parse_channel_file(path, *, allow_noncp: bool = False) -> QubitChannel:
    path = Path(path)
    return parse_channel_text(path.read_text(), allow_noncp=allow_noncp, source=str(path))


def format_channel(ch: QubitChannel) -> str:
    lam = " ".join(f"{v:.{SIG_DIGITS}g}" for v in ch.lam)
    t = " ".join(f"{v:.{SIG_DIGITS}g}" for v in ch.shift)
    return f"lambda = {lam}\nt = {t}\n"


def round_reals(obj: Any) -> Any:
    """Round every float in a nested structure to 12 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if not math.isfinite(v) else float(f"{v:.{SIG_DIGITS}g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return round_reals(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): round_reals(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_reals(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(round_reals(obj), indent=2, sort_keys=True)


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj) + "\n")
