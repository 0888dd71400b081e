"""Text file formats for raw streams and paired samples.

Stream file::

    # side=A setting=A1 seed=42 duration_ns=1000000 model=timedelay-lhv
    17,+1
    402,-1

Paired-sample file::

    # context=11 W_ns=20 shift_ns=0
    +1,-1

UTF-8, LF line endings, one record per line.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError
from .pairing import PairedSample
from .simulator import TimeTaggedStream

_SIGN = {1: "+1", -1: "-1"}
_PARSE_SIGN = {"+1": 1, "-1": -1}


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _lines(a: np.ndarray, b_strings: list[str]) -> str:
    return "".join(f"{x},{y}\n" for x, y in zip(a.tolist(), b_strings))


def format_stream(stream: TimeTaggedStream) -> str:
    seed = stream.meta.get("seed", 0)
    model = stream.meta.get("model", "unknown")
    header = (
        f"# side={stream.side} setting={stream.setting} seed={seed} "
        f"duration_ns={stream.duration_ns} model={model}\n"
    )
    return header + _lines(stream.t, [_SIGN[o] for o in stream.outcome.tolist()])


def format_paired(sample: PairedSample) -> str:
    header = f"# context={sample.context} W_ns={sample.W_ns} shift_ns={sample.shift_ns}\n"
    return header + "".join(f"{_SIGN[a]},{_SIGN[b]}\n" for a, b in zip(sample.a.tolist(), sample.b.tolist()))


def write_stream(stream: TimeTaggedStream, path) -> None:
    atomic_write_text(path, format_stream(stream))


def write_paired(sample: PairedSample, path) -> None:
    atomic_write_text(path, format_paired(sample))


def _header(first: str, keys: tuple[str, ...], path) -> dict[str, str]:
    if not first.startswith("# "):
        raise ParseError("missing '# ' header line", path, 1)
    fields = {}
    for token in first[2:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"header token {token!r} is not key=value", path, 1)
        fields[key] = value
    missing = [k for k in keys if k not in fields]
    if missing:
        raise ParseError(f"header lacks {', '.join(missing)}", path, 1)
    return fields


def _int(text: str, what: str, path, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not an integer", path, line) from None


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if "\r" in text:
        raise ParseError("CR line endings are not allowed", path, text[: text.index("\r")].count("\n") + 1)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file", path, 1)
    return lines


def read_stream(path) -> TimeTaggedStream:
    lines = _read_lines(path)
    head = _header(lines[0], ("side", "setting", "seed", "duration_ns", "model"), path)
    if head["side"] not in ("A", "B"):
        raise ParseError(f"side {head['side']!r} must be A or B", path, 1)
    duration = _int(head["duration_ns"], "duration_ns", path, 1)
    seed = _int(head["seed"], "seed", path, 1)
    t = np.empty(len(lines) - 1, dtype=np.int64)
    o = np.empty(len(lines) - 1, dtype=np.int8)
    prev = -1
    for k, line in enumerate(lines[1:]):
        lineno = k + 2
        ts, sep, os_ = line.partition(",")
        if not sep or os_ not in _PARSE_SIGN:
            raise ParseError(f"expected 't_ns,+1|-1', got {line!r}", path, lineno)
        tv = _int(ts, "timestamp", path, lineno)
        if tv <= prev:
            raise ParseError(f"timestamp {tv} not strictly increasing", path, lineno)
        if not 0 <= tv < duration:
            raise ParseError(f"timestamp {tv} outside [0, {duration})", path, lineno)
        t[k], o[k] = tv, _PARSE_SIGN[os_]
        prev = tv
    meta = {"model": head["model"], "seed": seed}
    return TimeTaggedStream(head["side"], head["setting"], t, o, duration, meta)


def read_paired(path) -> PairedSample:
    lines = _read_lines(path)
    head = _header(lines[0], ("context", "W_ns", "shift_ns"), path)
    W = _int(head["W_ns"], "W_ns", path, 1)
    shift = _int(head["shift_ns"], "shift_ns", path, 1)
    a = np.empty(len(lines) - 1, dtype=np.int8)
    b = np.empty(len(lines) - 1, dtype=np.int8)
    for k, line in enumerate(lines[1:]):
        x, sep, y = line.partition(",")
        if not sep or x not in _PARSE_SIGN or y not in _PARSE_SIGN:
            raise ParseError(f"expected '+1|-1,+1|-1', got {line!r}", path, k + 2)
        a[k], b[k] = _PARSE_SIGN[x], _PARSE_SIGN[y]
    return PairedSample(head["context"], a, b, W, shift)
