"""Text formats for states and decompositions.

State file::

    # optional comments
    dims: 4 2 2 2 2
    <re> <im>        one line per amplitude, system 1 most significant

Decomposition file::

    dims: 4 2 2 2 2
    partition: S:1|2,3|4,5
    branches: 4
    orthonormal: true
    coef <re> <im>
    vec <re> <im> <re> <im> ...     one line per fraction, canonical order
    ...                             (coef + vec block repeated per branch)

Numbers are written as ``{:.16e}`` (17 significant digits), which round-trips
IEEE doubles exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DarwinscopeError, FileFormatError
from .ghz import SemiGHZDecomposition
from .hilbert import PureState, SystemLayout
from .partitions import Partition

NORMALIZE_WARN_TOL = 1e-6


def fmt(x: float) -> str:
    return f"{x:.16e}"


def _pair(z: complex) -> str:
    return f"{fmt(z.real)} {fmt(z.imag)}"


@dataclass(frozen=True, eq=False)
class StateFile:
    state: PureState
    renormalized: bool = False
    norm_error: float = 0.0


def _content_lines(text: str):
    """(line number, stripped content) for every non-blank, non-comment line."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _floats(tokens: list[str], no: int, path) -> list[float]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise FileFormatError(f"not a number: {exc}", line=no, path=path) from None
    if not all(np.isfinite(vals)):
        raise FileFormatError("non-finite value", line=no, path=path)
    return vals


def _header(lines, key: str, path):
    try:
        no, line = next(lines)
    except StopIteration:
        raise FileFormatError(f"missing '{key}:' header", path=path) from None
    name, sep, rest = line.partition(":")
    if not sep or name.strip() != key:
        raise FileFormatError(f"expected '{key}:' header, got {line!r}", line=no, path=path)
    return no, rest.strip()


def _dims(lines, path) -> SystemLayout:
    no, rest = _header(lines, "dims", path)
    try:
        dims = tuple(int(t) for t in rest.split())
        return SystemLayout(dims)
    except (ValueError, DarwinscopeError) as exc:
        raise FileFormatError(f"bad dims: {exc}", line=no, path=path) from None


def parse_state(text: str, path=None) -> StateFile:
    lines = _content_lines(text)
    layout = _dims(lines, path)
    amps = []
    last = None
    for no, line in lines:
        tokens = line.split()
        if len(tokens) != 2:
            raise FileFormatError(f"expected 're im', got {len(tokens)} fields", line=no, path=path)
        re_, im = _floats(tokens, no, path)
        amps.append(complex(re_, im))
        last = no
    if len(amps) != layout.total_dim:
        raise FileFormatError(
            f"{len(amps)} amplitudes for dims {' '.join(map(str, layout.dims))} (expected {layout.total_dim})",
            line=last,
            path=path,
        )
    vec = np.array(amps, dtype=complex)
    err = abs(float(np.linalg.norm(vec)) - 1.0)
    renorm = False
    if err > 1e-9:
        if err > NORMALIZE_WARN_TOL or err >= 1.0:
            raise FileFormatError(f"state norm deviates from 1 by {err:.3g}", path=path)
        vec = vec / np.linalg.norm(vec)
        renorm = True
    return StateFile(PureState(layout, vec), renorm, err)


def format_state(state: PureState) -> str:
    out = ["dims: " + " ".join(str(d) for d in state.dims)]
    out += [_pair(z) for z in state.amplitudes]
    return "\n".join(out) + "\n"


def read_state(path) -> StateFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read: {exc.strerror}", path=path) from None
    return parse_state(text, path)


def write_state(path, state: PureState) -> None:
    Path(path).write_text(format_state(state))


def parse_decomposition(text: str, path=None) -> SemiGHZDecomposition:
    lines = _content_lines(text)
    layout = _dims(lines, path)
    no, rest = _header(lines, "partition", path)
    try:
        part = Partition.parse(rest, layout.n_systems)
    except DarwinscopeError as exc:
        raise FileFormatError(f"bad partition: {exc}", line=no, path=path) from None
    no, rest = _header(lines, "branches", path)
    try:
        k = int(rest)
    except ValueError:
        raise FileFormatError(f"bad branch count {rest!r}", line=no, path=path) from None
    if k < 1:
        raise FileFormatError("branch count must be positive", line=no, path=path)
    no, rest = _header(lines, "orthonormal", path)
    if rest not in ("true", "false"):
        raise FileFormatError("orthonormal must be 'true' or 'false'", line=no, path=path)
    ortho = rest == "true"
    dims = [layout.dim_of(f) for f in part.fractions]
    coeffs = np.zeros(k, dtype=complex)
    blocks = [np.zeros((d, k), dtype=complex) for d in dims]
    for i in range(k):
        for j in range(-1, part.n):
            try:
                no, line = next(lines)
            except StopIteration:
                raise FileFormatError(f"file ends inside branch {i}", path=path) from None
            tag, *tokens = line.split()
            want = "coef" if j < 0 else "vec"
            if tag != want:
                raise FileFormatError(f"expected '{want}' line, got {tag!r}", line=no, path=path)
            expected = 2 if j < 0 else 2 * dims[j]
            if len(tokens) != expected:
                raise FileFormatError(f"'{want}' line needs {expected} numbers, got {len(tokens)}", line=no, path=path)
            vals = np.array(_floats(tokens, no, path))
            z = vals[0::2] + 1j * vals[1::2]
            if j < 0:
                coeffs[i] = z[0]
            else:
                blocks[j][:, i] = z
    extra = next(lines, None)
    if extra is not None:
        raise FileFormatError("trailing content after the last branch", line=extra[0], path=path)
    try:
        return SemiGHZDecomposition(layout, part, coeffs, tuple(blocks), ortho)
    except DarwinscopeError as exc:
        raise FileFormatError(str(exc), path=path) from None


def format_decomposition(dec: SemiGHZDecomposition) -> str:
    out = [
        "dims: " + " ".join(str(d) for d in dec.layout.dims),
        f"partition: {dec.partition}",
        f"branches: {dec.n_branches}",
        f"orthonormal: {'true' if dec.orthonormal else 'false'}",
    ]
    for i in range(dec.n_branches):
        out.append("coef " + _pair(dec.coefficients[i]))
        for v in dec.vectors:
            out.append("vec " + " ".join(_pair(z) for z in v[:, i]))
    return "\n".join(out) + "\n"


def read_decomposition(path) -> SemiGHZDecomposition:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read: {exc.strerror}", path=path) from None
    return parse_decomposition(text, path)


def write_decomposition(path, dec: SemiGHZDecomposition) -> None:
    Path(path).write_text(format_decomposition(dec))
