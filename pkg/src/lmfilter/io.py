"""File formats: signal CSV, model files, filter maps, manifests and config.

Signal CSV
    Header ``t,ch1,...,chd[,label]``, one row per sample in time order.

Model file (``lmfilter-model/1``)
    ``key=value`` header lines, then one block per binary model::

        [model]
        class=1
        bias=-0.25
        weights=0.5,1.25          # filter kinds only: channel weights w
        coeffs                    # f rows of d values: F (filter kinds) or W (window)
        0.1,0.2
        ...

    Floats are written with ``repr`` so a save/load round trip is exact.
"""
from __future__ import annotations

import csv
import io as _io
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .filtersvm import DescentTrace, FilterModel
from .harness import OvaModel
from .signal import FilterBank, LinearModel
from .window import WindowModel

MODEL_FORMAT = "lmfilter-model/1"


class FormatError(ValueError):
    """Malformed input file; the message names the file location."""


def _fmt(v: float) -> str:
    return repr(float(v))


def write_signal_csv(path, x, y=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    header = ["t"] + [f"ch{j + 1}" for j in range(x.shape[1])]
    if y is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(x):
            out = [str(i)] + [_fmt(v) for v in row]
            if y is not None:
                out.append(str(int(y[i])))
            w.writerow(out)


def read_signal_csv(path, require_labels: bool = False):
    """Return ``(x, y)``; ``y`` is ``None`` when the file has no label column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0] != "t":
            raise FormatError(f"{path}, row 1: header must start with 't'")
        has_label = header[-1] == "label"
        chans = header[1:-1] if has_label else header[1:]
        if not chans:
            raise FormatError(f"{path}, row 1: no channel columns")
        if require_labels and not has_label:
            raise FormatError(f"{path}: a 'label' column is required")
        xs, ys = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}, row {rownum}: expected {len(header)} fields, got {len(row)}")
            try:
                xs.append([float(v) for v in row[1:1 + len(chans)]])
                if has_label:
                    ys.append(int(row[-1]))
            except ValueError as e:
                raise FormatError(f"{path}, row {rownum}: {e}") from None
            if not np.all(np.isfinite(xs[-1])):
                raise FormatError(f"{path}, row {rownum}: non-finite value")
    if not xs:
        raise FormatError(f"{path}: no data rows")
    x = np.array(xs)
    return x, (np.array(ys) if has_label else None)


def _model_kind(model) -> str:
    if isinstance(model, OvaModel):
        return model.kind
    if isinstance(model, WindowModel):
        return "window"
    return "filter"


def save_model(path, model, kind: str | None = None, extra: dict | None = None):
    """Write a binary model or an :class:`OvaModel`."""
    if isinstance(model, OvaModel):
        kind, classes, subs = model.kind, [str(c) for c in model.classes], list(model.models)
    else:
        kind, classes, subs = kind or _model_kind(model), ["binary"], [model]
    first = subs[0]
    lines = ["# lmfilter model file", f"format={MODEL_FORMAT}", f"kind={kind}",
             f"f={first.f}", f"n0={first.n0}", f"n_channels={first.n_channels}",
             f"C={_fmt(first.C)}"]
    if isinstance(first, FilterModel):
        lines.append(f"lambda={_fmt(first.lam)}")
    lines.append("classes=" + ",".join(classes))
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    labels = classes if classes != ["binary"] else ["1"]
    for cls, m in zip(labels, subs):
        lines += ["[model]", f"class={cls}", f"bias={_fmt(m.bias if isinstance(m, WindowModel) else m.model.bias)}"]
        if isinstance(m, FilterModel):
            lines.append("weights=" + ",".join(_fmt(v) for v in m.model.weights))
            lines.append(f"stop_reason={m.trace.stop_reason}")
            lines.append(f"converged={int(m.trace.inner_converged)}")
            block = m.filter.coeffs
        else:
            lines.append(f"converged={int(m.converged)}")
            block = m.weights
        lines.append("coeffs")
        lines += [",".join(_fmt(v) for v in row) for row in block]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path):
    """Inverse of :func:`save_model`; returns ``(model, header)``."""
    text = Path(path).read_text().splitlines()
    header, blocks, cur, rows = {}, [], None, None
    for lineno, raw in enumerate(text, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[model]":
            cur, rows = {}, None
            blocks.append((cur, lineno))
            continue
        if cur is not None and line == "coeffs":
            rows = cur["coeffs"] = []
            continue
        if rows is not None and "=" not in line:
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise FormatError(f"{path}, line {lineno}: bad coefficient row") from None
            continue
        if "=" not in line:
            raise FormatError(f"{path}, line {lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        (cur if cur is not None else header)[k] = v
    if header.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: unsupported or missing format tag {header.get('format')!r}")
    try:
        kind = header["kind"]
        f, n0, d = int(header["f"]), int(header["n0"]), int(header["n_channels"])
        C = float(header["C"])
        lam = float(header.get("lambda", "0"))
        classes = header["classes"].split(",")
    except (KeyError, ValueError) as e:
        raise FormatError(f"{path}: bad or missing header field {e}") from None
    models = []
    for blk, lineno in blocks:
        try:
            coeffs = np.array(blk["coeffs"], dtype=float)
            bias = float(blk["bias"])
            if coeffs.shape != (f, d):
                raise FormatError(f"{path}, model at line {lineno}: coefficient block is {coeffs.shape}, expected {(f, d)}")
            if kind == "window":
                models.append(WindowModel(coeffs, bias, n0, C, blk.get("converged", "1") == "1"))
            else:
                w = [float(v) for v in blk["weights"].split(",")]
                trace = DescentTrace(stop_reason=blk.get("stop_reason", ""),
                                     inner_converged=blk.get("converged", "1") == "1")
                models.append(FilterModel(FilterBank(coeffs, n0), LinearModel(w, bias), C, lam, trace))
        except FormatError:
            raise
        except (KeyError, ValueError) as e:
            raise FormatError(f"{path}, model at line {lineno}: {e}") from None
    if not models:
        raise FormatError(f"{path}: no [model] blocks")
    if classes == ["binary"]:
        if len(models) != 1:
            raise FormatError(f"{path}: binary model file with {len(models)} blocks")
        return models[0], header
    if len(models) != len(classes):
        raise FormatError(f"{path}: {len(classes)} classes but {len(models)} model blocks")
    return OvaModel(kind, tuple(int(c) for c in classes), tuple(models)), header


def space_time_map(model) -> np.ndarray:
    """``W`` for window models, ``w_j * F[m, j]`` for filter models."""
    if isinstance(model, WindowModel):
        return np.array(model.weights)
    return model.weighted_map()


def write_map_csv(path_or_buf, m: np.ndarray):
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tap"] + [f"ch{j + 1}" for j in range(m.shape[1])])
        for i, row in enumerate(m, start=1):
            w.writerow([str(i)] + [_fmt(v) for v in row])
    finally:
        if own:
            fh.close()


def read_map_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "tap":
        raise FormatError(f"{path}: not a filter map file")
    return np.array([[float(v) for v in r[1:]] for r in rows[1:] if r])


def write_table_csv(path_or_buf, rows: list, columns: list | None = None, append: bool = False):
    """Write dict rows as CSV; with ``append`` the header is skipped for non-empty files."""
    columns = columns or (list(rows[0]) if rows else [])
    own = isinstance(path_or_buf, (str, Path))
    header = True
    if own:
        p = Path(path_or_buf)
        header = not (append and p.exists() and p.stat().st_size)
        fh = open(p, "a" if append else "w", newline="")
    else:
        fh = path_or_buf
    try:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        if header:
            w.writeheader()
        for r in rows:
            w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
    finally:
        if own:
            fh.close()


def write_keyvalue(path, items: dict):
    """Flat ``key=value`` file (manifests, sidecar metadata)."""
    lines = [f"{k}={v}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_keyvalue(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}, line {lineno}: expected key=value, got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise FormatError(f"{path}, line {lineno}: empty key")
        out[k] = v
    return out


def environment_info() -> dict:
    return {"lmfilter_version": __version__, "python": sys.version.split()[0],
            "numpy": np.__version__, "platform": platform.platform()}


def format_table(rows: list) -> str:
    """Plain-text rendering of table rows for terminal output."""
    buf = _io.StringIO()
    if rows:
        cols = list(rows[0])
        buf.write("\t".join(cols) + "\n")
        for r in rows:
            buf.write("\t".join(f"{r[c]:.4f}" if isinstance(r[c], float) else str(r[c]) for c in cols) + "\n")
    return buf.getvalue()
