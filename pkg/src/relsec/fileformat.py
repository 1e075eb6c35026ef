"""JSON spec documents: parsing with located diagnostics, canonical writing,
and CSV tables.

A document has ``alphabets``, ``channel`` and optionally ``design``, ``meta``
and ``params``. Channel and design cells may be arithmetic expressions over
the names in ``params`` (e.g. ``"1 - p"``), which is how sweep templates are
written.
"""

from __future__ import annotations

import ast
import copy
import csv
import io
import json
import math
import operator
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ParseError, ValidationError
from .prob import CHANNEL_AXES, ChannelSpec, InputDesign, Violation, validate_channel, validate_design

TOP_KEYS = ("alphabets", "channel", "design", "meta", "params")
DESIGN_KEYS = ("comp_size", "p_x1", "p_x2", "q")


@dataclass(frozen=True)
class SpecDocument:
    spec: ChannelSpec
    design: Optional[InputDesign]
    meta: dict
    params: dict
    raw: dict


# --- expression cells -------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def eval_expression(text: str, names: dict) -> float:
    """Arithmetic on numbers and ``names``; nothing else is allowed."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown name {node.id!r}")
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](walk(node.operand))
        raise ValueError(f"unsupported syntax {type(node).__name__}")

    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"bad expression {text!r}: {exc.msg}") from None
    return walk(tree)


def _numeric_array(node, shape, path, params, out):
    """Walk a nested list of the expected shape into a float array."""
    arr = np.full(shape, np.nan)

    def fill(val, idx, p):
        depth = len(idx)
        if depth == len(shape):
            if isinstance(val, bool) or not isinstance(val, (int, float, str)):
                out.append(Violation(p, f"expected a number, got {type(val).__name__}"))
                return
            if isinstance(val, str):
                try:
                    val = eval_expression(val, params)
                except (ValueError, ZeroDivisionError, OverflowError) as exc:
                    out.append(Violation(p, str(exc)))
                    return
            if not math.isfinite(val):
                out.append(Violation(p, "not a finite number"))
                return
            arr[idx] = val
            return
        if not isinstance(val, list):
            out.append(Violation(p, f"expected an array of length {shape[depth]}"))
            return
        if len(val) != shape[depth]:
            out.append(Violation(p, f"expected length {shape[depth]}, got {len(val)}"))
            return
        for i, v in enumerate(val):
            fill(v, idx + (i,), f"{p}/{i}")

    before = len(out)
    fill(node, (), path)
    return arr if len(out) == before else None


def _size(val, path, out):
    if isinstance(val, bool) or not isinstance(val, int) or val < 1:
        out.append(Violation(path, "must be an integer >= 1"))
        return None
    return val


# --- parsing ----------------------------------------------------------------

def loads_document(text: str, source: str = "<string>") -> dict:
    try:
        doc = json.loads(text, parse_constant=lambda c: _reject_constant(c))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}",
                         [Violation(f"{source}:{exc.lineno}:{exc.colno}", exc.msg)]) from None
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object", [Violation("", "expected an object")])
    return doc


def _reject_constant(name):
    raise json.JSONDecodeError(f"{name} is not allowed", name, 0)


def read_document(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", [Violation(str(path), "unreadable")]) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text", [Violation(str(path), str(exc))]) from None
    return loads_document(text, str(path))


def parse_document(doc: dict) -> SpecDocument:
    """Validate a loaded document; every problem is reported at once."""
    out: list[Violation] = []
    for key in doc:
        if key not in TOP_KEYS:
            out.append(Violation(f"/{key}", "unknown field"))

    params = doc.get("params", {})
    if not isinstance(params, dict):
        out.append(Violation("/params", "must be an object of numbers"))
        params = {}
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not k.isidentifier():
            out.append(Violation(f"/params/{k}", "must map an identifier to a number"))
    params = {k: v for k, v in params.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}

    meta = doc.get("meta", {})
    if not isinstance(meta, dict) or not all(isinstance(v, str) for v in meta.values()):
        out.append(Violation("/meta", "must be an object of strings"))
        meta = {}

    sizes = {}
    if "alphabets" not in doc:
        out.append(Violation("/alphabets", "missing required field 'alphabets'"))
    elif not isinstance(doc["alphabets"], dict):
        out.append(Violation("/alphabets", "must be an object"))
    else:
        alph = doc["alphabets"]
        for name in CHANNEL_AXES:
            if name not in alph:
                out.append(Violation(f"/alphabets/{name}", f"missing alphabet size '{name}'"))
            else:
                sizes[name] = _size(alph[name], f"/alphabets/{name}", out)
        for name in alph:
            if name not in CHANNEL_AXES:
                out.append(Violation(f"/alphabets/{name}", "unknown alphabet"))

    have_sizes = len(sizes) == 5 and all(sizes.values())
    law = None
    if "channel" not in doc:
        out.append(Violation("/channel", "missing required field 'channel'"))
    elif have_sizes:
        law = _numeric_array(doc["channel"], tuple(sizes[a] for a in CHANNEL_AXES), "/channel", params, out)

    spec = None
    if law is not None:
        spec = ChannelSpec(law)
        out.extend(validate_channel(spec))

    design = None
    if "design" in doc:
        design = _parse_design(doc["design"], sizes if have_sizes else None, params, out)
        if design is not None:
            out.extend(validate_design(design, spec))

    if out:
        raise ValidationError(f"{len(out)} problem(s) in spec document", out)
    return SpecDocument(spec, design, dict(meta), dict(params), doc)


def _parse_design(node, sizes, params, out):
    if not isinstance(node, dict):
        out.append(Violation("/design", "must be an object"))
        return None
    for key in node:
        if key not in DESIGN_KEYS:
            out.append(Violation(f"/design/{key}", "unknown field"))
    for key in DESIGN_KEYS:
        if key not in node:
            out.append(Violation(f"/design/{key}", f"missing required field '{key}'"))
    if any(k not in node for k in DESIGN_KEYS) or sizes is None:
        return None
    comp = _size(node["comp_size"], "/design/comp_size", out)
    if comp is None:
        return None
    p1 = _numeric_array(node["p_x1"], (sizes["x1"],), "/design/p_x1", params, out)
    p2 = _numeric_array(node["p_x2"], (sizes["x2"],), "/design/p_x2", params, out)
    q = _numeric_array(node["q"], (sizes["x2"], sizes["y2"], comp), "/design/q", params, out)
    if p1 is None or p2 is None or q is None:
        return None
    return InputDesign(p1, p2, q)


def parse_spec(path) -> tuple[ChannelSpec, Optional[InputDesign]]:
    doc = parse_document(read_document(path))
    return doc.spec, doc.design


# --- JSON pointers ----------------------------------------------------------

def _pointer_tokens(pointer: str) -> list[str]:
    if pointer == "":
        return []
    if not pointer.startswith("/"):
        raise ConfigurationError(f"JSON pointer must start with '/': {pointer!r}")
    return [t.replace("~1", "/").replace("~0", "~") for t in pointer[1:].split("/")]


def set_pointer(doc: dict, pointer: str, value) -> dict:
    """Copy of ``doc`` with the value at ``pointer`` replaced."""
    tokens = _pointer_tokens(pointer)
    if not tokens:
        raise ConfigurationError("cannot replace the whole document")
    new = copy.deepcopy(doc)
    node = new
    for i, tok in enumerate(tokens):
        last = i == len(tokens) - 1
        if isinstance(node, dict):
            if tok not in node:
                raise ConfigurationError(f"pointer {pointer!r}: no field {tok!r}")
            key = tok
        elif isinstance(node, list):
            if not tok.isdigit() or int(tok) >= len(node):
                raise ConfigurationError(f"pointer {pointer!r}: bad index {tok!r}")
            key = int(tok)
        else:
            raise ConfigurationError(f"pointer {pointer!r} walks into a scalar")
        if last:
            node[key] = value
        else:
            node = node[key]
    return new


# --- writing ----------------------------------------------------------------

def format_float(x: float) -> str:
    return "%.17g" % x


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise ValueError("cannot write a non-finite number")
        return format_float(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _write(v, indent, buf):
    pad = "  " * indent
    if isinstance(v, dict):
        if not v:
            buf.write("{}")
            return
        buf.write("{\n")
        items = sorted(v.items())
        for i, (k, val) in enumerate(items):
            buf.write(f"{pad}  {json.dumps(str(k), ensure_ascii=False)}: ")
            _write(val, indent + 1, buf)
            buf.write(",\n" if i < len(items) - 1 else "\n")
        buf.write(pad + "}")
    elif isinstance(v, (list, tuple, np.ndarray)):
        v = list(v)
        if not any(isinstance(x, (list, tuple, dict, np.ndarray)) for x in v):
            buf.write("[" + ", ".join(_scalar(x) for x in v) + "]")
            return
        buf.write("[\n")
        for i, x in enumerate(v):
            buf.write(pad + "  ")
            _write(x, indent + 1, buf)
            buf.write(",\n" if i < len(v) - 1 else "\n")
        buf.write(pad + "]")
    else:
        buf.write(_scalar(v))


def dumps_document(doc: dict) -> str:
    """Canonical text: sorted keys, 17 significant digits, innermost arrays on one line."""
    buf = io.StringIO()
    _write(doc, 0, buf)
    buf.write("\n")
    return buf.getvalue()


def to_document(spec: ChannelSpec, design: Optional[InputDesign] = None, meta: Optional[dict] = None,
                base: Optional[dict] = None) -> dict:
    """Document for ``spec`` (and ``design``); ``base`` keeps an existing channel block and params."""
    doc = copy.deepcopy(base) if base is not None else {}
    if base is None:
        doc["alphabets"] = dict(spec.sizes)
        doc["channel"] = spec.law.tolist()
    if design is not None:
        doc["design"] = {"comp_size": design.comp_size, "p_x1": design.p_x1.tolist(),
                         "p_x2": design.p_x2.tolist(), "q": design.q.tolist()}
    if meta:
        doc["meta"] = dict(meta)
    return doc


def write_text(path, text: str) -> None:
    """Write with LF line endings; I/O failures become configuration errors."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc.strerror or exc}") from None


# --- tables -----------------------------------------------------------------

def format_rate(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{float(x):.9f}"


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_rate(v)
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def emit_csv(header, rows, destination=None, stream=None) -> None:
    """Write a CSV table to ``destination`` (a path) or to ``stream``."""
    text = render_csv(header, rows)
    if destination is None:
        stream.write(text)
    else:
        write_text(destination, text)
