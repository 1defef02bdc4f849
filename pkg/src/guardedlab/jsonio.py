"""JSON loaders for posets, frames, polynomials, theories and fixpoint programs.

Malformed input raises :class:`InputError` carrying a JSON-pointer style
path to the offending value.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from pathlib import Path

from .frames import BasedFrame, downset_frame, explicit_frame
from .order import FinitePreorder, WfRelation, reflexive_transitive_closure
from .theories import TOP, And, GeometricTheory, Or, Sequent, Sym
from .wtypes import Polynomial


class InputError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path or "/"
        super().__init__(f"{self.path}: {message}")


def read_json(path) -> tuple[object, str]:
    """Parsed document and a sha256 digest of the raw bytes."""
    raw = Path(path).read_bytes()
    try:
        return json.loads(raw), hashlib.sha256(raw).hexdigest()
    except json.JSONDecodeError as e:
        raise InputError("/", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None


def _expect(doc, kind, path):
    if not isinstance(doc, kind):
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise InputError(path, f"expected {name}, got {type(doc).__name__}")
    return doc


def _name(x, path):
    if isinstance(x, (list, dict)) or x is None:
        raise InputError(path, "element names must be strings or numbers")
    return x


def _pairs(doc, key, elems, path) -> list:
    out = []
    for i, pair in enumerate(_expect(doc.get(key, []), list, f"{path}/{key}")):
        here = f"{path}/{key}/{i}"
        if not isinstance(pair, list) or len(pair) != 2:
            raise InputError(here, "expected a pair [u, v]")
        for j, x in enumerate(pair):
            if x not in elems:
                raise InputError(f"{here}/{j}", f"unknown element {x!r}")
        out.append(tuple(pair))
    return out


def poset_from_json(doc, path: str = "") -> WfRelation:
    """``{"elements": [...], "leq": [[u, v]...], "prec": [[u, v]...]}``; leq is closed up."""
    _expect(doc, dict, path)
    if "elements" not in doc:
        raise InputError(path, "missing key 'elements'")
    elems = [_name(x, f"{path}/elements/{i}") for i, x in enumerate(_expect(doc["elements"], list, f"{path}/elements"))]
    if len(set(elems)) != len(elems):
        raise InputError(f"{path}/elements", "duplicate element")
    given = _pairs(doc, "leq", set(elems), path)
    leq = reflexive_transitive_closure(elems, given)
    added = {(u, v) for u, v in leq if u != v} - set(given)
    if added:
        warnings.warn(f"leq closed under transitivity: {len(added)} pair(s) added", stacklevel=2)
    prec = _pairs(doc, "prec", set(elems), path)
    try:
        return WfRelation(FinitePreorder(tuple(elems), leq), frozenset(prec))
    except ValueError as e:
        raise InputError(f"{path}/prec", str(e)) from None


def frame_from_json(doc, base_dir=None, path: str = "") -> BasedFrame:
    """Downsets of a poset (inline or a file path) or an explicit frame table."""
    _expect(doc, dict, path)
    if "downsets_of" in doc:
        src = doc["downsets_of"]
        if isinstance(src, str):
            file = Path(base_dir or ".") / src
            if not file.exists():
                raise InputError(f"{path}/downsets_of", f"no such file {src!r}")
            src, _ = read_json(file)
        w = poset_from_json(src, f"{path}/downsets_of")
        try:
            return downset_frame(w)
        except ValueError as e:
            raise InputError(f"{path}/downsets_of", str(e)) from None
    for key in ("opens", "leq", "basis", "basis_prec"):
        if key not in doc:
            raise InputError(path, f"missing key {key!r}")
    opens = [_name(x, f"{path}/opens/{i}") for i, x in enumerate(_expect(doc["opens"], list, f"{path}/opens"))]
    leq = _pairs(doc, "leq", set(opens), path)
    basis = _expect(doc["basis"], list, f"{path}/basis")
    for i, k in enumerate(basis):
        if k not in opens:
            raise InputError(f"{path}/basis/{i}", f"unknown open {k!r}")
    prec = _pairs(doc, "basis_prec", set(basis), path)
    try:
        return explicit_frame(opens, leq, basis, prec)
    except ValueError as e:
        raise InputError(path, str(e)) from None


def frame_to_names(bf: BasedFrame, u) -> object:
    """Printable form of an open: sorted member list for downsets, the name otherwise."""
    if isinstance(u, frozenset):
        return sorted(u, key=repr)
    return u


def polynomial_from_json(doc, path: str = "") -> Polynomial:
    _expect(doc, dict, path)
    shapes = _expect(doc.get("shapes"), list, f"{path}/shapes")
    names, sizes = [], []
    for i, s in enumerate(shapes):
        here = f"{path}/shapes/{i}"
        _expect(s, dict, here)
        if "name" not in s:
            raise InputError(here, "missing key 'name'")
        n = s.get("fiber_size")
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise InputError(f"{here}/fiber_size", "expected a non-negative integer")
        names.append(_name(s["name"], f"{here}/name"))
        sizes.append(n)
    if len(set(names)) != len(names):
        raise InputError(f"{path}/shapes", "duplicate shape name")
    return Polynomial(tuple(names), tuple(sizes))


def formula_from_json(doc, symbols: set, path: str):
    if doc == "top":
        return TOP
    if isinstance(doc, dict):
        if len(doc) != 1 or next(iter(doc)) not in ("and", "or"):
            raise InputError(path, "a compound formula is {\"and\": [...]} or {\"or\": [...]}")
        op, parts = next(iter(doc.items()))
        parts = _expect(parts, list, f"{path}/{op}")
        sub = tuple(formula_from_json(p, symbols, f"{path}/{op}/{i}") for i, p in enumerate(parts))
        return And(sub) if op == "and" else Or(sub)
    if isinstance(doc, (str, int)) and not isinstance(doc, bool):
        if doc not in symbols:
            raise InputError(path, f"undeclared symbol {doc!r}")
        return Sym(doc)
    raise InputError(path, "expected a symbol, \"top\", or an and/or object")


def theory_from_json(doc, path: str = "") -> GeometricTheory:
    _expect(doc, dict, path)
    syms = [_name(x, f"{path}/symbols/{i}") for i, x in enumerate(_expect(doc.get("symbols", []), list, f"{path}/symbols"))]
    if "top" in syms:
        raise InputError(f"{path}/symbols", "'top' is reserved")
    if len(set(syms)) != len(syms):
        raise InputError(f"{path}/symbols", "duplicate symbol")
    seqs = []
    for i, s in enumerate(_expect(doc.get("sequents", []), list, f"{path}/sequents")):
        here = f"{path}/sequents/{i}"
        _expect(s, dict, here)
        for side in ("lhs", "rhs"):
            if side not in s:
                raise InputError(here, f"missing key {side!r}")
        seqs.append(Sequent(formula_from_json(s["lhs"], set(syms), f"{here}/lhs"),
                            formula_from_json(s["rhs"], set(syms), f"{here}/rhs")))
    return GeometricTheory(tuple(syms), tuple(seqs))


def formula_to_json(phi):
    if isinstance(phi, Sym):
        return phi.name
    if isinstance(phi, And):
        return {"and": [formula_to_json(p) for p in phi.parts]}
    if isinstance(phi, Or):
        return {"or": [formula_to_json(p) for p in phi.parts]}
    return "top"


def theory_to_json(t: GeometricTheory) -> dict:
    return {
        "symbols": list(t.symbols),
        "sequents": [{"lhs": formula_to_json(s.lhs), "rhs": formula_to_json(s.rhs)} for s in t.sequents],
    }


def poset_to_json(w: WfRelation, name=None) -> dict:
    """Order-core format; ``name`` turns elements into JSON scalars (default: leave as is)."""
    p = w.base
    name = name or (lambda e: e)
    index = {e: i for i, e in enumerate(p.elements)}
    pairs = lambda rel: [[name(u), name(v)] for u, v in sorted(rel, key=lambda uv: (index[uv[0]], index[uv[1]]))]
    return {
        "elements": [name(e) for e in p.elements],
        "leq": pairs((u, v) for u, v in p.leq if u != v),
        "prec": pairs(w.prec),
    }


FIXPOINT_KINDS = ("constant", "cons-literal", "map-successor")


def fixpoint_from_json(doc, path: str = "") -> dict:
    """``{"kind": ..., "values": [...], "head": v, "cycle": [...], "modulus": m}``, validated."""
    _expect(doc, dict, path)
    kind = doc.get("kind")
    if kind not in FIXPOINT_KINDS:
        raise InputError(f"{path}/kind", f"expected one of {list(FIXPOINT_KINDS)}")
    out = {"kind": kind}
    if kind == "map-successor":
        m = doc.get("modulus", 10)
        if not isinstance(m, int) or isinstance(m, bool) or m < 1:
            raise InputError(f"{path}/modulus", "expected a positive integer")
        out["modulus"] = m
        out["head"] = doc.get("head", 0)
        if out["head"] not in range(m):
            raise InputError(f"{path}/head", f"head must lie in 0..{m - 1}")
        return out
    values = _expect(doc.get("values"), list, f"{path}/values")
    if not values:
        raise InputError(f"{path}/values", "need at least one value")
    out["values"] = tuple(_name(v, f"{path}/values/{i}") for i, v in enumerate(values))
    if kind == "cons-literal":
        if doc.get("head") not in out["values"]:
            raise InputError(f"{path}/head", "head must be one of the values")
        out["head"] = doc["head"]
    else:
        cycle = _expect(doc.get("cycle"), list, f"{path}/cycle")
        if not cycle:
            raise InputError(f"{path}/cycle", "need at least one entry")
        for i, v in enumerate(cycle):
            if v not in out["values"]:
                raise InputError(f"{path}/cycle/{i}", f"{v!r} is not one of the values")
        out["cycle"] = tuple(cycle)
    return out
