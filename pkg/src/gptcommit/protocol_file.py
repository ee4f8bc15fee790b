"""JSON files for protocols and cone programs.

A protocol file stores states and effects exactly as given: matrices for
quantum-type theories (real and imaginary parts as nested row lists),
coordinate vectors for polyhedral ones. The raw arrays are kept on the
parsed object, so parse followed by dump reproduces the input bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .commitment import ICProtocol
from .coneprog import ConeProgram
from .cones import (Cone, Free, Orthant, PolyhedralH, PolyhedralV, Product, PsdComplex, PsdReal,
                    Zero, tensor_compose)
from .errors import GptCommitError, InvalidProtocol, ParseError
from .gpt import (GptSystem, classical_system, compose, gbit_system, quantum_system,
                  real_quantum_system)

PROTOCOL_VERSION = "gptcommit-protocol/1"
PROGRAM_VERSION = "gptcommit-coneprog/1"
THEORIES = ("quantum", "real_quantum", "classical", "gbit")
ALPHA_MATCH_TOL = 1e-8


@dataclass
class ProtocolFile:
    theory: str
    dims: tuple
    states: list
    effects: list
    rule: str
    effects_b: str = "full"
    alpha: float | None = None
    label: str = ""
    version: str = PROTOCOL_VERSION
    _system: GptSystem | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def matrix_form(self) -> bool:
        return self.theory in ("quantum", "real_quantum")

    def system(self) -> GptSystem:
        if self._system is None:
            self._system = build_system(self.theory, self.dims, self.rule, self.effects_b)
        return self._system

    def to_protocol(self) -> ICProtocol:
        """Validated protocol; a declared alpha must match the computed one."""
        sys = self.system()
        if self.matrix_form:
            states = [sys.vector_from_matrix(m) for m in self.states]
            effects = [sys.vector_from_matrix(m) for m in self.effects]
        else:
            states, effects = list(self.states), list(self.effects)
        p = ICProtocol(sys, tuple(states), tuple(effects), self.label)
        if self.alpha is not None:
            alpha = float(np.min(p.acceptance()))
            if abs(alpha - self.alpha) > ALPHA_MATCH_TOL:
                raise InvalidProtocol(f"declared alpha {self.alpha} differs from computed {alpha:.12g}")
        return p


def build_system(theory: str, dims, rule: str, effects_b: str = "full") -> GptSystem:
    da, db = dims
    if theory == "quantum":
        a, b = quantum_system(da), quantum_system(db)
    elif theory == "real_quantum":
        a, b = real_quantum_system(da), real_quantum_system(db)
    elif theory == "classical":
        a, b = classical_system(da), classical_system(db)
    elif theory == "gbit":
        if (da, db) != (3, 3):
            raise InvalidProtocol("gbit factors have dimension 3")
        a, b = gbit_system(), gbit_system()
    else:
        raise InvalidProtocol(f"unknown theory {theory!r}")
    if effects_b == "full":
        return compose(a, b, rule)
    if effects_b != "trivial":
        raise InvalidProtocol(f"effects_b must be 'full' or 'trivial', not {effects_b!r}")
    # Only the unit effect (and its multiples) can be measured on B alone,
    # while joint effects on A(x)B are unrestricted.
    b = GptSystem(b.state_cone, PolyhedralV(b.unit_effect[None, :]), b.unit_effect,
                  f"{b.label}-trivial", "restricted")
    joint_states = tensor_compose(a.state_cone, b.state_cone, rule)
    return compose(a, b, rule, effect_cone=joint_states.dual())


# -- encoding -------------------------------------------------------------

def _encode_array(arr: np.ndarray, matrix: bool, is_complex: bool):
    arr = np.asarray(arr)
    if not matrix:
        return [float(v) for v in np.real(arr)]
    out = {"re": [[float(v) for v in row] for row in np.real(arr)]}
    if is_complex:
        out["im"] = [[float(v) for v in row] for row in np.imag(arr)]
    return out


def protocol_to_dict(pf: ProtocolFile) -> dict:
    cplx = pf.theory == "quantum"
    d = {
        "version": pf.version,
        "label": pf.label,
        "theory": pf.theory,
        "rule": pf.rule,
        "dims": {"A": int(pf.dims[0]), "B": int(pf.dims[1])},
        "effects_b": pf.effects_b,
        "n": pf.n,
    }
    if pf.alpha is not None:
        d["alpha"] = float(pf.alpha)
    d["states"] = [_encode_array(s, pf.matrix_form, cplx) for s in pf.states]
    d["accept_effects"] = [_encode_array(e, pf.matrix_form, cplx) for e in pf.effects]
    return d


def dumps_protocol(pf: ProtocolFile) -> str:
    return json.dumps(protocol_to_dict(pf), indent=2) + "\n"


def _field(obj: dict, key: str, where: str, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    val = obj[key]
    # bool is an int subclass, so it is rejected explicitly.
    if kind is not None and (not isinstance(val, kind) or isinstance(val, bool)):
        raise ParseError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def _numbers(rows, where: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected numeric array") from None
    if arr.shape != shape:
        raise ParseError(f"{where}: expected shape {shape}, got {arr.shape}")
    return arr


def _decode_array(raw, where: str, matrix: bool, is_complex: bool, size: int) -> np.ndarray:
    if not matrix:
        return _numbers(raw, where, (size,))
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: expected an object with 're'{' and im' if is_complex else ''}")
    re = _numbers(_field(raw, "re", where), f"{where}.re", (size, size))
    if not is_complex:
        if "im" in raw:
            raise ParseError(f"{where}.im: real_quantum matrices have no imaginary part")
        return re
    im = _numbers(_field(raw, "im", where), f"{where}.im", (size, size))
    out = np.empty((size, size), dtype=complex)
    out.real, out.imag = re, im      # keeps signed zeros, unlike re + 1j * im
    return out


def protocol_from_dict(d: dict) -> ProtocolFile:
    version = _field(d, "version", "protocol", str)
    if version != PROTOCOL_VERSION:
        raise ParseError(f"protocol.version: unsupported version {version!r}")
    theory = _field(d, "theory", "protocol", str)
    if theory not in THEORIES:
        raise ParseError(f"protocol.theory: expected one of {THEORIES}, got {theory!r}")
    dims_raw = _field(d, "dims", "protocol", dict)
    dims = (_field(dims_raw, "A", "protocol.dims", int), _field(dims_raw, "B", "protocol.dims", int))
    if min(dims) < 1:
        raise ParseError("protocol.dims: dimensions must be positive")
    n = _field(d, "n", "protocol", int)
    matrix = theory in ("quantum", "real_quantum")
    cplx = theory == "quantum"
    size = 9 if theory == "gbit" else dims[0] * dims[1]
    out = {}
    for key in ("states", "accept_effects"):
        raw = _field(d, key, "protocol", list)
        if len(raw) != n:
            raise ParseError(f"protocol.{key}: expected {n} entries, got {len(raw)}")
        out[key] = [_decode_array(r, f"protocol.{key}[{i}]", matrix, cplx, size) for i, r in enumerate(raw)]
    alpha = d.get("alpha")
    if alpha is not None and (isinstance(alpha, bool) or not isinstance(alpha, (int, float))):
        raise ParseError("protocol.alpha: expected a number")
    known = {"version", "label", "theory", "rule", "dims", "effects_b", "n", "alpha", "states",
             "accept_effects"}
    extra = sorted(set(d) - known)
    if extra:
        raise ParseError(f"protocol: unknown field(s) {', '.join(extra)}")
    if "rule" in d:
        rule = _field(d, "rule", "protocol", str)
    elif theory == "gbit":
        # No composite is canonical for polyhedral toy theories.
        raise ParseError("protocol.rule: required for gbit ('min' or 'max')")
    else:
        rule = "quantum" if matrix else "min"
    if rule not in ("min", "max", "quantum"):
        raise ParseError(f"protocol.rule: expected 'min', 'max' or 'quantum', got {rule!r}")
    return ProtocolFile(theory, dims, out["states"], out["accept_effects"], rule,
                        d.get("effects_b", "full"), None if alpha is None else float(alpha),
                        d.get("label", ""), version)


def loads_protocol(text: str) -> ProtocolFile:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"line {err.lineno}, column {err.colno}: {err.msg}") from None
    return protocol_from_dict(d)


# -- cone programs --------------------------------------------------------

def cone_to_dict(cone: Cone) -> dict:
    if isinstance(cone, Product):
        return {"kind": "product", "factors": [cone_to_dict(f) for f in cone.factors]}
    if isinstance(cone, (PsdReal, PsdComplex)):
        return {"kind": cone.kind, "n": cone.n}
    if isinstance(cone, (Orthant, Free, Zero)):
        return {"kind": cone.kind, "dim": cone.dim}
    if isinstance(cone, PolyhedralV):
        return {"kind": cone.kind, "generators": cone.generators.tolist()}
    if isinstance(cone, PolyhedralH):
        return {"kind": cone.kind, "inequalities": cone.inequalities.tolist()}
    raise ParseError(f"cannot serialise cone kind {cone.kind}")


def cone_from_dict(d: dict, where: str = "cone") -> Cone:
    kind = _field(d, "kind", where, str)
    try:
        if kind == "product":
            return Product(tuple(cone_from_dict(f, f"{where}.factors[{i}]")
                                 for i, f in enumerate(_field(d, "factors", where, list))))
        if kind == "psd_real":
            return PsdReal(_field(d, "n", where, int))
        if kind == "psd_complex":
            return PsdComplex(_field(d, "n", where, int))
        if kind in ("orthant", "free", "zero"):
            cls = {"orthant": Orthant, "free": Free, "zero": Zero}[kind]
            return cls(_field(d, "dim", where, int))
        if kind == "polyhedral_v":
            return PolyhedralV(np.array(_field(d, "generators", where, list), dtype=float))
        if kind == "polyhedral_h":
            return PolyhedralH(np.array(_field(d, "inequalities", where, list), dtype=float))
    except (TypeError, ValueError) as err:
        if isinstance(err, GptCommitError):
            raise ParseError(f"{where}: {err}") from None
        raise ParseError(f"{where}: malformed numeric data") from None
    raise ParseError(f"{where}.kind: unknown cone kind {kind!r}")


def program_to_dict(p: ConeProgram) -> dict:
    return {
        "version": PROGRAM_VERSION,
        "sense": p.sense,
        "phi": p.phi.tolist(),
        "b": p.b.tolist(),
        "c": p.c.tolist(),
        "cone": cone_to_dict(p.cone),
    }


def dumps_program(p: ConeProgram) -> str:
    return json.dumps(program_to_dict(p), indent=2) + "\n"


def program_from_dict(d: dict) -> ConeProgram:
    version = _field(d, "version", "program", str)
    if version != PROGRAM_VERSION:
        raise ParseError(f"program.version: unsupported version {version!r}")
    cone = cone_from_dict(_field(d, "cone", "program", dict), "program.cone")
    c = _numbers(_field(d, "c", "program", list), "program.c", (cone.dim,))
    b_raw = _field(d, "b", "program", list)
    b = _numbers(b_raw, "program.b", (len(b_raw),))
    phi_raw = _field(d, "phi", "program", list)
    phi = _numbers(phi_raw, "program.phi", (b.size, cone.dim)) if b.size else np.zeros((0, cone.dim))
    sense = d.get("sense", "sup")
    if sense not in ("sup", "inf"):
        raise ParseError(f"program.sense: expected 'sup' or 'inf', got {sense!r}")
    return ConeProgram(phi, b, c, cone, sense)


def loads_program(text: str) -> ConeProgram:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"line {err.lineno}, column {err.colno}: {err.msg}") from None
    return program_from_dict(d)
