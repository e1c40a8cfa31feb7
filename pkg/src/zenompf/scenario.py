"""Scenario files and the systems they describe.

A scenario is a flat ``key = value`` text file. Blank lines and ``#``
comments are ignored; ``[system]`` and ``[tolerances]`` sections hold the
system parameters and numerical knobs::

    name = qubit
    system = qubit_projective
    t = 1.0
    n_grid = 8, 16, 32, 64, 128, 256
    k_orders = 0, 1, 2

    [tolerances]
    slope_margin = 0.6

Custom systems read their operators from sidecar files: a header line
``rows cols`` followed by ``rows * cols`` complex entries written as
``re im`` pairs in row-major order.
"""
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import ParseError, ValidationError
from .linalg import as_matrix, mat_exp
from .quantum import (SIGMA_X, SIGMA_Y, SIGMA_Z, CatCodeSpec, DecouplingSpec, annihilation,
                      cat_projectors, check_channel, cyclic_bath_channel, decoupling_hamiltonian,
                      embed_bath_channel, fixed_point, h_dec, hamiltonian_generator,
                      projector_channel, superop_dim)
from .spectral import one_to_one_lower

SYSTEMS = ("qubit_projective", "cat_code", "decoupling", "custom")
NORM_KINDS = ("spectral", "one11")
DEFAULT_N_GRID = (8, 16, 32, 64, 128, 256)
DEFAULT_K_ORDERS = (0, 1)
DEFAULT_TOLERANCES = {"gap_tol": 0.1, "q_max": 64, "slope_margin": 0.6}

_TOP_KEYS = {"name", "system", "t", "n_grid", "k_orders", "norm_kind", "output_path", "lemmas"}
_SYSTEM_KEYS = {
    "qubit_projective": set(),
    "cat_code": {"alpha", "fock_dim", "theta"},
    "decoupling": {"j", "dephasing"},
    "custom": {"kick", "projector", "hamiltonian", "generator"},
}
_SECTIONS = ("system", "tolerances")


@dataclass
class Scenario:
    name: str
    system: str
    system_params: Dict[str, Any] = field(default_factory=dict)
    t: Optional[float] = None
    n_grid: Tuple[int, ...] = DEFAULT_N_GRID
    k_orders: Tuple[int, ...] = DEFAULT_K_ORDERS
    norm_kind: str = "spectral"
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_path: Optional[str] = None
    lemmas: bool = False
    base_dir: str = "."

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValidationError(f"system must be one of {', '.join(SYSTEMS)}, got {self.system!r}")
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 4:
            raise ValidationError("n_grid needs at least 4 entries")
        if any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("n_grid must be strictly increasing positive integers")
        orders = tuple(int(k) for k in self.k_orders)
        if not orders or any(not 0 <= k <= 8 for k in orders):
            raise ValidationError("k_orders must be nonempty and within [0, 8]")
        if self.norm_kind not in NORM_KINDS:
            raise ValidationError(f"norm_kind must be one of {', '.join(NORM_KINDS)}")
        if self.t is not None and not (math.isfinite(self.t) and self.t >= 0):
            raise ValidationError("t must be a finite nonnegative number")
        self.n_grid = grid
        self.k_orders = orders
        if self.output_path is None:
            self.output_path = f"{self.name}.csv"


# -- parsing -----------------------------------------------------------------

def _strip_comment(line):
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def parse_text(text: str, path: str = "<string>") -> Dict[str, Dict[str, Tuple[str, int]]]:
    """Split scenario text into ``{section: {key: (raw value, line number)}}``.

    Top-level keys live under the section ``""``.
    """
    out: Dict[str, Dict[str, Tuple[str, int]]] = {"": {}}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", lineno, path)
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno, path)
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if not key or not key.replace("_", "").isalnum():
            raise ParseError(f"malformed key {key!r}", lineno, path)
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno, path)
        if key in out[section]:
            raise ParseError(f"duplicate key {key!r}", lineno, path)
        out[section][key] = (value, lineno)
    return out


def _convert(kind, value, lineno, path, key):
    try:
        if kind == "float":
            if value.lower() in ("pi", "π"):
                return math.pi
            if value.lower().startswith("pi/"):
                return math.pi / float(value[3:])
            return float(value)
        if kind == "int":
            return int(value)
        if kind == "ints":
            return tuple(int(v) for v in value.replace(",", " ").split())
        if kind == "bool":
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return value
    except ValueError:
        raise ParseError(f"cannot read {key} = {value!r} as {kind}", lineno, path) from None


_TYPES = {
    "name": "str", "system": "str", "t": "float", "n_grid": "ints", "k_orders": "ints",
    "norm_kind": "str", "output_path": "str", "lemmas": "bool",
    "alpha": "float", "fock_dim": "int", "theta": "float", "j": "int", "dephasing": "float",
    "kick": "str", "projector": "str", "hamiltonian": "str", "generator": "str",
    "gap_tol": "float", "q_max": "int", "slope_margin": "float",
}


def load_scenario_text(text: str, path: str = "<string>", base_dir: str = ".") -> Scenario:
    sections = parse_text(text, path)
    top = sections[""]
    for key, (_, lineno) in top.items():
        if key not in _TOP_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, path)
    if "system" not in top:
        raise ParseError("missing required key 'system'", None, path)
    values = {k: _convert(_TYPES[k], v, ln, path, k) for k, (v, ln) in top.items()}
    system = values["system"]
    if system not in SYSTEMS:
        raise ParseError(f"unknown system {system!r}", top["system"][1], path)

    params = {}
    for key, (value, lineno) in sections.get("system", {}).items():
        if key not in _SYSTEM_KEYS[system]:
            raise ParseError(f"unknown key {key!r} for system {system}", lineno, path)
        params[key] = _convert(_TYPES[key], value, lineno, path, key)

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, (value, lineno) in sections.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ParseError(f"unknown tolerance {key!r}", lineno, path)
        tolerances[key] = _convert(_TYPES[key], value, lineno, path, key)

    default_name = os.path.splitext(os.path.basename(path))[0] if path != "<string>" else system
    sc = Scenario(
        name=values.get("name", default_name),
        system=system,
        system_params=params,
        t=values.get("t"),
        n_grid=values.get("n_grid", DEFAULT_N_GRID),
        k_orders=values.get("k_orders", DEFAULT_K_ORDERS),
        norm_kind=values.get("norm_kind", "spectral"),
        tolerances=tolerances,
        output_path=values.get("output_path"),
        lemmas=values.get("lemmas", False),
        base_dir=base_dir,
    )
    validate_system(sc)
    return sc


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc.strerror}") from None
    return load_scenario_text(text, path, os.path.dirname(os.path.abspath(path)))


def read_matrix(path: str) -> np.ndarray:
    """Read a sidecar matrix: ``rows cols`` header, then ``re im`` pairs row-major."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read matrix file {path}: {exc.strerror}") from None
    tokens = []
    header = None
    for lineno, raw in enumerate(lines, start=1):
        parts = _strip_comment(raw).split()
        if not parts:
            continue
        if header is None:
            if len(parts) != 2:
                raise ParseError("header must be 'rows cols'", lineno, path)
            try:
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise ParseError("header must hold two integers", lineno, path) from None
            if header[0] < 1 or header[1] < 1:
                raise ParseError("matrix dimensions must be positive", lineno, path)
            continue
        for p in parts:
            try:
                tokens.append(float(p))
            except ValueError:
                raise ParseError(f"not a number: {p!r}", lineno, path) from None
    if header is None:
        raise ParseError("empty matrix file", None, path)
    rows, cols = header
    if len(tokens) != 2 * rows * cols:
        raise ParseError(f"expected {rows * cols} 're im' pairs, found {len(tokens) / 2:g}",
                         len(lines), path)
    flat = np.array(tokens[0::2]) + 1j * np.array(tokens[1::2])
    return flat.reshape(rows, cols)


def write_matrix(path: str, a) -> None:
    a = np.asarray(a, dtype=np.complex128)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) + "\n")


# -- systems -----------------------------------------------------------------

@dataclass
class SystemModel:
    """Kick, generator and time of a scenario plus system-specific extras."""
    m: np.ndarray
    generator: np.ndarray
    t: float
    extras: Dict[str, Any] = field(default_factory=dict)


def cat_frequency(p_superop, generator) -> float:
    """Rotation frequency of the projected dynamics: half the largest |Im| eigenvalue of P L P."""
    w = np.linalg.eigvals(p_superop @ generator @ p_superop)
    return float(np.max(np.abs(w.imag)) / 2.0)


def cat_rotation(p, x, theta):
    """``cos(theta/2) P + i sin(theta/2) X`` on the code space."""
    return math.cos(theta / 2) * p + 1j * math.sin(theta / 2) * x


def decoupling_model(j: int = 2, dephasing: float = 0.6):
    """Qubit coupled to a ``j``-level bath kicked by an ergodic cyclic channel.

    Returns ``(spec, rho_star)``. The bath operators generalize Pauli Z and X
    to ``diag(cos(2 pi k / j))`` and the symmetrized cyclic shift.
    """
    zj = np.diag(np.cos(2 * np.pi * np.arange(j) / j)).astype(np.complex128)
    shift = np.roll(np.eye(j), 1, axis=0)
    xj = (0.5 * (shift + shift.T) if j > 2 else shift).astype(np.complex128)
    bath = cyclic_bath_channel(j, dephasing)
    spec = DecouplingSpec(h1=0.5 * SIGMA_X, h2=0.3 * zj,
                          couplings=((SIGMA_Z, 0.7 * zj), (SIGMA_Y, 0.4 * np.eye(j) + 0.2 * xj)),
                          bath_channel=bath)
    return spec, fixed_point(bath)


def _custom_operators(sc: Scenario):
    prm = sc.system_params

    def side(key):
        return read_matrix(os.path.join(sc.base_dir, prm[key]))

    if ("kick" in prm) == ("projector" in prm):
        raise ValidationError("custom system needs exactly one of 'kick' or 'projector'")
    if ("hamiltonian" in prm) == ("generator" in prm):
        raise ValidationError("custom system needs exactly one of 'hamiltonian' or 'generator'")
    if "kick" in prm:
        m = as_matrix(side("kick"), square=True, name="kick")
        check_channel(m)
    else:
        m = projector_channel(side("projector"))
    if "hamiltonian" in prm:
        gen = hamiltonian_generator(side("hamiltonian"))
    else:
        gen = as_matrix(side("generator"), square=True, name="generator")
        superop_dim(gen)
        # trace-norm contraction of e^{L}; a lower estimate, so necessary only
        if one_to_one_lower(mat_exp(gen)) > 1 + 1e-8:
            raise ValidationError("generator does not produce a contraction semigroup")
    if m.shape != gen.shape:
        raise ValidationError(f"kick is {m.shape} but generator is {gen.shape}")
    return m, gen


def validate_system(sc: Scenario) -> None:
    """Cheap parameter checks; custom systems load and check their sidecar files."""
    prm = sc.system_params
    if sc.system == "cat_code":
        CatCodeSpec(prm.get("alpha", 2.0), prm.get("fock_dim", 25))
        if sc.t is not None and "theta" in prm:
            raise ValidationError("cat_code takes either t or theta, not both")
    elif sc.system == "decoupling":
        if prm.get("j", 2) < 2:
            raise ValidationError("decoupling bath dimension j must be at least 2")
        if not 0.0 < prm.get("dephasing", 0.6) <= 1.0:
            raise ValidationError("dephasing must lie in (0, 1]")
    elif sc.system == "custom":
        _custom_operators(sc)


def build_system(sc: Scenario) -> SystemModel:
    """Kick ``M``, generator ``L`` and time ``t`` for a scenario."""
    prm = sc.system_params
    if sc.system != "custom":
        validate_system(sc)
    if sc.system == "qubit_projective":
        m = projector_channel(np.diag([1.0, 0.0]).astype(np.complex128))
        gen = hamiltonian_generator(SIGMA_X)
        return SystemModel(m, gen, 1.0 if sc.t is None else sc.t)

    if sc.system == "cat_code":
        alpha = prm.get("alpha", 2.0)
        d = prm.get("fock_dim", 25)
        p, x = cat_projectors(alpha, d)
        a = annihilation(d)
        m = projector_channel(p)
        gen = hamiltonian_generator(a + a.conj().T)
        omega = cat_frequency(m, gen)
        theta = prm.get("theta", math.pi / 2)
        # -exp(-i(pi - theta/2) X) equals X(theta) up to a global phase
        t = sc.t if sc.t is not None else (math.pi - theta / 2) / omega
        return SystemModel(m, gen, t, {"alpha": alpha, "fock_dim": d, "theta": theta,
                                       "omega": omega, "P": p, "X": x,
                                       "theta_from_t": sc.t is None})

    if sc.system == "decoupling":
        j = prm.get("j", 2)
        spec, rho_star = decoupling_model(j, prm.get("dephasing", 0.6))
        d1, _ = spec.dims
        m = embed_bath_channel(spec.bath_channel, d1)
        gen = hamiltonian_generator(decoupling_hamiltonian(spec))
        return SystemModel(m, gen, 1.0 if sc.t is None else sc.t,
                           {"spec": spec, "rho_star": rho_star, "h_dec": h_dec(spec, rho_star),
                            "j": j})

    m, gen = _custom_operators(sc)
    return SystemModel(m, gen, 1.0 if sc.t is None else sc.t)
