"""Physical building blocks as superoperators.

Operators on a ``d``-dimensional Hilbert space are vectorized by stacking
columns, so the map ``X -> A @ X @ B`` is the ``d**2 x d**2`` matrix
``kron(B.T, A)``. Superoperators are plain arrays; :func:`superop_dim` recovers
``d`` from their shape.
"""
from dataclasses import dataclass, field
from math import lgamma
from typing import List, Sequence, Tuple

import numpy as np

from .errors import (DegenerateStateError, DimensionError, NonErgodicError,
                     TruncationError, ValidationError)
from .linalg import as_matrix

HERMITIAN_TOL = 1e-12
CHANNEL_TOL = 1e-10
ERGODIC_GAP = 1e-8
TRUNCATION_TOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # |0><1|


# -- vectorization -----------------------------------------------------------

def vectorize(rho) -> np.ndarray:
    """Column-stack a square matrix into a vector of length d**2."""
    rho = as_matrix(rho, square=True, name="rho")
    return rho.reshape(-1, order="F").copy()


def devectorize(vec) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
    d = int(round(np.sqrt(vec.size)))
    if d * d != vec.size:
        raise DimensionError(f"vector length {vec.size} is not a perfect square")
    return vec.reshape(d, d, order="F").copy()


def superop_dim(superop) -> int:
    n = np.shape(superop)[0]
    d = int(round(np.sqrt(n)))
    if d * d != n or np.shape(superop) != (n, n):
        raise DimensionError(f"superoperator shape {np.shape(superop)} is not d^2 x d^2")
    return d


def apply_superop(superop, rho) -> np.ndarray:
    return devectorize(np.asarray(superop) @ vectorize(rho))


def identity_superop(d: int) -> np.ndarray:
    return np.eye(d * d, dtype=np.complex128)


def sandwich_superop(a, b) -> np.ndarray:
    """Superoperator of ``X -> a @ X @ b``."""
    a = as_matrix(a, square=True, name="A")
    b = as_matrix(b, square=True, name="B")
    if a.shape != b.shape:
        raise DimensionError(f"A is {a.shape} but B is {b.shape}")
    return np.kron(b.T, a)


def tensor_superop(s1, s2) -> np.ndarray:
    """Superoperator of ``T1 (x) T2`` on the bipartite operator space."""
    s1 = np.asarray(s1, dtype=np.complex128)
    s2 = np.asarray(s2, dtype=np.complex128)
    d1, d2 = superop_dim(s1), superop_dim(s2)
    # vec index of a d x d operator reshapes in C order to (col, row)
    t1 = s1.reshape(d1, d1, d1, d1)
    t2 = s2.reshape(d2, d2, d2, d2)
    big = np.einsum("abcd,efgh->aebfcgdh", t1, t2)
    n = (d1 * d2) ** 2
    return big.reshape(n, n)


def partial_trace_second(rho, d1: int, d2: int) -> np.ndarray:
    """Trace out the second tensor factor of a (d1*d2)-dimensional operator."""
    rho = np.asarray(rho).reshape(d1, d2, d1, d2)
    return np.einsum("ajbj->ab", rho)


def choi_matrix(superop) -> np.ndarray:
    """Choi matrix ``sum_ij E_ij (x) T(E_ij)`` of a superoperator."""
    s = np.asarray(superop, dtype=np.complex128)
    d = superop_dim(s)
    # s4[j, i, l, k] = <E_ij | T(E_kl)>, choi[(k, i), (l, j)] = T(E_kl)[i, j]
    s4 = s.reshape(d, d, d, d)
    return s4.transpose(3, 1, 2, 0).reshape(d * d, d * d)


def trace_preservation_defect(superop) -> float:
    d = superop_dim(superop)
    v = vectorize(np.eye(d))
    return float(np.linalg.norm(v.conj() @ np.asarray(superop) - v.conj()))


def check_channel(superop, tol: float = CHANNEL_TOL, trace_preserving: bool = True) -> None:
    """Raise :class:`ValidationError` unless ``superop`` is CP (and TP if asked)."""
    choi = choi_matrix(superop)
    herm = 0.5 * (choi + choi.conj().T)
    if np.linalg.norm(choi - herm) > tol:
        raise ValidationError("Choi matrix is not Hermitian: map is not Hermiticity preserving")
    low = np.linalg.eigvalsh(herm).min()
    if low < -tol:
        raise ValidationError(f"map is not completely positive (Choi eigenvalue {low:.3e})")
    if trace_preserving:
        defect = trace_preservation_defect(superop)
        if defect > tol:
            raise ValidationError(f"map is not trace preserving (defect {defect:.3e})")


def is_channel(superop, tol: float = CHANNEL_TOL) -> bool:
    try:
        check_channel(superop, tol)
    except ValidationError:
        return False
    return True


# -- generators --------------------------------------------------------------

def _require_hermitian(h, name):
    h = as_matrix(h, square=True, name=name)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValidationError(f"{name} is not Hermitian")
    return h


def hamiltonian_generator(h) -> np.ndarray:
    """Superoperator of ``rho -> -i [h, rho]``."""
    h = _require_hermitian(h, "H")
    ident = np.eye(h.shape[0])
    return -1j * (np.kron(ident, h) - np.kron(h.T, ident))


@dataclass(frozen=True)
class LindbladSpec:
    hamiltonian: np.ndarray
    jumps: Sequence[Tuple[np.ndarray, float]] = ()

    def __post_init__(self):
        h = _require_hermitian(self.hamiltonian, "hamiltonian")
        jumps = []
        for op, rate in self.jumps:
            op = as_matrix(op, square=True, name="jump operator")
            if op.shape != h.shape:
                raise DimensionError(f"jump operator {op.shape} does not match H {h.shape}")
            if not rate >= 0:
                raise ValidationError(f"jump rate must be nonnegative, got {rate}")
            jumps.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(jumps))


def lindblad_generator(spec: LindbladSpec) -> np.ndarray:
    """GKLS generator ``-i[H, .] + sum_k g_k (V . V^+ - {V^+ V, .}/2)``."""
    gen = hamiltonian_generator(spec.hamiltonian)
    ident = np.eye(spec.hamiltonian.shape[0])
    for v, rate in spec.jumps:
        vdv = v.conj().T @ v
        gen = gen + rate * (np.kron(v.conj(), v)
                            - 0.5 * np.kron(ident, vdv)
                            - 0.5 * np.kron(vdv.T, ident))
    return gen


# -- channels ----------------------------------------------------------------

def kraus_channel(ops: Sequence) -> np.ndarray:
    """Superoperator ``sum_i K_i . K_i^+``; requires ``sum K^+K <= 1``."""
    ops = [as_matrix(k, square=True, name="Kraus operator") for k in ops]
    if not ops:
        raise ValidationError("need at least one Kraus operator")
    d = ops[0].shape[0]
    if any(k.shape != (d, d) for k in ops):
        raise DimensionError("Kraus operators differ in shape")
    completeness = sum(k.conj().T @ k for k in ops)
    top = np.linalg.eigvalsh(0.5 * (completeness + completeness.conj().T)).max()
    if top > 1.0 + CHANNEL_TOL:
        raise ValidationError(f"Kraus set is trace increasing (sum K^+K has eigenvalue {top:.12g})")
    return sum(np.kron(k.conj(), k) for k in ops)


def projector_channel(p) -> np.ndarray:
    """Superoperator of ``rho -> P rho P`` for an orthogonal projection ``P``."""
    p = as_matrix(p, square=True, name="P")
    if np.linalg.norm(p @ p - p) > 1e-10 or np.linalg.norm(p - p.conj().T) > 1e-10:
        raise ValidationError("P is not an orthogonal projection")
    return sandwich_superop(p, p)


def depolarizing_channel(d: int, p: float) -> np.ndarray:
    """``rho -> (1 - p) rho + p tr(rho) I/d``."""
    ident = np.eye(d)
    v = vectorize(ident)
    return (1 - p) * identity_superop(d) + (p / d) * np.outer(v, v.conj())


def cyclic_bath_channel(j: int, dephasing: float = 0.6) -> np.ndarray:
    """Ergodic channel on C^j whose peripheral spectrum is the j-th roots of unity.

    Partial dephasing of strength ``dephasing`` followed by the cyclic shift
    ``|k> -> |k+1>``. The unique fixed point is ``I/j``.
    """
    if j < 2:
        raise ValidationError("bath dimension must be at least 2")
    if not 0.0 < dephasing <= 1.0:
        raise ValidationError("dephasing strength must lie in (0, 1]")
    shift = np.roll(np.eye(j), 1, axis=0)
    ops = [np.sqrt(dephasing) * shift @ np.diag(np.eye(j)[k]) for k in range(j)]
    ops.append(np.sqrt(1.0 - dephasing) * shift)
    return kraus_channel(ops)


# -- bosonic mode ------------------------------------------------------------

def annihilation(d: int) -> np.ndarray:
    if d < 2:
        raise ValidationError("Fock truncation must be at least 2")
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(np.complex128)


def number_op(d: int) -> np.ndarray:
    if d < 2:
        raise ValidationError("Fock truncation must be at least 2")
    return np.diag(np.arange(d, dtype=float)).astype(np.complex128)


def _coherent_amplitudes(alpha, d):
    n = np.arange(d)
    if alpha == 0:
        amp = np.zeros(d)
        amp[0] = 1.0
        return amp
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * np.array([lgamma(k + 1) for k in n])
    return np.sign(alpha) ** n * np.exp(log_mag)


def truncation_tail(alpha: float, d: int) -> float:
    """``1 - || |alpha> truncated to d levels ||``: norm lost by the cutoff."""
    amp = _coherent_amplitudes(alpha, d)
    kept = float(np.sum(amp ** 2))
    return max(0.0, 1.0 - np.sqrt(kept))


@dataclass(frozen=True)
class CatCodeSpec:
    alpha: float
    fock_dim: int

    def __post_init__(self):
        if self.fock_dim < 2:
            raise TruncationError("fock_dim must be at least 2")
        tail = truncation_tail(self.alpha, self.fock_dim)
        if tail >= TRUNCATION_TOL:
            raise TruncationError(
                f"fock_dim={self.fock_dim} truncates |alpha={self.alpha}> with norm error "
                f"{tail:.2e} >= {TRUNCATION_TOL:g}; 4*alpha^2+10 = "
                f"{4 * self.alpha ** 2 + 10:g} levels is a safe choice")


def coherent_state(alpha: float, d: int) -> np.ndarray:
    """Normalized truncation of the coherent state ``|alpha>``."""
    CatCodeSpec(alpha, d)
    amp = _coherent_amplitudes(alpha, d)
    return (amp / np.linalg.norm(amp)).astype(np.complex128)


def cat_states(alpha: float, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Even and odd cat states ``|CAT+>``, ``|CAT->``.

    Built from the printed normalizations ``1/sqrt(2(1 +- exp(-2 alpha^2)))`` and
    then renormalized to absorb the truncation.
    """
    if alpha <= 0:
        raise DegenerateStateError("cat states need alpha > 0 (|CAT-> vanishes at alpha = 0)")
    CatCodeSpec(alpha, d)
    plus = _coherent_amplitudes(alpha, d)
    minus = _coherent_amplitudes(-alpha, d)
    overlap = np.exp(-2 * alpha ** 2)
    even = (plus + minus) / np.sqrt(2 * (1 + overlap))
    odd = (plus - minus) / np.sqrt(2 * (1 - overlap))
    # parity is exact: clear rounding on the wrong sublattice
    even[1::2] = 0.0
    odd[0::2] = 0.0
    even /= np.linalg.norm(even)
    odd /= np.linalg.norm(odd)
    return even.astype(np.complex128), odd.astype(np.complex128)


def cat_projectors(alpha: float, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Code-space projection ``P_alpha`` and logical flip ``X_alpha``."""
    even, odd = cat_states(alpha, d)
    p = np.outer(even, even.conj()) + np.outer(odd, odd.conj())
    x = np.outer(even, odd.conj()) + np.outer(odd, even.conj())
    return p, x


# -- dynamical decoupling ----------------------------------------------------

@dataclass(frozen=True)
class DecouplingSpec:
    h1: np.ndarray
    h2: np.ndarray
    couplings: Sequence[Tuple[np.ndarray, np.ndarray]] = ()
    bath_channel: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        h1 = _require_hermitian(self.h1, "H1")
        h2 = _require_hermitian(self.h2, "H2")
        couplings = []
        for a, b in self.couplings:
            a = _require_hermitian(a, "H1j")
            b = _require_hermitian(b, "H2j")
            if a.shape != h1.shape or b.shape != h2.shape:
                raise DimensionError("coupling term dimensions do not match H1/H2")
            couplings.append((a, b))
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "couplings", tuple(couplings))
        if self.bath_channel is not None:
            bath = as_matrix(self.bath_channel, square=True, name="bath channel")
            if superop_dim(bath) != h2.shape[0]:
                raise DimensionError("bath channel does not act on the bath space")
            check_channel(bath)
            object.__setattr__(self, "bath_channel", bath)

    @property
    def dims(self):
        return self.h1.shape[0], self.h2.shape[0]


def decoupling_hamiltonian(spec: DecouplingSpec) -> np.ndarray:
    """``H1 (x) 1 + 1 (x) H2 + sum_j H1j (x) H2j``."""
    d1, d2 = spec.dims
    h = np.kron(spec.h1, np.eye(d2)) + np.kron(np.eye(d1), spec.h2)
    for a, b in spec.couplings:
        h = h + np.kron(a, b)
    return h


def h_dec(spec: DecouplingSpec, rho_star) -> np.ndarray:
    """Decoupled system Hamiltonian ``H1 + sum_j tr[H2j rho*] H1j``."""
    rho_star = as_matrix(rho_star, square=True, name="rho*")
    if rho_star.shape != spec.h2.shape:
        raise DimensionError("rho* must live on the bath space")
    if abs(np.trace(rho_star) - 1) > 1e-10:
        raise ValidationError("rho* must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho_star + rho_star.conj().T)).min() < -1e-10:
        raise ValidationError("rho* must be positive semidefinite")
    out = spec.h1.copy()
    for a, b in spec.couplings:
        out = out + np.trace(b @ rho_star).real * a
    return out


def fixed_point(channel) -> np.ndarray:
    """Unique fixed state of an ergodic channel."""
    m = as_matrix(channel, square=True, name="channel")
    superop_dim(m)
    w, v = np.linalg.eig(m)
    near_one = np.flatnonzero(np.abs(w - 1.0) < ERGODIC_GAP)
    if near_one.size != 1:
        raise NonErgodicError(
            f"eigenvalue 1 has multiplicity {near_one.size} (window {ERGODIC_GAP:g}); "
            "the channel is not ergodic")
    rho = devectorize(v[:, near_one[0]])
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise NonErgodicError("fixed point has zero trace")
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValidationError("fixed point is not positive semidefinite")
    return rho


def embed_bath_channel(bath_channel, d1: int) -> np.ndarray:
    """Superoperator of ``1 (x) M`` acting on system (x) bath operators."""
    return tensor_superop(identity_superop(d1), bath_channel)


def pauli_basis() -> List[np.ndarray]:
    return [np.eye(2, dtype=np.complex128), SIGMA_X, SIGMA_Y, SIGMA_Z]
