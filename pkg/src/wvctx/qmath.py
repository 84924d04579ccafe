"""Finite-dimensional operators, Gaussian overlaps, Kirkwood-Dirac numerators and weak values.

Operators are plain ``numpy`` complex arrays. The ``as_*`` helpers validate
and return a copy so callers can pass nested lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

# Tolerances for "anomalous"; exposed so callers can tighten or loosen them.
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
ANOMALY_TOL = 1e-10
ORTHOGONALITY_TOL = 1e-12


class ValidationError(ValueError):
    """An operator does not satisfy the invariants of its role."""


class DomainError(ValueError):
    """Inputs are valid operators but the requested quantity is undefined."""


def _as_square(m, name: str) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def as_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = _as_square(m, "operator")
    if np.max(np.abs(a - a.conj().T)) > tol * max(1.0, np.max(np.abs(a))):
        raise ValidationError("operator is not Hermitian")
    return 0.5 * (a + a.conj().T)


def as_density(m, tol: float = TRACE_TOL) -> np.ndarray:
    rho = as_hermitian(m)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"density matrix has trace {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
        raise ValidationError("density matrix is not positive semidefinite")
    return rho


def as_effect(m) -> np.ndarray:
    e = as_hermitian(m)
    w = np.linalg.eigvalsh(e)
    if w.min() < -POSITIVITY_TOL or w.max() > 1.0 + POSITIVITY_TOL:
        raise ValidationError("effect eigenvalues must lie in [0, 1]")
    return e


def is_projector(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m, dtype=complex)
    return bool(
        a.ndim == 2
        and np.allclose(a, a.conj().T, atol=tol)
        and np.allclose(a @ a, a, atol=tol)
    )


def as_projector(m) -> np.ndarray:
    e = as_effect(m)
    if not is_projector(e):
        raise ValidationError("operator is not a projector")
    return e


def ket_projector(amplitudes) -> np.ndarray:
    """Rank-one projector onto the normalised vector ``amplitudes``."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise ValidationError("zero vector has no projector")
    v = v / n
    return np.outer(v, v.conj())


def span_projector(vectors) -> np.ndarray:
    """Orthogonal projector onto the span of the given column vectors."""
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    q, r = np.linalg.qr(v.T)
    keep = np.abs(np.diag(r)) > 1e-12
    q = q[:, keep]
    return q @ q.conj().T


def _check_dims(*ops: np.ndarray) -> None:
    dims = {op.shape for op in ops}
    if len(dims) != 1:
        raise ValidationError(f"dimension mismatch: {sorted(dims)}")


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(o * p for o, p in zip(self.eigenvalues, self.projectors))


def herm_eigendecomp(h, degeneracy_tol: float = 1e-9) -> SpectralDecomposition:
    """Spectral decomposition with eigenvalues closer than ``degeneracy_tol`` merged.

    Eigenvalues are returned ascending, one projector per distinct value.
    """
    h = as_hermitian(h)
    w, v = np.linalg.eigh(h)
    groups: list[list[int]] = []
    for i, val in enumerate(w):
        if groups and val - w[groups[-1][0]] <= degeneracy_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = []
    projectors = []
    for g in groups:
        eigenvalues.append(float(np.mean(w[g])))
        vecs = v[:, g]
        projectors.append(vecs @ vecs.conj().T)
    return SpectralDecomposition(tuple(eigenvalues), tuple(projectors))


def kd_quasiprob(rho, E, F) -> complex:
    """Kirkwood-Dirac numerator ``Tr(F E rho)``."""
    rho, E, F = (np.asarray(x, dtype=complex) for x in (rho, E, F))
    _check_dims(rho, E, F)
    return complex(np.trace(F @ E @ rho))


def weak_value(rho, E, F) -> complex:
    """Generalised weak value ``Tr(F E rho) / Tr(F rho)``.

    Raises
    ------
    DomainError
        If pre- and postselection are orthogonal.
    """
    rho, E, F = (np.asarray(x, dtype=complex) for x in (rho, E, F))
    _check_dims(rho, E, F)
    denom = np.trace(F @ rho).real
    if denom <= ORTHOGONALITY_TOL:
        raise DomainError(f"postselection probability {denom!r} is zero: pre/postselection orthogonal")
    return kd_quasiprob(rho, E, F) / denom


@dataclass(frozen=True)
class ObservableWeakValue:
    value: complex
    eigenvalues: tuple[float, ...]
    projector_weak_values: tuple[complex, ...]
    anomalous: bool


def is_anomalous(value: complex, eigenvalues, tol: float = ANOMALY_TOL) -> bool:
    """Outside the eigenvalue range (real part) or with nonzero imaginary part."""
    return bool(
        abs(value.imag) > tol
        or value.real < min(eigenvalues) - tol
        or value.real > max(eigenvalues) + tol
    )


def weak_value_observable(rho, O, F, tol: float = ANOMALY_TOL) -> ObservableWeakValue:
    spec = herm_eigendecomp(O)
    wvs = tuple(weak_value(rho, p, F) for p in spec.projectors)
    total = complex(sum(o * w for o, w in zip(spec.eigenvalues, wvs)))
    return ObservableWeakValue(total, spec.eigenvalues, wvs, is_anomalous(total, spec.eigenvalues, tol))


def erf_family(t: float) -> dict[str, float]:
    """``erf``, ``erfc`` and the imaginary error function ``erfi = -i erf(i t)``."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("argument must be finite")
    return {
        "erf": float(special.erf(t)),
        "erfc": float(special.erfc(t)),
        "erfi": float(special.erfi(t)),
    }


def gaussian_overlap(a: float, b: float, s: float, upper: float = math.inf) -> float:
    r"""``\int_{-inf}^{upper} G_s(x-a) G_s(x-b) dx`` for the pointer wavefunction ``G_s``.

    Completing the square gives ``exp(-(a-b)^2/4s^2) * erfc((a+b-2 upper)/(2s)) / 2``.
    """
    if not s > 0:
        raise ValueError(f"pointer spread must be positive, got {s!r}")
    envelope = math.exp(-((a - b) ** 2) / (4.0 * s * s))
    if upper == math.inf:
        return envelope
    if upper == -math.inf:
        return 0.0
    return envelope * 0.5 * math.erfc((a + b - 2.0 * upper) / (2.0 * s))


def gaussian_overlap_interval(a: float, b: float, s: float, lower: float, upper: float) -> float:
    """Overlap integral restricted to ``[lower, upper]``; tails handled without cancellation."""
    if not s > 0:
        raise ValueError(f"pointer spread must be positive, got {s!r}")
    if upper < lower:
        raise ValueError("upper must not be below lower")
    mid = 0.5 * (a + b)
    envelope = math.exp(-((a - b) ** 2) / (4.0 * s * s))
    # Evaluate on whichever side of the centre keeps erfc arguments positive.
    if lower >= mid:
        lo = math.erfc((lower - mid) / s)
        hi = 0.0 if upper == math.inf else math.erfc((upper - mid) / s)
        return envelope * 0.5 * (lo - hi)
    hi = 2.0 if upper == math.inf else math.erfc((mid - upper) / s)
    lo = 0.0 if lower == -math.inf else math.erfc((mid - lower) / s)
    return envelope * 0.5 * (hi - lo)
