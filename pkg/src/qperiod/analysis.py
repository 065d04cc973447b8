"""Echo, distance, and spectral diagnostics for learned unitaries."""

from dataclasses import dataclass

import numpy as np

from .linalg import as_complex_matrix, eigenphases

__all__ = [
    "EchoReport",
    "Histogram",
    "loschmidt_echo",
    "distribution_distance",
    "eigenphase_histogram",
    "echo_report",
]

N_PHASE_BINS = 20


@dataclass(frozen=True)
class EchoReport:
    """Echoes of a subject matrix against a reference on two probe states.

    For near-unitary subjects both echoes live in [0, 1.01]; the slack
    above 1 is real (approximately unitary matrices overshoot slightly)
    and is reported rather than clipped.
    """

    subject_id: str
    reference_id: str
    echo_on_zero: float
    echo_on_uniform: float


@dataclass(frozen=True)
class Histogram:
    """20-bin histogram over [-pi, pi]; counts sum to the number of phases."""

    bin_edges: np.ndarray
    counts: np.ndarray


def loschmidt_echo(u1, u2, psi) -> float:
    """L = |<psi| u1 dagger u2 |psi>|^2, the overlap of the two evolutions."""
    u1 = as_complex_matrix(u1)
    u2 = as_complex_matrix(u2)
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if not (u1.shape == u2.shape == (psi.size, psi.size)):
        raise ValueError(
            f"dimension mismatch: u1 {u1.shape}, u2 {u2.shape}, psi {psi.shape}"
        )
    return float(np.abs(np.vdot(u1 @ psi, u2 @ psi)) ** 2)


def distribution_distance(p, q) -> float:
    """Mean squared pointwise difference: sum((p - q)^2) / len(p)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"distributions must be equal-length vectors, got {p.shape} vs {q.shape}")
    d = p - q
    return float(np.dot(d, d) / p.size)


def eigenphase_histogram(u) -> Histogram:
    """Bin the eigenphases of a near-unitary matrix into 20 bins over [-pi, pi].

    Bins are half-open [lo, hi) except the last, which is closed at +pi so
    a phase of exactly pi is counted.
    """
    phases = eigenphases(u)
    counts, edges = np.histogram(phases, bins=N_PHASE_BINS, range=(-np.pi, np.pi))
    return Histogram(bin_edges=edges, counts=counts)


def echo_report(subject, reference, n: int,
                subject_id: str = "subject", reference_id: str = "reference") -> EchoReport:
    """Echoes on |0...0> and on the uniform superposition H^n |0...0>."""
    dim = 2 ** n
    subject = as_complex_matrix(subject)
    reference = as_complex_matrix(reference)
    if subject.shape != (dim, dim) or reference.shape != (dim, dim):
        raise ValueError(
            f"matrices must be {dim}x{dim} for n={n}, got {subject.shape} and {reference.shape}"
        )
    zero = np.zeros(dim, dtype=np.complex128)
    zero[0] = 1.0
    uniform = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    return EchoReport(
        subject_id=subject_id,
        reference_id=reference_id,
        echo_on_zero=loschmidt_echo(subject, reference, zero),
        echo_on_uniform=loschmidt_echo(subject, reference, uniform),
    )
