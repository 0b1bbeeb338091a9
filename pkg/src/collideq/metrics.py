"""State constructors and scalar diagnostics.

Gibbs states, fidelity, trace distance, effective temperature, and
entanglement negativities. States follow the package-wide (excited, ground)
basis ordering, so a thermal qubit is ``diag((1-g)/2, (1+g)/2)`` with
``g = (2*nbar + 1)^-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, InvalidSubsystem, NotDiagonal
from .tensor import DensityMatrix, QubitRegister, partial_trace, partial_transpose

_DIAG_TOL = 1e-8
_GE_SATURATION = 1.0 - 1e-12


def nbar(beta: float, omega: float) -> float:
    """Bose-Einstein occupation of a mode at gap ``omega``; 0 exactly at beta=inf."""
    if not beta > 0:
        raise InvalidParameter(f"beta must be positive (got {beta})")
    if not omega > 0:
        raise InvalidParameter(f"omega must be positive (got {omega})")
    if math.isinf(beta):
        return 0.0
    return 1.0 / math.expm1(beta * omega)


@dataclass(frozen=True)
class ThermalParams:
    """Derived thermal quantities for a qubit coupled to a bath.

    ``g`` is the equilibrium population asymmetry, equal to both
    ``1/(2*nbar + 1)`` and ``tanh(beta*omega/2)``.
    """

    beta: float
    omega: float
    nbar: float
    g: float

    @classmethod
    def from_bath(cls, beta: float, omega: float) -> "ThermalParams":
        nb = nbar(beta, omega)
        return cls(beta=beta, omega=omega, nbar=nb, g=1.0 / (2.0 * nb + 1.0))


def gibbs_qubit(beta: float, omega: float, label: str = "S") -> DensityMatrix:
    """Thermal qubit state diag((1-g)/2, (1+g)/2) in (excited, ground) order.

    Populations are evaluated as nbar/(2 nbar + 1) and (nbar+1)/(2 nbar + 1)
    so the excited population keeps full relative precision deep into the
    low-temperature tail.
    """
    nb = nbar(beta, omega)
    p_exc = nb / (2.0 * nb + 1.0)
    reg = QubitRegister([label])
    return DensityMatrix(reg, np.diag([p_exc, 1.0 - p_exc]).astype(complex))


def _same_register(rho: DensityMatrix, sigma: DensityMatrix):
    if rho.register.labels != sigma.register.labels:
        raise DimensionMismatch(
            f"states live on different registers: {rho.register.labels} vs {sigma.register.labels}"
        )


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    # Round-off can push eigenvalues slightly negative; clamp below 1e-12.
    w, v = np.linalg.eigh(mat)
    w = np.where(w < 1e-12, np.maximum(w, 0.0), w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2."""
    _same_register(rho, sigma)
    rs = _psd_sqrt(sigma.mat)
    inner = rs @ rho.mat @ rs
    w = np.linalg.eigvalsh(inner)
    w = np.clip(w, 0.0, None)
    f = float(np.sqrt(w).sum() ** 2)
    return min(f, 1.0)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    _same_register(rho, sigma)
    lam = np.linalg.eigvalsh(rho.mat - sigma.mat)
    return float(0.5 * np.abs(lam).sum())


@dataclass(frozen=True)
class EffectiveTemperature:
    """Effective inverse temperature assigned to a diagonal qubit state.

    ``g_e`` is the ground/excited population difference. ``valid`` is False
    when the state is (numerically) pure, in which case ``beta_e`` is the
    signed infinity marker. Negative ``beta_e`` (population inversion) is
    permitted.
    """

    g_e: float
    beta_e: float
    omega: float
    valid: bool

    def delta_beta(self, beta: float) -> float:
        return self.beta_e - beta


def effective_temperature(rho: DensityMatrix, omega: float) -> EffectiveTemperature:
    """Read off beta_e = (1/omega) log((1+g_e)/(1-g_e)) from a diagonal qubit state."""
    if rho.register.n_qubits != 1:
        raise DimensionMismatch("effective temperature is defined for a single qubit")
    if not omega > 0:
        raise InvalidParameter(f"omega must be positive (got {omega})")
    off = abs(rho.mat[0, 1])
    if off > _DIAG_TOL:
        raise NotDiagonal(f"off-diagonal element {off:.2e} exceeds {_DIAG_TOL}")
    p_exc = float(rho.mat[0, 0].real)
    p_gnd = float(rho.mat[1, 1].real)
    g_e = p_gnd - p_exc
    if abs(g_e) >= _GE_SATURATION or min(p_exc, p_gnd) <= 0.0:
        return EffectiveTemperature(g_e=g_e, beta_e=math.copysign(math.inf, g_e),
                                    omega=omega, valid=False)
    # log((1+g_e)/(1-g_e)) evaluated as log(p_gnd/p_exc): no cancellation
    # when one population is tiny.
    beta_e = math.log(p_gnd / p_exc) / omega
    return EffectiveTemperature(g_e=g_e, beta_e=beta_e, omega=omega, valid=True)


def fidelity_from_delta_beta(beta: float, delta_beta: float, omega: float) -> float:
    """Fidelity between thermal qubit states at beta and beta + delta_beta.

    Evaluated in log space so large exponents cannot overflow. Agrees with
    ``fidelity(gibbs_qubit(beta), gibbs_qubit(beta + delta_beta))``.
    """
    a = 0.5 * omega * (delta_beta + 2.0 * beta)
    b = omega * beta
    c = omega * (delta_beta + beta)
    log_f = 2.0 * np.logaddexp(0.0, a) - np.logaddexp(0.0, b) - np.logaddexp(0.0, c)
    return float(np.exp(log_f))


def _negative_eigs(pt: np.ndarray) -> np.ndarray:
    # eigenvalues within rounding (1e-12) of zero do not count as negative
    lam = np.linalg.eigvalsh(pt)
    return lam[lam < -1e-12]


def negativity_2(rho: DensityMatrix) -> float:
    """Two-qubit negativity 2*max(0, -lambda_min) of the partial transpose."""
    if rho.register.n_qubits != 2:
        raise DimensionMismatch("negativity_2 requires a 2-qubit state")
    lam_min = float(np.linalg.eigvalsh(partial_transpose(rho, rho.register.labels[:1])).min())
    if lam_min > -1e-12:
        return 0.0
    return -2.0 * lam_min


def negativity_bipartition(rho: DensityMatrix, part: str) -> float:
    """Negativity of one subsystem against the rest of a 3-qubit state.

    Equals the trace norm of the partial transpose minus one.
    """
    if rho.register.n_qubits != 3:
        raise DimensionMismatch("negativity_bipartition requires a 3-qubit state")
    if part not in rho.register.labels:
        raise InvalidSubsystem(f"{part!r} not in register {rho.register.labels}")
    neg = _negative_eigs(partial_transpose(rho, [part]))
    return 2.0 * float(-neg.sum())


def tripartite_negativity(rho: DensityMatrix) -> float:
    """Geometric mean of the three bipartition negativities; zero if any vanishes."""
    if rho.register.n_qubits != 3:
        raise DimensionMismatch("tripartite negativity requires a 3-qubit state")
    product = 1.0
    for label in rho.register.labels:
        n = negativity_bipartition(rho, label)
        if n == 0.0:
            return 0.0
        product *= n
    return product ** (1.0 / 3.0)


def pair_negativities(rho: DensityMatrix) -> dict:
    """Negativities of every reduced 2-qubit state of a 3-qubit state."""
    if rho.register.n_qubits != 3:
        raise DimensionMismatch("pair_negativities requires a 3-qubit state")
    a, b, c = rho.register.labels
    out = {}
    for pair in ((a, b), (a, c), (b, c)):
        out[pair] = negativity_2(partial_trace(rho, pair))
    return out
