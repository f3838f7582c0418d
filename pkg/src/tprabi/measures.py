"""Diagnostics on joint and reduced states.

Partial-transpose entanglement witness, dressed second-order correlation,
Wigner quasi-probability and its negativity average, partial traces, and
the six-component observation vector used by the control agent.

The Wigner convention is the displaced-parity one,

    W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)+],

sampled on a rectangular grid of alpha = x + i p, which normalizes to
integral W dx dp = 1 and gives W(0,0) = 2/pi for the vacuum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalDrift, ZeroPopulation
from .fock import cavity_ops, embed_cavity, embed_qubit, qubit_ops
from .spectral import DressedOperator

# Eigenvalues of the partial transpose smaller than this in magnitude are
# numerical noise, not entanglement.
WITNESS_CLIP = 1e-9

OBSERVATION_LABELS = ("exp_n", "exp_sp_sm", "exp_x2", "exp_x", "exp_sx2", "exp_sx")


def _split_dims(rho: np.ndarray) -> int:
    d = rho.shape[0]
    if rho.shape != (d, d) or d % 2 != 0:
        raise ValueError(f"expected a joint (2M x 2M) matrix, got shape {rho.shape}")
    return d // 2


def partial_transpose(rho: np.ndarray, subsystem: str = "qubit") -> np.ndarray:
    """Transpose the indices of one tensor factor of a joint state."""
    m = _split_dims(rho)
    r = rho.reshape(2, m, 2, m)
    if subsystem == "qubit":
        r = r.transpose(2, 1, 0, 3)
    elif subsystem == "cavity":
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'qubit' or 'cavity', got {subsystem!r}")
    return np.ascontiguousarray(r.reshape(2 * m, 2 * m))


def entanglement_witness(rho: np.ndarray) -> float:
    """Sum of |negative eigenvalues| of the qubit partial transpose.

    Positive values certify qubit-cavity entanglement (Peres-Horodecki);
    zero for every separable state of the 2 x M system.
    """
    w = np.linalg.eigvalsh(partial_transpose(rho, "qubit"))
    neg = w[w < -WITNESS_CLIP]
    return float(-neg.sum()) if neg.size else 0.0


def second_order_correlation(rho: np.ndarray, dressed: DressedOperator) -> float:
    """Equal-time g2 with dressed operators, normally ordered.

    g2 = Tr[rho Xm Xm Xp Xp] / Tr[rho Xm Xp]^2 with Xp the dressed
    lowering part, which reduces to <a+^2 a^2> / <a+ a>^2 at weak coupling.
    """
    xp, xm = dressed.x_plus, dressed.x_minus
    population = np.real(np.trace(rho @ (xm @ xp)))
    if population < 1e-12:
        raise ZeroPopulation(f"dressed population {population:.3e} too small for g2")
    numerator = np.real(np.trace(rho @ (xm @ xm @ xp @ xp)))
    return float(numerator / population**2)


@dataclass(frozen=True)
class WignerGrid:
    """W(x, p) sampled on a rectangular grid; values[i, j] = W(x_i, p_j)."""

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int
    n_p: int
    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def cell_area(self) -> float:
        dx = (self.x_max - self.x_min) / (self.n_x - 1)
        dp = (self.p_max - self.p_min) / (self.n_p - 1)
        return dx * dp


def _laguerre_clenshaw(order: int, x: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    """Clenshaw evaluation of sum_n c_n LL_n^order(x) with
    LL_n^L = (-1)^n sqrt(L! n! / (L+n)!) L_n^L(x)."""
    if len(coeff) == 1:
        y0 = coeff[0] + 0.0 * x
        y1 = 0.0 * x
    elif len(coeff) == 2:
        y0 = coeff[0] + 0.0 * x
        y1 = coeff[1] + 0.0 * x
    else:
        k = len(coeff)
        y0 = coeff[-2] + 0.0 * x
        y1 = coeff[-1] + 0.0 * x
        for i in range(3, len(coeff) + 1):
            k -= 1
            y0, y1 = (
                coeff[-i] - y1 * np.sqrt(((k - 1.0) * (order + k - 1.0)) / ((order + k) * k)),
                y0 - y1 * ((order + 2.0 * k - 1.0) - x) / np.sqrt((order + k) * k),
            )
    return y0 - y1 * ((order + 1.0) - x) / np.sqrt(order + 1.0)


def wigner(rho_cavity: np.ndarray, x_min=-5.0, x_max=5.0, p_min=-5.0, p_max=5.0,
           n_x: int = 100, n_p: int = 100) -> WignerGrid:
    """Wigner function of a cavity state on a grid of alpha = x + i p.

    Evaluates the displaced-parity form through the Laguerre/Clenshaw
    recurrence over the Fock-basis diagonals of rho, which is numerically
    stable and fast enough for phase-diagram sweeps.
    """
    n = rho_cavity.shape[0]
    xs = np.linspace(x_min, x_max, n_x)
    ps = np.linspace(p_min, p_max, n_p)
    xg, pg = np.meshgrid(xs, ps, indexing="ij")
    a2 = 2.0 * (xg + 1j * pg)
    b = np.abs(a2) ** 2
    if n == 1:
        values = np.real(rho_cavity[0, 0]) * np.exp(-0.5 * b) * (2.0 / np.pi)
    else:
        w = (2.0 * rho_cavity[0, -1]) * np.ones_like(a2)
        doubled = rho_cavity * (2.0 - np.eye(n))
        for off in range(n - 2, -1, -1):
            w = _laguerre_clenshaw(off, b, np.diag(doubled, off)) + w * a2 / np.sqrt(off + 1.0)
        values = np.real(w) * np.exp(-0.5 * b) * (2.0 / np.pi)
    return WignerGrid(x_min=x_min, x_max=x_max, p_min=p_min, p_max=p_max,
                      n_x=n_x, n_p=n_p, values=values)


def wigner_negativity_average(grid: WignerGrid) -> float:
    """Average of the negative Wigner samples over the total sample count."""
    values = grid.values
    total = values.size
    negative = values[values < 0.0]
    if negative.size == 0:
        return 0.0
    return float(negative.sum() / total)


def reduced_state(rho: np.ndarray, keep: str) -> np.ndarray:
    """Partial trace of a joint state, keeping 'qubit' or 'cavity'."""
    m = _split_dims(rho)
    r = rho.reshape(2, m, 2, m)
    if keep == "qubit":
        return np.einsum("injn->ij", r)
    if keep == "cavity":
        return np.einsum("inim->nm", r)
    raise ValueError(f"keep must be 'qubit' or 'cavity', got {keep!r}")


_OBS_CACHE: dict[int, list[np.ndarray]] = {}


def observation_operators(m_trunc: int) -> list[np.ndarray]:
    """Joint-space operators behind the six observation components, in order:
    n, sigma+ sigma-, (a+ + a)^2, a+ + a, (sigma+ + sigma-)^2, sigma+ + sigma-."""
    ops = _OBS_CACHE.get(m_trunc)
    if ops is None:
        a, a_dag, n_op = cavity_ops(m_trunc)
        _, sp, sm = qubit_ops()
        x = a + a_dag
        sx = sp + sm
        ops = [
            embed_cavity(n_op),
            embed_qubit(sp @ sm, m_trunc),
            embed_cavity(x @ x),
            embed_cavity(x),
            embed_qubit(sx @ sx, m_trunc),
            embed_qubit(sx, m_trunc),
        ]
        _OBS_CACHE[m_trunc] = ops
    return ops


def observe(rho: np.ndarray, imag_tol: float = 1e-6) -> np.ndarray:
    """The six expectation values fed to the control agent, as a real vector."""
    m = _split_dims(rho)
    out = np.empty(6)
    for i, op in enumerate(observation_operators(m)):
        # Tr[op rho] without the full matrix product
        val = np.sum(op.T * rho)
        if abs(val.imag) > imag_tol:
            raise NumericalDrift(
                f"observation {OBSERVATION_LABELS[i]} has imaginary part {val.imag:.3e}"
            )
        out[i] = val.real
    return out
