"""Gaussian circuit algebra over N modes.

Quadratures are ordered (q_1 … q_N, p_1 … p_N) and the symplectic form is
the antisymmetric block matrix Omega = [[0, I], [-I, 0]].  A GaussianOp
stores the matrix S that propagates displacement (noise) vectors forward
through the circuit, v -> S v + d, so covariances propagate as
Sigma -> S Sigma S^T.  In this convention the named generators act as

    squeezer(alpha):      q -> alpha q,        p -> p / alpha
    beam_splitter(theta): (q_i, q_j) rotated by theta, same on p
    cx(g):                q_j -> q_j + g q_i,  p_i -> p_i - g p_j
    feedforward(xi):      q_i -> q_i - xi q_j, p_j -> p_j + xi p_i

cx is generated by exp(-i g q_i p_j), feedforward by exp(i xi p_i q_j).
Composition is in circuit order: compose([A, B]) applies A first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SYMPLECTIC_TOL = 1e-12


class SingularConditioningError(np.linalg.LinAlgError):
    """Measured covariance block is singular; carries the offending indices."""

    def __init__(self, indices):
        self.indices = tuple(indices)
        super().__init__(f"singular measured block on quadrature indices {self.indices}")


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form [[0, I], [-I, 0]] in (q..., p...) ordering."""
    ident = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, ident], [-ident, zero]])


@dataclass(frozen=True)
class GaussianOp:
    """Symplectic matrix + displacement; validated on construction."""

    S: np.ndarray
    d: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ValueError(f"S must be square 2N x 2N, got {S.shape}")
        n = S.shape[0] // 2
        om = omega(n)
        resid = np.max(np.abs(S.T @ om @ S - om))
        if resid > SYMPLECTIC_TOL * max(1.0, np.max(np.abs(S)) ** 2):
            raise ValueError(f"matrix is not symplectic (residual {resid:.3e})")
        d = np.zeros(2 * n) if self.d is None else np.asarray(self.d, dtype=float)
        if d.shape != (2 * n,):
            raise ValueError(f"displacement must have length {2*n}, got {d.shape}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "d", d)

    @property
    def n_modes(self) -> int:
        return self.S.shape[0] // 2

    def then(self, other: "GaussianOp") -> "GaussianOp":
        """This op followed by `other`."""
        if other.n_modes != self.n_modes:
            raise ValueError("mode-count mismatch in composition")
        return GaussianOp(other.S @ self.S, other.S @ self.d + other.d)

    def inverse(self) -> "GaussianOp":
        n = self.n_modes
        om = omega(n)
        s_inv = -om @ self.S.T @ om  # symplectic inverse, exact up to roundoff
        return GaussianOp(s_inv, -(s_inv @ self.d))


def identity_op(n_modes: int) -> GaussianOp:
    return GaussianOp(np.eye(2 * n_modes))


def _check_mode(i: int, n_modes: int):
    if not 0 <= i < n_modes:
        raise ValueError(f"mode index {i} out of range for {n_modes} modes")


def beam_splitter(theta: float, i: int, j: int, n_modes: int) -> GaussianOp:
    """BS(theta) = exp(i theta (p_i q_j - q_i p_j)): rotation in the (i, j) plane."""
    _check_mode(i, n_modes)
    _check_mode(j, n_modes)
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    S = np.eye(2 * n_modes)
    c, s = math.cos(theta), math.sin(theta)
    for off in (0, n_modes):  # same rotation block on q and on p
        S[off + i, off + i] = c
        S[off + i, off + j] = -s
        S[off + j, off + i] = s
        S[off + j, off + j] = c
    return GaussianOp(S)


def squeezer(alpha: float, i: int, n_modes: int) -> GaussianOp:
    """Single-mode squeeze: q_i -> alpha q_i, p_i -> p_i / alpha (alpha > 0)."""
    if alpha <= 0:
        raise ValueError(f"squeezer requires alpha > 0, got {alpha}")
    _check_mode(i, n_modes)
    S = np.eye(2 * n_modes)
    S[i, i] = alpha
    S[n_modes + i, n_modes + i] = 1.0 / alpha
    return GaussianOp(S)


def cx(g: float, i: int, j: int, n_modes: int) -> GaussianOp:
    """Logical CX generated by exp(-i g q_i p_j): q_j += g q_i, p_i -= g p_j."""
    _check_mode(i, n_modes)
    _check_mode(j, n_modes)
    if i == j:
        raise ValueError("cx needs two distinct modes")
    S = np.eye(2 * n_modes)
    S[j, i] = g
    S[n_modes + i, n_modes + j] = -g
    return GaussianOp(S)


def feedforward(xi: float, i: int, j: int, n_modes: int) -> GaussianOp:
    """exp(i xi p_i q_j): q_i -= xi q_j, p_j += xi p_i."""
    _check_mode(i, n_modes)
    _check_mode(j, n_modes)
    if i == j:
        raise ValueError("feedforward needs two distinct modes")
    S = np.eye(2 * n_modes)
    S[i, j] = -xi
    S[n_modes + j, n_modes + i] = xi
    return GaussianOp(S)


_GENERATORS = {
    "beam_splitter": beam_splitter,
    "squeezer": squeezer,
    "cx": cx,
    "feedforward": feedforward,
}


def generator(kind: str, n_modes: int, **params) -> GaussianOp:
    """Dispatch a named generator; see the module docstring for conventions."""
    try:
        fn = _GENERATORS[kind]
    except KeyError:
        raise ValueError(
            f"unknown generator {kind!r}; expected one of {sorted(_GENERATORS)}"
        ) from None
    return fn(n_modes=n_modes, **params)


def compose(ops) -> GaussianOp:
    """Compose in circuit order (first element applied first)."""
    ops = list(ops)
    if not ops:
        raise ValueError("compose needs at least one op")
    out = ops[0]
    for op in ops[1:]:
        out = out.then(op)
    return out


# ---------------------------------------------------------------------------
# Biasing / morphing parameter maps
# ---------------------------------------------------------------------------


def biasing_update(delta: float, lam: float) -> tuple[float, float]:
    """Output squeezing of the biased q-Steane round with ancilla asymmetry lam.

    (delta_q, delta_p) = (Delta/sqrt(1+lam), Delta*sqrt(1+lam)); the product
    stays Delta^2, saturating the Gaussian trade-off bound.
    """
    if delta <= 0 or lam <= 0:
        raise ValueError("biasing_update requires delta > 0 and lam > 0")
    r = math.sqrt(1.0 + lam)
    return delta / r, delta * r


def morphing_params(lam: float) -> tuple[float, float, float, float]:
    """Beam-splitter rearrangement of the asymmetry-lam biasing circuit.

    Returns (xi, theta, alpha1, alpha2) = (sqrt(lam)/(lam+1), arctan(sqrt(lam)),
    sqrt(lam+1), 1/sqrt(lam+1)); with these, cx(sqrt(lam)) followed by
    feedforward(xi) equals a beam splitter at theta followed by single-mode
    squeezes, see morphing_rhs().
    """
    if lam <= 0:
        raise ValueError(f"morphing_params requires lam > 0, got {lam}")
    rt = math.sqrt(lam)
    return rt / (lam + 1.0), math.atan(rt), math.sqrt(lam + 1.0), 1.0 / math.sqrt(lam + 1.0)


def breeding_angle(lam: float) -> float:
    """Beam-splitter angle arctan(1/sqrt(lam)) of one passive breeding round.

    One round converts a rectangular code of integer asymmetry lam >= 1 into
    one with asymmetry lam + 1.
    """
    if lam < 1:
        raise ValueError(f"breeding_angle requires lam >= 1, got {lam}")
    return math.atan(1.0 / math.sqrt(lam))


def morphing_rhs(theta: float, alpha1: float, alpha2: float) -> GaussianOp:
    """Right-hand side of the rearrangement identity as one block matrix.

    [[cos/a1, -sin/a1, 0, 0], [sin/a2, cos/a2, 0, 0],
     [0, 0, a1 cos, -a1 sin], [0, 0, a2 sin, a2 cos]]
    equals BS(theta) followed by the Sq(alpha1) x Sq(alpha2) pair.
    """
    c, s = math.cos(theta), math.sin(theta)
    S = np.array(
        [
            [c / alpha1, -s / alpha1, 0.0, 0.0],
            [s / alpha2, c / alpha2, 0.0, 0.0],
            [0.0, 0.0, alpha1 * c, -alpha1 * s],
            [0.0, 0.0, alpha2 * s, alpha2 * c],
        ]
    )
    return GaussianOp(S)


def morphing_identity_residual(lam: float) -> float:
    """Max-abs residual of the rearrangement identity at asymmetry lam."""
    xi, theta, a1, a2 = morphing_params(lam)
    lhs = compose([cx(math.sqrt(lam), 0, 1, 2), feedforward(xi, 0, 1, 2)])
    rhs = morphing_rhs(theta, a1, a2)
    return float(np.max(np.abs(lhs.S - rhs.S)))


def qsteane_identity_residual() -> float:
    """Residual of the q-Steane rewrite: cx(1), ff(1/2) vs BS(pi/4) + squeezes.

    The squeezer pair is 1/sqrt(2) on the data mode and sqrt(2) on the
    ancilla; this is the lam = 1 instance of the rearrangement identity.
    """
    lhs = compose([cx(1.0, 0, 1, 2), feedforward(0.5, 0, 1, 2)])
    rhs = compose(
        [
            beam_splitter(math.pi / 4, 0, 1, 2),
            squeezer(1.0 / math.sqrt(2), 0, 2),
            squeezer(math.sqrt(2), 1, 2),
        ]
    )
    return float(np.max(np.abs(lhs.S - rhs.S)))


def breeding_identity_residual(lam: float) -> float:
    """Residual of the passive breeding rewrite (the lam -> 1/lam instance)."""
    rt = math.sqrt(lam)
    lhs = compose([cx(1.0 / rt, 0, 1, 2), feedforward(rt / (lam + 1.0), 0, 1, 2)])
    rhs = morphing_rhs(
        breeding_angle(lam) if lam >= 1 else math.atan(1.0 / rt),
        math.sqrt((lam + 1.0) / lam),
        math.sqrt(lam / (lam + 1.0)),
    )
    return float(np.max(np.abs(lhs.S - rhs.S)))


# ---------------------------------------------------------------------------
# Covariance propagation and conditioning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovState:
    """Mean and covariance of the displacement noise on 2N quadratures.

    Convention: the Gaussian weight is exp(-pi v^T Sigma^{-1} v), i.e. Sigma
    carries the sqrt(2 pi)-rescaled second moments.
    """

    mu: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        Sigma = np.asarray(self.Sigma, dtype=float)
        if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
            raise ValueError("Sigma must be square")
        if mu.shape != (Sigma.shape[0],):
            raise ValueError("mu / Sigma size mismatch")
        if np.max(np.abs(Sigma - Sigma.T)) > 1e-10 * max(1.0, np.max(np.abs(Sigma))):
            raise ValueError("Sigma must be symmetric")
        eigs = np.linalg.eigvalsh((Sigma + Sigma.T) / 2)
        if eigs.min() < -1e-10 * max(1.0, eigs.max()):
            raise ValueError("Sigma must be positive semi-definite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", Sigma)

    def propagate(self, op: GaussianOp) -> "CovState":
        return CovState(op.S @ self.mu + op.d, op.S @ self.Sigma @ op.S.T)


def condition_on_homodyne(
    state: CovState, measured_indices
) -> tuple[CovState, np.ndarray]:
    """Condition the noise Gaussian on the listed quadrature indices.

    Returns the Schur-complement conditional state on the remaining
    quadratures and the gain matrix Sigma_DA Sigma_AA^{-1} that maps a
    measured outcome vector to the conditional mean shift.  The conditional
    covariance is outcome independent.
    """
    meas = sorted(set(int(i) for i in measured_indices))
    dim = state.Sigma.shape[0]
    if any(i < 0 or i >= dim for i in meas):
        raise ValueError(f"measured indices {meas} out of range for dim {dim}")
    keep = [i for i in range(dim) if i not in meas]
    s_dd = state.Sigma[np.ix_(keep, keep)]
    s_da = state.Sigma[np.ix_(keep, meas)]
    s_aa = state.Sigma[np.ix_(meas, meas)]
    try:
        gain = np.linalg.solve(s_aa, s_da.T).T
    except np.linalg.LinAlgError:
        raise SingularConditioningError(meas) from None
    cond = np.linalg.cond(s_aa)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularConditioningError(meas)
    sigma_c = s_dd - gain @ s_da.T
    sigma_c = (sigma_c + sigma_c.T) / 2
    mu_c = state.mu[keep]  # mean for the zero-outcome branch; gain shifts it
    return CovState(mu_c, sigma_c), gain


def nogo_check(circuit: GaussianOp, n_ancilla: int, delta: float) -> float:
    """det of the data mode's conditional noise covariance after the circuit.

    Input noise Delta^2 * Id on 1 data + n_ancilla modes, all ancilla
    position quadratures measured.  The Gaussian no-go bound makes this
    determinant exactly Delta^4 for every symplectic circuit.
    """
    n = 1 + n_ancilla
    if circuit.n_modes != n:
        raise ValueError(
            f"circuit acts on {circuit.n_modes} modes, expected {n}"
        )
    state = CovState(np.zeros(2 * n), delta**2 * np.eye(2 * n)).propagate(circuit)
    cond, _gain = condition_on_homodyne(state, range(1, n))  # ancilla q's
    # Remaining quadratures are ordered (q_data, p_data, p_anc...); the bound
    # concerns the 2x2 data block.
    return float(np.linalg.det(cond.Sigma[:2, :2]))


def random_circuit(
    n_modes: int, n_gates: int, rng: np.random.Generator
) -> GaussianOp:
    """Seeded product of random generators; any such family obeys the no-go."""
    # Parameter ranges are kept moderate so products stay well scaled; the
    # bound is universal, but determinant checks at 1e-10 relative need
    # condition numbers a few orders below 1/eps.
    ops = []
    for _ in range(n_gates):
        kind = rng.integers(0, 4)
        if kind == 0:
            ops.append(squeezer(float(np.exp(rng.uniform(-0.5, 0.5))), int(rng.integers(n_modes)), n_modes))
        else:
            i, j = rng.choice(n_modes, size=2, replace=False)
            if kind == 1:
                ops.append(beam_splitter(float(rng.uniform(0, np.pi)), int(i), int(j), n_modes))
            elif kind == 2:
                ops.append(cx(float(rng.uniform(-1, 1)), int(i), int(j), n_modes))
            else:
                ops.append(feedforward(float(rng.uniform(-1, 1)), int(i), int(j), n_modes))
    return compose(ops) if ops else identity_op(n_modes)


@dataclass(frozen=True)
class BiasParams:
    """Base squeezing Delta split asymmetrically over the two quadratures."""

    delta: float
    lam: float

    def __post_init__(self):
        if self.delta <= 0 or self.lam <= 0:
            raise ValueError("BiasParams requires delta > 0 and lam > 0")

    @property
    def delta_q(self) -> float:
        return self.delta / math.sqrt(self.lam)

    @property
    def delta_p(self) -> float:
        return self.delta * math.sqrt(self.lam)
