"""Closed-form error analysis for polynomial phase gates on GKP states.

Contents:

* first/second moments of the twirled propagated-error displacement
  distribution for an arbitrary gate polynomial (derivative approximation,
  exact Gaussian-moment sums),
* the exact twirled density of the minimal cubic gate (shear-shifted
  Gaussian product) and its normalisation C(Δ, λ) with Jacobi θ3 factors,
* the asymptotically optimal asymmetry and the Erf-product fault-tolerance
  fidelity lower bound with its validity window Δ ≲ 0.372,
* square-code logical characteristic functions as phase-weighted lattice
  sums, and the vacuum-method posterior (syndrome density + conditional
  Bloch vector) built from them.

Displacement units follow the rest of the package: W(v) with v in units of
sqrt(2π), correctable patch (-1/sqrt(8), 1/sqrt(8)]^2, logical Paulis at the
half-lattice offsets l_X = (1/sqrt(2), 0), l_Y = (1/sqrt(2), 1/sqrt(2)),
l_Z = (0, 1/sqrt(2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import erf, gamma

from .polyalg import RationalPolynomial

PATCH_HALF = 1.0 / math.sqrt(8.0)

PAULI_OFFSETS = {
    "I": (0.0, 0.0),
    "X": (1.0 / math.sqrt(2.0), 0.0),
    "Y": (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)),
    "Z": (0.0, 1.0 / math.sqrt(2.0)),
}


class NotApplicableError(ValueError):
    """Requested quantity is undefined for this input (e.g. degree < 3)."""


class AccuracyError(RuntimeError):
    """A truncated lattice sum has not converged at the requested cut."""


# ---------------------------------------------------------------------------
# Moments of the twirled error distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSummary:
    """Second moments of the twirled displacement error; the mean is zero."""

    e_vq2: float
    e_vp2: float
    e_vqvp: float

    def __post_init__(self):
        if self.e_vq2 < 0 or self.e_vp2 < 0:
            raise ValueError("variances must be nonnegative")
        if self.e_vqvp**2 > self.e_vq2 * self.e_vp2 * (1 + 1e-12):
            raise ValueError("cross moment violates Cauchy-Schwarz")


def beta_coefficient(k: int) -> float:
    """β_k = 2k(k-1) / sqrt(2)^(k-1), the shear weight of the x^k term."""
    return 2.0 * k * (k - 1) / math.sqrt(2.0) ** (k - 1)


def _x_plus_moment(k: int, delta_p: float) -> float:
    """E[x₊^k] of the width-sqrt(2)/Δ_p Gaussian; vanishes for odd k."""
    if k % 2:
        return 0.0
    return (
        2.0 ** (k / 2.0 - 1.0)
        * 2.0
        * math.pi ** (-(1.0 + k) / 2.0)
        * gamma((1.0 + k) / 2.0)
        * delta_p ** (-k)
    )


def moments(
    poly: RationalPolynomial, delta_q: float, delta_p: float
) -> MomentSummary:
    """Exact closed-form second moments for the gate polynomial `poly`.

    E(v_q²) = Δ_q²/(4π) is gate independent.  The momentum variance carries
    the full double sum over coefficient pairs,
    E(v_p²) = Δ_p²/(4π) + Δ_q²/(2π) Σ_{j,k>=2} a_j a_k β_j β_k E[x₊^{j+k-4}],
    and the cross term keeps only even k (odd Gaussian moments vanish).
    """
    if delta_q <= 0 or delta_p <= 0:
        raise ValueError("moments needs positive widths")
    n = poly.degree
    e_vq2 = delta_q**2 / (4.0 * math.pi)
    shear = 0.0
    for j in range(2, n + 1):
        aj = float(poly.coeff(j))
        if aj == 0.0:
            continue
        for k in range(2, n + 1):
            ak = float(poly.coeff(k))
            if ak == 0.0:
                continue
            shear += (
                aj * ak * beta_coefficient(j) * beta_coefficient(k)
                * _x_plus_moment(j + k - 4, delta_p)
            )
    e_vp2 = delta_p**2 / (4.0 * math.pi) + delta_q**2 / (2.0 * math.pi) * shear
    cross = 0.0
    for k in range(2, n + 1, 2):
        ak = float(poly.coeff(k))
        if ak:
            cross += ak * beta_coefficient(k) * _x_plus_moment(k - 2, delta_p)
    e_vqvp = delta_q**2 / (2.0 * math.sqrt(2.0) * math.pi) * cross
    return MomentSummary(e_vq2, e_vp2, e_vqvp)


def shear_variance_leading(poly: RationalPolynomial) -> Fraction:
    """Exact rational (a_n β_n)² = 4 a_n² n²(n-1)²/2^{n-1}, the leading shear weight.

    Ratios of this quantity between same-degree gates are exact; the shared
    Γ and π factors of E(v_p²)'s leading term cancel.
    """
    n = poly.degree
    if n < 2:
        return Fraction(0)
    a_n = poly.coeff(n)
    return a_n**2 * Fraction(4 * n**2 * (n - 1) ** 2, 2 ** (n - 1))


def shear_variance_ratio(p: RationalPolynomial, q: RationalPolynomial) -> Fraction:
    """Exact ratio of leading gate-induced E(v_p²) terms (same degree required)."""
    if p.degree != q.degree:
        raise ValueError("shear-variance ratio needs equal-degree polynomials")
    return shear_variance_leading(p) / shear_variance_leading(q)


# ---------------------------------------------------------------------------
# Exact twirled density of the minimal cubic gate
# ---------------------------------------------------------------------------


def theta3(q: float, tol: float = 1e-15) -> float:
    """Jacobi θ3(0, q) = 1 + 2 Σ q^(n²), truncated at term size tol."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"theta3 needs 0 <= q < 1, got {q}")
    total = 1.0
    n = 1
    while True:
        term = 2.0 * q ** (n * n)
        if term < tol:
            return total
        total += term
        n += 1


def chi_norm_constant(delta: float, lam: float) -> float:
    """C(Δ, λ) = 2 coth(Δ²) tanh(Δ²/2) θ3(e^{-π coth(Δ²)/λ}) θ3(e^{-π λ coth(Δ²)})."""
    if delta <= 0 or lam <= 0:
        raise ValueError("chi_norm_constant needs positive arguments")
    coth = 1.0 / math.tanh(delta**2)
    t = math.tanh(delta**2 / 2.0)
    return (
        2.0 * coth * t
        * theta3(math.exp(-math.pi * coth / lam))
        * theta3(math.exp(-math.pi * lam * coth))
    )


def _normal_1d(var: float, x) -> np.ndarray:
    """exp(-π x²/Σ)/sqrt(Σ): the rescaled-variance Gaussian, unit mass."""
    return np.exp(-math.pi * np.square(x) / var) / math.sqrt(var)


@dataclass(frozen=True)
class TwirledCubicDensity:
    """Exact twirled displacement density of the minimal cubic gate.

    The v_p marginal at fixed v_q is a normal density with mean
    v_q/2 - v_q²/sqrt(2) and variance v_q²/(2λ tanh(Δ²/2)) + λ tanh(Δ²/2);
    v_q itself is normal with variance tanh(Δ²/2)/λ.  Both factors carry
    unit mass, so the density integrates to one exactly; C(Δ, λ) relates it
    to |χ_E|²/ξ (divide by C) and feeds the fidelity lower bound.
    """

    delta: float
    lam: float

    def __post_init__(self):
        if self.delta <= 0 or self.lam <= 0:
            raise ValueError("TwirledCubicDensity needs positive parameters")

    @property
    def norm_constant(self) -> float:
        return chi_norm_constant(self.delta, self.lam)

    @property
    def sigma_q(self) -> float:
        return math.tanh(self.delta**2 / 2.0) / self.lam

    def sigma_p(self, v_q) -> np.ndarray:
        t = math.tanh(self.delta**2 / 2.0)
        return np.square(v_q) / (2.0 * self.lam * t) + self.lam * t

    def mean_p(self, v_q) -> np.ndarray:
        return np.asarray(v_q) / 2.0 - np.square(v_q) / math.sqrt(2.0)

    def __call__(self, v_q, v_p) -> np.ndarray:
        v_q = np.asarray(v_q, dtype=float)
        v_p = np.asarray(v_p, dtype=float)
        return _normal_1d(self.sigma_q, v_q) * np.exp(
            -math.pi * np.square(v_p - self.mean_p(v_q)) / self.sigma_p(v_q)
        ) / np.sqrt(self.sigma_p(v_q))

    def patch_probability(self, center=(0.0, 0.0), n_quad: int = 400) -> float:
        """Probability mass inside the correctable patch centred at `center`."""
        cq, cp = center
        vq = cq + np.linspace(-PATCH_HALF, PATCH_HALF, n_quad)
        dq = vq[1] - vq[0]
        lo, hi = cp - PATCH_HALF, cp + PATCH_HALF
        sp = self.sigma_p(vq)
        mp = self.mean_p(vq)
        inner = 0.5 * (
            erf(math.sqrt(math.pi) * (hi - mp) / np.sqrt(sp))
            - erf(math.sqrt(math.pi) * (lo - mp) / np.sqrt(sp))
        )
        return float(np.sum(_normal_1d(self.sigma_q, vq) * inner) * dq)


def cubic_twirled_density(delta: float, lam: float, v) -> float:
    """Density value of the exact cubic twirled distribution at v = (v_q, v_p)."""
    return float(TwirledCubicDensity(delta, lam)(v[0], v[1]))


# ---------------------------------------------------------------------------
# Optimal bias and the fault-tolerance bound
# ---------------------------------------------------------------------------


def _leading_shear_constant(poly: RationalPolynomial) -> float:
    n = poly.degree
    a_n = float(poly.coeff(n))
    return (
        a_n**2
        * beta_coefficient(n) ** 2
        * 2.0 ** (n - 3)
        * math.pi ** (0.5 - n)
        * gamma(n - 1.5)
    )


def vp2_leading(poly: RationalPolynomial, delta: float, lam: float) -> float:
    """Leading-term E(v_p²) objective Δ²λ/(4π) + K Δ^{6-2n} λ^{1-n}."""
    n = poly.degree
    k = _leading_shear_constant(poly)
    return delta**2 * lam / (4.0 * math.pi) + k * delta ** (6 - 2 * n) * lam ** (1 - n)


def lambda_opt_asymptotic(poly: RationalPolynomial, delta: float) -> float:
    """Asymmetry minimising the leading E(v_p²), the n-th-root expression.

    λ_opt = [4π(n-1) a_n² β_n² 2^{n-3} π^{1/2-n} Γ(n-3/2) / Δ^{2n-4}]^{1/n},
    an O(Δ^{4/n-2}) growth.  Degree-2 gates spread no shear, so biasing is
    not applicable below degree 3.
    """
    n = poly.degree
    if n < 3:
        raise NotApplicableError(
            f"optimal biasing needs a gate of degree >= 3, got degree {n}"
        )
    if delta <= 0:
        raise ValueError("delta must be positive")
    k = _leading_shear_constant(poly)
    return (4.0 * math.pi * (n - 1) * k / delta ** (2 * n - 4)) ** (1.0 / n)


FT_VALIDITY_DELTA = math.sqrt(2.0) * math.sqrt(math.atanh((3.0 / 2.0) ** 0.25 / 16.0))


@dataclass(frozen=True)
class BoundResult:
    delta: float
    lam_of_delta: float
    f_lower_bound: float
    validity: bool


def ft_lambda_ansatz(delta: float) -> float:
    """λ(Δ) = (3^{2/5}/2^{4/5}) tanh(Δ²/2)^{-3/5}, the bound-optimal bias."""
    return 3.0 ** 0.4 / 2.0 ** 0.8 * math.tanh(delta**2 / 2.0) ** (-0.6)


def ft_lower_bound(delta: float) -> BoundResult:
    """Erf-product fidelity lower bound for the minimal cubic gate.

    p_E(0) is bounded below by the product of the two Erf factors at
    λ = λ(Δ); the lattice tail is majorised by 1 - p_E(0), so the bound on
    the central-patch weight is (2 p_E(0) - 1)/C(Δ,λ), squared and mapped
    through F = 1/3 + (2/3)(...)².  Valid (non-vacuous interval restriction)
    for Δ below ≈ 0.372.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    lam = ft_lambda_ansatz(delta)
    t = math.tanh(delta**2 / 2.0)
    valid = delta <= FT_VALIDITY_DELTA
    erf1 = erf(math.sqrt(math.pi) / (t / lam) ** 0.25)
    inner = math.sqrt(t / lam) / (2.0 * lam * t) + lam * t
    erf2 = erf(math.sqrt(math.pi) / (4.0 * math.sqrt(8.0) * math.sqrt(inner)))
    p0 = erf1 * erf2
    core = max(0.0, 2.0 * p0 - 1.0) / chi_norm_constant(delta, lam)
    f_lb = 1.0 / 3.0 + (2.0 / 3.0) * core**2
    return BoundResult(delta, lam, min(f_lb, 1.0), valid)


# ---------------------------------------------------------------------------
# Logical characteristic functions and the vacuum-method posterior
# ---------------------------------------------------------------------------


def thermal_characteristic(n_bar: float):
    """χ(v) = exp(-π |v|² (n̄ + 1/2)) of the thermal state, real and even."""

    def chi(v_q, v_p):
        return np.exp(-math.pi * (np.square(v_q) + np.square(v_p)) * (n_bar + 0.5))

    return chi


def _wedge(aq, ap, bq, bp):
    return aq * bp - ap * bq


def logical_char_function(
    chi, pauli: str, v: tuple[float, float], lattice_cut: int = 6
) -> complex:
    """ξ^σ(v) = Σ_n e^{iθ(v,σ,n)} χ(v + l_σ + sqrt(2) n) over the square lattice.

    θ = π[v ∧ l_σ + (v + l_σ) ∧ sqrt(2)n] follows from the displacement
    composition rule with σ̄ = W(l_σ).  Raises AccuracyError when the
    outermost lattice shell still contributes at the 1e-12 level.
    """
    pauli = pauli.upper()
    if pauli not in PAULI_OFFSETS:
        raise ValueError(f"pauli must be one of I, X, Y, Z; got {pauli!r}")
    v_q, v_p = float(v[0]), float(v[1])
    if not (-PATCH_HALF < v_q <= PATCH_HALF and -PATCH_HALF < v_p <= PATCH_HALF):
        raise ValueError(f"v = {v} lies outside the correctable patch")
    lq, lp = PAULI_OFFSETS[pauli]
    ns = np.arange(-lattice_cut, lattice_cut + 1)
    nq, np_ = np.meshgrid(ns, ns, indexing="ij")
    uq = v_q + lq + math.sqrt(2.0) * nq
    up = v_p + lp + math.sqrt(2.0) * np_
    theta = math.pi * (
        _wedge(v_q, v_p, lq, lp)
        + _wedge(v_q + lq, v_p + lp, math.sqrt(2.0) * nq, math.sqrt(2.0) * np_)
    )
    terms = np.exp(1j * theta) * chi(uq, up)
    total = complex(np.sum(terms))
    shell = np.abs(terms)[(np.abs(nq) == lattice_cut) | (np.abs(np_) == lattice_cut)]
    if shell.sum() > 1e-12 * max(abs(total), 1e-300):
        raise AccuracyError(
            f"lattice sum not converged at cut {lattice_cut} (shell {shell.sum():.2e})"
        )
    return total


_PAULI_STAB_SIGNS = {
    "I": lambda sq, sp: np.ones_like(sq, dtype=float),
    "X": lambda sq, sp: (-1.0) ** np.abs(sp),
    "Y": lambda sq, sp: (-1.0) ** (np.abs(sq) + np.abs(sp)),
    "Z": lambda sq, sp: (-1.0) ** np.abs(sq),
}


def _posterior_sums(delta: float, vq_axis: np.ndarray, vp_axis: np.ndarray, lattice_cut: int):
    """g_μ(v) = tr[ρ_th W(v) Π_μ W(v)†] on a separable grid, all four μ.

    Π_μ = σ̄_μ Σ_s W(sqrt(2) s) gives g_μ(v) = Σ_s sign_μ(s)
    e^{-2πi v∧u_s} χ(u_s) with u_s = l_μ + sqrt(2) s and the thermal χ.
    Separability in (s_q, s_p) turns the grid evaluation into two small
    matrix products per Pauli.
    """
    n_bar = math.tanh(delta**2 / 2.0)
    kappa = n_bar + 0.5
    ss = np.arange(-lattice_cut, lattice_cut + 1)
    out = {}
    for mu, (lq, lp) in PAULI_OFFSETS.items():
        uq = lq + math.sqrt(2.0) * ss  # indexed by s_q
        up = lp + math.sqrt(2.0) * ss  # indexed by s_p
        sq, sp = np.meshgrid(ss, ss, indexing="ij")
        coeff = _PAULI_STAB_SIGNS[mu](sq, sp) * np.exp(
            -math.pi * kappa * (uq[:, None] ** 2 + up[None, :] ** 2)
        )
        a = np.exp(-2j * math.pi * np.outer(vq_axis, up))  # (Nq, s_p)
        b = np.exp(2j * math.pi * np.outer(vp_axis, uq))  # (Np, s_q)
        out[mu] = (a @ coeff.T @ b.T).real  # (Nq, Np), real by term pairing
    return out


def vacuum_posterior(
    delta: float, v: tuple[float, float], lattice_cut: int = 4
) -> tuple[float, tuple[float, float, float]]:
    """Unnormalised syndrome density and conditional Bloch vector at v.

    The state is the measurement-noise-smeared vacuum, a thermal state with
    n̄ = tanh(Δ²/2); conditioning on syndrome v and applying the corrective
    displacement leaves the logical state with Bloch components
    g_μ(v)/g_I(v).
    """
    v_q, v_p = float(v[0]), float(v[1])
    if not (-PATCH_HALF < v_q <= PATCH_HALF and -PATCH_HALF < v_p <= PATCH_HALF):
        raise ValueError(f"v = {v} lies outside the correctable patch")
    sums = _posterior_sums(delta, np.array([v_q]), np.array([v_p]), lattice_cut)
    g_i = float(sums["I"][0, 0])
    bloch = tuple(float(sums[mu][0, 0]) / g_i for mu in ("X", "Y", "Z"))
    return g_i, bloch  # type: ignore[return-value]


def vacuum_posterior_grid(
    delta: float, n_grid: int, lattice_cut: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """Cell weights (normalised) and Bloch vectors over an n_grid² syndrome grid.

    Cells are uniform over the correctable patch; returns (weights with
    shape (n², ), bloch with shape (n², 3)).
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    centers = (np.arange(n_grid) + 0.5) / n_grid * 2.0 * PATCH_HALF - PATCH_HALF
    sums = _posterior_sums(delta, centers, centers, lattice_cut)
    g_i = sums["I"]
    if np.min(g_i) <= 0:
        raise AccuracyError("posterior density non-positive; increase lattice_cut")
    weights = (g_i / g_i.sum()).ravel()
    bloch = np.stack(
        [(sums[mu] / g_i).ravel() for mu in ("X", "Y", "Z")], axis=1
    )
    return weights, bloch
