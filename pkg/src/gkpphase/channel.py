"""Effective logical channel of a polynomial phase gate and its figures of merit.

The simulated channel, in the rectangular frame: encode a qubit state into
the orthonormalised approximate codewords of asymmetry λ, apply the gate
exp(2πi P(q/sqrt(λπ))) with output-dimension headroom, then read out the
ideal-QEC logical state through the smeared Pauli measurement operators with
Σ = tanh(Δ²/2) diag(λ, 1/λ) (the phenomenological measurement noise of the
surrounding QEC rounds).  Everything downstream — average gate fidelity,
magic-state fidelity, (n̄, λ) sweeps, and the vacuum-state baseline — is
assembled from single-state Pauli expectations.

The heavy objects (position eigenbases, Pauli diagonals) depend only on the
truncation dimensions and on (Δ, λ), so they are cached per process and
optionally persisted through the operator cache.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import analytic, fock
from .opcache import OperatorCache
from .polyalg import RationalPolynomial

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Pure-state inputs whose projectors span the qubit operator space.
INPUT_STATES = {
    "one": np.array([0.0, 1.0], dtype=complex),
    "plus": np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    "plus_i": np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0),
    "zero": np.array([1.0, 0.0], dtype=complex),
}
INPUT_ORDER = ("one", "plus", "plus_i", "zero")

NORM_LOSS_LIMIT = 1e-3


def _poly(coeffs) -> RationalPolynomial:
    return RationalPolynomial([Fraction(c) for c in coeffs])


# Gate table: label -> (polynomial, hierarchy level of the implemented gate).
# The polynomials are the simulated set, exact rationals by degree.
GATE_TABLE: dict[str, tuple[RationalPolynomial, int]] = {
    "I": (_poly([]), 0),
    "T3": (_poly([0, "-1/12", "1/8", "1/12"]), 3),
    "TGKP": (_poly([0, "-1/4", "1/8", "1/4"]), 3),
    "T4": (_poly([0, 0, "1/6", 0, "-1/24"]), 3),
    "sqrtT": (_poly([0, 0, "1/12", 0, "-1/48"]), 4),
    "T4th": (_poly([0, "1/60", "1/24", "-1/48", "-1/96", "1/240"]), 5),
    "T4th-mirror": (_poly([0, "-1/60", "1/24", "1/48", "-1/96", "-1/240"]), 5),
    "T8th": (_poly([0, 0, "17/720", 0, "-5/576", 0, "1/1440"]), 6),
}

T_IMPLEMENTING_GATES = ("T3", "TGKP", "T4")


def target_unitary(label: str) -> np.ndarray:
    """2x2 target for a gate label: diag(1, e^{2πi/2^m}) at hierarchy level m."""
    if isinstance(label, np.ndarray):
        return label
    if label == "I":
        return np.eye(2, dtype=complex)
    levels = {"Z": 1, "S": 2, "T": 3, "T1/2": 4, "T1/4": 5, "T1/8": 6}
    if label in levels:
        m = levels[label]
    elif label in GATE_TABLE:
        m = GATE_TABLE[label][1]
    else:
        raise ValueError(f"unknown target label {label!r}")
    return np.diag([1.0, np.exp(2j * math.pi / 2**m)]).astype(complex)


def default_smear(params: fock.GkpParams) -> np.ndarray:
    """Biased measurement-noise covariance tanh(Δ²/2) diag(λ, 1/λ)."""
    t = math.tanh(params.delta**2 / 2.0)
    return t * np.diag([params.lam, 1.0 / params.lam])


@dataclass(frozen=True)
class ChannelConfig:
    """One logical-channel instance: gate polynomial, code params, readout.

    precision 128 is the complex128 default; 64 runs the engine in
    complex64/float32 as a fast smoke mode with correspondingly relaxed
    accuracy.
    """

    gate: RationalPolynomial
    params: fock.GkpParams
    plan: fock.TruncationPlan = fock.TruncationPlan(d_init=256)
    smear: np.ndarray | None | str = "auto"
    target: str | np.ndarray = "I"
    n_cut: int = 59
    precision: int = 128

    def __post_init__(self):
        if self.precision not in (64, 128):
            raise ValueError(f"precision must be 64 or 128, got {self.precision}")

    def smear_matrix(self) -> np.ndarray | None:
        if isinstance(self.smear, str):
            if self.smear != "auto":
                raise ValueError(f"unknown smear spec {self.smear!r}")
            return default_smear(self.params)
        return self.smear


@dataclass(frozen=True)
class LogicalReadout:
    """Pauli expectations of the channel output for the four basis inputs."""

    expectations: dict[str, dict[str, float]]

    def __post_init__(self):
        for state, row in self.expectations.items():
            for pauli, val in row.items():
                if abs(val) > 1.0 + 1e-6:
                    raise ValueError(
                        f"expectation <{pauli}> = {val} out of range for input {state}"
                    )

    def output_density(self, state: str) -> np.ndarray:
        row = self.expectations[state]
        rho = sum(row[p] * PAULI[p] for p in ("I", "X", "Y", "Z")) / 2.0
        return rho


@lru_cache(maxsize=8)
def _gate_eig(d_out: int):
    return fock.q_eigensystem(d_out)


@lru_cache(maxsize=4)
def _readout_eig(d_temp: int):
    x, v = fock.q_eigensystem(d_temp)
    return x, v, fock.number_parity_phases(d_temp)


class ChannelEngine:
    """Matrix-free evaluator of Pauli expectations for one ChannelConfig.

    Uses the position eigenbasis twice: the gate is diagonal there at
    dimension d_out, and the smeared X/Z measurement operators are diagonal
    in the p/q eigenbases at dimension d_temp(d_out).  Only matrix-vector
    products of those eigenvector matrices touch the state, so a single
    evaluation costs a few d_temp² flops.
    """

    def __init__(self, config: ChannelConfig, cache: OperatorCache | None = None):
        self.config = config
        plan = config.plan
        lam = config.params.lam
        self.d_init = plan.d_init
        self.d_out = plan.d_out
        self.d_temp = plan.d_temp(plan.d_out)

        if cache is not None:
            qe = cache.get_or_create(
                "qeig-values", {"d": self.d_temp}, lambda: _readout_eig(self.d_temp)[0]
            )
            qv = cache.get_or_create(
                "qeig-vectors", {"d": self.d_temp}, lambda: _readout_eig(self.d_temp)[1]
            )
            self.x2, self.v2 = qe, qv
            self.r2 = fock.number_parity_phases(self.d_temp)
        else:
            self.x2, self.v2, self.r2 = _readout_eig(self.d_temp)
        self.x1, self.v1 = _gate_eig(self.d_out)

        self.gate_phase = fock.phase_profile(config.gate, lam, self.x1)
        smear = config.smear_matrix()
        self.g_z, self.h_x = fock.pauli_profiles(lam, smear, self.x2, config.n_cut)

        c0 = fock.gkp_codeword(0, config.params.delta, lam, self.d_init)
        c1 = fock.gkp_codeword(1, config.params.delta, lam, self.d_init)
        self.e0, self.e1 = fock.orthonormalize(c0, c1)

        if config.precision == 64:
            self.v1 = self.v1.astype(np.float32)
            self.v2 = self.v2.astype(np.float32)
            self.r2 = self.r2.astype(np.complex64)
            self.gate_phase = self.gate_phase.astype(np.complex64)
            self.g_z = self.g_z.astype(np.complex64)
            self.h_x = self.h_x.astype(np.complex64)
            self.e0 = fock.FockVector(self.e0.amplitudes.astype(np.complex64))
            self.e1 = fock.FockVector(self.e1.amplitudes.astype(np.complex64))

    def _encode(self, qubit: np.ndarray) -> np.ndarray:
        a, b = qubit
        vec = a * self.e0.amplitudes + b * self.e1.amplitudes
        return vec / np.linalg.norm(vec)

    @staticmethod
    def _rmatvec(m_real: np.ndarray, vec: np.ndarray) -> np.ndarray:
        # real matrix x complex vector without promoting the (large) matrix
        return m_real @ vec.real + 1j * (m_real @ vec.imag)

    def _apply_gate(self, vec: np.ndarray) -> np.ndarray:
        w = self._rmatvec(self.v1[: self.d_init, :].T, vec)
        out = self._rmatvec(self.v1, self.gate_phase * w)
        # The gate is exactly unitary at its build dimension, so norm loss
        # proper is roundoff; what signals an untrustworthy truncation is
        # amplitude reaching the top of the output window.
        loss = abs(1.0 - float(np.vdot(out, out).real))
        tail = float(np.sum(np.abs(out[7 * self.d_out // 8 :]) ** 2))
        if max(loss, tail) > NORM_LOSS_LIMIT:
            raise fock.TruncationLeakageError(
                f"post-gate norm loss {loss:.2e} / edge mass {tail:.2e} "
                f"exceeds {NORM_LOSS_LIMIT}"
            )
        return out

    def pauli_expectations(self, qubit: np.ndarray) -> dict[str, float]:
        """<I, X, Y, Z> of the channel output for a pure qubit input."""
        psi = self._apply_gate(self._encode(np.asarray(qubit, dtype=complex)))
        norm2 = float(np.vdot(psi, psi).real)
        # Z_m is diagonal in the q eigenbasis, X_m in the p one (= R q R†).
        head = self.v2[: self.d_out, :].T
        wz = self._rmatvec(head, psi)
        z_psi = self._rmatvec(self.v2[: self.d_out, :], self.g_z * wz)
        wx = self._rmatvec(head, self.r2[: self.d_out].conj() * psi)
        x_psi = self.r2[: self.d_out] * self._rmatvec(
            self.v2[: self.d_out, :], self.h_x * wx
        )
        exp_z = float(np.vdot(psi, z_psi).real) / norm2
        exp_x = float(np.vdot(psi, x_psi).real) / norm2
        exp_y = -float(np.vdot(x_psi, z_psi).imag) / norm2
        return {"I": 1.0, "X": exp_x, "Y": exp_y, "Z": exp_z}

    def readout(self) -> LogicalReadout:
        return LogicalReadout(
            {name: self.pauli_expectations(INPUT_STATES[name]) for name in INPUT_ORDER}
        )


def logical_expectation(config: ChannelConfig, qubit, pauli: str) -> float:
    """tr(σ E(|ψ><ψ|)) for a pure qubit input through the configured channel."""
    pauli = pauli.upper()
    if pauli not in PAULI:
        raise ValueError(f"pauli must be one of I, X, Y, Z; got {pauli!r}")
    return ChannelEngine(config).pauli_expectations(np.asarray(qubit, dtype=complex))[
        pauli
    ]


# ---------------------------------------------------------------------------
# Fidelities
# ---------------------------------------------------------------------------


def _dual_frame():
    """Coefficients α with σ_j = Σ_k α_{jk}|ψ_k><ψ_k| and the duals V_k."""
    basis = np.column_stack(
        [
            np.outer(INPUT_STATES[k], INPUT_STATES[k].conj()).reshape(-1)
            for k in INPUT_ORDER
        ]
    )
    alpha = np.zeros((4, 4))
    for j, p in enumerate(("I", "X", "Y", "Z")):
        alpha[j] = np.linalg.solve(basis, PAULI[p].reshape(-1)).real
    duals = [sum(alpha[j, k] * PAULI[p] for j, p in enumerate(("I", "X", "Y", "Z"))) / 2.0
             for k in range(4)]
    return alpha, duals


_ALPHA, _DUALS = _dual_frame()


def average_gate_fidelity_from_readout(
    readout: LogicalReadout, target: str | np.ndarray
) -> float:
    """F = 1/3 + (1/12) Σ_{k,l} tr(U V_k U† σ_l) tr(σ_l E(|ψ_k><ψ_k|))."""
    u = target_unitary(target)
    total = 0.0
    for k, name in enumerate(INPUT_ORDER):
        conj = u @ _DUALS[k] @ u.conj().T
        row = readout.expectations[name]
        for p in ("I", "X", "Y", "Z"):
            total += float(np.trace(conj @ PAULI[p]).real) * row[p]
    return 1.0 / 3.0 + total / 12.0


def average_gate_fidelity_reconstructed(
    readout: LogicalReadout, target: str | np.ndarray
) -> float:
    """Same figure through explicit 2x2 output reconstruction (cross-check).

    Reconstructs E(σ_j) by linearity from the four output density matrices
    and applies the Nielsen formula F = [Σ_j tr(U σ_j U† E(σ_j)) + 4]/12.
    """
    u = target_unitary(target)
    outs = {name: readout.output_density(name) for name in INPUT_ORDER}
    total = 0.0
    for j, p in enumerate(("I", "X", "Y", "Z")):
        e_sigma = sum(_ALPHA[j, k] * outs[name] for k, name in enumerate(INPUT_ORDER))
        total += float(np.trace(u @ PAULI[p] @ u.conj().T @ e_sigma).real)
    return (total + 4.0) / 12.0


def average_gate_fidelity(config: ChannelConfig, cache: OperatorCache | None = None) -> float:
    engine = ChannelEngine(config, cache)
    return average_gate_fidelity_from_readout(engine.readout(), config.target)


def t_state_fidelity(config: ChannelConfig, cache: OperatorCache | None = None) -> float:
    """F = <T| E(|+><+|) |T> = 1/2 + (<X> + <Y>)/(2 sqrt(2))."""
    exps = ChannelEngine(config, cache).pauli_expectations(INPUT_STATES["plus"])
    return 0.5 + (exps["X"] + exps["Y"]) / (2.0 * math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    gate: str
    n_bar: float
    delta: float
    delta_db: float
    lam: float
    avg_infidelity: float
    t_state_infidelity: float | None
    is_optimal: bool
    boundary_flag: bool


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    # per gate: n_bar -> (optimal lam, avg infidelity there, boundary flag)
    optima: dict[str, dict[float, tuple[float, float, bool]]]
    # per gate: quadratic fit coefficients of lam_opt(n_bar) over interior optima
    fits: dict[str, tuple[float, ...]]
    # failed grid points, (gate, n_bar, lam) -> reason
    failures: dict[tuple[str, float, float], str]


_WORKER_CACHE: dict[str, OperatorCache] = {}


def _sweep_point(args) -> tuple[int, float | None, float | None, str | None]:
    """One grid point; failures are reported, not raised, so sweeps continue."""
    (idx, gate_label, n_bar, lam, d_init, expand, n_cut, smear_off,
     cache_dir, precision) = args
    poly, _level = GATE_TABLE[gate_label]
    params = fock.GkpParams.from_n_bar(n_bar, lam)
    config = ChannelConfig(
        gate=poly,
        params=params,
        plan=fock.TruncationPlan(d_init=d_init, expand_factor=expand),
        smear=None if smear_off else "auto",
        target=gate_label,
        n_cut=n_cut,
        precision=precision,
    )
    cache = None
    if cache_dir is not None:
        cache = _WORKER_CACHE.setdefault(cache_dir, OperatorCache(cache_dir))
    try:
        engine = ChannelEngine(config, cache)
        readout = engine.readout()
        avg_f = average_gate_fidelity_from_readout(readout, gate_label)
    except (fock.TruncationLeakageError, ValueError) as exc:
        return idx, None, None, str(exc)
    t_inf = None
    if gate_label in T_IMPLEMENTING_GATES:
        exps = readout.expectations["plus"]
        t_inf = 1.0 - (0.5 + (exps["X"] + exps["Y"]) / (2.0 * math.sqrt(2.0)))
    return idx, 1.0 - avg_f, t_inf, None


def sweep(
    gates,
    n_bar_grid,
    lam_grid,
    plan: fock.TruncationPlan | None = None,
    workers: int = 1,
    n_cut: int = 59,
    smear_off: bool = False,
    cache_dir=None,
    precision: int = 128,
) -> SweepResult:
    """Average-gate / T-state infidelities over a (gate, n̄, λ) grid.

    Points are independent work units; results are merged by grid index so
    the output is deterministic for any worker count.  Per-n̄ optima are
    grid argmins, flagged when they sit on the λ-grid boundary.
    """
    plan = plan or fock.TruncationPlan(d_init=256)
    gates = list(gates)
    n_bars = [float(x) for x in n_bar_grid]
    lams = [float(x) for x in lam_grid]
    if not gates or not n_bars or not lams:
        raise ValueError("sweep needs nonempty gate, n_bar and lam grids")
    for g in gates:
        if g not in GATE_TABLE:
            raise ValueError(f"unknown gate {g!r}; known: {sorted(GATE_TABLE)}")

    cache_dir = str(cache_dir) if cache_dir is not None else None
    tasks = []
    meta = []
    for gi, g in enumerate(gates):
        for ni, nb in enumerate(n_bars):
            for li, lam in enumerate(lams):
                idx = len(tasks)
                tasks.append(
                    (idx, g, nb, lam, plan.d_init, plan.expand_factor,
                     n_cut, smear_off, cache_dir, precision)
                )
                meta.append((g, nb, lam))

    results: list[tuple[float, float | None] | None] = [None] * len(tasks)
    failures: dict[int, str] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = pool.map(_sweep_point, tasks, chunksize=4)
    else:
        outcomes = map(_sweep_point, tasks)
    for idx, inf, t_inf, err in outcomes:
        if err is not None:
            failures[idx] = err
        else:
            results[idx] = (inf, t_inf)

    rows: list[SweepRow] = []
    optima: dict[str, dict[float, tuple[float, float, bool]]] = {g: {} for g in gates}
    for gi, g in enumerate(gates):
        for ni, nb in enumerate(n_bars):
            base = gi * len(n_bars) * len(lams) + ni * len(lams)
            infs = [
                results[base + li][0] if results[base + li] is not None else math.inf
                for li in range(len(lams))
            ]
            best_li = int(np.argmin(infs))
            boundary = best_li in (0, len(lams) - 1) and len(lams) > 1
            optima[g][nb] = (lams[best_li], infs[best_li], boundary)
            delta = 1.0 / math.sqrt(2.0 * nb + 1.0)
            for li, lam in enumerate(lams):
                res = results[base + li]
                if res is None:
                    continue
                rows.append(
                    SweepRow(
                        gate=g,
                        n_bar=nb,
                        delta=delta,
                        delta_db=-10.0 * math.log10(delta**2),
                        lam=lam,
                        avg_infidelity=res[0],
                        t_state_infidelity=res[1],
                        is_optimal=(li == best_li),
                        boundary_flag=(li == best_li and boundary),
                    )
                )

    fits: dict[str, tuple[float, ...]] = {}
    for g in gates:
        pts = [
            (nb, lam_opt)
            for nb, (lam_opt, _inf, boundary) in optima[g].items()
            if not boundary
        ]
        if len(pts) >= 3:
            xs, ys = zip(*pts)
            fits[g] = tuple(np.polyfit(xs, ys, 2))
    return SweepResult(
        tuple(rows), optima, fits, {meta[i]: msg for i, msg in failures.items()}
    )


# ---------------------------------------------------------------------------
# Vacuum-state magic-state baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VacuumMethodConfig:
    delta: float
    grid: int = 500
    postselect_fraction: float = 1.0
    lattice_cut: int = 4

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 0.0 <= self.postselect_fraction <= 1.0:
            raise ValueError("postselect_fraction must lie in [0, 1]")
        if self.grid < 2:
            raise ValueError("grid must be >= 2")


@dataclass(frozen=True)
class VacuumResult:
    infidelity: float
    acceptance_probability: float
    coarse_grid_warning: bool


@lru_cache(maxsize=1)
def clifford_t_targets() -> np.ndarray:
    """Bloch vectors of the 12 states Clifford-equivalent to the T state.

    Generated as the orbit of (1, 1, 0)/sqrt(2) under the rotation images of
    the single-qubit Clifford group <H, S>; the orbit size 12 is asserted.
    """
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
    s = np.diag([1.0, 1.0j]).astype(complex)

    def bloch_map(u: np.ndarray) -> np.ndarray:
        cols = []
        for p in ("X", "Y", "Z"):
            m = u @ PAULI[p] @ u.conj().T
            cols.append([float(np.trace(PAULI[q] @ m).real) / 2.0 for q in ("X", "Y", "Z")])
        return np.array(cols).T

    group = [np.eye(2, dtype=complex)]
    frontier = [np.eye(2, dtype=complex)]

    def canon(u):
        k = np.argmax(np.abs(u) > 1e-9)
        ph = u.flat[k] / abs(u.flat[k])
        return tuple(np.round(u.flatten() / ph, 9))

    seen = {canon(np.eye(2, dtype=complex))}
    while frontier:
        nxt = []
        for g in frontier:
            for gen in (h, s):
                cand = gen @ g
                key = canon(cand)
                if key not in seen:
                    seen.add(key)
                    group.append(cand)
                    nxt.append(cand)
        frontier = nxt
    t_bloch = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
    orbit = {tuple(np.round(bloch_map(u) @ t_bloch, 9)) for u in group}
    targets = np.array(sorted(orbit))
    if targets.shape[0] != 12:
        raise RuntimeError(f"Clifford T-orbit has size {targets.shape[0]}, expected 12")
    return targets


def vacuum_state_method(config: VacuumMethodConfig) -> VacuumResult:
    """Magic-state infidelity of the vacuum + one-QEC-round scheme.

    Per syndrome cell the conditional Bloch vector is scored against the 12
    Clifford-equivalent T targets; cells are sorted by fidelity and the best
    `postselect_fraction` of the probability mass is kept (the boundary cell
    fractionally).  postselect_fraction -> 0 returns the single best cell.
    """
    weights, bloch = analytic.vacuum_posterior_grid(
        config.delta, config.grid, config.lattice_cut
    )
    targets = clifford_t_targets()
    fid = 0.5 * (1.0 + bloch @ targets.T).max(axis=1)
    order = np.argsort(-fid)
    fid = fid[order]
    weights = weights[order]
    if config.postselect_fraction == 0.0:
        best = float(fid[0])
        return VacuumResult(1.0 - best, float(weights[0]), config.grid < 100)
    cum = np.cumsum(weights)
    p = config.postselect_fraction
    k = int(np.searchsorted(cum, p, side="left"))
    k = min(k, len(weights) - 1)
    mass_before = cum[k] - weights[k]
    frac_weight = min(weights[k], p - mass_before)
    acc = mass_before + frac_weight
    mean_fid = (np.sum(fid[:k] * weights[:k]) + fid[k] * frac_weight) / acc
    return VacuumResult(float(1.0 - mean_fid), float(acc), config.grid < 100)


def vacuum_match_fraction(
    delta: float, target_infidelity: float, grid: int = 500, lattice_cut: int = 4
) -> float:
    """Largest postselection fraction at which the vacuum method still matches.

    Returns 0 when even the best single cell cannot reach the target, and 1
    when no postselection is needed.
    """
    weights, bloch = analytic.vacuum_posterior_grid(delta, grid, lattice_cut)
    targets = clifford_t_targets()
    fid = 0.5 * (1.0 + bloch @ targets.T).max(axis=1)
    order = np.argsort(-fid)
    fid = fid[order]
    weights = weights[order]
    if 1.0 - fid[0] > target_infidelity:
        return 0.0
    cum_w = np.cumsum(weights)
    cum_f = np.cumsum(fid * weights) / cum_w
    ok = 1.0 - cum_f <= target_infidelity
    if ok[-1]:
        return 1.0
    last = int(np.nonzero(ok)[0][-1])
    return float(cum_w[last])
