"""Iterative solver for the compression/relevance trade-off objective.

Given an exact joint source p(x, y), a trade-off multiplier beta and a
bottleneck alphabet size, the solver searches stochastic encoders p(xhat|x)
minimizing

    I(X; Xhat) - beta * I(Y; Xhat)

by the classic alternating self-consistent updates:

    p(xhat|x)  proportional to  p(xhat) * exp(-beta * KL(p(y|x) || p(y|xhat)))
    p(xhat)    = sum_x p(x) p(xhat|x)
    p(y|xhat)  = sum_x p(y|x) p(x|xhat)

The fixed-point iteration has local minima, so a solve runs several
restarts from seeded Dirichlet initializations (plus an identity start
when the bottleneck is at least as large as the source alphabet) and
keeps the lowest objective. Each converged restart is additionally
polished by hard-rounding the encoder and re-iterating when the rounded
encoder scores better. The encoder update is evaluated in log space with
per-row max subtraction; clusters whose mass underflows are frozen at
zero. Everything is deterministic given the configured seed.

``brute_force_ib`` enumerates all deterministic encoders and serves as an
independent oracle for small instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .exceptions import CapacityError, ConfigError, DimensionError
from .info_theory import Channel, Distribution, JointDistribution, as_channel, as_joint

_LN2 = np.log(2.0)

# Cluster masses below this are treated as exactly zero and excluded from
# encoder rows (their divergence contribution would be infinite anyway).
_DEAD_CLUSTER_MASS = 1e-15

# Guard for brute-force enumeration: cardinality ** x_size must not exceed this.
_BRUTE_FORCE_LIMIT = 10**7

# Mixing weight used to perturb warm starts between annealing stages; a pure
# warm start at a deterministic encoder is an absorbing fixed point.
_ANNEAL_JITTER = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one solve: trade-off, bottleneck size, iteration budget, seeding."""

    beta: float
    bottleneck_cardinality: int
    max_iterations: int = 10_000
    convergence_tol: float = 1e-10
    restarts: int = 10
    rng_seed: int = 0
    anneal: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.bottleneck_cardinality < 1:
            raise ConfigError(
                f"bottleneck_cardinality must be >= 1, got {self.bottleneck_cardinality}"
            )
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.convergence_tol <= 0:
            raise ConfigError(f"convergence_tol must be > 0, got {self.convergence_tol}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.anneal is not None:
            schedule = tuple(float(b) for b in self.anneal)
            if any(b < 0 for b in schedule):
                raise ConfigError("anneal schedule values must be >= 0")
            if any(b2 <= b1 for b1, b2 in zip(schedule, schedule[1:])):
                raise ConfigError("anneal schedule must be strictly increasing")
            object.__setattr__(self, "anneal", schedule)


@dataclass(frozen=True)
class IBSolution:
    """One solved encoder with its induced marginal, decoder and diagnostics."""

    encoder: Channel
    marginal: Distribution
    decoder: Channel
    i_x_xhat: float
    i_y_xhat: float
    lagrangian: float
    beta: float
    iterations_used: int
    converged: bool


@dataclass(frozen=True)
class InfoCurvePoint:
    """One (beta, compression, relevance) point on the trade-off curve."""

    beta: float
    i_x_xhat: float
    i_y_xhat: float


def _mi_bits(joint: np.ndarray) -> float:
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    denom = px * py
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0.0, joint * (np.log(joint) - np.log(denom)), 0.0)
    value = float(terms.sum() / _LN2)
    return value if value > 0.0 else 0.0


def _entropy_bits(p: np.ndarray) -> float:
    return float(-xlogy(p, p).sum() / _LN2)


def _objective(j: np.ndarray, px: np.ndarray, enc: np.ndarray, beta: float):
    """(I(X;Xhat), I(Y;Xhat), lagrangian) for an encoder array."""
    i_x = _mi_bits(px[:, None] * enc)
    i_y = _mi_bits(enc.T @ j)
    return i_x, i_y, i_x - beta * i_y


def _conditional_rows(j: np.ndarray) -> np.ndarray:
    """p(y|x) rows; rows with zero mass are set uniform (they carry no weight)."""
    px = j.sum(axis=1)
    ny = j.shape[1]
    safe = np.where(px > 0.0, px, 1.0)
    rows = j / safe[:, None]
    rows[px <= 0.0] = 1.0 / ny
    return rows


def _iterate(j, px, pygx, enc, beta, max_iterations, tol):
    """Run the self-consistent updates from one initial encoder.

    Returns (encoder, lagrangian, iterations, converged).
    """
    ny = j.shape[1]
    log_pygx = np.where(pygx > 0.0, np.log(np.where(pygx > 0.0, pygx, 1.0)), 0.0)
    prev = None
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        p_t = px @ enc
        alive = p_t > _DEAD_CLUSTER_MASS
        joint_ty = enc.T @ j
        decoder = np.where(
            alive[:, None], joint_ty / np.where(alive, p_t, 1.0)[:, None], 1.0 / ny
        )
        # d[x, t] = KL(p(y|x) || p(y|t)) in nats; zero decoder cells where the
        # source row has mass push the weight to exactly zero via exp(-inf).
        log_dec = np.log(np.maximum(decoder, 1e-300))
        d = np.einsum("xy,xy->x", pygx, log_pygx)[:, None] - pygx @ log_dec.T
        with np.errstate(invalid="ignore"):
            log_w = np.where(
                alive[None, :], np.log(np.maximum(p_t, 1e-300))[None, :] - beta * d, -np.inf
            )
        log_w -= log_w.max(axis=1, keepdims=True)
        w = np.exp(log_w)
        enc = w / w.sum(axis=1, keepdims=True)
        _, _, lagrangian = _objective(j, px, enc, beta)
        if prev is not None and abs(lagrangian - prev) < tol:
            converged = True
            break
        prev = lagrangian
    _, _, lagrangian = _objective(j, px, enc, beta)
    return enc, lagrangian, iterations, converged


def _hard_round(enc: np.ndarray) -> np.ndarray:
    out = np.zeros_like(enc)
    out[np.arange(enc.shape[0]), enc.argmax(axis=1)] = 1.0
    return out


def _run_candidates(j, px, pygx, beta, inits, max_iterations, tol):
    """Iterate every initial encoder, keeping the lowest-objective result.

    Ties keep the earliest candidate so that any parallel evaluation would
    merge to the same answer. Returns (best tuple, last candidate's
    converged flag) where the tuple is (enc, lagrangian, iterations,
    converged).
    """
    best = None
    last_converged = False
    for enc0 in inits:
        result = _iterate(j, px, pygx, enc0, beta, max_iterations, tol)
        candidates = [result]
        rounded = _hard_round(result[0])
        _, _, rounded_l = _objective(j, px, rounded, beta)
        if rounded_l < result[1]:
            candidates.append(_iterate(j, px, pygx, rounded, beta, max_iterations, tol))
        for cand in candidates:
            if best is None or cand[1] < best[1]:
                best = cand
        last_converged = result[3]
    return best, last_converged


def _dirichlet_inits(nx, cardinality, cfg: SolverConfig):
    """Seeded random encoders, one per restart, on successive seeds."""
    return [
        np.random.default_rng(cfg.rng_seed + r).dirichlet(
            np.ones(cardinality), size=nx
        )
        for r in range(cfg.restarts)
    ]


def _identity_init(nx, cardinality):
    enc = np.zeros((nx, cardinality))
    enc[np.arange(nx), np.arange(nx)] = 1.0
    return enc


def _constant_solution(j: JointDistribution, cardinality: int, beta: float) -> IBSolution:
    enc = Channel.constant(j.x_size, cardinality)
    return _solution_from_encoder(j, enc.probs, beta, iterations=0, converged=True)


def _solution_from_encoder(
    j: JointDistribution, enc: np.ndarray, beta: float, iterations: int, converged: bool
) -> IBSolution:
    px = j.marginal_x().probs
    ny = j.y_size
    i_x, i_y, lagrangian = _objective(j.probs, px, enc, beta)
    p_t = px @ enc
    joint_ty = enc.T @ j.probs
    alive = p_t > _DEAD_CLUSTER_MASS
    decoder = np.where(
        alive[:, None], joint_ty / np.where(alive, p_t, 1.0)[:, None], 1.0 / ny
    )
    return IBSolution(
        encoder=Channel(enc),
        marginal=Distribution(p_t / p_t.sum()),
        decoder=Channel(decoder),
        i_x_xhat=i_x,
        i_y_xhat=i_y,
        lagrangian=lagrangian,
        beta=float(beta),
        iterations_used=int(iterations),
        converged=bool(converged),
    )


def ib_lagrangian(j, encoder, beta: float) -> float:
    """Evaluate I(X;Xhat) - beta * I(Y;Xhat) for a given encoder, exactly."""
    j = as_joint(j)
    encoder = as_channel(encoder)
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    if encoder.in_size != j.x_size:
        raise DimensionError(
            f"encoder expects input alphabet of size {encoder.in_size}, "
            f"joint has x alphabet of size {j.x_size}"
        )
    px = j.marginal_x().probs
    _, _, lagrangian = _objective(j.probs, px, encoder.probs, beta)
    return lagrangian


def _solve_single_beta(
    j: JointDistribution, beta: float, cfg: SolverConfig, extra_inits=()
) -> IBSolution:
    """One solve at a fixed beta: restarts, optional extra candidates, best-of."""
    cardinality = cfg.bottleneck_cardinality
    if beta == 0.0:
        # The objective reduces to I(X;Xhat), minimized exactly by any
        # constant encoder; skip the iteration entirely.
        return _constant_solution(j, cardinality, beta)
    nx = j.x_size
    px = j.marginal_x().probs
    pygx = _conditional_rows(j.probs)
    # Random restarts go last so the reported convergence flag belongs to
    # the final restart, not to a warm-start or identity candidate.
    inits = list(extra_inits)
    if cardinality >= nx:
        inits.append(_identity_init(nx, cardinality))
    inits.extend(_dirichlet_inits(nx, cardinality, cfg))
    best, last_converged = _run_candidates(
        j.probs, px, pygx, beta, inits, cfg.max_iterations, cfg.convergence_tol
    )
    enc, _, iterations, _ = best
    return _solution_from_encoder(j, enc, beta, iterations, last_converged)


def _perturbed(enc: np.ndarray, seed_key) -> np.ndarray:
    rng = np.random.default_rng(seed_key)
    noise = rng.dirichlet(np.ones(enc.shape[1]), size=enc.shape[0])
    mixed = (1.0 - _ANNEAL_JITTER) * enc + _ANNEAL_JITTER * noise
    return mixed / mixed.sum(axis=1, keepdims=True)


def _anneal_solutions(
    j: JointDistribution, betas, cfg: SolverConfig, first_extra_inits=()
) -> list[IBSolution]:
    """Warm-started sweep over increasing betas; one solution per beta.

    After the sweep, every point may adopt any other point's encoder when
    that encoder scores a strictly lower objective at the point's own beta.
    Selecting all points against the shared pool makes the reported
    relevance provably non-decreasing along the schedule: whenever two
    selections each dominate the other's encoder at their own beta,
    (beta2 - beta1) * (i_y1 - i_y2) <= 0.
    """
    solutions: list[IBSolution] = []
    prev_encoder: np.ndarray | None = None
    for index, beta in enumerate(betas):
        extra = list(first_extra_inits) if index == 0 else []
        if prev_encoder is not None:
            extra.append(prev_encoder)
            extra.append(_perturbed(prev_encoder, [cfg.rng_seed, 1 + index]))
        sol = _solve_single_beta(j, float(beta), cfg, extra_inits=extra)
        solutions.append(sol)
        prev_encoder = sol.encoder.probs
    pool = list(solutions)
    final: list[IBSolution] = []
    for beta, own in zip(betas, solutions):
        best = own
        best_l = own.i_x_xhat - beta * own.i_y_xhat
        for cand in pool:
            cand_l = cand.i_x_xhat - beta * cand.i_y_xhat
            if cand_l < best_l:
                best, best_l = cand, cand_l
        if best is own:
            final.append(own)
        else:
            final.append(
                _solution_from_encoder(
                    j,
                    np.array(best.encoder.probs),
                    beta,
                    best.iterations_used,
                    best.converged,
                )
            )
    return final


def solve_ib(j, cfg: SolverConfig, *, init_encoder=None) -> IBSolution:
    """Minimize the trade-off objective over stochastic encoders.

    Returns the best (lowest-objective) solution across restarts. When
    ``cfg.anneal`` is set, the solve sweeps the schedule's betas below
    ``cfg.beta`` with warm starts and returns the final solution at
    ``cfg.beta``. An explicit ``init_encoder`` is used as an additional
    warm-start candidate. Deterministic given ``cfg.rng_seed``.
    """
    j = as_joint(j)
    extra = []
    if init_encoder is not None:
        warm = as_channel(init_encoder)
        if warm.in_size != j.x_size or warm.out_size != cfg.bottleneck_cardinality:
            raise DimensionError(
                f"init encoder has shape {warm.in_size}x{warm.out_size}, expected "
                f"{j.x_size}x{cfg.bottleneck_cardinality}"
            )
        extra.append(warm.probs)
    if cfg.anneal:
        betas = [b for b in cfg.anneal if b < cfg.beta] + [cfg.beta]
        return _anneal_solutions(j, betas, cfg, first_extra_inits=extra)[-1]
    return _solve_single_beta(j, cfg.beta, cfg, extra_inits=extra)


def anneal_ib(j, schedule, cfg: SolverConfig) -> list[InfoCurvePoint]:
    """Trace the compression/relevance curve along an increasing beta schedule.

    The first beta solves from the configured initialization; every later
    beta warm-starts from the previous solution (alongside the configured
    restarts, which keep per-point solutions near-optimal). Points are
    returned in schedule order.
    """
    j = as_joint(j)
    schedule = [float(b) for b in schedule]
    if not schedule:
        raise ConfigError("anneal schedule must not be empty")
    if any(b < 0 for b in schedule):
        raise ConfigError("anneal schedule values must be >= 0")
    if any(b2 <= b1 for b1, b2 in zip(schedule, schedule[1:])):
        raise ConfigError("anneal schedule must be strictly increasing")
    solutions = _anneal_solutions(j, schedule, cfg)
    return [
        InfoCurvePoint(beta=b, i_x_xhat=s.i_x_xhat, i_y_xhat=s.i_y_xhat)
        for b, s in zip(schedule, solutions)
    ]


def brute_force_ib(j, cardinality: int, beta: float) -> IBSolution:
    """Exact minimum of the objective over all deterministic encoders.

    Enumerates every assignment X -> Xhat in lexicographic order and keeps
    the first strict minimum, so ties resolve to the lexicographically
    smallest assignment vector. Intended as an independent oracle for small
    instances; the stochastic solver must never return a larger objective.
    """
    j = as_joint(j)
    if cardinality < 1:
        raise ConfigError(f"cardinality must be >= 1, got {cardinality}")
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    nx, ny = j.x_size, j.y_size
    if cardinality**nx > _BRUTE_FORCE_LIMIT:
        raise CapacityError(
            f"{cardinality}**{nx} deterministic encoders exceed the "
            f"enumeration guard of {_BRUTE_FORCE_LIMIT}"
        )
    px = j.marginal_x().probs
    best_l = None
    best_assign = None
    count = 0
    for assign in itertools.product(range(cardinality), repeat=nx):
        count += 1
        agg = np.zeros((cardinality, ny))
        p_t = np.zeros(cardinality)
        for x, t in enumerate(assign):
            agg[t] += j.probs[x]
            p_t[t] += px[x]
        lagrangian = _entropy_bits(p_t) - beta * _mi_bits(agg)
        if best_l is None or lagrangian < best_l:
            best_l = lagrangian
            best_assign = assign
    enc = np.zeros((nx, cardinality))
    enc[np.arange(nx), best_assign] = 1.0
    return _solution_from_encoder(j, enc, beta, iterations=count, converged=True)
