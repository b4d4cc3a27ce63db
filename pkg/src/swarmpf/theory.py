"""Executable checks for the contraction and bin-occupancy analysis.

Covers four strands:

* exact expected occupancy E[K] = sum_j (1 - (1 - p_j)^N) plus an
  enumeration oracle that recomputes it without the closed form;
* majorization of probability vectors and the Karamata comparison
  (more concentrated vector -> fewer expected occupied bins);
* mean-square contraction statistics of the synthetic role kernels,
  checked against closed-form second moments;
* a bundled verification suite (run_verification) that the CLI `verify`
  command and the acceptance tests both run.

The histogram comparison of two particle clouds treats the concentration
claim as a falsifiable measurement: it reports whether one cloud's bin
frequencies majorize the other's, asserting nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ParticleSet
from .kld import HistogramGrid, KldConfig, kld_bound

BRUTE_FORCE_GUARD = 10**7
_TOL = 1e-12


class TooLarge(ValueError):
    """Enumeration size m**N exceeds the brute-force guard."""


class NotMajorized(ValueError):
    """karamata_check requires p to majorize q."""


class ZeroBefore(ValueError):
    """Contraction ratio undefined: the before-set sits exactly on x*."""


def occupancy_probability(p, n: int):
    """f_N(p) = 1 - (1 - p)^N, evaluated stably for tiny p.

    Vectorized over p. Strictly increasing and strictly concave on [0, 1]
    for N >= 2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = -np.expm1(n * np.log1p(-p))
    return out if out.ndim else float(out)


def _survival(p, n: int):
    # (1 - p)^N via the log form; keeps resolution where f_N saturates at 1.
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(n * np.log1p(-p))


def expected_occupied_exact(p, n: int) -> float:
    """Closed-form expected number of occupied bins for N iid draws from p."""
    return float(np.sum(occupancy_probability(_as_prob_vector(p), n)))


def brute_force_occupied(p, n: int, chunk: int = 1 << 18) -> float:
    """Expectation by enumerating all m**N outcome tuples.

    Independent oracle for expected_occupied_exact: sums the product
    probability of every outcome tuple times its count of distinct bins.
    Chunked so the guard-sized case (m**N = 1e7) stays in bounded memory.
    """
    p = _as_prob_vector(p)
    m = p.size
    total = m**n
    if total > BRUTE_FORCE_GUARD:
        raise TooLarge(f"m**N = {total} exceeds guard {BRUTE_FORCE_GUARD}")
    powers = m ** np.arange(n, dtype=np.int64)
    acc = []
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // powers) % m
        prob = p[digits].prod(axis=1)
        sorted_digits = np.sort(digits, axis=1)
        distinct = 1 + np.count_nonzero(np.diff(sorted_digits, axis=1), axis=1)
        acc.append(float(np.dot(prob, distinct)))
    return math.fsum(acc)


def _as_prob_vector(p) -> np.ndarray:
    v = np.atleast_1d(np.asarray(p, dtype=float))
    if v.ndim != 1 or v.size < 1:
        raise ValueError("probability vector must be 1-D and nonempty")
    if np.any(v < -_TOL) or np.any(v > 1 + _TOL):
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(v.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    return np.clip(v, 0.0, 1.0)


def majorizes(p, q, tol: float = _TOL) -> bool:
    """True iff p majorizes q: sorted prefix sums of p dominate those of q.

    Vectors are zero-padded to a common length and renormalized before the
    comparison to absorb accumulation error.
    """
    a = _as_prob_vector(p)
    b = _as_prob_vector(q)
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size)) / a.sum()
    b = np.pad(b, (0, size - b.size)) / b.sum()
    pa = np.cumsum(np.sort(a)[::-1])
    pb = np.cumsum(np.sort(b)[::-1])
    return bool(np.all(pa >= pb - tol))


@dataclass(frozen=True)
class KaramataReport:
    expected_p: float
    expected_q: float
    slack: float
    holds: bool


def karamata_check(p, q, n: int) -> KaramataReport:
    """Verify E[K_p] <= E[K_q] for p majorizing q, reporting both values.

    Raises NotMajorized when the precondition fails (caller error, not a
    theory violation).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not majorizes(p, q):
        raise NotMajorized("p does not majorize q")
    e_p = expected_occupied_exact(p, n)
    e_q = expected_occupied_exact(q, n)
    slack = e_q - e_p
    return KaramataReport(e_p, e_q, slack, holds=slack >= -_TOL)


def random_majorizing_pair(m: int, rng: np.random.Generator, transfers: int | None = None):
    """Construct (p, q) with p majorizing q.

    q is a random probability vector; p is built from it by repeatedly
    moving mass from a poorer to a richer coordinate (the inverse of a
    Robin-Hood transfer), each move preserving the total and increasing
    concentration, so p majorizes q by transitivity.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    q = rng.random(m) + 1e-12
    q = q / q.sum()
    p = q.copy()
    if transfers is None:
        transfers = int(rng.integers(1, 3 * m + 1))
    for _ in range(transfers):
        i, j = rng.choice(m, size=2, replace=False) if m > 1 else (0, 0)
        if p[i] < p[j]:
            i, j = j, i
        delta = rng.uniform(0.0, p[j])
        p[i] += delta
        p[j] -= delta
    return p, q


def first_second_differences(n: int, points: int = 1000):
    """Grid scan of f_N: (min first difference, max second difference).

    Differences are evaluated on the survival form (1 - p)^N so they keep
    full resolution where f_N saturates at 1 in float64.
    """
    grid = np.linspace(0.0, 1.0, points)
    g = _survival(grid, n)
    first = g[:-1] - g[1:]  # equals f(p_{i+1}) - f(p_i)
    second = -(g[2:] - 2.0 * g[1:-1] + g[:-2])  # equals the second difference of f
    return float(first.min()), float(second.max())


def contraction_ratio(before: ParticleSet, after: ParticleSet, x_star):
    """(ratio, msd_before, msd_after) of mean squared displacement from x*.

    Sets are paired by index and the statistic is unweighted. Raises
    ZeroBefore when the before-set has zero displacement (B-only regime).
    """
    if before.size != after.size:
        raise ValueError("sets must have equal size")
    x_star = np.asarray(x_star, dtype=float)
    msd_before = float(np.mean(np.sum((before.states - x_star) ** 2, axis=1)))
    msd_after = float(np.mean(np.sum((after.states - x_star) ** 2, axis=1)))
    if msd_before == 0.0:
        raise ZeroBefore("before-set sits exactly on x_star")
    return msd_after / msd_before, msd_before, msd_after


def majorization_from_particles(set_a: ParticleSet, set_b: ParticleSet, grid: HistogramGrid):
    """Bin both clouds on one grid and test whether a's frequencies majorize b's.

    Returns (verdict, freq_a, freq_b) with the frequency vectors aligned on
    the union of occupied bins (zero where a cloud misses a bin). The
    verdict is reported either way; nothing is asserted.
    """
    idx_a = [tuple(row) for row in grid.bin_indices(set_a.states)]
    idx_b = [tuple(row) for row in grid.bin_indices(set_b.states)]
    support = sorted(set(idx_a) | set(idx_b))
    pos = {cell: i for i, cell in enumerate(support)}
    freq_a = np.zeros(len(support))
    freq_b = np.zeros(len(support))
    for cell in idx_a:
        freq_a[pos[cell]] += 1.0
    for cell in idx_b:
        freq_b[pos[cell]] += 1.0
    freq_a /= set_a.size
    freq_b /= set_b.size
    return majorizes(freq_a, freq_b), freq_a, freq_b


# ---------------------------------------------------------------------------
# Synthetic role kernels and their closed-form second moments


@dataclass(frozen=True)
class ContractionAssumptions:
    """Constants of the alignment/step-size conditions and the derived bounds.

    alpha bounds the leader proximity coefficients, (l1, l2) cap the hen
    step sizes with floor gamma, lambda_max caps the chick interpolation,
    rho_h / rho_c are the role-wise mean-square factors and (rho, b) the
    global bound constants for given role probabilities.
    """

    x_star: float = 0.0
    r0: float = 1.0
    alpha: float = 0.5
    l1: float = 0.6
    l2: float = 0.6
    gamma: float = 0.3
    lambda_max: float = 0.8
    rooster_var_bound: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if not 0.0 < self.lambda_max < 1.0:
            raise ValueError("lambda_max must be in (0, 1)")
        if min(self.r0, self.l1, self.l2, self.rooster_var_bound) < 0:
            raise ValueError("r0, step caps and variance bound must be >= 0")
        if self.l1 + self.l2 < self.gamma:
            raise ValueError("step caps must satisfy l1 + l2 >= gamma")

    def global_bound(self, pi_rooster: float, pi_hen: float, pi_chick: float,
                     s1: float, s2: float, c_m: float = 0.0):
        """(rho, B) of the combined bound rho * E|D|^2 + B for fixed steps."""
        if abs(pi_rooster + pi_hen + pi_chick - 1.0) > 1e-9:
            raise ValueError("role probabilities must sum to 1")
        rho_h = hen_ms_factor(s1, s2, self.alpha, self.alpha)
        rho_c = chick_ms_factor(self.lambda_max, c_m)
        rho = pi_rooster + pi_hen * rho_h + pi_chick * rho_c
        return rho, pi_rooster * self.rooster_var_bound


def hen_ms_factor(s1: float, s2: float, c_r: float, c_h: float) -> float:
    """E[A^2] for A = 1 - s1 r1 (1 - c_r) - s2 r2 (1 - c_h), r1, r2 ~ U[0, 1]."""
    a = s1 * (1.0 - c_r)
    b = s2 * (1.0 - c_h)
    return 1.0 - (a + b) + (a * a + b * b) / 3.0 + a * b / 2.0


def chick_ms_factor(lambda_max: float, c_m: float) -> float:
    """E[(1 - lambda (1 - c_m))^2] for lambda ~ U[0, lambda_max]."""
    w = 1.0 - c_m
    return 1.0 - w * lambda_max + (w * lambda_max) ** 2 / 3.0


def _ratio_standard_error(d_sq: np.ndarray, a_sq: np.ndarray, ratio: float) -> float:
    # Linearized SE of sum(a^2 d^2) / sum(d^2).
    n = d_sq.size
    resid = d_sq * (a_sq - ratio)
    return math.sqrt(float(np.sum(resid**2)) / (n - 1) / n) / float(np.mean(d_sq))


def hen_contraction_experiment(n: int, s1: float, s2: float, c_r: float, c_h: float,
                               rng: np.random.Generator):
    """Aligned 1-D hen population: measured ratio, its SE, and the closed form.

    Hens sit at signed displacements of varied magnitude; both leaders are
    placed at the stated fraction of each displacement. Step sizes are
    pinned so the measured mean-square ratio estimates E[A^2] directly.
    """
    from .cso import CsoConfig, hen_update

    d = rng.uniform(0.5, 2.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    x = d[:, None]
    config = CsoConfig(s1_override=s1, s2_override=s2)
    moved = hen_update(x, c_r * x, c_h * x, np.ones(n), np.ones(n), np.ones(n), config, rng)
    d_sq = d**2
    a_sq = (moved[:, 0] / d) ** 2
    ratio = float(np.sum(a_sq * d_sq) / np.sum(d_sq))
    return ratio, _ratio_standard_error(d_sq, a_sq, ratio), hen_ms_factor(s1, s2, c_r, c_h)


def chick_contraction_experiment(n: int, lambda_max: float, c_m: float,
                                 rng: np.random.Generator):
    """Aligned 1-D chick population: measured ratio, its SE, and the closed form."""
    from .cso import CsoConfig, chick_update

    d = rng.uniform(0.5, 2.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    x = d[:, None]
    config = CsoConfig(lambda_max=lambda_max) if lambda_max > 0 else CsoConfig(lambda_max=0.0)
    moved = chick_update(x, c_m * x, config, rng)
    d_sq = d**2
    a_sq = (moved[:, 0] / d) ** 2
    ratio = float(np.sum(a_sq * d_sq) / np.sum(d_sq))
    return ratio, _ratio_standard_error(d_sq, a_sq, ratio), chick_ms_factor(lambda_max, c_m)


def rooster_neutrality_experiment(n: int, sigma: float, dim: int, rng: np.random.Generator):
    """Drift and second moment of the rooster jitter over n draws.

    Returns (max |mean drift| over components, the 3-sigma drift allowance,
    mean |out - in|^2, the dim * sigma^2 target).
    """
    from .cso import CsoConfig, rooster_update

    x = rng.standard_normal((n, dim))
    moved = rooster_update(x, CsoConfig(rooster_sigma=sigma), rng)
    step = moved - x
    drift = np.abs(step.mean(axis=0)).max()
    allowance = 3.0 * sigma / math.sqrt(n)
    second = float(np.mean(np.sum(step**2, axis=1)))
    return float(drift), allowance, second, dim * sigma**2


# ---------------------------------------------------------------------------
# Bundled verification suite


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: dict


@dataclass(frozen=True)
class TheoryReport:
    seed: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        for c in self.checks:
            yield f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.details}"


def run_verification(seed: int = 0) -> TheoryReport:
    """Run the full theory check suite with reproducible streams."""
    from .core import make_rng

    checks = []

    # 1. Karamata / occupancy on constructed majorizing pairs.
    rng = make_rng(seed, 101)
    violations = 0
    min_slack = math.inf
    n_pairs = 1000
    for _ in range(n_pairs):
        m = int(rng.integers(1, 11))
        n_draws = int(rng.integers(2, 51))
        p, q = random_majorizing_pair(m, rng)
        report = karamata_check(p, q, n_draws)
        min_slack = min(min_slack, report.slack)
        violations += 0 if report.holds else 1
    checks.append(
        CheckResult(
            "karamata_occupancy",
            violations == 0,
            {"pairs": n_pairs, "violations": violations, "min_slack": min_slack},
        )
    )

    # 2. Closed form vs enumeration oracle.
    rng = make_rng(seed, 102)
    max_err = 0.0
    n_instances = 200
    for _ in range(n_instances):
        while True:
            m = int(rng.integers(1, 9))
            n_draws = int(rng.integers(2, 13))
            if m**n_draws <= 30000:
                break
        w = rng.random(m) + 1e-9
        p = w / w.sum()
        err = abs(expected_occupied_exact(p, n_draws) - brute_force_occupied(p, n_draws))
        max_err = max(max_err, err)
    checks.append(
        CheckResult(
            "occupancy_oracle_equivalence",
            max_err <= 1e-12,
            {"instances": n_instances, "max_abs_error": max_err},
        )
    )

    # 3. Monotonicity and concavity of f_N on a dense grid.
    worst_first = math.inf
    worst_second = -math.inf
    for n_draws in (2, 5, 20):
        first, second = first_second_differences(n_draws, points=1000)
        worst_first = min(worst_first, first)
        worst_second = max(worst_second, second)
    checks.append(
        CheckResult(
            "occupancy_concavity",
            worst_first > 0.0 and worst_second <= 0.0,
            {"min_first_difference": worst_first, "max_second_difference": worst_second},
        )
    )

    # 4. Hen mean-square contraction vs closed form.
    rng = make_rng(seed, 103)
    ratio, se, expect = hen_contraction_experiment(10**4, s1=0.3, s2=0.3, c_r=0.5, c_h=0.5, rng=rng)
    checks.append(
        CheckResult(
            "hen_contraction",
            abs(ratio - expect) <= 3.0 * se and ratio < 1.0,
            {"measured": ratio, "expected": expect, "se": se, "particles": 10**4},
        )
    )

    # 5. Chick mean-square contraction vs closed form.
    rng = make_rng(seed, 104)
    ratio, se, expect = chick_contraction_experiment(10**4, lambda_max=0.8, c_m=0.0, rng=rng)
    checks.append(
        CheckResult(
            "chick_contraction",
            abs(ratio - expect) <= 3.0 * se and ratio < 1.0,
            {"measured": ratio, "expected": expect, "se": se, "particles": 10**4},
        )
    )

    # 6. Rooster neutrality: no drift, second moment = dim * sigma^2.
    rng = make_rng(seed, 105)
    drift, allowance, second, target = rooster_neutrality_experiment(10**5, sigma=0.5, dim=3, rng=rng)
    checks.append(
        CheckResult(
            "rooster_neutrality",
            drift <= allowance and abs(second - target) <= 0.02 * target,
            {"max_drift": drift, "allowance": allowance, "second_moment": second, "target": target},
        )
    )

    # 7. KLD bound spot value.
    spot = kld_bound(1, KldConfig(epsilon=0.05, delta=0.01, n_min=1, n_max=10**9))
    checks.append(CheckResult("kld_bound_spot", spot == 53, {"bound_at_k1": spot, "expected": 53}))

    return TheoryReport(seed=seed, checks=checks)
