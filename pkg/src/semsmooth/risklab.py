"""Monte Carlo risk lab.

Estimates worst-case KL risk of the add-constant family, the known- and
estimated-side-information interpolation estimators, and materializes the
perturbed-uniform hypercube family used in the minimax lower-bound
construction, checking the quantitative properties each bound relies on:

  * add-1/2 worst-case risk within 1.5x of (d-1)/(2n),
  * best-of-{0,1} interpolation within min(Delta, 1.5 (d-1)/(2n)),
  * plugin risk within min(1.5 (d-1)/(2n), Delta + log(1 + d0/n0) + log 2),
  * hypercube members: ball membership KL <= d^2 tau^2, Hamming-1 neighbor
    KL <= 8 tau^2 d, neighbor l1 distance exactly 4 tau.

An exhaustive-enumeration oracle covers configurations whose outcome space
is small enough, as a cross-check on the Monte Carlo machinery itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import lgamma

import numpy as np

from semsmooth import kernels
from semsmooth.estimators import DEFAULT_BETA_R, _check_beta_r
from semsmooth.prob import ProbDist, kl_divergence
from semsmooth.semantic import plugin_alpha


class TauTooLarge(ValueError):
    """tau violates the nonnegativity constraint tau <= 1/(2d)."""


class HammingViolation(ValueError):
    """Neighbor operation called on sign vectors with Hamming distance != 1."""


# ---------------------------------------------------------------------------
# distributions, shapes and the KL ball sampler


def uniform(d):
    return np.full(d, 1.0 / d)


def zipf(d, s=1.0):
    w = 1.0 / np.arange(1, d + 1) ** s
    return w / w.sum()


def point_mass(d, i=0):
    p = np.zeros(d)
    p[i] = 1.0
    return p


def near_point_mass(d, top=0.99):
    p = np.full(d, (1.0 - top) / (d - 1))
    p[0] = top
    return p


def pi_grid(d):
    """The worst-case search shapes: uniform, point-mass-like, Zipf."""
    return {
        "uniform": uniform(d),
        "point_mass": point_mass(d),
        "near_point_mass": near_point_mass(d),
        "zipf": zipf(d),
    }


def _kl_vec(p, q):
    return kernels.kl_div(
        np.ascontiguousarray(p, dtype=np.float64),
        np.ascontiguousarray(q, dtype=np.float64),
    )


def kl_ball_sample(pi0, delta, rng, mode="interior") -> ProbDist:
    """A distribution verified (not assumed) to lie in B_KL(pi0, delta).

    interior: Dirichlet proposals centered at pi0, doubling the
    concentration on rejection, so termination is geometric. boundary:
    bisection along the segment from pi0 towards a sharp random direction,
    landing in [0.9 delta, delta].
    """
    pi0 = np.asarray(pi0, dtype=np.float64)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0:
        return ProbDist.from_dense(pi0.copy())
    pos = pi0 > 0
    if mode == "interior":
        conc = pi0.size
        while True:
            cand = np.zeros_like(pi0)
            cand[pos] = rng.dirichlet(conc * pi0[pos])
            if _kl_vec(cand, pi0) <= delta:
                break
            conc *= 2.0
    elif mode == "boundary":
        max_reach = math.log(1.0 / pi0[pos].min())
        if 0.9 * delta > max_reach:
            raise ValueError(
                f"delta={delta} not reachable inside the simplex (max KL {max_reach:.4g})"
            )
        far = np.zeros_like(pi0)
        far[pos] = rng.dirichlet(np.full(int(pos.sum()), 0.05))
        if _kl_vec(far, pi0) < 0.9 * delta:
            far = point_mass(pi0.size, int(np.argmin(np.where(pos, pi0, np.inf))))
        lo, hi = 0.0, 1.0
        for _ in range(200):
            t = 0.5 * (lo + hi)
            cand = (1.0 - t) * pi0 + t * far
            div = _kl_vec(cand, pi0)
            if div > delta:
                hi = t
            elif div < 0.9 * delta:
                lo = t
            else:
                break
        cand = (1.0 - 0.5 * (lo + hi)) * pi0 + 0.5 * (lo + hi) * far
    else:
        raise ValueError(f"unknown mode {mode!r}")
    div = _kl_vec(cand, pi0)
    if div > delta:
        raise AssertionError("sampler produced a point outside the ball")
    if mode == "boundary" and div < 0.9 * delta:
        raise AssertionError("boundary sampler missed the target shell")
    return ProbDist.from_dense(cand)


# ---------------------------------------------------------------------------
# the perturbed-uniform hypercube family


def max_tau(d, delta=None) -> float:
    """Largest admissible perturbation: min(1/(2d), sqrt(delta)/d)."""
    t = 1.0 / (2 * d)
    if delta is not None:
        t = min(t, math.sqrt(delta) / d)
    return t


class AssouadFamily:
    """theta_v = (1/d + tau v_1, 1/d - tau v_1, ...), v in {-1,+1}^(d/2)."""

    def __init__(self, d, tau):
        if d < 2 or d % 2:
            raise ValueError("d must be even and >= 2")
        if tau <= 0:
            raise ValueError("tau must be positive")
        if tau > 1.0 / (2 * d):
            raise TauTooLarge(f"tau={tau} exceeds 1/(2d)={1.0 / (2 * d)}")
        self.d = d
        self.tau = tau
        self.half = d // 2

    @property
    def n_members(self):
        return 2**self.half

    def member(self, v) -> ProbDist:
        v = np.asarray(v)
        if v.shape != (self.half,) or not np.all(np.abs(v) == 1):
            raise ValueError("v must be a +/-1 vector of length d/2")
        theta = np.empty(self.d)
        theta[0::2] = 1.0 / self.d + self.tau * v
        theta[1::2] = 1.0 / self.d - self.tau * v
        return ProbDist.from_dense(theta)

    def member_by_index(self, i) -> ProbDist:
        if not 0 <= i < self.n_members:
            raise IndexError(i)
        bits = (i >> np.arange(self.half)) & 1
        return self.member(2 * bits - 1)


def build_assouad(d, tau) -> AssouadFamily:
    return AssouadFamily(d, tau)


def assouad_neighbor_kl(family: AssouadFamily, v, v_prime) -> float:
    """Exact KL between two members whose sign vectors differ in one spot."""
    v = np.asarray(v)
    v_prime = np.asarray(v_prime)
    if int(np.sum(v != v_prime)) != 1:
        raise HammingViolation("sign vectors must be at Hamming distance 1")
    return kl_divergence(family.member(v), family.member(v_prime))


# ---------------------------------------------------------------------------
# Monte Carlo and exact risk


def kt_estimator(beta_r=None):
    """Vectorized variable add-constant estimator: counts (..., d) -> probs."""
    table = DEFAULT_BETA_R if beta_r is None else _check_beta_r(beta_r)

    def estimate(counts):
        counts = np.asarray(counts, dtype=np.float64)
        betas = table[np.minimum(counts.astype(np.int64), table.size - 1)]
        denom = counts.sum(axis=-1, keepdims=True) + betas.sum(axis=-1, keepdims=True)
        return (counts + betas) / denom

    return estimate


def constant_estimator(pi_fixed):
    """Ignores the sample and always returns pi_fixed."""
    pi_fixed = np.asarray(pi_fixed, dtype=np.float64)

    def estimate(counts):
        shape = np.asarray(counts).shape
        return np.broadcast_to(pi_fixed, shape).copy()

    return estimate


def kl_rows(p, q_rows):
    """d_KL(p || q_rows[i]) for every row; +inf rows where q misses mass."""
    p = np.asarray(p, dtype=np.float64)
    q_rows = np.asarray(q_rows, dtype=np.float64)
    m = p > 0
    pm = p[m]
    h = float(np.sum(pm * np.log(pm)))
    with np.errstate(divide="ignore"):
        lq = np.log(q_rows[:, m])
    return h - lq @ pm


@dataclass(frozen=True)
class MCRisk:
    mean: float
    stderr: float
    trials: int
    infinite_events: int


def mc_risk(estimator, pi, n, trials, seed) -> MCRisk:
    """Sample mean and standard error of d_KL(pi || estimator(X^n)).

    The estimator maps a (trials, d) count matrix to (trials, d)
    probabilities. Infinite divergences (the estimator assigned zero mass
    somewhere pi has some) are counted, and force an infinite mean.
    """
    if trials < 100:
        raise ValueError("at least 100 trials required")
    pi = np.asarray(pi, dtype=np.float64)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, pi, size=trials)
    kls = kl_rows(pi, estimator(counts))
    infinite = int(np.sum(np.isinf(kls)))
    if infinite:
        return MCRisk(math.inf, math.nan, trials, infinite)
    return MCRisk(
        float(kls.mean()),
        float(kls.std(ddof=1) / math.sqrt(trials)),
        trials,
        0,
    )


def _compositions(n, d):
    if d == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in _compositions(n - k, d - 1):
            yield (k, *rest)


def exact_risk(estimator, pi, n) -> float:
    """E[d_KL(pi || estimator(X^n))] by enumerating all count vectors."""
    pi = np.asarray(pi, dtype=np.float64)
    d = pi.size
    log_pi = np.where(pi > 0, np.log(np.where(pi > 0, pi, 1.0)), -np.inf)
    terms = []
    for counts in _compositions(n, d):
        c = np.array(counts, dtype=np.int64)
        if np.any((c > 0) & (pi == 0)):
            continue
        mask = c > 0
        log_pmf = (
            lgamma(n + 1)
            - sum(lgamma(k + 1) for k in counts)
            + float(np.sum(c[mask] * log_pi[mask]))
        )
        est = estimator(c[None, :].astype(np.float64))[0]
        terms.append(math.exp(log_pmf) * _kl_vec(pi, est))
    return math.fsum(terms)


def mc_plugin_risk(pi, pi0, n, n0, delta, trials, seed, beta_r=None):
    """Monte Carlo risk of the plugin estimator with its {0,1} alpha rule.

    Returns (MCRisk, alpha). The rule is deterministic given (n, d, n0, d0,
    delta), so alpha is fixed across trials; with alpha = 0 the estimate is
    built from the synonym sample alone.
    """
    pi = np.asarray(pi, dtype=np.float64)
    pi0 = np.asarray(pi0, dtype=np.float64)
    alpha = plugin_alpha(n, pi.size, n0, pi0.size, delta)
    if trials < 100:
        raise ValueError("at least 100 trials required")
    rng = np.random.default_rng(seed)
    kt = kt_estimator(beta_r)
    if alpha == 1.0:
        counts = rng.multinomial(n, pi, size=trials)
        est = kt(counts)
    else:
        y_counts = rng.multinomial(n0, pi0, size=trials)
        est = kt(y_counts)
    kls = kl_rows(pi, est)
    infinite = int(np.sum(np.isinf(kls)))
    risk = MCRisk(
        math.inf if infinite else float(kls.mean()),
        math.nan if infinite else float(kls.std(ddof=1) / math.sqrt(trials)),
        trials,
        infinite,
    )
    return risk, alpha


# ---------------------------------------------------------------------------
# experiment declaration and the bound-check suites

PI_SHAPES = ("uniform", "point_mass", "near_point_mass", "zipf", "boundary", "interior")


@dataclass(frozen=True)
class RiskExperiment:
    """One risk-lab configuration; construction validates the knobs and the
    sampled distributions are verified against the declared ball at run time."""

    d: int
    n: int
    trials: int
    seed: int
    n0: int | None = None
    deltas: tuple = ()
    shapes: tuple = ("uniform",)

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError("at least 100 trials required")
        if self.d < 2 or self.n < 1:
            raise ValueError("need d >= 2 and n >= 1")
        for s in self.shapes:
            if s not in PI_SHAPES:
                raise ValueError(f"unknown pi shape {s!r}")


@dataclass(frozen=True)
class RiskRow:
    """One CSV row of a bound-check suite."""

    d: int
    n: int | None
    n0: int | None
    delta: float | None
    estimator: str
    mean_risk: float
    stderr: float
    bound: float
    violated: bool


def suite_thm3(trials=2000, seed=0, cells=((5, 100), (5, 1000), (20, 100), (20, 1000))):
    """Worst-case add-1/2 risk over the pi grid vs 1.5 (d-1)/(2n)."""
    rows = []
    kt = kt_estimator()
    k = 0
    for d, n in cells:
        bound = 1.5 * (d - 1) / (2.0 * n)
        for name, pi in pi_grid(d).items():
            r = mc_risk(kt, pi, n, trials, seed + 7919 * k)
            k += 1
            rows.append(
                RiskRow(d, n, None, None, f"kt_half[{name}]", r.mean, r.stderr,
                        bound, r.mean > bound + 3 * r.stderr)
            )
    return rows


def suite_thm4(trials=2000, seed=0, d=20, deltas=(0.01, 0.1, 1.0), ns=(50, 200),
               draws=3):
    """Best of the {0,1}-interpolation vs min(Delta, 1.5 (d-1)/(2n)), with pi
    drawn on the boundary shell of the ball around uniform side information."""
    rows = []
    pi0 = uniform(d)
    kt = kt_estimator()
    rng = np.random.default_rng(seed)
    k = 0
    for delta in deltas:
        for n in ns:
            bound = min(delta, 1.5 * (d - 1) / (2.0 * n))
            worst = None
            for _ in range(draws):
                pi = kl_ball_sample(pi0, delta, rng, mode="boundary").mass
                risk0 = _kl_vec(pi, pi0)
                r1 = mc_risk(kt, pi, n, trials, seed + 104729 * k)
                k += 1
                if r1.mean <= risk0:
                    best, se = r1.mean, r1.stderr
                else:
                    best, se = risk0, 0.0
                if worst is None or best > worst[0]:
                    worst = (best, se)
            rows.append(
                RiskRow(d, n, None, delta, "interp_best_alpha01", worst[0], worst[1],
                        bound, worst[0] > bound + 3 * worst[1])
            )
    return rows


def suite_thm6(trials=2000, seed=0, d=20, deltas=(0.01, 0.1, 1.0), ns=(50, 200),
               n0s=(20, 500), draws=3):
    """Plugin estimator (side information estimated from n0 samples) vs
    min(1.5 (d-1)/(2n), Delta + log(1 + d0/n0) + log 2)."""
    rows = []
    pi0 = uniform(d)
    rng = np.random.default_rng(seed)
    k = 0
    for delta in deltas:
        for n in ns:
            for n0 in n0s:
                bound = min(
                    1.5 * (d - 1) / (2.0 * n),
                    delta + math.log1p(d / n0) + math.log(2.0),
                )
                worst = None
                alpha_used = None
                for _ in range(draws):
                    pi = kl_ball_sample(pi0, delta, rng, mode="boundary").mass
                    r, alpha = mc_plugin_risk(pi, pi0, n, n0, delta, trials,
                                              seed + 15485863 * k)
                    k += 1
                    alpha_used = alpha
                    if worst is None or r.mean > worst[0]:
                        worst = (r.mean, r.stderr)
                rows.append(
                    RiskRow(d, n, n0, delta, f"plugin_alpha{alpha_used:g}", worst[0],
                            worst[1], bound, worst[0] > bound + 3 * worst[1])
                )
    return rows


def suite_assouad(seed=0, ds=(4, 8, 16), samples=1000):
    """Hypercube family checks at the maximal admissible tau = 1/(2d)."""
    rows = []
    rng = np.random.default_rng(seed)
    for d in ds:
        tau = max_tau(d)
        fam = build_assouad(d, tau)
        unif = uniform(d)
        invalid = 0
        ball_max = 0.0
        nbr_max = 0.0
        l1_err_max = 0.0
        for _ in range(samples):
            v = rng.choice([-1, 1], size=fam.half)
            try:
                theta = fam.member(v)
            except ValueError:
                invalid += 1
                continue
            ball_max = max(ball_max, _kl_vec(theta.mass, unif))
            flip = int(rng.integers(fam.half))
            v2 = v.copy()
            v2[flip] = -v2[flip]
            nbr_max = max(nbr_max, assouad_neighbor_kl(fam, v, v2))
            l1 = float(np.abs(theta.mass - fam.member(v2).mass).sum())
            l1_err_max = max(l1_err_max, abs(l1 - 4.0 * tau))
        rows.append(RiskRow(d, None, None, None, "assouad_validity", float(invalid),
                            0.0, 0.0, invalid > 0))
        rows.append(RiskRow(d, None, None, None, "assouad_ball_kl", ball_max, 0.0,
                            d * d * tau * tau, ball_max > d * d * tau * tau))
        rows.append(RiskRow(d, None, None, None, "assouad_neighbor_kl", nbr_max, 0.0,
                            8 * tau * tau * d, nbr_max > 8 * tau * tau * d))
        rows.append(RiskRow(d, None, None, None, "assouad_neighbor_l1", l1_err_max,
                            0.0, 0.0, l1_err_max > 0.0))
    return rows


SUITES = {
    "thm3": suite_thm3,
    "thm4": suite_thm4,
    "thm6": suite_thm6,
    "assouad": suite_assouad,
}
