"""Moment sequences: growth checks, Carleman classification, Stieltjes-state
checks and the moment-to-Jacobi recursion.

Moments are stored through their logarithms so that sequences up to n = 256
(e.g. n!, or exp(n^2 / 2)) never overflow.  When exact values are available
(integers, fractions) the Jacobi recursion runs in exact arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import InputError

DIVERGENT, CONVERGENT, INCONCLUSIVE = "Divergent", "Convergent", "Inconclusive"
FIT_DELTA = 0.05
LOG_SLACK = 1e-10
PARTIAL_SUM_CONTRACT = ("partial sums of mu_n^(-1/2n) are diagnostics only; "
                        "finitely many terms cannot decide divergence")


@dataclass(frozen=True)
class GrowthTag:
    """Closed-form description of a moment sequence.

    kind is one of ``factorial`` (n!), ``lognormal`` (exp(n^2/2)),
    ``geometric`` (rate^n), ``custom`` (exp(alpha n log n + beta n)) or
    ``bounded`` (some sequence with mu_n <= mu_0 rate^n; no closed form).
    """

    kind: str
    rate: float | None = None
    alpha: float | None = None
    beta: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("factorial", "lognormal", "geometric", "custom", "bounded"):
            raise InputError(f"unknown growth tag {self.kind!r}")
        if self.kind in ("geometric", "bounded") and (self.rate is None or self.rate < 0):
            raise InputError(f"{self.kind} tag needs a non-negative rate")
        if self.kind == "custom" and self.alpha is None:
            raise InputError("custom tag needs an exponent alpha")

    def log_moment(self, n: int) -> float:
        if self.kind == "factorial":
            return math.lgamma(n + 1)
        if self.kind == "lognormal":
            return n * n / 2
        if self.kind == "geometric":
            return 0.0 if n == 0 else (n * math.log(self.rate) if self.rate > 0 else -math.inf)
        if self.kind == "custom":
            return 0.0 if n == 0 else self.alpha * n * math.log(n) + self.beta * n
        raise InputError("a bounded tag carries no closed form")

    def exact_value(self, n: int):
        if self.kind == "factorial":
            return math.factorial(n)
        if self.kind == "geometric":
            return Fraction(self.rate) ** n
        with mpmath.workdps(60):
            return mpmath.exp(mpmath.mpf(self.log_moment(n)) if self.kind == "custom"
                              else mpmath.mpf(n) ** 2 / 2)

    def closed_form_verdict(self) -> str:
        if self.kind in ("factorial", "geometric", "bounded"):
            return DIVERGENT
        if self.kind == "lognormal":
            return CONVERGENT
        # terms mu_n^(-1/2n) = n^(-alpha/2) exp(-beta/2)
        return DIVERGENT if self.alpha <= 2 else CONVERGENT

    def describe(self) -> str:
        if self.kind == "geometric":
            return f"geometric({self.rate:g})"
        if self.kind == "bounded":
            return f"bounded({self.rate:.6g})"
        if self.kind == "custom":
            return f"custom({self.name or 'unnamed'}, alpha={self.alpha:g})"
        return self.kind


def _log_of(value) -> float:
    if isinstance(value, Fraction):
        if value == 0:
            return -math.inf
        return math.log(value.numerator) - math.log(value.denominator)
    if isinstance(value, int):
        return math.log(value) if value else -math.inf
    value = float(value)
    return math.log(value) if value > 0 else -math.inf


@dataclass(frozen=True, eq=False)
class MomentSequence:
    """Prefix mu_0..mu_N of a moment sequence, stored as logarithms."""

    log_mu: np.ndarray
    source: str
    tag: GrowthTag | None = None
    values: tuple | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        logs = np.array(self.log_mu, dtype=float)
        if logs.ndim != 1 or len(logs) < 9:
            raise InputError("a moment sequence needs mu_0..mu_N with N >= 8")
        if not np.isfinite(logs[0]):
            raise InputError("mu_0 must be positive")
        if np.isnan(logs).any() or np.isposinf(logs).any():
            raise InputError("moments must be finite and non-negative")
        logs.setflags(write=False)
        object.__setattr__(self, "log_mu", logs)

    @classmethod
    def from_values(cls, values, label: str = "", source: str = "explicit") -> "MomentSequence":
        vals = []
        for v in values:
            if isinstance(v, str):
                v = Fraction(v)
            if isinstance(v, (int, Fraction)):
                if v < 0:
                    raise InputError("moments of a positive element are non-negative")
                vals.append(v)
            else:
                v = float(v)
                if v < 0 or not math.isfinite(v):
                    raise InputError(f"invalid moment {v!r}")
                vals.append(v)
        return cls(np.array([_log_of(v) for v in vals]), source, values=tuple(vals), label=label)

    @classmethod
    def from_tag(cls, tag: GrowthTag, n_max: int, label: str = "") -> "MomentSequence":
        logs = np.array([tag.log_moment(n) for n in range(n_max + 1)])
        return cls(logs, "closed-form", tag=tag, label=label or tag.describe())

    @property
    def N(self) -> int:
        return len(self.log_mu) - 1

    @property
    def mu(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_mu)

    @property
    def zero_branch(self) -> bool:
        return bool(np.isneginf(self.log_mu[1:]).any())

    def exact_values(self) -> list:
        """Moments in the most exact number type available."""
        if self.values is not None:
            return [Fraction(v) if isinstance(v, int) else v for v in self.values]
        if self.tag is not None and self.tag.kind != "bounded":
            vals = [self.tag.exact_value(n) for n in range(self.N + 1)]
            return [Fraction(v) if isinstance(v, int) else v for v in vals]
        if np.abs(self.log_mu).max() > 700:
            with mpmath.workdps(30):
                return [mpmath.exp(mpmath.mpf(x)) if np.isfinite(x) else mpmath.mpf(0)
                        for x in self.log_mu]
        return [float(v) for v in self.mu]


# -- growth -------------------------------------------------------------------

def hankel_check(m: MomentSequence) -> dict:
    """Minimum eigenvalues of the diagonally scaled Hankel matrices H(0), H(1)."""
    if m.zero_branch:
        return {"h0_min": 0.0, "h1_min": 0.0, "passed": True, "note": "zero branch"}
    logs = m.log_mu
    k = (m.N - 1) // 2
    out = {}
    for shift, key in ((0, "h0_min"), (1, "h1_min")):
        idx = np.arange(k + 1)
        diag = logs[2 * idx + shift]
        ent = logs[idx[:, None] + idx[None, :] + shift] - (diag[:, None] + diag[None, :]) / 2
        h = np.exp(ent)
        vals = np.linalg.eigvalsh(h)
        out[key] = float(vals[0] / vals[-1])
    out["size"] = k + 1
    out["passed"] = bool(min(out["h0_min"], out["h1_min"]) >= -1e-8)
    return out


def growth_check(m: MomentSequence) -> dict:
    """Log-convexity and root monotonicity of a positive-element sequence.

    Root monotonicity is checked for mu_n / mu_0, which reduces to the usual
    statement for states (mu_0 = 1).
    """
    logs = m.log_mu
    report = {"N": m.N, "label": m.label}
    if m.zero_branch:
        all_zero = bool(np.isneginf(logs[1:]).all())
        report.update(zero_branch=True, dichotomy_holds=all_zero,
                      variance=0.0 if all_zero else None,
                      ratio_min_slack=None, root_min_slack=None, valid=all_zero)
        report["hankel"] = hankel_check(m) if all_zero else None
        return report
    ratio = logs[2:] + logs[:-2] - 2 * logs[1:-1]
    ell = logs - logs[0]
    n = np.arange(1, m.N + 1)
    roots = ell[1:] / n
    root_slack = np.diff(roots)
    mu0, mu1, mu2 = (math.exp(x) for x in logs[:3])
    hank = hankel_check(m)
    report.update(
        zero_branch=False,
        dichotomy_holds=True,
        ratio_min_slack=float(ratio.min()),
        root_min_slack=float(root_slack.min()),
        ratio_violations=np.flatnonzero(ratio < -LOG_SLACK).tolist(),
        root_violations=(np.flatnonzero(root_slack < -LOG_SLACK) + 1).tolist(),
        variance=float(mu2 / mu0 - (mu1 / mu0) ** 2) if m.source == "algebra-state" else None,
        hankel=hank,
    )
    report["valid"] = bool(ratio.min() >= -LOG_SLACK and root_slack.min() >= -LOG_SLACK
                           and hank["passed"])
    return report


# -- Carleman -------------------------------------------------------------------

@dataclass
class CarlemanResult:
    verdict: str
    policy: str
    alpha_hat: float | None
    diagnostics: dict

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "policy": self.policy,
                "alpha_hat": self.alpha_hat, **self.diagnostics}


def carleman_partial_sums(m: MomentSequence) -> dict:
    n = np.arange(1, m.N + 1)
    terms = np.exp(-m.log_mu[1:] / (2 * n))
    sums = np.cumsum(terms)
    checkpoints = sorted({max(1, m.N // 4), max(1, m.N // 2), m.N})
    return {"partial_sums": {int(c): float(sums[c - 1]) for c in checkpoints},
            "last_term": float(terms[-1]), "contract": PARTIAL_SUM_CONTRACT}


def fit_exponent(m: MomentSequence) -> float:
    """Least-squares alpha in log mu_n ~ alpha n log n + beta n + gamma, upper half."""
    n = np.arange(max(2, (m.N + 1) // 2), m.N + 1, dtype=float)
    design = np.column_stack([n * np.log(n), n, np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(design, m.log_mu[n.astype(int)], rcond=None)
    return float(coef[0])


def carleman_classify(m: MomentSequence, policy: str = "closed-form",
                      delta: float = FIT_DELTA) -> CarlemanResult:
    """Classify sum_n mu_n^(-1/2n) as divergent or convergent."""
    if m.zero_branch:
        return CarlemanResult(DIVERGENT, policy, None,
                              {"note": "mu_n = 0 for some n >= 1: terms are infinite"})
    diag = carleman_partial_sums(m)
    if policy == "closed-form":
        if m.tag is None:
            return CarlemanResult(INCONCLUSIVE, policy, None,
                                  {**diag, "note": "no closed-form tag"})
        return CarlemanResult(m.tag.closed_form_verdict(), policy, m.tag.alpha,
                              {**diag, "tag": m.tag.describe()})
    if policy != "exponent-fit":
        raise InputError(f"unknown policy {policy!r}")
    if m.N < 16:
        return CarlemanResult(INCONCLUSIVE, policy, None,
                              {**diag, "note": "N < 16: exponent fit not attempted"})
    alpha = fit_exponent(m)
    if alpha <= 2 - delta:
        verdict = DIVERGENT
    elif alpha >= 2 + delta:
        verdict = CONVERGENT
    else:
        verdict = INCONCLUSIVE
    return CarlemanResult(verdict, policy, alpha, {**diag, "delta": delta})


# -- Stieltjes states -------------------------------------------------------------

def stieltjes_state_check(state, a, twist_samples: int = 8, n_max: int = 64,
                          seed: int = 0) -> dict:
    """Check the Carleman condition for <b |> w, a^n> on a positive element a.

    In the commutative case the plain sequence decides, and the
    Cauchy-Schwarz chain
    ``<b|>w, a^n>^(1/2n) <= <w,(b*b)^2>^(1/4n) <w, a^2n>^(1/4n)``
    and the resulting tail comparison are checked numerically.
    """
    from .gns import build_gns, moment_sequence_of, twisted_log_moments

    alg = state.algebra
    gns = build_gns(state)
    plain = moment_sequence_of(state, a, 2 * n_max + 1, gns=gns)
    rng = np.random.default_rng(seed)
    report = {"commutative": alg.is_commutative, "n_max": n_max}
    if plain.zero_branch:
        report.update(branch="zero", stieltjes=True, plain_verdict=DIVERGENT)
    else:
        report.update(branch="carleman",
                      plain_verdict=carleman_classify(plain, "closed-form").verdict,
                      plain_fit=carleman_classify(plain, "exponent-fit").as_dict())
    twisted, chain, tails = [], [], []
    for _ in range(twist_samples):
        b = alg.random_element(rng)
        nb = state(alg.adjoint_square(b)).real
        if nb <= 1e-12:
            continue
        b = b / math.sqrt(nb)
        logs = twisted_log_moments(state, a, b, n_max, gns=gns)
        seq = MomentSequence(logs, "algebra-state", tag=plain.tag, label="twisted")
        twisted.append(carleman_classify(seq, "closed-form").verdict)
        if not alg.is_commutative:
            continue
        bb = alg.adjoint_square(b)
        log_bb2 = math.log(max(state(alg.multiply(bb, bb)).real, 1e-300))
        n = np.arange(1, n_max + 1)
        with np.errstate(invalid="ignore"):
            rhs = (log_bb2 + plain.log_mu[2 * n]) / (4 * n)
            lhs = logs[1:] / (2 * n)
            slack = np.where(np.isneginf(lhs), np.inf, rhs - lhs)
        chain.append(float(slack.min()))
        with np.errstate(over="ignore", divide="ignore"):
            left = float(np.sum(np.exp(-logs[1:] / (2 * n))))
            m_idx = np.arange(2, 2 * n_max + 2)
            right = math.exp(-log_bb2 / 4) / 2 * float(np.sum(np.exp(-plain.log_mu[m_idx] / (2 * m_idx))))
        tails.append({"twisted_sum": left, "bound": right,
                      "slack": (left - right) if np.isfinite(left) else math.inf})
    report["twisted_verdicts"] = twisted
    if alg.is_commutative:
        report["cauchy_schwarz_min_slack"] = min(chain) if chain else None
        report["tail_comparisons"] = tails
        chain_ok = all(s >= -LOG_SLACK for s in chain)
        tail_ok = all(t["slack"] >= -1e-10 * max(1.0, t["bound"]) for t in tails)
        report["chain_passed"] = bool(chain_ok and tail_ok)
    if report["branch"] == "carleman":
        report["stieltjes"] = bool(report["plain_verdict"] == DIVERGENT
                                   and all(v == DIVERGENT for v in twisted))
    report["note"] = "finite dimension: every state is bounded, hence a Stieltjes state"
    report["passed"] = bool(report["stieltjes"] and report.get("chain_passed", True))
    return report


# -- Jacobi data ------------------------------------------------------------------

@dataclass
class JacobiData:
    """Recurrence pi_{k+1} = (x - alpha_k) pi_k - beta_k pi_{k-1}.

    ``alpha`` holds alpha_0..alpha_M and ``beta`` holds beta_1..beta_M;
    ``mu0`` is the total mass.  ``monic_polys[k]`` lists the coefficients of
    pi_k from the constant term upwards.
    """

    alpha: np.ndarray
    beta: np.ndarray
    mu0: float
    monic_polys: np.ndarray | None = None
    gram_residual: float = 0.0
    requested_M: int | None = None
    warnings: list = field(default_factory=list)
    gram_checked_upto: int | None = None

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if len(self.beta) != len(self.alpha) - 1:
            raise InputError("need len(beta) = len(alpha) - 1")
        if (self.beta <= 0).any():
            raise InputError("invalid Jacobi data: beta_k must be positive")

    @property
    def M(self) -> int:
        return len(self.alpha) - 1

    def matrix(self) -> np.ndarray:
        off = np.sqrt(self.beta)
        return np.diag(self.alpha) + np.diag(off, 1) + np.diag(off, -1)


def _is_zero(x, scale) -> bool:
    if isinstance(x, Fraction):
        return x == 0
    return abs(x) <= 1e-12 * abs(scale)


def _to_float(x) -> float:
    return float(x)


def _monic_table(alpha, beta, M):
    """Coefficients of pi_0..pi_M from the recurrence, in the input number type."""
    one = alpha[0] * 0 + 1
    polys = [[one]]
    if M >= 1:
        polys.append([-alpha[0], one])
    for k in range(1, M):
        nxt = [0 * one] * (k + 2)
        for i, c in enumerate(polys[k]):
            nxt[i + 1] += c
            nxt[i] -= alpha[k] * c
        for i, c in enumerate(polys[k - 1]):
            nxt[i] -= beta[k - 1] * c
        polys.append(nxt)
    return polys


def _hankel_inner(p, q, mu):
    return sum(pi * qj * mu[i + j] for i, pi in enumerate(p) for j, qj in enumerate(q))


def jacobi_from_moments(m: MomentSequence, M: int, gram_check: int | None = 16) -> JacobiData:
    """Recurrence coefficients from moments by the Chebyshev algorithm.

    Uses sigma_{k,l} = <pi_k, x^l>; runs in exact arithmetic when the
    moments are integers or fractions.  If <pi_k, pi_k> vanishes (the
    measure has k atoms) the data are truncated to M = k - 1.  The Gram
    residual of the monic polynomials is evaluated for pi_0..pi_K with
    K = min(M, gram_check) (all of them when ``gram_check`` is None); in
    exact arithmetic each extra level costs O(K^3) big-number operations.
    """
    with mpmath.workdps(60):
        return _chebyshev(m, M, gram_check)


def _chebyshev(m: MomentSequence, M: int, gram_check) -> JacobiData:
    mu = m.exact_values()
    if 2 * M + 1 > m.N:
        raise InputError(f"M = {M} needs moments up to {2 * M + 1}, have {m.N}")
    warnings = []
    alpha = [mu[1] / mu[0]]
    beta = []
    prev = [0 * mu[0]] * (2 * M + 2)
    cur = list(mu[: 2 * M + 2])
    for k in range(1, M + 1):
        b_prev = beta[-1] if beta else 0
        nxt = [0 * mu[0]] * (2 * M + 2)
        for l in range(k, 2 * M - k + 2):
            nxt[l] = cur[l + 1] - alpha[k - 1] * cur[l] - b_prev * prev[l]
        if _is_zero(nxt[k], mu[2 * k]) or nxt[k] < 0:
            warnings.append(f"Hankel matrix singular at level {k}: truncated to M = {k - 1}")
            break
        alpha.append(nxt[k + 1] / nxt[k] - cur[k] / cur[k - 1])
        beta.append(nxt[k] / cur[k - 1])
        prev, cur = cur, nxt
    M_eff = len(alpha) - 1
    polys = _monic_table(alpha, beta, M_eff)
    table = np.zeros((M_eff + 1, M_eff + 1))
    for k, p in enumerate(polys):
        table[k, : len(p)] = [_to_float(c) for c in p]
    checked = polys if gram_check is None else polys[: gram_check + 1]
    norms = [_hankel_inner(p, p, mu) for p in checked]
    resid = 0.0
    for i in range(len(checked)):
        for j in range(i):
            val = _hankel_inner(checked[i], checked[j], mu)
            resid = max(resid, abs(_to_float(val)) / math.sqrt(_to_float(norms[i]) * _to_float(norms[j])))
    return JacobiData(np.array([_to_float(x) for x in alpha]),
                      np.array([_to_float(x) for x in beta]),
                      _to_float(mu[0]), table, resid, requested_M=M, warnings=warnings,
                      gram_checked_upto=len(checked) - 1)


def gram_schmidt_jacobi(m: MomentSequence, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent oracle: Gram-Schmidt on 1, x, ..., x^M under the Hankel form."""
    with mpmath.workdps(60):
        return _gram_schmidt(m, M)


def _gram_schmidt(m: MomentSequence, M: int):
    mu = m.exact_values()
    one = mu[0] * 0 + 1
    ortho, norms = [], []
    for k in range(M + 1):
        p = [0 * one] * k + [one]
        for q, nq in zip(ortho, norms):
            c = _hankel_inner(p, q, mu) / nq
            p = [pi - c * (q[i] if i < len(q) else 0) for i, pi in enumerate(p)]
        ortho.append(p)
        norms.append(_hankel_inner(p, p, mu))
    alpha, beta = [], []
    for k, p in enumerate(ortho):
        xp = [0 * one] + p
        alpha.append(_hankel_inner(xp, p, mu) / norms[k])
        if k:
            beta.append(norms[k] / norms[k - 1])
    return (np.array([_to_float(x) for x in alpha]), np.array([_to_float(x) for x in beta]))


def moments_from_jacobi(j: JacobiData, n_max: int) -> MomentSequence:
    """Moments of the Gauss quadrature rule of the Jacobi matrix."""
    nodes, vecs = np.linalg.eigh(j.matrix())
    weights = j.mu0 * vecs[0] ** 2
    values = [float(np.sum(weights * nodes ** n)) for n in range(n_max + 1)]
    return MomentSequence.from_values([max(v, 0.0) for v in values], label="gauss-quadrature")


def recursion_solution(j: JacobiData, lam: float) -> dict:
    """Solve the tridiagonal system with a_i = -alpha_i, b_i = sqrt(beta_{i+1}).

    p_0 = 1 and p_{i+1} = ((lam - a_i) p_i - b_{i-1} p_{i-1}) / b_i.
    """
    a = -j.alpha
    b = np.sqrt(j.beta)
    if (b <= 0).any():
        raise InputError("invalid Jacobi data: b_i must be positive")
    p = [1.0 + 0j]
    for i in range(j.M):
        prev = b[i - 1] * p[i - 1] if i else 0.0
        p.append(((lam - a[i]) * p[i] - prev) / b[i])
    p = np.array(p)
    sums = np.cumsum(np.abs(p) ** 2)
    q = max(1, (len(sums) * 3) // 4)
    increase = float(sums[-1] / sums[q - 1] - 1) if len(sums) > 1 else 0.0
    return {"p": p, "partial_sums": sums, "last_quartile_increase": increase}
