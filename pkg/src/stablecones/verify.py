"""Statistical and numerical checks of simulated stable elements.

Laws on a cone are compared through empirical characteristic functionals
(ECFs) over a finite probe set. Two-sample comparisons use

    T = max_p max(0, |ECF_x(chi_p) - ECF_y(chi_p)| - allowance_p) / SE_p,

where ``allowance_p`` bounds the known truncation bias of the probe and
``SE_p`` is the pooled standard error. The 1% threshold for ``T`` comes from
resampling the data under the null (permutations of the pooled sample, or a
Poisson bootstrap of a centred statistic), so it needs no asymptotic table.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .core import (
    EUCLIDEAN,
    MAX,
    NEGATION,
    SUM,
    MULTIPLICATIVE,
    OPERATOR,
    TIME,
    WEIGHT,
    Bump,
    Character,
    ConeDescriptor,
    FourierCharacter,
    IndicatorCharacter,
    LaplaceCharacter,
    add,
    as_element,
    scale,
)
from .cones import ConeSpec, make_cone
from .errors import DomainError
from .lepage import (
    SeriesBatch,
    check_admissible,
    ecf_truncation_allowance,
    eps_condition_check,
    gamma_sequence,
    sample_batch,
    stream_generator,
)
from .polar import NormTransversal, RadialLaw, tau
from .spectral import ConstantMark, RademacherMark

LEVEL = 0.01
N_RESAMPLES = 400
BLOCK = 25


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Outcome of one check.

    ``calibration`` names how ``threshold`` was obtained. ``passed`` is None
    when the check was skipped. ``per_probe`` holds one dict per probe or
    test set.
    """

    name: str
    statistic: float
    threshold: float
    calibration: str
    passed: bool | None
    sizes: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    r: float | None = None
    alpha: float | None = None
    allowance: float | None = None
    per_probe: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_lines(self) -> list[str]:
        """One ``key=value`` record per line, values JSON-encoded."""
        return [f"{k}={json.dumps(v, sort_keys=True, default=_json_default)}" for k, v in asdict(self).items()]

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> "VerificationReport":
        data = {}
        for line in lines:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, value = line.partition("=")
            data[key] = json.loads(value)
        return cls(**data)

    CSV_HEADER = ("test", "passed", "statistic", "threshold", "calibration", "n", "seed", "r", "alpha", "allowance")

    def csv_row(self) -> list[str]:
        n = self.sizes.get("n", "")
        seed = self.seeds.get("seed", "")
        return [
            self.name,
            "skipped" if self.passed is None else str(bool(self.passed)).lower(),
            _g(self.statistic),
            _g(self.threshold),
            self.calibration,
            str(n),
            str(seed),
            "" if self.r is None else _g(self.r),
            "" if self.alpha is None else _g(self.alpha),
            "" if self.allowance is None else _g(self.allowance),
        ]


def _g(x) -> str:
    return format(float(x), ".17g")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")


# ---------------------------------------------------------------------------
# ECF estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ECFEstimate:
    mean: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n: int

    @property
    def stderr(self) -> np.ndarray:
        return np.hypot(self.stderr_re, self.stderr_im)


def character_matrix(probes: Sequence[Character], samples) -> np.ndarray:
    """``M[i, p] = chi_p(sample_i)``; samples are payload rows or elements."""
    if isinstance(samples, SeriesBatch):
        samples = samples.samples
    if isinstance(samples, np.ndarray):
        return np.stack([chi.evaluate(samples) for chi in probes], axis=1)
    samples = list(samples)
    out = np.empty((len(samples), len(probes)), dtype=complex)
    for p, chi in enumerate(probes):
        out[:, p] = [chi(x) for x in samples]
    return out


def ecf_estimate(samples, probes: Sequence[Character]) -> ECFEstimate:
    """Sample mean of ``chi(x)`` per probe with componentwise standard errors."""
    m = character_matrix(probes, samples)
    n = m.shape[0]
    if n == 0:
        raise DomainError("cannot estimate an ECF from an empty sample")
    if n == 1:
        z = np.zeros(m.shape[1])
        return ECFEstimate(m[0], z, z, 1)
    return ECFEstimate(
        m.mean(axis=0), m.real.std(axis=0, ddof=1) / math.sqrt(n), m.imag.std(axis=0, ddof=1) / math.sqrt(n), n
    )


def mc_threshold(null: np.ndarray, level: float) -> float:
    """Rejection threshold from ``B`` resampled statistics at size ``level``.

    Rejecting when the observed statistic exceeds the ``k``-th smallest
    resampled value, ``k = ceil((B + 1)(1 - level))``, is the Monte Carlo
    test rule: the plain empirical quantile rejects too often when ``B`` is
    a few hundred. With ``k > B`` nothing can be rejected.
    """
    null = np.sort(np.asarray(null, dtype=float))
    k = math.ceil((null.size + 1) * (1.0 - level) - 1e-9)
    return math.inf if k > null.size else float(null[k - 1])


def _as_real(m: np.ndarray) -> np.ndarray:
    return np.concatenate([m.real, m.imag], axis=1)


def _max_modulus(d: np.ndarray, p: int) -> np.ndarray:
    """Row-wise moduli of complex differences stored as ``[re | im]`` columns."""
    return np.hypot(d[..., :p], d[..., p:])


def two_sample_ecf_test(
    x,
    y,
    probes: Sequence[Character],
    allowances: Sequence[float] | None = None,
    *,
    seed: int = 0,
    n_perm: int = N_RESAMPLES,
    level: float = LEVEL,
):
    """Permutation-calibrated max-over-probes ECF distance between two samples.

    Returns ``(statistic, threshold, per_probe)`` where ``per_probe`` lists
    the ECF difference, pooled standard error and allowance of each probe.
    """
    mx = character_matrix(probes, x)
    my = character_matrix(probes, y)
    nx, ny = mx.shape[0], my.shape[0]
    if nx < 2 or ny < 2:
        raise DomainError("each sample needs at least two elements")
    p = len(probes)
    allow = np.zeros(p) if allowances is None else np.array([0.0 if a is None else a for a in allowances])
    pooled = _as_real(np.vstack([mx, my]))
    pooled -= pooled.mean(axis=0)
    var = pooled.var(axis=0, ddof=1)
    se = np.sqrt((var[:p] + var[p:]) * (1.0 / nx + 1.0 / ny))
    se = np.where(se > 0, se, np.inf)
    diff = mx.mean(axis=0) - my.mean(axis=0)
    excess = np.maximum(0.0, np.abs(diff) - allow)
    with np.errstate(invalid="ignore"):
        per = np.where(np.isinf(se), 0.0, excess / se)
    statistic = float(per.max())

    rng = np.random.default_rng(seed)
    n = nx + ny
    base = np.zeros(n)
    base[:nx] = 1.0
    null = []
    for start in range(0, n_perm, BLOCK):
        k = min(BLOCK, n_perm - start)
        assign = rng.permuted(np.tile(base, (k, 1)), axis=1)
        w = assign / nx - (1.0 - assign) / ny
        d = w @ pooled
        null.append((_max_modulus(d, p) / se).max(axis=1))
    null = np.concatenate(null)
    threshold = mc_threshold(null, level)
    rows = [
        {"probe": repr(chi), "diff": [float(dd.real), float(dd.imag)], "se": float(s), "allowance": float(a)}
        for chi, dd, s, a in zip(probes, diff, se, allow)
    ]
    return statistic, threshold, rows


# ---------------------------------------------------------------------------
# scaled characters and sample transforms
# ---------------------------------------------------------------------------


def scaled_character(cone: ConeDescriptor, chi: Character, s: float) -> Character | None:
    """The character ``x -> chi(s x)`` when it stays in the same family, else None."""
    if cone.scaling_kind == MULTIPLICATIVE:
        if isinstance(chi, FourierCharacter):
            return FourierCharacter(s * chi.u)
        if isinstance(chi, IndicatorCharacter):
            return IndicatorCharacter(chi.indices, tuple(a / s for a in chi.thresholds))
        if isinstance(chi, LaplaceCharacter) and chi.weights is not None:
            return LaplaceCharacter(s * chi.weights)
    if cone.scaling_kind == OPERATOR and isinstance(chi, FourierCharacter):
        return FourierCharacter(cone.operator_power(s).T @ chi.u)
    if cone.scaling_kind == WEIGHT and isinstance(chi, LaplaceCharacter):
        return LaplaceCharacter(bumps=tuple(Bump(b.center, b.radius, s * b.height) for b in chi.bumps))
    return None


def _allowance(cone, law, spectral, chi, r, s=1.0) -> float | None:
    """Truncation allowance of the probe ``x -> chi(s x)``."""
    if cone.scaling_kind == TIME:
        return ecf_truncation_allowance(cone, law, spectral, chi, r)
    if spectral.post_scale != 1.0:
        s = s * spectral.post_scale
    scaled = chi if s == 1.0 else scaled_character(cone, chi, s)
    if scaled is None:
        return None
    return ecf_truncation_allowance(cone, law, spectral, scaled, r)


def _sum_allowance(parts):
    if any(p is None for p in parts):
        return None
    return float(sum(parts))


def scale_samples(cone: ConeDescriptor, samples, s: float):
    """Apply ``x -> s x`` to a batch (rows or elements)."""
    if isinstance(samples, SeriesBatch):
        samples = samples.samples
    if isinstance(samples, np.ndarray):
        if cone.scaling_kind == MULTIPLICATIVE:
            return s * samples
        if cone.scaling_kind == OPERATOR:
            return samples @ cone.operator_power(s).T
    return [scale(cone, s, x) for x in samples]


def combine_samples(cone: ConeDescriptor, x, y):
    """Pairwise ``x_i + y_i`` under the cone operation."""
    if isinstance(x, np.ndarray) and isinstance(y, np.ndarray):
        if cone.semigroup_op == MAX:
            return np.maximum(x, y)
        if cone.scaling_kind in (MULTIPLICATIVE, OPERATOR):
            return x + y
    return [add(cone, a, b) for a, b in zip(_elements(cone, x), _elements(cone, y))]


def _elements(cone, samples):
    if isinstance(samples, np.ndarray):
        return [as_element(cone, row) for row in samples]
    return list(samples)


# ---------------------------------------------------------------------------
# stability identity
# ---------------------------------------------------------------------------

MUTATIONS = ("exponent-one", "wrong-alpha", "skip-rescale")


def _check_mutation(mutation, allowed):
    if mutation is not None and mutation != allowed:
        raise DomainError(f"mutation {mutation!r} does not apply here; this test accepts {allowed!r}")


def _exact_samples(batch: SeriesBatch):
    # time-stable sums must be formed on exact step functions, not on grid rows
    return batch.elements if batch.elements is not None else batch.rows


def stability_test(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    a: float,
    b: float,
    n: int,
    r: float,
    probes: Sequence[Character],
    seed: int,
    *,
    mutation: str | None = None,
    n_perm: int = N_RESAMPLES,
    batch_size: int = 1024,
    workers: int = 1,
) -> VerificationReport:
    """Compare ``a^(1/alpha) xi' + b^(1/alpha) xi''`` with ``(a + b)^(1/alpha) xi``.

    The three samples come from independent streams 1, 2, 3 of ``seed``.
    ``mutation="exponent-one"`` uses scaling exponent 1 instead of
    ``1/alpha`` (a deliberately wrong identity the test must reject).
    """
    _check_mutation(mutation, "exponent-one")
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise DomainError("stability weights a and b must be positive and finite")
    check_admissible(cone, law.alpha, spectral.symmetric)
    e = 1.0 if mutation == "exponent-one" else 1.0 / law.alpha
    kw = dict(batch_size=batch_size, workers=workers)
    x1 = _exact_samples(sample_batch(cone, law, spectral, r, n, seed, stream=1, **kw))
    x2 = _exact_samples(sample_batch(cone, law, spectral, r, n, seed, stream=2, **kw))
    x3 = _exact_samples(sample_batch(cone, law, spectral, r, n, seed, stream=3, **kw))
    sa, sb, sab = a**e, b**e, (a + b) ** e
    lhs = combine_samples(cone, scale_samples(cone, x1, sa), scale_samples(cone, x2, sb))
    rhs = scale_samples(cone, x3, sab)
    allow = [
        _sum_allowance([_allowance(cone, law, spectral, chi, r, s) for s in (sa, sb, sab)]) for chi in probes
    ]
    stat, thr, rows = two_sample_ecf_test(lhs, rhs, probes, allow, seed=seed, n_perm=n_perm)
    notes = []
    if any(x is None for x in allow):
        notes.append("truncation allowance not available for some probes; treated as 0")
    return VerificationReport(
        name="stability",
        statistic=stat,
        threshold=thr,
        calibration=f"permutation null, {n_perm} resamples, Monte Carlo {LEVEL:.0%} level",
        passed=stat <= thr,
        sizes={"n": n, "probes": len(probes)},
        seeds={"seed": seed, "streams": [1, 2, 3]},
        r=float(r),
        alpha=law.alpha,
        allowance=max((x for x in allow if x is not None), default=None),
        per_probe=rows,
        notes=notes + ([f"mutation={mutation}"] if mutation else []) + [f"a={a}", f"b={b}"],
    )


# ---------------------------------------------------------------------------
# homogeneity of the Laplace exponent
# ---------------------------------------------------------------------------

LIM_CHI_START = 2.0**-20
LIM_CHI_HALVINGS = 64


def _lim_chi_ok(cone, chi, samples, k: int = 200) -> bool:
    """Numerical check of ``liminf_{t -> 0} Re chi(t x) > 0`` on a few samples.

    Each sample starts at ``t = 2^-20``; samples with ``Re chi(t x) <= 0``
    there (heavy tails make a few of them large) are followed further down
    the dyadic times until the value turns positive.
    """
    subset = samples[:k] if isinstance(samples, np.ndarray) else list(samples)[:k]
    idx = np.arange(len(subset))
    t = LIM_CHI_START
    for _ in range(LIM_CHI_HALVINGS):
        part = subset[idx] if isinstance(subset, np.ndarray) else [subset[i] for i in idx]
        vals = character_matrix([chi], scale_samples(cone, part, t))[:, 0]
        idx = idx[vals.real <= 0]
        if idx.size == 0:
            return True
        t *= 0.5
    return False


def phi_homogeneity_test(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    a: float,
    probes: Sequence[Character],
    n: int,
    r: float,
    seed: int,
    *,
    mutation: str | None = None,
    n_boot: int = N_RESAMPLES,
    batch_size: int = 1024,
) -> VerificationReport:
    """Check ``phi(a chi) = a^alpha phi(chi)`` with ``phi = -log E chi(xi)``.

    Both sides use the same sample, ``(a chi)(x) = chi(a x)``. Per probe,
    ``D = phi_hat(a chi) - a^alpha phi_hat(chi)`` has a delta-method standard
    error; the statistic is the largest excess of ``|D|`` over its truncation
    allowance in standard errors, calibrated by a Poisson bootstrap of the
    centred statistic. ``mutation="wrong-alpha"`` simulates with index
    ``1.6 alpha`` while testing with ``alpha``.
    """
    _check_mutation(mutation, "wrong-alpha")
    if not (a > 0 and math.isfinite(a)):
        raise DomainError("scaling a must be positive and finite")
    alpha = law.alpha
    sim_law = RadialLaw(1.6 * alpha) if mutation == "wrong-alpha" else law
    batch = sample_batch(cone, sim_law, spectral, r, n, seed, stream=4, batch_size=batch_size)
    samples = _exact_samples(batch)
    scaled = scale_samples(cone, samples, a)
    m1 = character_matrix(probes, samples)
    m2 = character_matrix(probes, scaled)
    mean1, mean2 = m1.mean(axis=0), m2.mean(axis=0)
    se1 = np.sqrt(m1.real.var(axis=0, ddof=1) + m1.imag.var(axis=0, ddof=1)) / math.sqrt(n)
    se2 = np.sqrt(m2.real.var(axis=0, ddof=1) + m2.imag.var(axis=0, ddof=1)) / math.sqrt(n)
    keep, rows, notes = [], [], []
    for p, chi in enumerate(probes):
        reason = None
        if abs(mean1[p]) < 5 * se1[p] or abs(mean2[p]) < 5 * se2[p]:
            reason = "ECF within 5 SE of 0; log undefined"
        elif not _lim_chi_ok(cone, chi, samples):
            reason = "liminf Re chi(t x) > 0 not met numerically"
        if reason:
            notes.append(f"probe {p} excluded: {reason}")
            rows.append({"probe": repr(chi), "excluded": reason})
        else:
            keep.append(p)
    if not keep:
        return VerificationReport(
            "phi-homogeneity", 0.0, 0.0, "none", None, {"n": n}, {"seed": seed, "streams": [4]},
            float(r), alpha, None, rows, notes + ["all probes excluded"],
        )
    aa = a**alpha
    k = np.array(keep)
    c1, c2 = m1[:, k], m2[:, k]
    mu1, mu2 = mean1[k], mean2[k]
    d = -np.log(mu2) + aa * np.log(mu1)
    infl = -(c2 - mu2) / mu2 + aa * (c1 - mu1) / mu1
    se = np.sqrt(infl.real.var(axis=0, ddof=1) + infl.imag.var(axis=0, ddof=1)) / math.sqrt(n)
    allow = []
    for p in keep:
        chi = probes[p]
        al1 = _allowance(cone, law, spectral, chi, r, 1.0)
        al2 = _allowance(cone, law, spectral, chi, r, a)
        if al1 is None or al2 is None:
            allow.append(0.0)
            continue
        lo1, lo2 = abs(mean1[p]) - al1, abs(mean2[p]) - al2
        allow.append(math.inf if min(lo1, lo2) <= 0 else al2 / lo2 + aa * al1 / lo1)
    allow = np.array(allow)
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.where(se > 0, np.maximum(0.0, np.abs(d) - allow) / se, 0.0)
    statistic = float(per.max())

    rng = stream_generator(seed, 5, 0)
    null = []
    safe_se = np.where(se > 0, se, np.inf)
    for start in range(0, n_boot, BLOCK):
        kk = min(BLOCK, n_boot - start)
        w = rng.poisson(1.0, size=(kk, n)).astype(float)
        tot = w.sum(axis=1, keepdims=True)
        b1 = (w @ c1) / tot
        b2 = (w @ c2) / tot
        db = -np.log(b2) + aa * np.log(b1)
        null.append((np.abs(db - d) / safe_se).max(axis=1))
    threshold = mc_threshold(np.concatenate(null), LEVEL)
    for j, p in enumerate(keep):
        rows.insert(
            p,
            {
                "probe": repr(probes[p]),
                "phi": [float(-np.log(mu1[j]).real), float(-np.log(mu1[j]).imag)],
                "phi_scaled": [float(-np.log(mu2[j]).real), float(-np.log(mu2[j]).imag)],
                "diff": [float(d[j].real), float(d[j].imag)],
                "se": float(se[j]),
                "allowance": float(allow[j]),
            },
        )
    return VerificationReport(
        name="phi-homogeneity",
        statistic=statistic,
        threshold=threshold,
        calibration=f"poisson bootstrap of centred statistic, {n_boot} resamples, Monte Carlo {LEVEL:.0%} level",
        passed=statistic <= threshold,
        sizes={"n": n, "probes": len(probes), "used": len(keep)},
        seeds={"seed": seed, "streams": [4, 5]},
        r=float(r),
        alpha=alpha,
        allowance=float(allow.max()),
        per_probe=rows,
        notes=notes + ([f"mutation={mutation}"] if mutation else []) + [f"a={a}"],
    )


# ---------------------------------------------------------------------------
# independent oracle: symmetric stable scalars
# ---------------------------------------------------------------------------


def cms_oracle(alpha: float, n: int, rng: np.random.Generator | int) -> np.ndarray:
    """``n`` symmetric alpha-stable scalars with ECF ``exp(-|u|^alpha)``.

    Chambers-Mallows-Stuck in its symmetric form; continuous at ``alpha = 1``
    where it reduces to ``tan V`` (Cauchy).
    """
    if not 0 < alpha < 2:
        raise DomainError(f"the symmetric sampler needs alpha in (0, 2), got {alpha}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    v = gen.uniform(-0.5 * math.pi, 0.5 * math.pi, n)
    w = gen.standard_exponential(n)
    if alpha == 1.0:
        return np.tan(v)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def cms_constant(alpha: float) -> float:
    """``C_alpha = alpha int_0^inf (1 - cos t) t^-(alpha+1) dt`` by quadrature."""
    cone = ConeDescriptor(EUCLIDEAN, SUM, MULTIPLICATIVE, NEGATION, dim=1)
    res = eps_condition_check(cone, RadialLaw(alpha), ConstantMark([1.0]), FourierCharacter([1.0]))
    if not res.finite:
        raise DomainError(f"C_alpha diverges at alpha={alpha}")
    return res.value


def lepage_vs_cms_test(
    alpha: float,
    n: int,
    r: float,
    seed: int,
    *,
    probes: Sequence[Character] | None = None,
    mutation: str | None = None,
    n_perm: int = N_RESAMPLES,
    batch_size: int = 1024,
) -> VerificationReport:
    """LePage series with marks ``+-1`` against the symmetric stable oracle.

    With ``psi(u) = C_alpha |u|^alpha`` for the series, the rescaled variable
    ``C_alpha^(-1/alpha) xi`` has ECF ``exp(-|u|^alpha)``.
    ``mutation="skip-rescale"`` omits the rescaling.
    """
    _check_mutation(mutation, "skip-rescale")
    if not 0 < alpha < 2:
        raise DomainError(f"the symmetric oracle needs alpha in (0, 2), got {alpha}")
    cone, _, default_probes = make_cone(ConeSpec("euclidean-sum", dim=1))
    probes = default_probes if probes is None else probes
    law = RadialLaw(alpha)
    spectral = RademacherMark(np.ones(1))
    c = cms_constant(alpha)
    s = 1.0 if mutation == "skip-rescale" else c ** (-1.0 / alpha)
    batch = sample_batch(cone, law, spectral, r, n, seed, stream=6, batch_size=batch_size)
    x = s * batch.rows
    y = cms_oracle(alpha, n, stream_generator(seed, 7, 0))[:, None]
    allow = [_allowance(cone, law, spectral, chi, r, s) for chi in probes]
    stat, thr, rows = two_sample_ecf_test(x, y, probes, allow, seed=seed, n_perm=n_perm)
    return VerificationReport(
        name="lepage-vs-cms",
        statistic=stat,
        threshold=thr,
        calibration=f"permutation null, {n_perm} resamples, Monte Carlo {LEVEL:.0%} level",
        passed=stat <= thr,
        sizes={"n": n, "probes": len(probes)},
        seeds={"seed": seed, "streams": [6, 7]},
        r=float(r),
        alpha=alpha,
        allowance=max((a for a in allow if a is not None), default=None),
        per_probe=rows,
        notes=[f"C_alpha={c!r}"] + ([f"mutation={mutation}"] if mutation else []),
    )


# ---------------------------------------------------------------------------
# homogeneity of the Levy measure from point counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestSet:
    """``B = {x : lo <= tau(x) < hi, angular(x) in A}``; ``A`` is optional.

    Scaling by ``s`` maps ``B`` to ``{s lo <= tau < s hi}`` with the same ``A``.
    """

    lo: float
    hi: float
    angular: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise DomainError("test sets need 0 < lo < hi")


def series_points(cone, law, spectral, r, n, seed, transversal, *, stream: int = 8):
    """Polar coordinates of the individual series points ``Gamma_i^(-1/alpha) eps_i``, per run.

    Returns a list of ``(radii, angular_rows)`` pairs, one per run. The
    points exist whether or not their sum converges, so no admissibility
    gate applies.
    """
    rng = stream_generator(seed, stream, 0)
    out = []
    for _ in range(n):
        g = gamma_sequence(rng, r)
        marks, _ = spectral.sample(rng, g.size)
        if isinstance(marks, np.ndarray) and isinstance(transversal, NormTransversal) and cone.scaling_kind == MULTIPLICATIVE:
            t = np.linalg.norm(marks, ord=transversal.ord, axis=1) if g.size else np.zeros(0)
            ang = marks / t[:, None] if g.size else np.zeros((0, 0))
        else:
            elems = marks if not isinstance(marks, np.ndarray) else [as_element(cone, m) for m in marks]
            t = np.array([tau(transversal, cone, m) for m in elems]) if elems else np.zeros(0)
            ang = np.array([scale(cone, 1.0 / ti, m).payload for m, ti in zip(elems, t)]) if elems else np.zeros((0, 0))
        # tau(w eps) = w tau(eps) and the angular part is unchanged by scaling
        radial = t * g ** (-1.0 / law.alpha)
        out.append((radial, ang))
    return out


def _garwood(k: int, level: float) -> tuple[float, float]:
    lo = 0.0 if k == 0 else 0.5 * stats.chi2.ppf(level / 2, 2 * k)
    hi = 0.5 * stats.chi2.ppf(1 - level / 2, 2 * k + 2)
    return float(lo), float(hi)


def empirical_homogeneity_test(
    points,
    alpha: float,
    test_sets: Sequence[TestSet],
    scalings: Sequence[float],
    *,
    visible_radius: float = 0.0,
    level: float = LEVEL,
    seed: int | None = None,
    r: float | None = None,
) -> VerificationReport:
    """Compare point counts in ``s B`` with ``s^-alpha`` times counts in ``B``.

    ``points`` is the output of :func:`series_points`. Each count is Poisson,
    so exact (Garwood) intervals at ``1 - level`` are formed for both
    intensities; the check passes when every pair of intervals overlaps.
    Sets reaching below ``visible_radius``, where truncation hides points,
    and sets with zero counts are skipped and recorded.
    """
    radii = np.concatenate([p[0] for p in points]) if points else np.zeros(0)
    angs = [p[1] for p in points if p[1].size]
    angular_rows = np.vstack(angs) if angs else np.zeros((0, 1))
    runs = len(points)
    rows, notes = [], []
    worst = 0.0
    ok = True
    tested = 0

    def count(lo, hi, pred):
        sel = (radii >= lo) & (radii < hi)
        if pred is not None:
            sel &= pred(angular_rows)
        return int(sel.sum())

    for B in test_sets:
        for s in scalings:
            entry = {"set": B.label or f"[{B.lo}, {B.hi})", "s": float(s)}
            if min(B.lo, s * B.lo) < visible_radius:
                entry["skipped"] = "below the truncation-visible radius"
                notes.append(f"{entry['set']} at s={s}: skipped, below visible radius {visible_radius:.3g}")
                rows.append(entry)
                continue
            kb = count(B.lo, B.hi, B.angular)
            ks = count(s * B.lo, s * B.hi, B.angular)
            entry.update(count_B=kb, count_sB=ks)
            if kb == 0 or ks == 0:
                entry["skipped"] = "zero count"
                notes.append(f"{entry['set']} at s={s}: skipped, zero count")
                rows.append(entry)
                continue
            lb, hb = _garwood(kb, level)
            ls, hs = _garwood(ks, level)
            f = s**-alpha
            lo_b, hi_b = f * lb, f * hb
            overlap = ls <= hi_b and lo_b <= hs
            # distance between the interval centres in half-width units, for the record
            gap = abs(0.5 * (ls + hs) - 0.5 * (lo_b + hi_b)) / (0.5 * (hs - ls) + 0.5 * (hi_b - lo_b))
            worst = max(worst, gap)
            entry.update(ratio=ks / kb, expected_ratio=f, ci_sB=[ls, hs], ci_scaled_B=[lo_b, hi_b], overlap=overlap)
            ok &= overlap
            tested += 1
            rows.append(entry)
    passed = ok if tested else None
    return VerificationReport(
        name="empirical-homogeneity",
        statistic=worst,
        threshold=1.0,
        calibration=f"exact Poisson (Garwood) intervals at {1 - level:.0%}, overlap",
        passed=passed,
        sizes={"n": runs, "sets": len(test_sets), "tested": tested},
        seeds={"seed": seed},
        r=r,
        alpha=alpha,
        allowance=None,
        per_probe=rows,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# integrability condition per probe
# ---------------------------------------------------------------------------


def eps_condition_report(cone, law, spectral, probes, *, seed: int = 0) -> VerificationReport:
    """Integrability of ``E(1 - Re chi(t eps)) t^-(alpha+1)`` for every probe."""
    rows = []
    finite = True
    for chi in probes:
        res = eps_condition_check(cone, law, spectral, chi, rng=seed)
        finite &= res.finite
        rows.append(
            {
                "probe": repr(chi),
                "finite": res.finite,
                "value": res.value if res.finite else None,
                "small_rate": res.small_rate,
                "large_rate": res.large_rate,
            }
        )
    return VerificationReport(
        name="eps-condition",
        statistic=float(sum(not row["finite"] for row in rows)),
        threshold=0.0,
        calibration="fitted power rates at both ends of the radial integral",
        passed=finite,
        sizes={"probes": len(probes)},
        seeds={"seed": seed},
        alpha=law.alpha,
        per_probe=rows,
    )


__all__ = [
    "VerificationReport",
    "ECFEstimate",
    "character_matrix",
    "ecf_estimate",
    "two_sample_ecf_test",
    "mc_threshold",
    "scaled_character",
    "scale_samples",
    "combine_samples",
    "stability_test",
    "phi_homogeneity_test",
    "cms_oracle",
    "cms_constant",
    "lepage_vs_cms_test",
    "TestSet",
    "series_points",
    "empirical_homogeneity_test",
    "eps_condition_report",
    "MUTATIONS",
]
