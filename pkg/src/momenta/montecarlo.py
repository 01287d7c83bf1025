"""Monte Carlo harness: reproducible sampling, the bias-reduction figure
experiment, the normal-skewness CDF experiment, and regression estimation
of cumulant coefficients for arbitration of disputed printed values.

Determinism contract: all variates come from counter-based Philox streams
keyed by (seed, cell, chunk), samples are generated inverse-CDF, and
aggregation follows a fixed chunk order — identical configs give
bit-identical outputs regardless of execution interleaving.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import ndtri, stdtrit

from .asymptotics import (EdgeworthModel, Variant, bias_correction,
                          cumulant_coeffs, edgeworth_cdf, edgeworth_model)
from .dists import DiscreteDist
from .gateaux import FunctionalSpec
from .poly import MomentPoly

__all__ = [
    "SourceDist", "SOURCES", "ExperimentConfig",
    "draw_sample", "sample_central_moments", "eval_poly_arrays",
    "figure41_experiment", "skewness_cdf_experiment",
    "mc_cumulant_estimate", "MCRegressionResult",
]

CHUNK = 8192


# ---------------------------------------------------------------------------
# source distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceDist:
    """A sampling source with (possibly partial) population moments.

    ``max_moment`` is the largest finite moment order (None = all finite).
    Student's t with df = 2 has no finite variance; it is allowed only in
    the bias-visualization experiment and carries a caveat flag there.
    """

    name: str
    family: str                      # normal | t | logistic | laplace | discrete
    df: int | None = None
    discrete: DiscreteDist | None = None

    @property
    def max_moment(self) -> int | None:
        if self.family == "t":
            return self.df - 1
        return None

    def moment_values(self, max_order: int) -> dict[str, float]:
        """Population mean/central moments as floats (error if nonexistent)."""
        out: dict[str, float] = {}
        if self.family == "normal":
            out["mu"] = 0.0
            for r in range(2, max_order + 1):
                out[f"mu{r}"] = 0.0 if r % 2 else _double_factorial(r - 1)
        elif self.family == "t":
            if max_order >= self.df:
                raise ValueError(
                    f"t({self.df}) has no finite moment of order {max_order}")
            out["mu"] = 0.0
            for r in range(2, max_order + 1):
                if r % 2:
                    out[f"mu{r}"] = 0.0
                else:
                    # mu_r = df^{r/2} * prod_{j=1..r/2} (2j-1)/(df-2j)
                    v = float(self.df) ** (r // 2)
                    for j in range(1, r // 2 + 1):
                        v *= (2 * j - 1) / (self.df - 2 * j)
                    out[f"mu{r}"] = v
        elif self.family == "logistic":
            out["mu"] = 0.0
            for r in range(2, max_order + 1):
                if r % 2:
                    out[f"mu{r}"] = 0.0
                else:
                    # E X^r = 2 r! (1 - 2^{1-r}) zeta(r) for standard logistic
                    out[f"mu{r}"] = (2.0 * math.factorial(r)
                                     * (1.0 - 2.0 ** (1 - r)) * _zeta(r))
        elif self.family == "laplace":
            out["mu"] = 0.0
            for r in range(2, max_order + 1):
                out[f"mu{r}"] = 0.0 if r % 2 else float(math.factorial(r))
        elif self.family == "discrete":
            ex = self.discrete.moment_values(max_order, exact=False)
            out.update({k: float(v) for k, v in ex.items()})
        else:
            raise ValueError(f"unknown source family {self.family!r}")
        return out

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF transform of uniforms in (0, 1)."""
        if self.family == "normal":
            return ndtri(u)
        if self.family == "t":
            return stdtrit(self.df, u)
        if self.family == "logistic":
            return np.log(u / (1.0 - u))
        if self.family == "laplace":
            return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
        if self.family == "discrete":
            atoms = np.array([float(a) for a, _ in self.discrete.atoms])
            cum = np.cumsum([float(p) for _, p in self.discrete.atoms])
            return atoms[np.searchsorted(cum, u, side="right").clip(0, len(atoms) - 1)]
        raise ValueError(f"unknown source family {self.family!r}")


def _double_factorial(k: int) -> float:
    out = 1.0
    while k > 1:
        out *= k
        k -= 2
    return out


def _zeta(r: int) -> float:
    # direct sum plus the Euler-Maclaurin tail; used only for small r >= 2
    N = 4000
    head = sum(k ** -float(r) for k in range(1, N))
    # integral + half-term + first Bernoulli correction at k = N
    tail = (N ** (1.0 - r) / (r - 1.0) + 0.5 * N ** -float(r)
            + r / 12.0 * N ** -(r + 1.0))
    return head + tail


def parse_source(text: str) -> SourceDist:
    """'normal', 't5', 'logistic', 'laplace', or 'discrete:x1:p1,x2:p2,...'"""
    t = text.strip().lower()
    if t == "normal":
        return SourceDist("normal", "normal")
    if t.startswith("t") and t[1:].isdigit():
        return SourceDist(t, "t", df=int(t[1:]))
    if t in ("logistic", "laplace"):
        return SourceDist(t, t)
    if t.startswith("discrete:"):
        pairs = []
        for item in t[len("discrete:"):].split(","):
            x, p = item.split(":")
            pairs.append((Fraction(x), Fraction(p)))
        return SourceDist("discrete", "discrete",
                          discrete=DiscreteDist.from_pairs(pairs))
    raise ValueError(f"unknown source distribution {text!r}")


SOURCES = ("normal", "t2", "t5", "t10", "logistic", "laplace")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _stream(seed: int, *cell: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), *map(int, cell)])))


def draw_sample(dist: SourceDist, n: int, stream: np.random.Generator,
                reps: int = 1) -> np.ndarray:
    """reps x n matrix of i.i.d. draws (inverse-CDF on open-interval
    uniforms)."""
    u = stream.random((reps, n))
    # keep u strictly inside (0, 1) for the inverse CDFs
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - 1e-16)
    return dist.transform(u)


def sample_central_moments(x: np.ndarray, r_max: int) -> dict[str, np.ndarray]:
    """Plug-in moments mu, mu2..mu_{r_max} along the last axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("sample size must be >= 2")
    mean = x.mean(axis=-1)
    dev = x - mean[..., None]
    out: dict[str, np.ndarray] = {"mu": mean}
    pw = dev
    for r in range(2, r_max + 1):
        pw = pw * dev
        out[f"mu{r}"] = pw.mean(axis=-1)
    return out


def eval_poly_arrays(poly: MomentPoly, values: Mapping[str, np.ndarray]):
    """Evaluate a MomentPoly on numpy arrays (float arithmetic)."""
    out = 0.0
    for mono, coef in poly.terms.items():
        term = float(coef)
        for sym, exp in mono:
            base = values[sym.name]
            e = float(exp)
            term = term * (base ** e)
        out = out + term
    return out


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "figure41"           # figure41 | skewness_cdf | cumulant
    seed: int = 20260826
    replications: int = 10_000
    n_grid: tuple[int, ...] = tuple(range(10, 101, 10))
    sources: tuple[str, ...] = SOURCES
    functional: str = "nu3"
    variant: str = "factorial"
    order: int = 1
    grid: tuple[float, ...] = ()     # x grid for skewness_cdf

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        allowed = set(ExperimentConfig.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        for key in ("n_grid", "sources", "grid"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return ExperimentConfig(**raw)

    def to_json(self) -> str:
        d = dict(self.__dict__)
        for key in ("n_grid", "sources", "grid"):
            d[key] = list(d[key])
        return json.dumps(d, indent=2)


# ---------------------------------------------------------------------------
# Figure 4.1: usual vs bias-reduced standardized skewness
# ---------------------------------------------------------------------------


def _nu3_estimators(order: int = 1):
    """Vectorized (usual, corrected) estimator pair for nu3; the corrected
    variant applies the factorial-series correction of the given order."""
    from .functionals import get_entry
    spec = get_entry("nu3").spec
    bc = bias_correction(spec, order, Variant.FACTORIAL_SERIES)
    r_max = max((s.order for t in bc.terms for s in t.symbols()
                 if s.kind == "central"), default=2)

    def usual(vals):
        return vals["mu3"] / vals["mu2"] ** 1.5

    def corrected(vals, n):
        est = usual(vals)
        for i, poly in enumerate(bc.terms, start=1):
            est = est + eval_poly_arrays(poly, vals) \
                / _falling(float(n - 1), i)
        return est

    return usual, corrected, r_max


def _falling(m: float, i: int) -> float:
    out = 1.0
    for k in range(i):
        out *= m - k
    return out


def figure41_experiment(config: ExperimentConfig) -> list[dict]:
    """Bias table for the usual and bias-reduced nu3 estimators.

    Output rows use the CSV schema dist,n,estimator,bias,se,reps,seed plus
    a 'caveat' column flagging sources with nonexistent population skewness
    (t2: no finite variance, the reported mean is a non-convergent
    quantity reproduced for the figure only).
    """
    usual, corrected, r_max = _nu3_estimators(config.order)
    rows: list[dict] = []
    for d_i, src_name in enumerate(config.sources):
        src = parse_source(src_name)
        caveat = (src.max_moment is not None
                  and src.max_moment < 3)
        if caveat:
            truth = 0.0  # no population skewness; mean reported as-is
        else:
            pv = src.moment_values(3)
            # analytic truth: exactly 0 for every symmetric source
            truth = pv["mu3"] / pv["mu2"] ** 1.5
        for n_i, n in enumerate(config.n_grid):
            sums = np.zeros(4)  # sum/sumsq for usual, corrected
            done = 0
            c = 0
            while done < config.replications:
                reps = min(CHUNK, config.replications - done)
                x = draw_sample(src, n, _stream(config.seed, d_i, n_i, c),
                                reps)
                vals = sample_central_moments(x, r_max)
                u = usual(vals)
                v = corrected(vals, n)
                sums += [u.sum(), (u * u).sum(), v.sum(), (v * v).sum()]
                done += reps
                c += 1
            R = config.replications
            for est_name, s, s2 in (("usual", sums[0], sums[1]),
                                    ("corrected", sums[2], sums[3])):
                mean = s / R
                var = max(s2 / R - mean ** 2, 0.0)
                rows.append({
                    "dist": src_name, "n": n, "estimator": est_name,
                    "bias": mean - truth, "se": math.sqrt(var / R),
                    "reps": R, "seed": config.seed,
                    "caveat": "infinite-moment" if caveat else "",
                })
    return rows


# ---------------------------------------------------------------------------
# skewness CDF experiment (normal sample)
# ---------------------------------------------------------------------------

def skewness_cdf_experiment(n: int, reps: int, grid: Sequence[float],
                            seed: int = 20260826) -> list[dict]:
    """Empirical CDF of Y_n = (n/a21)^{1/2} nu3(Fhat) under normal F vs
    the O(n^-2) Edgeworth expansion Phi(x) - phi(x) h2(x)/n."""
    from .functionals import get_entry
    spec = get_entry("nu3").spec
    normal = SourceDist("normal", "normal")
    model = edgeworth_model(spec, normal.moment_values(12), order=2)
    scale = math.sqrt(n / model.a21)

    grid = np.array(sorted(float(x) for x in grid))
    counts = np.zeros(len(grid))
    src = normal
    done = 0
    c = 0
    while done < reps:
        r = min(CHUNK, reps - done)
        x = draw_sample(src, n, _stream(seed, 0, 0, c), r)
        vals = sample_central_moments(x, 3)
        y = scale * vals["mu3"] / vals["mu2"] ** 1.5
        counts += (y[:, None] <= grid[None, :]).sum(axis=0)
        done += r
        c += 1
    emp = counts / reps
    out = []
    for x, e in zip(grid, emp):
        th = float(edgeworth_cdf(model, float(x), n))
        out.append({"x": float(x), "empirical": float(e),
                    "edgeworth": th, "deviation": float(e - th),
                    "se": math.sqrt(max(e * (1 - e), 1e-12) / reps)})
    return out


# ---------------------------------------------------------------------------
# Monte Carlo estimation of cumulant coefficients (arbitration oracle)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCRegressionResult:
    a11: float
    a11_se: float
    a12: float
    a12_se: float
    a21: float
    a21_se: float
    a22: float
    a22_se: float
    a43: float = 0.0
    a43_se: float = 0.0
    per_n: tuple = ()


def mc_cumulant_estimate(estimator: Callable[[Mapping], np.ndarray],
                         r_max: int, truth: float, dist: SourceDist,
                         n_grid: Sequence[int], reps: int,
                         seed: int = 20260826) -> MCRegressionResult:
    """Estimate a11, a12 (bias regression) and a21, a22 (variance
    regression) for the plug-in statistic computed by ``estimator`` from
    sample moments up to order ``r_max``.

    Fits bias(n) = a11/n + a12/n^2 and n var(n) = a21 + a22/n by weighted
    least squares across the n grid, with per-point variances from the MC
    moments of the statistic.
    """
    if len(n_grid) < 4:
        raise ValueError("n_grid must span at least 4 sizes")
    groups = 32  # batch-means groups for the fourth-cumulant SE
    stats = []
    for n_i, n in enumerate(sorted(n_grid)):
        s1 = s2 = s3 = s4 = 0.0
        gsums = np.zeros((groups, 5))  # per-group s1..s4 and count
        done = 0
        c = 0
        while done < reps:
            r = min(CHUNK, reps - done)
            x = draw_sample(dist, n, _stream(seed, 1, n_i, c), r)
            t = estimator(sample_central_moments(x, r_max))
            t2 = t * t
            parts = (t.sum(), t2.sum(), (t2 * t).sum(), (t2 * t2).sum())
            s1 += parts[0]
            s2 += parts[1]
            s3 += parts[2]
            s4 += parts[3]
            g = c % groups
            gsums[g, :4] += parts
            gsums[g, 4] += r
            done += r
            c += 1

        def _k4(sa, sb, sc, sd, m):
            m1 = sa / m
            m2c = sb / m - m1 ** 2
            m4c = (sd / m - 4 * m1 * sc / m + 6 * m1 ** 2 * sb / m
                   - 3 * m1 ** 4)
            return m2c, m4c - 3 * m2c ** 2

        m1 = s1 / reps
        m2c, k4 = _k4(s1, s2, s3, s4, reps)
        m4c = k4 + 3 * m2c ** 2
        var_mean = m2c / reps
        var_var = max(m4c - m2c ** 2, 1e-300) / reps
        gk4 = np.array([_k4(*gs[:4], gs[4])[1]
                        for gs in gsums if gs[4] > 0])
        k4_var = max(gk4.var(ddof=1) / len(gk4), 1e-300)
        stats.append({"n": n, "bias": m1 - truth, "bias_var": var_mean,
                      "var": m2c, "var_var": var_var,
                      "k4": k4, "k4_var": k4_var})

    def wls(design, y, w):
        X = np.asarray(design, dtype=float)
        yv = np.asarray(y, dtype=float)
        W = np.diag(np.asarray(w, dtype=float))
        XtW = X.T @ W
        cov = np.linalg.inv(XtW @ X)
        beta = cov @ (XtW @ yv)
        return beta, np.sqrt(np.diag(cov))

    # Each series is fitted with as many 1/n terms as the grid supports
    # (up to four): the higher coefficients of these expansions are large,
    # and a short design biases the reported leading terms by far more
    # than the Monte Carlo noise at these replication counts.
    ns = np.array([s["n"] for s in stats], dtype=float)
    terms = min(len(ns), 4)
    bias_beta, bias_se = wls(
        np.column_stack([ns ** -(k + 1) for k in range(terms)]),
        [s["bias"] for s in stats],
        [1.0 / s["bias_var"] for s in stats])
    # n var(n) = a21 + a22/n + ...; var of (n var_hat) = n^2 var_var
    var_beta, var_se = wls(
        np.column_stack([ns ** -k for k in range(terms)]),
        [s["n"] * s["var"] for s in stats],
        [1.0 / (s["n"] ** 2 * s["var_var"]) for s in stats])
    # n^3 kappa4(n) = a43 + a44/n + ...
    k4_beta, k4_se = wls(
        np.column_stack([ns ** -k for k in range(terms)]),
        [s["n"] ** 3 * s["k4"] for s in stats],
        [1.0 / (s["n"] ** 6 * s["k4_var"]) for s in stats])
    return MCRegressionResult(
        a11=float(bias_beta[0]), a11_se=float(bias_se[0]),
        a12=float(bias_beta[1]), a12_se=float(bias_se[1]),
        a21=float(var_beta[0]), a21_se=float(var_se[0]),
        a22=float(var_beta[1]), a22_se=float(var_se[1]),
        a43=float(k4_beta[0]), a43_se=float(k4_se[0]),
        per_n=tuple(tuple(s.items()) for s in stats))


def plugin_estimator(spec: FunctionalSpec):
    """(vectorized estimator, r_max) for a FunctionalSpec whose value_poly
    is evaluable at plug-in moments."""
    vp = spec.value_poly()
    r_max = max((s.order for s in vp.symbols() if s.kind == "central"),
                default=2)

    def est(vals: Mapping[str, np.ndarray]) -> np.ndarray:
        return eval_poly_arrays(vp, vals)

    return est, max(r_max, 2)
