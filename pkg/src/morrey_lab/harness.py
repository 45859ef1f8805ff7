"""Randomized experiments: empirical constants for the trace estimates.

Every experiment is a pure function of (config, seed): per-trial generators
draw from numpy Generators seeded with the pair (seed, trial index), so runs
are reproducible byte for byte and trials may execute in any order or in
parallel.  Ratios of the left and right sides of each estimate regime are
recorded together with a one-step dilation replay, whose residual checks the
exact dyadic scale covariance of both sides.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .dyadic import DyadicCube, LevelWindow, unit_cube
from .fields import (
    AtomicMeasure,
    GridFunction,
    VectorFunction,
    atoms_measure,
    hyperplane_measure,
    indicator_function,
    lebesgue_cell_measure,
    power_profile,
)
from .hedberg import ExponentSet, exponents
from .norms import (
    CubeSet,
    lp_norm_on_cube,
    measure_growth_norm,
    morrey_norm,
    product_morrey_norm,
    radon_morrey_norm,
)
from .operators import (
    OperatorField,
    hl_maximal_dyadic,
    integral_dyadic,
    maximal_dyadic,
)
from .sparse import subadditivity_check

__all__ = [
    "INPUT_FAMILIES",
    "MEASURE_FAMILIES",
    "ExperimentConfig",
    "ConstantReport",
    "sample_exponents",
    "sample_function",
    "sample_vector",
    "sample_measure",
    "instance_hash",
    "ratio_field",
    "trace_sides",
    "run_trace_experiment",
    "brute_force_oracle",
    "oracle_suite",
    "embedding_suite",
    "doob_maximal_suite",
    "subadditivity_suite",
    "out_of_domain_probe",
    "emit_report",
]

INPUT_FAMILIES = ("indicator-unions", "log-normal-cells", "power-profile")
MEASURE_FAMILIES = ("cell-lebesgue", "hyperplane", "random-atoms")

_P_LE_1_REGIMES = ("thm1.2", "thm2.2")


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of one randomized suite; every value participates in the hash."""

    seed: int = 0
    n: int = 1
    m: int = 1
    level: int = 6
    trials: int = 50
    coarse_levels: int = 2
    input_family: str = "log-normal-cells"
    measure_family: str = "random-atoms"
    cube_mode: str = "dyadic-only"
    pj_range: tuple[float, float] = (1.5, 3.5)
    p0_stretch: tuple[float, float] = (1.0, 1.4)
    alpha_frac: tuple[float, float] = (0.4, 0.8)
    beta_frac: tuple[float, float] = (0.4, 0.9)

    def validate_for(self, regime: str) -> None:
        if self.n < 1 or self.m < 1 or self.level < 1 or self.trials < 1:
            raise ValueError("n, m, level and trials must be positive")
        if self.coarse_levels < 1:
            raise ValueError("need at least one coarse level below the root")
        if self.input_family not in INPUT_FAMILIES:
            raise ValueError(f"unknown input family {self.input_family!r}")
        if self.measure_family not in MEASURE_FAMILIES:
            raise ValueError(f"unknown measure family {self.measure_family!r}")
        if regime in _P_LE_1_REGIMES and self.m < 2:
            raise ValueError(
                f"regime {regime} needs p <= 1, impossible with m=1 since "
                "every component exponent exceeds 1"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("pj_range", "p0_stretch", "alpha_frac", "beta_frac"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        for key in ("pj_range", "p0_stretch", "alpha_frac", "beta_frac"):
            if key in kwargs:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        return cls(**kwargs)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# Instance samplers.
# ---------------------------------------------------------------------------

def sample_exponents(rng: np.random.Generator, cfg: ExperimentConfig,
                     regime: str) -> ExponentSet:
    """Exponent tuple valid by construction for the regime, then revalidated."""
    n, m = cfg.n, cfg.m
    lo, hi = cfg.pj_range
    if regime in _P_LE_1_REGIMES:
        # every p_j <= m forces 1/p = sum 1/p_j >= 1
        plo = min(max(lo, 1.02), 0.6 * m + 0.4)
        phi = min(hi, float(m))
        if not plo < phi:
            plo, phi = 1.02, float(m)
        pvec = rng.uniform(plo, phi, m)
    elif regime == "thm1.1":
        # every p_j > m forces p > 1
        plo = max(lo, 1.02 * m)
        phi = max(hi, 1.6 * plo)
        pvec = rng.uniform(plo, phi, m)
    else:
        plo = max(lo, 1.02)
        pvec = rng.uniform(plo, max(hi, plo + 0.5), m)
    p = 1.0 / float(np.sum(1.0 / pvec))
    p0 = p * rng.uniform(*cfg.p0_stretch)
    amax = min(n / p0, float(m * n))
    alpha = float(np.clip(rng.uniform(*cfg.alpha_frac), 1e-3, 0.99)) * amax
    if regime == "thm1.1":
        beta = float(np.clip(rng.uniform(*cfg.beta_frac), 1e-3, 0.95)) * alpha
    elif regime == "thm1.2":
        frac = float(np.clip(rng.uniform(*cfg.beta_frac), 1e-3, 1.0))
        beta = alpha if rng.uniform() < 0.25 else frac * alpha
    else:
        beta = None
    return exponents(n, m, tuple(float(v) for v in pvec), p0, alpha, beta, regime)


def _random_support(rng: np.random.Generator, n: int, level: int):
    cubes = []
    for _ in range(int(rng.integers(1, 4))):
        k = int(rng.integers(0, min(3, level + 1)))
        idx = tuple(int(rng.integers(0, 1 << k)) for _ in range(n))
        cubes.append(DyadicCube(k, idx))
    return cubes


def sample_function(rng: np.random.Generator, cfg: ExperimentConfig) -> GridFunction:
    """One nonnegative input from the configured family, nontrivial by design."""
    root = unit_cube(cfg.n)
    K = cfg.level
    if cfg.input_family == "power-profile":
        gamma = rng.uniform(0.2, 0.8) * min(cfg.n, 1.5)
        corner = rng.integers(0, 1 << K, size=cfg.n) * 2.0**-K
        return power_profile(root, K, float(gamma), corner)
    support = indicator_function(root, K, _random_support(rng, cfg.n, K))
    if cfg.input_family == "indicator-unions":
        return support
    vals = np.exp(rng.normal(size=support.values.shape)) * (support.values > 0)
    return GridFunction(root, K, vals)


def sample_vector(rng: np.random.Generator, cfg: ExperimentConfig) -> VectorFunction:
    return VectorFunction(tuple(sample_function(rng, cfg) for _ in range(cfg.m)))


def sample_measure(rng: np.random.Generator, cfg: ExperimentConfig) -> AtomicMeasure:
    root = unit_cube(cfg.n)
    K = cfg.level
    if cfg.measure_family == "cell-lebesgue":
        return lebesgue_cell_measure(root, K)
    if cfg.measure_family == "hyperplane":
        axis = int(rng.integers(0, cfg.n))
        cell = int(rng.integers(0, 1 << K))
        return hyperplane_measure(root, K, axis, cell)
    count = int(rng.integers(4, 33))
    cells = rng.integers(0, 1 << K, size=(count, cfg.n))
    masses = np.exp(rng.normal(size=count))
    return atoms_measure(root, K, cells, masses)


def instance_hash(fvec: VectorFunction, mu: AtomicMeasure | None = None,
                  extra: str = "") -> str:
    """Content hash of one sampled instance (inputs, measure, exponents)."""
    h = hashlib.sha256()
    h.update(extra.encode())
    for f in fvec:
        h.update(repr(f.root.to_tuple()).encode())
        h.update(str(f.level).encode())
        h.update(f.values.tobytes())
    if mu is not None:
        h.update(str(mu.resolution).encode())
        h.update(mu.points.tobytes())
        h.update(mu.masses.tobytes())
    return h.hexdigest()


def ratio_field(numer: OperatorField, denom: OperatorField) -> np.ndarray:
    """Cellwise numer/denom; a positive numerator over a vanishing denominator
    is a contract breach and fails loudly instead of returning infinities."""
    bad = (denom.values == 0.0) & (numer.values > 0.0)
    if bad.any():
        raise RuntimeError(
            "dominating field vanishes where the dominated one is positive"
        )
    out = np.zeros_like(numer.values)
    ok = denom.values > 0.0
    out[ok] = numer.values[ok] / denom.values[ok]
    return out


# ---------------------------------------------------------------------------
# Trace-inequality experiment.
# ---------------------------------------------------------------------------

def trace_sides(exps: ExponentSet, fvec: VectorFunction, mu: AtomicMeasure,
                window: LevelWindow, cube_mode: str) -> tuple[float, float]:
    """(LHS, RHS) of the regime's estimate on the given instance.

    LHS: the Radon-Morrey (q, q0) norm of the regime's operator output.
    RHS: growth norm of the measure at index n - beta p, to the power 1/q,
    times the product Morrey norm of the inputs.  For the maximal regimes
    beta = alpha and theta = 1, so (q, q0) = (p, p0).
    """
    cubes = CubeSet(window, cube_mode)
    fnorm = product_morrey_norm(fvec, exps.pvec, exps.p0, cubes).value
    if exps.regime == "thm2.1":
        out = maximal_dyadic(fvec, exps.alpha, window)
    else:
        out = integral_dyadic(fvec, exps.alpha, window)
    lhs = radon_morrey_norm(out, mu, exps.q, exps.q0, cubes).value
    growth = measure_growth_norm(mu, exps.growth_index, cubes).value
    rhs = growth ** (1.0 / exps.q) * fnorm
    return lhs, rhs


def _trace_trial(args) -> dict:
    cfg, regime, trial = args
    rng = np.random.default_rng([cfg.seed, trial])
    exps = sample_exponents(rng, cfg, regime)
    fvec = sample_vector(rng, cfg)
    mu = sample_measure(rng, cfg)
    root = fvec.root
    window = LevelWindow(root.level - cfg.coarse_levels, cfg.level, root)
    record = {
        "trial": trial,
        "n": exps.n,
        "m": exps.m,
        "pvec": list(exps.pvec),
        "p": exps.p,
        "p0": exps.p0,
        "alpha": exps.alpha,
        "beta": exps.beta,
        "theta": exps.theta,
        "q": exps.q,
        "q0": exps.q0,
        "input_hash": instance_hash(fvec, mu, repr(exps)),
    }
    lhs, rhs = trace_sides(exps, fvec, mu, window, cfg.cube_mode)
    if rhs == 0.0 and lhs == 0.0:
        record.update(skipped=True)
        return record
    if rhs == 0.0:
        raise RuntimeError(f"trial {trial}: zero right side with positive left")
    ratio = lhs / rhs
    lhs2, rhs2 = trace_sides(
        exps, fvec.dilate(-1), mu.dilate(-1), window.dilate(-1), cfg.cube_mode
    )
    ratio2 = lhs2 / rhs2
    record.update(
        skipped=False,
        lhs=lhs,
        rhs=rhs,
        ratio=ratio,
        lhs_dilated=lhs2,
        rhs_dilated=rhs2,
        ratio_dilated=ratio2,
        dilation_residual=abs(ratio2 / ratio - 1.0),
    )
    return record


@dataclass(frozen=True)
class ConstantReport:
    """Per-trial ratios and the summary gates for one regime suite."""

    kind: str
    regime: str
    config: dict
    config_hash: str
    records: tuple[dict, ...]
    summary: dict

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "regime": self.regime,
            "config": self.config,
            "config_hash": self.config_hash,
            "trials": list(self.records),
            "summary": self.summary,
        }


def _summarize(records) -> dict:
    ratios = [r["ratio"] for r in records if not r["skipped"]]
    residuals = [r["dilation_residual"] for r in records if not r["skipped"]]
    skipped = sum(1 for r in records if r["skipped"])
    if ratios:
        sup = max(ratios)
        med = statistics.median(ratios)
        stable = sup <= 10.0 * med
        witness = max(
            (r for r in records if not r["skipped"]), key=lambda r: r["ratio"]
        )["input_hash"]
    else:
        sup = med = 0.0
        stable = True
        witness = ""
    return {
        "trials": len(records),
        "skipped": skipped,
        "sup_ratio": sup,
        "median_ratio": med,
        "stable": stable,
        "stability_gate": "sup <= 10 x median",
        "max_dilation_residual": max(residuals) if residuals else 0.0,
        "sup_witness": witness,
    }


def run_trace_experiment(cfg: ExperimentConfig, regime: str,
                         jobs: int = 1) -> ConstantReport:
    """Run the regime suite; results are independent of scheduling."""
    cfg.validate_for(regime)
    args = [(cfg, regime, t) for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trace_trial, args))
    else:
        records = [_trace_trial(a) for a in args]
    return ConstantReport(
        kind="trace-experiment",
        regime=regime,
        config=cfg.to_dict(),
        config_hash=cfg.hash(),
        records=tuple(records),
        summary=_summarize(records),
    )


# ---------------------------------------------------------------------------
# Brute-force oracle for the dyadic operators.
# ---------------------------------------------------------------------------

_ORACLE_MAX_CELLS = 256
_ORACLE_REL_FLOOR = 1e-18


def brute_force_oracle(fvec: VectorFunction, alpha: float, window: LevelWindow,
                       op: str = "integral") -> OperatorField:
    """Direct per-cell evaluation of the defining cube sums.

    No shared sweeps: each cell loops over its own containment chain, with
    the coarse and fine level loops run explicitly until the next term drops
    below 1e-18 of the running value.  Guarded to small instances.
    """
    if op not in ("integral", "maximal"):
        raise ValueError(f"unknown operator kind {op!r}")
    m, n = fvec.m, fvec.dim
    if m > 2 or fvec.components[0].values.size > _ORACLE_MAX_CELLS:
        raise ValueError("instance too large for the brute-force oracle")
    if op == "integral" and not (0.0 < alpha < m * n):
        raise ValueError("integral oracle needs alpha in (0, mn)")
    if op == "maximal" and not (0.0 <= alpha < m * n):
        raise ValueError("maximal oracle needs alpha in [0, mn)")
    root = fvec.root
    K = fvec.level
    c = m * n - alpha
    l1 = 1.0
    for f in fvec:
        l1 *= f.l1_norm()
    shape = fvec.components[0].values.shape
    out = np.zeros(shape)
    base = [root.index[ax] << (K - root.level) for ax in range(n)]
    for idx in np.ndindex(shape):
        cell = tuple(base[ax] + idx[ax] for ax in range(n))
        x = tuple((ci + 0.5) * 2.0**-K for ci in cell)
        mids = []
        for k in range(root.level, K + 1):
            cube = DyadicCube(k, tuple(ci >> (K - k) for ci in cell))
            prod = 1.0
            for f in fvec:
                prod *= f.integrate(cube, absolute=True)
            mids.append(2.0 ** (k * c) * prod)
        point = 1.0
        for f in fvec:
            point *= abs(f.value_at(x))
        if op == "integral":
            total = math.fsum(mids)
            k = root.level - 1
            while True:
                term = 2.0 ** (k * c) * l1
                if total > 0.0 and term < _ORACLE_REL_FLOOR * total:
                    break
                total += term
                if term == 0.0:
                    break
                k -= 1
            k = K + 1
            while point > 0.0:
                term = 2.0 ** (k * c) * (point * 2.0 ** (-k * n * m))
                if term < _ORACLE_REL_FLOOR * total:
                    break
                total += term
                k += 1
            out[idx] = total
        else:
            best = max(mids)
            k = root.level - 1
            while True:
                term = 2.0 ** (k * c) * l1
                if term < _ORACLE_REL_FLOOR * max(best, 1e-300) or term == 0.0:
                    break
                best = max(best, term)
                k -= 1
            # the sub-cell terms 2^(-k alpha) point never increase with k,
            # so the first one decides
            best = max(best, 2.0 ** ((K + 1) * c) * point * 2.0 ** (-(K + 1) * n * m))
            out[idx] = best
    return OperatorField(root, K, out)


def oracle_suite(seed: int = 0, instances: int = 100) -> dict:
    """Optimized operators vs the brute-force oracle on small random instances."""
    failures = []
    max_rel = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        m = 1 + i % 2
        K = int(rng.integers(1, 5))
        cfg = ExperimentConfig(
            seed=seed, n=1, m=m, level=K,
            input_family=INPUT_FAMILIES[i % len(INPUT_FAMILIES)],
        )
        fvec = sample_vector(rng, cfg)
        window = LevelWindow(-int(rng.integers(1, 4)), K, fvec.root)
        alpha_i = float(rng.uniform(0.1, 0.9)) * m
        alpha_m = float(rng.uniform(0.0, 0.9)) * m
        for op, alpha in (("integral", alpha_i), ("maximal", alpha_m)):
            fast = (integral_dyadic if op == "integral" else maximal_dyadic)(
                fvec, alpha, window
            )
            slow = brute_force_oracle(fvec, alpha, window, op)
            scale = np.maximum(np.abs(slow.values), 1e-300)
            rel = float(np.max(np.abs(fast.values - slow.values) / scale))
            max_rel = max(max_rel, rel)
            if rel > 1e-12:
                failures.append({"instance": i, "op": op, "rel_err": rel})
    return {
        "kind": "oracle-suite",
        "instances": instances,
        "checks": 2 * instances,
        "failures": failures,
        "max_rel_err": max_rel,
        "ok": not failures,
    }


# ---------------------------------------------------------------------------
# Property suites.
# ---------------------------------------------------------------------------

def embedding_suite(cfg: ExperimentConfig) -> dict:
    """Morrey norms must not increase as the integrability index drops."""
    violations = []
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        f = sample_function(rng, cfg)
        p0 = float(rng.uniform(0.7, 4.0))
        p1 = p0 * float(rng.uniform(0.25, 1.0))
        p2 = p1 * float(rng.uniform(0.25, 1.0))
        window = LevelWindow(-cfg.coarse_levels, cfg.level, f.root)
        cubes = CubeSet(window, cfg.cube_mode)
        n1 = morrey_norm(f, p1, p0, cubes).value
        n2 = morrey_norm(f, p2, p0, cubes).value
        gap = (n2 - n1) / max(n1, 1e-300)
        worst = max(worst, gap)
        if n2 > n1 * (1.0 + 1e-12):
            violations.append({"trial": t, "p0": p0, "p1": p1, "p2": p2,
                               "gap": gap})
    return {
        "kind": "embedding-suite",
        "trials": cfg.trials,
        "violations": violations,
        "max_rel_gap": worst,
        "ok": not violations,
    }


def doob_maximal_suite(cfg: ExperimentConfig) -> dict:
    """L^p bound of the basic dyadic maximal function with constant p/(p-1)."""
    worst = 0.0
    failures = []
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        f = sample_function(rng, cfg)
        p = float(rng.uniform(1.0 + 1e-6, 4.0))
        window = LevelWindow(-cfg.coarse_levels, cfg.level, f.root)
        mf = hl_maximal_dyadic(f, window)
        lhs = lp_norm_on_cube(mf, p, f.root)
        rhs = p / (p - 1.0) * lp_norm_on_cube(f, p, f.root)
        quotient = lhs / max(rhs, 1e-300)
        worst = max(worst, quotient)
        if lhs > rhs * (1.0 + 1e-9):
            failures.append({"trial": t, "p": p, "quotient": quotient})
    return {
        "kind": "doob-suite",
        "trials": cfg.trials,
        "failures": failures,
        "worst_quotient": worst,
        "ok": not failures,
    }


def subadditivity_suite(cfg: ExperimentConfig) -> dict:
    """(sum g_i)^p <= sum g_i^p across random nonnegative field collections."""
    worst = math.inf
    failures = []
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        count = int(rng.integers(2, 5))
        fields = [
            OperatorField(unit_cube(cfg.n), cfg.level,
                          sample_function(rng, cfg).values)
            for _ in range(count)
        ]
        p = float(rng.uniform(0.05, 1.0))
        res = subadditivity_check(fields, p)
        worst = min(worst, res.worst_margin)
        if not res.ok:
            failures.append({"trial": t, "p": p, "margin": res.worst_margin})
    return {
        "kind": "subadditivity-suite",
        "trials": cfg.trials,
        "failures": failures,
        "worst_margin": worst,
        "ok": not failures,
    }


def out_of_domain_probe(cfg: ExperimentConfig, trials: int | None = None) -> dict:
    """Ratio growth when beta exceeds alpha (outside the thm1.1 hypotheses).

    Purely observational: estimates with unspecified constants cannot be
    refuted numerically, so this reports ratios and never claims a
    counterexample.
    """
    trials = cfg.trials if trials is None else trials
    ratios = []
    for t in range(trials):
        rng = np.random.default_rng([cfg.seed, t])
        base = sample_exponents(rng, cfg, "thm1.1")
        beta = base.alpha + float(rng.uniform(0.05, 0.9)) * (
            base.n / base.p0 - base.alpha
        ) * 0.9
        theta = (base.n - beta * base.p0) / (base.n - base.alpha * base.p0)
        probe = ExponentSet(
            n=base.n, m=base.m, pvec=base.pvec, p=base.p, p0=base.p0,
            alpha=base.alpha, beta=beta, theta=theta, q=theta * base.p,
            q0=theta * base.p0, regime="thm1.1",
        )
        if probe.q <= 0 or probe.q > probe.q0 or probe.growth_index <= 0:
            continue
        fvec = sample_vector(rng, cfg)
        mu = sample_measure(rng, cfg)
        window = LevelWindow(-cfg.coarse_levels, cfg.level, fvec.root)
        lhs, rhs = trace_sides(probe, fvec, mu, window, cfg.cube_mode)
        if rhs > 0.0:
            ratios.append(lhs / rhs)
    return {
        "kind": "out-of-domain-probe",
        "trials": trials,
        "evaluated": len(ratios),
        "sup_ratio": max(ratios) if ratios else 0.0,
        "median_ratio": statistics.median(ratios) if ratios else 0.0,
    }


# ---------------------------------------------------------------------------
# Report emission.
# ---------------------------------------------------------------------------

_CSV_COLUMNS = (
    "trial", "n", "m", "p", "p0", "alpha", "beta", "theta", "q", "q0",
    "lhs", "rhs", "ratio", "lhs_dilated", "rhs_dilated", "ratio_dilated",
    "dilation_residual", "input_hash",
)


def render_report(report: ConstantReport, fmt: str) -> str:
    """Deterministic serialization; same report, same bytes."""
    if fmt == "json":
        return json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for rec in report.records:
            if rec["skipped"]:
                continue
            writer.writerow([repr(rec[c]) if isinstance(rec[c], float) else rec[c]
                             for c in _CSV_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: ConstantReport, fmt: str | None = None,
                path=None) -> str:
    """Write (or return) the serialized report; format inferred from the path."""
    if fmt is None:
        if path is None:
            fmt = "json"
        else:
            suffix = str(path).rsplit(".", 1)[-1].lower()
            fmt = suffix if suffix in ("json", "csv") else "json"
    text = render_report(report, fmt)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
