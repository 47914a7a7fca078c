"""Acceptance criteria, one test each.

Every test prints a single ``PASS`` or ``FAIL`` line with its measured figure
and wall time, straight to the terminal so it shows without ``-s``.
"""
import math
import time

import numpy as np
import pytest

from scalemaxent import catalog, extremes, nefqvf
from scalemaxent.extremes import CumulativeModel, Mode, density_from_cumulative, entropy_on_T, run_experiment
from scalemaxent.maxent import CumulativeDerivative, Uniform, quantile_grid, relative_entropy, solution_invariance, synth_density
from scalemaxent.scale import (
    IDENTITY,
    LinearLog,
    LinearLogLinear,
    LogLinear,
    LogLinearLog,
    PureLog,
    ScaleParams,
    ScaleSpec,
    T_of_w,
    eval_T,
    eval_w,
    eval_w_prime,
    finite_transform,
)

INF = math.inf


@pytest.fixture
def verdict(capsys):
    """Print one line per criterion, then assert."""

    def report(number, title, ok, detail, elapsed, limit=None):
        if limit is not None:
            ok = ok and elapsed < limit
            detail = f"{detail}; {elapsed:.2f} s (limit {limit:g} s)"
        else:
            detail = f"{detail}; {elapsed:.2f} s"
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}")
        assert ok, f"criterion {number} ({title}): {detail}"

    return report


def test_criterion_01_catalog_equivalence(verdict):
    t = time.perf_counter()
    rows = [catalog.synth_equivalence(name) for name in catalog.family_names()]
    elapsed = time.perf_counter() - t
    worst = max(rows, key=lambda r: r["linf"])
    ok = len(rows) == 20 and worst["linf"] < 1e-8
    verdict(1, "catalog equivalence", ok, f"{len(rows)} rows, worst linf {worst['linf']:.2e} ({worst['family']})", elapsed, 60)


def test_criterion_02_hierarchy_limit_chain(verdict):
    t = time.perf_counter()
    gaps = []
    # beta -> 0 on one level against beta = 1 on the level below it
    for levels, support, lam in [((), (0.0, INF), 1.0), ((PureLog(),), (1.0, INF), 3.0)]:
        a = synth_density(ScaleSpec(levels), ScaleParams(0.0, 1.0, 1e-6), IDENTITY, Uniform, support, lam)
        b = synth_density(ScaleSpec(levels + (PureLog(),)), ScaleParams(0.0, 1.0, 1.0), IDENTITY, Uniform, support, lam)
        y = np.union1d(quantile_grid(a, 512, 1e-9), quantile_grid(b, 512, 1e-9))
        gaps.append(float(np.max(np.abs(a.pdf(y) - b.pdf(y)))))
    elapsed = time.perf_counter() - t
    verdict(2, "hierarchy limit chain", max(gaps) < 1e-4, "linf gaps " + ", ".join(f"{g:.2e}" for g in gaps), elapsed, 5)


def _random_spec(rng):
    pool = [
        lambda: (),
        lambda: (PureLog(),),
        lambda: (PureLog(), PureLog()),
        lambda: (LinearLog(rng.uniform(0.1, 3.0)),),
        lambda: (LogLinear(rng.uniform(0.0, 2.0)),),
        lambda: (LinearLogLinear(rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.2, 2.0)),),
        lambda: (LogLinearLog(0.0, rng.uniform(1.0, 3.0), rng.uniform(-2.0, 2.0)),),
        lambda: (LinearLog(rng.uniform(0.1, 2.0)), PureLog()),
    ]
    return ScaleSpec(pool[rng.integers(len(pool))]())


def _random_point(spec, rng):
    lo, hi = spec.domain()
    if math.isfinite(lo) and math.isfinite(hi):
        return lo + (hi - lo) * rng.uniform(0.05, 0.95)
    if math.isfinite(lo):
        return lo + rng.uniform(0.1, 5.0)
    return rng.uniform(-5.0, 5.0)


def test_criterion_03_invariance_ode(verdict):
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    ode = 0.0
    for _ in range(1000):
        s = _random_spec(rng)
        p = ScaleParams(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1.5, 1.5))
        f = _random_point(s, rng)
        # dT/dw = alpha + beta T, with dT/dw from a central difference in f
        h = 1e-6 * max(1.0, abs(f))
        dTdf = (eval_T(s, p, f + h) - eval_T(s, p, f - h)) / (2 * h)
        lhs = dTdf / eval_w_prime(s, f)
        rhs = p.alpha + p.beta * eval_T(s, p, f)
        ode = max(ode, abs(lhs - rhs) / (1 + abs(rhs)))
        # the same identity on T(w) directly
        w = eval_w(s, f)
        hw = 1e-6 * max(1.0, abs(w))
        dw = (T_of_w(w + hw, p) - T_of_w(w - hw, p)) / (2 * hw)
        ode = max(ode, abs(dw - rhs) / (1 + abs(rhs)))
    comp = 0.0
    for _ in range(1000):
        alpha, beta = rng.uniform(-2, 2), rng.uniform(-1.5, 1.5)
        e1, e2, T = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3)
        lhs = finite_transform(alpha, beta, e1, finite_transform(alpha, beta, e2, T))
        comp = max(comp, abs(lhs - finite_transform(alpha, beta, e1 + e2, T)))
    elapsed = time.perf_counter() - t
    ok = ode < 1e-6 and comp < 1e-12
    verdict(3, "invariance ODE", ok, f"ODE residual {ode:.2e}, composition residual {comp:.2e}", elapsed)


def test_criterion_04_solution_invariance(verdict):
    t = time.perf_counter()
    log_square = solution_invariance(ScaleSpec((PureLog(),)), ScaleParams(0.0, 1.0, 0.0), lambda f: f * f, IDENTITY, Uniform, (1.0, INF), 2.0)
    shift = solution_invariance(ScaleSpec(()), ScaleParams(0.0, 1.0, 0.0), lambda f: f + 5.0, IDENTITY, Uniform, (0.0, INF), 2.0)
    elapsed = time.perf_counter() - t
    ok = log_square < 1e-10 and shift < 1e-10
    verdict(4, "solution invariance", ok, f"log/square {log_square:.2e}, linear/shift {shift:.2e}", elapsed)


def test_criterion_05_extreme_value_convergence(verdict):
    t = time.perf_counter()
    gum = run_experiment("exponential", 1000, 5000, Mode.MAX, seed=0)
    fre = run_experiment("pareto_i", 1000, 5000, Mode.MAX, seed=0)
    elapsed = time.perf_counter() - t
    ok = gum["target_family"] == "gumbel" and gum["ks"] < 0.03 and fre["target_family"] == "frechet" and fre["ks"] < 0.05
    verdict(5, "extreme-value convergence", ok, f"Gumbel KS {gum['ks']:.4f}, Frechet KS {fre['ks']:.4f}", elapsed, 30)


def test_criterion_06_cumulative_consistency(verdict):
    models = [
        CumulativeModel(ScaleSpec(()), ScaleParams(1.0, 0.0, 1.0), 1.0),
        CumulativeModel(ScaleSpec((PureLog(),)), ScaleParams(0.0, 1.0, 1.5), 1.3),
        CumulativeModel(ScaleSpec((LinearLog(1.0),)), ScaleParams(0.5, 1.0, 0.8), 1.1),
    ]
    t = time.perf_counter()
    linf = ent = 0.0
    for m in models:
        a = density_from_cumulative(m)
        b = synth_density(m.spec, m.params, IDENTITY, CumulativeDerivative, m.support, m.lam)
        y = quantile_grid(a, 256, 1e-6)
        linf = max(linf, float(np.max(np.abs(a.pdf(y) - b.pdf(y)))))
        ent = max(ent, abs(entropy_on_T(m) - relative_entropy(a)))
    elapsed = time.perf_counter() - t
    ok = linf < 1e-10 and ent < 1e-6
    verdict(6, "cumulative consistency", ok, f"density linf {linf:.2e}, entropy gap {ent:.2e} on 3 models", elapsed)


def test_criterion_07_nef_structure(verdict):
    t = time.perf_counter()
    worst = {"legendre": 0.0, "cgf": 0.0, "norm": 0.0}
    exact = True
    for name in sorted(nefqvf.FAMILY_TYPES):
        fam = nefqvf.default_test_family(name)
        exact &= nefqvf.psi_of_theta(fam, 0.0) == 0.0 and nefqvf.entropy_S(fam, fam.mu0) == 0.0
        grid = nefqvf.default_theta_grid(fam)
        worst["legendre"] = max(worst["legendre"], max(nefqvf.check_legendre(fam, grid).values()))
        worst["cgf"] = max(worst["cgf"], max(nefqvf.verify_cgf(fam, th) for th in grid[::4]))
        worst["norm"] = max(worst["norm"], abs(nefqvf.normalization(fam) - 1.0))
    elapsed = time.perf_counter() - t
    ok = exact and worst["legendre"] < 1e-6 and worst["cgf"] < 1e-8 and worst["norm"] < 1e-10
    detail = (
        f"boundary constants exact: {exact}, Legendre {worst['legendre']:.2e}, "
        f"cgf {worst['cgf']:.2e}, normalization {worst['norm']:.2e}"
    )
    verdict(7, "NEF structure", ok, detail, elapsed, 10)


def test_criterion_08_nef_degeneracy(verdict):
    t = time.perf_counter()
    S = nefqvf.entropy_S
    Lam = 1e3
    c, g = nefqvf.HyperbolicCosecant(Lam, 1.0 / Lam**2, 0.0), nefqvf.Gaussian(1.0, 0.0)
    mus = [m for m in np.linspace(-1, 1, 41) if m != 0.0]
    gauss = max(abs(S(c, m) / S(g, m) - 1) for m in mus)
    mu0 = 2.0
    c, g = nefqvf.HyperbolicCosecant(1e-3, 1 / mu0, mu0), nefqvf.Gamma(mu0, mu0)
    mus = [m for m in np.linspace(0.2, 3.0, 41) * mu0 if m != mu0]
    gamma = max(abs(S(c, m) / S(g, m) - 1) for m in mus)
    mu0, N = 1.0, 10**4
    b, p = nefqvf.Binomial(N, mu0 / N), nefqvf.Poisson(mu0)
    poisson = max(abs(S(b, m) - S(p, m)) for m in np.linspace(mu0 / 2, 2 * mu0, 41)[1:-1])
    elapsed = time.perf_counter() - t
    ok = gauss < 1e-4 and gamma < 1e-3 and poisson < 1e-3
    detail = f"csch->Gaussian {gauss:.2e}, csch->gamma {gamma:.2e}, Binomial->Poisson {poisson:.2e}"
    verdict(8, "NEF degeneracy limits", ok, detail, elapsed)


def test_criterion_09_large_deviations(verdict):
    t = time.perf_counter()
    rows = nefqvf.large_deviation_compare(nefqvf.Gaussian(1.0, 0.0), np.linspace(-5, 5, 41))
    spread = float(np.ptp([r["diff"] for r in rows]))
    (pois,) = nefqvf.large_deviation_compare(nefqvf.Poisson(20.0), [25])
    (gam,) = nefqvf.large_deviation_compare(nefqvf.Gamma(30.0), [30.0])
    elapsed = time.perf_counter() - t
    ok = spread < 1e-10 and abs(pois["corrected"]) < 0.02 and abs(gam["corrected"]) < 0.05
    detail = f"Gaussian spread {spread:.2e}, Poisson {abs(pois['corrected']):.4f}, gamma {abs(gam['corrected']):.4f}"
    verdict(9, "large deviations", ok, detail, elapsed)


def test_criterion_10_levy_inversion(verdict):
    y = np.linspace(-10, 10, 401)
    t = time.perf_counter()
    gauss = np.array(catalog.levy_density(2.0, 1.0, y))
    cauchy = np.array(catalog.levy_density(1.0, 1.0, y))
    elapsed = time.perf_counter() - t
    g_err = float(np.max(np.abs(gauss - np.exp(-(y**2) / 4) / math.sqrt(4 * math.pi))))
    c_err = float(np.max(np.abs(cauchy - 1 / (math.pi * (1 + y**2)))))
    ok = g_err < 1e-6 and c_err < 1e-6
    verdict(10, "Levy inversion", ok, f"beta=2 linf {g_err:.2e}, beta=1 linf {c_err:.2e}", elapsed, 5)
