"""The acceptance suite: every desk-scale check, with result rows.

Each check returns a :class:`CriterionResult` holding its pass flag and the
:class:`ResultRow` records behind it.  Rows are deterministic given the
seeds; wall-clock times are kept on the result and never written to rows.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from . import couplings, distances, entropy, exact_densities, samplers
from .number_theory import MertensMap, get_tables, recompute_mertens_b

SEEDS = (7, 1009, 524287)
CSV_COLUMNS = ("experiment", "n", "trials", "seed", "metric", "value", "stderr",
               "truncation_error", "paper_anchor")


@dataclass
class ResultRow:
    experiment: str
    n: int
    trials: int
    seed: int
    metric: str
    value: float
    stderr: float = 0.0
    truncation_error: float = 0.0
    paper_anchor: str = ""

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")

    def cells(self) -> List[str]:
        return [self.experiment, str(self.n), str(self.trials), str(self.seed), self.metric,
                _fmt(self.value), _fmt(self.stderr), _fmt(self.truncation_error), self.paper_anchor]


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    rows: List[ResultRow] = field(default_factory=list)
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def sort_rows(rows: Sequence[ResultRow]) -> List[ResultRow]:
    """Stable order by ``(experiment, n, seed)``."""
    return sorted(rows, key=lambda r: (r.experiment, r.n, r.seed))


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=1, sort_keys=True) + "\n"


def _gen(seed: int, stream: int = 0):
    return samplers.RandomSource(seed, stream).generator()


def _mean_se(x) -> tuple:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


# ------------------------------------------------------------------ criteria

def c01_feller_bound(tol: float = 1.0, trials: int = 10**5, seed: int = SEEDS[0]):
    t0 = time.perf_counter()
    rows, ok, bits = [], True, []
    for k, n in enumerate((10, 100, 1000)):
        b = couplings.feller_batch(n, trials, 1000.0, _gen(seed, k))
        m, se = _mean_se(b.indel)
        bound = 2 * n / (n + 1)
        good = m <= bound + tol * (3 * se + b.truncation_bound)
        ok &= good
        bits.append(f"n={n} mean={m:.4f} bound={bound:.4f}")
        rows.append(ResultRow("feller", n, trials, seed, "mean_indel", m, se,
                              b.truncation_bound, "feller_mean_below_2n_over_n+1"))
    secs = time.perf_counter() - t0
    ok &= secs < 120
    return CriterionResult(1, "Feller mean indel bound", ok, rows, "; ".join(bits), secs)


def c02_feller_monotone(tol: float = 1.0, trials: int = 10**5, seed: int = SEEDS[0]):
    b = couplings.feller_batch(100, trials, 1000.0, _gen(seed, 10))
    frac = float(b.monotone_ok.mean())
    rows = [ResultRow("feller", 100, trials, seed, "monotone_fraction", frac, 0.0, 0.0,
                      "feller_monotone")]
    return CriterionResult(2, "Feller monotonicity", frac == 1.0, rows, f"fraction={frac}")


def c03_feller_example(tol: float = 1.0):
    s = couplings.feller_from_bits("10111000011000100000")
    want_counts = {1: 3, 2: 1, 4: 1, 5: 1, 6: 1}
    ok = (tuple(s.spacings_n[:6]) == (2, 1, 1, 5, 1, 4) and s.first_cycle_len == 6
          and s.cycle_counts_n == want_counts and s.J_perm == 14
          and sum(i * c for i, c in s.cycle_counts_n.items()) == 20)
    rows = [ResultRow("feller_example", 20, 1, 0, "first_cycle_len", s.first_cycle_len, 0, 0,
                      "feller_worked_example")]
    return CriterionResult(3, "Feller worked example", ok, rows,
                           f"B={s.spacings_n[:6]} A={s.first_cycle_len} C={s.cycle_counts_n}")


# (n_lo, n_hi inclusive, J, 1 + pi(n/J) or None when it varies, P0 for U in
# (.5,.6], (.6,2/3], (5/6,1])
GROWTH_TABLE = [
    (1, 1, 1, 1, (1, 1, 1)),
    (2, 2, 1, 2, (2, 2, 2)),
    (3, 5, 3, 1, (1, 1, 1)),
    (6, 11, 6, 1, (1, 1, 1)),
    (12, 23, 12, 1, (1, 1, 1)),
    (24, 35, 12, 2, (2, 2, 2)),
    (36, 59, 12, 3, (2, 2, 3)),
    (60, 83, 12, 4, (3, 3, 5)),
    (84, 131, 12, 5, (3, 5, 7)),
    (132, 263, 132, 1, (1, 1, 1)),
    (264, 527, 264, 1, (1, 1, 1)),
    (528, 791, 264, 2, (2, 2, 2)),
    (792, 1319, 264, 3, (2, 2, 3)),
    (1320, 1847, 264, 4, (3, 3, 5)),
    (1848, 13 * 1848 - 1, 1848, None, None),
]
GROWTH_ORDER = (3, 2, 2, 11, 2, 7, 13)
U_CASES = ((0.5 + 1e-12, 0.55, 0.6), (0.6 + 1e-12, 0.65, 2 / 3), (5 / 6 + 1e-12, 0.9, 1.0))


def replay_growth_table(tables=None) -> List[str]:
    """Replay the worked growth example; returns a list of mismatch messages."""
    tables = tables or get_tables(10**5, with_spf=False)
    bad = []
    for lo, hi, J, K, p0s in GROWTH_TABLE:
        for n in range(lo, hi + 1):
            j = couplings.replay_J(GROWTH_ORDER, n)
            k = len(couplings.p0_choices(n, j, tables))
            if j != J or (K is not None and k != K) or (K is None and not 1 <= k <= 6):
                bad.append(f"n={n}: J={j} K={k}")
            if p0s is None:
                if couplings.p0_choices(n, j, tables) != [1, 2, 3, 5, 7, 11][:k]:
                    bad.append(f"n={n}: choices")
                continue
            for us, want in zip(U_CASES, p0s):
                for u in us:
                    got = couplings.p0_from_uniform(n, j, u, tables)
                    if got != want:
                        bad.append(f"n={n} u={u:.3f}: P0={got} want {want}")
    return bad


def c04_growth_table(tol: float = 1.0):
    bad = replay_growth_table()
    rows = [ResultRow("growth_table", 13 * 1848 - 1, 1, 0, "mismatches", len(bad), 0, 0,
                      "growth_worked_tables")]
    return CriterionResult(4, "Worked growth tables", not bad, rows,
                           "all rows reproduced" if not bad else "; ".join(bad[:5]))


def c05_dw_upper(tol: float = 1.0, seed: int = SEEDS[0], grid=((10**3, 10**5), (10**4, 10**5),
                                                             (10**5, 3 * 10**4))):
    t0 = time.perf_counter()
    tables = get_tables(10**6)
    rows, means, ses = [], [], []
    for k, (n, trials) in enumerate(grid):
        model = couplings.growth_model(n, tables, mode="exact_uniform")
        b = model.batch(trials, _gen(seed, 100 + k))
        m, se = _mean_se(b.indel)
        means.append(m)
        ses.append(se)
        rows.append(ResultRow("grow_int", n, trials, seed, "mean_indel", m, se, 0.0,
                              "dw_upper_2_plus_small"))
        rows.append(ResultRow("grow_int", n, trials, seed, "mean_extra", *_mean_se(b.extra), 0.0,
                              "dw_upper_2_plus_small"))
        rows.append(ResultRow("grow_int", n, trials, seed, "mean_missing", *_mean_se(b.missing),
                              0.0, "dw_upper_2_plus_small"))
        rows.append(ResultRow("grow_int", n, trials, seed, "p_extra_ge_1",
                              *_mean_se(b.extra >= 1), 0.0, "one_insertion_necessary"))
    secs = time.perf_counter() - t0
    idx = [n for n, _ in grid].index(10**4) if any(n == 10**4 for n, _ in grid) else 0
    in_band = 1.8 <= means[idx] <= 2.6
    decreasing = all(means[i + 1] - means[i] <= tol * 3 * math.hypot(ses[i], ses[i + 1])
                     for i in range(len(means) - 1))
    ok = in_band and decreasing and secs < 1800
    detail = (" ".join(f"{m:.4f}+-{s:.4f}" for m, s in zip(means, ses))
              + f"; band={'ok' if in_band else 'no'} decreasing={'ok' if decreasing else 'no'}")
    return CriterionResult(5, "Indel of the growth coupling", ok, rows, detail, secs)


def c06_uniform_N(tol: float = 1.0, trials: int = 10**6, n: int = 1000):
    tables = get_tables(10**6)
    model = couplings.growth_model(n, tables, mode="exact_uniform")
    rows, ok, ps = [], True, []
    for seed in SEEDS:
        b = model.batch(trials, _gen(seed, 200))
        obs = np.bincount(b.N, minlength=n + 1)[1:]
        p = float(stats.chisquare(obs).pvalue)
        ps.append(p)
        ok &= p > 0.01 * tol
        rows.append(ResultRow("grow_int_uniform", n, trials, seed, "chi2_pvalue", p, 0.0, 0.0,
                              "constructed_N_uniform"))
    return CriterionResult(6, "Uniformity of N", ok, rows, " ".join(f"p={p:.3f}" for p in ps))


def c07_pmf_J(tol: float = 1.0, trials: int = 10**6, seed: int = SEEDS[0]):
    tables = get_tables(10**6)
    rows, ok, bits = [], True, []
    for n in (100, 1000, 10**4):
        pj = exact_densities.pmf_J(n, tables)
        dev = abs(pj.total() - 1.0)
        ok &= dev <= 1e-6 * tol
        bits.append(f"|mass-1|={dev:.1e}")
        rows.append(ResultRow("pmf_J", n, 0, 0, "total_mass", pj.total(), 0.0, pj.error_estimate,
                              "density_of_J"))
    n = 100
    b = couplings.growth_model(n, tables, mode="simulate").batch(trials, _gen(seed, 300))
    emp = np.bincount(b.J, minlength=n + 1) / trials
    d = 0.5 * float(np.abs(emp - exact_densities.pmf_J(n, tables).mass).sum())
    ok &= d <= 0.01 * tol
    bits.append(f"MC dTV={d:.4f}")
    rows.append(ResultRow("pmf_J", n, trials, seed, "mc_dtv", d, 0.0, 0.0, "density_of_J"))
    return CriterionResult(7, "Law of J", ok, rows, " ".join(bits))


def c08_dtv_trend(tol: float = 1.0):
    tables = get_tables(10**6)
    rows, vals, ratios = [], [], []
    for n in (100, 1000, 10**4):
        f = exact_densities.pmf_JP0(n, tables)
        d = exact_densities.dtv_forms(f)[2]
        r = d * math.log(n) / math.log(math.log(n))
        vals.append(d)
        ratios.append(r)
        rows.append(ResultRow("dtv_jp0", n, 0, 0, "dtv", d, 0.0, f.tolerance, "jp_distance_loglog"))
        rows.append(ResultRow("dtv_jp0", n, 0, 0, "dtv_scaled", r, 0.0, 0.0, "jp_distance_loglog"))
    lo, hi = 0.1 / tol if tol > 0 else 0.0, 1.5 * tol
    ok = all(vals[i + 1] < vals[i] for i in range(2)) and all(lo <= r <= hi for r in ratios)
    return CriterionResult(8, "Distance of J P0 to uniform", ok, rows,
                           " ".join(f"{d:.4f}({r:.3f})" for d, r in zip(vals, ratios)))


def c09_region_means(tol: float = 1.0, runs: int = 10**5, seed: int = SEEDS[0]):
    r5, r50 = exact_densities.region_mean(5), exact_densities.region_mean(50)
    ok = abs(r5 - 3.796) <= 1e-3 * tol and abs(r50 - 8.401) <= 1e-3 * tol
    c = samplers.labeled_square_counts(5, runs, _gen(seed, 400))
    m, se = _mean_se(c)
    ok &= abs(m - r5) <= 3 * se * tol
    rows = [ResultRow("region_mean", 5, 0, 0, "exact", r5, 0, 0, "region_mean_3.796"),
            ResultRow("region_mean", 50, 0, 0, "exact", r50, 0, 0, "region_mean_8.401"),
            ResultRow("region_mean", 5, runs, seed, "sampled", m, se, 0, "region_mean_3.796")]
    return CriterionResult(9, "Region means", ok, rows,
                           f"b=5 {r5:.6f} b=50 {r50:.6f} sampled {m:.4f}+-{se:.4f}")


SPACING_WINDOWS = ((1.0, 2.0), (2.0, 4.0), (1.0, math.e))


def spacing_test(a: float, b: float, runs: int, seed: int, stream: int = 0):
    """Mean check and Poisson chi-square for spacing counts in ``(a, b)``.

    Returns ``(mean, stderr, truncation, pvalue)``.
    """
    counts, trunc = samplers.spacing_counts(a, b, runs, _gen(seed, stream))
    lam = math.log(b / a)
    m, se = _mean_se(counts)
    kmax = 1
    while stats.poisson.sf(kmax, lam) * runs >= 5:
        kmax += 1
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
    exp = stats.poisson.pmf(np.arange(kmax + 1), lam)
    exp[-1] = stats.poisson.sf(kmax - 1, lam)
    p = float(stats.chisquare(obs, exp * runs).pvalue)
    return m, se, trunc, p


def c10_spacing(tol: float = 1.0, runs: int = 10**5):
    rows, ok, bits = [], True, []
    for k, (a, b) in enumerate(SPACING_WINDOWS):
        lam = math.log(b / a)
        for seed in SEEDS:
            m, se, trunc, p = spacing_test(a, b, runs, seed, 500 + k)
            good = abs(m - lam) <= tol * (3 * se + trunc) and p > 0.01 * tol
            ok &= good
            if not good:
                bits.append(f"({a:.3g},{b:.3g}) seed={seed} mean={m:.4f} p={p:.3g}")
            tag = f"spacing_{a:.4g}_{b:.4g}"
            rows.append(ResultRow(tag, 0, runs, seed, "mean_count", m, se, trunc, "spacing_lemma"))
            rows.append(ResultRow(tag, 0, runs, seed, "chi2_pvalue", p, 0, 0, "spacing_lemma"))
    return CriterionResult(10, "Spacing lemma", ok, rows, "; ".join(bits) or "all windows pass")


def c11_entropy(tol: float = 1.0):
    d2 = entropy.partition_information(0.5, 2)
    rep = entropy.prime_partition_information(10**6, 2)
    ok = abs(d2 - 0.375076) <= 1e-5 * tol and rep.within(0.612433379, 1e-6 * tol)
    rows = [ResultRow("entropy", 2, 0, 0, "d_half_bits", d2, 0, 0, "entropy_increment"),
            ResultRow("entropy", 10**6, 0, 0, "prime_sum_bits", rep.value, 0,
                      rep.truncation_error, "entropy_increment")]
    return CriterionResult(11, "Partition entropy", ok, rows,
                           f"d(1/2)={d2:.7f} sum={rep.value:.9f}")


def c12_mertens_B(tol: float = 1.0):
    b = recompute_mertens_b(10**6)
    ok = abs(b - 0.261497) <= 1e-6 * tol
    rows = [ResultRow("mertens_B", 10**6, 0, 0, "B", b, 0, 0, "mertens_constant")]
    return CriterionResult(12, "Mertens constant", ok, rows, f"B={b:.9f}")


def c13_sandwich(tol: float = 1.0):
    rows, ok, bits = [], True, []
    for b in (2, 3, 5):
        for n in (10, 100, 1000, 10**4):
            d = distances.exact_dtv_small_primes(b, n, exact=True)
            u = distances.crude_u(b, n, exact=True)
            ok &= d <= u
            rows.append(ResultRow(f"small_primes_b{b}", n, 0, 0, "dtv", float(d), 0, 0,
                                  "dtv_below_u"))
            rows.append(ResultRow(f"small_primes_b{b}", n, 0, 0, "u", float(u), 0, 0,
                                  "dtv_below_u"))
            if d > u:
                bits.append(f"b={b} n={n}")
    d24 = distances.exact_dtv_small_primes(2, 4, exact=True)
    u24 = distances.crude_u(2, 4, exact=True)
    from fractions import Fraction
    ok &= d24 == Fraction(1, 4) and u24 == Fraction(1, 2)
    return CriterionResult(13, "TV below crude bound", ok, rows,
                           f"dTV(2,4)={d24} u(2,4)={u24}" + (" violations " + ",".join(bits) if bits else ""))


def c14_intensity(tol: float = 1.0):
    tables = get_tables(10**6)
    rows, ok, bits = [], True, []
    for n in (10**3, 10**4, 10**5):
        g = distances.intensity_gap(n, tables)
        ok &= abs(g) <= 5 / math.log(n) * tol
        bits.append(f"{g:+.4f}")
        rows.append(ResultRow("intensity", n, 0, 0, "omega_gap", g, 0, 0, "intensity_match"))
    return CriterionResult(14, "Intensity match", ok, rows, " ".join(bits))


def c15_pd(tol: float = 1.0, trials: int = 10**4, seed: int = SEEDS[0],
           grid=(10**3, 10**4, 10**5, 10**6)):
    tables = get_tables(10**6)
    mm = MertensMap(tables)
    rows, full, task1 = [], [], []
    for k, n in enumerate(grid):
        uni = exact_densities.Uniformizer.from_pmf(exact_densities.pmf_JP0(n, tables))
        gen = _gen(seed, 600 + k)
        samples = [couplings.pd_couple(n, mm, gen, uniformizer=uni, tables=tables)
                   for _ in range(trials)]
        cut = samples[0].cutoff
        a = _mean_se([s.l1_full for s in samples])
        b = _mean_se([s.l1_distance for s in samples])
        d = _mean_se([s.D for s in samples])
        full.append(a)
        task1.append(b)
        rows.append(ResultRow("pd_couple", n, trials, seed, "mean_l1", a[0], a[1], cut,
                              "pd_distance_loglog"))
        rows.append(ResultRow("pd_couple", n, trials, seed, "mean_l1_task1", b[0], b[1], cut,
                              "pd_task1_bounded"))
        rows.append(ResultRow("pd_couple", n, trials, seed, "mean_D", d[0], d[1], cut,
                              "pd_mean_D_b0"))
    ok_ratio, ok_task1, bits = True, True, []
    for i in range(len(grid) - 1):
        lr = math.log(math.log(grid[i + 1])) / math.log(math.log(grid[i]))
        r = full[i + 1][0] / full[i][0]
        ok_ratio &= r <= 1.5 * lr * tol
        bits.append(f"ratio {r:.3f}<= {1.5 * lr:.3f}")
        step = task1[i + 1][0] - task1[i][0]
        ok_task1 &= step <= 3 * math.hypot(task1[i][1], task1[i + 1][1]) * tol
    bits.append("task1 " + " ".join(f"{m:.3f}" for m, _ in task1))
    bits.append(f"growth={'none' if ok_task1 else 'beyond 3 sigma'}")
    return CriterionResult(15, "Poisson-Dirichlet coupling", ok_ratio and ok_task1, rows,
                           "; ".join(bits))


def c16_dickman(tol: float = 1.0, draws: int = 10**6, seed: int = SEEDS[0]):
    v1 = samplers.sample_pd_largest(draws, _gen(seed, 700))
    m, se = _mean_se(v1 <= 0.5)
    target = 1 - math.log(2)
    u = np.linspace(1.0, 2.0, 1001)
    err = float(np.max(np.abs(exact_densities.dickman_rho(u) - (1 - np.log(u)))))
    ok = abs(m - target) <= 3 * se * tol and err <= 1e-8 * tol
    rows = [ResultRow("dickman", 0, draws, seed, "p_v1_le_half", m, se, 0, "dickman_marginal"),
            ResultRow("dickman", 0, 0, 0, "rho_branch_error", err, 0, 0, "dickman_marginal")]
    return CriterionResult(16, "Dickman marginal", ok, rows,
                           f"P(V1<=1/2)={m:.5f}+-{se:.5f} rho err={err:.1e}")


def b0_monte_carlo(runs: int, seed: int, mm: Optional[MertensMap] = None, cutoff: float = 1e-9):
    """Window estimate of ``E sum |h(Y) - Y|`` over the dx/x process.

    Points below ``cutoff`` contribute exactly ``cutoff`` in expectation
    (there ``h = 0``), which is added back.  Returns ``(mean, stderr, cutoff)``.
    """
    mm = mm or MertensMap(get_tables(10**6))
    top = math.exp(mm.log_crossover)
    vals = samplers.window_sum(lambda y: np.abs(mm.h(y) - y), cutoff, top, runs,
                               _gen(seed, 800))
    m, se = _mean_se(vals)
    return m + cutoff, se, cutoff


def c17_b0(tol: float = 1.0, runs: int = 10**5, seed: int = SEEDS[0]):
    mm = MertensMap(get_tables(10**6))
    q, tail = mm.b0_integral()
    m, se, cut = b0_monte_carlo(runs, seed, mm)
    ok = abs(m - q) <= tol * (3 * se + cut)
    rows = [ResultRow("b0", 10**6, 0, 0, "quadrature", q, 0, tail, "b0_area"),
            ResultRow("b0", 10**6, runs, seed, "monte_carlo", m, se, cut, "b0_area")]
    return CriterionResult(17, "b0 consistency", ok, rows,
                           f"quad={q:.6f} mc={m:.6f}+-{se:.6f}")


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: c01_feller_bound, 2: c02_feller_monotone, 3: c03_feller_example, 4: c04_growth_table,
    5: c05_dw_upper, 6: c06_uniform_N, 7: c07_pmf_J, 8: c08_dtv_trend, 9: c09_region_means,
    10: c10_spacing, 11: c11_entropy, 12: c12_mertens_B, 13: c13_sandwich, 14: c14_intensity,
    15: c15_pd, 16: c16_dickman, 17: c17_b0,
}


@dataclass
class AcceptanceReport:
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def rows(self) -> List[ResultRow]:
        return sort_rows([row for r in self.results for row in r.rows])

    def csv(self) -> str:
        return rows_to_csv(self.rows())

    def lines(self) -> List[str]:
        return [r.line() for r in self.results]


def run_criteria(which: Optional[Sequence[int]] = None, tol: float = 1.0,
                 log: Optional[Callable[[str], None]] = None) -> List[CriterionResult]:
    out = []
    for k in (which or sorted(CRITERIA)):
        t0 = time.perf_counter()
        res = CRITERIA[k](tol=tol)
        res.seconds = res.seconds or time.perf_counter() - t0
        out.append(res)
        if log:
            log(f"{res.line()} ({res.seconds:.1f}s)")
    return out


def acceptance_suite(which: Optional[Sequence[int]] = None, tol: float = 1.0,
                     determinism: bool = True,
                     log: Optional[Callable[[str], None]] = None) -> AcceptanceReport:
    """Run the checks; with ``determinism`` the run is repeated and the CSVs compared."""
    results = run_criteria(which, tol, log)
    if determinism:
        first = rows_to_csv(sort_rows([row for r in results for row in r.rows]))
        again = run_criteria(which, tol)
        second = rows_to_csv(sort_rows([row for r in again for row in r.rows]))
        same = first == second
        res = CriterionResult(18, "Determinism", same,
                              [ResultRow("determinism", 0, 2, 0, "csv_identical", float(same),
                                         0, 0, "determinism")],
                              "byte-identical CSV" if same else "CSV differs between runs")
        results.append(res)
        if log:
            log(res.line())
    return AcceptanceReport(results)
