"""End-to-end acceptance battery.

Each test prints one [PASS]/[FAIL] line on the real terminal (past the
capture plugin) so a full run reads as a checklist.  Tolerances and
budgets are pinned; loosening them is not a fix for a failure.
"""

import json
import math
import time

import numpy as np
from numpy.random import default_rng

from curekit import (
    CensoringSpec,
    IncidenceSpec,
    Kernel,
    LatencySpec,
    LinkFunction,
    SimulationSpec,
    SurvivalSample,
    beran_fit,
    bootstrap_bandwidth,
    bootstrap_criterion,
    covariate_cure_test,
    cure_rate_conditional,
    default_bandwidth_grid,
    km_fit,
    latency_estimate,
    link_eval,
    log_likelihood_gradient_fd,
    maller_zhou_test,
    fit_mle,
    simulate,
)
from curekit.cli import main
from curekit.kernels import EmptyNeighborhoodError


def _report(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] acceptance {num}: {detail}")
    assert ok, f"acceptance {num}: {detail}"


def test_acceptance_01_km_matches_empirical_on_uncensored(capsys):
    t0 = time.perf_counter()
    rng = default_rng(1)
    worst = 0.0
    for rep in range(100):
        times = rng.lognormal(0.5, 0.7, size=200)
        if rep % 2:
            times = np.maximum(np.round(times, 1), 0.1)  # force ties
        sample = SurvivalSample(times=times, deltas=np.ones(200, dtype=int))
        curve = km_fit(sample)
        empirical = np.array(
            [np.sum(times > t) / 200.0 for t in curve.jump_times]
        )
        worst = max(worst, float(np.max(np.abs(curve.values - empirical))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5.0
    _report(
        capsys, 1,
        ok,
        f"KM equals the empirical survivor function on 100 uncensored samples "
        f"(max err {worst:.2e} <= 1e-12, {elapsed:.2f}s < 5s)",
    )


def test_acceptance_02_beran_collapses_to_km_at_huge_bandwidth(capsys):
    rng = default_rng(2)
    worst = 0.0
    for _ in range(50):
        n = 150
        times = rng.lognormal(0.5, 0.6, size=n)
        deltas = (times <= rng.exponential(2.0, size=n)).astype(int)
        age = rng.uniform(20.0, 90.0, size=n)
        sample = SurvivalSample(times=times, deltas=deltas, covariates={"age": age})
        km = km_fit(sample)
        beran = beran_fit(sample, "age", 55.0, Kernel.EPANECHNIKOV, 1e9)
        assert np.array_equal(km.jump_times, beran.jump_times)
        worst = max(worst, float(np.max(np.abs(km.values - beran.values))))
    ok = worst <= 1e-10
    _report(
        capsys, 2,
        ok,
        f"Beran at bandwidth 1e9 reproduces KM on 50 censored samples "
        f"(max err {worst:.2e} <= 1e-10)",
    )


def test_acceptance_03_cure_latency_decomposition_identity(capsys):
    worst = 0.0
    checked = 0
    for i in range(20):
        spec = SimulationSpec(
            n=500,
            age_range=(20.0, 90.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(link=LinkFunction.LOGIT, intercept=0.7),
            latency=LatencySpec(intercept=0.0, shape=1.5),
            censoring=CensoringSpec(law="uniform", tau=8.0),
            seed=200 + i,
        )
        sample, _ = simulate(spec)
        h = 8.0
        for x in (35.0, 45.0, 55.0, 65.0, 75.0):
            curve = beran_fit(sample, "age", x, Kernel.EPANECHNIKOV, h)
            est = cure_rate_conditional(sample, "age", x, Kernel.EPANECHNIKOV, h)
            latency = latency_estimate(sample, "age", x, Kernel.EPANECHNIKOV, h)
            rebuilt = est.cure_prob + (1.0 - est.cure_prob) * latency.base.values
            assert np.array_equal(curve.jump_times, latency.base.jump_times)
            worst = max(worst, float(np.max(np.abs(curve.values - rebuilt))))
            checked += 1
    ok = worst <= 1e-10 and checked == 100
    _report(
        capsys, 3,
        ok,
        f"conditional survival rebuilds exactly from cure rate and latency at "
        f"{checked} (sample, x) pairs (max err {worst:.2e} <= 1e-10)",
    )


def test_acceptance_04_parametric_recovery(capsys):
    t0 = time.perf_counter()
    truth = {
        "inc0": 1.0,
        "inc_age": -0.05,
        "lat0": math.log(2.0),
        "lat_age": 0.0,
        "shape": 1.5,
    }
    errors = {k: [] for k in truth}
    converged = 0
    for rep in range(20):
        spec = SimulationSpec(
            n=2000,
            age_range=(-1.0, 1.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(
                link=LinkFunction.LOGIT, intercept=truth["inc0"], age_coef=truth["inc_age"]
            ),
            latency=LatencySpec(
                intercept=truth["lat0"], age_coef=truth["lat_age"], shape=truth["shape"]
            ),
            censoring=CensoringSpec(law="exponential", rate=0.2),
            seed=1000 + rep,
        )
        sample, _ = simulate(spec)
        fit = fit_mle(
            sample,
            LinkFunction.LOGIT,
            incidence_covariates=["age"],
            latency_covariates=["age"],
            seed=rep,
        )
        converged += int(fit.converged)
        errors["inc0"].append(abs(fit.incidence_coefs[0] - truth["inc0"]))
        errors["inc_age"].append(abs(fit.incidence_coefs[1] - truth["inc_age"]))
        errors["lat0"].append(abs(fit.latency_coefs[0] - truth["lat0"]))
        errors["lat_age"].append(abs(fit.latency_coefs[1] - truth["lat_age"]))
        errors["shape"].append(abs(fit.shape_k - truth["shape"]))
    medians = {k: float(np.median(v)) for k, v in errors.items()}
    elapsed = time.perf_counter() - t0
    ok = all(m <= 0.15 for m in medians.values()) and converged >= 18 and elapsed < 120.0
    detail = ", ".join(f"{k}={v:.3f}" for k, v in medians.items())
    _report(
        capsys, 4,
        ok,
        f"MLE recovers generating parameters over 20 cohorts of n=2000 "
        f"(median abs errors {detail} all <= 0.15; {converged}/20 converged >= 18; "
        f"{elapsed:.1f}s < 120s)",
    )


def test_acceptance_05_existence_test_power_and_level(capsys):
    detect = 0
    for rep in range(100):
        spec = SimulationSpec(
            n=500,
            age_range=(20.0, 90.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(link=LinkFunction.LOGIT, intercept=0.0),
            latency=LatencySpec(intercept=0.0, shape=1.5),
            censoring=CensoringSpec(law="uniform", tau=20.0),
            seed=3000 + rep,
        )
        sample, _ = simulate(spec)
        if maller_zhou_test(sample).p_value < 0.01:
            detect += 1
    accept = 0
    for rep in range(100):
        spec = SimulationSpec(
            n=500,
            age_range=(20.0, 90.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(link=LinkFunction.LOGIT, intercept=40.0),
            latency=LatencySpec(intercept=0.0, shape=1.5),
            censoring=CensoringSpec(law="uniform", tau=4.0),
            seed=4000 + rep,
        )
        sample, _ = simulate(spec)
        if maller_zhou_test(sample).p_value > 0.10:
            accept += 1
    ok = detect >= 95 and accept >= 80
    _report(
        capsys, 5,
        ok,
        f"existence test flags a 50% cured cohort (p<0.01 in {detect}/100 >= 95) and "
        f"stays quiet without cure (p>0.10 in {accept}/100 >= 80)",
    )


def test_acceptance_06_covariate_test_level_and_power(capsys):
    t0 = time.perf_counter()
    null_rejections = 0
    for rep in range(200):
        spec = SimulationSpec(
            n=300,
            age_range=(20.0, 90.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(link=LinkFunction.LOGIT, intercept=0.5),
            latency=LatencySpec(intercept=0.0, shape=1.5),
            censoring=CensoringSpec(law="uniform", tau=8.0),
            seed=600 + rep,
        )
        sample, _ = simulate(spec)
        report = covariate_cure_test(sample, "age", n_permutations=999, seed=rep)
        if report.p_value <= 0.05:
            null_rejections += 1
    level = null_rejections / 200.0
    power_rejections = 0
    for rep in range(200):
        spec = SimulationSpec(
            n=500,
            age_range=(20.0, 90.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(
                link=LinkFunction.LOGIT, intercept=2.0, age_coef=-0.08
            ),
            latency=LatencySpec(intercept=0.0, shape=1.5),
            censoring=CensoringSpec(law="uniform", tau=15.0),
            seed=800 + rep,
        )
        sample, _ = simulate(spec)
        report = covariate_cure_test(sample, "age", n_permutations=999, seed=rep)
        if report.p_value <= 0.05:
            power_rejections += 1
    elapsed = time.perf_counter() - t0
    ok = 0.02 <= level <= 0.10 and power_rejections >= 180 and elapsed < 600.0
    _report(
        capsys, 6,
        ok,
        f"covariate test holds its level under independence (rate {level:.3f} in "
        f"[0.02, 0.10]) and detects age-driven cure ({power_rejections}/200 >= 180; "
        f"{elapsed:.0f}s < 600s)",
    )


def test_acceptance_07_bootstrap_bandwidth_beats_extremes(capsys):
    xs = np.array([35.0, 55.0, 75.0])
    wins = 0
    pairs = 0
    recomputed_ok = True
    for i in range(30):
        spec = SimulationSpec(
            n=400,
            age_range=(20.0, 90.0),
            sex_prob=0.5,
            incidence=IncidenceSpec(
                link=LinkFunction.LOGIT, intercept=1.5, age_coef=-0.05
            ),
            latency=LatencySpec(intercept=0.0, shape=1.5),
            censoring=CensoringSpec(law="uniform", tau=12.0),
            seed=900 + i,
        )
        sample, _ = simulate(spec)
        grid = default_bandwidth_grid(sample, "age")
        selected = bootstrap_bandwidth(
            sample, "age", eval_points=xs, grid=grid, n_boot=100, seed=i
        )
        crit = bootstrap_criterion(
            sample, "age", xs, grid, n_boot=100, seed=i
        )
        if not np.array_equal(selected, grid[np.argmin(crit, axis=1)]):
            recomputed_ok = False
        for j, x in enumerate(xs):
            p_true = float(link_eval(LinkFunction.LOGIT, 1.5 - 0.05 * x))
            cure_true = 1.0 - p_true

            def sq_err(h):
                try:
                    est = cure_rate_conditional(
                        sample, "age", x, Kernel.EPANECHNIKOV, h
                    )
                except EmptyNeighborhoodError:
                    return math.inf
                return (est.cure_prob - cure_true) ** 2

            err_sel = sq_err(float(selected[j]))
            err_extreme = max(sq_err(float(grid[0])), sq_err(float(grid[-1])))
            pairs += 1
            if err_sel <= err_extreme:
                wins += 1
    ok = recomputed_ok and pairs == 90 and wins >= 72
    _report(
        capsys, 7,
        ok,
        f"bootstrap bandwidth beats the worse grid extreme at {wins}/{pairs} "
        f"(sample, x) pairs >= 72, and re-running the criterion reproduces every "
        f"selection exactly ({'yes' if recomputed_ok else 'no'})",
    )


def test_acceptance_08_stochastic_cli_is_deterministic(capsys, tmp_path):
    sample_path = tmp_path / "sample.csv"
    truth_path = tmp_path / "truth.csv"
    sim_argv = [
        "simulate",
        "--n", "60",
        "--age-range", "20,90",
        "--incidence-coefs=1.0,-0.02",
        "--latency-coefs", "0.4",
        "--shape", "1.4",
        "--censoring", "uniform:9",
        "--seed", "5",
        "--output", str(sample_path),
        "--truth", str(truth_path),
    ]
    day_counts = tmp_path / "days.csv"
    day_counts.write_text(
        "time,delta\n" + "".join(f"{1 + (i * 7) % 40},{i % 2}\n" for i in range(30))
    )
    batteries = {
        "simulate": (sim_argv, [sample_path, truth_path]),
        "jitter": (
            [
                "jitter",
                "--input", str(day_counts),
                "--seed", "6",
                "--output", str(tmp_path / "jit.csv"),
            ],
            [tmp_path / "jit.csv"],
        ),
        "cov-test": (
            [
                "cov-test",
                "--input", str(sample_path),
                "--covariate", "age",
                "--permutations", "99",
                "--seed", "7",
                "--output", str(tmp_path / "cov.json"),
            ],
            [tmp_path / "cov.json"],
        ),
        "bandwidth": (
            [
                "bandwidth",
                "--input", str(sample_path),
                "--covariate", "age",
                "--x", "40,60",
                "--resamples", "25",
                "--seed", "8",
                "--output", str(tmp_path / "bw.csv"),
            ],
            [tmp_path / "bw.csv"],
        ),
        "fit": (
            [
                "fit",
                "--input", str(sample_path),
                "--n-starts", "3",
                "--max-iter", "200",
                "--seed", "9",
                "--output", str(tmp_path / "fit.json"),
            ],
            [tmp_path / "fit.json"],
        ),
    }
    stable = []
    for name, (argv, outputs) in batteries.items():
        assert main(argv) == 0, name
        first = [p.read_bytes() for p in outputs]
        assert main(argv) == 0, name
        second = [p.read_bytes() for p in outputs]
        stable.append(first == second)
    ok = all(stable)
    _report(
        capsys, 8,
        ok,
        "every stochastic subcommand rerun with the same seed writes byte-identical "
        f"outputs ({sum(stable)}/5: simulate, jitter, cov-test, bandwidth, fit)",
    )


def test_acceptance_09_fd_gradient_is_step_stable(capsys):
    spec = SimulationSpec(
        n=150,
        age_range=(-1.0, 1.0),
        sex_prob=0.5,
        incidence=IncidenceSpec(link=LinkFunction.LOGIT, intercept=1.0, age_coef=-0.05),
        latency=LatencySpec(intercept=math.log(2.0), shape=1.5),
        censoring=CensoringSpec(law="exponential", rate=0.2),
        seed=55,
    )
    sample, _ = simulate(spec)
    rng = default_rng(99)
    worst_ratio = 0.0
    for _ in range(20):
        inc = [1.0 + rng.normal(0, 0.2), -0.05 + rng.normal(0, 0.2)]
        lat = [math.log(2.0) + rng.normal(0, 0.2), rng.normal(0, 0.2)]
        k = 1.5 * math.exp(rng.normal(0, 0.2))
        args = (sample, LinkFunction.LOGIT, inc, lat, k)
        kwargs = dict(incidence_covariates=["age"], latency_covariates=["age"])
        g_small = log_likelihood_gradient_fd(*args, step=1e-5, **kwargs)
        g_large = log_likelihood_gradient_fd(*args, step=1e-3, **kwargs)
        bound = 1e-4 * max(float(np.linalg.norm(g_small)), 1.0)
        worst_ratio = max(
            worst_ratio, float(np.linalg.norm(g_small - g_large)) / bound
        )
    ok = worst_ratio <= 1.0
    _report(
        capsys, 9,
        ok,
        f"finite-difference gradients agree between steps 1e-5 and 1e-3 at 20 "
        f"parameter points (worst norm gap at {worst_ratio:.3f} of the 1e-4 budget)",
    )


def test_acceptance_10_cli_golden_outputs(capsys, tmp_path):
    results = []

    km_in = tmp_path / "km_in.csv"
    km_in.write_text("time,delta\n1,1\n2,0\n3,1\n")
    km_out = tmp_path / "km_out.csv"
    assert main(["km", "--input", str(km_in), "--output", str(km_out)]) == 0
    results.append(km_out.read_text() == "t,s\n1,0.6666666667\n3,0\n")

    beran_in = tmp_path / "beran_in.csv"
    beran_in.write_text("time,delta,age\n1,1,0\n2,1,0.8660254037844386\n")
    beran_out = tmp_path / "beran_out.csv"
    assert (
        main(
            [
                "beran",
                "--input", str(beran_in),
                "--covariate", "age",
                "--x", "0",
                "--bandwidth", "1",
                "--output", str(beran_out),
            ]
        )
        == 0
    )
    results.append(beran_out.read_text() == "t,s\n1,0.2\n2,0\n")

    mz_in = tmp_path / "mz_in.csv"
    mz_in.write_text(
        "time,delta\n1,1\n2,1\n3,1\n4,1\n4.5,1\n5,1\n6,0\n7,0\n8,0\n10,0\n"
    )
    mz_out = tmp_path / "mz_out.json"
    assert main(["mz-test", "--input", str(mz_in), "--output", str(mz_out)]) == 0
    mz_doc = json.loads(mz_out.read_text())
    results.append('"p_value": 0.0001048576' in mz_out.read_text())
    results.append(mz_doc["result"]["statistic"] == 0.6)

    sim_out = tmp_path / "sim_out.csv"
    sim_truth = tmp_path / "sim_truth.csv"
    assert (
        main(
            [
                "simulate",
                "--n", "1",
                "--age-range", "0,1",
                "--link", "cloglog",
                "--incidence-coefs", "0",
                "--latency-coefs", "0",
                "--censoring", "uniform:1",
                "--seed", "0",
                "--output", str(sim_out),
                "--truth", str(sim_truth),
            ]
        )
        == 0
    )
    results.append(
        sim_truth.read_text().splitlines()[1].endswith(",0.6321205588")
    )

    ok = all(results)
    _report(
        capsys, 10,
        ok,
        f"CLI golden outputs match frozen strings ({sum(results)}/5 checks: KM curve, "
        f"Beran curve, existence-test p-value, its statistic, cloglog probability)",
    )
