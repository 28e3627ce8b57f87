"""Command-line front door.

Every subcommand reads CSV, writes its declared outputs atomically
(temp file, then rename; nothing is left behind on failure) and uses a
fixed numeric format of 10 significant digits so outputs are stable
enough to diff.  Exit codes: 0 success, 1 data or numeric failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import nonparametric
from .data_model import (
    DataError,
    StudyWindow,
    derive_survival_times,
    jitter_times,
    load_csv,
    read_sample_csv,
    summary_stats,
)
from .estimators import beran_fit, km_fit
from .hypotests import covariate_cure_test, maller_zhou_test
from .kernels import Kernel
from .parametric import LinkFunction, fit_mle
from .simulate import (
    CensoringSpec,
    IncidenceSpec,
    LatencySpec,
    SimulationSpec,
    simulate,
)


def _fmt(v) -> str:
    return f"{float(v):.10g}"


def _json_ready(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(_fmt(obj))
    if isinstance(obj, (np.floating,)):
        return _json_ready(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


class _Outputs:
    """Collects finished output files and renames them into place together."""

    def __init__(self) -> None:
        self._staged: list[tuple[Path, Path]] = []

    def _tmp(self, path: Path) -> Path:
        # keep the real extension last so format-sniffing writers still work
        tmp = path.with_name(f".{path.stem}.{os.getpid()}.tmp{path.suffix}")
        self._staged.append((tmp, path))
        return tmp

    def add_text(self, path: Path, text: str) -> None:
        tmp = self._tmp(path)
        tmp.write_text(text, encoding="utf-8")

    def add_figure(self, path: Path, draw) -> None:
        tmp = self._tmp(path)
        try:
            draw(tmp)
        except BaseException:
            tmp.unlink(missing_ok=True)
            raise

    def commit(self) -> None:
        for tmp, final in self._staged:
            os.replace(tmp, final)
        self._staged.clear()

    def discard(self) -> None:
        for tmp, _ in self._staged:
            tmp.unlink(missing_ok=True)
        self._staged.clear()


def _config_of(args: argparse.Namespace) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "stochastic"):
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    return cfg


def _report_text(args: argparse.Namespace, result: dict) -> str:
    doc = {
        "subcommand": args.subcommand,
        "config": _json_ready(_config_of(args)),
        "result": _json_ready(result),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _curve_csv(curve, header=("t", "s")) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for t, s in zip(curve.jump_times, curve.values):
        buf.write(f"{_fmt(t)},{_fmt(s)}\n")
    return buf.getvalue()


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise DataError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _parse_date(text: str, flag: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise DataError(f"{flag}: expected an ISO date, got {text!r}") from None


def _parse_columns(text: str | None) -> dict[str, str] | None:
    if not text:
        return None
    out = {}
    for piece in text.split(","):
        field, _, column = piece.partition("=")
        if not column:
            raise DataError(f"--columns: expected field=name pairs, got {piece!r}")
        out[field.strip()] = column.strip()
    return out


def _kernel_of(args: argparse.Namespace) -> Kernel:
    return Kernel(args.kernel)


def _load_records_sample(args: argparse.Namespace):
    records = load_csv(args.records, _parse_columns(args.columns))
    window = StudyWindow(
        start=_parse_date(args.window_start, "--window-start"),
        end=_parse_date(args.window_end, "--window-end"),
    )
    return derive_survival_times(records, window)


def _cmd_km(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    curve = km_fit(sample)
    out.add_text(args.output, _curve_csv(curve))
    if args.plot:
        from .plots import save_step_curve_figure

        out.add_figure(
            args.plot,
            lambda p: save_step_curve_figure(p, [("Kaplan-Meier", curve)], "Survival estimate"),
        )


def _cmd_beran(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    curve = beran_fit(sample, args.covariate, args.x, _kernel_of(args), args.bandwidth)
    out.add_text(args.output, _curve_csv(curve))
    if args.plot:
        from .plots import save_step_curve_figure

        label = f"{args.covariate}={_fmt(args.x)}"
        out.add_figure(
            args.plot,
            lambda p: save_step_curve_figure(
                p, [(label, curve)], "Conditional survival estimate"
            ),
        )


def _cmd_cure_rate(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    rows = []
    if args.covariate is None:
        est = nonparametric.cure_rate_unconditional(sample)
        rows.append(("", _fmt(est.cure_prob), ""))
        xs_plot, cures_plot = [], []
    else:
        if args.x is not None:
            xs = _parse_floats(args.x, "--x")
        else:
            xs = list(nonparametric.default_eval_points(sample, args.covariate))
        if args.bandwidth is None:
            raise DataError("--bandwidth is required when --covariate is given")
        hs = _parse_floats(args.bandwidth, "--bandwidth")
        if len(hs) == 1:
            hs = hs * len(xs)
        if len(hs) != len(xs):
            raise DataError("--bandwidth must hold one value, or one per --x entry")
        kernel = _kernel_of(args)
        xs_plot, cures_plot = [], []
        for x, h in zip(xs, hs):
            est = nonparametric.cure_rate_conditional(sample, args.covariate, x, kernel, h)
            rows.append((_fmt(x), _fmt(est.cure_prob), _fmt(h)))
            xs_plot.append(x)
            cures_plot.append(est.cure_prob)
    buf = io.StringIO()
    buf.write("x,cure_prob,h\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    out.add_text(args.output, buf.getvalue())
    if args.plot:
        if not xs_plot:
            raise DataError("--plot needs a conditional profile; give --covariate")
        from .plots import save_profile_figure

        out.add_figure(
            args.plot,
            lambda p: save_profile_figure(
                p, xs_plot, cures_plot, "Cure probability profile", args.covariate, "1 - p(x)"
            ),
        )


def _cmd_latency(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    latency = nonparametric.latency_estimate(
        sample, args.covariate, args.x, _kernel_of(args), args.bandwidth
    )
    out.add_text(args.output, _curve_csv(latency.base, header=("t", "s_u")))
    if args.plot:
        from .plots import save_step_curve_figure

        label = f"{args.covariate}={_fmt(args.x)}"
        out.add_figure(
            args.plot,
            lambda p: save_step_curve_figure(
                p, [(label, latency.base)], "Latency estimate", ylabel="S_u(t)"
            ),
        )


def _cmd_bandwidth(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    eval_points = (
        np.array(_parse_floats(args.x, "--x"))
        if args.x is not None
        else nonparametric.default_eval_points(sample, args.covariate)
    )
    grid = (
        np.array(_parse_floats(args.grid, "--grid"))
        if args.grid is not None
        else nonparametric.default_bandwidth_grid(sample, args.covariate)
    )
    selected = nonparametric.bootstrap_bandwidth(
        sample,
        args.covariate,
        eval_points=eval_points,
        grid=grid,
        n_boot=args.resamples,
        seed=args.seed,
        kernel=_kernel_of(args),
    )
    buf = io.StringIO()
    buf.write("x,h\n")
    for x, h in zip(eval_points, selected):
        buf.write(f"{_fmt(x)},{_fmt(h)}\n")
    out.add_text(args.output, buf.getvalue())


def _cmd_mz_test(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    report = maller_zhou_test(sample)
    result = {
        "statistic": report.statistic,
        "p_value": report.p_value,
        "method": report.method,
        "calibration": report.calibration,
    }
    if report.note:
        result["note"] = report.note
    out.add_text(args.output, _report_text(args, result))


def _cmd_cov_test(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    report = covariate_cure_test(
        sample, args.covariate, n_permutations=args.permutations, seed=args.seed
    )
    result = {
        "statistic": report.statistic,
        "p_value": report.p_value,
        "method": report.method,
        "calibration": report.calibration,
        "n_permutations": report.n_permutations,
        "seed": report.seed,
    }
    if report.note:
        result["note"] = report.note
    out.add_text(args.output, _report_text(args, result))


def _cmd_fit(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    inc_names = [s for s in (args.incidence_covariates or "").split(",") if s]
    lat_names = [s for s in (args.latency_covariates or "").split(",") if s]
    fit = fit_mle(
        sample,
        LinkFunction(args.link),
        inc_names,
        lat_names,
        max_iter=args.max_iter,
        tol=args.tol,
        n_starts=args.n_starts,
        seed=args.seed,
        force_susceptible=args.force_susceptible,
    )
    result = {
        "link": fit.link.value,
        "incidence_covariates": list(fit.incidence_covariates),
        "latency_covariates": list(fit.latency_covariates),
        "incidence_coefs": fit.incidence_coefs,
        "latency_coefs": fit.latency_coefs,
        "shape_k": fit.shape_k,
        "log_likelihood": fit.log_likelihood,
        "converged": fit.converged,
        "n_iterations": fit.n_iterations,
    }
    out.add_text(args.output, _report_text(args, result))


def _coefs_to_spec(values: list[float], flag: str) -> tuple[float, float, float]:
    if not 1 <= len(values) <= 3:
        raise DataError(f"{flag}: expected 1 to 3 values (intercept[,age[,sex]])")
    padded = values + [0.0] * (3 - len(values))
    return padded[0], padded[1], padded[2]


def _cmd_simulate(args, out: _Outputs) -> None:
    lo_hi = _parse_floats(args.age_range, "--age-range")
    if len(lo_hi) != 2:
        raise DataError("--age-range: expected LO,HI")
    law, _, param = args.censoring.partition(":")
    if not param:
        raise DataError("--censoring: expected exponential:RATE or uniform:TAU")
    value = _parse_floats(param, "--censoring")[0]
    if law == "exponential":
        censoring = CensoringSpec(law="exponential", rate=value)
    elif law == "uniform":
        censoring = CensoringSpec(law="uniform", tau=value)
    else:
        raise DataError(f"--censoring: unknown law {law!r}")
    i0, i_age, i_sex = _coefs_to_spec(
        _parse_floats(args.incidence_coefs, "--incidence-coefs"), "--incidence-coefs"
    )
    l0, l_age, l_sex = _coefs_to_spec(
        _parse_floats(args.latency_coefs, "--latency-coefs"), "--latency-coefs"
    )
    spec = SimulationSpec(
        n=args.n,
        age_range=(lo_hi[0], lo_hi[1]),
        sex_prob=args.sex_prob,
        incidence=IncidenceSpec(
            link=LinkFunction(args.link), intercept=i0, age_coef=i_age, sex_coef=i_sex
        ),
        latency=LatencySpec(intercept=l0, age_coef=l_age, sex_coef=l_sex, shape=args.shape),
        censoring=censoring,
        seed=args.seed,
    )
    sample, truth = simulate(spec)
    buf = io.StringIO()
    buf.write("time,delta,age,sex\n")
    for i in range(sample.n):
        buf.write(
            f"{_fmt(sample.times[i])},{int(sample.deltas[i])},"
            f"{_fmt(sample.covariates['age'][i])},{_fmt(sample.covariates['sex'][i])}\n"
        )
    out.add_text(args.output, buf.getvalue())
    tbuf = io.StringIO()
    tbuf.write("susceptible,event_time,censor_time,p\n")
    for i in range(sample.n):
        tbuf.write(
            f"{int(truth.susceptible[i])},{_fmt(truth.event_times[i])},"
            f"{_fmt(truth.censor_times[i])},{_fmt(truth.susceptibility_prob[i])}\n"
        )
    out.add_text(args.truth, tbuf.getvalue())


def _cmd_jitter(args, out: _Outputs) -> None:
    sample = read_sample_csv(args.input)
    jittered = jitter_times(sample, args.seed)
    names = list(jittered.covariates)
    buf = io.StringIO()
    buf.write(",".join(["time", "delta", *names]) + "\n")
    for i in range(jittered.n):
        row = [_fmt(jittered.times[i]), str(int(jittered.deltas[i]))]
        row += [_fmt(jittered.covariates[name][i]) for name in names]
        buf.write(",".join(row) + "\n")
    out.add_text(args.output, buf.getvalue())


def _cmd_ingest(args, out: _Outputs) -> None:
    sample = _load_records_sample(args)
    buf = io.StringIO()
    buf.write("time,delta,age,sex\n")
    for i in range(sample.n):
        buf.write(
            f"{_fmt(sample.times[i])},{int(sample.deltas[i])},"
            f"{_fmt(sample.covariates['age'][i])},{_fmt(sample.covariates['sex'][i])}\n"
        )
    out.add_text(args.output, buf.getvalue())


def _cmd_summary(args, out: _Outputs) -> int:
    if (args.input is None) == (args.records is None):
        raise DataError("give exactly one of --input (sample CSV) or --records (patient CSV)")
    if args.records is not None:
        if not args.window_start or not args.window_end:
            raise DataError("--records needs --window-start and --window-end")
        sample = _load_records_sample(args)
    else:
        sample = read_sample_csv(args.input)
    stats = summary_stats(sample).as_dict()
    if args.format == "json":
        text = _report_text(args, stats)
    else:
        lines = []
        for key, value in stats.items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    rendered = _fmt(v) if isinstance(v, float) else v
                    lines.append(f"{key}[{sub}]: {rendered}")
            elif isinstance(value, float):
                lines.append(f"{key}: {_fmt(value)}")
            else:
                lines.append(f"{key}: {value}")
        text = "\n".join(lines) + "\n"
    if args.output:
        out.add_text(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curekit",
        description="Right-censored survival estimation and mixture cure models.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text, stochastic=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func, stochastic=stochastic)
        return p

    p = add("km", _cmd_km, "Kaplan-Meier survival curve")
    p.add_argument("--input", type=Path, required=True, help="sample CSV (time,delta,...)")
    p.add_argument("--output", type=Path, required=True, help="curve CSV to write")
    p.add_argument("--plot", type=Path, help="also render the curve to this image file")

    p = add("beran", _cmd_beran, "conditional survival curve at a covariate value")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--covariate", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--kernel", choices=[k.value for k in Kernel], default=Kernel.EPANECHNIKOV.value)
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--plot", type=Path)

    p = add("cure-rate", _cmd_cure_rate, "cure probability, optionally along a covariate")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--covariate")
    p.add_argument("--x", help="comma-separated covariate values (default: deciles)")
    p.add_argument("--kernel", choices=[k.value for k in Kernel], default=Kernel.EPANECHNIKOV.value)
    p.add_argument("--bandwidth", help="bandwidth, or one per --x entry")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--plot", type=Path)

    p = add("latency", _cmd_latency, "susceptible survival curve at a covariate value")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--covariate", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--kernel", choices=[k.value for k in Kernel], default=Kernel.EPANECHNIKOV.value)
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--plot", type=Path)

    p = add("bandwidth", _cmd_bandwidth, "bootstrap bandwidth selection", stochastic=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--covariate", required=True)
    p.add_argument("--x", help="comma-separated evaluation points (default: deciles)")
    p.add_argument("--grid", help="comma-separated candidate bandwidths")
    p.add_argument("--resamples", type=int, default=100)
    p.add_argument("--kernel", choices=[k.value for k in Kernel], default=Kernel.EPANECHNIKOV.value)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = add("mz-test", _cmd_mz_test, "test for the existence of a cured fraction")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = add("cov-test", _cmd_cov_test, "permutation test of cure-covariate dependence", stochastic=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--covariate", required=True)
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = add("fit", _cmd_fit, "parametric mixture cure model MLE", stochastic=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--link", choices=[l.value for l in LinkFunction], default=LinkFunction.LOGIT.value)
    p.add_argument("--incidence-covariates", help="comma-separated column names")
    p.add_argument("--latency-covariates", help="comma-separated column names")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--n-starts", type=int, default=5)
    p.add_argument("--force-susceptible", action="store_true", help="pin p = 1 (no cured fraction)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = add("simulate", _cmd_simulate, "generate a mixture cure cohort", stochastic=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--age-range", required=True, help="LO,HI")
    p.add_argument("--sex-prob", type=float, default=0.5)
    p.add_argument("--link", choices=[l.value for l in LinkFunction], default=LinkFunction.LOGIT.value)
    p.add_argument("--incidence-coefs", required=True, help="intercept[,age[,sex]]")
    p.add_argument("--latency-coefs", required=True, help="intercept[,age[,sex]]")
    p.add_argument("--shape", type=float, default=1.0)
    p.add_argument("--censoring", required=True, help="exponential:RATE or uniform:TAU")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", type=Path, required=True, help="sample CSV to write")
    p.add_argument("--truth", type=Path, required=True, help="latent truth CSV to write")

    p = add("jitter", _cmd_jitter, "break tied times with U(-1,1) noise", stochastic=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = add("ingest", _cmd_ingest, "derive a sample CSV from patient records")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--columns", help="schema remap, e.g. id=patient_id,age=edad")
    p.add_argument("--window-start", required=True)
    p.add_argument("--window-end", required=True)
    p.add_argument("--output", type=Path, required=True)

    p = add("summary", _cmd_summary, "describe a sample or patient cohort")
    p.add_argument("--input", type=Path, help="sample CSV")
    p.add_argument("--records", type=Path, help="patient CSV")
    p.add_argument("--columns")
    p.add_argument("--window-start")
    p.add_argument("--window-end")
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.add_argument("--output", type=Path)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "stochastic", False):
        print(f"info: seed={args.seed}", file=sys.stderr)
    out = _Outputs()
    try:
        ret = args.func(args, out)
        out.commit()
        return ret or 0
    except (DataError, ValueError, OSError) as exc:
        out.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
