"""Command line surface for the package.

Commands mirror the library layers: ``limit-fn`` evaluates the limit
functions over a perturbation grid, ``constants`` compares closed-form
subsequence limits against the direct product, ``scan`` sweeps periods
and reports certification verdicts, ``verify`` runs the invariant suites
and ``sudler`` emits direct product trajectories.  Output is CSV with a
``# schema=1`` comment line or JSON; identical invocations produce
identical bytes.  Exit codes: 0 success, 1 usage or validation error,
2 verification failure.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction

import click
from gmpy2 import mpfr

from .bounds import scan as scan_periods
from .cfrac import PeriodSpec, convergents, spectral
from .limitfn import DEFAULT_TOL, c_k_closed, g_limit
from .sudler_direct import sudler_at_convergents, sudler_range
from .verify import all_pass, run_suites

SCHEMA_LINE = "# schema=1"
EMPIRICAL_Q_CAP = 100000
TRAJECTORY_CAP = 10 ** 7
VERDICT_ORDER = ("certified_lt_1", "lt_1_numeric", "ge_1_numeric")


def _parse_period(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise click.UsageError(
            f"period must be comma-separated integers, got {text!r}"
        )


def _spectral_or_usage(digits, k):
    try:
        return spectral(PeriodSpec(digits, k))
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _parse_grid(text: str) -> list[Fraction]:
    parts = text.split(":")
    if len(parts) != 3:
        raise click.UsageError(
            f"grid must look like min:max:step, got {text!r}"
        )
    try:
        mn, mx, step = (Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise click.UsageError(f"grid endpoints must be rational, got {text!r}")
    if step <= 0:
        raise click.UsageError(f"grid step must be > 0, got {step}")
    if mn > mx:
        raise click.UsageError(f"grid min must be <= max, got {text!r}")
    vals = []
    v = mn
    while v <= mx:
        vals.append(v)
        v += step
    return vals


def _parse_int_range(text: str, what: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise click.UsageError(f"{what} must look like lo:hi, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise click.UsageError(f"{what} bounds must be integers, got {text!r}")
    if lo > hi:
        raise click.UsageError(f"{what} needs lo <= hi, got {text!r}")
    return lo, hi


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int,)):
        return str(v)
    return "%.17g" % float(v)


def _json_cell(v):
    if v is None or isinstance(v, (str, int)):
        return v
    return float(v)


def _emit(columns, rows, fmt, out, footer=None):
    if fmt == "csv":
        lines = [SCHEMA_LINE, ",".join(columns)]
        lines += [",".join(_csv_cell(c) for c in row) for row in rows]
        if footer is not None:
            name, counts = footer
            body = ",".join(f"{key}={val}" for key, val in counts.items())
            lines.append(f"# {name}: {body}")
        payload = "\n".join(lines) + "\n"
    else:
        doc = {
            "schema": 1,
            "rows": [
                {col: _json_cell(c) for col, c in zip(columns, row)}
                for row in rows
            ],
        }
        if footer is not None:
            doc[footer[0]] = footer[1]
        payload = json.dumps(doc, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(payload)
    else:
        click.echo(payload, nl=False)


@click.group()
def cli():
    """Sine products over quadratic irrationals: limits, bounds, scans."""


@cli.command("limit-fn")
@click.option("--period", required=True, help="Period digits, e.g. 1,4.")
@click.option("--k", default=1, show_default=True, help="Subsequence offset.")
@click.option("--eps", "eps_grid", default="-1:1:0.01", show_default=True,
              help="Perturbation grid min:max:step, or -ckek for the "
                   "vanishing-prefactor point.")
@click.option("--tol", default=DEFAULT_TOL, show_default=True)
@click.option("--precision-bits", default=128, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", default=None, help="Output path (default stdout).")
def cmd_limit_fn(period, k, eps_grid, tol, precision_bits, fmt, out):
    """Limit function values over a perturbation grid."""
    digits = _parse_period(period)
    sp = _spectral_or_usage(digits, k)
    if eps_grid == "-ckek":
        grid = [-sp.abs_ckek]
    else:
        grid = _parse_grid(eps_grid)
    rows = []
    for eps in grid:
        res = g_limit(sp, eps, tol=tol, precision_bits=precision_bits)
        eps_out = float(eps) if isinstance(eps, Fraction) \
            else float(eps.to_float(64))
        rows.append([eps_out, res.value, res.T, res.tail_bound,
                     "zero" if res.zero_flag else ""])
    _emit(["eps", "value", "T", "tail_bound", "flags"], rows, fmt, out)


@cli.command("constants")
@click.option("--period", required=True, help="Period digits, e.g. 2,3.")
@click.option("--k", default=None, type=int,
              help="Restrict to one offset (default: all).")
@click.option("--tol", default=DEFAULT_TOL, show_default=True)
@click.option("--precision-bits", default=128, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", default=None)
def cmd_constants(period, k, tol, precision_bits, fmt, out):
    """Closed-form limits per offset versus the direct product."""
    digits = _parse_period(period)
    ell = len(digits)
    ks = [k] if k is not None else list(range(1, ell + 1))
    for k_i in ks:
        _spectral_or_usage(digits, k_i)
    points = sudler_at_convergents(PeriodSpec(digits, 1), EMPIRICAL_Q_CAP,
                                   precision_bits=precision_bits)
    rows = []
    for k_i in ks:
        sp = spectral(PeriodSpec(digits, k_i))
        closed = c_k_closed(sp, tol=tol, precision_bits=precision_bits).value
        along = [pt for pt in points if pt.n % ell == k_i % ell]
        pt = along[-1]
        emp = float(pt.at.value)
        rows.append([k_i, closed, emp, abs(closed - emp), pt.q])
    _emit(["k", "C_closed", "C_empirical", "gap", "q_n_used"], rows, fmt, out)


@cli.command("scan")
@click.option("--ell", required=True, type=int, help="Period length.")
@click.option("--max-digit", required=True, type=int, help="Largest digit.")
@click.option("--tol", default=DEFAULT_TOL, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", default=None)
def cmd_scan(ell, max_digit, tol, workers, fmt, out):
    """Sweep canonical periods and report constants with verdicts."""
    try:
        records = scan_periods(ell, max_digit, tol=tol, workers=workers)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    rows = []
    counts = {name: 0 for name in VERDICT_ORDER}
    for rec in records:
        counts[rec.verdict] += 1
        rows.append([
            "-".join(str(d) for d in rec.period),
            rec.k_max,
            rec.q_ell,
            rec.c_kmax,
            rec.upper_bound,
            rec.verdict,
        ])
    _emit(["digits", "k_max", "q_ell", "C_kmax", "upper_bound", "verdict"],
          rows, fmt, out, footer=("verdict_counts", counts))


@cli.command("verify")
@click.option("--corpus", type=click.Choice(["default", "full"]),
              default="default", show_default=True)
@click.option("--suite", "suites", multiple=True,
              help="Run only the named suites (repeatable).")
@click.option("--period", default=None, help="Narrow exact suites to one period.")
@click.option("--seed", default=0, show_default=True)
@click.option("--tol", default=DEFAULT_TOL, show_default=True)
@click.option("--precision-bits", default=128, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def cmd_verify(ctx, corpus, suites, period, seed, tol, precision_bits, out):
    """Run invariant suites; exit 2 if any suite fails."""
    digits = _parse_period(period) if period is not None else None
    try:
        report = run_suites(
            suites=list(suites) or None,
            corpus=corpus,
            seed=seed,
            tol=tol,
            precision_bits=precision_bits,
            period=digits,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    payload = json.dumps(report, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(payload)
    else:
        click.echo(payload, nl=False)
    if not all_pass(report):
        ctx.exit(2)


@cli.command("sudler")
@click.option("--period", required=True, help="Period digits, e.g. 1,5.")
@click.option("--n-range", "--N", "n_range", default=None,
              help="Product sizes lo:hi for the plain trajectory.")
@click.option("--subseq", is_flag=True,
              help="Sample at convergent denominators instead.")
@click.option("--k", default=1, show_default=True,
              help="Offset for --subseq mode.")
@click.option("--m", "m_range", default="1:10", show_default=True,
              help="Period counts lo:hi for --subseq mode.")
@click.option("--precision-bits", default=128, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--out", default=None)
def cmd_sudler(period, n_range, subseq, k, m_range, precision_bits, fmt, out):
    """Direct product values P_N, plain or along a subsequence."""
    digits = _parse_period(period)
    if subseq and n_range is not None:
        raise click.UsageError("--subseq and --N are mutually exclusive")
    if not subseq and n_range is None:
        raise click.UsageError("one of --N or --subseq is required")
    if subseq:
        sp = _spectral_or_usage(digits, k)
        ell = sp.ell
        m_lo, m_hi = _parse_int_range(m_range, "--m")
        if m_lo < 1:
            raise click.UsageError(f"--m needs lo >= 1, got {m_lo}")
        n_hi = m_hi * ell + k
        _, q_tab = convergents(PeriodSpec(digits, 1), n_hi + 1)
        if q_tab[n_hi] > TRAJECTORY_CAP:
            raise click.UsageError(
                f"q at m = {m_hi} is {q_tab[n_hi]}, beyond {TRAJECTORY_CAP}"
            )
        points = {
            pt.n: pt
            for pt in sudler_at_convergents(PeriodSpec(digits, 1),
                                            q_tab[n_hi],
                                            precision_bits=precision_bits)
        }
        rows = []
        for m in range(m_lo, m_hi + 1):
            pt = points[m * ell + k]
            rows.append([m, pt.q, pt.at.value, pt.at.log_value])
        _emit(["m", "q_n", "P", "logP"], rows, fmt, out)
    else:
        lo, hi = _parse_int_range(n_range, "--N")
        if lo < 0:
            raise click.UsageError(f"--N needs lo >= 0, got {lo}")
        if hi > TRAJECTORY_CAP:
            raise click.UsageError(f"--N hi beyond {TRAJECTORY_CAP}")
        try:
            PeriodSpec(digits, 1)
        except ValueError as exc:
            raise click.UsageError(str(exc))
        rows = [
            [n, pv.value, pv.log_value]
            for n, pv in sudler_range(PeriodSpec(digits, 1), lo, hi,
                                      precision_bits=precision_bits)
        ]
        _emit(["N", "P", "logP"], rows, fmt, out)


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
