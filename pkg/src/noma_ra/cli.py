"""Command line front end.

Every command resolves a seed (``--seed``, else the ``NOMA_RA_SEED``
environment variable, else 0), writes delimited text with exact headers,
and drops a small JSON manifest next to its primary output naming the
command, its parameters and every file written.  Identical invocations
produce byte-identical files, figures included.

Exit codes: 0 success, 2 usage or config error, 3 internal check failure.
"""

from __future__ import annotations

import functools
import json
import math
import os
import re
import sys
from pathlib import Path

import click

from . import __version__
from .analytic import (
    SystemConfig,
    capture_throughput_binomial,
    capture_throughput_poisson,
    msaloha_throughput_binomial,
    msaloha_throughput_poisson,
    throughput_binomial,
    throughput_poisson,
)
from .barring import ScenarioError, load_scenario, run_barring_scenario
from .optimizer import max_gain_ratio, optimal_lambda
from .plotting import (
    barring_figure,
    curve_figure,
    gain_figure,
    save_figure,
    sweep_figure,
)
from .simulator import (
    BernoulliUsers,
    CaptureSemantics,
    PoissonPerLevel,
    Scheme,
    _TraceSink,
    run_fixed_load,
)

ENV_SEED = "NOMA_RA_SEED"

_SCHEMES = {
    "noma": Scheme.NOMA_RA,
    "msaloha": Scheme.MS_ALOHA,
    "capture": Scheme.MS_ALOHA_CAPTURE,
}

_CAPTURE_SEMANTICS = {
    "physical": CaptureSemantics.PHYSICAL,
    "paper": CaptureSemantics.FORMULA,
}


def _fmt(value: float) -> str:
    """Full round-trip precision, stable for diffing."""
    return repr(float(value))


def _guarded(func):
    """Map failed internal checks to exit code 3, distinct from usage errors."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (AssertionError, RuntimeError) as exc:
            click.echo(f"internal check failed: {exc}", err=True)
            sys.exit(3)

    return wrapper


def resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise click.UsageError(
            f"{ENV_SEED} must be an integer, got {raw!r}"
        ) from None


def write_manifest(
    command: str,
    parameters: dict[str, object],
    seed: int,
    outputs: list[Path],
) -> Path:
    """Drop a manifest next to the primary output.

    Output files are recorded by basename only, so a run is byte-identical
    no matter which directory it lands in.
    """
    primary = outputs[0]
    path = primary.with_name(primary.stem + ".manifest.json")
    doc = {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "tool_version": __version__,
        "output_paths": [p.name for p in outputs],
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise click.UsageError(f"grid must be START:STOP:STEP, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise click.UsageError(
            f"grid must be numeric START:STOP:STEP, got {spec!r}"
        ) from None
    if not start < stop:
        raise click.UsageError(f"grid start must be below stop, got {spec!r}")
    if step <= 0:
        raise click.UsageError(f"grid step must be > 0, got {spec!r}")
    points = []
    k = 0
    while True:
        x = start + k * step
        if x > stop + 1e-9:
            return points
        points.append(x)
        k += 1


def _parse_level_spec(spec: str) -> list[int]:
    if m := re.fullmatch(r"(\d+)", spec):
        values = [int(m.group(1))]
    elif m := re.fullmatch(r"(\d+)\.\.(\d+)", spec):
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise click.UsageError(f"empty level range {spec!r}")
        values = list(range(lo, hi + 1))
    else:
        raise click.UsageError(
            f"level spec must be an integer or LO..HI, got {spec!r}"
        )
    if values[0] < 1:
        raise click.UsageError(f"level count must be >= 1, got {spec!r}")
    return values


def _parse_arrivals(spec: str):
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise click.UsageError(
            f"arrivals must be poisson:RATE or binomial:USERS[,P], got {spec!r}"
        )
    try:
        if kind == "poisson":
            return PoissonPerLevel(rate=float(rest))
        if kind == "binomial":
            users_str, sep, p_str = rest.partition(",")
            users = int(users_str)
            p = float(p_str) if sep else 1.0
            return BernoulliUsers(users=users, p_access=p)
    except ValueError as exc:
        raise click.UsageError(f"bad arrivals spec {spec!r}: {exc}") from None
    raise click.UsageError(
        f"arrivals kind must be poisson or binomial, got {kind!r}"
    )


@click.group()
@click.version_option(version=__version__, prog_name="noma-ra")
def main() -> None:
    """Throughput analysis, simulation and adaptive barring for layered random access."""


@main.command()
@click.option(
    "--model",
    type=click.Choice(["poisson", "binomial"]),
    default="poisson",
    show_default=True,
    help="arrival law behind the curve",
)
@click.option(
    "--scheme",
    type=click.Choice(sorted(_SCHEMES)),
    default="noma",
    show_default=True,
)
@click.option("--n", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--l", type=click.IntRange(min=1), default=4, show_default=True)
@click.option(
    "--grid",
    default="0:6:0.05",
    show_default=True,
    help="offered load per channel, START:STOP:STEP",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
)
@click.option("--plot/--no-plot", default=True, show_default=True)
@_guarded
def curves(
    model: str, scheme: str, n: int, l: int, grid: str, out: Path, plot: bool
) -> None:
    """Normalized throughput versus offered load, one scheme per file."""
    xs = _parse_grid(grid)
    cfg = SystemConfig(n_channels=n, n_levels=l)
    rows: list[tuple[float, float]] = []
    if model == "poisson":
        for x in xs:
            if scheme == "noma":
                t = throughput_poisson(x / l, cfg)
            elif scheme == "msaloha":
                t = msaloha_throughput_poisson(x, n)
            else:
                t = capture_throughput_poisson(x, cfg)
            rows.append((x, t / n))
    else:
        seen: set[int] = set()
        for x in xs:
            u = round(x * n)
            if u in seen:
                continue
            seen.add(u)
            if scheme == "noma":
                t = throughput_binomial(u, cfg)
            elif scheme == "msaloha":
                t = msaloha_throughput_binomial(u, n)
            else:
                t = capture_throughput_binomial(u, cfg)
            rows.append((u / n, t / n))
    lines = ["load,normalized_throughput"]
    lines.extend(f"{_fmt(x)},{_fmt(t)}" for x, t in rows)
    out.write_text("\n".join(lines) + "\n")
    outputs = [out]
    if plot:
        fig = curve_figure(
            [(scheme, [r[0] for r in rows], [r[1] for r in rows])],
            xlabel="offered load per channel",
            ylabel="normalized throughput",
            title=f"{scheme}, n={n}, l={l}, {model} arrivals",
        )
        png = out.with_suffix(".png")
        save_figure(fig, png)
        outputs.append(png)
    write_manifest(
        "curves",
        {"model": model, "scheme": scheme, "n": n, "l": l, "grid": grid},
        seed=0,
        outputs=outputs,
    )


@main.command()
@click.option("--n", type=click.IntRange(min=1), default=10, show_default=True)
@click.option(
    "--l",
    "level_spec",
    default="4",
    show_default=True,
    help="level count, or LO..HI for a sweep",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="report destination; required for a sweep",
)
@click.option("--plot/--no-plot", default=True, show_default=True)
@_guarded
def optimal(n: int, level_spec: str, out: Path | None, plot: bool) -> None:
    """Optimal offered load and what the system does there."""
    levels = _parse_level_spec(level_spec)
    if len(levels) == 1:
        l = levels[0]
        point = optimal_lambda(SystemConfig(n_channels=n, n_levels=l))
        u_star = round(point.channel_load_star * n)
        report = "\n".join(
            [
                f"lambda_star = {_fmt(point.lambda_star)}",
                f"channel_load_star = {_fmt(point.channel_load_star)}",
                f"max_normalized_throughput = {_fmt(point.max_normalized_throughput)}",
                f"idle_threshold = {_fmt(point.idle_threshold)}",
                f"u_star = {u_star}",
                f"gain = {_fmt(max_gain_ratio(l))}",
            ]
        )
        click.echo(report)
        if out is not None:
            out.write_text(report + "\n")
            write_manifest(
                "optimal", {"n": n, "l": level_spec}, seed=0, outputs=[out]
            )
        return
    if out is None:
        raise click.UsageError("a level sweep needs --out")
    lines = ["l,lambda_star,channel_load_star,max_norm_throughput,gain"]
    channel_loads = []
    norm_ts = []
    for l in levels:
        point = optimal_lambda(SystemConfig(n_channels=n, n_levels=l))
        gain = max_gain_ratio(l)
        channel_loads.append(point.channel_load_star)
        norm_ts.append(point.max_normalized_throughput)
        lines.append(
            f"{l},{_fmt(point.lambda_star)},{_fmt(point.channel_load_star)},"
            f"{_fmt(point.max_normalized_throughput)},{_fmt(gain)}"
        )
    out.write_text("\n".join(lines) + "\n")
    outputs = [out]
    if plot:
        png = out.with_suffix(".png")
        save_figure(sweep_figure(levels, channel_loads, norm_ts), png)
        outputs.append(png)
    write_manifest(
        "optimal", {"n": n, "l": level_spec}, seed=0, outputs=outputs
    )


@main.command()
@click.option(
    "--scheme",
    type=click.Choice(sorted(_SCHEMES)),
    default="noma",
    show_default=True,
)
@click.option("--n", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--l", type=click.IntRange(min=1), default=4, show_default=True)
@click.option(
    "--arrivals",
    required=True,
    help="poisson:RATE (rate per level) or binomial:USERS[,P]",
)
@click.option(
    "--slots", type=click.IntRange(min=1), default=100_000, show_default=True
)
@click.option("--seed", type=int, default=None, help=f"overrides ${ENV_SEED}")
@click.option(
    "--capture-semantics",
    type=click.Choice(sorted(_CAPTURE_SEMANTICS)),
    default="physical",
    show_default=True,
    help="how a lone packet on the weakest level is scored under capture",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
)
@click.option(
    "--trace",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="also write per-slot, per-channel outcomes",
)
@_guarded
def simulate(
    scheme: str,
    n: int,
    l: int,
    arrivals: str,
    slots: int,
    seed: int | None,
    capture_semantics: str,
    out: Path,
    trace: Path | None,
) -> None:
    """One seeded Monte Carlo run, summarized as a single row."""
    cfg = SystemConfig(n_channels=n, n_levels=l)
    model = _parse_arrivals(arrivals)
    run_seed = resolve_seed(seed)
    scheme_val = _SCHEMES[scheme]
    semantics = _CAPTURE_SEMANTICS[capture_semantics]
    sink = _TraceSink() if trace is not None else None
    stats = run_fixed_load(
        cfg,
        model,
        scheme_val,
        slots=slots,
        seed=run_seed,
        capture_semantics=semantics,
        trace=sink,
    )
    if isinstance(model, PoissonPerLevel):
        load = model.rate * (1 if scheme_val is Scheme.MS_ALOHA else l)
    else:
        load = model.users * model.p_access / n
    lines = [
        "scheme,n,l,load,slots,seed,mean_norm_throughput,idle_freq,std_err",
        ",".join(
            [
                scheme,
                str(n),
                str(l),
                _fmt(load),
                str(slots),
                str(run_seed),
                _fmt(stats.mean_normalized_throughput),
                _fmt(stats.idle_channel_frequency),
                _fmt(stats.std_error),
            ]
        ),
    ]
    out.write_text("\n".join(lines) + "\n")
    outputs = [out]
    if sink is not None:
        trace_lines = ["t,channel,successes,idle,collision_level"]
        trace_lines.extend(
            f"{t},{ch},{s},{int(idle)},{coll}"
            for t, ch, s, idle, coll in sink.rows
        )
        trace.write_text("\n".join(trace_lines) + "\n")
        outputs.append(trace)
    write_manifest(
        "simulate",
        {
            "scheme": scheme,
            "n": n,
            "l": l,
            "arrivals": arrivals,
            "slots": slots,
            "capture_semantics": capture_semantics,
        },
        seed=run_seed,
        outputs=outputs,
    )
    click.echo(
        f"mean_norm_throughput = {_fmt(stats.mean_normalized_throughput)} "
        f"(std_err {_fmt(stats.std_error)})"
    )


@main.command()
@click.option(
    "--config",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
)
@click.option(
    "--barring",
    "barring_override",
    type=bool,
    default=None,
    help="override the config's barring flag",
)
@click.option("--seed", type=int, default=None, help="override the config's seed")
@click.option("--plot/--no-plot", default=True, show_default=True)
@_guarded
def barring(
    config: Path,
    out: Path,
    barring_override: bool | None,
    seed: int | None,
    plot: bool,
) -> None:
    """Closed-loop run of the access controller over a staged population."""
    try:
        scenario = load_scenario(config)
    except ScenarioError as exc:
        raise click.UsageError(str(exc)) from None
    enabled = scenario.barring if barring_override is None else barring_override
    run_seed = scenario.seed if seed is None else seed
    records = run_barring_scenario(
        scenario.cfg,
        scenario.schedule,
        scenario.period_slots,
        seed=run_seed,
        barring_enabled=enabled,
        u_max=scenario.u_max,
    )
    lines = ["period,start_slot,users_total,users_active,t_insta,p_idle_insta,p_access"]
    lines.extend(
        f"{r.period},{r.start_slot},{r.users_total},{r.users_active},"
        f"{_fmt(r.t_insta)},{_fmt(r.p_idle_insta)},{_fmt(r.p_access)}"
        for r in records
    )
    out.write_text("\n".join(lines) + "\n")
    outputs = [out]
    if plot:
        png = out.with_suffix(".png")
        save_figure(barring_figure(records), png)
        outputs.append(png)
    write_manifest(
        "barring",
        {
            "config": config.name,
            "barring": enabled,
            "n": scenario.cfg.n_channels,
            "l": scenario.cfg.n_levels,
            "period_slots": scenario.period_slots,
        },
        seed=run_seed,
        outputs=outputs,
    )


@main.command()
@click.option(
    "--l",
    "level_spec",
    default="1..12",
    show_default=True,
    help="level counts to tabulate, LO..HI or a single value",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
)
@click.option("--plot/--no-plot", default=True, show_default=True)
@_guarded
def compare(level_spec: str, out: Path, plot: bool) -> None:
    """Per-channel scheme maxima and the layered gain, per level count."""
    levels = _parse_level_spec(level_spec)
    msaloha_max = 1.0 / math.e
    lines = ["l,noma_max,msaloha_max,capture_max,gain"]
    gains = []
    for l in levels:
        cfg = SystemConfig(n_channels=1, n_levels=l)
        noma_max = optimal_lambda(cfg).max_throughput
        capture_max = max(
            capture_throughput_poisson(k * 1e-3, cfg) for k in range(12_001)
        )
        gain = max_gain_ratio(l)
        gains.append(gain)
        lines.append(
            f"{l},{_fmt(noma_max)},{_fmt(msaloha_max)},"
            f"{_fmt(capture_max)},{_fmt(gain)}"
        )
    out.write_text("\n".join(lines) + "\n")
    outputs = [out]
    if plot:
        png = out.with_suffix(".png")
        save_figure(gain_figure(levels, gains), png)
        outputs.append(png)
    write_manifest(
        "compare", {"l": level_spec}, seed=0, outputs=outputs
    )


if __name__ == "__main__":
    main()
