"""Batch experiment running and reporting.

A plan is an INI file: a ``[plan]`` section naming modes, seeds, and
sweep lists, plus the usual scenario sections overriding the defaults.
Every (scenario, mode, seed) combination becomes one deterministic run;
runs can execute in parallel because they share nothing.  The aggregate
report carries per-combination means and standard deviations and is
re-derivable from the raw per-round CSVs.
"""

from __future__ import annotations

import json
import math
import pathlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .config import ConfigError, ScenarioConfig, read_config_text, scenario_from_parser
from .simulation import MODES, run_scenario, write_run_outputs

MODE_ALIASES = {
    "egscfo": "egscfo",
    "fuzzy-only": "fuzzy-only",
    "fuzzy_only": "fuzzy-only",
    "baseline": "baseline",
    "trust-agnostic": "baseline",
    "trust_agnostic": "baseline",
}

SUMMARY_METRICS = (
    "lifetime", "throughput", "drop_attacks", "delay_attacks",
    "attacks_total", "timely_rate", "effective_energy_rate",
)

_PLAN_KEYS = ("name", "modes", "seeds", "malicious_fractions",
              "node_counts", "areas", "trace")


@dataclass(frozen=True)
class ExperimentPlan:
    """A base scenario plus the sweep grid and run matrix."""

    name: str = "default"
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    modes: tuple = ("egscfo",)
    seeds: tuple = (1,)
    malicious_fractions: tuple = ()
    node_counts: tuple = ()
    areas: tuple = ()  # (width, height) pairs
    trace: bool = False

    def validate(self) -> list[str]:
        problems = []
        if not self.seeds:
            problems.append("seed list must not be empty")
        if not self.modes:
            problems.append("mode list must not be empty")
        for m in self.modes:
            if m not in MODES:
                problems.append(f"unknown mode {m!r}")
        for label, cfg in self.scenarios():
            issues = cfg.validate()
            if issues:
                problems.append(f"scenario {label}: " + "; ".join(issues))
        return problems

    def check(self) -> "ExperimentPlan":
        problems = self.validate()
        if problems:
            raise ConfigError("invalid plan: " + "; ".join(problems))
        return self

    def scenarios(self):
        """The sweep grid as (label, config) pairs."""
        fractions = self.malicious_fractions or (self.base.malicious_fraction,)
        counts = self.node_counts or (self.base.node_count,)
        areas = self.areas or ((self.base.area_width, self.base.area_height),)
        out = []
        for count in counts:
            for width, height in areas:
                for fraction in fractions:
                    label = f"{self.name}-n{count}-a{width:g}x{height:g}-m{round(fraction * 100)}"
                    out.append((label, replace(
                        self.base, node_count=count, area_width=width,
                        area_height=height, malicious_fraction=fraction)))
        return out

    def runs(self):
        """Every (label, config, mode, seed) this plan executes."""
        for label, cfg in self.scenarios():
            for mode in self.modes:
                for seed in self.seeds:
                    yield label, cfg, mode, seed


def _parse_list(raw, conv):
    return tuple(conv(part.strip()) for part in raw.split(",") if part.strip())


def _parse_area(part):
    w, _, h = part.lower().partition("x")
    return float(w), float(h)


def load_plan(path) -> ExperimentPlan:
    """Parse and validate a plan file; an empty file is the default plan."""
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_text(fh.read())


def plan_from_text(text: str) -> ExperimentPlan:
    cp = read_config_text(text)
    kwargs = {}
    if cp.has_section("plan"):
        for key, raw in cp.items("plan"):
            if key not in _PLAN_KEYS:
                raise ConfigError(f"unknown key {key!r} in section [plan]")
        sec = cp["plan"]
        if "name" in sec:
            kwargs["name"] = sec["name"].strip()
        if "modes" in sec:
            modes = []
            for token in _parse_list(sec["modes"], str):
                if token not in MODE_ALIASES:
                    raise ConfigError(f"unknown mode {token!r} in [plan]")
                modes.append(MODE_ALIASES[token])
            kwargs["modes"] = tuple(modes)
        if "seeds" in sec:
            kwargs["seeds"] = _parse_list(sec["seeds"], int)
        if "malicious_fractions" in sec:
            kwargs["malicious_fractions"] = _parse_list(sec["malicious_fractions"], float)
        if "node_counts" in sec:
            kwargs["node_counts"] = _parse_list(sec["node_counts"], int)
        if "areas" in sec:
            kwargs["areas"] = _parse_list(sec["areas"], _parse_area)
        if "trace" in sec:
            kwargs["trace"] = sec.getboolean("trace")
    base = scenario_from_parser(cp, allow_extra=("plan",))
    return ExperimentPlan(base=base, **kwargs).check()


# -- execution -------------------------------------------------------------------


@dataclass
class RunResult:
    label: str
    mode: str
    seed: int
    summary: dict
    cycle_malicious_clusters: list
    error: str | None = None


@dataclass
class AggregateReport:
    """Means and spreads per (scenario, mode), plus per-cycle isolation curves."""

    plan_name: str
    seed_count: int
    entries: list  # one dict per (scenario, mode)
    failures: list

    def to_json(self) -> str:
        return json.dumps({
            "plan_name": self.plan_name,
            "seed_count": self.seed_count,
            "entries": self.entries,
            "failures": self.failures,
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AggregateReport":
        data = json.loads(text)
        return cls(plan_name=data["plan_name"], seed_count=data["seed_count"],
                   entries=data["entries"], failures=data["failures"])


def _execute_one(args):
    label, cfg, mode, seed, out_dir, trace = args
    run_label = f"{label}-{mode}"
    try:
        record = run_scenario(cfg, seed=seed, mode=mode, label=run_label,
                              trace_dir=out_dir if trace else None)
        if out_dir is not None:
            write_run_outputs(record, out_dir)
        return RunResult(label, mode, seed, record.summary,
                         record.cycle_malicious_clusters)
    except Exception as exc:  # per-run isolation: record, keep going
        return RunResult(label, mode, seed, {}, [], error=f"{type(exc).__name__}: {exc}")


def execute(plan: ExperimentPlan, out_dir=None, jobs: int = 1) -> AggregateReport:
    """Run the whole plan and aggregate; raw CSVs land in ``out_dir``."""
    plan.check()
    if out_dir is not None:
        pathlib.Path(out_dir).mkdir(parents=True, exist_ok=True)
    tasks = [(label, cfg, mode, seed, str(out_dir) if out_dir else None, plan.trace)
             for label, cfg, mode, seed in plan.runs()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_one, tasks))
    else:
        results = [_execute_one(t) for t in tasks]
    report = aggregate(plan, results)
    if out_dir is not None:
        path = pathlib.Path(out_dir) / f"{plan.name}-report.json"
        path.write_text(report.to_json() + "\n")
    return report


def _mean_std(values):
    m = sum(values) / len(values)
    if len(values) < 2:
        return m, 0.0
    var = sum((v - m) ** 2 for v in values) / (len(values) - 1)
    return m, math.sqrt(var)


def aggregate(plan: ExperimentPlan, results) -> AggregateReport:
    """Reduce per-run summaries to per-(scenario, mode) statistics."""
    completed = [r for r in results if r.error is None]
    failures = [{"label": r.label, "mode": r.mode, "seed": r.seed, "error": r.error}
                for r in results if r.error is not None]
    groups = {}
    for r in completed:
        groups.setdefault((r.label, r.mode), []).append(r)
    entries = []
    for (label, mode) in sorted(groups):
        runs = sorted(groups[(label, mode)], key=lambda r: r.seed)
        entry = {
            "scenario": label,
            "mode": mode,
            "seeds": [r.seed for r in runs],
            "node_count": _scenario_field(plan, label, "node_count"),
            "area": _scenario_field(plan, label, "area"),
            "malicious_fraction": _scenario_field(plan, label, "malicious_fraction"),
        }
        for metric in SUMMARY_METRICS:
            mean, std = _mean_std([r.summary[metric] for r in runs])
            entry[f"{metric}_mean"] = mean
            entry[f"{metric}_std"] = std
        layers = [r.cycle_malicious_clusters for r in runs]
        depth = max((len(c) for c in layers), default=0)
        entry["cycle_malicious_clusters_mean"] = [
            sum(c[i] for c in layers if len(c) > i)
            / max(sum(1 for c in layers if len(c) > i), 1)
            for i in range(depth)
        ]
        entries.append(entry)
    return AggregateReport(plan_name=plan.name, seed_count=len(plan.seeds),
                           entries=entries, failures=failures)


def _scenario_field(plan, label, name):
    for lab, cfg in plan.scenarios():
        if lab == label:
            if name == "area":
                return f"{cfg.area_width:g}x{cfg.area_height:g}"
            return getattr(cfg, name)
    return None


# -- plot-data emission -----------------------------------------------------------

PLOT_FILES = (
    "malicious_clusters_per_cycle",
    "drop_attacks_vs_malicious_fraction",
    "delay_attacks_vs_malicious_fraction",
    "lifetime",
    "throughput",
    "timely_rate",
    "effective_energy_rate",
    "network_grid",
)


def emit_plots(report: AggregateReport, out_dir) -> list:
    """Write one columnar data file per figure; returns the paths.

    Every file opens with a ``#``-prefixed header naming its columns.
    """
    base = pathlib.Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    paths = []

    def emit(name, header, rows):
        path = base / f"{report.plan_name}-{name}.dat"
        with open(path, "w") as fh:
            fh.write("# " + "\t".join(header) + "\n")
            for row in rows:
                fh.write("\t".join(str(v) for v in row) + "\n")
        paths.append(path)

    rows = []
    for e in report.entries:
        for cycle, value in enumerate(e["cycle_malicious_clusters_mean"]):
            rows.append([e["scenario"], e["mode"], cycle, repr(value)])
    emit("malicious_clusters_per_cycle",
         ["scenario", "mode", "cycle", "malicious_clusters_mean"], rows)

    for metric, name in (
        ("drop_attacks", "drop_attacks_vs_malicious_fraction"),
        ("delay_attacks", "delay_attacks_vs_malicious_fraction"),
    ):
        rows = [[e["malicious_fraction"], e["mode"], e["scenario"],
                 repr(e[f"{metric}_mean"]), repr(e[f"{metric}_std"])]
                for e in report.entries]
        emit(name, ["malicious_fraction", "mode", "scenario", "mean", "std"], rows)

    for metric in ("lifetime", "throughput", "timely_rate", "effective_energy_rate"):
        rows = [[e["scenario"], e["mode"], e["malicious_fraction"],
                 repr(e[f"{metric}_mean"]), repr(e[f"{metric}_std"])]
                for e in report.entries]
        emit(metric, ["scenario", "mode", "malicious_fraction", "mean", "std"], rows)

    rows = [[e["node_count"], e["area"], e["mode"],
             repr(e["attacks_total_mean"]), repr(e["throughput_mean"]),
             repr(e["timely_rate_mean"])]
            for e in report.entries]
    emit("network_grid",
         ["node_count", "area", "mode", "attacks_total_mean",
          "throughput_mean", "timely_rate_mean"], rows)

    return paths
