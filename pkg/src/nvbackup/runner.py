"""Batch experiments: traces x schedules x strategies x architectures.

Artifacts written to the output directory:

``backup_sizes.csv``
    one row per (trace, schedule instance, strategy) with mean/total words,
    ratios to the paged full-memory baseline and backup/execution times.
``intervals.csv``
    per-interval backup sizes.
``timing.csv``
    per-interval backup/restore seconds (``interval,strategy,backup_s,restore_s``
    after the key columns).
``energy.csv``
    one row per (trace, schedule instance, architecture, tech) with raw
    counts, energy terms and the ratio to the hardware-backup system.
``summary.json``
    means and standard deviations over seeds and over traces.

Floats carry 6 significant digits.  Rows are sorted by key, so output does
not depend on job completion order.
"""
from __future__ import annotations

import csv
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

from .cachesim import CacheConfig, simulate_cache
from .config import ExperimentConfig, ScheduleSpec, StrategySpec, TraceSource, parse_architecture
from .controller import (
    TimingParams,
    backup_time,
    execution_times,
    nvp_backup_time,
    restore_time,
    software_backup_time,
)
from .energy import (
    EnergyParams,
    cache_energy,
    decomposition_percentages,
    energy_nvm_only,
    energy_sram_nvm,
    fit_size_kb,
    leakage_energy,
)
from .errors import NVBackupError, TraceError
from .schedule import FailureSchedule, fixed_schedule, random_schedule
from .strategies import BackupReport, backup_report, data_section_words
from .trace import Trace, footprint, gen_synthetic_trace, load_trace

BACKUP_COLUMNS = [
    "trace", "schedule", "seed", "strategy", "block_size", "n_intervals", "n_failures",
    "distinct_words", "fullmem_words", "total_words", "mean_words", "fullmem_mean_words",
    "normalized", "normalized_distinct", "reduction_pct",
    "backup_s", "fullmem_backup_s", "backup_time_reduction_pct",
    "exec_s", "fullmem_exec_s", "exec_time_reduction_pct",
]
INTERVAL_COLUMNS = ["trace", "schedule", "seed", "interval", "strategy", "block_size", "words_saved"]
TIMING_COLUMNS = ["trace", "schedule", "seed", "interval", "strategy", "backup_s", "restore_s"]
ENERGY_COLUMNS = [
    "trace", "schedule", "seed", "architecture", "tech", "mem_kb", "n_load", "n_store",
    "n_s", "n_r", "n_hit_r", "n_hit_w", "n_miss", "n_evict_words", "n_flush_lines", "n_failures",
    "e_loads", "e_stores", "e_backup", "e_restore", "e_hits", "e_misses", "e_flushes",
    "total_j", "ratio_vs_hw", "e_leakage",
    "pct_backup", "pct_restore", "pct_loads", "pct_stores",
]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _round(value):
    return float(f"{value:.6g}") if isinstance(value, float) else value


def _pct_reduction(value: float, baseline: float) -> float:
    return 100.0 * (1.0 - value / baseline) if baseline else 0.0


# -- loading -----------------------------------------------------------------

@lru_cache(maxsize=8)
def _load_source(source: TraceSource) -> Trace:
    if source.profile is not None:
        return gen_synthetic_trace(source.profile, source.seed)
    return load_trace(source.path)


def make_schedule(spec: ScheduleSpec, last_cycle: int) -> FailureSchedule:
    if spec.kind == "fixed":
        return fixed_schedule(last_cycle, int(spec.value))
    return random_schedule(last_cycle, spec.value, spec.seed)


# -- one job -----------------------------------------------------------------

@dataclass(frozen=True)
class JobResult:
    backup_rows: list
    interval_rows: list
    timing_rows: list
    energy_rows: list
    nvp_rows: list


def _key(trace_name, spec: ScheduleSpec):
    return [trace_name, spec.label, "" if spec.seed is None else spec.seed]


def run_job(config: ExperimentConfig, source: TraceSource, spec: ScheduleSpec) -> JobResult:
    try:
        trace = _load_source(source)
        schedule = make_schedule(spec, trace.last_cycle)
        return evaluate(config, source.name, trace, spec, schedule)
    except NVBackupError as exc:
        cls = TraceError if isinstance(exc, TraceError) else NVBackupError
        raise cls(f"trace {source.name}, schedule {spec.label}: {exc}") from exc


def evaluate(
    config: ExperimentConfig, name: str, trace: Trace, spec: ScheduleSpec, schedule: FailureSchedule
) -> JobResult:
    timing = config.timing
    key = _key(name, spec)
    fp = footprint(trace)
    section = data_section_words(fp)
    mem_words = config.mem_words if config.mem_words is not None else section
    excl = config.exclude_final_interval
    n_fail = schedule.n_failures

    full = backup_report(trace, schedule, "full")
    full_mean = full.mean(excl)
    full_backup_s = software_backup_time(full.failure_words, timing)

    backup_rows, interval_rows, timing_rows = [], [], []
    specs = list(dict.fromkeys(config.strategies))
    for s in specs:
        rep = full if s.strategy == "full" else backup_report(trace, schedule, s.strategy, s.block_size)
        if s.strategy == "full":
            b_s = full_backup_s
            r_word_s = restore_time(mem_words, timing) * timing.k_sw
            per_iv_backup = [software_backup_time(w, timing) for w in rep.per_interval_words]
        else:
            b_s = backup_time(rep.failure_words, timing)
            r_word_s = restore_time(mem_words, timing)
            per_iv_backup = [backup_time(w, timing) for w in rep.per_interval_words]
        times = execution_times(trace, schedule, rep.per_interval_words, timing, mem_words)
        exec_s = times.paged_sw if s.strategy == "full" else times.hw
        mean = rep.mean(excl)
        backup_rows.append(key + [
            s.label, rep.block_size_words, schedule.n_intervals, n_fail,
            fp.distinct_words, section, rep.total(excl), float(mean), float(full_mean),
            mean / full_mean if full_mean else 0.0,
            mean / fp.distinct_words if fp.distinct_words else 0.0,
            _pct_reduction(mean, full_mean),
            float(b_s), float(full_backup_s), _pct_reduction(b_s, full_backup_s),
            float(exec_s), float(times.paged_sw), _pct_reduction(exec_s, times.paged_sw),
        ])
        for i, w in enumerate(rep.per_interval_words):
            failed = i < n_fail
            interval_rows.append(key[:3] + [i, s.label, rep.block_size_words, w])
            timing_rows.append(key[:3] + [
                i, s.label,
                float(per_iv_backup[i]) if failed else 0.0,
                float(r_word_s) if failed else 0.0,
            ])

    nvp_s = n_fail * nvp_backup_time(section * 4)
    nvp_rows = [key + [float(nvp_s), float(full_backup_s), _pct_reduction(nvp_s, full_backup_s)]]

    energy_rows = _energy_rows(config, key, trace, schedule, fp, mem_words, full)
    return JobResult(backup_rows, interval_rows, timing_rows, energy_rows, nvp_rows)


def _energy_rows(config, key, trace, schedule, fp, mem_words, full: BackupReport):
    params: EnergyParams = config.params
    n_fail = schedule.n_failures
    mem_kb = fit_size_kb(mem_words)
    hw = backup_report(trace, schedule, "mb", config.hw_block)
    n_r = mem_words * n_fail
    leak = leakage_energy(mem_kb, trace.last_cycle + 1 if len(trace) else 0, params)
    archs = list(dict.fromkeys(("sram+nvm:freezer",) + tuple(config.architectures)))
    rows = []
    cache_stats = {}
    for tech in config.techs:
        base = energy_sram_nvm(fp.n_load, fp.n_store, hw.failure_words, n_r, params, mem_kb, tech)
        for arch in archs:
            kind, size = parse_architecture(arch)
            counts = dict.fromkeys(["n_s", "n_r", "n_hit_r", "n_hit_w", "n_miss", "n_evict_words",
                                    "n_flush_lines"], "")
            terms = dict.fromkeys(["e_loads", "e_stores", "e_backup", "e_restore",
                                   "e_hits", "e_misses", "e_flushes"], "")
            e_leak = ""
            pct = dict.fromkeys(["backup", "restore", "loads", "stores"], "")
            if kind == "sram+nvm:freezer" or kind == "sram+nvm:fullmem":
                n_s = hw.failure_words if kind == "sram+nvm:freezer" else full.failure_words
                br = energy_sram_nvm(fp.n_load, fp.n_store, n_s, n_r, params, mem_kb, tech)
                counts.update(n_s=n_s, n_r=n_r)
                terms.update(e_loads=br.e_prog_loads, e_stores=br.e_prog_stores,
                             e_backup=br.e_backup, e_restore=br.e_restore)
                total = br.total
                e_leak = leak
                if total > 0:
                    pct = decomposition_percentages(br)
            elif kind == "nvm-only":
                total = energy_nvm_only(fp.n_load, fp.n_store, params, tech, mem_kb)
                terms.update(e_loads=energy_nvm_only(fp.n_load, 0, params, tech, mem_kb),
                             e_stores=energy_nvm_only(0, fp.n_store, params, tech, mem_kb))
            else:
                if size not in cache_stats:
                    cache_stats[size] = simulate_cache(trace, schedule, CacheConfig(size))
                st = cache_stats[size]
                ce = cache_energy(st, params, n_fail, size // 1024, tech, mem_kb)
                counts.update(n_hit_r=st.n_hit_r, n_hit_w=st.n_hit_w, n_miss=st.n_miss,
                              n_evict_words=st.n_evict_words, n_flush_lines=st.n_flush_lines)
                terms.update(e_hits=ce.hits, e_misses=ce.misses, e_flushes=ce.flushes)
                total = ce.total
            rows.append(key + [
                arch, tech, mem_kb, fp.n_load, fp.n_store, counts["n_s"], counts["n_r"],
                counts["n_hit_r"], counts["n_hit_w"], counts["n_miss"], counts["n_evict_words"],
                counts["n_flush_lines"], n_fail,
                terms["e_loads"], terms["e_stores"], terms["e_backup"], terms["e_restore"],
                terms["e_hits"], terms["e_misses"], terms["e_flushes"],
                float(total), total / base.total if base.total else 0.0, e_leak,
                pct["backup"], pct["restore"], pct["loads"], pct["stores"],
            ])
    return rows


# -- orchestration -----------------------------------------------------------

@dataclass
class RunSummary:
    backup_rows: list
    interval_rows: list
    timing_rows: list
    energy_rows: list
    nvp_rows: list
    summary: dict

    def backup_dicts(self) -> list[dict]:
        return [dict(zip(BACKUP_COLUMNS, r)) for r in self.backup_rows]

    def energy_dicts(self) -> list[dict]:
        return [dict(zip(ENERGY_COLUMNS, r)) for r in self.energy_rows]


def _sort_key(row):
    return tuple((0, x) if isinstance(x, (int, float)) else (1, str(x)) for x in row)


def _run_jobs(config: ExperimentConfig, specs) -> list[JobResult]:
    jobs = [(src, spec) for src in config.traces for spec in specs]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(run_job, config, src, spec) for src, spec in jobs]
            return [f.result() for f in futures]
    return [run_job(config, src, spec) for src, spec in jobs]


def _mean_std(values):
    values = [float(v) for v in values]
    if not values:
        return 0.0, 0.0
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return statistics.fmean(values), std


def _group(rows, columns, keys, metrics):
    """Aggregate ``metrics`` over rows sharing ``keys`` (mean and std)."""
    idx = {c: i for i, c in enumerate(columns)}
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[idx[k]] for k in keys), []).append(r)
    out = []
    for gk in sorted(groups, key=_sort_key):
        rs = groups[gk]
        entry = dict(zip(keys, gk))
        entry["n_runs"] = len(rs)
        for m in metrics:
            vals = [r[idx[m]] for r in rs if r[idx[m]] != ""]
            mean, std = _mean_std(vals)
            entry[f"{m}_mean"] = _round(mean)
            entry[f"{m}_std"] = _round(std)
        out.append(entry)
    return out


def summarize(config: ExperimentConfig, backup_rows, energy_rows, nvp_rows) -> dict:
    backup_metrics = ["mean_words", "normalized", "reduction_pct", "backup_time_reduction_pct",
                      "exec_time_reduction_pct"]
    per_trace = _group(backup_rows, BACKUP_COLUMNS, ["trace", "schedule", "strategy"], backup_metrics)
    avg_rows = [["", e["schedule"], e["strategy"]] + [e[f"{m}_mean"] for m in backup_metrics]
                for e in per_trace]
    avg = _group(avg_rows, ["trace", "schedule", "strategy"] + backup_metrics,
                 ["schedule", "strategy"], backup_metrics)
    energy = _group(energy_rows, ENERGY_COLUMNS, ["trace", "schedule", "architecture", "tech"],
                    ["ratio_vs_hw", "total_j", "pct_backup", "pct_restore", "pct_loads",
                     "pct_stores"])
    e_avg_rows = [["", e["schedule"], e["architecture"], e["tech"], e["ratio_vs_hw_mean"]]
                  for e in energy]
    energy_avg = _group(e_avg_rows, ["trace", "schedule", "architecture", "tech", "ratio"],
                        ["schedule", "architecture", "tech"], ["ratio"])
    nvp = _group(nvp_rows, ["trace", "schedule", "seed", "nvp_s", "fullmem_s", "reduction_pct"],
                 ["trace", "schedule"], ["reduction_pct"])
    return {
        "backup": per_trace,
        "backup_average": avg,
        "energy": energy,
        "energy_average": energy_avg,
        "nvp_backup_time": nvp,
        "k_sw": config.timing.k_sw,
        "k_sw_calibrated": True,
        "exclude_final_interval": config.exclude_final_interval,
    }


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def write_artifacts(result: RunSummary, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "backup_sizes.csv", BACKUP_COLUMNS, result.backup_rows)
    _write_csv(out / "intervals.csv", INTERVAL_COLUMNS, result.interval_rows)
    _write_csv(out / "timing.csv", TIMING_COLUMNS, result.timing_rows)
    _write_csv(out / "energy.csv", ENERGY_COLUMNS, result.energy_rows)
    with open(out / "summary.json", "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(config: ExperimentConfig, specs=None, write: bool = True) -> RunSummary:
    specs = config.schedule_specs() if specs is None else specs
    results = _run_jobs(config, specs)
    rows = {f: [] for f in ("backup_rows", "interval_rows", "timing_rows", "energy_rows", "nvp_rows")}
    for r in results:
        for f in rows:
            rows[f].extend(getattr(r, f))
    for f in rows:
        rows[f].sort(key=_sort_key)
    summary = summarize(config, rows["backup_rows"], rows["energy_rows"], rows["nvp_rows"])
    result = RunSummary(summary=summary, **rows)
    if write and config.output_dir is not None:
        write_artifacts(result, config.output_dir)
    return result


def sweep_interval_lengths(config: ExperimentConfig, n_prog_list, block_size: int | None = None) -> list[dict]:
    """Benchmark-average backup-size reduction of MB(N) for each interval length."""
    n = config.hw_block if block_size is None else block_size
    cfg = replace(config, strategies=(StrategySpec("mb", n),), architectures=(), n_prog=tuple(n_prog_list),
                   failure_prob=())
    specs = [ScheduleSpec("fixed", v) for v in n_prog_list]
    result = run_experiment(cfg, specs, write=False)
    rows = []
    for v in n_prog_list:
        label = ScheduleSpec("fixed", v).label
        sel = [r for r in result.backup_dicts() if r["schedule"] == label]
        reds = [r["reduction_pct"] for r in sel]
        mean, std = _mean_std(reds)
        rows.append({
            "n_prog": int(v),
            "block_size": n,
            "n_traces": len(sel),
            "mean_intervals": statistics.fmean(r["n_intervals"] for r in sel),
            "reduction_pct_mean": mean,
            "reduction_pct_std": std,
            "reduction_pct_min": min(reds),
        })
    return rows


def sweep_seeds(config: ExperimentConfig, block_size: int | None = None) -> list[dict]:
    """Mean and std of MB(N) savings over the random-schedule seeds, per trace and rate."""
    n = config.hw_block if block_size is None else block_size
    cfg = replace(config, strategies=(StrategySpec("mb", n),), architectures=(), n_prog=())
    result = run_experiment(cfg, [s for s in cfg.schedule_specs() if s.kind == "random"], write=False)
    rows = []
    for e in result.summary["backup"]:
        rows.append({
            "trace": e["trace"], "schedule": e["schedule"], "block_size": n, "n_seeds": e["n_runs"],
            "reduction_pct_mean": e["reduction_pct_mean"], "reduction_pct_std": e["reduction_pct_std"],
        })
    return rows


def compare_architectures(config: ExperimentConfig) -> list[dict]:
    """Energy of every architecture normalised to the hardware-backup system."""
    result = run_experiment(config, write=False)
    rows = []
    for e in result.summary["energy"]:
        rows.append({
            "trace": e["trace"], "schedule": e["schedule"], "architecture": e["architecture"],
            "tech": e["tech"], "ratio": e["ratio_vs_hw_mean"],
        })
    for e in result.summary["energy_average"]:
        rows.append({
            "trace": "average", "schedule": e["schedule"], "architecture": e["architecture"],
            "tech": e["tech"], "ratio": e["ratio_mean"],
        })
    return rows


def write_table(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([fmt(r[c]) for c in cols])


__all__ = [
    "RunSummary", "run_experiment", "sweep_interval_lengths", "sweep_seeds", "compare_architectures",
    "write_artifacts", "write_table", "evaluate", "TimingParams",
]
