"""Experiment configuration files.

INI-style, sectioned ``key = value`` text; lists are comma separated::

    [traces]
    fft = traces/fft.trace.gz
    syn = synthetic locality=looped n_events=20000 addr_range_words=4096 seed=3

    [schedule]
    n_prog = 1000000
    failure_prob = 1e-6, 1e-7
    n_seeds = 100
    seed = 0

    [strategies]
    list = full, ua, ma, mb:8, mb:64, oracle, om

    [architectures]
    list = sram+nvm:freezer, sram+nvm:fullmem, nvm-only, cache+nvm:4096
    hw_block = 8

    [energy]
    tech = stt, rram
    params_file = my_params.txt
    mem_words = 8192

    [timing]
    cpu_hz = 24e6
    nvm_period = 125e-9
    k_sw = 13
    t_off_avg = 0.4

    [output]
    dir = results
    exclude_final_interval = false
    jobs = 1

Relative paths are resolved against the directory of the config file.
``[traces] manifest = file`` reads further ``name = path`` lines from a
separate manifest file.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .cachesim import CACHE_SIZES
from .controller import TimingParams
from .energy import NVM_TECHS, EnergyParams
from .errors import ConfigError
from .strategies import MAX_BLOCK_WORDS, STRATEGIES
from .trace import LOCALITIES, SyntheticProfile

ARCH_FIXED = ("sram+nvm:freezer", "sram+nvm:fullmem", "nvm-only")


@dataclass(frozen=True)
class TraceSource:
    name: str
    path: Path | None = None
    profile: SyntheticProfile | None = None
    seed: int = 0


@dataclass(frozen=True)
class StrategySpec:
    strategy: str
    block_size: int = 1

    @property
    def label(self) -> str:
        return f"mb{self.block_size}" if self.strategy == "mb" else self.strategy


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str           # "fixed" or "random"
    value: float        # n_prog cycles or failure probability
    seed: int | None = None

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{int(self.value)}"
        return f"random:{self.value:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    traces: tuple[TraceSource, ...]
    n_prog: tuple[int, ...] = ()
    failure_prob: tuple[float, ...] = ()
    n_seeds: int = 1
    seed: int = 0
    strategies: tuple[StrategySpec, ...] = (StrategySpec("mb", 8),)
    architectures: tuple[str, ...] = ()
    hw_block: int = 8
    techs: tuple[str, ...] = ("stt",)
    params: EnergyParams = field(default_factory=EnergyParams)
    mem_words: int | None = None
    timing: TimingParams = field(default_factory=TimingParams)
    output_dir: Path | None = None
    exclude_final_interval: bool = False
    jobs: int = 1

    def __post_init__(self):
        if not self.traces:
            raise ConfigError("at least one trace is required")
        if not self.n_prog and not self.failure_prob:
            raise ConfigError("at least one schedule (n_prog or failure_prob) is required")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        for n in self.n_prog:
            if n < 1:
                raise ConfigError(f"n_prog must be >= 1, got {n}")
        for p in self.failure_prob:
            if not 0 < p < 1:
                raise ConfigError(f"failure_prob must lie in (0, 1), got {p}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        for s in self.strategies:
            _check_block(s.block_size)
        _check_block(self.hw_block)
        for a in self.architectures:
            parse_architecture(a)
        for t in self.techs:
            if t not in NVM_TECHS:
                raise ConfigError(f"unknown NVM technology {t!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def schedule_specs(self) -> list[ScheduleSpec]:
        specs = [ScheduleSpec("fixed", n) for n in self.n_prog]
        for p in self.failure_prob:
            specs += [ScheduleSpec("random", p, self.seed + k) for k in range(self.n_seeds)]
        return specs


def _check_block(n):
    if n < 1 or n > MAX_BLOCK_WORDS or n & (n - 1):
        raise ConfigError(f"block size must be a power of two in [1, {MAX_BLOCK_WORDS}], got {n}")


def parse_architecture(text: str) -> tuple[str, int | None]:
    if text in ARCH_FIXED:
        return text, None
    kind, _, size = text.partition(":")
    if kind == "cache+nvm":
        try:
            size_b = int(size)
        except ValueError:
            raise ConfigError(f"bad cache size in {text!r}") from None
        if size_b not in CACHE_SIZES:
            raise ConfigError(f"cache size must be one of {CACHE_SIZES}, got {size_b}")
        return kind, size_b
    raise ConfigError(f"unknown architecture {text!r}")


def parse_strategy(text: str) -> StrategySpec:
    text = text.strip().lower()
    name, _, block = text.partition(":")
    if name.startswith("mb") and not block and name[2:].isdigit():
        name, block = "mb", name[2:]
    if name not in STRATEGIES:
        raise ConfigError(f"unknown strategy {text!r}")
    if name == "mb":
        try:
            return StrategySpec("mb", int(block or 1))
        except ValueError:
            raise ConfigError(f"bad block size in {text!r}") from None
    if block:
        raise ConfigError(f"strategy {name!r} takes no block size")
    return StrategySpec(name)


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def _num(value: str, kind, what: str):
    try:
        if kind is int:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        f = float(value)
        if not math.isfinite(f):
            raise ValueError
        return f
    except ValueError:
        raise ConfigError(f"{what}: expected a number, got {value!r}") from None


def parse_synthetic(name: str, spec: str) -> TraceSource:
    fields = {}
    for tok in spec.split()[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ConfigError(f"trace {name}: expected key=value, got {tok!r}")
        fields[key] = val
    seed = _num(fields.pop("seed", "0"), int, f"trace {name} seed")
    kwargs = {}
    ints = ("n_events", "addr_range_words", "base_addr", "loop_window_words", "loop_phase_events")
    for key, val in fields.items():
        if key in ints:
            kwargs[key] = int(val, 0) if key == "base_addr" else _num(val, int, f"trace {name} {key}")
        elif key == "store_fraction":
            kwargs[key] = _num(val, float, f"trace {name} {key}")
        elif key == "locality":
            if val not in LOCALITIES:
                raise ConfigError(f"trace {name}: locality must be one of {LOCALITIES}")
            kwargs[key] = val
        else:
            raise ConfigError(f"trace {name}: unknown synthetic field {key!r}")
    if "n_events" not in kwargs:
        raise ConfigError(f"trace {name}: synthetic traces need n_events")
    try:
        profile = SyntheticProfile(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"trace {name}: {exc}") from None
    return TraceSource(name, profile=profile, seed=seed)


def _trace_sources(items, root: Path) -> list[TraceSource]:
    out = []
    for name, value in items:
        if value.startswith("synthetic"):
            out.append(parse_synthetic(name, value))
        else:
            out.append(TraceSource(name, path=(root / value).resolve()))
    return out


def read_manifest(path: Path) -> list[TraceSource]:
    """``name = path`` per line, paths relative to the manifest."""
    items = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"manifest {path}: bad line {raw!r}")
        items.append((name.strip(), value.strip()))
    return _trace_sources(items, Path(path).parent)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_parser(cp, path.parent)


def loads_config(text: str, root=".") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return config_from_parser(cp, Path(root))


def config_from_parser(cp: configparser.ConfigParser, root: Path) -> ExperimentConfig:
    known = {"traces", "schedule", "strategies", "architectures", "energy", "timing", "output"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    traces: list[TraceSource] = []
    if cp.has_section("traces"):
        items = [(k, v) for k, v in cp.items("traces") if k != "manifest"]
        traces += _trace_sources(items, root)
        if cp.has_option("traces", "manifest"):
            traces += read_manifest(root / cp.get("traces", "manifest"))

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    kw: dict = {"traces": tuple(traces)}
    if (v := get("schedule", "n_prog")) is not None:
        kw["n_prog"] = tuple(_num(x, int, "n_prog") for x in _split(v))
    if (v := get("schedule", "failure_prob")) is not None:
        kw["failure_prob"] = tuple(_num(x, float, "failure_prob") for x in _split(v))
    if (v := get("schedule", "n_seeds")) is not None:
        kw["n_seeds"] = _num(v, int, "n_seeds")
    if (v := get("schedule", "seed")) is not None:
        kw["seed"] = _num(v, int, "seed")
    if (v := get("strategies", "list")) is not None:
        kw["strategies"] = tuple(parse_strategy(s) for s in _split(v))
    if (v := get("architectures", "list")) is not None:
        kw["architectures"] = tuple(_split(v))
    if (v := get("architectures", "hw_block")) is not None:
        kw["hw_block"] = _num(v, int, "hw_block")
    if (v := get("energy", "tech")) is not None:
        kw["techs"] = tuple(t.lower() for t in _split(v))
    if (v := get("energy", "params_file")) is not None:
        try:
            kw["params"] = EnergyParams.loads((root / v).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"energy params_file: {exc}") from None
    if (v := get("energy", "mem_words")) is not None:
        kw["mem_words"] = _num(v, int, "mem_words")

    t = {}
    if (v := get("timing", "cpu_hz")) is not None:
        t["cpu_period"] = 1.0 / _num(v, float, "cpu_hz")
    if (v := get("timing", "nvm_period")) is not None:
        t["nvm_period"] = _num(v, float, "nvm_period")
    if (v := get("timing", "k_sw")) is not None:
        t["k_sw"] = _num(v, float, "k_sw")
    if (v := get("timing", "t_off_avg")) is not None:
        t["t_off_avg"] = _num(v, float, "t_off_avg")
    try:
        kw["timing"] = TimingParams(**t)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"timing: {exc}") from None

    if (v := get("output", "dir")) is not None:
        kw["output_dir"] = (root / v).resolve()
    if (v := get("output", "exclude_final_interval")) is not None:
        try:
            kw["exclude_final_interval"] = cp.getboolean("output", "exclude_final_interval")
        except ValueError:
            raise ConfigError("exclude_final_interval must be a boolean") from None
    if (v := get("output", "jobs")) is not None:
        kw["jobs"] = _num(v, int, "jobs")
    return ExperimentConfig(**kw)
