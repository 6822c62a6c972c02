"""Scenario configuration: INI-style ``.cfg`` files and their validation.

Every key is optional except where noted in :data:`KEY_DOCS`; absent keys take
the defaults of the dataclasses below. Validation errors are raised as
:class:`ConfigError` naming the offending ``section.key``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from .clustering import POLICIES
from .cost import CostWeights
from .environment import GENERATORS, DensityCenter, FieldSpec
from .ga import GaParams
from .hfc import MODES, HfcParams
from .kinematics import VehicleConfig

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "config_hash",
    "bundled_config",
    "KEY_DOCS",
    "SOLVERS",
]

SOLVERS = ("hfc", "ga")


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# (section, key) -> help text; drives both parsing and the CLI help epilog
KEY_DOCS: dict[tuple[str, str], str] = {
    ("field", "width_m"): "field extent along x (m), default 1000",
    ("field", "height_m"): "field extent along y (m), default 1000",
    ("field", "grid_resolution_m"): "density/mask cell size (m), default 5",
    ("field", "generator"): "density generator: gaussian | literal",
    ("field", "depth_m"): "operating depth assigned to every task (m), default 0",
    ("field", "hotspots"): "'x y radius intensity' entries separated by ';'",
    ("field", "random_hotspots"): "extra hotspots drawn from the seed, default 0",
    ("field", "radius_range_m"): "'lo hi' radius range for random hotspots",
    ("field", "intensity_range"): "'lo hi' intensity range for random hotspots",
    ("field", "mask"): "run-length land mask rows, one per line, e.g. '40*120.80#'",
    ("tasks", "count"): "number of task spots, default 90",
    ("tasks", "injection_time_s"): "fixed injection time per task (s); blank draws from the range",
    ("tasks", "injection_range_s"): "'lo hi' injection time range (s), default '60 90'",
    ("tasks", "priority_range"): "'lo hi' inclusive integer priority range, default '1 100'",
    ("fleet", "vehicles"): "number of identical vehicles, default 3",
    ("fleet", "speed_mps"): "cruise speed (m/s), default 1",
    ("fleet", "battery_time_s"): "battery life-time per vehicle (s), default 3600",
    ("fleet", "start"): "'x y z' start station, default '0 0 0'",
    ("fleet", "goal"): "'x y z' rendezvous station, default: same as start",
    ("solver", "name"): "hfc | ga",
    ("solver", "mode"): "hfc operator set: ncm1 | ncm2 | cm",
    ("solver", "clustering"): "kmeans | fcm_max | fcm_roulette",
    ("solver", "seed"): "master seed for every random stream, default 42",
    ("hfc", "population_size"): "individuals N, default 100",
    ("hfc", "max_iter"): "iterations t, default 150",
    ("hfc", "screening_sample"): "individuals screened per iteration, at most 1% of N (default)",
    ("ga", "population_size"): "GA population, default: hfc.population_size",
    ("ga", "max_iter"): "GA generations, default: hfc.max_iter",
    ("ga", "crossover_rate"): "PMX probability per child, default 0.8",
    ("ga", "mutation_rate"): "mutation probability per child, default 0.2",
    ("weights", "lambda1"): "weight of |T_mission - T_battery|",
    ("weights", "lambda2"): "weight of 1 / priority sum",
    ("weights", "lambda3"): "weight of the overtime penalty",
    ("weights", "epsilon"): "overtime penalty factor",
    ("weights", "empty_priority_ceiling"): "stand-in for 1 / priority sum on empty routes",
    ("montecarlo", "runs"): "Monte Carlo repetitions, default 30",
    ("montecarlo", "deform_std_m"): "hotspot centre noise std (m), default 50",
    ("montecarlo", "task_jitter_m"): "task position noise std (m), default deform_std_m / 5",
}


@dataclass(frozen=True)
class ScenarioConfig:
    field_spec: FieldSpec = field(default_factory=FieldSpec)
    task_count: int = 90
    injection_time_s: float | None = 90.0
    injection_range_s: tuple[float, float] = (60.0, 90.0)
    priority_range: tuple[int, int] = (1, 100)
    n_vehicles: int = 3
    speed_mps: float = 1.0
    battery_time_s: float = 3600.0
    start_xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)
    goal_xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)
    solver: str = "hfc"
    mode: str = "cm"
    clustering: str = "kmeans"
    seed: int = 42
    hfc: HfcParams = field(default_factory=HfcParams)
    ga: GaParams = field(default_factory=GaParams)
    weights: CostWeights = field(default_factory=CostWeights)
    mc_runs: int = 30
    deform_std_m: float = 50.0
    task_jitter_m: float | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigError("solver.name", f"unknown solver {self.solver!r}")
        if self.mode not in MODES:
            raise ConfigError("solver.mode", f"unknown mode {self.mode!r}")
        if self.clustering not in POLICIES:
            raise ConfigError("solver.clustering", f"unknown policy {self.clustering!r}")
        if self.task_count < 0:
            raise ConfigError("tasks.count", "must be non-negative")
        if self.n_vehicles < 1:
            raise ConfigError("fleet.vehicles", "need at least one vehicle")
        if 0 < self.task_count < self.n_vehicles:
            raise ConfigError("tasks.count", f"fewer tasks than vehicles ({self.n_vehicles})")
        if not self.speed_mps > 0:
            raise ConfigError("fleet.speed_mps", "must be positive")
        if not self.battery_time_s > 0:
            raise ConfigError("fleet.battery_time_s", "must be positive")
        if self.mc_runs < 1:
            raise ConfigError("montecarlo.runs", "must be at least 1")
        if self.deform_std_m < 0:
            raise ConfigError("montecarlo.deform_std_m", "must be non-negative")
        if self.task_jitter_m is not None and self.task_jitter_m < 0:
            raise ConfigError("montecarlo.task_jitter_m", "must be non-negative")
        lo, hi = self.priority_range
        if not 1 <= lo <= hi:
            raise ConfigError("tasks.priority_range", "need 1 <= lo <= hi")
        lo, hi = self.injection_range_s
        if not 0 <= lo <= hi:
            raise ConfigError("tasks.injection_range_s", "need 0 <= lo <= hi")
        if self.injection_time_s is not None and self.injection_time_s < 0:
            raise ConfigError("tasks.injection_time_s", "must be non-negative")
        for name, pt in (("fleet.start", self.start_xyz), ("fleet.goal", self.goal_xyz)):
            x, y = pt[0], pt[1]
            if not (0 <= x <= self.field_spec.width_m and 0 <= y <= self.field_spec.height_m):
                raise ConfigError(name, f"station {pt} lies outside the field")

    def fleet(self) -> list[VehicleConfig]:
        return [VehicleConfig(i + 1, self.speed_mps, self.battery_time_s,
                              self.start_xyz, self.goal_xyz) for i in range(self.n_vehicles)]

    @property
    def jitter_m(self) -> float:
        return self.deform_std_m / 5 if self.task_jitter_m is None else self.task_jitter_m

    def with_overrides(self, **kw) -> "ScenarioConfig":
        """Copy with CLI-level overrides; ``iters`` sets both solvers' budgets."""
        cfg = self
        if kw.get("seed") is not None:
            seed = int(kw["seed"])
            cfg = replace(cfg, seed=seed, hfc=replace(cfg.hfc, seed=seed), ga=replace(cfg.ga, seed=seed))
        if kw.get("mode") is not None:
            mode = kw["mode"].lower()
            if mode not in MODES:
                raise ConfigError("solver.mode", f"unknown mode {mode!r}")
            o, s, c = MODES[mode]
            cfg = replace(cfg, mode=mode, hfc=replace(cfg.hfc, ordering_on=o, screening_on=s,
                                                       cooperation_on=c))
        if kw.get("solver") is not None:
            cfg = replace(cfg, solver=kw["solver"])
        if kw.get("iters") is not None:
            it = int(kw["iters"])
            if it < 1:
                raise ConfigError("hfc.max_iter", "must be at least 1")
            cfg = replace(cfg, hfc=replace(cfg.hfc, max_iter=it), ga=replace(cfg.ga, max_iter=it))
        if kw.get("runs") is not None:
            cfg = replace(cfg, mc_runs=int(kw["runs"]))
        if kw.get("deform_std") is not None:
            cfg = replace(cfg, deform_std_m=float(kw["deform_std"]))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["field_spec"]["hotspots"] = [list(asdict(h).values()) for h in self.field_spec.hotspots]
        return d


def config_hash(config: ScenarioConfig) -> str:
    """Digest of the canonical JSON form of ``config`` plus the package version."""
    from . import __version__

    blob = json.dumps({"config": config.to_dict(), "version": __version__},
                      sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _floats(text: str, key: str, n: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(key, f"expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(key, f"expected {n} numbers, got {len(vals)}")
    return vals


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.p = parser
        known = {s for s, _ in KEY_DOCS}
        for section in parser.sections():
            if section not in known:
                raise ConfigError(section, "unknown section")
            for key in parser[section]:
                if (section, key) not in KEY_DOCS:
                    raise ConfigError(f"{section}.{key}", "unknown key")

    def has(self, s: str, k: str) -> bool:
        return self.p.has_option(s, k)

    def raw(self, s: str, k: str) -> str:
        return self.p.get(s, k).strip()

    def num(self, s, k, default, cast=float):
        if not self.has(s, k):
            return default
        text = self.raw(s, k)
        try:
            return cast(text)
        except ValueError:
            raise ConfigError(f"{s}.{k}", f"expected {cast.__name__}, got {text!r}") from None

    def vec(self, s, k, n, default):
        if not self.has(s, k):
            return default
        return _floats(self.raw(s, k), f"{s}.{k}", n)

    def word(self, s, k, default):
        return self.raw(s, k).lower() if self.has(s, k) else default


def _hotspots(text: str) -> tuple[DensityCenter, ...]:
    out = []
    for i, chunk in enumerate(c for c in text.replace("\n", ";").split(";") if c.strip()):
        x, y, r, a = _floats(chunk, f"field.hotspots[{i}]", 4)
        try:
            out.append(DensityCenter((x, y), r, a))
        except ValueError as exc:
            raise ConfigError(f"field.hotspots[{i}]", str(exc)) from None
    return tuple(out)


def parse_config(text: str) -> ScenarioConfig:
    # mask rows use '#' for land, so only full-line comments are allowed there
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    r = _Reader(parser)

    generator = r.word("field", "generator", "gaussian")
    if generator not in GENERATORS:
        raise ConfigError("field.generator", f"unknown generator {generator!r}")
    mask = ()
    if r.has("field", "mask"):
        mask = tuple(line.strip() for line in r.raw("field", "mask").splitlines() if line.strip())
    spec = FieldSpec(
        width_m=r.num("field", "width_m", 1000.0),
        height_m=r.num("field", "height_m", 1000.0),
        grid_resolution_m=r.num("field", "grid_resolution_m", 5.0),
        hotspots=_hotspots(r.raw("field", "hotspots")) if r.has("field", "hotspots") else (),
        random_hotspots=r.num("field", "random_hotspots", 0, int),
        radius_range_m=r.vec("field", "radius_range_m", 2, (80.0, 200.0)),
        intensity_range=r.vec("field", "intensity_range", 2, (0.5, 1.0)),
        mask_rows=mask,
        generator=generator,
        depth_m=r.num("field", "depth_m", 0.0),
    )
    for key in ("width_m", "height_m", "grid_resolution_m"):
        if not getattr(spec, key) > 0:
            raise ConfigError(f"field.{key}", "must be positive")
    if spec.random_hotspots < 0:
        raise ConfigError("field.random_hotspots", "must be non-negative")
    if not spec.hotspots and not spec.random_hotspots:
        raise ConfigError("field.hotspots", "the field needs at least one hotspot")

    inj = 90.0
    if r.has("tasks", "injection_time_s"):
        inj = None if r.raw("tasks", "injection_time_s") == "" else r.num("tasks", "injection_time_s", 90.0)
    prio = r.vec("tasks", "priority_range", 2, (1, 100))
    if any(p != int(p) for p in prio):
        raise ConfigError("tasks.priority_range", "priorities must be integers")

    start = r.vec("fleet", "start", 3, (0.0, 0.0, 0.0))
    weights_kw = {k: r.num("weights", k, getattr(CostWeights(), k))
                  for k in ("lambda1", "lambda2", "lambda3", "epsilon", "empty_priority_ceiling")}
    try:
        weights = CostWeights(**weights_kw)
    except ValueError as exc:
        raise ConfigError("weights", str(exc)) from None

    mode = r.word("solver", "mode", "cm")
    if mode not in MODES:
        raise ConfigError("solver.mode", f"unknown mode {mode!r}")
    seed = r.num("solver", "seed", 42, int)
    try:
        hfc = HfcParams.for_mode(
            mode,
            population_size=r.num("hfc", "population_size", 100, int),
            max_iter=r.num("hfc", "max_iter", 150, int),
            screening_sample=r.num("hfc", "screening_sample", None, int),
            weights=weights,
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError("hfc", str(exc)) from None
    try:
        ga = GaParams(
            population_size=r.num("ga", "population_size", hfc.population_size, int),
            max_iter=r.num("ga", "max_iter", hfc.max_iter, int),
            crossover_rate=r.num("ga", "crossover_rate", 0.8),
            mutation_rate=r.num("ga", "mutation_rate", 0.2),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError("ga", str(exc)) from None

    jitter = None
    if r.has("montecarlo", "task_jitter_m") and r.raw("montecarlo", "task_jitter_m"):
        jitter = r.num("montecarlo", "task_jitter_m", None)
    return ScenarioConfig(
        field_spec=spec,
        task_count=r.num("tasks", "count", 90, int),
        injection_time_s=inj,
        injection_range_s=r.vec("tasks", "injection_range_s", 2, (60.0, 90.0)),
        priority_range=(int(prio[0]), int(prio[1])),
        n_vehicles=r.num("fleet", "vehicles", 3, int),
        speed_mps=r.num("fleet", "speed_mps", 1.0),
        battery_time_s=r.num("fleet", "battery_time_s", 3600.0),
        start_xyz=start,
        goal_xyz=r.vec("fleet", "goal", 3, start),
        solver=r.word("solver", "name", "hfc"),
        mode=mode,
        clustering=r.word("solver", "clustering", "kmeans"),
        seed=seed,
        hfc=hfc,
        ga=ga,
        weights=weights,
        mc_runs=r.num("montecarlo", "runs", 30, int),
        deform_std_m=r.num("montecarlo", "deform_std_m", 50.0),
        task_jitter_m=jitter,
    )


def bundled_config(name: str = "canonical_s4.cfg") -> Path | None:
    """Path of a config shipped with the package, or ``None``."""
    ref = resources.files("fleet_hfc") / "configs" / name
    return Path(str(ref)) if ref.is_file() else None


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a ``.cfg`` file; bare names of bundled configs are accepted too."""
    p = Path(path)
    if not p.is_file():
        bundled = bundled_config(p.name) if p.parent == Path(".") else None
        if bundled is None:
            raise ConfigError("config", f"cannot read config file {str(path)!r}")
        p = bundled
    return parse_config(p.read_text())
