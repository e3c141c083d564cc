"""Plain-text pipeline configuration (INI-style ``key = value`` sections)."""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path

from .features import DEFAULT_TOL
from .models import DEFAULT_PARAMS, FAMILIES, REGRESSOR_PARAMS
from .solvers import PortfolioConfig

DEFAULTS_TEXT = """\
[run]
seed = 0
jobs = 1

[data]
# file or directory of graphs; formats: auto, edgelist, dimacs, tudataset
input =
format = auto
tudataset_name =

[solvers]
time_limit = 60
local_search_iterations = 50
repeats = 6
alternates = greedy, local_search
# wall: median wall-clock seconds; work: deterministic operation counts
runtime_measure = wall

[features]
tolerance = 1e-8

[train]
test_fraction = 0.2
cv_folds = 5
families = logistic, linear-margin, gradient-boosted-trees
# none, balanced, or two weights "w_not_hard, w_hard"
class_weighting = none
grid_logistic = l2=1e-4,1e-3,1e-2
grid_linear-margin = l2=1e-4,1e-3,1e-2
grid_gradient-boosted-trees = n_trees=50,100; max_depth=2,3
selection_family = linear-margin
# a number or "all"
selection_max_features = all

[arm]
min_support = 0.1
min_confidence = 0.0
antecedent_floor = 0.1
max_antecedent = 4
# quartile edges from "all" instances or only "hard" ones
bin_source = all

[runtime]
test_fraction = 0.2
cv_folds = 5
log_target = false
grid = n_trees=100,200; max_depth=3

[output]
directory = out
"""


class ConfigError(ValueError):
    pass


def parse_grid(text: str) -> dict[str, list[float]]:
    """``"l2=1e-4,1e-3; epochs=500"`` -> ``{"l2": [1e-4, 1e-3], "epochs": [500.0]}``."""
    grid: dict[str, list[float]] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, values = part.partition("=")
        if not sep:
            raise ConfigError(f"grid entry {part!r} lacks '='")
        try:
            grid[key.strip()] = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"grid entry {part!r} has a non-numeric value") from None
        if not grid[key.strip()]:
            raise ConfigError(f"grid entry {part!r} has no values")
    return grid


def _split_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


@dataclass
class PipelineConfig:
    seed: int = 0
    jobs: int = 1
    input: Path | None = None
    format: str = "auto"
    tudataset_name: str | None = None
    portfolio: PortfolioConfig = field(default_factory=PortfolioConfig)
    tolerance: float = DEFAULT_TOL
    test_fraction: float = 0.2
    cv_folds: int = 5
    families: tuple[str, ...] = FAMILIES
    class_weighting: str | tuple[float, float] | None = None
    grids: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    selection_family: str = "linear-margin"
    selection_max_features: int | None = None
    min_support: float = 0.1
    min_confidence: float = 0.0
    antecedent_floor: float = 0.1
    max_antecedent: int = 4
    bin_source: str = "all"
    runtime_test_fraction: float = 0.2
    runtime_cv_folds: int = 5
    log_target: bool = False
    runtime_grid: dict[str, list[float]] = field(default_factory=dict)
    output: Path = Path("out")
    text: str = ""  # normalized source, the basis of the fingerprint

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


def _parser(text: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(DEFAULTS_TEXT)
    if text:
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
    known = configparser.ConfigParser(interpolation=None)
    known.optionxform = str
    known.read_string(DEFAULTS_TEXT)
    for section in cp.sections():
        if not known.has_section(section):
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if not known.has_option(section, key):
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    return cp


def _normalized(cp: configparser.ConfigParser) -> str:
    buf = io.StringIO()
    for section in sorted(cp.sections()):
        buf.write(f"[{section}]\n")
        for key in sorted(cp[section]):
            buf.write(f"{key} = {cp[section][key].strip()}\n")
    return buf.getvalue()


def load_config(path: str | Path | None = None, text: str | None = None,
                overrides: dict[str, dict[str, str]] | None = None) -> PipelineConfig:
    """Defaults, then the file (or ``text``), then ``overrides`` (section -> key -> value)."""
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        text = path.read_text(encoding="utf-8")
    cp = _parser(text)
    for section, values in (overrides or {}).items():
        for key, value in values.items():
            cp[section][key] = str(value)
    try:
        cfg = _build(cp, path.parent if path is not None else None)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    cfg.text = _normalized(cp)
    return cfg


def _fraction(value: float, name: str, closed: bool = False) -> float:
    ok = 0 < value <= 1 if closed else 0 < value < 1
    if not ok:
        raise ConfigError(f"{name} must lie in {'(0, 1]' if closed else '(0, 1)'}, got {value}")
    return value


def _build(cp: configparser.ConfigParser, base: Path | None) -> PipelineConfig:
    run, data, sol, train, arm, rt = (cp[s] for s in ("run", "data", "solvers", "train", "arm", "runtime"))
    seed = run.getint("seed")

    input_path = None
    if data["input"].strip():
        input_path = Path(data["input"].strip())
        if base is not None and not input_path.is_absolute():
            input_path = base / input_path
    fmt = data["format"].strip()
    if fmt not in ("auto", "edgelist", "dimacs", "tudataset"):
        raise ConfigError(f"unknown data format {fmt!r}")

    portfolio = PortfolioConfig(
        time_limit=sol.getfloat("time_limit"),
        local_search_iterations=sol.getint("local_search_iterations"),
        repeats=sol.getint("repeats"),
        seed=seed,
        alternates=_split_list(sol["alternates"]),
        runtime_measure=sol["runtime_measure"].strip(),
        tol=cp["features"].getfloat("tolerance"),
    )
    if portfolio.runtime_measure not in ("wall", "work"):
        raise ConfigError("runtime_measure must be 'wall' or 'work'")
    if portfolio.repeats < 1 or portfolio.time_limit <= 0:
        raise ConfigError("repeats must be >= 1 and time_limit > 0")
    for name in portfolio.alternates:
        if name not in ("greedy", "local_search"):
            raise ConfigError(f"unknown alternate solver {name!r}")

    families = _split_list(train["families"])
    for fam in families:
        if fam not in FAMILIES:
            raise ConfigError(f"unknown model family {fam!r}")
    grids = {}
    for fam in FAMILIES:
        grid = parse_grid(train[f"grid_{fam}"])
        for key in grid:
            if key not in DEFAULT_PARAMS[fam]:
                raise ConfigError(f"{fam} has no hyperparameter {key!r}")
        grids[fam] = grid

    cw_text = train["class_weighting"].strip()
    if cw_text in ("", "none"):
        cw = None
    elif cw_text == "balanced":
        cw = "balanced"
    else:
        parts = tuple(float(x) for x in _split_list(cw_text))
        if len(parts) != 2 or min(parts) <= 0:
            raise ConfigError("class_weighting needs two positive weights")
        cw = parts

    sel_family = train["selection_family"].strip()
    if sel_family not in FAMILIES:
        raise ConfigError(f"unknown selection family {sel_family!r}")
    smf = train["selection_max_features"].strip()
    sel_max = None if smf == "all" else int(smf)

    bin_source = arm["bin_source"].strip()
    if bin_source not in ("all", "hard"):
        raise ConfigError("bin_source must be 'all' or 'hard'")
    runtime_grid = parse_grid(rt["grid"])
    for key in runtime_grid:
        if key not in REGRESSOR_PARAMS:
            raise ConfigError(f"regressor has no hyperparameter {key!r}")

    out = Path(cp["output"]["directory"].strip() or "out")
    if base is not None and not out.is_absolute():
        out = base / out

    folds = train.getint("cv_folds")
    rt_folds = rt.getint("cv_folds")
    if folds < 2 or rt_folds < 2:
        raise ConfigError("cv_folds must be at least 2")
    return PipelineConfig(
        seed=seed,
        jobs=max(1, run.getint("jobs")),
        input=input_path,
        format=fmt,
        tudataset_name=data["tudataset_name"].strip() or None,
        portfolio=portfolio,
        tolerance=portfolio.tol,
        test_fraction=_fraction(train.getfloat("test_fraction"), "test_fraction"),
        cv_folds=folds,
        families=families,
        class_weighting=cw,
        grids=grids,
        selection_family=sel_family,
        selection_max_features=sel_max,
        min_support=_fraction(arm.getfloat("min_support"), "min_support", closed=True),
        min_confidence=_fraction(arm.getfloat("min_confidence"), "min_confidence", closed=True)
        if arm.getfloat("min_confidence") > 0 else 0.0,
        antecedent_floor=_fraction(arm.getfloat("antecedent_floor"), "antecedent_floor", closed=True),
        max_antecedent=arm.getint("max_antecedent"),
        bin_source=bin_source,
        runtime_test_fraction=_fraction(rt.getfloat("test_fraction"), "runtime test_fraction"),
        runtime_cv_folds=rt_folds,
        log_target=rt.getboolean("log_target"),
        runtime_grid=runtime_grid,
        output=out,
    )
