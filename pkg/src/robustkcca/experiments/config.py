"""Flat ``key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment. List-valued keys take
comma-separated values. Command-line overrides are applied on top of the file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..kernels import KernelSpec, median_bandwidth

OUTPUT_DIR_ENV = "ROBUSTKCCA_OUTPUT_DIR"
EXPERIMENTS = ("cov-accuracy", "norm-ratio", "if-ratio", "index-plot", "classify")

# defaults that differ per experiment; anything not listed falls back to the field default
_EXPERIMENT_DEFAULTS = {
    "cov-accuracy": {"generators": ("tcsd",), "kernels": ("laplacian",), "n": (15, 30, 60, 120),
                     "population": (1500,), "replicates": 20},
    "norm-ratio": {"generators": ("tcsd", "sfsd"), "n": (1500,), "replicates": 20,
                   "kernels": ("poly-1", "poly-2", "poly-3", "gaussian", "laplacian")},
    "if-ratio": {"generators": ("mgsd", "scsd", "smsd"), "n": (100,), "replicates": 20},
    "index-plot": {"generators": ("smsd",), "n": (500,), "replicates": 1},
    "classify": {"generators": (), "components": (2, 5, 10), "replicates": 1},
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    replicates: int = 20
    generators: tuple[str, ...] = ()
    dataset: str = "wine"
    label_column: str = "class"
    kernels: tuple[str, ...] = ("gaussian",)
    kernel_y: str = "gaussian"
    loss: str = "huber"
    kappa: float = 1e-5
    n: tuple[int, ...] = (100,)
    population: tuple[int, ...] = (1500,)
    fraction: float = 0.05
    norms: tuple[str, ...] = ("O", "F", "M", "S")
    component: int = 1
    components: tuple[int, ...] = (2, 5, 10)
    knn_k: int = 5
    folds: int = 10
    output: str = ""
    generator_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.component < 1:
            raise ValueError("component index is 1-based and must be at least 1")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    def output_path(self) -> Path:
        """Resolve the output file, relative names land in the env-var directory."""
        name = self.output or f"{self.experiment}.csv"
        path = Path(name)
        if not path.is_absolute():
            path = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / path
        return path


_TUPLE_TYPES = {"generators": str, "kernels": str, "n": int, "population": int, "norms": str,
                "components": int}
_SCALAR_TYPES = {"seed": int, "replicates": int, "kappa": float, "fraction": float, "component": int,
                 "knn_k": int, "folds": int}
_KEYS = {f.name for f in fields(ExperimentConfig)}


def _convert(key: str, value: str):
    if key in _TUPLE_TYPES:
        cast = _TUPLE_TYPES[key]
        return tuple(cast(v.strip()) for v in value.split(",") if v.strip())
    if key in _SCALAR_TYPES:
        return _SCALAR_TYPES[key](value)
    return value


def parse_pairs(pairs: dict[str, str]) -> dict:
    """Typed config values from raw strings; ``gen.<name>`` keys become generator options."""
    out = {}
    options = {}
    for key, raw in pairs.items():
        if key.startswith("gen."):
            raw = raw.strip()
            options[key[4:]] = int(raw) if raw.lstrip("-").isdigit() else float(raw)
            continue
        if key not in _KEYS or key == "generator_options":
            raise ValueError(f"unknown config key {key!r}")
        try:
            out[key] = _convert(key, raw.strip())
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r}: {raw!r}") from exc
    if options:
        out["generator_options"] = options
    return out


def read_config_file(path) -> dict[str, str]:
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def build_config(experiment: str, path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Experiment defaults, then the config file, then command-line overrides."""
    values = dict(_EXPERIMENT_DEFAULTS.get(experiment, {}))
    pairs = read_config_file(path) if path else {}
    pairs.update(overrides or {})
    pairs.pop("experiment", None)
    parsed = parse_pairs(pairs)
    options = {**values.pop("generator_options", {}), **parsed.pop("generator_options", {})}
    values.update(parsed)
    return ExperimentConfig(experiment=experiment, generator_options=options, **values)


def parse_kernel(text: str, X=None) -> KernelSpec:
    """Kernel from a short name.

    ``gaussian`` uses the median pairwise distance of ``X`` unless a bandwidth
    is given as ``gaussian:0.5``; ``laplacian`` defaults to bandwidth 1;
    ``poly-d`` / ``polynomial:d`` is ``(<x, y> + 1)^d``; ``poly-1`` and
    ``linear`` are the linear kernel.
    """
    name, _, arg = text.strip().lower().partition(":")
    if name in ("linear", "poly-1"):
        return KernelSpec("linear")
    if name.startswith("poly-") or name == "polynomial":
        degree = name[5:] if name.startswith("poly-") else (arg or "2")
        return KernelSpec("polynomial", degree=int(degree))
    if name == "gaussian":
        if arg and arg != "median":
            return KernelSpec("gaussian", bandwidth=float(arg))
        if X is None:
            raise ValueError("gaussian kernel with median bandwidth needs data")
        return KernelSpec("gaussian", bandwidth=median_bandwidth(X))
    if name == "laplacian":
        return KernelSpec("laplacian", bandwidth=float(arg) if arg else 1.0)
    raise ValueError(f"unknown kernel {text!r}")
