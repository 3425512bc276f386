"""
Configuration loader for the elastic wave laboratory.

Resolves an experiment configuration from built-in defaults, an optional
JSON file, environment variables and command-line overrides, in that order
of increasing precedence.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.acceptance import Tolerances
from src.analysis import StudyConfig
from src.spectral_field import GridSpec, InitialDataSpec
from src.symbol_core import ModelParams, validate_params
from src.zones_stability import ZoneConfig


class ExperimentConfig:
    """Loads, merges and validates an experiment configuration.

    Environment variables override the file; overrides win over both.
    """

    ENV_OUTPUT_DIR = "ELASTIC_LAB_OUTPUT_DIR"
    ENV_LOG_LEVEL = "ELASTIC_LAB_LOG_LEVEL"
    ENV_THREADS = "ELASTIC_LAB_THREADS"

    DEFAULT_OUTPUT_DIR = "./output"
    DEFAULT_LOG_LEVEL = "INFO"
    OUTPUT_FORMATS = ("csv", "json", "svg")

    DEFAULTS: Dict[str, Any] = {
        "params": {"a": 1.0, "b": 2.0, "rho": 0.25, "theta": 0.75},
        "zone": {"eps": 0.1, "N": 10.0, "w_int": 0.5, "w_ext": 0.5},
        "grid": {"n": 512, "L": 200.0},
        "data": {
            "kind": "gaussian",
            "width": 1.0,
            "amplitude": 1.0,
            "target": "U0",
            "polarization": [1.0, 1.0, 0.0, 0.0],
        },
        "study": {
            "s": 0.0,
            "m": 1.0,
            "gamma": None,
            "pipeline": "polar",
            "times": {"start": 100.0, "stop": 10000.0, "count": 25},
            "window": [100.0, 10000.0],
            "angles": 64,
            "quadrature_tolerance": 1e-8,
            "rate_tolerance": 0.1,
            "order_tolerance": 0.15,
        },
        "sweep": {"regime": "small", "band": [1e-4, 1e-2], "n": 40},
        "scan": {"samples": 100000},
        "pointwise": {"r_min": 1e-3, "r_max": 1e3, "r_count": 31, "times": [0.0, 1.0, 10.0, 100.0], "max_constant": 100.0},
        "gevrey": {"t": 1.0, "c_prime": None, "r_max": 1e4, "samples": 200, "weight_exponent": None},
        "output": {"directory": None, "formats": ["csv", "json"]},
        "seed": 42,
        "threads": None,
    }

    def __init__(self, path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None):
        """
        Initialize configuration.

        Args:
            path: Optional JSON configuration file
            overrides: Nested dictionary of command-line overrides

        Raises:
            ValueError: If the file holds invalid JSON or unknown keys
        """
        self._values: Dict[str, Any] = copy.deepcopy(self.DEFAULTS)
        self._source: Optional[str] = str(path) if path else None

        if path is not None:
            try:
                loaded = json.loads(Path(path).read_text())
            except json.JSONDecodeError as e:
                raise ValueError(f"Configuration file {path} is not valid JSON: {e}") from e
            self._merge(loaded)

        env_output = os.environ.get(self.ENV_OUTPUT_DIR, "").strip()
        if env_output:
            self._values["output"]["directory"] = env_output
        env_threads = os.environ.get(self.ENV_THREADS, "").strip()
        if env_threads:
            try:
                self._values["threads"] = int(env_threads)
            except ValueError:
                raise ValueError(f"{self.ENV_THREADS} must be an integer, got: {env_threads}")
        self._log_level: str = os.environ.get(self.ENV_LOG_LEVEL, self.DEFAULT_LOG_LEVEL).strip().upper()

        if overrides:
            self._merge(overrides)

        if self._values["output"]["directory"] is None:
            self._values["output"]["directory"] = self.DEFAULT_OUTPUT_DIR
        if self._values["threads"] is None:
            self._values["threads"] = 1

    def _merge(self, incoming: Dict[str, Any]) -> None:
        unknown: List[str] = []
        _collect_unknown(incoming, self.DEFAULTS, "", unknown)
        if unknown:
            raise ValueError(f"Unknown configuration keys: {', '.join(unknown)}")
        _deep_update(self._values, incoming)

    @property
    def params(self) -> ModelParams:
        """Get validated model parameters."""
        block = self._values["params"]
        return validate_params(block["a"], block["b"], block["rho"], block["theta"])

    @property
    def zone(self) -> ZoneConfig:
        """Get low/middle/high frequency zone cutoffs."""
        return ZoneConfig(**self._values["zone"])

    @property
    def grid(self) -> GridSpec:
        """Get lattice grid specification."""
        block = self._values["grid"]
        return GridSpec(n_points=int(block["n"]), box_length=float(block["L"]))

    @property
    def data(self) -> InitialDataSpec:
        """Get initial data specification."""
        block = dict(self._values["data"])
        block["polarization"] = tuple(block["polarization"])
        return InitialDataSpec(**block)

    @property
    def times(self) -> List[float]:
        """Get study times; a {start, stop, count} block expands log-spaced."""
        times = self._values["study"]["times"]
        if isinstance(times, dict):
            return [float(t) for t in np.geomspace(times["start"], times["stop"], int(times["count"]))]
        return [float(t) for t in times]

    @property
    def tolerances(self) -> Tolerances:
        """Get rate and order tolerances."""
        study = self._values["study"]
        return Tolerances(rate=study["rate_tolerance"], order=study["order_tolerance"])

    @property
    def sweep(self) -> Dict[str, Any]:
        """Get eigenvalue sweep settings."""
        return copy.deepcopy(self._values["sweep"])

    @property
    def scan(self) -> Dict[str, Any]:
        """Get stability scan settings."""
        return copy.deepcopy(self._values["scan"])

    @property
    def pointwise(self) -> Dict[str, Any]:
        """Get pointwise estimate fit settings."""
        return copy.deepcopy(self._values["pointwise"])

    @property
    def gevrey(self) -> Dict[str, Any]:
        """Get Gevrey check settings."""
        return copy.deepcopy(self._values["gevrey"])

    @property
    def output_dir(self) -> Path:
        """Get output directory path."""
        return Path(self._values["output"]["directory"])

    @property
    def formats(self) -> List[str]:
        """Get figure output formats."""
        return list(self._values["output"]["formats"])

    @property
    def seed(self) -> int:
        """Get random seed."""
        return int(self._values["seed"])

    @property
    def threads(self) -> int:
        """Get worker thread count."""
        return int(self._values["threads"])

    @property
    def log_level(self) -> str:
        """Get logging level."""
        return self._log_level

    def study_config(self, **changes: Any) -> StudyConfig:
        """Build the StudyConfig of the study block; keyword changes win."""
        study = self._values["study"]
        arguments = dict(
            params=self.params,
            data=self.data,
            s=study["s"],
            m=study["m"],
            gamma=study["gamma"],
            pipeline=study["pipeline"],
            times=tuple(self.times),
            window=tuple(study["window"]),
            zone=self.zone,
            grid=self.grid,
            angles=study["angles"],
            quadrature_tolerance=study["quadrature_tolerance"],
            threads=self.threads,
        )
        arguments.update(changes)
        return StudyConfig(**arguments)

    def validate(self) -> None:
        """
        Validate every block by building its typed counterpart.

        Raises:
            ValueError: Naming the offending block and every violated constraint
        """
        problems = []
        for block, build in (
            ("params", lambda: self.params),
            ("zone", lambda: self.zone),
            ("grid", lambda: self.grid),
            ("data", lambda: self.data),
            ("study", self.study_config),
        ):
            try:
                build()
            except (ValueError, TypeError) as e:
                problems.append(f"{block}: {e}")

        invalid_formats = [f for f in self.formats if f not in self.OUTPUT_FORMATS]
        if invalid_formats:
            problems.append(f"output: unknown formats {', '.join(invalid_formats)}")
        if self.threads < 1:
            problems.append(f"threads must be at least 1, got {self.threads}")

        if problems:
            raise ValueError("Invalid configuration: " + "; ".join(problems))

    def to_dict(self) -> Dict[str, Any]:
        """Get the effective configuration as a nested dict."""
        """
        Get the resolved configuration as a dictionary.

        Returns:
            Deep copy of every block, with the output directory as a string.
        """
        resolved = copy.deepcopy(self._values)
        resolved["output"]["directory"] = str(resolved["output"]["directory"])
        return resolved

    @classmethod
    def schema(cls) -> Dict[str, Any]:
        """JSON schema describing the accepted blocks and keys."""
        schema = _schema_for(cls.DEFAULTS)
        schema["properties"]["study"]["properties"]["times"] = {"type": ["object", "array"]}
        return {
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "title": "ExperimentConfig",
            **schema,
        }


def _collect_unknown(incoming: Dict[str, Any], reference: Dict[str, Any], prefix: str, unknown: List[str]) -> None:
    for key, value in incoming.items():
        name = f"{prefix}{key}"
        if key not in reference:
            unknown.append(name)
        elif isinstance(reference[key], dict) and isinstance(value, dict):
            _collect_unknown(value, reference[key], f"{name}.", unknown)


def _deep_update(target: Dict[str, Any], incoming: Dict[str, Any]) -> None:
    for key, value in incoming.items():
        if isinstance(target.get(key), dict) and isinstance(value, dict):
            _deep_update(target[key], value)
        else:
            target[key] = copy.deepcopy(value)


def _schema_for(value: Any) -> Dict[str, Any]:
    if isinstance(value, dict):
        return {
            "type": "object",
            "additionalProperties": False,
            "properties": {key: _schema_for(item) for key, item in value.items()},
        }
    if isinstance(value, list):
        return {"type": "array"}
    if isinstance(value, bool):
        return {"type": "boolean"}
    if isinstance(value, int):
        return {"type": "integer"}
    if isinstance(value, float):
        return {"type": "number"}
    if isinstance(value, str):
        return {"type": "string"}
    return {"type": ["number", "string", "null"]}
