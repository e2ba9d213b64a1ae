"""Experiment configuration files.

A config is a single YAML document holding the uncertain system, the
feedback gain, the constraint sets, the terminal set, and the parameters
of the batch experiments.  Matrices are row-major nested lists.  Parsing
validates dimensions eagerly; serialization round-trips exactly.
"""

from __future__ import annotations

import numpy as np
import yaml

from .bounds import UncertainSystem
from .ocp import ConstraintSet, MpcConfig
from .terminal import TemplateSet


class ConfigError(ValueError):
    """Malformed or dimensionally inconsistent configuration."""


def _matrix(doc: dict, key: str) -> np.ndarray:
    try:
        return np.atleast_2d(np.asarray(doc[key], dtype=float))
    except KeyError:
        raise ConfigError(f"missing field {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {key!r} is not a numeric matrix: {exc}") from None


def _constraint_set(doc, key: str) -> ConstraintSet:
    if not isinstance(doc, dict):
        raise ConfigError(f"field {key!r} must be a mapping")
    if "lower" in doc and "upper" in doc:
        return ConstraintSet.box(doc["lower"], doc["upper"])
    if "h" in doc and "b" in doc:
        return ConstraintSet(doc["h"], doc["b"])
    raise ConfigError(f"field {key!r} needs either lower/upper or h/b")


class ExperimentConfig:
    """Validated view over a config document.

    The raw dict is kept as the single source of truth so that
    parse -> serialize -> parse is the identity.
    """

    def __init__(self, doc: dict):
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a mapping")
        self.doc = doc
        sysdoc = doc.get("system")
        if not isinstance(sysdoc, dict):
            raise ConfigError("missing 'system' section")
        try:
            self.sys = UncertainSystem(
                _matrix(sysdoc, "a_hat"), _matrix(sysdoc, "b_hat"),
                _matrix(sysdoc, "delta_a"), _matrix(sysdoc, "delta_b"),
            )
        except ValueError as exc:
            raise ConfigError(f"system: {exc}") from None
        self.k_gain = _matrix(doc, "k_gain")
        if self.k_gain.shape != (self.sys.m, self.sys.n):
            raise ConfigError(
                f"k_gain must be {self.sys.m} x {self.sys.n}, "
                f"got {self.k_gain.shape}"
            )
        self.state_set = _constraint_set(doc.get("state_set"), "state_set")
        self.input_set = _constraint_set(doc.get("input_set"), "input_set")
        if self.state_set.h.shape[1] != self.sys.n:
            raise ConfigError("state_set dimension does not match the system")
        if self.input_set.h.shape[1] != self.sys.m:
            raise ConfigError("input_set dimension does not match the system")

        term = doc.get("terminal_set")
        if not isinstance(term, dict):
            raise ConfigError("missing 'terminal_set' section")
        self.terminal_template: TemplateSet | None = None
        self.terminal_vertices: list | None = None
        if "template" in term:
            tpl = term["template"]
            try:
                self.terminal_template = TemplateSet(tpl["v"], tpl["alpha"])
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"terminal_set.template: {exc}") from None
            if self.terminal_template.dim != self.sys.n:
                raise ConfigError("terminal template dimension mismatch")
            self.terminal_hrep = self.terminal_template.h_rep()
        else:
            self.terminal_hrep = _constraint_set(term, "terminal_set")
            if "vertices" in term:
                self.terminal_vertices = [
                    np.asarray(v, dtype=float).ravel() for v in term["vertices"]
                ]

        self.gamma = float(doc.get("gamma", 1.0))
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        self.n_max = int(doc.get("n_max", 10))
        if self.n_max < 1:
            raise ConfigError("n_max must be at least 1")
        self.seed = int(doc.get("seed", 0))
        self.name = str(doc.get("name", "experiment"))
        self.output_dir = str(doc.get("output_dir", "out"))
        self.weight = None
        if "weight" in doc:
            self.weight = _matrix(doc, "weight")
        self.x0_list = [
            np.asarray(x, dtype=float).ravel() for x in doc.get("x0_list", [])
        ]
        for x in self.x0_list:
            if x.size != self.sys.n:
                raise ConfigError("x0_list entry has wrong dimension")

    # optional sections with defaults
    @property
    def grid(self) -> dict:
        return self.doc.get("grid", {})

    @property
    def simulation(self) -> dict:
        return self.doc.get("simulation", {})

    @property
    def coverage(self) -> dict:
        return self.doc.get("coverage", {})

    @property
    def runtime(self) -> dict:
        return self.doc.get("runtime", {})

    def grid_points(self) -> list[np.ndarray]:
        """Uniform grid over the configured box (default: the state set box)."""
        g = self.grid
        n = self.sys.n
        if "lower" in g and "upper" in g:
            lo = np.asarray(g["lower"], float).ravel()
            hi = np.asarray(g["upper"], float).ravel()
        else:
            eye = np.eye(n)
            if self.state_set.h.shape[0] != 2 * n or not (
                np.array_equal(self.state_set.h[:n], eye)
                and np.array_equal(self.state_set.h[n:], -eye)
            ):
                raise ConfigError(
                    "grid lower/upper required when the state set is not a box"
                )
            lo, hi = -self.state_set.b[n:], self.state_set.b[:n]
        shape = g.get("shape", [15] * self.sys.n)
        axes = [np.linspace(lo[i], hi[i], int(shape[i])) for i in range(self.sys.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [np.array(p) for p in zip(*(m.ravel() for m in mesh))]

    def mpc_config(self, bounds) -> MpcConfig:
        return MpcConfig(
            self.sys, self.k_gain, self.state_set, self.input_set,
            self.terminal_hrep, self.gamma, min(self.n_max, bounds.n_max),
            bounds, weight=self.weight,
        )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig(doc)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.doc, fh, sort_keys=False)
