"""Experiment configuration: JSON files with nested blocks, validated into
typed objects, with field-addressed error messages and a content hash over
the semantically meaningful fields.

Every field can be overridden from the command line through a dotted path
(integers index into lists), e.g. ``instance.mu1=0.55`` or
``population.0.eta=2``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .bayes import BetaParams
from .behaviors import (
    BayesConfident,
    BayesUnbiased,
    Behavior,
    ConfidentInterpolated,
    IntervalOptimistic,
    Optimistic,
    Pessimistic,
    PopulationSpec,
    RecencyOptimist,
    ThompsonProjected,
    Unbiased,
)
from .core import Instance
from .montecarlo import EstimatorSettings, SweepGrid

__all__ = ["ConfigError", "OutputSettings", "ExperimentConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    format: str = "csv"  # "csv" | "json" (json adds a mirror next to the csv)


_BEHAVIOR_FIELDS: dict[str, tuple[str, ...]] = {
    "unbiased": (),
    "optimistic": ("eta",),
    "pessimistic": ("eta",),
    "interval_optimistic": ("eta", "eta_max"),
    "confident_interpolated": ("eta", "lambda1", "lambda2"),
    "thompson_projected": ("eta", "prior_alpha", "prior_beta"),
    "bayes_unbiased": ("prior_alpha", "prior_beta"),
    "bayes_confident": ("zeta", "prior_alpha", "prior_beta", "quantile_selector"),
    "recency_optimist": ("eta", "window"),
}


def _fail(path: str, message: str) -> ConfigError:
    return ConfigError(f"{path}: {message}")


def _get_number(block: dict, key: str, path: str, default=None) -> float:
    if key not in block:
        if default is not None:
            return default
        raise _fail(f"{path}.{key}", "missing required field")
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(f"{path}.{key}", f"expected a number, got {value!r}")
    return value


def _get_int(block: dict, key: str, path: str, default=None) -> int:
    value = _get_number(block, key, path, default)
    if int(value) != value:
        raise _fail(f"{path}.{key}", f"expected an integer, got {value!r}")
    return int(value)


def _parse_priors(record: dict, path: str) -> tuple[BetaParams, BetaParams]:
    out = []
    alphas = record.get("prior_alpha", [1, 1])
    betas = record.get("prior_beta", [1, 1])
    for name, pair in (("prior_alpha", alphas), ("prior_beta", betas)):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise _fail(f"{path}.{name}", f"expected a pair of integers, got {pair!r}")
    for a, b in zip(alphas, betas):
        try:
            out.append(BetaParams(int(a), int(b)))
        except (ValueError, TypeError) as exc:
            raise _fail(f"{path}.prior_alpha/prior_beta", str(exc)) from exc
    return out[0], out[1]


def parse_behavior(record: Any, path: str) -> tuple[Behavior, float]:
    if not isinstance(record, dict):
        raise _fail(path, f"expected a behavior record, got {record!r}")
    kind = record.get("kind")
    if kind not in _BEHAVIOR_FIELDS:
        raise _fail(f"{path}.kind", f"unknown behavior kind {kind!r}; "
                    f"valid: {sorted(_BEHAVIOR_FIELDS)}")
    weight = _get_number(record, "weight", path, default=1.0)
    unknown = set(record) - set(_BEHAVIOR_FIELDS[kind]) - {"kind", "weight"}
    if unknown:
        raise _fail(path, f"unknown fields for kind {kind!r}: {sorted(unknown)}")
    try:
        if kind == "unbiased":
            behavior: Behavior = Unbiased()
        elif kind == "optimistic":
            behavior = Optimistic(eta=_get_number(record, "eta", path))
        elif kind == "pessimistic":
            behavior = Pessimistic(eta=_get_number(record, "eta", path))
        elif kind == "interval_optimistic":
            behavior = IntervalOptimistic(
                eta=_get_number(record, "eta", path),
                eta_max=_get_number(record, "eta_max", path),
            )
        elif kind == "confident_interpolated":
            behavior = ConfidentInterpolated(
                eta=_get_number(record, "eta", path),
                lambda1=_get_number(record, "lambda1", path),
                lambda2=_get_number(record, "lambda2", path),
            )
        elif kind == "thompson_projected":
            p1, p2 = _parse_priors(record, path)
            behavior = ThompsonProjected(
                eta=_get_number(record, "eta", path), prior1=p1, prior2=p2
            )
        elif kind == "bayes_unbiased":
            p1, p2 = _parse_priors(record, path)
            behavior = BayesUnbiased(prior1=p1, prior2=p2)
        elif kind == "bayes_confident":
            p1, p2 = _parse_priors(record, path)
            behavior = BayesConfident(
                zeta=_get_number(record, "zeta", path),
                prior1=p1,
                prior2=p2,
                quantile_selector=_get_number(record, "quantile_selector", path, default=0.5),
            )
        else:  # recency_optimist
            behavior = RecencyOptimist(
                eta=_get_number(record, "eta", path),
                window=_get_int(record, "window", path, default=5),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _fail(path, str(exc)) from exc
    return behavior, weight


def _behavior_to_dict(behavior: Behavior, weight: float) -> dict:
    kind = {
        Unbiased: "unbiased",
        Optimistic: "optimistic",
        Pessimistic: "pessimistic",
        IntervalOptimistic: "interval_optimistic",
        ConfidentInterpolated: "confident_interpolated",
        ThompsonProjected: "thompson_projected",
        BayesUnbiased: "bayes_unbiased",
        BayesConfident: "bayes_confident",
        RecencyOptimist: "recency_optimist",
    }[type(behavior)]
    record: dict[str, Any] = {"kind": kind, "weight": weight}
    for field in _BEHAVIOR_FIELDS[kind]:
        if field == "prior_alpha":
            record[field] = [behavior.prior1.alpha, behavior.prior2.alpha]
        elif field == "prior_beta":
            record[field] = [behavior.prior1.beta, behavior.prior2.beta]
        else:
            record[field] = getattr(behavior, field)
    return record


@dataclass(frozen=True)
class ExperimentConfig:
    instance: Instance
    population: PopulationSpec
    metric: str  # "failure" | "regret" | "both"
    estimator: EstimatorSettings
    sweep: SweepGrid | None
    output: OutputSettings

    def to_dict(self) -> dict:
        doc: dict[str, Any] = {
            "instance": {
                "mu1": self.instance.mu1,
                "mu2": self.instance.mu2,
                "n0": self.instance.n0,
                "horizon": self.instance.horizon,
                "margin_c": self.instance.margin_c,
            },
            "population": [
                _behavior_to_dict(b, w) for b, w in self.population.components
            ],
            "estimator": {
                "metric": self.metric,
                "failure_threshold": self.estimator.failure_threshold,
                "trials": self.estimator.trials,
                "ci_level": self.estimator.ci_level,
                "master_seed": self.estimator.master_seed,
                "parallelism": self.estimator.parallelism,
                "early_exit": self.estimator.early_exit,
                "backend": self.estimator.backend,
            },
            "output": {
                "dir": self.output.directory,
                "format": self.output.format,
            },
        }
        if self.sweep is not None:
            doc["sweep"] = {
                "axes": [
                    {"param": name, "values": list(values)}
                    for name, values in self.sweep.axes
                ]
            }
        return doc

    def config_hash(self) -> str:
        """Hash of the semantically meaningful fields (output paths excluded)."""
        doc = self.to_dict()
        doc.pop("output", None)
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def parse_config(doc: Any) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"top level: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - {"instance", "population", "estimator", "sweep", "output"}
    if unknown:
        raise ConfigError(f"top level: unknown blocks {sorted(unknown)}")

    inst_block = doc.get("instance")
    if not isinstance(inst_block, dict):
        raise ConfigError("instance: missing or not an object")
    try:
        instance = Instance(
            mu1=_get_number(inst_block, "mu1", "instance"),
            mu2=_get_number(inst_block, "mu2", "instance"),
            n0=_get_int(inst_block, "n0", "instance", default=1),
            horizon=_get_int(inst_block, "horizon", "instance", default=1),
            margin_c=_get_number(inst_block, "margin_c", "instance", default=0.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"instance: {exc}") from exc

    pop_block = doc.get("population")
    if not isinstance(pop_block, list) or not pop_block:
        raise ConfigError("population: expected a nonempty list of behavior records")
    components = tuple(
        parse_behavior(record, f"population.{i}") for i, record in enumerate(pop_block)
    )
    total = sum(w for _, w in components)
    if total <= 0:
        raise ConfigError("population: weights must have a positive sum")
    # Single records may omit the weight; normalize an off-by-rounding sum.
    if abs(total - 1.0) > 1e-9:
        if len(components) == 1:
            components = ((components[0][0], 1.0),)
        else:
            raise ConfigError(f"population: weights must sum to 1, got {total}")
    try:
        population = PopulationSpec(components=components)
    except ValueError as exc:
        raise ConfigError(f"population: {exc}") from exc

    est_block = doc.get("estimator", {})
    if not isinstance(est_block, dict):
        raise ConfigError("estimator: expected an object")
    metric = est_block.get("metric", "failure")
    if metric not in ("failure", "regret", "both"):
        raise ConfigError(f"estimator.metric: unknown metric {metric!r}")
    backend = est_block.get("backend", "auto")
    if backend not in ("auto", "fast", "python"):
        raise ConfigError(f"estimator.backend: unknown backend {backend!r}")
    early_exit = est_block.get("early_exit", True)
    if not isinstance(early_exit, bool):
        raise ConfigError(f"estimator.early_exit: expected a boolean, got {early_exit!r}")
    try:
        estimator = EstimatorSettings(
            metric="failure" if metric == "both" else metric,
            failure_threshold=_get_int(est_block, "failure_threshold", "estimator", default=0),
            trials=_get_int(est_block, "trials", "estimator", default=10_000),
            master_seed=_get_int(est_block, "master_seed", "estimator", default=0),
            parallelism=_get_int(est_block, "parallelism", "estimator", default=1),
            ci_level=_get_number(est_block, "ci_level", "estimator", default=0.99),
            early_exit=early_exit,
            backend=backend,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"estimator: {exc}") from exc
    if estimator.trials < 1:
        raise ConfigError("estimator.trials: must be >= 1")
    if estimator.parallelism < 1:
        raise ConfigError("estimator.parallelism: must be >= 1")
    if not 0.0 < estimator.ci_level < 1.0:
        raise ConfigError("estimator.ci_level: must lie in (0, 1)")

    sweep_grid = None
    if "sweep" in doc and doc["sweep"] is not None:
        sweep_block = doc["sweep"]
        if not isinstance(sweep_block, dict) or "axes" not in sweep_block:
            raise ConfigError("sweep: expected an object with an 'axes' list")
        axes = []
        for i, axis in enumerate(sweep_block["axes"]):
            if not isinstance(axis, dict) or "param" not in axis or "values" not in axis:
                raise ConfigError(f"sweep.axes.{i}: expected {{param, values}}")
            values = axis["values"]
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.axes.{i}.values: expected a nonempty list")
            axes.append((axis["param"], tuple(values)))
        try:
            sweep_grid = SweepGrid(axes=tuple(axes))
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from exc
        if metric == "both":
            raise ConfigError("estimator.metric: sweeps need 'failure' or 'regret', not 'both'")

    out_block = doc.get("output", {})
    if not isinstance(out_block, dict):
        raise ConfigError("output: expected an object")
    fmt = out_block.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format: expected 'csv' or 'json', got {fmt!r}")
    output = OutputSettings(directory=out_block.get("dir", "out"), format=fmt)

    return ExperimentConfig(
        instance=instance,
        population=population,
        metric=metric,
        estimator=estimator,
        sweep=sweep_grid,
        output=output,
    )


def apply_override(doc: dict, assignment: str) -> None:
    """Apply one ``dotted.path=value`` override to a raw config dict.

    The value is parsed as JSON when possible and kept as a string
    otherwise; integer path segments index into lists.
    """
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r}: expected key=value")
    key, raw_value = assignment.split("=", 1)
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    parts = key.split(".")
    node: Any = doc
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"override {key!r}: bad list index {part!r}") from exc
        elif isinstance(node, dict):
            node = node.setdefault(part, {})
        else:
            raise ConfigError(f"override {key!r}: {'.'.join(parts[:i])} is not a container")
    last = parts[-1]
    if isinstance(node, list):
        try:
            node[int(last)] = value
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"override {key!r}: bad list index {last!r}") from exc
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise ConfigError(f"override {key!r}: parent is not a container")


def load_config(path: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    for assignment in overrides or []:
        apply_override(doc, assignment)
    return parse_config(doc)
