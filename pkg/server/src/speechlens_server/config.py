"""Server configuration: checkpoint, listen address, and label-space mapping.

The mapping is the interesting part. A checkpoint emits logits over its
own label set; the config declares how those labels project onto the
heads the wire protocol exposes. Two shapes are supported and detected
from the assignments themselves:

- composite: every model label names one class per head (a flat
  "increase_heat_bedroom" style product space). Head probabilities are
  marginals of the full softmax.
- grouped: every model label belongs to exactly one (head, class) pair,
  and each head is normalized by a softmax over its own labels' logits.

The declared class inventory must exactly cover what the assignments
produce; a class nothing maps to, or a mapped class nobody declared, is
a config error rather than a silent zero.
"""

import json
from pathlib import Path

import yaml

__all__ = [
    "ConfigError",
    "ServerConfig",
    "config_from_mapping",
    "load_config",
    "split_composite_labels",
]


class ConfigError(ValueError):
    """Raised for configuration that cannot describe a servable model."""


def _check_name(what, value):
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{what} must be a non-empty string, got {value!r}")
    return value


class ServerConfig:
    """Validated, immutable description of one served model.

    heads is an ordered mapping {head: [classes]}; labels maps each model
    label to its head assignment {head: class}. Assignment order is
    normalized to head declaration order.
    """

    def __init__(self, checkpoint, sample_rate, heads, labels,
                 host="127.0.0.1", port=8000):
        self.checkpoint = _check_name("checkpoint", checkpoint)
        if isinstance(sample_rate, bool) or not isinstance(sample_rate, int) or sample_rate < 1:
            raise ConfigError(f"sample_rate must be a positive integer, got {sample_rate!r}")
        self.sample_rate = sample_rate
        self.host = _check_name("host", host)
        if isinstance(port, bool) or not isinstance(port, int) or not 0 <= port <= 65535:
            raise ConfigError(f"port must be an integer in [0, 65535], got {port!r}")
        self.port = port
        self.heads = self._freeze_heads(heads)
        self.labels, self.mode = self._freeze_labels(labels)
        self._check_coverage()

    @staticmethod
    def _freeze_heads(heads):
        if not isinstance(heads, dict) or not heads:
            raise ConfigError("heads must be a non-empty mapping of head -> classes")
        frozen = []
        for name, classes in heads.items():
            _check_name("head name", name)
            classes = tuple(_check_name(f"class of head {name!r}", c) for c in classes)
            if not classes:
                raise ConfigError(f"head {name!r} declares no classes")
            if len(set(classes)) != len(classes):
                raise ConfigError(f"head {name!r} declares duplicate classes")
            frozen.append((name, classes))
        return tuple(frozen)

    def _freeze_labels(self, labels):
        if not isinstance(labels, dict) or not labels:
            raise ConfigError("labels must be a non-empty mapping of model label -> assignment")
        head_order = [name for name, _ in self.heads]
        classes_of = dict(self.heads)
        frozen = []
        for label, assignment in labels.items():
            _check_name("model label", label)
            if not isinstance(assignment, dict) or not assignment:
                raise ConfigError(f"assignment for label {label!r} must be a non-empty mapping")
            for head, cls in assignment.items():
                if head not in classes_of:
                    raise ConfigError(f"label {label!r} references unknown head {head!r}")
                if cls not in classes_of[head]:
                    raise ConfigError(
                        f"label {label!r} maps head {head!r} to undeclared class {cls!r}"
                    )
            ordered = tuple((h, assignment[h]) for h in head_order if h in assignment)
            frozen.append((label, ordered))
        sizes = {len(assignment) for _, assignment in frozen}
        if sizes == {len(head_order)}:
            mode = "composite"
        elif sizes == {1}:
            mode = "grouped"
        else:
            raise ConfigError(
                "assignments must either all cover every head (composite) "
                "or all name exactly one head (grouped)"
            )
        return tuple(frozen), mode

    def _check_coverage(self):
        produced = {name: set() for name, _ in self.heads}
        for label, assignment in self.labels:
            for head, cls in assignment:
                if self.mode == "grouped" and cls in produced[head]:
                    raise ConfigError(
                        f"grouped mapping hits {head!r}/{cls!r} twice (label {label!r}); "
                        "one model label per class"
                    )
                produced[head].add(cls)
        for name, classes in self.heads:
            missing = set(classes) - produced[name]
            if missing:
                raise ConfigError(
                    f"head {name!r} declares classes no label produces: {sorted(missing)}"
                )

    @property
    def label_names(self):
        return tuple(label for label, _ in self.labels)

    def head_mapping(self):
        """heads as a plain {head: [classes]} dict, declaration order kept."""
        return {name: list(classes) for name, classes in self.heads}


def config_from_mapping(obj) -> ServerConfig:
    """Build a ServerConfig from a parsed config-file object."""
    if not isinstance(obj, dict):
        raise ConfigError(f"config must be an object, got {type(obj).__name__}")
    missing = [k for k in ("checkpoint", "sample_rate", "heads", "labels") if k not in obj]
    if missing:
        raise ConfigError(f"config is missing required keys: {missing}")
    known = {"checkpoint", "sample_rate", "heads", "labels", "host", "port"}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(f"config has unknown keys: {unknown}")
    return ServerConfig(
        obj["checkpoint"],
        obj["sample_rate"],
        obj["heads"],
        obj["labels"],
        host=obj.get("host", "127.0.0.1"),
        port=obj.get("port", 8000),
    )


def load_config(path) -> ServerConfig:
    """Read one JSON or YAML config file (YAML when the suffix says so)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            obj = yaml.safe_load(text)
        else:
            obj = json.loads(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_mapping(obj)


def split_composite_labels(labels, head_names, sep="_"):
    """Decompose flat composite labels into per-head assignments.

    "increase_heat_bedroom" with heads (action, object, location) becomes
    {"action": "increase", "object": "heat", "location": "bedroom"}; parts
    may contain spaces but not the separator. Returns {label: assignment}
    in the order given, ready to hand to ServerConfig.
    """
    head_names = [(_check_name("head name", h)) for h in head_names]
    if not head_names or len(set(head_names)) != len(head_names):
        raise ConfigError("head names must be non-empty and unique")
    out = {}
    for label in labels:
        _check_name("model label", label)
        if label in out:
            raise ConfigError(f"duplicate model label {label!r}")
        parts = label.split(sep)
        if len(parts) != len(head_names):
            raise ConfigError(
                f"label {label!r} splits into {len(parts)} parts, "
                f"expected {len(head_names)}"
            )
        if any(not p for p in parts):
            raise ConfigError(f"label {label!r} has an empty part")
        out[label] = dict(zip(head_names, parts))
    if not out:
        raise ConfigError("no model labels given")
    return out
