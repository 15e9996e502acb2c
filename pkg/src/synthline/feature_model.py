"""Feature model: the variability vocabulary controlling generation.

The model declares four root groups (Generator, Artifact, MLTask, Output)
whose features carry a kind, a value domain, a mandatory flag, and optional
activation constraints. A user selection over the model is validated into a
typed :class:`ConfigSelection`, and the multi-valued artifact axes expand
into the Cartesian product of :class:`AtomicConfiguration` contexts.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import urllib.parse
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterator, Mapping, Sequence

import yaml

ROOT_GROUPS = ("Generator", "Artifact", "MLTask", "Output")
KINDS = ("single-select", "multi-select", "integer", "real", "text", "record-list")

# The five artifact axes, in the canonical order used for expansion.
VARIABILITY_AXES = (
    "specification_level",
    "requirement_source",
    "specification_format",
    "domain",
    "language",
)

# Violation codes shared by parsing and selection validation.
OUT_OF_DOMAIN = "out_of_domain"
MISSING_MANDATORY = "missing_mandatory"
INACTIVE_FEATURE_SET = "inactive_feature_set"
UNKNOWN_FEATURE = "unknown_feature"
INVALID_VALUE = "invalid_value"
SCHEMA_VIOLATION = "schema"
CONSTRAINT_VIOLATION = "constraint"


@dataclass(frozen=True)
class Violation:
    """One validation problem, addressed to a feature or document location."""

    code: str
    feature: str
    message: str

    def as_dict(self) -> dict[str, str]:
        return {"code": self.code, "feature": self.feature, "message": self.message}


class FeatureModelError(Exception):
    """Base for model/selection errors; carries the complete violation list."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))


class SchemaError(FeatureModelError):
    """The model document violates the feature-model schema."""


class ConstraintError(FeatureModelError):
    """An activation constraint references a missing feature or value."""


class SelectionError(FeatureModelError):
    """A configuration document failed validation against the model."""


@dataclass(frozen=True)
class NumericRange:
    minimum: float | None = None
    maximum: float | None = None
    exclusive_min: bool = False
    exclusive_max: bool = False

    def contains(self, value: float) -> bool:
        if self.minimum is not None:
            if value < self.minimum or (self.exclusive_min and value == self.minimum):
                return False
        if self.maximum is not None:
            if value > self.maximum or (self.exclusive_max and value == self.maximum):
                return False
        return True

    def describe(self) -> str:
        lo = "(" if self.exclusive_min else "["
        hi = ")" if self.exclusive_max else "]"
        return f"{lo}{self.minimum}, {self.maximum}{hi}"


@dataclass(frozen=True)
class ActivationRule:
    """Feature is active only while ``feature`` holds the value ``equals``."""

    feature: str
    equals: str


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str
    domain: tuple[str, ...] | NumericRange | None = None
    mandatory: bool = True
    open: bool = False
    default: Any = None
    active_when: ActivationRule | None = None

    @property
    def enumerated(self) -> tuple[str, ...]:
        assert isinstance(self.domain, tuple), f"{self.name} has no enumerated domain"
        return self.domain


@dataclass(frozen=True)
class FeatureGroup:
    name: str
    features: tuple[Feature, ...]


@dataclass(frozen=True)
class FeatureModel:
    groups: tuple[FeatureGroup, ...]

    def features(self) -> Iterator[Feature]:
        for group in self.groups:
            yield from group.features

    def feature(self, name: str) -> Feature | None:
        for feat in self.features():
            if feat.name == name:
                return feat
        return None

    @property
    def parameter_count(self) -> int:
        return sum(len(g.features) for g in self.groups)

    @property
    def hierarchy_depth(self) -> int:
        """Levels in the tree: root groups, their features, and features
        nested under another feature via an activation constraint."""
        depths: dict[str, int] = {}

        def depth_of(feat: Feature) -> int:
            if feat.name in depths:
                return depths[feat.name]
            if feat.active_when is None:
                depths[feat.name] = 2
            else:
                parent = self.feature(feat.active_when.feature)
                depths[feat.name] = (depth_of(parent) if parent else 2) + 1
            return depths[feat.name]

        return max((depth_of(f) for f in self.features()), default=1)


@dataclass(frozen=True)
class LabelSpec:
    name: str
    description: str


@dataclass(frozen=True)
class ConfigSelection:
    """A validated, fully-typed user selection over the feature model.

    Multi-valued axes are stored as tuples in canonical order (model-declared
    order first, then novel open-vocabulary values in input order).
    """

    llm_model: str
    temperature: float
    top_p: float
    samples_per_prompt: int
    prompt_approach: str
    pace_iterations: int | None
    pace_actors: int | None
    pace_candidates: int | None
    specification_level: tuple[str, ...]
    requirement_source: tuple[str, ...]
    specification_format: tuple[str, ...]
    domain: tuple[str, ...]
    language: tuple[str, ...]
    labels: tuple[LabelSpec, ...]
    output_format: str
    subset_size: int

    @property
    def label_names(self) -> tuple[str, ...]:
        return tuple(label.name for label in self.labels)

    def axis_values(self, axis: str) -> tuple[str, ...]:
        assert axis in VARIABILITY_AXES
        return getattr(self, axis)

    def to_document(self) -> dict[str, Any]:
        """Serialize back to the flat configuration-document form."""
        doc: dict[str, Any] = {
            "llm_model": self.llm_model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "samples_per_prompt": self.samples_per_prompt,
            "prompt_approach": self.prompt_approach,
            "specification_level": list(self.specification_level),
            "requirement_source": list(self.requirement_source),
            "specification_format": list(self.specification_format),
            "domain": list(self.domain),
            "language": list(self.language),
            "labels": [
                {"label_name": label.name, "label_description": label.description}
                for label in self.labels
            ],
            "output_format": self.output_format,
            "subset_size": self.subset_size,
        }
        if self.prompt_approach == "PACE":
            doc["pace_iterations"] = self.pace_iterations
            doc["pace_actors"] = self.pace_actors
            doc["pace_candidates"] = self.pace_candidates
        return doc


@dataclass(frozen=True)
class AtomicConfiguration:
    """One fully-specified generation context: exactly one value per axis."""

    specification_level: str
    requirement_source: str
    specification_format: str
    domain: str
    language: str
    llm_model: str
    temperature: float
    top_p: float
    samples_per_prompt: int
    prompt_approach: str
    pace_iterations: int | None
    pace_actors: int | None
    pace_candidates: int | None
    index: int
    id: str = field(default="")

    def axis_tuple(self) -> tuple[str, str, str, str, str]:
        return (
            self.specification_level,
            self.requirement_source,
            self.specification_format,
            self.domain,
            self.language,
        )


def atomic_config_id(values: Sequence[str]) -> str:
    """Stable, injective key for an axis-value tuple (percent-encoded join)."""
    return "|".join(urllib.parse.quote(v, safe="") for v in values)


def decode_atomic_config_id(config_id: str) -> tuple[str, ...]:
    return tuple(urllib.parse.unquote(part) for part in config_id.split("|"))


# --- model document parsing -------------------------------------------------


def _parse_feature(raw: Any, group_name: str, violations: list[Violation]) -> Feature | None:
    where = f"{group_name}.{raw.get('name', '?') if isinstance(raw, dict) else '?'}"
    if not isinstance(raw, dict):
        violations.append(Violation(SCHEMA_VIOLATION, where, "feature entry must be a mapping"))
        return None
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        violations.append(Violation(SCHEMA_VIOLATION, where, "feature is missing a name"))
        return None
    kind = raw.get("kind")
    if kind not in KINDS:
        violations.append(
            Violation(SCHEMA_VIOLATION, f"{group_name}.{name}", f"unknown kind {kind!r}")
        )
        return None

    domain: tuple[str, ...] | NumericRange | None = None
    raw_domain = raw.get("domain")
    if kind in ("single-select", "multi-select"):
        if not isinstance(raw_domain, list) or not all(isinstance(v, str) for v in raw_domain):
            violations.append(
                Violation(
                    SCHEMA_VIOLATION,
                    f"{group_name}.{name}",
                    "select feature requires a list-of-strings domain",
                )
            )
            return None
        domain = tuple(raw_domain)
    elif kind in ("integer", "real"):
        if raw_domain is not None:
            if not isinstance(raw_domain, dict):
                violations.append(
                    Violation(
                        SCHEMA_VIOLATION,
                        f"{group_name}.{name}",
                        "numeric feature domain must be a range mapping",
                    )
                )
                return None
            domain = NumericRange(
                minimum=raw_domain.get("min"),
                maximum=raw_domain.get("max"),
                exclusive_min=bool(raw_domain.get("exclusive_min", False)),
                exclusive_max=bool(raw_domain.get("exclusive_max", False)),
            )

    active_when = None
    raw_active = raw.get("active_when")
    if raw_active is not None:
        if (
            not isinstance(raw_active, dict)
            or not isinstance(raw_active.get("feature"), str)
            or not isinstance(raw_active.get("equals"), str)
        ):
            violations.append(
                Violation(
                    SCHEMA_VIOLATION,
                    f"{group_name}.{name}",
                    "active_when requires {feature, equals}",
                )
            )
            return None
        active_when = ActivationRule(raw_active["feature"], raw_active["equals"])

    return Feature(
        name=name,
        kind=kind,
        domain=domain,
        mandatory=bool(raw.get("mandatory", True)),
        open=bool(raw.get("open", False)),
        default=raw.get("default"),
        active_when=active_when,
    )


def parse_feature_model(document: Mapping[str, Any] | str) -> FeatureModel:
    """Parse a feature-model document (mapping, or YAML/JSON text).

    Collects every problem before failing: raises :class:`SchemaError` with
    all structural violations, or :class:`ConstraintError` when the only
    problems are dangling activation references.
    """
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise SchemaError([Violation(SCHEMA_VIOLATION, "<document>", f"unparseable document: {exc}")])
    if not isinstance(document, Mapping):
        raise SchemaError([Violation(SCHEMA_VIOLATION, "<document>", "document must be a mapping")])

    violations: list[Violation] = []
    raw_groups = document.get("groups")
    if not isinstance(raw_groups, list):
        raise SchemaError([Violation(SCHEMA_VIOLATION, "groups", "top-level 'groups' list is required")])

    groups: list[FeatureGroup] = []
    for raw_group in raw_groups:
        if not isinstance(raw_group, dict) or not isinstance(raw_group.get("name"), str):
            violations.append(Violation(SCHEMA_VIOLATION, "groups", "each group needs a name"))
            continue
        group_name = raw_group["name"]
        feats = []
        for raw_feature in raw_group.get("features", []):
            feat = _parse_feature(raw_feature, group_name, violations)
            if feat is not None:
                feats.append(feat)
        groups.append(FeatureGroup(name=group_name, features=tuple(feats)))

    names = [g.name for g in groups]
    if len(names) != len(ROOT_GROUPS) or sorted(names) != sorted(ROOT_GROUPS):
        violations.append(
            Violation(
                SCHEMA_VIOLATION,
                "groups",
                f"expected exactly the root groups {list(ROOT_GROUPS)}, got {names}",
            )
        )

    feature_names = [f.name for g in groups for f in g.features]
    for name in {n for n in feature_names if feature_names.count(n) > 1}:
        violations.append(Violation(SCHEMA_VIOLATION, name, f"duplicate feature name {name!r}"))

    if violations:
        raise SchemaError(violations)

    model = FeatureModel(groups=tuple(groups))

    constraint_violations: list[Violation] = []
    for feat in model.features():
        rule = feat.active_when
        if rule is None:
            continue
        target = model.feature(rule.feature)
        if target is None:
            constraint_violations.append(
                Violation(
                    CONSTRAINT_VIOLATION,
                    feat.name,
                    f"activation constraint references unknown feature {rule.feature!r}",
                )
            )
        elif isinstance(target.domain, tuple) and rule.equals not in target.domain:
            constraint_violations.append(
                Violation(
                    CONSTRAINT_VIOLATION,
                    feat.name,
                    f"activation value {rule.equals!r} is outside the domain of {rule.feature!r}",
                )
            )
    if constraint_violations:
        raise ConstraintError(constraint_violations)
    return model


def default_feature_model() -> FeatureModel:
    """The shipped model: 4 groups, 18 parameters, 3 hierarchy levels."""
    return parse_feature_model(default_model_document())


def default_model_document() -> dict[str, Any]:
    text = resources.files("synthline").joinpath("default_model.yaml").read_text("utf-8")
    return yaml.safe_load(text)


# --- selection validation ----------------------------------------------------

# Features that are declared in the model vocabulary but not carried into the
# typed selection: the provider choice is an operational concern resolved at
# run time, and requirement_types is declared but not exercised.
_PASSTHROUGH_FEATURES = ("llm_provider", "requirement_types")


def _coerce_number(feat: Feature, value: Any, violations: list[Violation]) -> float | int | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        violations.append(
            Violation(INVALID_VALUE, feat.name, f"{feat.name} must be a number, got {value!r}")
        )
        return None
    if feat.kind == "integer":
        if isinstance(value, float) and not value.is_integer():
            violations.append(
                Violation(INVALID_VALUE, feat.name, f"{feat.name} must be an integer, got {value!r}")
            )
            return None
        value = int(value)
    else:
        value = float(value)
    if isinstance(feat.domain, NumericRange) and not feat.domain.contains(value):
        violations.append(
            Violation(
                OUT_OF_DOMAIN,
                feat.name,
                f"{feat.name}={value!r} is outside {feat.domain.describe()}",
            )
        )
        return None
    return value


def _normalize_multi(
    feat: Feature, value: Any, violations: list[Violation]
) -> tuple[str, ...] | None:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        violations.append(
            Violation(INVALID_VALUE, feat.name, f"{feat.name} must be a list of strings")
        )
        return None
    if len(value) == 0:
        if feat.mandatory:
            violations.append(
                Violation(MISSING_MANDATORY, feat.name, f"{feat.name} requires at least one value")
            )
            return None
        return ()
    catalog = feat.domain if isinstance(feat.domain, tuple) else ()
    if not feat.open:
        bad = [v for v in value if v not in catalog]
        if bad:
            violations.append(
                Violation(
                    OUT_OF_DOMAIN,
                    feat.name,
                    f"{feat.name} values {bad} are outside the domain {list(catalog)}",
                )
            )
            return None
    # Canonical order: declared catalog order first, then novel values in
    # first-appearance order. Duplicates collapse (set semantics).
    chosen = set(value)
    ordered = [v for v in catalog if v in chosen]
    ordered += [v for v in dict.fromkeys(value) if v not in catalog]
    return tuple(ordered)


def _parse_labels(value: Any, violations: list[Violation]) -> tuple[LabelSpec, ...] | None:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        violations.append(
            Violation(MISSING_MANDATORY, "labels", "labels requires at least one entry")
        )
        return None
    specs: list[LabelSpec] = []
    for i, raw in enumerate(value):
        if (
            not isinstance(raw, dict)
            or not isinstance(raw.get("label_name"), str)
            or not raw["label_name"]
            or not isinstance(raw.get("label_description"), str)
        ):
            violations.append(
                Violation(
                    INVALID_VALUE,
                    "labels",
                    f"labels[{i}] must provide label_name and label_description",
                )
            )
            return None
        specs.append(LabelSpec(raw["label_name"], raw["label_description"]))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        violations.append(
            Violation(INVALID_VALUE, "labels", "label_name values must be pairwise distinct")
        )
        return None
    return tuple(specs)


def validate_selection(model: FeatureModel, raw: Mapping[str, Any]) -> ConfigSelection:
    """Validate a flat configuration document into a :class:`ConfigSelection`.

    Reports the complete list of violations, not only the first; raises
    :class:`SelectionError` carrying them all.
    """
    violations: list[Violation] = []
    known = {feat.name for feat in model.features()}
    for key in raw:
        if key not in known:
            violations.append(Violation(UNKNOWN_FEATURE, key, f"unknown feature {key!r}"))

    def presence(feat: Feature) -> Any:
        if feat.name in raw and raw[feat.name] is not None:
            return raw[feat.name]
        return feat.default

    values: dict[str, Any] = {}
    for feat in model.features():
        if feat.name in _PASSTHROUGH_FEATURES:
            # Validated against the declared domain when present, then left
            # out of the typed selection.
            supplied = raw.get(feat.name)
            if supplied is not None and isinstance(feat.domain, tuple):
                entries = supplied if isinstance(supplied, (list, tuple)) else [supplied]
                bad = [v for v in entries if v not in feat.domain]
                if bad:
                    violations.append(
                        Violation(
                            OUT_OF_DOMAIN,
                            feat.name,
                            f"{feat.name} values {bad} are outside the domain {list(feat.domain)}",
                        )
                    )
            continue

        # Activation constraints: supplying a value for an inactive feature
        # is a violation; an inactive feature is otherwise skipped entirely.
        if feat.active_when is not None:
            controller = raw.get(feat.active_when.feature)
            if controller is None:
                controlling = model.feature(feat.active_when.feature)
                controller = controlling.default if controlling else None
            if controller != feat.active_when.equals:
                if feat.name in raw and raw[feat.name] is not None:
                    violations.append(
                        Violation(
                            INACTIVE_FEATURE_SET,
                            feat.name,
                            f"{feat.name} is only available when "
                            f"{feat.active_when.feature}={feat.active_when.equals}",
                        )
                    )
                values[feat.name] = None
                continue

        value = presence(feat)
        if value is None:
            if feat.mandatory:
                violations.append(
                    Violation(MISSING_MANDATORY, feat.name, f"{feat.name} is required")
                )
            values[feat.name] = None
            continue

        if feat.kind in ("integer", "real"):
            values[feat.name] = _coerce_number(feat, value, violations)
        elif feat.kind == "single-select":
            if not isinstance(value, str) or (
                isinstance(feat.domain, tuple) and value not in feat.domain
            ):
                violations.append(
                    Violation(
                        OUT_OF_DOMAIN,
                        feat.name,
                        f"{feat.name}={value!r} is outside the domain {list(feat.enumerated)}",
                    )
                )
                values[feat.name] = None
            else:
                values[feat.name] = value
        elif feat.kind == "multi-select":
            values[feat.name] = _normalize_multi(feat, value, violations)
        elif feat.kind == "record-list":
            values[feat.name] = _parse_labels(value, violations)
        else:  # text
            if not isinstance(value, str) or not value:
                violations.append(
                    Violation(INVALID_VALUE, feat.name, f"{feat.name} must be a non-empty string")
                )
                values[feat.name] = None
            else:
                values[feat.name] = value

    if violations:
        raise SelectionError(violations)

    return ConfigSelection(
        llm_model=values["llm_model"],
        temperature=values["temperature"],
        top_p=values["top_p"],
        samples_per_prompt=values["samples_per_prompt"],
        prompt_approach=values["prompt_approach"],
        pace_iterations=values.get("pace_iterations"),
        pace_actors=values.get("pace_actors"),
        pace_candidates=values.get("pace_candidates"),
        specification_level=values["specification_level"],
        requirement_source=values["requirement_source"],
        specification_format=values["specification_format"],
        domain=values["domain"],
        language=values["language"],
        labels=values["labels"],
        output_format=values["output_format"],
        subset_size=values["subset_size"],
    )


# --- expansion and hashing ----------------------------------------------------


def expand_atomic(selection: ConfigSelection) -> tuple[AtomicConfiguration, ...]:
    """Cartesian product over the five variability axes, in canonical order.

    Axis order follows :data:`VARIABILITY_AXES`; values keep the canonical
    order stored on the selection, so the result length is the product of
    the per-axis selection sizes and the ordering is reproducible.
    """
    axes = [selection.axis_values(axis) for axis in VARIABILITY_AXES]
    configs = []
    for index, combo in enumerate(itertools.product(*axes)):
        configs.append(
            AtomicConfiguration(
                specification_level=combo[0],
                requirement_source=combo[1],
                specification_format=combo[2],
                domain=combo[3],
                language=combo[4],
                llm_model=selection.llm_model,
                temperature=selection.temperature,
                top_p=selection.top_p,
                samples_per_prompt=selection.samples_per_prompt,
                prompt_approach=selection.prompt_approach,
                pace_iterations=selection.pace_iterations,
                pace_actors=selection.pace_actors,
                pace_candidates=selection.pace_candidates,
                index=index,
                id=atomic_config_id(combo),
            )
        )
    return tuple(configs)


def config_hash(selection: ConfigSelection) -> str:
    """Deterministic digest of a selection, insensitive to set-value order."""
    doc = selection.to_document()
    for axis in ("specification_level", "requirement_source", "specification_format", "domain", "language"):
        doc[axis] = sorted(doc[axis])
    doc["labels"] = sorted(doc["labels"], key=lambda d: d["label_name"])
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
