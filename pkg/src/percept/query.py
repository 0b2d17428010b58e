"""The perception-task metalanguage.

Tasks are S-expressions: `detect` with an object description, `inspect`
with a hypothesis id and attribute list, and the compound verbs `track`,
`scan` and `count` that wrap an inner detect. Descriptions pair a
determiner (a/an accepts any number of results, the demands exactly one)
with attribute constraints; values may be symbols, numbers, tuples or
nested descriptions under location and part-of.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from enum import Enum

from . import sexpr
from .errors import (
    AmbiguityError,
    ArityError,
    NotFoundError,
    QuerySyntaxError,
    UnknownAttribute,
    UnknownType,
)


class Determiner(Enum):
    A = "a"
    AN = "an"
    THE = "the"


_DETERMINERS = {d.value: d for d in Determiner}

COMPOUND_VERBS = ("track", "scan", "count")

#: spatial relation markers allowed inside location values; they are not
#: attributes themselves, their nested description is.
RELATIONS = frozenset(
    {"on", "in", "at", "near", "above", "below", "behind", "in-front-of"}
)

#: attributes that parameterize a task rather than describe a perceivable
#: property; they never demand annotators.
CONTROL_ATTRIBUTES = frozenset({"command"})

DEFAULT_ATTRIBUTES = (
    "shape",
    "color",
    "type",
    "location",
    "class",
    "pose",
    "cad-model",
    "obj-part",
    "size",
    "part-of",
    "logo",
    "text",
    "barcode",
    "capacity",
    "width",
    "command",
    "category",
    "grasp-points",
)


class AttributeVocabulary:
    """Open attribute vocabulary; unknown names are hard errors."""

    def __init__(self, names=DEFAULT_ATTRIBUTES):
        self._names = set(names) | set(RELATIONS)

    def register(self, *names):
        self._names.update(names)

    def check(self, name: str):
        if name not in self._names:
            close = difflib.get_close_matches(name, sorted(self._names), n=1)
            raise UnknownAttribute(name, suggestion=close[0] if close else None)

    def __contains__(self, name):
        return name in self._names


DEFAULT_VOCABULARY = AttributeVocabulary()


@dataclass(frozen=True)
class NestedRef:
    """A location / part-of value: optional spatial relation + description."""

    relation: str | None
    description: "ObjectDescription"


@dataclass(frozen=True)
class ObjectDescription:
    determiner: Determiner | None
    kind: str
    constraints: tuple = ()  # ((attribute, value), ...)

    def value_of(self, attribute: str, default=None):
        for attr, value in self.constraints:
            if attr == attribute:
                return value
        return default


@dataclass(frozen=True)
class Detect:
    description: ObjectDescription


@dataclass(frozen=True)
class Inspect:
    uid: str
    attributes: tuple


@dataclass(frozen=True)
class Compound:
    verb: str
    wrapper: ObjectDescription
    inner: Detect


Query = Detect | Inspect | Compound


# --- parsing -------------------------------------------------------------------

def parse_query(text: str, vocabulary: AttributeVocabulary | None = None) -> Query:
    vocabulary = vocabulary or DEFAULT_VOCABULARY
    form = sexpr.parse(text)
    if not isinstance(form, list) or not form:
        raise QuerySyntaxError("a query must be a parenthesized task form")
    head = form[0]
    if head == "detect":
        if len(form) != 2:
            raise ArityError("detect takes exactly one object description")
        return Detect(_parse_description(form[1], vocabulary))
    if head == "inspect":
        return _parse_inspect(form, vocabulary)
    if head in COMPOUND_VERBS:
        if len(form) != 2:
            raise ArityError(f"{head} takes exactly one task description")
        return _parse_compound(head, form[1], vocabulary)
    raise QuerySyntaxError(
        f"unknown task '{head}'", expected="detect, inspect, track, scan or count"
    )


def _parse_inspect(form, vocabulary) -> Inspect:
    items = form[1:]
    # the uid and attributes may arrive wrapped in one extra list
    if len(items) == 1 and isinstance(items[0], list):
        items = items[0]
    if not items:
        raise ArityError("inspect needs a hypothesis id")
    uid = items[0]
    if not isinstance(uid, str):
        raise QuerySyntaxError(f"inspect id must be a symbol, got {uid!r}")
    uid = uid.lstrip("#")
    attrs = []
    for item in items[1:]:
        if not isinstance(item, str):
            raise QuerySyntaxError(f"inspect attribute must be a symbol, got {item!r}")
        name = item.lstrip(":")
        vocabulary.check(name)
        attrs.append(name)
    if not attrs:
        raise ArityError("inspect needs at least one attribute")
    return Inspect(uid=uid, attributes=tuple(attrs))


def _parse_compound(verb, body, vocabulary) -> Compound:
    if not isinstance(body, list) or not body:
        raise QuerySyntaxError(f"{verb} needs a wrapped description")
    rest = list(body)
    determiner = None
    if isinstance(rest[0], str) and rest[0] in _DETERMINERS:
        determiner = _DETERMINERS[rest[0]]
        rest = rest[1:]
    elif isinstance(rest[0], str) and rest[0] == "for":
        rest = rest[1:]
    if not rest or not isinstance(rest[0], str):
        raise QuerySyntaxError(f"{verb} wrapper needs an object kind")
    kind = rest[0]
    rest = rest[1:]

    inner = None
    wrapper_items = []
    for item in rest:
        if isinstance(item, list) and item and item[0] == "detect":
            if len(item) != 2:
                raise ArityError("detect takes exactly one object description")
            inner = Detect(_parse_description(item[1], vocabulary))
        else:
            wrapper_items.append(item)
    constraints = _parse_constraints(wrapper_items, vocabulary)
    wrapper = ObjectDescription(determiner, kind, constraints)
    if inner is None:
        # shorthand: the wrapper description doubles as the detect target
        inner = Detect(wrapper)
    return Compound(verb=verb, wrapper=wrapper, inner=inner)


def _parse_description(body, vocabulary) -> ObjectDescription:
    if not isinstance(body, list) or not body:
        raise QuerySyntaxError("an object description must be a parenthesized form")
    rest = list(body)
    determiner = None
    if isinstance(rest[0], str) and rest[0] in _DETERMINERS:
        determiner = _DETERMINERS[rest[0]]
        rest = rest[1:]
    if not rest or not isinstance(rest[0], str):
        raise QuerySyntaxError("object description needs a kind symbol")
    kind = rest[0]
    constraints = _parse_constraints(rest[1:], vocabulary)
    return ObjectDescription(determiner, kind, constraints)


def _parse_constraints(items, vocabulary) -> tuple:
    constraints = []
    i = 0
    while i < len(items):
        item = items[i]
        if isinstance(item, list) and item and isinstance(item[0], list):
            # a grouped constraint list: ((shape box) (color green))
            constraints.extend(_parse_constraints(item, vocabulary))
            i += 1
        elif isinstance(item, list):
            constraints.append(_parse_pair(item[0], item[1:], vocabulary))
            i += 1
        elif isinstance(item, str) and i + 1 < len(items) and not isinstance(items[i + 1], list):
            # tolerate a bare `attr value` pair without its own parentheses
            constraints.append(_parse_pair(item, [items[i + 1]], vocabulary))
            i += 2
        else:
            raise QuerySyntaxError(f"cannot read constraint {item!r}")
    return tuple(constraints)


def _parse_pair(attr, values, vocabulary) -> tuple:
    if not isinstance(attr, str):
        raise QuerySyntaxError(f"attribute name must be a symbol, got {attr!r}")
    vocabulary.check(attr)
    if not values:
        raise ArityError(f"attribute '{attr}' needs a value")
    value = _parse_value(attr, values, vocabulary)
    if isinstance(value, NestedRef) and attr not in ("location", "part-of") and attr not in RELATIONS:
        raise QuerySyntaxError(
            f"nested descriptions are only allowed under location and part-of, "
            f"not '{attr}'"
        )
    return (attr, value)


def _parse_value(attr, values, vocabulary):
    if len(values) == 1:
        v = values[0]
        if isinstance(v, (int, float)):
            return v
        if isinstance(v, str):
            return v
        if isinstance(v, list):
            if all(isinstance(e, (int, float, str)) for e in v):
                return tuple(v)
            return NestedRef(None, _parse_description(v, vocabulary))
        raise QuerySyntaxError(f"cannot read value of '{attr}'")
    if (
        len(values) == 2
        and isinstance(values[0], str)
        and values[0] in RELATIONS
        and isinstance(values[1], list)
    ):
        return NestedRef(values[0], _parse_description(values[1], vocabulary))
    if all(isinstance(e, (int, float, str)) for e in values):
        return tuple(values)
    raise ArityError(f"attribute '{attr}' has a malformed value {values!r}")


# --- formatting ------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, NestedRef):
        inner = _format_description(value.description)
        return f"{value.relation} {inner}" if value.relation else inner
    if isinstance(value, tuple):
        return "(" + " ".join(_format_value(v) for v in value) + ")"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _format_description(desc: ObjectDescription, bare_marker: str = "") -> str:
    parts = []
    if desc.determiner is not None:
        parts.append(desc.determiner.value)
    elif bare_marker:
        parts.append(bare_marker)
    parts.append(desc.kind)
    for attr, value in desc.constraints:
        parts.append(f"({attr} {_format_value(value)})")
    return "(" + " ".join(parts) + ")"


def format_query(q: Query) -> str:
    """Canonical text form; parse_query(format_query(q)) == q."""
    if isinstance(q, Detect):
        return f"(detect {_format_description(q.description)})"
    if isinstance(q, Inspect):
        attrs = " ".join(f":{a}" for a in q.attributes)
        return f"(inspect #{q.uid} {attrs})"
    if isinstance(q, Compound):
        if q.inner.description == q.wrapper:
            return f"({q.verb} {_format_description(q.wrapper)})"
        wrapper = _format_description(q.wrapper, bare_marker="for")
        # splice the inner detect into the wrapper form
        inner = f"(detect {_format_description(q.inner.description)})"
        return f"({q.verb} {wrapper[:-1].rstrip()} {inner}))"
    raise TypeError(f"not a query: {q!r}")


# --- attribute extraction ----------------------------------------------------------

def _collect_attributes(desc: ObjectDescription, into: set):
    for attr, value in desc.constraints:
        if attr in RELATIONS:
            if isinstance(value, NestedRef):
                _collect_attributes(value.description, into)
            continue
        if attr in CONTROL_ATTRIBUTES:
            continue
        into.add(attr)
        if isinstance(value, NestedRef):
            _collect_attributes(value.description, into)


def required_attributes(q: Query) -> set:
    """Attribute names whose values a pipeline must produce for this task."""
    attrs: set = set()
    if isinstance(q, Detect):
        _collect_attributes(q.description, attrs)
    elif isinstance(q, Inspect):
        attrs.update(q.attributes)
    elif isinstance(q, Compound):
        attrs = required_attributes(q.inner)
        if q.verb == "count":
            attrs.update(("pose", "width"))
    else:
        raise TypeError(f"not a query: {q!r}")
    return attrs


# --- matching against belief objects ------------------------------------------------

#: how a symbolic attribute reads off an object: attribute -> (annotation type,
#: property name)
ATTRIBUTE_READERS = {
    "shape": ("ShapeAnnotation", "shape"),
    "color": ("SemanticColorAnnotation", "color"),
    "size": ("SizeAnnotation", "size"),
    "location": ("LocationAnnotation", "location"),
    "class": ("ClassificationAnnotation", "classLabel"),
    "logo": ("LogoAtom", "logo"),
    "text": ("TextAtom", "text"),
    "barcode": ("BarcodeAtom", "barcode"),
    "cad-model": ("SacModelAnnotation", "model"),
    "obj-part": ("PartAnnotation", "part"),
    "category": ("ClassificationAnnotation", "classLabel"),
}

#: attributes that parameterize the task; they never filter candidates.
_PARAMETER_ATTRIBUTES = frozenset({"pose", "width", "command", "grasp-points"})


def _read(obj, type_name, prop):
    ann = obj.latest(type_name)
    return None if ann is None else ann.get(prop)


def region_label_of(desc: ObjectDescription) -> str | None:
    """The semantic-region label a nested location description points at."""
    for attr, value in desc.constraints:
        if attr == "category" and isinstance(value, str):
            return value
        if isinstance(value, NestedRef):
            label = region_label_of(value.description)
            if label is not None:
                return label
    return None


def _subsumed(kb, label, type_name) -> bool:
    try:
        resolved = kb.resolve_type_name(type_name)
    except UnknownType:
        return label == type_name
    if not kb.tbox.has_class(label):
        return label == resolved
    return kb.is_subclass_of(label, resolved)


def _match_constraint(attr, value, obj, kb) -> bool:
    if attr in _PARAMETER_ATTRIBUTES:
        return True
    if attr == "type":
        label = _read(obj, "ClassificationAnnotation", "classLabel")
        return label is not None and _subsumed(kb, label, str(value))
    if attr == "capacity":
        have = _read(obj, "VolumeAnnotation", "capacityLiters")
        return have is not None and have >= float(value)
    if attr == "location":
        have = _read(obj, "LocationAnnotation", "location")
        if have is None:
            return False
        if isinstance(value, NestedRef):
            target = region_label_of(value.description)
            return target is not None and have == target
        return have == value
    if attr == "part-of":
        if isinstance(value, NestedRef):
            parent_type = value.description.value_of("type")
            if parent_type is not None:
                have = _read(obj, "PartOfAnnotation", "parentType")
                return have is not None and _subsumed(kb, have, str(parent_type))
            target = region_label_of(value.description)
            have = _read(obj, "PartOfAnnotation", "parent")
            return target is not None and have == target
        return _read(obj, "PartOfAnnotation", "parent") == value
    reader = ATTRIBUTE_READERS.get(attr)
    if reader is None:
        return False
    have = _read(obj, *reader)
    return have is not None and have == value


def match_object(desc: ObjectDescription, obj, kb) -> bool:
    """True iff the object satisfies every constraint of the description.

    `obj` is anything exposing `latest(annotation_type) -> Annotation | None`
    (belief-state objects do). Constraints that cannot be evaluated yield
    False rather than raising.
    """
    return all(_match_constraint(attr, value, obj, kb) for attr, value in desc.constraints)


def resolve_determiner(det: Determiner | None, matches):
    """Apply determiner semantics to a match set.

    a/an (and a missing determiner) pass the whole set through; `the`
    returns the unique element, raising AmbiguityError with all
    candidates, or NotFoundError when empty.
    """
    matches = set(matches)
    if det is not Determiner.THE:
        return matches
    if not matches:
        raise NotFoundError()
    if len(matches) > 1:
        raise AmbiguityError(matches)
    return next(iter(matches))
