"""DL-lite knowledge base: class taxonomy, property definitions, individuals.

Reasoning is intentionally small: named-class subsumption (the reflexive
transitive closure of the parent relation), instance retrieval under
subsumption, and lookup of existential property restrictions. That covers
everything the rest of the library asks of its knowledge base, and keeps
loading and querying trivially decidable.

Knowledge bases are treated as immutable after setup: the loader and the
annotator registry extend them while a system is being wired together,
after which everything only reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import sexpr
from .errors import CycleError, ParseError, QuerySyntaxError, UnknownReference, UnknownType
from .geometry import Pose

ROOT_TYPE = "Thing"

PRIMITIVE_KINDS = ("string", "real", "integer", "pose", "realvec")


@dataclass(frozen=True)
class ClassDef:
    """A named class: its direct parents plus existential restrictions.

    Restrictions are (property, value) pairs stored as necessary
    conditions; they are looked up (e.g. for visual properties) but never
    used to classify individuals automatically.
    """

    name: str
    parents: tuple = ()
    restrictions: tuple = ()  # ((property, value), ...)

    def restriction_values(self, prop: str) -> list:
        return [v for p, v in self.restrictions if p == prop]


@dataclass(frozen=True)
class PropertyDefinition:
    name: str
    domain: str
    range: str  # class name or one of PRIMITIVE_KINDS
    cardinality: tuple | None = None  # ("exact"|"min"|"max", n)


@dataclass(frozen=True)
class ConceptAssertion:
    individual: str
    type: str


@dataclass(frozen=True)
class RoleAssertion:
    property: str
    subject: str
    value: object


class TBox:
    def __init__(self):
        self.classes: dict[str, ClassDef] = {}
        self.properties: dict[str, PropertyDefinition] = {}
        self._ancestor_cache: dict[str, frozenset] = {}

    def add_class(self, cls: ClassDef):
        if cls.name in self.classes:
            raise UnknownReference(cls.name, "class declared twice")
        if cls.name in self.properties:
            raise UnknownReference(cls.name, "name already used by a property")
        self.classes[cls.name] = cls
        self._ancestor_cache.clear()

    def add_property(self, prop: PropertyDefinition):
        if prop.name in self.properties:
            raise UnknownReference(prop.name, "property declared twice")
        if prop.name in self.classes:
            raise UnknownReference(prop.name, "name already used by a class")
        self.properties[prop.name] = prop

    def has_class(self, name: str) -> bool:
        return name in self.classes

    def ancestors(self, name: str) -> frozenset:
        """All classes reachable via parents, including `name` itself."""
        if name not in self.classes:
            raise UnknownType(name)
        cached = self._ancestor_cache.get(name)
        if cached is not None:
            return cached
        seen = set()
        stack = [name]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            cls = self.classes.get(current)
            if cls is None:
                raise UnknownType(current)
            stack.extend(cls.parents)
        result = frozenset(seen)
        self._ancestor_cache[name] = result
        return result

    def is_subclass_of(self, sub: str, super_: str) -> bool:
        if super_ not in self.classes:
            raise UnknownType(super_)
        return super_ in self.ancestors(sub)

    def validate(self):
        """Check parent references, acyclicity and reachability from the root."""
        for cls in self.classes.values():
            for parent in cls.parents:
                if parent not in self.classes:
                    raise UnknownReference(parent, f"parent of {cls.name}")
        self._check_acyclic()
        for cls in self.classes.values():
            if cls.name != ROOT_TYPE and ROOT_TYPE not in self.ancestors(cls.name):
                raise UnknownReference(
                    cls.name, f"not connected to {ROOT_TYPE} via parents"
                )
        for prop in self.properties.values():
            if prop.domain not in self.classes:
                raise UnknownReference(prop.domain, f"domain of {prop.name}")
            if prop.range not in PRIMITIVE_KINDS and prop.range not in self.classes:
                raise UnknownReference(prop.range, f"range of {prop.name}")

    def _check_acyclic(self):
        state = {}  # name -> 1 visiting, 2 done

        def visit(name, trail):
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                cycle = trail[trail.index(name):] + [name]
                raise CycleError(cycle)
            state[name] = 1
            for parent in self.classes[name].parents:
                if parent in self.classes:
                    visit(parent, trail + [name])
            state[name] = 2

        for name in self.classes:
            visit(name, [])


class ABox:
    def __init__(self):
        self.concept_assertions: list[ConceptAssertion] = []
        self.role_assertions: list[RoleAssertion] = []
        self._types: dict[str, list] = {}

    @property
    def individuals(self) -> list[str]:
        return list(self._types.keys())

    def assert_type(self, individual: str, type_name: str):
        self.concept_assertions.append(ConceptAssertion(individual, type_name))
        self._types.setdefault(individual, []).append(type_name)

    def assert_role(self, prop: str, subject: str, value):
        self.role_assertions.append(RoleAssertion(prop, subject, value))

    def types_of(self, individual: str) -> list[str]:
        return list(self._types.get(individual, []))

    def roles_of(self, individual: str, prop: str | None = None) -> list[RoleAssertion]:
        return [
            r
            for r in self.role_assertions
            if r.subject == individual and (prop is None or r.property == prop)
        ]


def value_conforms(tbox: TBox, range_: str, value) -> bool:
    if range_ == "string":
        return isinstance(value, str)
    if range_ == "real":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if range_ == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if range_ == "pose":
        return isinstance(value, Pose)
    if range_ == "realvec":
        return isinstance(value, tuple) and all(
            isinstance(v, (int, float)) for v in value
        )
    # class-valued property: the value names a class subsumed by the range
    return (
        isinstance(value, str)
        and tbox.has_class(value)
        and tbox.is_subclass_of(value, range_)
    )


@dataclass
class KnowledgeBase:
    tbox: TBox = field(default_factory=TBox)
    abox: ABox = field(default_factory=ABox)
    aliases: dict = field(default_factory=dict)  # colloquial name -> class name

    # -- reasoning ------------------------------------------------------------

    def is_subclass_of(self, sub: str, super_: str) -> bool:
        return self.tbox.is_subclass_of(sub, super_)

    def individuals_of(self, type_name: str, abox: ABox | None = None) -> set:
        if not self.tbox.has_class(type_name):
            raise UnknownType(type_name)
        abox = abox if abox is not None else self.abox
        found = set()
        for assertion in abox.concept_assertions:
            if self.tbox.has_class(assertion.type) and self.tbox.is_subclass_of(
                assertion.type, type_name
            ):
                found.add(assertion.individual)
        return found

    def resolve_type_name(self, name: str) -> str:
        """Map a colloquial query name (e.g. Food) onto a declared class."""
        if self.tbox.has_class(name):
            return name
        if name in self.aliases:
            return self.aliases[name]
        raise UnknownType(name)

    def visual_properties_of(self, class_name: str) -> list[tuple]:
        """(attribute, value) pairs from hasVisualProperty restrictions.

        Own restrictions come first, then inherited ones walking parents
        depth-first; duplicate pairs from different ancestor classes are
        kept as-is.
        """
        if not self.tbox.has_class(class_name):
            raise UnknownType(class_name)
        pairs = []
        visited = set()

        def walk(name):
            if name in visited:
                return
            visited.add(name)
            cls = self.tbox.classes[name]
            for appearance in cls.restriction_values("hasVisualProperty"):
                pairs.append(self._appearance_pair(appearance))
            for parent in cls.parents:
                walk(parent)

        walk(class_name)
        return pairs

    def _appearance_pair(self, appearance_class: str) -> tuple:
        if not self.tbox.has_class(appearance_class):
            raise UnknownReference(appearance_class, "visual property value")
        cls = self.tbox.classes[appearance_class]
        attrs = cls.restriction_values("attribute")
        values = cls.restriction_values("value")
        if attrs and values:
            return (attrs[0], values[0])
        raise UnknownReference(
            appearance_class, "appearance class lacks attribute/value declarations"
        )

    # -- setup-time extension ---------------------------------------------------

    def add_class(self, name, parents=(), restrictions=()):
        self.tbox.add_class(
            ClassDef(name, tuple(parents), tuple(tuple(r) for r in restrictions))
        )

    # -- validation --------------------------------------------------------------

    def validate(self):
        self.tbox.validate()
        self._validate_restrictions()
        self.validate_abox(self.abox)

    def _validate_restrictions(self):
        for cls in self.tbox.classes.values():
            for prop_name, value in cls.restrictions:
                prop = self.tbox.properties.get(prop_name)
                if prop is None:
                    raise UnknownReference(prop_name, f"restriction on {cls.name}")
                if not value_conforms(self.tbox, prop.range, value):
                    raise UnknownReference(
                        str(value), f"restriction {prop_name} on {cls.name}"
                    )

    def validate_abox(self, abox: ABox):
        for assertion in abox.concept_assertions:
            if not self.tbox.has_class(assertion.type):
                raise UnknownType(assertion.type)
        declared = set(abox.individuals)
        for role in abox.role_assertions:
            prop = self.tbox.properties.get(role.property)
            if prop is None:
                raise UnknownReference(role.property, "role assertion")
            if role.subject not in declared:
                raise UnknownReference(role.subject, "role subject")
            if not value_conforms(self.tbox, prop.range, role.value):
                raise UnknownReference(
                    str(role.value), f"value of {role.property} on {role.subject}"
                )
        self._check_cardinalities(abox)

    def _check_cardinalities(self, abox: ABox):
        for prop in self.tbox.properties.values():
            if prop.cardinality is None:
                continue
            kind, n = prop.cardinality
            for individual in abox.individuals:
                applies = any(
                    self.tbox.has_class(t) and self.tbox.is_subclass_of(t, prop.domain)
                    for t in abox.types_of(individual)
                )
                if not applies:
                    continue
                count = len(abox.roles_of(individual, prop.name))
                ok = (
                    (kind == "exact" and count == n)
                    or (kind == "min" and count >= n)
                    or (kind == "max" and count <= n)
                )
                if not ok:
                    raise UnknownReference(
                        individual,
                        f"cardinality {kind} {n} violated for {prop.name} (got {count})",
                    )


# --- built-in taxonomy ---------------------------------------------------------

_BUILTIN_CLASSES = [
    (ROOT_TYPE, ()),
    # annotation type system
    ("FeatureStructure", (ROOT_TYPE,)),
    ("SemanticAnnotation", ("FeatureStructure",)),
    ("ClassificationAnnotation", ("SemanticAnnotation",)),
    ("ShapeAnnotation", ("SemanticAnnotation",)),
    ("SemanticColorAnnotation", ("SemanticAnnotation",)),
    ("SizeAnnotation", ("SemanticAnnotation",)),
    ("LocationAnnotation", ("SemanticAnnotation",)),
    ("PartAnnotation", ("SemanticAnnotation",)),
    ("PartOfAnnotation", ("SemanticAnnotation",)),
    ("LinemodAtom", ("SemanticAnnotation",)),
    ("TextAtom", ("SemanticAnnotation",)),
    ("LogoAtom", ("SemanticAnnotation",)),
    ("BarcodeAtom", ("SemanticAnnotation",)),
    ("PoseAnnotation", ("FeatureStructure",)),
    ("VolumeAnnotation", ("FeatureStructure",)),
    ("SacModelAnnotation", ("FeatureStructure",)),
    ("CountAnnotation", ("FeatureStructure",)),
    ("ShelfLineAnnotation", ("FeatureStructure",)),
    ("SeparatorAnnotation", ("FeatureStructure",)),
    ("GraspAnnotation", ("FeatureStructure",)),
    ("SceneCluster", ("FeatureStructure",)),
    ("PlaneAnnotation", ("FeatureStructure",)),
    ("NormalsCloud", ("FeatureStructure",)),
    ("SemanticMapAnnotation", ("FeatureStructure",)),
    ("RegionOfInterest", ("FeatureStructure",)),
    # analysis components (annotator descriptors are mirrored below these)
    ("AnalysisComponent", (ROOT_TYPE,)),
    ("HypothesisGeneratorComponent", ("AnalysisComponent",)),
    ("AnnotationComponent", ("AnalysisComponent",)),
    # robot capabilities
    ("Capability", (ROOT_TYPE,)),
    ("Perceive3DDepthCapability", ("Capability",)),
    ("PerceiveColorCapability", ("Capability",)),
    ("Robot", (ROOT_TYPE,)),
    # visual appearance vocabulary
    ("VisualAppearance", (ROOT_TYPE,)),
    ("ColorAppearance", ("VisualAppearance",)),
    ("ShapeAppearance", ("VisualAppearance",)),
    ("SizeAppearance", ("VisualAppearance",)),
    ("LogoAppearance", ("VisualAppearance",)),
    ("TextAppearance", ("VisualAppearance",)),
]

#: standard appearance value classes shared by every domain ontology
_BUILTIN_APPEARANCES = (
    [
        (f"{color.capitalize()}Color", "ColorAppearance", "color", color)
        for color in (
            "red", "green", "blue", "yellow", "black",
            "white", "gray", "orange", "magenta", "brown",
        )
    ]
    + [
        ("BoxShape", "ShapeAppearance", "shape", "box"),
        ("RoundShape", "ShapeAppearance", "shape", "round"),
        ("FlatShape", "ShapeAppearance", "shape", "flat"),
        ("SmallSize", "SizeAppearance", "size", "small"),
        ("MediumSize", "SizeAppearance", "size", "medium"),
        ("BigSize", "SizeAppearance", "size", "big"),
    ]
)

_BUILTIN_PROPERTIES = [
    # classification results
    ("classLabel", "ClassificationAnnotation", "string", None),
    ("classConfidence", "ClassificationAnnotation", "real", ("exact", 1)),
    ("classifierName", "ClassificationAnnotation", "string", None),
    # symbolic annotation values
    ("shape", "ShapeAnnotation", "string", None),
    ("color", "SemanticColorAnnotation", "string", None),
    ("histogram", "SemanticColorAnnotation", "realvec", None),
    ("size", "SizeAnnotation", "string", None),
    ("volumeLiters", "SizeAnnotation", "real", None),
    ("location", "LocationAnnotation", "string", None),
    ("part", "PartAnnotation", "string", None),
    ("parent", "PartOfAnnotation", "string", None),
    ("parentType", "PartOfAnnotation", "string", None),
    ("match", "LinemodAtom", "string", None),
    ("text", "TextAtom", "string", None),
    ("logo", "LogoAtom", "string", None),
    ("barcode", "BarcodeAtom", "string", None),
    # numeric / geometric annotations
    ("pose", "PoseAnnotation", "pose", None),
    ("radiusMeters", "VolumeAnnotation", "real", None),
    ("heightMeters", "VolumeAnnotation", "real", None),
    ("capacityLiters", "VolumeAnnotation", "real", None),
    ("model", "SacModelAnnotation", "string", None),
    ("count", "CountAnnotation", "integer", None),
    ("row", "ShelfLineAnnotation", "real", None),
    ("column", "SeparatorAnnotation", "real", None),
    ("points", "GraspAnnotation", "realvec", None),
    ("depthMillimeters", "PlaneAnnotation", "real", None),
    ("planeLabel", "PlaneAnnotation", "string", None),
    ("upFraction", "NormalsCloud", "real", None),
    ("regionCount", "SemanticMapAnnotation", "integer", None),
    ("roiLabel", "RegionOfInterest", "string", None),
    ("source", "SceneCluster", "string", None),
    # descriptions of objects and components
    ("hasVisualProperty", ROOT_TYPE, "VisualAppearance", None),
    ("attribute", "VisualAppearance", "string", None),
    ("value", "VisualAppearance", "string", None),
    ("hasCapability", "Robot", "Capability", None),
    ("perceptualInputRequired", "AnalysisComponent", "FeatureStructure", None),
    ("perceptualOutput", "AnalysisComponent", "FeatureStructure", None),
    ("dependsOnCapability", "AnalysisComponent", "Capability", None),
    ("outputDomain", "AnalysisComponent", "string", None),
    ("costHint", "AnalysisComponent", "real", None),
]


def builtin_knowledge_base() -> KnowledgeBase:
    kb = KnowledgeBase()
    for name, parents in _BUILTIN_CLASSES:
        kb.tbox.add_class(ClassDef(name, parents))
    for name, domain, range_, card in _BUILTIN_PROPERTIES:
        kb.tbox.add_property(PropertyDefinition(name, domain, range_, card))
    for name, parent, attr, value in _BUILTIN_APPEARANCES:
        kb.tbox.add_class(
            ClassDef(name, (parent,), (("attribute", attr), ("value", value)))
        )
    return kb


# --- ontology document loading ---------------------------------------------------

def _parse_value(expr, context: str):
    if isinstance(expr, (int, float, str)):
        return expr
    if isinstance(expr, list) and expr and expr[0] == "pose":
        return Pose.from_sequence(expr[1:])
    if isinstance(expr, list) and expr and expr[0] == "vec":
        return tuple(float(v) for v in expr[1:])
    raise ParseError(f"cannot read value {expr!r} in {context}")


def _expect_list(form, context):
    if not isinstance(form, list) or not form:
        raise ParseError(f"expected a non-empty form in {context}, got {form!r}")
    return form


def load_ontology(*sources) -> KnowledgeBase:
    """Build a knowledge base from ontology documents.

    Each source is a filesystem path or raw document text; documents are
    merged left to right over the built-in taxonomy. Loading validates
    all TBox and ABox invariants and is deterministic.
    """
    documents = []
    for source in sources:
        path = Path(source) if not str(source).lstrip().startswith("(") else None
        if path is not None:
            documents.append((str(path), path.read_text(encoding="utf-8")))
        else:
            documents.append(("<text>", str(source)))

    kb = builtin_knowledge_base()
    pending_forms = []
    for name, text in documents:
        try:
            forms = sexpr.parse_many(text)
        except QuerySyntaxError as err:
            line, column = sexpr.line_column(text, err.position or 0)
            raise ParseError(f"{name}: {err}", line=line, column=column) from err
        pending_forms.extend(forms)

    # first pass: declare classes and properties so references can be checked
    for form in pending_forms:
        form = _expect_list(form, "ontology document")
        head = form[0]
        if head == "class":
            _load_class(kb, form)
        elif head == "property-def":
            _load_property(kb, form)
        elif head == "alias":
            if len(form) != 3:
                raise ParseError(f"alias needs two arguments: {form!r}")
            kb.aliases[str(form[1])] = str(form[2])
        elif head == "individual":
            pass  # second pass
        else:
            raise ParseError(f"unknown ontology form '{head}'")

    for form in pending_forms:
        if isinstance(form, list) and form and form[0] == "individual":
            _load_individual(kb, form)

    for alias, target in kb.aliases.items():
        if not kb.tbox.has_class(target):
            raise UnknownReference(target, f"alias {alias}")

    kb.validate()
    return kb


def _load_class(kb: KnowledgeBase, form):
    if len(form) < 2 or not isinstance(form[1], str):
        raise ParseError(f"class form needs a name: {form!r}")
    name = form[1]
    parents = []
    restrictions = []
    for item in form[2:]:
        item = _expect_list(item, f"class {name}")
        if item[0] == "parents":
            parents.extend(str(p) for p in item[1:])
        elif item[0] == "property":
            if len(item) != 3:
                raise ParseError(f"property restriction needs name and value: {item!r}")
            restrictions.append((str(item[1]), _parse_value(item[2], f"class {name}")))
        else:
            raise ParseError(f"unknown class clause '{item[0]}' in {name}")
    if not parents:
        parents = [ROOT_TYPE]
    kb.tbox.add_class(ClassDef(name, tuple(parents), tuple(restrictions)))


def _load_property(kb: KnowledgeBase, form):
    if len(form) < 2 or not isinstance(form[1], str):
        raise ParseError(f"property-def form needs a name: {form!r}")
    name = form[1]
    domain = range_ = None
    cardinality = None
    for item in form[2:]:
        item = _expect_list(item, f"property-def {name}")
        if item[0] == "domain" and len(item) == 2:
            domain = str(item[1])
        elif item[0] == "range" and len(item) == 2:
            range_ = str(item[1])
        elif item[0] == "cardinality" and len(item) == 3:
            kind = str(item[1])
            if kind not in ("exact", "min", "max") or not isinstance(item[2], int):
                raise ParseError(f"bad cardinality clause: {item!r}")
            cardinality = (kind, item[2])
        else:
            raise ParseError(f"unknown property-def clause: {item!r}")
    if domain is None or range_ is None:
        raise ParseError(f"property-def {name} needs domain and range")
    kb.tbox.add_property(PropertyDefinition(name, domain, range_, cardinality))


def _load_individual(kb: KnowledgeBase, form):
    if len(form) < 3 or not isinstance(form[1], str):
        raise ParseError(f"individual form needs a name and a type: {form!r}")
    name = form[1]
    typed = False
    roles = []
    for item in form[2:]:
        item = _expect_list(item, f"individual {name}")
        if item[0] == "type" and len(item) == 2:
            type_name = str(item[1])
            if not kb.tbox.has_class(type_name):
                raise UnknownReference(type_name, f"type of individual {name}")
            kb.abox.assert_type(name, type_name)
            typed = True
        else:
            if len(item) != 2:
                raise ParseError(f"role assertion needs one value: {item!r}")
            roles.append((str(item[0]), _parse_value(item[1], f"individual {name}")))
    if not typed:
        raise ParseError(f"individual {name} has no type clause")
    for prop, value in roles:
        kb.abox.assert_role(prop, name, value)
