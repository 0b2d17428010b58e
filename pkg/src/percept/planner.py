"""Pipeline generation from queries, attribute sets and object classes.

Given the requested annotation types, the planner picks a provider for
each, transitively closes over provider preconditions, and orders the
result topologically by the input/output type dependency relation. When
a current (continuous) pipeline already produces everything asked for it
is returned unchanged; otherwise a fresh pipeline is built.

Provider choice is deterministic: fewer transitively unmet precondition
types first, then lower cost hint, then lexicographic name. Topological
ties break by registration order, which is what makes planned pipelines
reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    CapabilityMissing,
    CyclicDependency,
    NoDescription,
    NoProvider,
    UnknownObject,
    UnknownType,
    UnsupportedQuery,
)
from .query import (
    RELATIONS,
    Compound,
    Detect,
    Inspect,
    NestedRef,
    ObjectDescription,
)
from .registry import BASE_TYPES, Registry, RobotProfile

#: which annotation types answer which query attribute
DEFAULT_ATTRIBUTE_TYPES = {
    "shape": ("ShapeAnnotation",),
    "color": ("SemanticColorAnnotation",),
    "type": ("ClassificationAnnotation",),
    "location": ("LocationAnnotation",),
    "class": ("ClassificationAnnotation",),
    "category": ("LocationAnnotation",),
    "pose": ("PoseAnnotation",),
    "size": ("SizeAnnotation",),
    "obj-part": ("PartAnnotation",),
    "part-of": ("PartOfAnnotation",),
    "cad-model": ("SacModelAnnotation",),
    "logo": ("LogoAtom",),
    "text": ("TextAtom",),
    "barcode": ("BarcodeAtom",),
    "capacity": ("VolumeAnnotation",),
    "volume": ("VolumeAnnotation",),
    "width": ("CountAnnotation",),
    "grasp-points": ("GraspAnnotation",),
}

PROVENANCE_CONTINUOUS = "continuous-base"


@dataclass
class Pipeline:
    annotators: tuple = ()
    provenance: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.annotators)

    def __len__(self):
        return len(self.annotators)

    def outputs(self, registry: Registry) -> set:
        produced = set()
        for name in self.annotators:
            produced |= registry.descriptor(name).outputs_produced
        return produced


@dataclass
class PlanRequest:
    query: object  # Query | set of attribute names | object class name
    robot: RobotProfile
    continuous_base: Pipeline | None = None


def feasible_on_robot(registry: Registry, annotator: str, robot: RobotProfile) -> bool:
    desc = registry.descriptor(annotator)
    return desc.capability_deps <= robot.capabilities


def validate_pipeline(
    pipeline: Pipeline,
    registry: Registry,
    robot: RobotProfile | None = None,
    base_types: frozenset = BASE_TYPES,
) -> bool:
    """The pipeline ordering invariant, checkable independently of planning."""
    seen = set()
    available = set(base_types)
    for name in pipeline.annotators:
        if name in seen or name not in registry:
            return False
        seen.add(name)
        desc = registry.descriptor(name)
        if robot is not None and not desc.capability_deps <= robot.capabilities:
            return False
        if not desc.inputs_required <= available:
            return False
        available |= desc.outputs_produced
    return True


class Planner:
    def __init__(
        self,
        registry: Registry,
        kb=None,
        attribute_types: dict = DEFAULT_ATTRIBUTE_TYPES,
        base_types: frozenset = BASE_TYPES,
    ):
        self.registry = registry
        self.kb = kb if kb is not None else registry.kb
        self.attribute_types = attribute_types
        self.base_types = base_types

    # -- public entry points ---------------------------------------------------

    def plan_for_attributes(
        self, attrs, robot: RobotProfile, base: Pipeline | None = None
    ) -> Pipeline:
        """Plan from attribute names alone (no value constraints)."""
        pairs = []
        for attr in sorted(attrs):
            for type_name in self._types_for(attr):
                pairs.append((attr, type_name, None))
        return self._plan(pairs, robot, base)

    def plan_for_query(self, q, robot: RobotProfile, base: Pipeline | None = None) -> Pipeline:
        """Plan from a parsed query, using values to pick between providers
        with declared output domains."""
        if isinstance(q, Detect):
            if q.description.kind == "scene":
                raise UnsupportedQuery(
                    "scene constellation queries are parsed but not plannable"
                )
            pairs = self._description_pairs(q.description)
            return self._plan(pairs, robot, base)
        if isinstance(q, Compound):
            pairs = self._description_pairs(q.inner.description)
            if q.verb == "count":
                pairs.append(("pose", "PoseAnnotation", None))
                pairs.append(("width", "CountAnnotation", None))
            return self._plan(pairs, robot, base)
        if isinstance(q, Inspect):
            return self.plan_for_attributes(q.attributes, robot, base)
        raise UnsupportedQuery(f"cannot plan for {q!r}")

    def plan_for_object(
        self, object_class: str, robot: RobotProfile, base: Pipeline | None = None
    ) -> Pipeline:
        """Plan from an object class's declared visual properties."""
        if not self.kb.tbox.has_class(object_class):
            raise UnknownType(object_class)
        pairs = self.kb.visual_properties_of(object_class)
        if not pairs:
            raise NoDescription(object_class)
        return self.plan_for_attributes({attr for attr, _ in pairs}, robot, base)

    def plan_for_subclasses(self, super_class: str, robot: RobotProfile) -> dict:
        """One plan per subclass that has visual properties."""
        if not self.kb.tbox.has_class(super_class):
            raise UnknownType(super_class)
        plans = {}
        for name in sorted(self.kb.tbox.classes):
            if name == super_class or not self.kb.is_subclass_of(name, super_class):
                continue
            try:
                plans[name] = self.plan_for_object(name, robot)
            except NoDescription:
                continue
        return plans

    def plan_inspection(self, object_id: str, attrs, belief, robot: RobotProfile) -> Pipeline:
        """Plan an examination pipeline specialized by what is already
        known about the object.

        The cylinder fitter is only offered for objects known to be
        round-shaped containers, mirroring how volume estimation is gated
        on background knowledge.
        """
        obj = belief.get(object_id)
        if obj is None:
            raise UnknownObject(object_id)
        excluded = set()
        volume_attrs = {"capacity", "volume", "cad-model"}
        if volume_attrs & set(attrs) and not self._cylindrical_container(obj):
            excluded.add("SacModelAnnotator")
        pairs = []
        for attr in sorted(set(attrs)):
            for type_name in self._types_for(attr):
                pairs.append((attr, type_name, None))
        return self._plan(pairs, robot, None, excluded=frozenset(excluded))

    def plan_with_dependents(
        self, object_class: str, dependent_class: str, belief, robot: RobotProfile
    ) -> Pipeline | None:
        """Plan for an object only when a dependent-class individual is
        already believed present (cutlery near plates)."""
        if not self.kb.tbox.has_class(object_class):
            raise UnknownType(object_class)
        dependent = self.kb.resolve_type_name(dependent_class)
        for obj in belief.objects():
            ann = obj.latest("ClassificationAnnotation")
            label = ann.get("classLabel") if ann else None
            if label and self.kb.tbox.has_class(label) and self.kb.is_subclass_of(label, dependent):
                return self.plan_for_object(object_class, robot)
        return None

    # -- helpers ------------------------------------------------------------------

    def _cylindrical_container(self, obj) -> bool:
        cls = obj.latest("ClassificationAnnotation")
        shape = obj.latest("ShapeAnnotation")
        if cls is None or shape is None:
            return False
        label = cls.get("classLabel")
        try:
            container = self.kb.resolve_type_name("Container")
        except UnknownType:
            return False
        if not (label and self.kb.tbox.has_class(label) and self.kb.is_subclass_of(label, container)):
            return False
        return shape.get("shape") in ("round", "cylinder")

    def _types_for(self, attr: str) -> tuple:
        types = self.attribute_types.get(attr)
        if not types:
            raise NoProvider(attr)
        return types

    def _description_pairs(self, desc: ObjectDescription, under_location=False) -> list:
        """(attribute, annotation type, symbolic value) planning pairs.

        Constraints nested under part-of describe the parent object and
        are answered by the part-of annotation itself; constraints nested
        under location describe a map region and map onto the location
        machinery.
        """
        pairs = []
        for attr, value in desc.constraints:
            if attr in RELATIONS:
                if isinstance(value, NestedRef):
                    pairs.extend(self._description_pairs(value.description, True))
                continue
            if attr == "command":
                continue
            if attr == "location":
                pairs.append(("location", "LocationAnnotation", None))
                if isinstance(value, NestedRef):
                    pairs.extend(self._description_pairs(value.description, True))
                continue
            if attr == "part-of":
                pairs.append(("part-of", "PartOfAnnotation", None))
                continue
            if attr == "category" and under_location:
                pairs.append(("category", "LocationAnnotation", None))
                continue
            if attr == "category":
                pairs.append(("category", "ClassificationAnnotation", _symbolic(value)))
                continue
            for type_name in self._types_for(attr):
                pairs.append((attr, type_name, _symbolic(value)))
        return pairs

    # -- core construction -----------------------------------------------------------

    def _plan(self, pairs, robot, base, excluded: frozenset = frozenset()) -> Pipeline:
        base = base or Pipeline()
        if not pairs:
            # nothing asked for: the continuous sequence is the answer
            return Pipeline(
                tuple(base.annotators),
                {n: PROVENANCE_CONTINUOUS for n in base.annotators},
            )
        base_outputs = set(self.base_types) | base.outputs(self.registry)
        if all(type_name in base_outputs for _, type_name, _ in pairs):
            provenance = dict(base.provenance) or {
                name: PROVENANCE_CONTINUOUS for name in base.annotators
            }
            return Pipeline(tuple(base.annotators), provenance)

        rounds = self._producibility(robot, excluded)
        chosen: dict[str, str] = {}
        queue = [
            (type_name, value, f"query-attribute {attr}", attr)
            for attr, type_name, value in pairs
        ]
        while queue:
            type_name, value, reason, attr = queue.pop(0)
            if type_name in self.base_types:
                continue
            if any(
                type_name in self.registry.descriptor(name).outputs_produced
                and self._domain_eligible(self.registry.descriptor(name), value)
                for name in chosen
            ):
                continue
            provider = self._select_provider(
                type_name, value, attr, robot, rounds, chosen, excluded
            )
            if provider not in chosen:
                chosen[provider] = reason
                desc = self.registry.descriptor(provider)
                for needed in sorted(desc.inputs_required):
                    queue.append((needed, None, f"precondition-of {provider}", attr))

        try:
            order = self._toposort(chosen)
        except CyclicDependency:
            order = self._toposort(self._rebuild_layered(pairs, robot, rounds, excluded, chosen))
        pipeline = Pipeline(order, {name: chosen[name] for name in order})
        if not validate_pipeline(pipeline, self.registry, robot, self.base_types):
            raise CyclicDependency(pipeline.annotators)
        return pipeline

    def _producibility(self, robot, excluded) -> dict:
        """Round at which each annotation type becomes producible.

        Base types are round 0; a feasible annotator fires once all its
        inputs are producible, making its outputs producible one round
        later. Types never reached are unplannable for this robot.
        """
        rounds = {t: 0 for t in self.base_types}
        fired = set()
        current = 0
        while True:
            current += 1
            newly = []
            for name in self.registry.names():
                if name in fired or name in excluded:
                    continue
                desc = self.registry.descriptor(name)
                if not desc.capability_deps <= robot.capabilities:
                    continue
                if all(t in rounds for t in desc.inputs_required):
                    newly.append(name)
            if not newly:
                return rounds
            for name in newly:
                fired.add(name)
                for t in self.registry.descriptor(name).outputs_produced:
                    rounds.setdefault(t, current)

    def _domain_eligible(self, desc, value) -> bool:
        if value is None or desc.output_domain is None:
            return True
        if value in desc.output_domain:
            return True
        if self.kb is None:
            return False
        try:
            resolved = self.kb.resolve_type_name(value)
        except UnknownType:
            return False
        return any(
            self.kb.tbox.has_class(d) and self.kb.is_subclass_of(d, resolved)
            for d in desc.output_domain
        )

    def _viable(self, name, robot, rounds, excluded) -> bool:
        if name in excluded:
            return False
        desc = self.registry.descriptor(name)
        if not desc.capability_deps <= robot.capabilities:
            return False
        return all(t in rounds for t in desc.inputs_required)

    def _provider_round(self, name, rounds) -> int:
        desc = self.registry.descriptor(name)
        return 1 + max((rounds[t] for t in desc.inputs_required), default=0)

    def _grounded_provider(self, type_name, robot, rounds, excluded) -> str | None:
        """Earliest-firing viable producer; grounds precondition closures."""
        candidates = [
            n
            for n in self.registry.producers_of(type_name)
            if self._viable(n, robot, rounds, excluded)
        ]
        if not candidates:
            return None
        return min(
            candidates,
            key=lambda n: (
                self._provider_round(n, rounds),
                self.registry.descriptor(n).cost(),
                n,
            ),
        )

    def _unmet_count(self, name, robot, rounds, excluded, _memo=None) -> int:
        """Distinct precondition types this provider transitively pulls in."""
        closure = set()

        def expand(n, guard):
            desc = self.registry.descriptor(n)
            for t in sorted(desc.inputs_required):
                if t in self.base_types or t in closure:
                    continue
                closure.add(t)
                provider = self._grounded_provider(t, robot, rounds, excluded)
                if provider is not None and provider not in guard:
                    expand(provider, guard | {provider})

        expand(name, {name})
        return len(closure)

    def _select_provider(self, type_name, value, attr, robot, rounds, chosen, excluded):
        all_named = [
            n for n in self.registry.producers_of(type_name) if n not in excluded
        ]
        if not all_named:
            raise NoProvider(attr)
        feasible = [
            n
            for n in all_named
            if self.registry.descriptor(n).capability_deps <= robot.capabilities
        ]
        if not feasible:
            first = all_named[0]
            missing = sorted(
                self.registry.descriptor(first).capability_deps - robot.capabilities
            )
            raise CapabilityMissing(first, missing[0])
        candidates = [
            n
            for n in feasible
            if self._viable(n, robot, rounds, excluded)
            and self._domain_eligible(self.registry.descriptor(n), value)
        ]
        if not candidates:
            eligible = [
                n
                for n in feasible
                if self._domain_eligible(self.registry.descriptor(n), value)
            ]
            if not eligible:
                raise NoProvider(attr)
            self._raise_transitive_blockage(eligible[0], attr, robot, excluded)
        return min(
            candidates,
            key=lambda n: (
                self._unmet_count(n, robot, rounds, excluded),
                self.registry.descriptor(n).cost(),
                n,
            ),
        )

    def _raise_transitive_blockage(self, name, attr, robot, excluded):
        """A provider exists but its precondition closure is unreachable;
        report whether a capability or a missing producer blocks it."""
        unrestricted = RobotProfile(
            name="*",
            capabilities=frozenset(
                c
                for n in self.registry.names()
                for c in self.registry.descriptor(n).capability_deps
            ),
        )
        cap_free = self._producibility(unrestricted, excluded)
        seen = set()
        stack = sorted(self.registry.descriptor(name).inputs_required)
        while stack:
            t = stack.pop(0)
            if t in seen or t in self.base_types:
                continue
            seen.add(t)
            producers = [n for n in self.registry.producers_of(t) if n not in excluded]
            if not producers:
                raise NoProvider(attr)
            blocked = [
                n
                for n in producers
                if not self.registry.descriptor(n).capability_deps <= robot.capabilities
            ]
            if len(blocked) == len(producers):
                missing = sorted(
                    self.registry.descriptor(blocked[0]).capability_deps
                    - robot.capabilities
                )
                raise CapabilityMissing(blocked[0], missing[0])
            if t not in cap_free:
                for n in producers:
                    stack.extend(sorted(self.registry.descriptor(n).inputs_required))
        raise NoProvider(attr)

    def _rebuild_layered(self, pairs, robot, rounds, excluded, previous) -> dict:
        """Fallback closure that follows only earliest-firing providers,
        which cannot cycle. Used if preferred providers deadlock."""
        chosen: dict[str, str] = {}
        queue = [
            (type_name, value, f"query-attribute {attr}", attr)
            for attr, type_name, value in pairs
        ]
        while queue:
            type_name, value, reason, attr = queue.pop(0)
            if type_name in self.base_types:
                continue
            if any(
                type_name in self.registry.descriptor(n).outputs_produced
                and self._domain_eligible(self.registry.descriptor(n), value)
                for n in chosen
            ):
                continue
            if value is None:
                provider = self._grounded_provider(type_name, robot, rounds, excluded)
            else:
                provider = self._select_provider(
                    type_name, value, attr, robot, rounds, {}, excluded
                )
            if provider is None:
                raise NoProvider(attr)
            if provider not in chosen:
                chosen[provider] = previous.get(provider, reason)
                for needed in sorted(self.registry.descriptor(provider).inputs_required):
                    queue.append((needed, None, f"precondition-of {provider}", attr))
        return chosen

    def _toposort(self, chosen: dict) -> tuple:
        names = list(chosen)
        produced_by = {}
        for name in names:
            for t in self.registry.descriptor(name).outputs_produced:
                produced_by.setdefault(t, []).append(name)
        deps = {
            name: {
                p
                for t in self.registry.descriptor(name).inputs_required
                if t not in self.base_types
                for p in produced_by.get(t, [])
                if p != name
            }
            for name in names
        }
        order = []
        remaining = set(names)
        while remaining:
            ready = [n for n in remaining if not deps[n] & remaining]
            if not ready:
                raise CyclicDependency(remaining)
            ready.sort(key=self.registry.registration_index)
            nxt = ready[0]
            order.append(nxt)
            remaining.remove(nxt)
        return tuple(order)


def _symbolic(value):
    return value if isinstance(value, str) else None
