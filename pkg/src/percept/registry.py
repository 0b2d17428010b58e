"""Annotator capability registry.

Every analysis engine carries a declarative descriptor (required input
annotation types, produced output types, robot capability dependencies,
optional closed output domain) that drives pipeline planning. Registering
an annotator also mirrors its descriptor into the knowledge base as a
component class, so capability questions can be answered by ordinary
ontology lookups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateName, PreconditionUnmet, UnknownReference, UnknownType
from .ontology import ClassDef, KnowledgeBase

KIND_HYPOTHESIS_GENERATOR = "hypothesisGenerator"
KIND_ANNOTATOR = "annotator"
KIND_BOTH = "both"

#: annotation types the engine itself asserts into a fresh CAS, available
#: to every pipeline without a producing annotator.
BASE_TYPES = frozenset({"SemanticMapAnnotation"})

DEFAULT_COST = {
    KIND_HYPOTHESIS_GENERATOR: 1.0,
    KIND_ANNOTATOR: 0.5,
    KIND_BOTH: 1.0,
}


@dataclass(frozen=True)
class AnnotatorDescriptor:
    name: str
    kind: str
    inputs_required: frozenset = frozenset()
    outputs_produced: frozenset = frozenset()
    capability_deps: frozenset = frozenset()
    output_domain: frozenset | None = None
    cost_hint: float | None = None
    continuous_eligible: bool = False

    def cost(self) -> float:
        if self.cost_hint is not None:
            return self.cost_hint
        return DEFAULT_COST[self.kind]

    def validate(self):
        if not self.outputs_produced:
            raise UnknownReference(self.name, "descriptor produces no output types")
        if self.kind not in DEFAULT_COST:
            raise UnknownReference(self.kind, f"descriptor kind of {self.name}")


def descriptor(
    name,
    kind,
    inputs=(),
    outputs=(),
    capabilities=(),
    domain=None,
    cost=None,
    continuous=False,
) -> AnnotatorDescriptor:
    return AnnotatorDescriptor(
        name=name,
        kind=kind,
        inputs_required=frozenset(inputs),
        outputs_produced=frozenset(outputs),
        capability_deps=frozenset(capabilities),
        output_domain=frozenset(domain) if domain is not None else None,
        cost_hint=cost,
        continuous_eligible=continuous,
    )


@dataclass(frozen=True)
class RobotProfile:
    name: str
    capabilities: frozenset

    @classmethod
    def from_knowledge_base(cls, kb: KnowledgeBase, name: str | None = None):
        """Build a profile from a Robot individual's hasCapability roles."""
        robots = sorted(kb.individuals_of("Robot"))
        if not robots:
            raise UnknownReference("Robot", "no robot individual declared")
        if name is None:
            name = robots[0]
        elif name not in robots:
            raise UnknownReference(name, "robot individual")
        caps = frozenset(
            str(r.value) for r in kb.abox.roles_of(name, "hasCapability")
        )
        return cls(name=name, capabilities=caps)


@dataclass
class AnnotatorContext:
    """Everything an annotator implementation may consult besides the CAS.

    The semantic region map is prior environment knowledge, available to
    any annotator. Scene ground truth is only read by the synthetic probe
    annotators that stand in for learned detectors; ordinary annotators
    work off the observation.
    """

    kb: KnowledgeBase
    scene: object = None  # SceneDocument ground truth for probe annotators
    semantic_regions: list = field(default_factory=list)  # RegionSpec map
    mm_per_pixel: float = 5.0
    fusion_model: object = None  # drives the noisy atom emitters
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    params: dict = field(default_factory=dict)  # per-annotator config overrides

    def param(self, annotator: str, name: str, default):
        return self.params.get(annotator, {}).get(name, default)


class Registry:
    """Name -> (descriptor, implementation), in registration order."""

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self._descriptors: dict[str, AnnotatorDescriptor] = {}
        self._impls: dict[str, object] = {}
        self._order: list[str] = []

    # -- registration ----------------------------------------------------------

    def register(self, desc: AnnotatorDescriptor, impl):
        desc.validate()
        if desc.name in self._descriptors:
            raise DuplicateName(f"annotator '{desc.name}' already registered")
        for type_name in sorted(desc.inputs_required | desc.outputs_produced):
            if not self.kb.tbox.has_class(type_name):
                raise UnknownType(type_name)
        for cap in sorted(desc.capability_deps):
            if not self.kb.tbox.has_class(cap):
                raise UnknownType(cap)
        self._descriptors[desc.name] = desc
        self._impls[desc.name] = impl
        self._order.append(desc.name)
        self._mirror_into_ontology(desc)

    def _mirror_into_ontology(self, desc: AnnotatorDescriptor):
        parent = {
            KIND_HYPOTHESIS_GENERATOR: "HypothesisGeneratorComponent",
            KIND_ANNOTATOR: "AnnotationComponent",
            KIND_BOTH: "HypothesisGeneratorComponent",
        }[desc.kind]
        restrictions = [("perceptualInputRequired", t) for t in sorted(desc.inputs_required)]
        restrictions += [("perceptualOutput", t) for t in sorted(desc.outputs_produced)]
        restrictions += [("dependsOnCapability", c) for c in sorted(desc.capability_deps)]
        if desc.output_domain is not None:
            restrictions += [("outputDomain", v) for v in sorted(desc.output_domain)]
        restrictions.append(("costHint", desc.cost()))
        mirrored = ClassDef(desc.name, (parent,), tuple(restrictions))
        existing = self.kb.tbox.classes.get(desc.name)
        if existing is not None:
            # a previous registry over the same knowledge base already
            # mirrored this annotator; the descriptions must agree
            if existing != mirrored:
                raise DuplicateName(
                    f"'{desc.name}' is already mirrored with a different description"
                )
            return
        self.kb.tbox.add_class(mirrored)

    # -- lookup -------------------------------------------------------------------

    def names(self) -> list[str]:
        return list(self._order)

    def descriptor(self, name: str) -> AnnotatorDescriptor:
        if name not in self._descriptors:
            raise UnknownReference(name, "annotator")
        return self._descriptors[name]

    def __contains__(self, name):
        return name in self._descriptors

    def registration_index(self, name: str) -> int:
        return self._order.index(name)

    def producers_of(self, type_name: str) -> list[str]:
        """Annotators producing the type, in registration order."""
        return [
            n
            for n in self._order
            if type_name in self._descriptors[n].outputs_produced
        ]

    # -- execution ---------------------------------------------------------------

    def run_annotator(self, name: str, cas, ctx: AnnotatorContext):
        """Run one annotator; the CAS may only grow.

        The required input types must already be present somewhere in the
        CAS (scene-level annotations and engine base types count); a
        violation here means the pipeline was planned or ordered wrongly.
        """
        desc = self.descriptor(name)
        present = cas.annotation_types_present(self.kb) | set(BASE_TYPES)
        missing = desc.inputs_required - present
        if missing:
            raise PreconditionUnmet(name, missing)
        self._impls[name](cas, ctx)
        return cas
