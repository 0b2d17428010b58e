"""Query-driven perception orchestration.

A perception task arrives as an S-expression query, gets planned into an
ordered annotator pipeline from declarative capability descriptions, runs
over synthetic RGB-D observations on a per-cycle blackboard, and settles
into a persistent belief state through evidence fusion and object
identity resolution.
"""

from .cas import Annotation, Cas, Hypothesis, Observation, add_hypothesis, annotate, init_cas
from .engine import CompoundResult, Engine
from .errors import (
    AmbiguityError,
    CapabilityMissing,
    NoProvider,
    NotFoundError,
    PerceptError,
    PlanningError,
)
from .fusion import FusionModel, fuse_annotations, posterior
from .geometry import Pose
from .identity import BeliefState, FilterConfig, MatchConfig, resolve_identity
from .ontology import KnowledgeBase, load_ontology
from .planner import Pipeline, Planner, validate_pipeline
from .query import (
    Compound,
    Detect,
    Determiner,
    Inspect,
    ObjectDescription,
    format_query,
    match_object,
    parse_query,
    required_attributes,
    resolve_determiner,
)
from .registry import AnnotatorContext, AnnotatorDescriptor, Registry, RobotProfile
from .annotators import default_registry
from .resources import data_path
from .scene import Episode, SceneDocument, load_episode, load_scene, render_observation

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotatorContext",
    "AnnotatorDescriptor",
    "AmbiguityError",
    "BeliefState",
    "CapabilityMissing",
    "Cas",
    "Compound",
    "CompoundResult",
    "Detect",
    "Determiner",
    "Engine",
    "Episode",
    "FilterConfig",
    "FusionModel",
    "Hypothesis",
    "Inspect",
    "KnowledgeBase",
    "MatchConfig",
    "NoProvider",
    "NotFoundError",
    "ObjectDescription",
    "Observation",
    "PerceptError",
    "Pipeline",
    "Planner",
    "PlanningError",
    "Pose",
    "Registry",
    "RobotProfile",
    "SceneDocument",
    "add_hypothesis",
    "annotate",
    "data_path",
    "default_registry",
    "format_query",
    "fuse_annotations",
    "init_cas",
    "load_episode",
    "load_ontology",
    "load_scene",
    "match_object",
    "parse_query",
    "posterior",
    "render_observation",
    "required_attributes",
    "resolve_determiner",
    "resolve_identity",
    "validate_pipeline",
]
