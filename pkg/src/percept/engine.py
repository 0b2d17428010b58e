"""The collection processing engine.

One cycle reads an observation into a fresh CAS, runs the planned
annotator sequence over it, applies the consumers (evidence fusion, then
identity resolution into the belief state) and discards the CAS. Queries
are answered from the belief state when its annotations already cover
them, otherwise a specialized pipeline is planned and executed first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cas as cas_mod
from .annotators import default_registry
from .cas import Annotation, Cas, Observation, init_cas
from .errors import (
    EngineError,
    MissingParameter,
    NoEvidence,
    PerceptError,
    UnknownCommand,
    UnknownObject,
)
from .fusion import FusionModel, atoms_of, fuse_annotations
from .geometry import Pose
from .identity import (
    BeliefState,
    FilterConfig,
    FrameMeta,
    MatchConfig,
    frame_filter_reason,
    resolve_identity,
)
from .ontology import KnowledgeBase
from .planner import Pipeline, Planner, PROVENANCE_CONTINUOUS
from .query import (
    Compound,
    Detect,
    Inspect,
    match_object,
    required_attributes,
    resolve_determiner,
)
from .registry import AnnotatorContext, Registry, RobotProfile
from .scene import Episode, Frame, SceneDocument, render_observation

CONTINUOUS_ATTRIBUTES = frozenset({"shape", "color", "location"})
SCAN_MERGE_PIXELS = 50.0


@dataclass
class CompoundResult:
    verb: str
    object_ids: tuple = ()
    counts: dict = field(default_factory=dict)  # object id -> count
    track: tuple = ()  # (tick, object id, Pose)


class Engine:
    def __init__(
        self,
        kb: KnowledgeBase,
        robot: RobotProfile,
        registry: Registry | None = None,
        filters: FilterConfig | None = None,
        match: MatchConfig | None = None,
        fusion_model: FusionModel | None = None,
        noise_sigma: float = 0.0,
        seed: int = 0,
        annotator_params: dict | None = None,
    ):
        self.kb = kb
        self.robot = robot
        self.registry = registry if registry is not None else default_registry(kb)
        self.planner = Planner(self.registry, kb)
        self.filters = filters if filters is not None else FilterConfig()
        self.match = match if match is not None else MatchConfig()
        self.fusion_model = fusion_model
        self.noise_sigma = noise_sigma
        self.seed = seed
        self.annotator_params = annotator_params or {}
        self.belief = BeliefState()
        self.events: list[str] = []
        self.last_cas: Cas | None = None
        self._prev_pose: Pose | None = None
        self._prev_depth: np.ndarray | None = None
        self._continuous: Pipeline | None = None

    # -- pipeline wiring -----------------------------------------------------------

    def continuous_pipeline(self) -> Pipeline:
        """The predefined fast-loop pipeline run when no query is posed."""
        if self._continuous is None:
            plan = self.planner.plan_for_attributes(CONTINUOUS_ATTRIBUTES, self.robot)
            self._continuous = Pipeline(
                plan.annotators, {n: PROVENANCE_CONTINUOUS for n in plan.annotators}
            )
        return self._continuous

    def render_frame(self, frame: Frame) -> Observation:
        return render_observation(
            frame.scene,
            camera_pose=frame.camera_pose,
            blur_score=frame.blur_score,
            noise_sigma=self.noise_sigma,
            seed=[self.seed, frame.tick],
            timestamp=frame.tick,
        )

    def _context(self, scene: SceneDocument | None, tick: int) -> AnnotatorContext:
        return AnnotatorContext(
            kb=self.kb,
            scene=scene,
            semantic_regions=list(scene.semantic_regions) if scene else [],
            mm_per_pixel=scene.mm_per_pixel if scene else 5.0,
            fusion_model=self.fusion_model,
            rng=np.random.default_rng([self.seed, tick, 1]),
            params=self.annotator_params,
        )

    # -- one cycle -------------------------------------------------------------------

    def run_cycle(
        self,
        obs: Observation,
        pipeline: Pipeline,
        query=None,
        scene: SceneDocument | None = None,
        task_regions=None,
    ) -> BeliefState:
        belief, _ = self._process_frame(obs, pipeline, query, scene, task_regions)
        return belief

    #: annotators grafted onto tasked pipelines so the identity consumer
    #: always receives pose/location bookkeeping (the continuous loop
    #: provides these; one-shot tasked cycles must bring their own)
    SUPPORT_ANNOTATORS = ("Cluster3DGeometryAnnotator", "ClusterLocationAnnotator")

    def _with_support(self, pipeline: Pipeline) -> Pipeline:
        names = list(pipeline.annotators)
        provenance = dict(pipeline.provenance)
        produced = pipeline.outputs(self.registry) | set(self.planner.base_types)
        if "SceneCluster" not in produced:
            return pipeline
        for name in self.SUPPORT_ANNOTATORS:
            if name in names or name not in self.registry:
                continue
            desc = self.registry.descriptor(name)
            if not desc.capability_deps <= self.robot.capabilities:
                continue
            if desc.inputs_required <= produced:
                names.append(name)
                provenance[name] = PROVENANCE_CONTINUOUS
                produced |= desc.outputs_produced
        return Pipeline(tuple(names), provenance)

    def _cycle_filters(self, query, task_regions) -> FilterConfig:
        # tasked cycles are forced: their frame was chosen deliberately
        if query is not None:
            return FilterConfig.all_off()
        filters = self.filters
        if task_regions:
            filters = filters.with_task_regions(task_regions)
        return filters

    def _process_frame(
        self,
        obs: Observation,
        pipeline: Pipeline,
        query=None,
        scene: SceneDocument | None = None,
        task_regions=None,
        run_consumers: bool = True,
    ):
        ctx = self._context(scene, obs.timestamp)
        meta = FrameMeta(
            tick=obs.timestamp,
            camera_pose=obs.camera_pose,
            blur_score=obs.blur_score,
            depth=obs.depth,
            width=obs.width,
            semantic_regions=ctx.semantic_regions,
        )
        filters = self._cycle_filters(query, task_regions)
        if query is None:
            reason = frame_filter_reason(filters, meta, self._prev_pose, self._prev_depth)
            if reason is not None:
                self.events.append(f"tick {obs.timestamp}: frame skipped ({reason})")
                self._prev_pose = obs.camera_pose
                return self.belief, None

        cas = init_cas(obs)
        cas.query = query
        if ctx.semantic_regions:
            cas_mod.annotate_scene(
                cas,
                Annotation.make(
                    "SemanticMapAnnotation", regionCount=len(ctx.semantic_regions)
                ),
                self.kb,
            )
        for name in pipeline:
            self.registry.run_annotator(name, cas, ctx)

        if run_consumers:
            self._consume_fusion(cas)
            resolve_identity(
                cas.hypotheses,
                self.belief,
                self.match,
                filters,
                meta,
                prev_pose=self._prev_pose,
                prev_depth=self._prev_depth,
            )
        self._prev_pose = obs.camera_pose
        self._prev_depth = obs.depth
        self.last_cas = cas
        return self.belief, cas

    def _consume_fusion(self, cas: Cas):
        if self.fusion_model is None:
            return
        for hyp in cas.hypotheses:
            if not atoms_of(hyp):
                continue
            try:
                fused = fuse_annotations(hyp, self.fusion_model)
            except NoEvidence:
                continue
            cas_mod.annotate(cas, hyp.id, fused, self.kb)

    # -- continuous mode -----------------------------------------------------------------

    def run_continuous(self, episode: Episode, base: Pipeline | None = None) -> list:
        """Run the fast loop over an episode; returns the belief trajectory."""
        base = base if base is not None else self.continuous_pipeline()
        not_eligible = [
            n for n in base if not self.registry.descriptor(n).continuous_eligible
        ]
        if not_eligible:
            raise EngineError(
                "continuous pipeline contains non-continuous annotators: "
                + ", ".join(not_eligible)
            )
        executed = self._with_support(base)
        trajectory = []
        for frame in episode.frames:
            obs = self.render_frame(frame)
            self.run_cycle(obs, executed, None, frame.scene, episode.task_regions)
            trajectory.append(self.belief.to_dict())
        return trajectory

    # -- query answering ---------------------------------------------------------------

    @staticmethod
    def _frames_of(source) -> list:
        if isinstance(source, Episode):
            return list(source.frames)
        if isinstance(source, Frame):
            return [source]
        if isinstance(source, SceneDocument):
            return [Frame(scene=source, camera_pose=Pose(), blur_score=0.0, tick=0)]
        raise TypeError(f"cannot take frames from {source!r}")

    def _base_or_none(self) -> Pipeline | None:
        try:
            return self.continuous_pipeline()
        except PerceptError:
            return None

    def _belief_covers(self, attrs) -> bool:
        for attr in attrs:
            types = self.planner.attribute_types.get(attr)
            if not types:
                return False
            if not any(
                any(obj.latest(t) is not None for t in types)
                for obj in self.belief.objects()
            ):
                return False
        return True

    def answer_query(self, q, source, robot: RobotProfile | None = None):
        """Answer a parsed query over an episode, frame or scene.

        Returns (result, pipeline) where pipeline is None when the belief
        state already covered the query and no cycle was run.
        """
        robot = robot or self.robot
        if isinstance(q, Compound):
            return self.run_compound(q, source, robot)
        frames = self._frames_of(source)
        frame = frames[-1]
        if isinstance(q, Inspect):
            return self._answer_inspect(q, frame, robot)
        if not isinstance(q, Detect):
            raise TypeError(f"not a query: {q!r}")

        pipeline = None
        if not self._belief_covers(required_attributes(q)):
            pipeline = self.planner.plan_for_query(q, robot, base=self._base_or_none())
            obs = self.render_frame(frame)
            self.run_cycle(obs, self._with_support(pipeline), q, frame.scene)
        matches = [
            obj.id
            for obj in self.belief.objects()
            if match_object(q.description, obj, self.kb)
        ]
        return resolve_determiner(q.description.determiner, matches), pipeline

    def _answer_inspect(self, q: Inspect, frame: Frame, robot: RobotProfile):
        obj = self.belief.get(q.uid)
        if obj is None:
            raise UnknownObject(q.uid)
        pipeline = self.planner.plan_inspection(q.uid, q.attributes, self.belief, robot)
        obs = self.render_frame(frame)
        self.run_cycle(obs, self._with_support(pipeline), q, frame.scene)
        report = {}
        for attr in q.attributes:
            types = self.planner.attribute_types.get(attr, ())
            report[attr] = None
            for type_name in types:
                ann = obj.latest(type_name)
                if ann is not None:
                    report[attr] = ann.as_dict()
                    break
        return report, pipeline

    # -- compound tasks ------------------------------------------------------------------

    def run_compound(self, q: Compound, source, robot: RobotProfile | None = None):
        robot = robot or self.robot
        command = q.inner.description.value_of("command") or q.wrapper.value_of("command")
        if command is not None and command not in ("start", "stop"):
            raise UnknownCommand(f"command must be start or stop, not '{command}'")
        if q.verb == "count":
            return self._run_count(q, source, robot)
        if q.verb == "scan":
            return self._run_scan(q, source, robot, command)
        if q.verb == "track":
            return self._run_track(q, source, robot)
        raise UnknownCommand(f"unknown compound verb '{q.verb}'")

    def _run_count(self, q: Compound, source, robot):
        width = q.inner.description.value_of("width") or q.wrapper.value_of("width")
        if width is None:
            raise MissingParameter("count needs a (width <meters>) constraint")
        frames = self._frames_of(source)
        frame = frames[-1]
        pipeline = self.planner.plan_for_query(q, robot, base=self._base_or_none())
        obs = self.render_frame(frame)
        self.run_cycle(obs, self._with_support(pipeline), q, frame.scene)
        matches = sorted(
            obj.id
            for obj in self.belief.objects()
            if match_object(q.inner.description, obj, self.kb)
        )
        counts = {}
        for object_id in matches:
            ann = self.belief.get(object_id).latest("CountAnnotation")
            if ann is not None:
                counts[object_id] = ann.get("count")
        result = CompoundResult(verb="count", object_ids=tuple(matches), counts=counts)
        return result, pipeline

    def _run_scan(self, q: Compound, source, robot, command):
        """Swap the continuous component for the scanning pipeline and merge
        per-frame line detections into persistent objects."""
        if command == "stop":
            ids = tuple(
                obj.id
                for obj in self.belief.objects()
                if obj.latest("ShelfLineAnnotation") is not None
            )
            return CompoundResult(verb="scan", object_ids=ids), None
        frames = self._frames_of(source)
        pipeline = self.planner.plan_for_query(q, robot, base=self._base_or_none())
        detections = []  # (row, tick, hypothesis)
        for frame in frames:
            obs = self.render_frame(frame)
            _, cas = self._process_frame(
                obs, pipeline, q, frame.scene, run_consumers=False
            )
            for hyp in cas.hypotheses:
                rows = hyp.annotations_of(self.kb, "ShelfLineAnnotation")
                for ann in rows:
                    detections.append((float(ann.get("row")), frame.tick, hyp))
        detections.sort(key=lambda d: (d[0], d[1]))
        ids = []
        cluster = []
        for det in detections:
            if cluster and det[0] - cluster[-1][0] > SCAN_MERGE_PIXELS:
                ids.append(self._commit_scan_cluster(cluster))
                cluster = []
            cluster.append(det)
        if cluster:
            ids.append(self._commit_scan_cluster(cluster))
        return CompoundResult(verb="scan", object_ids=tuple(ids)), pipeline

    def _commit_scan_cluster(self, cluster) -> str:
        row, tick, hyp = cluster[-1]
        obj = self.belief.create(hyp, tick)
        return obj.id

    def _run_track(self, q: Compound, source, robot):
        frames = self._frames_of(source)
        pipeline = self.planner.plan_for_query(q, robot, base=self._base_or_none())
        executed = self._with_support(pipeline)
        track = []
        for frame in frames:
            obs = self.render_frame(frame)
            self.run_cycle(obs, executed, q, frame.scene)
            matches = sorted(
                obj.id
                for obj in self.belief.objects()
                if match_object(q.inner.description, obj, self.kb)
            )
            for object_id in matches:
                pose_ann = self.belief.get(object_id).latest("PoseAnnotation")
                pose = pose_ann.get("pose") if pose_ann else None
                track.append((frame.tick, object_id, pose))
        return CompoundResult(verb="track", track=tuple(track)), pipeline
