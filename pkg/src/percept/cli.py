"""Command-line front end.

Subcommands: `plan` and `explain` print the pipeline for a query, `run`
answers a query over a scene or episode, `continuous` drives the fast
loop over an episode, and `belief` dumps the resulting belief state.
Identical invocations with identical seeds produce byte-identical output.

Exit codes: 0 ok, 2 nothing found for a `the` query, 3 ambiguous `the`
query, 4 planning failure, 1 any other error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import sexpr
from .annotators import default_registry
from .cas import dump_cas
from .engine import CompoundResult, Engine
from .errors import AmbiguityError, NotFoundError, PerceptError, PlanningError, UnsupportedQuery
from .fusion import FusionModel
from .identity import FilterConfig, MatchConfig
from .ontology import load_ontology
from .planner import Planner
from .query import Compound, Detect, Inspect, parse_query
from .registry import RobotProfile
from .resources import data_path
from .scene import Frame, load_episode, load_scene
from .geometry import Pose

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_FOUND = 2
EXIT_AMBIGUOUS = 3
EXIT_PLANNING = 4

_FILTER_FIELDS = {
    "roiEnabled": "roi_enabled",
    "staticSkipEnabled": "static_skip_enabled",
    "staticEpsilonMillimeters": "static_epsilon_mm",
    "motionEnabled": "motion_enabled",
    "maxTranslationMeters": "max_translation_m",
    "maxRotationRadians": "max_rotation_rad",
    "blurThreshold": "blur_threshold",
}

_MATCH_FIELDS = {
    "poseWeight": "pose_weight",
    "poseScaleMillimeters": "pose_scale_mm",
    "histogramWeight": "histogram_weight",
    "classWeight": "class_weight",
    "shapeWeight": "shape_weight",
    "threshold": "threshold",
}


def _load_config(path):
    """Read `(annotator <name> (<param> <value>)...)` style overrides."""
    filters = {}
    match = {}
    annotator_params = {}
    for form in sexpr.parse_many(data_path(path).read_text(encoding="utf-8")):
        head = form[0]
        if head == "annotator":
            params = {str(item[0]): item[1] for item in form[2:]}
            annotator_params.setdefault(str(form[1]), {}).update(params)
        elif head == "filters":
            for item in form[1:]:
                filters[_FILTER_FIELDS[str(item[0])]] = _coerce(item[1])
        elif head == "match":
            for item in form[1:]:
                match[_MATCH_FIELDS[str(item[0])]] = _coerce(item[1])
        else:
            raise PerceptError(f"unknown config form '{head}'")
    return filters, match, annotator_params


def _coerce(value):
    if value in ("on", "true", "yes"):
        return True
    if value in ("off", "false", "no"):
        return False
    return value


def _build_engine(args) -> Engine:
    kb = load_ontology(*[data_path(p) for p in args.ontology])
    robot_kb = load_ontology(*[data_path(p) for p in args.ontology], data_path(args.robot))
    robot = RobotProfile.from_knowledge_base(robot_kb)
    filter_kwargs, match_kwargs, annotator_params = ({}, {}, {})
    if args.config:
        filter_kwargs, match_kwargs, annotator_params = _load_config(args.config)
    filters = FilterConfig(**filter_kwargs)
    if args.filters == "off":
        filters = FilterConfig.all_off()
    fusion = FusionModel.load(data_path(args.fusion_model)) if args.fusion_model else None
    return Engine(
        kb,
        robot,
        registry=default_registry(kb),
        filters=filters,
        match=MatchConfig(**match_kwargs),
        fusion_model=fusion,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        annotator_params=annotator_params,
    )


def _source_of(args):
    if args.episode:
        return load_episode(data_path(args.episode))
    scene = load_scene(data_path(args.scene))
    return Frame(scene=scene, camera_pose=Pose(), blur_score=0.0, tick=0)


def _query_text(args) -> str:
    if args.query:
        return args.query
    return sys.stdin.read()


def _print_pipeline(pipeline, as_json: bool):
    if as_json:
        print(json.dumps(
            {"pipeline": list(pipeline.annotators), "provenance": pipeline.provenance},
            indent=2,
        ))
        return
    if not pipeline.annotators:
        print("pipeline: (empty)")
        return
    print("pipeline:")
    width = max(len(n) for n in pipeline.annotators)
    for i, name in enumerate(pipeline.annotators, start=1):
        reason = pipeline.provenance.get(name, "")
        print(f"  {i}. {name:<{width}}  {reason}")


def _object_sexpr(engine: Engine, object_id: str) -> str:
    obj = engine.belief.get(object_id)
    parts = [f"#{object_id}"]
    for attr, type_name, prop in (
        ("class", "ClassificationAnnotation", "classLabel"),
        ("shape", "ShapeAnnotation", "shape"),
        ("color", "SemanticColorAnnotation", "color"),
        ("size", "SizeAnnotation", "size"),
        ("location", "LocationAnnotation", "location"),
    ):
        ann = obj.latest(type_name)
        if ann is not None and ann.get(prop) is not None:
            parts.append(f"({attr} {ann.get(prop)})")
    return "(object " + " ".join(parts) + ")"


def _print_detect_result(engine, result, as_json: bool):
    ids = sorted(result) if isinstance(result, set) else [result]
    if as_json:
        print(json.dumps({"objects": ids}, indent=2))
        return
    if not ids:
        print("(no matches)")
    for object_id in ids:
        print(_object_sexpr(engine, object_id))


def _print_compound_result(engine, result: CompoundResult, as_json: bool):
    if as_json:
        payload = {"verb": result.verb, "objects": list(result.object_ids)}
        if result.counts:
            payload["counts"] = result.counts
        if result.track:
            payload["track"] = [
                {"tick": t, "object": o, "pose": list(p.as_tuple()) if p else None}
                for t, o, p in result.track
            ]
        print(json.dumps(payload, indent=2))
        return
    if result.verb == "count":
        for object_id in result.object_ids:
            print(f"(count #{object_id} {result.counts.get(object_id)})")
    elif result.verb == "scan":
        ids = " ".join(f"#{i}" for i in result.object_ids)
        print(f"(scan-result {ids})")
    else:
        for tick, object_id, pose in result.track:
            pose_text = " ".join(repr(v) for v in pose.as_tuple()) if pose else ""
            print(f"(track {tick} #{object_id} (pose {pose_text}))")


def cmd_plan(args) -> int:
    kb = load_ontology(*[data_path(p) for p in args.ontology], data_path(args.robot))
    robot = RobotProfile.from_knowledge_base(kb)
    registry = default_registry(kb)
    planner = Planner(registry, kb)
    q = parse_query(_query_text(args))
    try:
        base = planner.plan_for_attributes({"shape", "color", "location"}, robot)
    except PlanningError:
        base = None
    pipeline = planner.plan_for_query(q, robot, base=base)
    _print_pipeline(pipeline, args.json)
    return EXIT_OK


def cmd_run(args) -> int:
    engine = _build_engine(args)
    q = parse_query(_query_text(args))
    source = _source_of(args)
    result, pipeline = engine.answer_query(q, source)
    if pipeline is not None and args.explain:
        _print_pipeline(pipeline, False)
    if isinstance(q, Compound):
        _print_compound_result(engine, result, args.json)
    elif isinstance(q, Inspect):
        print(json.dumps(result, indent=2, default=str))
    else:
        _print_detect_result(engine, result, args.json)
    if args.dump_cas and engine.last_cas is not None:
        with open(args.dump_cas, "w", encoding="utf-8") as fh:
            fh.write(dump_cas(engine.last_cas))
    return EXIT_OK


def cmd_continuous(args) -> int:
    engine = _build_engine(args)
    episode = load_episode(data_path(args.episode))
    trajectory = engine.run_continuous(episode)
    for tick, snapshot in enumerate(trajectory):
        print(f"tick {tick}: {len(snapshot['objects'])} objects in belief")
    for event in engine.events:
        print(event)
    if args.dump_cas and engine.last_cas is not None:
        with open(args.dump_cas, "w", encoding="utf-8") as fh:
            fh.write(dump_cas(engine.last_cas))
    return EXIT_OK


def cmd_belief(args) -> int:
    engine = _build_engine(args)
    episode = load_episode(data_path(args.episode))
    engine.run_continuous(episode)
    print(engine.belief.dump())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percept",
        description="plan and run knowledge-driven perception pipelines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_episode=False):
        p.add_argument("--ontology", action="append", default=None,
                       help="ontology file (repeatable); default: kitchen")
        p.add_argument("--robot", default="pr2", help="robot profile file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--config", default=None, help="overrides file")
        p.add_argument("--filters", choices=("on", "off"), default="on")
        p.add_argument("--fusion-model", default=None, help="conditional probability table")
        p.add_argument("--noise-sigma", type=float, default=0.0)
        p.add_argument("--dump-cas", default=None, metavar="PATH",
                       help="write the final blackboard as JSON")
        if needs_episode:
            p.add_argument("--episode", required=True)
        else:
            p.add_argument("--episode", default=None)
            p.add_argument("--scene", default="kitchen.scene.json")

    p_plan = sub.add_parser("plan", help="print the pipeline for a query")
    common(p_plan)
    p_plan.add_argument("--query", default=None)
    p_plan.set_defaults(func=cmd_plan)

    p_explain = sub.add_parser("explain", help="plan with inclusion reasons")
    common(p_explain)
    p_explain.add_argument("--query", default=None)
    p_explain.set_defaults(func=cmd_plan)

    p_run = sub.add_parser("run", help="answer a query over a scene or episode")
    common(p_run)
    p_run.add_argument("--query", default=None)
    p_run.add_argument("--explain", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cont = sub.add_parser("continuous", help="run the fast loop over an episode")
    common(p_cont, needs_episode=True)
    p_cont.set_defaults(func=cmd_continuous)

    p_belief = sub.add_parser("belief", help="dump the belief state after an episode")
    common(p_belief, needs_episode=True)
    p_belief.set_defaults(func=cmd_belief)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.ontology is None:
        args.ontology = ["kitchen.onto"]
    try:
        return args.func(args)
    except AmbiguityError as err:
        print(f"ambiguous: {', '.join('#' + c for c in err.candidates)}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except NotFoundError as err:
        print(f"not found: {err}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (PlanningError, UnsupportedQuery) as err:
        print(f"planning error: {err}", file=sys.stderr)
        return EXIT_PLANNING
    except PerceptError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
