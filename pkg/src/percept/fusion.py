"""Probabilistic merging of annotator evidence.

Different experts assert overlapping, sometimes contradictory atoms about
one hypothesis (a linemod match, read text, a logo, semantic color,
shape, size). A conditional probability table P(atom | class) plus a
class prior combine them into a single classification by naive Bayes;
atoms the model does not know are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .cas import Annotation, Hypothesis
from .errors import NoEvidence

#: annotation type -> (predicate, property) for reading evidence atoms
ATOM_SOURCES = {
    "LinemodAtom": ("linemod", "match"),
    "TextAtom": ("text", "text"),
    "LogoAtom": ("logo", "logo"),
    "SemanticColorAnnotation": ("color", "color"),
    "ShapeAnnotation": ("shape", "shape"),
    "SizeAnnotation": ("size", "size"),
}


@dataclass
class FusionModel:
    classes: tuple
    atoms: tuple  # ((predicate, value), ...)
    cpt: dict = field(default_factory=dict)  # (predicate, value) -> {class: p}
    class_prior: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.class_prior:
            uniform = 1.0 / len(self.classes)
            self.class_prior = {c: uniform for c in self.classes}
        total = sum(self.class_prior.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class prior sums to {total}, expected 1")
        for atom, row in self.cpt.items():
            for c, p in row.items():
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"P({atom} | {c}) = {p} outside [0, 1]")

    def knows(self, atom: tuple) -> bool:
        return atom in self.cpt

    def probability(self, atom: tuple, class_name: str) -> float:
        return self.cpt[atom].get(class_name, 0.0)

    @classmethod
    def from_dict(cls, data: dict) -> "FusionModel":
        classes = tuple(data["classes"])
        atoms = []
        cpt = {}
        for row in data["cpt"]:
            atom = (row["predicate"], row["value"])
            atoms.append(atom)
            cpt[atom] = {c: float(p) for c, p in zip(classes, row["given"])}
        prior = {c: float(p) for c, p in data.get("classPrior", {}).items()}
        return cls(classes=classes, atoms=tuple(atoms), cpt=cpt, class_prior=prior)

    @classmethod
    def load(cls, path) -> "FusionModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def atoms_of(hypothesis: Hypothesis) -> list:
    """(predicate, value) ground atoms carried by a hypothesis."""
    atoms = []
    for ann in hypothesis.annotations:
        source = ATOM_SOURCES.get(ann.type_name)
        if source is None:
            continue
        predicate, prop = source
        value = ann.get(prop)
        if value is not None:
            atoms.append((predicate, value))
    return atoms


def posterior(model: FusionModel, atoms) -> dict:
    """P(class | atoms) over the model's classes.

    Unknown atoms are ignored; with no known atom at all this raises
    NoEvidence. If the evidence zeroes out every class, the prior is
    returned (the evidence was uninformative, not impossible).
    """
    known = [a for a in atoms if model.knows(a)]
    if not known:
        raise NoEvidence("no atom is covered by the fusion model")
    scores = {}
    for c in model.classes:
        p = model.class_prior[c]
        for atom in known:
            p *= model.probability(atom, c)
        scores[c] = p
    total = sum(scores.values())
    if total <= 0.0:
        return dict(model.class_prior)
    return {c: p / total for c, p in scores.items()}


def fuse_annotations(hypothesis: Hypothesis, model: FusionModel) -> Annotation:
    """Collapse a hypothesis's evidence atoms into one classification.

    Ties on the posterior break lexicographically so fusion is
    deterministic.
    """
    dist = posterior(model, atoms_of(hypothesis))
    best = max(sorted(dist), key=lambda c: dist[c])
    return Annotation.make(
        "ClassificationAnnotation",
        classLabel=best,
        classConfidence=round(dist[best], 9),
        classifierName="bayes_fusion",
    )
