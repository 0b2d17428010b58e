"""Exception types shared across the library.

Every error raised by percept derives from PerceptError so callers can
catch broadly; the CLI maps specific subclasses to exit codes.
"""


class PerceptError(Exception):
    pass


# --- knowledge base ---------------------------------------------------------

class OntologyError(PerceptError):
    pass


class ParseError(OntologyError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class CycleError(OntologyError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cyclic parent relation: " + " -> ".join(self.cycle))


class UnknownReference(OntologyError):
    def __init__(self, symbol, context=""):
        self.symbol = symbol
        suffix = f" ({context})" if context else ""
        super().__init__(f"unknown symbol '{symbol}'{suffix}")


class UnknownType(OntologyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"type '{name}' is not declared")


# --- blackboard --------------------------------------------------------------

class CasError(PerceptError):
    pass


class InvalidObservation(CasError):
    pass


class RegionOutOfBounds(CasError):
    pass


class UnknownHypothesis(CasError):
    def __init__(self, hyp_id):
        self.hyp_id = hyp_id
        super().__init__(f"no hypothesis '{hyp_id}' in this CAS")


class TypeCheckError(CasError):
    def __init__(self, message, property_name=None):
        self.property_name = property_name
        super().__init__(message)


# --- query language ----------------------------------------------------------

class QueryError(PerceptError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, message, position=None, expected=None):
        self.position = position
        self.expected = expected
        where = f" at offset {position}" if position is not None else ""
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message}{where}{hint}")


class UnknownAttribute(QueryError):
    def __init__(self, name, suggestion=None):
        self.name = name
        self.suggestion = suggestion
        hint = f", did you mean '{suggestion}'?" if suggestion else ""
        super().__init__(f"unknown attribute '{name}'{hint}")


class ArityError(QueryError):
    pass


class AmbiguityError(QueryError):
    """Raised when a 'the' query matches more than one object.

    Carries every candidate so the caller can disambiguate.
    """

    def __init__(self, candidates):
        self.candidates = sorted(candidates)
        super().__init__("ambiguous result: " + ", ".join(self.candidates))


class NotFoundError(QueryError):
    def __init__(self, message="no object matches the description"):
        super().__init__(message)


class UnsupportedQuery(QueryError):
    pass


# --- registry / planning -----------------------------------------------------

class RegistryError(PerceptError):
    pass


class DuplicateName(RegistryError):
    pass


class PreconditionUnmet(RegistryError):
    def __init__(self, annotator, missing):
        self.annotator = annotator
        self.missing = sorted(missing)
        super().__init__(
            f"annotator '{annotator}' is missing required input types: "
            + ", ".join(self.missing)
        )


class PlanningError(PerceptError):
    pass


class NoProvider(PlanningError):
    def __init__(self, attribute):
        self.attribute = attribute
        super().__init__(f"no registered annotator can produce '{attribute}'")


class CapabilityMissing(PlanningError):
    def __init__(self, annotator, capability):
        self.annotator = annotator
        self.capability = capability
        super().__init__(
            f"annotator '{annotator}' requires capability '{capability}' "
            "which the robot does not have"
        )


class NoDescription(PlanningError):
    def __init__(self, class_name):
        self.class_name = class_name
        super().__init__(f"class '{class_name}' has no visual properties to plan from")


class CyclicDependency(PlanningError):
    def __init__(self, names):
        self.names = sorted(names)
        super().__init__("cyclic annotator dependencies: " + ", ".join(self.names))


class UnknownObject(PlanningError):
    def __init__(self, object_id):
        self.object_id = object_id
        super().__init__(f"no belief-state object '{object_id}'")


# --- engine -------------------------------------------------------------------

class EngineError(PerceptError):
    pass


class UnknownCommand(EngineError):
    pass


class MissingParameter(EngineError):
    pass


class NoEvidence(EngineError):
    """Fusion was asked to classify a hypothesis without any known atoms."""
