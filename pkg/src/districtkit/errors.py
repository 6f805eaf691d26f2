"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`DistrictkitError`; the CLI maps those to exit code 1.
"""


class DistrictkitError(Exception):
    """Base class for data and validation errors."""


# geometry kernel
class InvalidGeometry(DistrictkitError):
    pass


class GeometryCollapsed(DistrictkitError):
    def __init__(self, unit_id, grid):
        super().__init__(f"geometry of unit {unit_id!r} vanishes when snapped to grid {grid}")
        self.unit_id = unit_id
        self.grid = grid


class OutOfDomain(DistrictkitError):
    pass


# repair / graph
class RepairFailed(DistrictkitError):
    pass


class NotClean(DistrictkitError):
    def __init__(self, report):
        super().__init__(f"layer is not clean: {report.summary()}")
        self.report = report


class DisconnectsGraph(DistrictkitError):
    def __init__(self, edges, n_components):
        edges = list(edges)
        super().__init__(
            f"mending {len(edges)} small rook adjacencies would split the graph into "
            f"{n_components} components; offending edges: {edges[:10]}"
        )
        self.edges = edges
        self.n_components = n_components


# assignment
class CrsMismatch(DistrictkitError):
    pass


class NegativeWeight(DistrictkitError):
    pass


class PopulationNotConserved(DistrictkitError):
    def __init__(self, column, expected, got, lost_units=()):
        lost_units = list(lost_units)
        msg = f"population not conserved for {column}: source total {expected}, assigned total {got}"
        if lost_units:
            msg += f"; orphaned units: {', '.join(map(str, lost_units[:20]))}"
        super().__init__(msg)
        self.column = column
        self.expected = expected
        self.got = got
        self.lost_units = lost_units


# pipeline
class AmbiguousDistrictColumn(DistrictkitError):
    pass


class MissingDistrictColumn(DistrictkitError):
    pass


class UnassignedPrecinct(DistrictkitError):
    pass


class NonStatewideRace(DistrictkitError):
    pass


class ConfigError(DistrictkitError):
    pass


class BuildError(DistrictkitError):
    """An upstream error annotated with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


# io
class UnsupportedShapeType(DistrictkitError):
    pass


class MalformedRecord(DistrictkitError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedEncoding(DistrictkitError):
    pass


class ParseError(DistrictkitError):
    def __init__(self, message, line=None, column=None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class AsymmetricAdjacency(DistrictkitError):
    pass


# chain / analysis
class DisconnectedDistrict(DistrictkitError):
    def __init__(self, label, components):
        sizes = [len(c) for c in components]
        super().__init__(f"district {label!r} is disconnected ({len(components)} components, sizes {sizes})")
        self.label = label
        self.components = components


class NoCutEdges(DistrictkitError):
    pass


class MissingColumn(DistrictkitError):
    pass


class EmptyEnsemble(DistrictkitError):
    pass


class InvalidLayer(DistrictkitError):
    pass


class Disconnected(DistrictkitError):
    """A spanning tree was requested for a disconnected node set."""
