"""Exception types shared across the sitewalk stack."""


class SitewalkError(Exception):
    """Base class for all sitewalk-specific errors."""


class ParseError(SitewalkError):
    """Malformed input document."""


class ValidationError(SitewalkError):
    """Structurally valid document that violates a model invariant.

    `element_id` names the offending element when one can be identified.
    """

    def __init__(self, message: str, element_id: str | None = None):
        super().__init__(message)
        self.element_id = element_id


class EmptyRegionError(SitewalkError):
    """Walkable region extraction produced zero area."""


class ResolutionError(SitewalkError):
    """Requested grid resolution would exceed the cell budget."""


class NoPathError(SitewalkError):
    """Start and goal are not connected on the navigation grid.

    `drp_id` names the first unreachable capture point when ordering a tour.
    """

    def __init__(self, message: str, drp_id: str | None = None):
        super().__init__(message)
        self.drp_id = drp_id


class SnapError(NoPathError):
    """A requested point has no walkable cell within the snap radius."""


class SimulationInvariantError(SitewalkError):
    """The simulated robot left the walkable region."""


class MissionParseError(SitewalkError):
    """Mission wire document failed to parse or validate."""


class BusyError(SitewalkError):
    """Middleware already has a mission in flight."""


class ExecutionError(SitewalkError):
    """Mission execution failed or timed out on the middleware."""


class MissionTimeout(SitewalkError):
    """Client gave up waiting for mission completion."""


class StorageError(SitewalkError):
    """Relay persistence I/O failure."""


class RelayProtocolError(SitewalkError):
    """Envelope violates the relay wire contract.

    `code` carries the protocol error code (UNAUTHORIZED, CONFLICT, ...).
    """

    def __init__(self, code: str, message: str = ""):
        super().__init__(message or code)
        self.code = code
