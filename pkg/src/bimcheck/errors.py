"""Exception hierarchy for the toolchain.

Every error carries a stable ``code`` used by the HTTP service and the
JSON reports, so callers never have to match on message text.
"""


class BimcheckError(Exception):
    """Base class for all toolchain errors."""

    code = "error"


# --- STEP parsing ---------------------------------------------------------

class MissingHeader(BimcheckError):
    code = "missing_header"


class StepSyntaxError(BimcheckError):
    code = "syntax_error"

    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class DanglingReference(BimcheckError):
    code = "dangling_reference"

    def __init__(self, ref_id, record_id=None):
        where = f" in #{record_id}" if record_id is not None else ""
        super().__init__(f"reference #{ref_id}{where} does not resolve")
        self.ref_id = ref_id
        self.record_id = record_id


class NoLengthUnit(BimcheckError):
    code = "no_length_unit"


class NoBuilding(BimcheckError):
    code = "no_building"


# --- geometry -------------------------------------------------------------

class CyclicPlacement(BimcheckError):
    code = "cyclic_placement"


class UnsupportedRepresentation(BimcheckError):
    code = "unsupported_representation"

    def __init__(self, kind, element_id=None):
        super().__init__(f"unsupported representation item {kind!r}"
                         + (f" on element #{element_id}" if element_id else ""))
        self.kind = kind
        self.element_id = element_id


class EmptyModel(BimcheckError):
    code = "empty_model"


# --- federation / storeys -------------------------------------------------

class FrameMismatch(BimcheckError):
    code = "frame_mismatch"


class NoStoreys(BimcheckError):
    code = "no_storeys"


# --- footprints -----------------------------------------------------------

class DegenerateInput(BimcheckError):
    code = "degenerate_input"


class EmptyCut(BimcheckError):
    code = "empty_cut"


class ZeroReference(BimcheckError):
    code = "zero_reference"


class NoVertices(BimcheckError):
    code = "no_vertices"


# --- export ---------------------------------------------------------------

class NoGeoreference(BimcheckError):
    code = "no_georeference"
