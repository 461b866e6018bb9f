"""ISO 10303-21 (STEP physical file) decoding into a typed IFC entity graph.

Covers the schema subset needed downstream: spatial structure,
relationships, placements, geometry representations, property sets,
units, spaces and proxies. Every other class is retained as an opaque
instance with positional attribute access, so nothing is dropped at
parse time.

Attribute values map to Python as: ``$`` -> None, ``*`` -> DERIVED,
``#n`` -> EntityRef, ``.FOO.`` -> EnumToken, ``IFCLABEL('x')`` ->
TypedValue, lists -> tuples, plus plain int/float/str.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DanglingReference,
    MissingHeader,
    NoBuilding,
    NoLengthUnit,
    StepSyntaxError,
)

logger = logging.getLogger(__name__)

SUPPORTED_SCHEMAS = ("IFC2X3", "IFC4")


class _Derived:
    """The STEP ``*`` placeholder (attribute derived from supertype)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DERIVED"


DERIVED = _Derived()


@dataclass(frozen=True, slots=True)
class EntityRef:
    id: int

    def __repr__(self):
        return f"#{self.id}"


@dataclass(frozen=True, slots=True)
class EnumToken:
    name: str

    def __repr__(self):
        return f".{self.name}."


@dataclass(frozen=True, slots=True)
class TypedValue:
    name: str
    value: object

    def __repr__(self):
        return f"{self.name}({self.value!r})"


@dataclass(slots=True)
class EntityInstance:
    id: int
    ifc_class: str
    attrs: tuple

    def __repr__(self):
        return f"#{self.id}={self.ifc_class}(..{len(self.attrs)} attrs..)"


@dataclass(slots=True)
class GeoRef:
    ref_latitude: float | None = None
    ref_longitude: float | None = None
    site_origin: np.ndarray | None = None   # meters, CRS as given
    true_north: np.ndarray | None = None    # unit 2-vector
    level: int = 0                           # LoGeoRef: 0 (none), 20, 30, 40, 50

    def to_dict(self):
        return {
            "ref_latitude": self.ref_latitude,
            "ref_longitude": self.ref_longitude,
            "site_origin": None if self.site_origin is None else [round(float(v), 6) for v in self.site_origin],
            "true_north": None if self.true_north is None else [round(float(v), 9) for v in self.true_north],
            "logeoref_level": self.level,
        }


class IfcGraph:
    """Decoded instance graph of one STEP file."""

    def __init__(self, instances, schema_id, warnings=None, source_name=""):
        self.instances: dict[int, EntityInstance] = instances
        self.schema_id = schema_id
        self.warnings: list[str] = warnings or []
        self.source_name = source_name
        self.length_to_meters: float | None = None
        self.georef: GeoRef | None = None
        self._by_class: dict[str, list[int]] = {}
        for inst in instances.values():
            self._by_class.setdefault(inst.ifc_class, []).append(inst.id)

    def by_type(self, ifc_class):
        """Instances of one exact class name (uppercase)."""
        return [self.instances[i] for i in self._by_class.get(ifc_class.upper(), [])]

    def inst(self, ref):
        key = ref.id if isinstance(ref, EntityRef) else ref
        return self.instances[key]

    def deref(self, value):
        """Follow an EntityRef; pass anything else through."""
        if isinstance(value, EntityRef):
            return self.instances.get(value.id)
        return value

    def attr(self, inst, name):
        """Named attribute access for subset classes, None when absent."""
        idx = attr_index(self.schema_id, inst.ifc_class, name)
        if idx is None or idx >= len(inst.attrs):
            return None
        return inst.attrs[idx]

    def warn(self, message):
        self.warnings.append(message)
        logger.warning("%s: %s", self.source_name or "<ifc>", message)


# ---------------------------------------------------------------------------
# attribute maps (hand-written subset; positional indices per schema)
# ---------------------------------------------------------------------------

_PRODUCT = {"GlobalId": 0, "OwnerHistory": 1, "Name": 2, "Description": 3,
            "ObjectType": 4, "ObjectPlacement": 5, "Representation": 6}

_COMMON_ATTRS = {
    "IFCPROJECT": {"GlobalId": 0, "Name": 2, "LongName": 5, "Phase": 6,
                   "RepresentationContexts": 7, "UnitsInContext": 8},
    "IFCSITE": {**_PRODUCT, "LongName": 7, "CompositionType": 8,
                "RefLatitude": 9, "RefLongitude": 10, "RefElevation": 11},
    "IFCBUILDING": {**_PRODUCT, "LongName": 7, "CompositionType": 8,
                    "ElevationOfRefHeight": 9, "ElevationOfTerrain": 10},
    "IFCBUILDINGSTOREY": {**_PRODUCT, "LongName": 7, "CompositionType": 8,
                          "Elevation": 9},
    "IFCSPACE": {**_PRODUCT, "LongName": 7, "CompositionType": 8,
                 "ElevationWithFlooring": 10},
    "IFCRELAGGREGATES": {"GlobalId": 0, "Name": 2, "RelatingObject": 4,
                         "RelatedObjects": 5},
    "IFCRELCONTAINEDINSPATIALSTRUCTURE": {"GlobalId": 0, "Name": 2,
                                          "RelatedElements": 4,
                                          "RelatingStructure": 5},
    "IFCRELREFERENCEDINSPATIALSTRUCTURE": {"GlobalId": 0, "Name": 2,
                                           "RelatedElements": 4,
                                           "RelatingStructure": 5},
    "IFCRELDEFINESBYPROPERTIES": {"GlobalId": 0, "Name": 2,
                                  "RelatedObjects": 4,
                                  "RelatingPropertyDefinition": 5},
    "IFCPROPERTYSET": {"GlobalId": 0, "Name": 2, "HasProperties": 4},
    "IFCPROPERTYSINGLEVALUE": {"Name": 0, "Description": 1,
                               "NominalValue": 2, "Unit": 3},
    "IFCUNITASSIGNMENT": {"Units": 0},
    "IFCSIUNIT": {"Dimensions": 0, "UnitType": 1, "Prefix": 2, "Name": 3},
    "IFCCONVERSIONBASEDUNIT": {"Dimensions": 0, "UnitType": 1, "Name": 2,
                               "ConversionFactor": 3},
    "IFCMEASUREWITHUNIT": {"ValueComponent": 0, "UnitComponent": 1},
    "IFCLOCALPLACEMENT": {"PlacementRelTo": 0, "RelativePlacement": 1},
    "IFCAXIS2PLACEMENT3D": {"Location": 0, "Axis": 1, "RefDirection": 2},
    "IFCAXIS2PLACEMENT2D": {"Location": 0, "RefDirection": 1},
    "IFCCARTESIANPOINT": {"Coordinates": 0},
    "IFCDIRECTION": {"DirectionRatios": 0},
    "IFCGEOMETRICREPRESENTATIONCONTEXT": {
        "ContextIdentifier": 0, "ContextType": 1,
        "CoordinateSpaceDimension": 2, "Precision": 3,
        "WorldCoordinateSystem": 4, "TrueNorth": 5},
    "IFCPRODUCTDEFINITIONSHAPE": {"Name": 0, "Description": 1,
                                  "Representations": 2},
    "IFCSHAPEREPRESENTATION": {"ContextOfItems": 0,
                               "RepresentationIdentifier": 1,
                               "RepresentationType": 2, "Items": 3},
    "IFCEXTRUDEDAREASOLID": {"SweptArea": 0, "Position": 1,
                             "ExtrudedDirection": 2, "Depth": 3},
    "IFCARBITRARYCLOSEDPROFILEDEF": {"ProfileType": 0, "ProfileName": 1,
                                     "OuterCurve": 2},
    "IFCRECTANGLEPROFILEDEF": {"ProfileType": 0, "ProfileName": 1,
                               "Position": 2, "XDim": 3, "YDim": 4},
    "IFCCIRCLEPROFILEDEF": {"ProfileType": 0, "ProfileName": 1,
                            "Position": 2, "Radius": 3},
    "IFCPOLYLINE": {"Points": 0},
    "IFCFACETEDBREP": {"Outer": 0},
    "IFCCLOSEDSHELL": {"CfsFaces": 0},
    "IFCOPENSHELL": {"CfsFaces": 0},
    "IFCFACE": {"Bounds": 0},
    "IFCFACEOUTERBOUND": {"Bound": 0, "Orientation": 1},
    "IFCFACEBOUND": {"Bound": 0, "Orientation": 1},
    "IFCPOLYLOOP": {"Polygon": 0},
    "IFCSHELLBASEDSURFACEMODEL": {"SbsmBoundary": 0},
    "IFCMAPPEDITEM": {"MappingSource": 0, "MappingTarget": 1},
    "IFCREPRESENTATIONMAP": {"MappingOrigin": 0, "MappedRepresentation": 1},
    "IFCCARTESIANTRANSFORMATIONOPERATOR3D": {"Axis1": 0, "Axis2": 1,
                                             "LocalOrigin": 2, "Scale": 3,
                                             "Axis3": 4},
    "IFCBOOLEANCLIPPINGRESULT": {"Operator": 0, "FirstOperand": 1,
                                 "SecondOperand": 2},
}

_IFC4_ONLY = {
    "IFCPOLYGONALFACESET": {"Coordinates": 0, "Closed": 1, "Faces": 2,
                            "PnIndex": 3},
    "IFCINDEXEDPOLYGONALFACE": {"CoordIndex": 0},
    "IFCTRIANGULATEDFACESET": {"Coordinates": 0, "Normals": 1, "Closed": 2,
                               "CoordIndex": 3, "PnIndex": 4},
    "IFCCARTESIANPOINTLIST3D": {"CoordList": 0},
    "IFCCARTESIANPOINTLIST2D": {"CoordList": 0},
    "IFCMAPCONVERSION": {"SourceCRS": 0, "TargetCRS": 1, "Eastings": 2,
                         "Northings": 3, "OrthogonalHeight": 4,
                         "XAxisAbscissa": 5, "XAxisOrdinate": 6, "Scale": 7},
}

ATTR_MAP = {
    "IFC2X3": dict(_COMMON_ATTRS),
    # IFC4 keeps the subset positions and adds the tessellated classes
    "IFC4": {**_COMMON_ATTRS, **_IFC4_ONLY},
}


def attr_index(schema_id, ifc_class, name):
    schema = "IFC4" if str(schema_id).upper().startswith("IFC4") else "IFC2X3"
    cls_map = ATTR_MAP[schema].get(ifc_class.upper())
    if cls_map is None:
        # tessellated-face-set classes appear in some 2x3 exports too
        cls_map = _IFC4_ONLY.get(ifc_class.upper())
        if cls_map is None:
            return None
    return cls_map.get(name)


# element classes excluded from geometry per the tessellation filter policy
OPENING_OR_FURNITURE = {
    "IFCOPENINGELEMENT", "IFCFURNISHINGELEMENT", "IFCFURNITURE",
    "IFCSYSTEMFURNITUREELEMENT",
}

# spatial containers are never treated as building elements
SPATIAL_CLASSES = {
    "IFCPROJECT", "IFCSITE", "IFCBUILDING", "IFCBUILDINGSTOREY", "IFCSPACE",
}


# ---------------------------------------------------------------------------
# string escapes
# ---------------------------------------------------------------------------

def decode_step_string(raw, warn=None):
    """Decode STEP string-body escapes (quotes already collapsed)."""
    if "\\" not in raw:
        return raw
    out = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        rest = raw[i + 1:i + 3]
        if raw.startswith("\\\\", i):
            out.append("\\")
            i += 2
        elif rest[:2].upper() == "S\\" and i + 3 <= n:
            out.append(chr((ord(raw[i + 3]) + 128) % 256) if i + 3 < n else "")
            i += 4
        elif raw.upper().startswith("\\X2\\", i):
            end = raw.upper().find("\\X0\\", i + 4)
            if end < 0:
                if warn:
                    warn("unterminated \\X2\\ escape")
                out.append(raw[i:])
                break
            hexpart = raw[i + 4:end]
            try:
                out.append(bytes.fromhex(hexpart).decode("utf-16-be"))
            except ValueError:
                if warn:
                    warn(f"bad \\X2\\ escape {hexpart!r}")
                out.append(raw[i:end + 4])
            i = end + 4
        elif raw.upper().startswith("\\X4\\", i):
            end = raw.upper().find("\\X0\\", i + 4)
            if end < 0:
                if warn:
                    warn("unterminated \\X4\\ escape")
                out.append(raw[i:])
                break
            hexpart = raw[i + 4:end]
            try:
                out.append(bytes.fromhex(hexpart).decode("utf-32-be"))
            except ValueError:
                if warn:
                    warn(f"bad \\X4\\ escape {hexpart!r}")
                out.append(raw[i:end + 4])
            i = end + 4
        elif rest[:2].upper() == "X\\" and i + 5 <= n:
            try:
                out.append(chr(int(raw[i + 3:i + 5], 16)))
                i += 5
            except ValueError:
                if warn:
                    warn(f"bad \\X\\ escape near {raw[i:i + 5]!r}")
                out.append(c)
                i += 1
        else:
            if warn:
                warn(f"unrecognized escape {raw[i:i + 4]!r} kept verbatim")
            out.append(c)
            i += 1
    return "".join(out)


def encode_step_string(text):
    out = []
    for ch in text:
        code = ord(ch)
        if ch == "'":
            out.append("''")
        elif ch == "\\":
            out.append("\\\\")
        elif 32 <= code < 127:
            out.append(ch)
        else:
            payload = ch.encode("utf-16-be").hex().upper()
            out.append(f"\\X2\\{payload}\\X0\\")
    return "".join(out)


# ---------------------------------------------------------------------------
# scanner / parser
# ---------------------------------------------------------------------------

_RE_WS = re.compile(r"[ \t\r\n]+")
_RE_REF = re.compile(r"#(\d+)")
_RE_ENUM = re.compile(r"\.([A-Za-z0-9_\-]+)\.")
_RE_NUM = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_RE_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


class _Scanner:
    def __init__(self, text, warn):
        self.text = text
        self.n = len(text)
        self.pos = 0
        self.warn = warn

    def error(self, message, pos=None):
        p = self.pos if pos is None else pos
        line = self.text.count("\n", 0, p) + 1
        col = p - (self.text.rfind("\n", 0, p) + 1) + 1
        raise StepSyntaxError(message, line, col)

    def skip_ws(self):
        while self.pos < self.n:
            m = _RE_WS.match(self.text, self.pos)
            if m:
                self.pos = m.end()
                continue
            if self.text.startswith("/*", self.pos):
                end = self.text.find("*/", self.pos + 2)
                if end < 0:
                    self.error("unterminated comment")
                self.pos = end + 2
                continue
            break

    def peek(self):
        return self.text[self.pos] if self.pos < self.n else ""

    def expect(self, token):
        self.skip_ws()
        if not self.text.startswith(token, self.pos):
            self.error(f"expected {token!r}")
        self.pos += len(token)

    def read_string_body(self):
        # opening quote consumed by caller; handle '' doubling
        chunks = []
        i = self.pos
        while True:
            j = self.text.find("'", i)
            if j < 0:
                self.error("unterminated string", i)
            if j + 1 < self.n and self.text[j + 1] == "'":
                chunks.append(self.text[i:j + 1])
                i = j + 2
                continue
            chunks.append(self.text[i:j])
            self.pos = j + 1
            return "".join(chunks)

    def parse_value(self):
        self.skip_ws()
        if self.pos >= self.n:
            self.error("unexpected end of input")
        c = self.text[self.pos]
        if c == "$":
            self.pos += 1
            return None
        if c == "*":
            self.pos += 1
            return DERIVED
        if c == "#":
            m = _RE_REF.match(self.text, self.pos)
            if not m:
                self.error("malformed entity reference")
            self.pos = m.end()
            ref_id = int(m.group(1))
            if ref_id <= 0:
                self.error("entity reference ids must be positive")
            return EntityRef(ref_id)
        if c == ".":
            m = _RE_ENUM.match(self.text, self.pos)
            if not m:
                self.error("malformed enum token")
            self.pos = m.end()
            return EnumToken(m.group(1).upper())
        if c == "'":
            self.pos += 1
            return decode_step_string(self.read_string_body(), self.warn)
        if c == "(":
            self.pos += 1
            items = []
            self.skip_ws()
            if self.peek() == ")":
                self.pos += 1
                return tuple(items)
            while True:
                items.append(self.parse_value())
                self.skip_ws()
                nxt = self.peek()
                if nxt == ",":
                    self.pos += 1
                    continue
                if nxt == ")":
                    self.pos += 1
                    return tuple(items)
                self.error("expected ',' or ')' in list")
        if c.isdigit() or c in "+-":
            m = _RE_NUM.match(self.text, self.pos)
            if not m:
                self.error("malformed number")
            self.pos = m.end()
            tok = m.group(0)
            if "." in tok or "e" in tok or "E" in tok:
                return float(tok)
            return int(tok)
        m = _RE_NAME.match(self.text, self.pos)
        if m:
            name = m.group(0).upper()
            self.pos = m.end()
            self.expect("(")
            inner = []
            self.skip_ws()
            if self.peek() == ")":
                self.pos += 1
                return TypedValue(name, ())
            while True:
                inner.append(self.parse_value())
                self.skip_ws()
                nxt = self.peek()
                if nxt == ",":
                    self.pos += 1
                    continue
                if nxt == ")":
                    self.pos += 1
                    break
                self.error("expected ',' or ')' in typed value")
            return TypedValue(name, inner[0] if len(inner) == 1 else tuple(inner))
        self.error(f"unexpected character {c!r}")


def _walk_refs(value):
    if isinstance(value, EntityRef):
        yield value.id
    elif isinstance(value, tuple):
        for v in value:
            yield from _walk_refs(v)
    elif isinstance(value, TypedValue):
        yield from _walk_refs(value.value)


def _replace_dangling(value, missing):
    if isinstance(value, EntityRef) and value.id in missing:
        return None
    if isinstance(value, tuple):
        return tuple(_replace_dangling(v, missing) for v in value)
    if isinstance(value, TypedValue):
        return TypedValue(value.name, _replace_dangling(value.value, missing))
    return value


def parse_step(data, strict=False, source_name=""):
    """Decode an ISO 10303-21 file (bytes or str) into an IfcGraph.

    Lenient mode (default) records a warning for each dangling reference
    and substitutes unset; strict mode raises DanglingReference.
    """
    if isinstance(data, bytes):
        text = data.decode("latin-1")
    else:
        text = data
    warnings: list[str] = []
    scanner = _Scanner(text, warnings.append)

    scanner.skip_ws()
    if not text.startswith("ISO-10303-21", scanner.pos):
        raise MissingHeader("no ISO-10303-21 banner")
    scanner.pos += len("ISO-10303-21")
    scanner.expect(";")

    schema_id = ""
    instances: dict[int, EntityInstance] = {}
    section = None
    while True:
        scanner.skip_ws()
        if scanner.pos >= scanner.n:
            break
        if text.startswith("END-ISO-10303-21", scanner.pos):
            break
        c = scanner.peek()
        if c == "#":
            start = scanner.pos
            m = _RE_REF.match(text, scanner.pos)
            if not m:
                scanner.error("malformed record id")
            rec_id = int(m.group(1))
            scanner.pos = m.end()
            scanner.expect("=")
            scanner.skip_ws()
            m = _RE_NAME.match(text, scanner.pos)
            if not m:
                scanner.error("expected class name")
            ifc_class = m.group(0).upper()
            scanner.pos = m.end()
            scanner.expect("(")
            attrs = []
            scanner.skip_ws()
            if scanner.peek() == ")":
                scanner.pos += 1
            else:
                while True:
                    attrs.append(scanner.parse_value())
                    scanner.skip_ws()
                    nxt = scanner.peek()
                    if nxt == ",":
                        scanner.pos += 1
                        continue
                    if nxt == ")":
                        scanner.pos += 1
                        break
                    scanner.error("expected ',' or ')' in record")
            scanner.expect(";")
            if rec_id in instances:
                scanner.error(f"duplicate instance id #{rec_id}", start)
            instances[rec_id] = EntityInstance(rec_id, ifc_class, tuple(attrs))
            continue
        m = _RE_NAME.match(text, scanner.pos)
        if m:
            kw = m.group(0).upper()
            scanner.pos = m.end()
            if kw in ("HEADER", "DATA"):
                scanner.expect(";")
                section = kw
                continue
            if kw == "ENDSEC":
                scanner.expect(";")
                section = None
                continue
            # header entry such as FILE_SCHEMA(('IFC2X3'));
            scanner.expect("(")
            depth = 1
            arg_start = scanner.pos
            while depth > 0:
                scanner.skip_ws()
                ch = scanner.peek()
                if ch == "":
                    scanner.error("unterminated header entry")
                if ch == "'":
                    scanner.pos += 1
                    scanner.read_string_body()
                    continue
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                scanner.pos += 1
            args_text = text[arg_start:scanner.pos - 1]
            scanner.expect(";")
            if kw == "FILE_SCHEMA":
                m2 = re.search(r"'([^']*)'", args_text)
                if m2:
                    schema_id = m2.group(1).upper()
            continue
        scanner.error(f"unexpected character {c!r}")

    if section == "DATA":
        warnings.append("file ends inside DATA section (no ENDSEC)")
    if not schema_id:
        warnings.append("no FILE_SCHEMA header entry; assuming IFC2X3")
        schema_id = "IFC2X3"
    elif not schema_id.startswith(SUPPORTED_SCHEMAS):
        warnings.append(f"unsupported schema {schema_id!r}; best-effort parse")

    # reference resolution
    missing_by_record = []
    for inst in instances.values():
        for ref_id in _walk_refs(inst.attrs):
            if ref_id not in instances:
                missing_by_record.append((inst.id, ref_id))
    if missing_by_record:
        if strict:
            rec_id, ref_id = missing_by_record[0]
            raise DanglingReference(ref_id, rec_id)
        missing = {ref for _, ref in missing_by_record}
        for rec_id, ref_id in missing_by_record:
            warnings.append(f"dangling reference #{ref_id} in #{rec_id} -> unset")
        for key, inst in instances.items():
            instances[key] = EntityInstance(
                inst.id, inst.ifc_class, _replace_dangling(inst.attrs, missing))

    graph = IfcGraph(instances, schema_id, warnings, source_name)
    return graph


# ---------------------------------------------------------------------------
# serialization (token-level round trip)
# ---------------------------------------------------------------------------

def format_value(value):
    if value is None:
        return "$"
    if value is DERIVED:
        return "*"
    if isinstance(value, EntityRef):
        return f"#{value.id}"
    if isinstance(value, EnumToken):
        return f".{value.name}."
    if isinstance(value, TypedValue):
        inner = value.value
        if isinstance(inner, tuple) and not isinstance(inner, EntityRef):
            body = ",".join(format_value(v) for v in inner)
        else:
            body = format_value(inner)
        return f"{value.name}({body})"
    if isinstance(value, bool):
        return ".T." if value else ".F."
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        if "e" in text or "E" in text:
            mant, _, exp = text.partition("e" if "e" in text else "E")
            if "." not in mant:
                mant += ".0"
            text = f"{mant}E{exp}"
        elif "." not in text and "inf" not in text and "nan" not in text:
            text += ".0"
        return text
    if isinstance(value, str):
        return f"'{encode_step_string(value)}'"
    if isinstance(value, tuple):
        return "(" + ",".join(format_value(v) for v in value) + ")"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def serialize_record(inst):
    body = ",".join(format_value(v) for v in inst.attrs)
    return f"#{inst.id}={inst.ifc_class}({body});"


def serialize_graph(graph, file_name="model.ifc"):
    lines = [
        "ISO-10303-21;",
        "HEADER;",
        "FILE_DESCRIPTION((''),'2;1');",
        f"FILE_NAME('{encode_step_string(file_name)}','',(''),(''),'','','');",
        f"FILE_SCHEMA(('{graph.schema_id}'));",
        "ENDSEC;",
        "DATA;",
    ]
    lines.extend(serialize_record(inst) for inst in graph.instances.values())
    lines.append("ENDSEC;")
    lines.append("END-ISO-10303-21;")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

_SI_PREFIX = {
    "EXA": 1e18, "PETA": 1e15, "TERA": 1e12, "GIGA": 1e9, "MEGA": 1e6,
    "KILO": 1e3, "HECTO": 1e2, "DECA": 1e1, "DECI": 1e-1, "CENTI": 1e-2,
    "MILLI": 1e-3, "MICRO": 1e-6, "NANO": 1e-9, "PICO": 1e-12,
    "FEMTO": 1e-15, "ATTO": 1e-18,
}


def _plain_number(value):
    if isinstance(value, TypedValue):
        value = value.value
    if isinstance(value, (int, float)):
        return float(value)
    return None


def _unit_scale(graph, unit_inst, depth=0):
    if depth > 8 or unit_inst is None:
        return None
    cls = unit_inst.ifc_class
    if cls == "IFCSIUNIT":
        prefix = graph.attr(unit_inst, "Prefix")
        name = graph.attr(unit_inst, "Name")
        scale = 1.0
        if isinstance(prefix, EnumToken):
            scale = _SI_PREFIX.get(prefix.name, 1.0)
        if isinstance(name, EnumToken) and name.name != "METRE":
            graph.warn(f"SI length unit named {name.name}, treated as METRE")
        return scale
    if cls == "IFCCONVERSIONBASEDUNIT":
        mwu = graph.deref(graph.attr(unit_inst, "ConversionFactor"))
        if mwu is None:
            return None
        factor = _plain_number(graph.attr(mwu, "ValueComponent"))
        base = graph.deref(graph.attr(mwu, "UnitComponent"))
        base_scale = _unit_scale(graph, base, depth + 1)
        if factor is None or base_scale is None:
            return None
        return factor * base_scale
    return None


def resolve_units(graph):
    """Resolve the project length unit to a meters-per-unit factor."""
    projects = graph.by_type("IFCPROJECT")
    if not projects:
        raise NoLengthUnit("no IfcProject in file")
    assignment = graph.deref(graph.attr(projects[0], "UnitsInContext"))
    if assignment is None:
        raise NoLengthUnit("project has no unit assignment")
    units = graph.attr(assignment, "Units") or ()
    for ref in units:
        unit = graph.deref(ref)
        if unit is None:
            continue
        unit_type = None
        if unit.ifc_class in ("IFCSIUNIT", "IFCCONVERSIONBASEDUNIT"):
            unit_type = graph.attr(unit, "UnitType")
        if isinstance(unit_type, EnumToken) and unit_type.name == "LENGTHUNIT":
            scale = _unit_scale(graph, unit)
            if scale is not None and scale > 0:
                graph.length_to_meters = scale
                return scale
    raise NoLengthUnit("no length unit in project unit assignment")


def _require_units(graph):
    if graph.length_to_meters is None:
        resolve_units(graph)
    return graph.length_to_meters


# ---------------------------------------------------------------------------
# spatial structure
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class StoreyNode:
    entity_id: int
    name: str
    elevation: float                    # meters
    contained: list[int] = field(default_factory=list)
    referenced: list[int] = field(default_factory=list)
    multi_storey: set[int] = field(default_factory=set)

    @property
    def element_ids(self):
        return list(self.contained) + [r for r in self.referenced
                                       if r not in self.contained]


@dataclass(slots=True)
class SpatialTree:
    project: int | None
    sites: list[int]
    buildings: list[int]
    storeys: list[StoreyNode]


def extract_spatial_structure(graph):
    """Project -> site -> building -> storey tree with element containment."""
    scale = _require_units(graph)
    if not graph.by_type("IFCBUILDING"):
        raise NoBuilding(f"{graph.source_name or 'model'} has no IfcBuilding")

    children = {}
    for rel in graph.by_type("IFCRELAGGREGATES"):
        relating = graph.attr(rel, "RelatingObject")
        related = graph.attr(rel, "RelatedObjects") or ()
        if isinstance(relating, EntityRef):
            children.setdefault(relating.id, []).extend(
                r.id for r in related if isinstance(r, EntityRef))

    projects = graph.by_type("IFCPROJECT")
    project_id = projects[0].id if projects else None
    sites = [inst.id for inst in graph.by_type("IFCSITE")]
    buildings = [inst.id for inst in graph.by_type("IFCBUILDING")]

    storey_nodes = {}
    order = []

    def visit(node_id, seen):
        if node_id in seen:
            return
        seen.add(node_id)
        inst = graph.instances.get(node_id)
        if inst is None:
            return
        if inst.ifc_class == "IFCBUILDINGSTOREY" and node_id not in storey_nodes:
            order.append(node_id)
            elev = _plain_number(graph.attr(inst, "Elevation")) or 0.0
            name = graph.attr(inst, "Name") or graph.attr(inst, "LongName") \
                or f"#{node_id}"
            storey_nodes[node_id] = StoreyNode(node_id, str(name), elev * scale)
        for child in children.get(node_id, ()):
            visit(child, seen)

    roots = [project_id] if project_id else sites + buildings
    seen = set()
    for root in roots:
        visit(root, seen)
    for inst in graph.by_type("IFCBUILDINGSTOREY"):
        if inst.id not in storey_nodes:
            graph.warn(f"storey #{inst.id} not reachable via IfcRelAggregates")
            visit(inst.id, seen)

    element_storeys = {}
    for rel_class, bucket in (
        ("IFCRELCONTAINEDINSPATIALSTRUCTURE", "contained"),
        ("IFCRELREFERENCEDINSPATIALSTRUCTURE", "referenced"),
    ):
        for rel in graph.by_type(rel_class):
            structure = graph.attr(rel, "RelatingStructure")
            if not isinstance(structure, EntityRef):
                continue
            node = storey_nodes.get(structure.id)
            if node is None:
                continue
            for ref in graph.attr(rel, "RelatedElements") or ():
                if not isinstance(ref, EntityRef):
                    continue
                getattr(node, bucket).append(ref.id)
                element_storeys.setdefault(ref.id, []).append(structure.id)

    for element_id, storey_ids in element_storeys.items():
        if len(set(storey_ids)) > 1:
            for sid in set(storey_ids):
                storey_nodes[sid].multi_storey.add(element_id)

    storeys = [storey_nodes[i] for i in order]
    return SpatialTree(project_id, sites, buildings, storeys)


# ---------------------------------------------------------------------------
# georeference
# ---------------------------------------------------------------------------

def _compound_angle_degrees(value):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, tuple):
        parts = [p for p in value if isinstance(p, (int, float))]
        if not parts:
            return None
        sign = -1.0 if parts[0] < 0 else 1.0
        mags = [abs(float(p)) for p in parts] + [0.0] * (4 - len(parts))
        return sign * (mags[0] + mags[1] / 60 + mags[2] / 3600
                       + mags[3] / 3600e6)
    return None


def extract_georeference(graph):
    """Georeference fields from IfcSite and the representation context."""
    from .geometry import placement_matrix  # placement math lives there

    scale = _require_units(graph)
    georef = GeoRef()
    sites = graph.by_type("IFCSITE")
    if sites:
        site = sites[0]
        georef.ref_latitude = _compound_angle_degrees(
            graph.attr(site, "RefLatitude"))
        georef.ref_longitude = _compound_angle_degrees(
            graph.attr(site, "RefLongitude"))
        placement = graph.attr(site, "ObjectPlacement")
        if isinstance(placement, EntityRef):
            matrix = placement_matrix(graph, placement.id)
            georef.site_origin = matrix[:3, 3] * scale

    context_origin = None
    for ctx in graph.by_type("IFCGEOMETRICREPRESENTATIONCONTEXT"):
        tn = graph.deref(graph.attr(ctx, "TrueNorth"))
        if tn is not None:
            ratios = graph.attr(tn, "DirectionRatios") or ()
            vec = np.array([float(v) for v in ratios[:2]], dtype=float)
            norm = float(np.linalg.norm(vec))
            if norm > 0:
                georef.true_north = vec / norm
        wcs = graph.deref(graph.attr(ctx, "WorldCoordinateSystem"))
        if wcs is not None:
            loc = graph.deref(graph.attr(wcs, "Location"))
            if loc is not None:
                coords = graph.attr(loc, "Coordinates") or ()
                vals = [float(v) for v in coords if isinstance(v, (int, float))]
                if vals:
                    context_origin = np.array((vals + [0.0, 0.0, 0.0])[:3])

    has_map_conversion = bool(graph.by_type("IFCMAPCONVERSION"))
    site_origin_set = (georef.site_origin is not None
                       and float(np.linalg.norm(georef.site_origin)) > 1e-9)
    context_origin_set = (context_origin is not None
                          and float(np.linalg.norm(context_origin)) > 1e-9)
    if has_map_conversion:
        georef.level = 50
    elif context_origin_set:
        georef.level = 40
    elif site_origin_set:
        georef.level = 30
    elif georef.ref_latitude is not None and georef.ref_longitude is not None:
        georef.level = 20
    else:
        georef.level = 0

    graph.georef = georef
    return georef


# ---------------------------------------------------------------------------
# property sets
# ---------------------------------------------------------------------------

def property_sets(graph, element_id):
    """Map pset name -> {property name -> plain value} for one element."""
    psets = {}
    for rel in graph.by_type("IFCRELDEFINESBYPROPERTIES"):
        related = graph.attr(rel, "RelatedObjects") or ()
        if not any(isinstance(r, EntityRef) and r.id == element_id
                   for r in related):
            continue
        pset = graph.deref(graph.attr(rel, "RelatingPropertyDefinition"))
        if pset is None or pset.ifc_class != "IFCPROPERTYSET":
            continue
        name = graph.attr(pset, "Name")
        props = {}
        for pref in graph.attr(pset, "HasProperties") or ():
            prop = graph.deref(pref)
            if prop is None or prop.ifc_class != "IFCPROPERTYSINGLEVALUE":
                continue
            pname = graph.attr(prop, "Name")
            pvalue = graph.attr(prop, "NominalValue")
            if isinstance(pvalue, TypedValue):
                pvalue = pvalue.value
            props[str(pname)] = pvalue
        psets[str(name)] = props
    return psets


def _pset_index(graph):
    """element id -> {pset name -> props}; built once per graph."""
    cache = getattr(graph, "_pset_cache", None)
    if cache is not None:
        return cache
    index = {}
    for rel in graph.by_type("IFCRELDEFINESBYPROPERTIES"):
        pset = graph.deref(graph.attr(rel, "RelatingPropertyDefinition"))
        if pset is None or pset.ifc_class != "IFCPROPERTYSET":
            continue
        name = str(graph.attr(pset, "Name"))
        props = {}
        for pref in graph.attr(pset, "HasProperties") or ():
            prop = graph.deref(pref)
            if prop is None or prop.ifc_class != "IFCPROPERTYSINGLEVALUE":
                continue
            pvalue = graph.attr(prop, "NominalValue")
            if isinstance(pvalue, TypedValue):
                pvalue = pvalue.value
            props[str(graph.attr(prop, "Name"))] = pvalue
        for ref in graph.attr(rel, "RelatedObjects") or ():
            if isinstance(ref, EntityRef):
                index.setdefault(ref.id, {})[name] = props
    graph._pset_cache = index
    return index


def element_property(graph, element_id, pset_name, prop_name):
    """One property value, or None. Case-insensitive pset/property names."""
    psets = _pset_index(graph).get(element_id, {})
    for name, props in psets.items():
        if name.lower() != pset_name.lower():
            continue
        for pname, pvalue in props.items():
            if pname.lower() == prop_name.lower():
                return pvalue
    return None


# generic product accessors (IfcProduct layout is positionally fixed)

def product_name(inst):
    if len(inst.attrs) > 2 and isinstance(inst.attrs[2], str):
        return inst.attrs[2]
    return None


def product_placement_ref(inst):
    if len(inst.attrs) > 5 and isinstance(inst.attrs[5], EntityRef):
        return inst.attrs[5]
    return None


def product_representation_ref(inst):
    if len(inst.attrs) > 6 and isinstance(inst.attrs[6], EntityRef):
        return inst.attrs[6]
    return None
