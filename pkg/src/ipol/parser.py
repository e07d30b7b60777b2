"""Reader/writer for operator-chain and platform documents.

The format is strict: unknown elements or attributes inside known elements
are errors, not warnings, so typos in hand-written documents surface
immediately.  Every syntax or schema error carries the line it arose on.
Serialisation is canonical (sections sorted by id, two-space indent) and
idempotent after one parse/serialize pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from xml.parsers import expat
from xml.sax.saxutils import escape, quoteattr

from .calc import (
    COMBINES,
    FUNCTIONS,
    Apply,
    BaseCalc,
    Composite,
    Const,
    Conv2d,
    GlobalOp,
    Pointwise,
    Rank,
    Var,
    opaque,
)
from .errors import FieldValueError, SchemaError, XmlSyntaxError
from .hardware import PlatformSpec, ProcessingUnit
from .model import (
    AreaSpec,
    ConnectionSpec,
    OperatorChainSpec,
    OperatorSpec,
    SensorSpec,
    SinkSpec,
)
from .rationals import parse_int, parse_rational, rational_str


# ---------------------------------------------------------------------------
# Generic XML layer: a minimal tree that remembers line numbers.


@dataclass
class XmlNode:
    tag: str
    attrib: dict[str, str]
    line: int
    children: list["XmlNode"] = field(default_factory=list)
    text: str = ""

    def pretty(self) -> str:
        return f"<{self.tag}>"


def parse_xml(document: bytes | str) -> XmlNode:
    """Parse UTF-8 XML into an XmlNode tree; prolog and comments are fine."""
    if isinstance(document, str):
        document = document.encode("utf-8")
    parser = expat.ParserCreate(encoding="utf-8")
    root: list[XmlNode] = []
    stack: list[XmlNode] = []

    def start(tag, attrs):
        node = XmlNode(tag=tag, attrib=dict(attrs), line=parser.CurrentLineNumber)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(tag):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text += data

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(document, True)
    except expat.ExpatError as exc:
        raise XmlSyntaxError(
            expat.errors.messages[exc.code], line=exc.lineno
        ) from exc
    if not root:
        raise XmlSyntaxError("document has no root element", line=1)
    return root[0]


def _require_tag(node: XmlNode, tag: str) -> None:
    if node.tag != tag:
        raise SchemaError(f"expected <{tag}>, found <{node.tag}>", line=node.line)


def _check_attrs(node: XmlNode, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    for name in node.attrib:
        if name not in required and name not in optional:
            raise SchemaError(
                f"unknown attribute {name!r} on <{node.tag}>", line=node.line
            )
    for name in required:
        if name not in node.attrib:
            raise SchemaError(
                f"<{node.tag}> is missing attribute {name!r}", line=node.line
            )


def _no_stray_text(node: XmlNode) -> None:
    if node.text.strip():
        raise SchemaError(
            f"unexpected text inside <{node.tag}>", line=node.line
        )


def _child_map(node: XmlNode, known: tuple[str, ...]) -> dict[str, list[XmlNode]]:
    _no_stray_text(node)
    out: dict[str, list[XmlNode]] = {tag: [] for tag in known}
    for child in node.children:
        if child.tag not in out:
            raise SchemaError(
                f"unknown element <{child.tag}> inside <{node.tag}>", line=child.line
            )
        out[child.tag].append(child)
    return out


def _one(node: XmlNode, children: dict[str, list[XmlNode]], tag: str) -> XmlNode:
    got = children[tag]
    if not got:
        raise SchemaError(f"<{node.tag}> is missing element <{tag}>", line=node.line)
    if len(got) > 1:
        raise SchemaError(f"duplicate element <{tag}> in <{node.tag}>", line=got[1].line)
    return got[0]


def _leaf_text(node: XmlNode) -> str:
    if node.children:
        raise SchemaError(
            f"<{node.tag}> must hold text, not elements", line=node.children[0].line
        )
    return node.text.strip()


def _int_text(node: XmlNode) -> int:
    try:
        return parse_int(_leaf_text(node))
    except ValueError as exc:
        raise FieldValueError(
            f"<{node.tag}> is not a decimal integer: {_leaf_text(node)!r}",
            line=node.line,
        ) from exc


def _rational_text(node: XmlNode) -> Fraction:
    try:
        return parse_rational(_leaf_text(node))
    except ValueError as exc:
        raise FieldValueError(
            f"<{node.tag}> is not a number: {_leaf_text(node)!r}", line=node.line
        ) from exc


def _int_attr(node: XmlNode, name: str) -> int:
    try:
        return parse_int(node.attrib[name])
    except ValueError as exc:
        raise FieldValueError(
            f"attribute {name!r} of <{node.tag}> is not a decimal integer: "
            f"{node.attrib[name]!r}",
            line=node.line,
        ) from exc


def _rational_attr(node: XmlNode, name: str) -> Fraction:
    try:
        return parse_rational(node.attrib[name])
    except ValueError as exc:
        raise FieldValueError(
            f"attribute {name!r} of <{node.tag}> is not a number: "
            f"{node.attrib[name]!r}",
            line=node.line,
        ) from exc


# ---------------------------------------------------------------------------
# Operator-chain documents.


def parse_ipol(document: bytes | str) -> OperatorChainSpec:
    """Parse an operator-chain document into a validated spec."""
    root = parse_xml(document)
    _require_tag(root, "operatorchain")
    _check_attrs(root, required=())
    children = _child_map(root, ("image_operator", "connections"))

    sensors: list[SensorSpec] = []
    operators: list[OperatorSpec] = []
    sinks: list[SinkSpec] = []
    seen_ids: set[int] = set()
    for el in children["image_operator"]:
        node = _parse_image_operator(el)
        if node.id in seen_ids:
            raise SchemaError(f"duplicate node id {node.id}", line=el.line)
        seen_ids.add(node.id)
        if isinstance(node, SensorSpec):
            sensors.append(node)
        elif isinstance(node, OperatorSpec):
            operators.append(node)
        else:
            sinks.append(node)
    if not sensors:
        raise SchemaError("no sensor declared in the chain", line=root.line)

    connections: list[ConnectionSpec] = []
    connections_id = 0
    if len(children["connections"]) > 1:
        raise SchemaError(
            "duplicate <connections> block", line=children["connections"][1].line
        )
    if children["connections"]:
        block = children["connections"][0]
        _check_attrs(block, required=("id",))
        connections_id = _int_attr(block, "id")
        for con_el in _child_map(block, ("con",))["con"]:
            connections.append(_parse_connection(con_el))
        con_ids = [c.id for c in connections]
        if len(con_ids) != len(set(con_ids)):
            raise SchemaError("duplicate connection id", line=block.line)

    try:
        return OperatorChainSpec(
            sensors=tuple(sensors),
            operators=tuple(operators),
            sinks=tuple(sinks),
            connections=tuple(connections),
            connections_id=connections_id,
        )
    except ValueError as exc:
        raise SchemaError(str(exc), line=root.line) from exc


def _parse_image_operator(el: XmlNode):
    _check_attrs(el, required=("id",))
    node_id = _int_attr(el, "id")
    type_els = [c for c in el.children if c.tag == "type"]
    if not type_els:
        raise SchemaError("<image_operator> is missing element <type>", line=el.line)
    if len(type_els) > 1:
        raise SchemaError("duplicate element <type>", line=type_els[1].line)
    kind = _leaf_text(type_els[0])
    kind_el = type_els[0]

    try:
        if kind == "Sensor":
            return _parse_sensor(el, node_id)
        if kind == "Operator":
            return _parse_operator(el, node_id)
        if kind == "Sink":
            return _parse_sink(el, node_id)
    except ValueError as exc:
        if isinstance(exc, FieldValueError):
            raise
        raise FieldValueError(str(exc), line=el.line) from exc
    raise SchemaError(f"unknown image_operator type {kind!r}", line=kind_el.line)


def _parse_sensor(el: XmlNode, node_id: int) -> SensorSpec:
    children = _child_map(el, ("type", "res", "pixres", "fps"))
    res = _one(el, children, "res")
    res_children = _child_map(res, ("x", "y"))
    return SensorSpec(
        id=node_id,
        res_x=_int_text(_one(res, res_children, "x")),
        res_y=_int_text(_one(res, res_children, "y")),
        pixres=_int_text(_one(el, children, "pixres")),
        fps=_rational_text(_one(el, children, "fps")),
    )


def _parse_operator(el: XmlNode, node_id: int) -> OperatorSpec:
    children = _child_map(
        el, ("type", "name", "input_area", "base_calc", "output_area", "out_pixres")
    )
    input_area = _parse_area(_one(el, children, "input_area"))
    calc_el = _one(el, children, "base_calc")
    out_pixres = None
    if children["out_pixres"]:
        out_pixres = _int_text(_one(el, children, "out_pixres"))
    return OperatorSpec(
        id=node_id,
        name=_leaf_text(_one(el, children, "name")),
        input_area=input_area,
        base_calc=parse_base_calc(calc_el, input_area),
        output_area=_parse_area(_one(el, children, "output_area")),
        out_pixres=out_pixres,
    )


def _parse_sink(el: XmlNode, node_id: int) -> SinkSpec:
    children = _child_map(el, ("type", "name"))
    return SinkSpec(id=node_id, name=_leaf_text(_one(el, children, "name")))


def _parse_area(el: XmlNode) -> AreaSpec:
    _check_attrs(el, required=(), optional=("scope",))
    scope = el.attrib.get("scope")
    if scope is not None:
        if scope != "global":
            raise FieldValueError(
                f"area scope must be 'global' when given, got {scope!r}", line=el.line
            )
        _no_stray_text(el)
        if el.children:
            raise SchemaError(
                "a global area must not declare window dimensions",
                line=el.children[0].line,
            )
        return AreaSpec.whole_frame()
    children = _child_map(el, ("x", "y"))
    x = _int_text(_one(el, children, "x"))
    y = _int_text(_one(el, children, "y"))
    try:
        return AreaSpec.window(x, y)
    except ValueError as exc:
        raise FieldValueError(str(exc), line=el.line) from exc


def _parse_connection(el: XmlNode) -> ConnectionSpec:
    _check_attrs(el, required=("id",))
    children = _child_map(el, ("out", "in"))
    try:
        return ConnectionSpec(
            id=_int_attr(el, "id"),
            src=_int_text(_one(el, children, "out")),
            dst=_int_text(_one(el, children, "in")),
        )
    except ValueError as exc:
        if isinstance(exc, FieldValueError):
            raise
        raise FieldValueError(str(exc), line=el.line) from exc


# ---------------------------------------------------------------------------
# base_calc sub-language.

_KIND_TAGS = ("conv2d", "pointwise", "rank", "global", "composite")


def parse_base_calc(el: XmlNode, input_area: AreaSpec) -> BaseCalc:
    """Parse a <base_calc> element; an empty one is the opaque computation."""
    _no_stray_text(el)
    if not el.children:
        return opaque()
    if len(el.children) > 1:
        raise SchemaError(
            "<base_calc> holds at most one computation", line=el.children[1].line
        )
    return _parse_calc_kind(el.children[0], input_area)


def _parse_calc_kind(el: XmlNode, input_area: AreaSpec) -> BaseCalc:
    if el.tag == "conv2d":
        return _parse_conv2d(el, input_area)
    if el.tag == "pointwise":
        children = _child_map(_checked(el), ("expr",))
        expr_el = _one(el, children, "expr")
        return Pointwise(expr=parse_expr_text(_leaf_text(expr_el), line=expr_el.line))
    if el.tag == "rank":
        _check_attrs(el, required=("statistic",))
        _no_stray_text(el)
        try:
            return Rank(statistic=el.attrib["statistic"])
        except ValueError as exc:
            raise SchemaError(str(exc), line=el.line) from exc
    if el.tag == "global":
        _check_attrs(el, required=("name",))
        _no_stray_text(el)
        try:
            return GlobalOp(name=el.attrib["name"])
        except ValueError as exc:
            raise SchemaError(str(exc), line=el.line) from exc
    if el.tag == "composite":
        _check_attrs(el, required=("combine",))
        _no_stray_text(el)
        combine = el.attrib["combine"]
        if combine not in COMBINES:
            raise SchemaError(f"unknown combine mode {combine!r}", line=el.line)
        stages = tuple(_parse_calc_kind(c, input_area) for c in el.children)
        return Composite(stages=stages, combine=combine)
    raise SchemaError(f"unknown base_calc kind <{el.tag}>", line=el.line)


def _checked(el: XmlNode) -> XmlNode:
    _check_attrs(el, required=())
    return el


def _parse_conv2d(el: XmlNode, input_area: AreaSpec) -> Conv2d:
    _check_attrs(el, required=(), optional=("post_scale",))
    post_scale = Fraction(1)
    if "post_scale" in el.attrib:
        post_scale = _rational_attr(el, "post_scale")
    rows = []
    for row_el in _child_map(el, ("row",))["row"]:
        cells = _leaf_text(row_el).split()
        if not cells:
            raise FieldValueError("empty kernel row", line=row_el.line)
        try:
            rows.append(tuple(parse_rational(c) for c in cells))
        except ValueError as exc:
            raise FieldValueError(
                f"kernel row holds a non-numeric value: {_leaf_text(row_el)!r}",
                line=row_el.line,
            ) from exc
    if not rows:
        raise SchemaError("<conv2d> needs at least one <row>", line=el.line)
    try:
        kernel = Conv2d(kernel=tuple(rows), post_scale=post_scale)
    except ValueError as exc:
        raise FieldValueError(str(exc), line=el.line) from exc
    if input_area.is_local and (kernel.width, kernel.height) != (input_area.x, input_area.y):
        raise FieldValueError(
            f"kernel is {kernel.width}x{kernel.height} but input_area is "
            f"{input_area.x}x{input_area.y}",
            line=el.line,
        )
    if not input_area.is_local:
        raise FieldValueError("conv2d requires a local input_area", line=el.line)
    return kernel


# Pointwise expressions are prefix s-expressions, e.g. (min (mul p 2) 255).


def parse_expr_text(text: str, line: int | None = None):
    tokens = _tokenize(text, line)
    expr, rest = _parse_expr(tokens, line)
    if rest:
        raise FieldValueError(
            f"trailing tokens after expression: {' '.join(rest)!r}", line=line
        )
    return expr


def _tokenize(text: str, line) -> list[str]:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise FieldValueError("empty pointwise expression", line=line)
    return tokens


def _parse_expr(tokens: list[str], line):
    if not tokens:
        raise FieldValueError("unexpected end of expression", line=line)
    head, rest = tokens[0], tokens[1:]
    if head == "(":
        if not rest:
            raise FieldValueError("unclosed '(' in expression", line=line)
        fn, rest = rest[0], rest[1:]
        if fn not in FUNCTIONS:
            raise FieldValueError(f"unknown function {fn!r}", line=line)
        args = []
        while rest and rest[0] != ")":
            arg, rest = _parse_expr(rest, line)
            args.append(arg)
        if not rest:
            raise FieldValueError("unclosed '(' in expression", line=line)
        rest = rest[1:]  # drop ')'
        try:
            return Apply(fn, tuple(args)), rest
        except ValueError as exc:
            raise FieldValueError(str(exc), line=line) from exc
    if head == ")":
        raise FieldValueError("unbalanced ')' in expression", line=line)
    if head == "p":
        return Var(), rest
    try:
        return Const(parse_rational(head)), rest
    except ValueError as exc:
        raise FieldValueError(f"unknown token {head!r} in expression", line=line) from exc


def expr_text(expr) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Const):
        return rational_str(expr.value)
    return "(" + " ".join([expr.fn, *(expr_text(a) for a in expr.args)]) + ")"


# ---------------------------------------------------------------------------
# Serialisation (canonical form).


def serialize_ipol(spec: OperatorChainSpec) -> bytes:
    """Render a spec in canonical form; parse(serialize(spec)) == spec."""
    w = _Writer()
    w.open("operatorchain")
    for sensor in sorted(spec.sensors, key=lambda s: s.id):
        w.open("image_operator", id=sensor.id)
        w.leaf("type", "Sensor")
        w.open("res")
        w.leaf("x", sensor.res_x)
        w.leaf("y", sensor.res_y)
        w.close("res")
        w.leaf("pixres", sensor.pixres)
        w.leaf("fps", rational_str(sensor.fps))
        w.close("image_operator")
    for op in sorted(spec.operators, key=lambda o: o.id):
        w.open("image_operator", id=op.id)
        w.leaf("type", "Operator")
        w.leaf("name", op.name)
        _write_area(w, "input_area", op.input_area)
        _write_base_calc(w, op.base_calc)
        _write_area(w, "output_area", op.output_area)
        if op.out_pixres is not None:
            w.leaf("out_pixres", op.out_pixres)
        w.close("image_operator")
    for sink in sorted(spec.sinks, key=lambda s: s.id):
        w.open("image_operator", id=sink.id)
        w.leaf("type", "Sink")
        w.leaf("name", sink.name)
        w.close("image_operator")
    if spec.connections or spec.connections_id != 0:
        w.open("connections", id=spec.connections_id)
        for con in sorted(spec.connections, key=lambda c: c.id):
            w.open("con", id=con.id)
            w.leaf("out", con.src)
            w.leaf("in", con.dst)
            w.close("con")
        w.close("connections")
    w.close("operatorchain")
    return w.render()


def _write_area(w: "_Writer", tag: str, area: AreaSpec) -> None:
    if area.is_local:
        w.open(tag)
        w.leaf("x", area.x)
        w.leaf("y", area.y)
        w.close(tag)
    else:
        w.empty(tag, scope="global")


def _write_base_calc(w: "_Writer", calc: BaseCalc) -> None:
    if isinstance(calc, Composite) and not calc.stages and calc.combine == "last":
        w.empty("base_calc")
        return
    w.open("base_calc")
    _write_calc_kind(w, calc)
    w.close("base_calc")


def _write_calc_kind(w: "_Writer", calc: BaseCalc) -> None:
    if isinstance(calc, Conv2d):
        attrs = {}
        if calc.post_scale != 1:
            attrs["post_scale"] = rational_str(calc.post_scale)
        w.open("conv2d", **attrs)
        for row in calc.kernel:
            w.leaf("row", " ".join(rational_str(v) for v in row))
        w.close("conv2d")
    elif isinstance(calc, Pointwise):
        w.open("pointwise")
        w.leaf("expr", expr_text(calc.expr))
        w.close("pointwise")
    elif isinstance(calc, Rank):
        w.empty("rank", statistic=calc.statistic)
    elif isinstance(calc, GlobalOp):
        w.empty("global", name=calc.name)
    elif isinstance(calc, Composite):
        w.open("composite", combine=calc.combine)
        for stage in calc.stages:
            _write_calc_kind(w, stage)
        w.close("composite")
    else:
        raise TypeError(f"not a base_calc: {calc!r}")


class _Writer:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def _attrs(self, attrs: dict) -> str:
        return "".join(f" {k}={quoteattr(str(v))}" for k, v in attrs.items())

    def open(self, tag: str, **attrs) -> None:
        self.lines.append("  " * self.depth + f"<{tag}{self._attrs(attrs)}>")
        self.depth += 1

    def close(self, tag: str) -> None:
        self.depth -= 1
        self.lines.append("  " * self.depth + f"</{tag}>")

    def leaf(self, tag: str, value) -> None:
        self.lines.append(
            "  " * self.depth + f"<{tag}>{escape(str(value))}</{tag}>"
        )

    def empty(self, tag: str, **attrs) -> None:
        self.lines.append("  " * self.depth + f"<{tag}{self._attrs(attrs)}/>")

    def render(self) -> bytes:
        return ("\n".join(self.lines) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Platform documents.


def parse_platform(document: bytes | str) -> PlatformSpec:
    """Parse a platform description into a validated spec."""
    root = parse_xml(document)
    _require_tag(root, "platform")
    _check_attrs(root, required=("interconnect_bw",))
    units = []
    seen: set[str] = set()
    for el in _child_map(root, ("unit",))["unit"]:
        _check_attrs(
            el,
            required=(
                "id",
                "kind",
                "clock_hz",
                "ops_per_cycle",
                "mem_bw",
                "supports_global",
                "power_weight",
            ),
        )
        _no_stray_text(el)
        if el.children:
            raise SchemaError(
                f"unknown element <{el.children[0].tag}> inside <unit>",
                line=el.children[0].line,
            )
        if el.attrib["id"] in seen:
            raise SchemaError(f"duplicate unit id {el.attrib['id']!r}", line=el.line)
        seen.add(el.attrib["id"])
        flag = el.attrib["supports_global"]
        if flag not in ("true", "false"):
            raise FieldValueError(
                f"supports_global must be 'true' or 'false', got {flag!r}", line=el.line
            )
        try:
            units.append(
                ProcessingUnit(
                    id=el.attrib["id"],
                    kind=el.attrib["kind"],
                    clock_hz=_rational_attr(el, "clock_hz"),
                    ops_per_cycle=_int_attr(el, "ops_per_cycle"),
                    mem_bw=_rational_attr(el, "mem_bw"),
                    supports_global=flag == "true",
                    power_weight=_rational_attr(el, "power_weight"),
                )
            )
        except ValueError as exc:
            if isinstance(exc, FieldValueError):
                raise
            raise FieldValueError(str(exc), line=el.line) from exc
    try:
        return PlatformSpec(
            units=tuple(units),
            interconnect_bw=_rational_attr(root, "interconnect_bw"),
        )
    except ValueError as exc:
        if isinstance(exc, FieldValueError):
            raise
        raise FieldValueError(str(exc), line=root.line) from exc
