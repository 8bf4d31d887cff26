"""Name resolution and value conformance checking.

resolve() validates a parsed program and produces a CheckedProgram, the
substrate for slicing and interpretation. Name and arity checking is
static; message shapes are enforced dynamically at port boundaries with
check_value().
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .ast import (
    Assign,
    BasicRef,
    BasicType,
    Binary,
    Expr,
    If,
    InlineTreeRef,
    InputChoice,
    InterfaceDecl,
    NamedRef,
    OneWaySend,
    Path,
    PathExpr,
    Pos,
    Receive,
    RequestResponseBranch,
    RequestResponseOp,
    ServiceDecl,
    SolicitResponse,
    SourceProgram,
    Statement,
    Throw,
    TreeLiteral,
    TypeDecl,
    TypeRef,
    Unary,
    While,
)
from .errors import MonosliceError
from .values import ValueTree, kind_of


class SemanticError(MonosliceError):
    def __init__(self, message: str, pos: Pos | None):
        self.pos = pos
        where = f"{pos}: " if pos else ""
        super().__init__(f"{where}{message}")


class UndefinedType(SemanticError):
    def __init__(self, name: str, pos: Pos | None):
        self.name = name
        super().__init__(f"undefined type '{name}'", pos)


class UndefinedInterface(SemanticError):
    def __init__(self, name: str, pos: Pos | None):
        self.name = name
        super().__init__(f"undefined interface '{name}'", pos)


class UnknownOperation(SemanticError):
    def __init__(self, operation: str, where: str, pos: Pos | None):
        self.operation = operation
        super().__init__(f"operation '{operation}' is not offered by {where}", pos)


class DuplicateDeclaration(SemanticError):
    def __init__(self, what: str, name: str, pos: Pos | None):
        self.name = name
        super().__init__(f"duplicate {what} '{name}'", pos)


class UnknownPort(SemanticError):
    def __init__(self, port: str, service: str, pos: Pos | None):
        self.port = port
        super().__init__(f"'{port}' is not an output port of service {service}", pos)


class BehaviorError(SemanticError):
    """Misuse of a port or config name inside a behavior."""


class ResolveFailure(MonosliceError):
    """Raised by resolve() with the complete list of semantic errors."""

    def __init__(self, errors: list[SemanticError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


@dataclass(frozen=True)
class OpInfo:
    name: str
    kind: str  # "rr" or "ow"
    request: TypeRef
    response: TypeRef | None
    interface: str


@dataclass
class CheckedProgram:
    """A resolved program. Immutable after construction."""

    program: SourceProgram
    type_table: dict[str, TypeDecl]
    interface_table: dict[str, InterfaceDecl]
    service_table: dict[str, ServiceDecl]
    port_interfaces: dict[tuple[str, str], list[InterfaceDecl]]
    port_ops: dict[tuple[str, str], dict[str, OpInfo]]
    warnings: list[str] = field(default_factory=list)

    def service(self, name: str) -> ServiceDecl:
        return self.service_table[name]

    def input_ops(self, service: str) -> dict[str, OpInfo]:
        """Operations offered across all input ports of a service (first port wins)."""
        merged: dict[str, OpInfo] = {}
        for port in self.service_table[service].input_ports:
            for op_name, info in self.port_ops[(service, port.name)].items():
                merged.setdefault(op_name, info)
        return merged

    def resolve_ref(self, ref: TypeRef) -> BasicType | TypeDecl | InlineTreeRef:
        """Dereference a type reference; named references are guaranteed to resolve."""
        if isinstance(ref, BasicRef):
            return ref.basic
        if isinstance(ref, NamedRef):
            return self.type_table[ref.name]
        return ref

    def check_value(self, tree: ValueTree, type_: TypeRef | TypeDecl) -> list["Violation"]:
        return check_value(tree, type_, self.type_table)


def _operations_of(interface: InterfaceDecl) -> Iterator[OpInfo]:
    for op in interface.request_responses:
        yield OpInfo(op.name, "rr", op.request, op.response, interface.name)
    for op in interface.one_ways:
        yield OpInfo(op.name, "ow", op.request, None, interface.name)


class _Resolver:
    def __init__(self, program: SourceProgram):
        self.program = program
        self.errors: list[SemanticError] = []
        self.warnings: list[str] = []
        self.types: dict[str, TypeDecl] = {}
        self.interfaces: dict[str, InterfaceDecl] = {}
        self.services: dict[str, ServiceDecl] = {}
        self.port_interfaces: dict[tuple[str, str], list[InterfaceDecl]] = {}
        self.port_ops: dict[tuple[str, str], dict[str, OpInfo]] = {}

    def run(self) -> CheckedProgram:
        self._collect_tables()
        for decl in self.types.values():
            self._check_type_decl(decl)
        for decl in self.interfaces.values():
            self._check_interface_decl(decl)
        for decl in self.services.values():
            self._check_service_decl(decl)
        if self.errors:
            raise ResolveFailure(self.errors)
        return CheckedProgram(
            self.program,
            self.types,
            self.interfaces,
            self.services,
            self.port_interfaces,
            self.port_ops,
            self.warnings,
        )

    def _collect_tables(self) -> None:
        for decl in self.program.declarations:
            if isinstance(decl, TypeDecl):
                table, what = self.types, "type"
            elif isinstance(decl, InterfaceDecl):
                table, what = self.interfaces, "interface"
            else:
                table, what = self.services, "service"
            if decl.name in table:
                self.errors.append(DuplicateDeclaration(what, decl.name, decl.pos))
            else:
                table[decl.name] = decl

    def _check_type_ref(self, ref: TypeRef) -> None:
        if isinstance(ref, NamedRef) and ref.name not in self.types:
            self.errors.append(UndefinedType(ref.name, ref.pos))
        elif isinstance(ref, InlineTreeRef):
            self._check_fields(ref.fields, "inline type")

    def _check_fields(self, fields, owner: str) -> None:
        seen: set[str] = set()
        for f in fields:
            if f.name in seen:
                self.errors.append(DuplicateDeclaration(f"field in {owner}", f.name, f.pos))
            seen.add(f.name)
            self._check_type_ref(f.type)

    def _check_type_decl(self, decl: TypeDecl) -> None:
        self._check_fields(decl.fields, f"type {decl.name}")

    def _check_interface_decl(self, decl: InterfaceDecl) -> None:
        seen: set[str] = set()
        for op in decl.operations():
            if op.name in seen:
                self.errors.append(
                    DuplicateDeclaration(f"operation in interface {decl.name}", op.name, op.pos)
                )
            seen.add(op.name)
            self._check_type_ref(op.request)
            if isinstance(op, RequestResponseOp):
                self._check_type_ref(op.response)

    def _check_service_decl(self, decl: ServiceDecl) -> None:
        if decl.config is not None:
            if decl.config.type_name is None:
                self.warnings.append(
                    f"service {decl.name}: config parameter '{decl.config.name}' is untyped "
                    "and treated as unconstrained"
                )
            elif decl.config.type_name not in self.types:
                self.warnings.append(
                    f"service {decl.name}: config type '{decl.config.type_name}' is not "
                    "declared; the parameter is treated as unconstrained"
                )
        port_names: set[str] = set()
        for port in decl.ports():
            if port.name in port_names:
                self.errors.append(
                    DuplicateDeclaration(f"port in service {decl.name}", port.name, port.pos)
                )
                continue
            port_names.add(port.name)
            resolved: list[InterfaceDecl] = []
            ops: dict[str, OpInfo] = {}
            for index, iface_name in enumerate(port.interfaces):
                iface = self.interfaces.get(iface_name)
                if iface is None:
                    self.errors.append(UndefinedInterface(iface_name, port.interface_pos(index)))
                    continue
                resolved.append(iface)
                for info in _operations_of(iface):
                    ops.setdefault(info.name, info)
            self.port_interfaces[(decl.name, port.name)] = resolved
            self.port_ops[(decl.name, port.name)] = ops
        self._check_behavior(decl)

    # -- behavior ----------------------------------------------------------

    def _check_behavior(self, decl: ServiceDecl) -> None:
        behavior = decl.behavior
        if isinstance(behavior, InputChoice):
            seen: set[str] = set()
            for branch in behavior.branches:
                if branch.operation in seen:
                    self.errors.append(
                        DuplicateDeclaration(
                            f"input branch in service {decl.name}", branch.operation, branch.pos
                        )
                    )
                seen.add(branch.operation)
                wanted = "rr" if isinstance(branch, RequestResponseBranch) else "ow"
                self._check_inbound_op(decl, branch.operation, wanted, branch.pos)
                self._check_statements(decl, branch.body, executable=False)
        else:
            self._check_statements(decl, behavior.statements, executable=True)

    def _inbound_info(self, decl: ServiceDecl, operation: str) -> OpInfo | None:
        for port in decl.input_ports:
            info = self.port_ops.get((decl.name, port.name), {}).get(operation)
            if info is not None:
                return info
        return None

    def _check_inbound_op(self, decl: ServiceDecl, operation: str, wanted: str, pos: Pos | None) -> None:
        info = self._inbound_info(decl, operation)
        kind_name = "request-response" if wanted == "rr" else "one-way"
        if info is None or info.kind != wanted:
            self.errors.append(
                UnknownOperation(
                    operation, f"any input port of service {decl.name} as {kind_name}", pos
                )
            )

    def _check_statements(self, decl: ServiceDecl, statements: list[Statement], executable: bool) -> None:
        port_names = {p.name for p in decl.ports()}
        output_names = {p.name for p in decl.output_ports}
        config_name = decl.config.name if decl.config else None

        def check_read_path(path: Path) -> None:
            if path.root in port_names:
                self.errors.append(
                    BehaviorError(
                        f"port name '{path.root}' cannot be read as a variable", path.pos
                    )
                )
            for step in path.steps:
                if step.index is not None:
                    check_expr(step.index)

        def check_expr(expr: Expr) -> None:
            if isinstance(expr, PathExpr):
                if expr.path.root == config_name:
                    for step in expr.path.steps:
                        if step.index is not None:
                            check_expr(step.index)
                    return
                check_read_path(expr.path)
            elif isinstance(expr, Unary):
                check_expr(expr.operand)
            elif isinstance(expr, Binary):
                check_expr(expr.left)
                check_expr(expr.right)
            elif isinstance(expr, TreeLiteral):
                for key, value in expr.entries:
                    for step in key.steps:
                        if step.index is not None:
                            check_expr(step.index)
                    check_expr(value)

        def check_write_path(path: Path, pos: Pos | None) -> None:
            root = path.root
            if root == config_name:
                self.errors.append(
                    BehaviorError(f"config parameter '{root}' is read-only", pos)
                )
                return
            if root in output_names:
                is_rebind = (
                    len(path.steps) == 2
                    and path.steps[1].name == "location"
                    and path.steps[0].index is None
                    and path.steps[1].index is None
                )
                if not is_rebind:
                    self.errors.append(
                        BehaviorError(
                            f"only '{root}.location' may be assigned on output port '{root}'", pos
                        )
                    )
                return
            if root in port_names:
                self.errors.append(
                    BehaviorError(f"input port name '{root}' cannot be assigned", pos)
                )
                return
            for step in path.steps:
                if step.index is not None:
                    check_expr(step.index)

        def check_outbound(statement: SolicitResponse | OneWaySend, wanted: str) -> None:
            if statement.port not in output_names:
                self.errors.append(UnknownPort(statement.port, decl.name, statement.pos))
                return
            info = self.port_ops.get((decl.name, statement.port), {}).get(statement.operation)
            kind_name = "request-response" if wanted == "rr" else "one-way"
            if info is None or info.kind != wanted:
                self.errors.append(
                    UnknownOperation(
                        statement.operation,
                        f"output port {statement.port} as {kind_name}",
                        statement.pos,
                    )
                )

        def walk(stmts: list[Statement]) -> None:
            for statement in stmts:
                if isinstance(statement, Assign):
                    check_write_path(statement.target, statement.pos)
                    check_expr(statement.value)
                elif isinstance(statement, SolicitResponse):
                    check_outbound(statement, "rr")
                    check_expr(statement.argument)
                    if statement.target is not None:
                        check_write_path(statement.target, statement.pos)
                elif isinstance(statement, OneWaySend):
                    check_outbound(statement, "ow")
                    check_expr(statement.argument)
                elif isinstance(statement, Receive):
                    if not executable:
                        self.errors.append(
                            BehaviorError(
                                "inline receive is only valid in an executable service "
                                "(a main that is a statement sequence)",
                                statement.pos,
                            )
                        )
                    self._check_inbound_op(decl, statement.operation, "ow", statement.pos)
                    check_write_path(statement.target, statement.pos)
                elif isinstance(statement, If):
                    check_expr(statement.condition)
                    walk(statement.then)
                    walk(statement.orelse)
                elif isinstance(statement, While):
                    check_expr(statement.condition)
                    walk(statement.body)
                elif isinstance(statement, Throw):
                    pass

        walk(statements)


def resolve(program: SourceProgram) -> CheckedProgram:
    """Resolve every reference in a parsed program.

    Raises ResolveFailure carrying the complete error list; a program
    either yields a CheckedProgram or a non-empty error list, never both.
    """
    return _Resolver(program).run()


# ---------------------------------------------------------------------------
# value conformance


@dataclass(frozen=True)
class Violation:
    path: str
    expected: str
    found: str

    def __str__(self) -> str:
        return f"at '{self.path}': expected {self.expected}, found {self.found}"


def _root_conforms(value, basic: BasicType) -> bool:
    kind = kind_of(value)
    if basic is BasicType.ANY:
        return True
    if basic is BasicType.VOID:
        return kind == "nothing"
    if basic is BasicType.BOOL:
        return kind == "bool"
    if basic is BasicType.INT:
        return kind == "int"
    if basic is BasicType.LONG:
        return kind in ("long", "int")  # int widens to long
    if basic is BasicType.DOUBLE:
        return kind in ("double", "int")  # int widens to double
    return kind == "string"


def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def check_value(
    tree: ValueTree,
    type_: TypeRef | TypeDecl,
    types: Mapping[str, TypeDecl] | None = None,
) -> list[Violation]:
    """Check structural conformance of a tree against a type.

    Returns the full violation list (empty means conforming). Undeclared
    children are rejected; cardinality bounds and root kinds are checked
    recursively. Type cycles are safe because recursion follows the value.
    """
    types = types or {}
    violations: list[Violation] = []
    _check_ref(tree, type_, types, "", violations)
    return violations


def _check_ref(tree: ValueTree, type_, types, path: str, out: list[Violation]) -> None:
    if isinstance(type_, TypeDecl):
        _check_node(tree, type_.root, type_.fields, types, path, out)
    elif isinstance(type_, BasicRef):
        _check_node(tree, type_.basic, [], types, path, out)
    elif isinstance(type_, NamedRef):
        decl = types.get(type_.name)
        if decl is None:
            out.append(Violation(path or "<root>", f"known type '{type_.name}'", "unresolved type"))
            return
        _check_node(tree, decl.root, decl.fields, types, path, out)
    elif isinstance(type_, InlineTreeRef):
        _check_node(tree, BasicType.VOID, type_.fields, types, path, out)
    else:
        raise TypeError(f"not a type: {type_!r}")


def _ref_display(ref: TypeRef) -> str:
    if isinstance(ref, BasicRef):
        return ref.basic.value
    if isinstance(ref, NamedRef):
        return ref.name
    return "inline tree"


def _check_node(tree: ValueTree, root: BasicType, fields, types, path: str, out: list[Violation]) -> None:
    if not _root_conforms(tree.root, root):
        out.append(Violation(path or "<root>", f"root of kind {root.value}", kind_of(tree.root)))
    declared = {f.name for f in fields}
    for f in fields:
        seq = tree.children.get(f.name, [])
        if not f.cardinality.accepts(len(seq)):
            out.append(
                Violation(
                    _join(path, f.name),
                    f"{f.cardinality.describe()} {_ref_display(f.type)}",
                    f"{len(seq)} occurrence(s)",
                )
            )
        for i, sub in enumerate(seq):
            subpath = _join(path, f.name) + (f"[{i}]" if len(seq) > 1 else "")
            _check_ref(sub, f.type, types, subpath, out)
    for name, seq in tree.children.items():
        if name not in declared:
            out.append(Violation(_join(path, name), "no such child", f"{len(seq)} occurrence(s)"))
