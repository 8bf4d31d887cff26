"""Deployment configuration: loading, location parsing, validation.

A configuration is a value tree decoded from a JSON file; by convention
child `<ServiceName>.location` holds a location string per service.
Locations are `socket://host:port` (network) or `local://name`
(in-process).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FsPath

from .ast import Expr, Literal, PathExpr, PortKind
from .errors import MonosliceError
from .semantics import CheckedProgram
from .values import ValueTree, decode_json

# a configuration is an ordinary value tree decoded from JSON
ConfigTree = ValueTree


class BadLocationSyntax(MonosliceError):
    def __init__(self, text: str, reason: str):
        self.text = text
        super().__init__(f"bad location {text!r}: {reason}")


class MissingConfigPath(MonosliceError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"missing config path '{path}'")


class LocationCollision(MonosliceError):
    def __init__(self, location: str, first: str, second: str):
        self.location = location
        super().__init__(f"input location {location} bound by both {first} and {second}")


@dataclass(frozen=True)
class Location:
    """A transport address. scheme is "socket" (host, port) or "local" (name)."""

    scheme: str
    host: str | None = None
    port: int | None = None
    name: str | None = None

    @classmethod
    def socket(cls, host: str, port: int) -> "Location":
        return cls("socket", host=host, port=port)

    @classmethod
    def local(cls, name: str) -> "Location":
        return cls("local", name=name)

    @classmethod
    def parse(cls, text: str) -> "Location":
        if text.startswith("socket://"):
            rest = text[len("socket://"):]
            host, sep, port_text = rest.rpartition(":")
            if not sep or not host:
                raise BadLocationSyntax(text, "expected socket://host:port")
            if "/" in rest:
                raise BadLocationSyntax(text, "no path component allowed")
            try:
                port = int(port_text)
            except ValueError:
                raise BadLocationSyntax(text, f"port {port_text!r} is not an integer") from None
            if not 1 <= port <= 65535:
                raise BadLocationSyntax(text, f"port {port} out of range 1-65535")
            return cls.socket(host, port)
        if text.startswith("local://"):
            name = text[len("local://"):]
            if not name or "/" in name:
                raise BadLocationSyntax(text, "expected local://name")
            return cls.local(name)
        raise BadLocationSyntax(text, "unknown scheme (use socket:// or local://)")

    def __str__(self) -> str:
        if self.scheme == "socket":
            return f"socket://{self.host}:{self.port}"
        return f"local://{self.name}"


def load_config(path: str | FsPath) -> ConfigTree:
    """Load a JSON configuration file into a value tree.

    Raises OSError on unreadable files and JsonError on malformed JSON.
    """
    data = FsPath(path).read_bytes()
    return decode_json(data)


def resolve_location(config: ConfigTree, location_expr: Expr, param_name: str | None = None) -> Location:
    """Evaluate a port's location expression against the configuration.

    The expression must be a string literal or a path rooted at the
    service's config parameter (any single identifier root is accepted
    when param_name is None).
    """
    if isinstance(location_expr, Literal) and isinstance(location_expr.value, str):
        return Location.parse(location_expr.value)
    if isinstance(location_expr, PathExpr):
        steps = location_expr.path.steps
        if any(step.index is not None for step in steps):
            raise BadLocationSyntax(
                _expr_text(location_expr), "indices are not allowed in config paths"
            )
        if param_name is not None and steps[0].name != param_name:
            raise BadLocationSyntax(
                _expr_text(location_expr),
                f"location path must be rooted at config parameter '{param_name}'",
            )
        dotted = ".".join(step.name for step in steps[1:]) or steps[0].name
        node = config
        for step in steps[1:]:
            nxt = node.child(step.name)
            if nxt is None:
                raise MissingConfigPath(dotted)
            node = nxt
        if not isinstance(node.root, str):
            raise MissingConfigPath(dotted)
        return Location.parse(node.root)
    raise BadLocationSyntax(
        _expr_text(location_expr), "location must be a string literal or a config path"
    )


def _expr_text(expr: Expr) -> str:
    from .render import render_expr

    return render_expr(expr)


def validate_config(
    checked: CheckedProgram,
    config: ConfigTree,
    services: list[str] | None = None,
) -> list[MonosliceError]:
    """Check that every port location of the selected services resolves.

    Also rejects input-port location collisions: two input ports may not
    share a socket host:port or a local name. Returns the full issue
    list; empty means the configuration is usable.
    """
    issues: list[MonosliceError] = []
    names = services if services is not None else [s.name for s in checked.program.services]
    bound: dict[str, str] = {}
    for service_name in names:
        decl = checked.service_table[service_name]
        param = decl.config.name if decl.config else None
        for port in decl.ports():
            try:
                location = resolve_location(config, port.location, param)
            except (MissingConfigPath, BadLocationSyntax) as issue:
                issues.append(issue)
                continue
            if port.kind is PortKind.INPUT:
                key = str(location)
                owner = f"{service_name}.{port.name}"
                if key in bound:
                    issues.append(LocationCollision(key, bound[key], owner))
                else:
                    bound[key] = owner
    return issues
