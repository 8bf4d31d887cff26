"""Runtime value trees and their JSON wire mapping.

Every message a service sends or receives is a value tree: an optional
basic root value plus named, ordered sequences of child trees. JSON is
the only wire encoding; the mapping is bijective on the representable
subset (no child named "$", no non-finite doubles).
"""

from __future__ import annotations

import json
from typing import Any

from .errors import MonosliceError


class JsonError(MonosliceError):
    """A JSON document that cannot be decoded into a value tree."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} at line {line}, column {column}"
        super().__init__(message)


class Long(int):
    """Integer tagged with the long kind.

    Plain ints carry the int kind; JSON integral numbers decode as Long.
    Arithmetic on a Long returns a plain int, so producers must re-wrap.
    """

    __slots__ = ()

    def __repr__(self) -> str:
        return f"{int(self)}L"


Basic = bool | int | float | str


def kind_of(value: Basic | None) -> str:
    """Name of the basic kind carried by a root value ("nothing" for absent)."""
    if value is None:
        return "nothing"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, Long):
        return "long"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "double"
    if isinstance(value, str):
        return "string"
    raise TypeError(f"not a basic value: {value!r}")


def roots_equal(a: Basic | None, b: Basic | None) -> bool:
    """Deep-equality on roots: kinds must match, except int/long compare by value."""
    ka, kb = kind_of(a), kind_of(b)
    if ka in ("int", "long") and kb in ("int", "long"):
        return int(a) == int(b)
    if ka != kb:
        return False
    return a == b


class ValueTree:
    """Optional basic root plus named ordered sequences of subtrees.

    Child sequences are never empty: an absent name means zero occurrences.
    Equality is structural, order-sensitive within a sequence and
    order-insensitive across names.
    """

    __slots__ = ("root", "children")

    def __init__(
        self,
        root: Basic | None = None,
        children: dict[str, list["ValueTree"]] | None = None,
    ):
        self.root = root
        self.children: dict[str, list[ValueTree]] = {}
        if children:
            for name, seq in children.items():
                if seq:
                    self.children[name] = list(seq)

    @classmethod
    def make(cls, root: Basic | None = None, **children: Any) -> "ValueTree":
        """Build a tree from scalars, trees, or lists of either."""
        tree = cls(root)
        for name, value in children.items():
            seq = value if isinstance(value, list) else [value]
            items = [v if isinstance(v, ValueTree) else cls(v) for v in seq]
            if items:
                tree.children[name] = items
        return tree

    def copy(self) -> "ValueTree":
        out = ValueTree(self.root)
        for name, seq in self.children.items():
            out.children[name] = [t.copy() for t in seq]
        return out

    def child(self, name: str, index: int = 0) -> "ValueTree | None":
        seq = self.children.get(name)
        if seq is None or index >= len(seq):
            return None
        return seq[index]

    @property
    def is_empty(self) -> bool:
        return self.root is None and not self.children

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ValueTree):
            return NotImplemented
        if not roots_equal(self.root, other.root):
            return False
        if self.children.keys() != other.children.keys():
            return False
        for name, seq in self.children.items():
            oseq = other.children[name]
            if len(seq) != len(oseq) or any(a != b for a, b in zip(seq, oseq)):
                return False
        return True

    __hash__ = None  # type: ignore[assignment]  # mutable

    def __repr__(self) -> str:
        parts: list[str] = []
        if self.root is not None:
            parts.append(repr(self.root))
        for name, seq in self.children.items():
            parts.append(f"{name}={seq!r}" if len(seq) > 1 else f"{name}={seq[0]!r}")
        return f"ValueTree({', '.join(parts)})"


def to_json_value(tree: ValueTree) -> Any:
    """Convert a tree into a json-serializable object per the wire mapping."""
    if not tree.children:
        return tree.root
    obj: dict[str, Any] = {}
    if tree.root is not None:
        obj["$"] = tree.root
    for name, seq in tree.children.items():
        if len(seq) == 1:
            obj[name] = to_json_value(seq[0])
        else:
            obj[name] = [to_json_value(t) for t in seq]
    return obj


def _scalar(value: Any) -> Basic | None:
    if value is None or isinstance(value, (bool, float, str)):
        return value
    if isinstance(value, int):
        return Long(value)
    raise JsonError(f"unsupported JSON value: {value!r}")


def from_json_value(obj: Any) -> ValueTree:
    """Convert a decoded JSON object into a value tree.

    Scalars become roots (integral numbers as long), objects become
    children with "$" reserved for a root coexisting with children,
    arrays become multiple occurrences of one child name. Arrays may not
    nest directly and may not appear at the root.
    """
    if isinstance(obj, list):
        raise JsonError("a JSON array cannot stand on its own; it must be an object value")
    if not isinstance(obj, dict):
        return ValueTree(_scalar(obj))
    tree = ValueTree()
    for key, value in obj.items():
        if key == "$":
            if isinstance(value, (dict, list)):
                raise JsonError('reserved key "$" must hold a scalar root value')
            tree.root = _scalar(value)
            continue
        if isinstance(value, list):
            seq = []
            for element in value:
                if isinstance(element, list):
                    raise JsonError(f"nested array under key {key!r} is not representable")
                seq.append(from_json_value(element))
            if seq:
                tree.children[key] = seq
        else:
            tree.children[key] = [from_json_value(value)]
    return tree


def encode_json(tree: ValueTree) -> bytes:
    """Encode a tree as compact UTF-8 JSON bytes."""
    return json.dumps(to_json_value(tree), separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def decode_json(data: bytes | str) -> ValueTree:
    """Decode JSON bytes or text into a value tree.

    Raises JsonError with line/column on malformed input.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise JsonError(f"payload is not valid UTF-8: {exc}") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise JsonError(exc.msg, exc.lineno, exc.colno) from exc
    return from_json_value(obj)
