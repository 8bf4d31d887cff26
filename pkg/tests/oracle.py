"""Independent slice oracle: delete a declaration and re-resolve.

A declaration in a slice is needed iff removing it breaks standalone
resolution. Removing a type that only the config parameter names
degrades resolution to a warning rather than an error (undeclared
config types are warnings by design), so the oracle counts any new
warning as a failure too.
"""

from __future__ import annotations

from monoslice.ast import ServiceDecl, SourceProgram
from monoslice.semantics import ResolveFailure, resolve


def removable_declarations(slice_program: SourceProgram) -> list[str]:
    """Names of non-service declarations whose removal leaves the slice resolving cleanly."""
    baseline = resolve(slice_program)
    baseline_warnings = len(baseline.warnings)
    removable: list[str] = []
    for index, decl in enumerate(slice_program.declarations):
        if isinstance(decl, ServiceDecl):
            continue
        mutated = SourceProgram(
            slice_program.declarations[:index] + slice_program.declarations[index + 1:],
            slice_program.source_name,
        )
        try:
            checked = resolve(mutated)
        except ResolveFailure:
            continue
        if len(checked.warnings) <= baseline_warnings:
            removable.append(decl.name)
    return removable
