"""Full checking pipeline from source text to a specification the engine can run."""

from __future__ import annotations

from dataclasses import dataclass

from . import analysis
from .frontend import ast, parse, resolve_names
from .typecheck.pacing import PacingTypes, check_pacing_access, infer_pacing_types
from .typecheck.semantic import SemanticType, check_semantic_types
from .typecheck.values import ValueTypes, infer_value_types


@dataclass
class CheckedSpec:
    spec: ast.Specification
    graph: analysis.DependencyGraph
    bounds: dict[str, int]
    layers: list[list[str]]
    values: ValueTypes
    pacing: PacingTypes
    semantic: dict[str, SemanticType]

    def layer_of(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if name in layer:
                return i
        raise KeyError(name)

    def type_table(self) -> str:
        """Stable text table: stream, value type, eval pacing, memory bound."""
        rows = []
        for d in self.spec.streams:
            params = f"({', '.join(f'{p}: {t}' for p, t in zip(d.params, self.values.params[d.name]))})" if d.params else ""
            rows.append(f"{d.kind} {d.name}{params}: {self.values.streams[d.name]} "
                        f"{self.pacing.eval(d.name)} bound={self.bounds[d.name]}")
        return "\n".join(rows) + ("\n" if rows else "")


def check_spec(spec: ast.Specification) -> CheckedSpec:
    resolved = resolve_names(spec)
    graph = analysis.build_dependency_graph(resolved)
    analysis.check_self_defaults(resolved)
    analysis.check_well_formed(graph)
    values = infer_value_types(resolved)
    pacing = infer_pacing_types(resolved)
    check_pacing_access(resolved, pacing)
    semantic = check_semantic_types(resolved, pacing)
    return CheckedSpec(
        spec=resolved,
        graph=graph,
        bounds=analysis.compute_memory_bounds(graph),
        layers=analysis.compute_evaluation_order(graph),
        values=values,
        pacing=pacing,
        semantic=semantic,
    )


def check(source: str) -> CheckedSpec:
    """Parse and check ``source``; raises :class:`SpecError` on the first failing stage."""
    return check_spec(parse(source))
