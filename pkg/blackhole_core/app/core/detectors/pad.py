"""Process-invariant detector mined from historian log entries."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import DetectorError
from ..metrics import detector_flags_total
from ..plant.process import LOG_FIELDS, LogEntry
from .windows import Verdict

logger = logging.getLogger(__name__)

LEVEL_THRESHOLDS: Dict[str, Tuple[float, ...]] = {
    "LIT101": (800.0, 900.0, 1000.0),
    "LIT201": (800.0, 900.0, 1000.0),
}
DECILES = np.linspace(0.1, 0.9, 9)


@dataclass(frozen=True)
class Atom:
    """A predicate over one field: ``eq``/``ne`` a value, ``bin`` index or ``ge`` a level."""

    field: str
    kind: str
    value: object

    def __str__(self) -> str:
        symbol = {"eq": "=", "ne": "!=", "bin": " in bin ", "ge": ">="}[self.kind]
        return f"{self.field}{symbol}{self.value}"


@dataclass
class InvariantSet:
    atoms: List[Atom]
    rules: np.ndarray
    edges: Dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rules)

    def describe(self, limit: int = 10) -> List[str]:
        return [f"{self.atoms[a]} -> {self.atoms[b]}" for a, b in self.rules[:limit].tolist()]

    def has_rule(self, antecedent: Atom, consequent: Atom) -> bool:
        try:
            a = self.atoms.index(antecedent)
            b = self.atoms.index(consequent)
        except ValueError:
            return False
        return bool(np.any((self.rules[:, 0] == a) & (self.rules[:, 1] == b)))


def _columns(entries: Sequence[LogEntry]) -> Dict[str, List[object]]:
    return {name: [entry.values[i] for entry in entries] for i, name in enumerate(LOG_FIELDS)}


def _is_numeric(values: Sequence[object]) -> bool:
    return all(isinstance(v, float) for v in values)


def _build_atoms(columns: Dict[str, List[object]]) -> Tuple[List[Atom], Dict[str, np.ndarray]]:
    atoms: List[Atom] = []
    edges: Dict[str, np.ndarray] = {}
    for name in LOG_FIELDS:
        values = columns[name]
        if _is_numeric(values):
            data = np.asarray(values, dtype=float)
            cut = np.unique(np.quantile(data, DECILES))
            edges[name] = cut
            for index in sorted(set(np.digitize(data, cut).tolist())):
                atoms.append(Atom(name, "bin", index))
            for level in LEVEL_THRESHOLDS.get(name, ()):
                atoms.append(Atom(name, "ge", level))
            continue
        distinct = sorted(set(values), key=str)
        for value in distinct:
            atoms.append(Atom(name, "eq", value))
        if len(distinct) >= 2:
            for value in distinct:
                atoms.append(Atom(name, "ne", value))
    return atoms, edges


def _evaluate(atoms: Sequence[Atom], edges: Dict[str, np.ndarray], entries: Sequence[LogEntry]) -> np.ndarray:
    columns = _columns(entries)
    binned = {
        name: np.digitize(np.asarray(columns[name], dtype=float), cut) for name, cut in edges.items()
    }
    matrix = np.zeros((len(entries), len(atoms)), dtype=bool)
    for j, atom in enumerate(atoms):
        if atom.kind == "bin":
            matrix[:, j] = binned[atom.field] == atom.value
        elif atom.kind == "ge":
            matrix[:, j] = np.asarray(columns[atom.field], dtype=float) >= float(atom.value)  # type: ignore[arg-type]
        else:
            column = np.asarray([v == atom.value for v in columns[atom.field]], dtype=bool)
            matrix[:, j] = column if atom.kind == "eq" else ~column
    return matrix


def pad_mine(entries: Sequence[LogEntry], *, min_support: int = 1) -> InvariantSet:
    """All single-atom implications A -> B on distinct fields that hold on every entry."""

    if not entries:
        raise DetectorError("no log entries to mine", error_class="empty_training")
    atoms, edges = _build_atoms(_columns(entries))
    matrix = _evaluate(atoms, edges, entries).astype(np.float64)
    co = matrix.T @ matrix
    support = np.diag(co)
    fields = np.asarray([atom.field for atom in atoms])
    holds = (co == support[:, None]) & (support[:, None] >= min_support)
    holds &= fields[:, None] != fields[None, :]
    rules = np.argwhere(holds)
    logger.info("PAD mined %s invariants over %s atoms from %s entries", len(rules), len(atoms), len(entries))
    invariants = InvariantSet(atoms, rules, edges)
    logger.debug("sample invariants: %s", invariants.describe(5))
    return invariants


def pad_check(invariants: InvariantSet, entries: Sequence[LogEntry], *, period_s: float = 1.0) -> List[Verdict]:
    """One verdict per entry; flagged when any invariant is violated."""

    if invariants is None:
        raise DetectorError("PAD invariants are not mined")
    if not entries:
        return []
    matrix = _evaluate(invariants.atoms, invariants.edges, entries)
    antecedents = invariants.rules[:, 0]
    consequents = invariants.rules[:, 1]
    violated = np.zeros(len(entries), dtype=bool)
    for start in range(0, len(entries), 512):
        chunk = matrix[start : start + 512]
        violated[start : start + 512] = (chunk[:, antecedents] & ~chunk[:, consequents]).any(axis=1)
    period = int(round(period_s * 1_000_000))
    verdicts = []
    for entry, flagged in zip(entries, violated.tolist()):
        end = int(round(entry.t_s * 1_000_000))
        verdicts.append(Verdict(end - period, end, flagged))
    flagged_count = int(violated.sum())
    if flagged_count:
        detector_flags_total.labels(detector="pad").inc(flagged_count)
    return verdicts


__all__ = ["Atom", "InvariantSet", "LEVEL_THRESHOLDS", "pad_check", "pad_mine"]
