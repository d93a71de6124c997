"""Finite stage tables standing in for a computably enumerable set.

A stage table records "n enters A at stage s" for finitely many n.  Nothing
here simulates machines; the table is simply loaded and queried.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union


class StageTableError(ValueError):
    pass


@dataclass(frozen=True)
class StagedSet:
    n_max: int
    s_max: int
    entries: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_max < 0 or self.s_max < 0:
            raise StageTableError("n_max and s_max must be natural numbers")
        clean = {}
        for n, s in dict(self.entries).items():
            n, s = int(n), int(s)
            if n < 0 or n > self.n_max:
                raise StageTableError(f"entry n={n} outside 0..{self.n_max}")
            if s < 0 or s > self.s_max:
                raise StageTableError(f"stage s={s} for n={n} outside 0..{self.s_max}")
            clean[n] = s
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __hash__(self) -> int:
        return hash((self.n_max, self.s_max, tuple(self.entries.items())))

    def stage_of(self, n: int):
        """Stage at which ``n`` enters, or None if it never does."""
        self._check(n)
        return self.entries.get(n)

    def member_at(self, n: int, s: int) -> bool:
        """Whether ``n`` has entered by stage ``s`` (n in A_s)."""
        self._check(n)
        stage = self.entries.get(n)
        return stage is not None and stage <= s

    def members(self) -> list[int]:
        return list(self.entries)

    def _check(self, n: int) -> None:
        if n < 0 or n > self.n_max:
            raise StageTableError(f"n={n} outside 0..{self.n_max}")

    def to_document(self) -> dict:
        return {
            "n_max": self.n_max,
            "s_max": self.s_max,
            "entries": [[n, s] for n, s in self.entries.items()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True)


def member_at(S: StagedSet, n: int, s: int) -> bool:
    return S.member_at(n, s)


def stage_table_from_document(doc: Mapping) -> StagedSet:
    try:
        n_max = doc["n_max"]
        s_max = doc["s_max"]
        raw = doc["entries"]
    except (KeyError, TypeError) as exc:
        raise StageTableError(f"malformed stage table: missing {exc}") from None
    if not isinstance(n_max, int) or not isinstance(s_max, int) or isinstance(n_max, bool):
        raise StageTableError("n_max and s_max must be integers")
    if not isinstance(raw, list):
        raise StageTableError("entries must be a list of [n, s] pairs")
    entries: dict[int, int] = {}
    for item in raw:
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in item)
        ):
            raise StageTableError(f"malformed entry {item!r}")
        n, s = item
        if n in entries:
            raise StageTableError(f"duplicate entry for n={n}")
        entries[n] = s
    return StagedSet(n_max=n_max, s_max=s_max, entries=entries)


def load_stage_table(source: Union[str, bytes, Path, Mapping]) -> StagedSet:
    """Parse a stage-table document (JSON text, a path to one, or an already-decoded mapping)."""
    if isinstance(source, Mapping):
        return stage_table_from_document(source)
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise StageTableError(f"malformed stage table: {exc}") from None
    return stage_table_from_document(doc)
