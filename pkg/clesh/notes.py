import contextlib
import dataclasses
import enum
from typing import Iterator, List, Optional, Tuple


class NoteKind(enum.Enum):
    STAGE = enum.auto()
    INFO = enum.auto()
    DEGENERATE = enum.auto()
    FALLBACK = enum.auto()
    SKIPPED = enum.auto()
    EXCLUDED = enum.auto()

    @property
    def is_caveat(self) -> bool:
        return self not in (NoteKind.STAGE, NoteKind.INFO)


@dataclasses.dataclass
class Note:
    kind: NoteKind = NoteKind.INFO
    text: str = ""
    feature: Optional[str] = None
    details: List[str] = dataclasses.field(default_factory=list)


class NoteLog:
    """Nested, append-only log of analysis notes.

    Consecutive notes with the same kind, feature and text at the same depth
    are merged, accumulating their details.
    """

    def __init__(self) -> None:
        self._nest = 0
        self.entries: List[Tuple[int, Note]] = []

    @contextlib.contextmanager
    def indent(self) -> Iterator[None]:
        self._nest += 1
        try:
            yield
        finally:
            self._nest -= 1

    def _can_merge(self, note: Note) -> bool:
        if not self.entries:
            return False
        last_nest, last = self.entries[-1]
        return (
            self._nest == last_nest
            and note.kind == last.kind
            and note.feature == last.feature
            and note.text == last.text
        )

    def add(self, note: Note) -> None:
        assert note.text
        if note.kind is NoteKind.STAGE:
            assert note.feature is None
        if self._can_merge(note):
            _, last = self.entries[-1]
            last.details.extend(note.details)
        else:
            self.entries.append((self._nest, note))

    def note(
        self,
        kind: NoteKind,
        text: str,
        feature: Optional[str] = None,
        details: Optional[List[str]] = None,
    ) -> None:
        self.add(
            Note(kind=kind, text=text, feature=feature, details=list(details or []))
        )

    def absorb(self, other: "NoteLog") -> None:
        for nest, note in other.entries:
            self.entries.append((nest + self._nest, note))

    def caveats(self) -> List[Note]:
        return [note for _, note in self.entries if note.kind.is_caveat]

    def render(self) -> List[str]:
        out = []
        for nest, note in self.entries:
            prefix = f"{note.feature}: " if note.feature else ""
            out.append("  " * nest + "- " + prefix + note.text)
            out += ["  " * (nest + 1) + "- " + detail for detail in note.details]
        return out
