"""Image-record data model, JSON-lines corpus I/O and group distributions."""

import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import EmptyDistributionError, ParseError, ValidationError


class GenderLabel(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"
    BOTH = "both"
    UNCERTAIN = "uncertain"

    @classmethod
    def parse(cls, value):
        """Case-insensitive parse; unknown strings raise ``ValueError``."""
        if isinstance(value, cls):
            return value
        if not isinstance(value, str):
            raise ValueError(f"gender must be a string, got {value!r}")
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown gender label {value!r}") from None

    @property
    def short(self):
        return {"male": "M", "female": "F", "both": "Both", "uncertain": "Uncertain"}[self.value]


class GroupPolicy(str, enum.Enum):
    """Which gender labels form the group set of a distribution.

    ``ALL_FOUR`` uses every label.  ``BINARY_MF`` keeps only male and
    female records when counting; the others still get ranked.
    """

    ALL_FOUR = "all4"
    BINARY_MF = "binary"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"all4": cls.ALL_FOUR, "allfour": cls.ALL_FOUR, "all_four": cls.ALL_FOUR,
                   "binary": cls.BINARY_MF, "binarymf": cls.BINARY_MF, "binary_mf": cls.BINARY_MF}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ValidationError(f"unknown group policy {value!r}") from None

    @property
    def groups(self):
        if self is GroupPolicy.BINARY_MF:
            return (GenderLabel.MALE, GenderLabel.FEMALE)
        return tuple(GenderLabel)


@dataclass(frozen=True)
class ObjectLabel:
    term: str
    confidence: float = 1.0

    def __post_init__(self):
        if not isinstance(self.term, str) or not self.term.strip():
            raise ValidationError("object label term must be a non-empty string")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"label confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class ImageRecord:
    id: str
    query: str
    original_rank: int
    gender: GenderLabel
    object_labels: tuple = ()
    source_ref: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("record id must be a non-empty string")
        if isinstance(self.original_rank, bool) or not isinstance(self.original_rank, int) \
                or self.original_rank < 1:
            raise ValidationError(f"record {self.id!r}: original_rank must be a positive integer")
        object.__setattr__(self, "gender", GenderLabel.parse(self.gender))
        object.__setattr__(self, "object_labels", tuple(
            lab if isinstance(lab, ObjectLabel) else ObjectLabel(*lab)
            for lab in self.object_labels
        ))

    @property
    def terms(self):
        return [lab.term for lab in self.object_labels]

    def to_dict(self):
        out = {
            "id": self.id,
            "query": self.query,
            "original_rank": self.original_rank,
            "gender": self.gender.value,
            "object_labels": [{"term": lab.term, "confidence": lab.confidence}
                              for lab in self.object_labels],
        }
        if self.source_ref is not None:
            out["source_ref"] = self.source_ref
        return out

    @classmethod
    def from_dict(cls, obj):
        labels = []
        for lab in obj.get("object_labels") or []:
            labels.append(ObjectLabel(lab["term"], float(lab.get("confidence", 1.0))))
        return cls(
            id=obj["id"],
            query=obj["query"],
            original_rank=obj["original_rank"],
            gender=GenderLabel.parse(obj["gender"]),
            object_labels=tuple(labels),
            source_ref=obj.get("source_ref"),
        )


@dataclass(frozen=True)
class GroupDistribution:
    probabilities: dict
    support_count: int

    def as_tuple(self):
        return tuple(self.probabilities.values())

    def __getitem__(self, group):
        return self.probabilities[GenderLabel.parse(group)]


@dataclass(frozen=True)
class QueryCorpus:
    """The retrieved set for one query, sorted by original rank."""

    query: str
    records: tuple
    group_policy: GroupPolicy = GroupPolicy.ALL_FOUR
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.original_rank))
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "group_policy", GroupPolicy.parse(self.group_policy))
        validate_records(records, self.query)
        object.__setattr__(self, "_by_id", {r.id: r for r in records})

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self):
        return [r.id for r in self.records]

    def record(self, record_id):
        return self._by_id[record_id]

    def distribution(self, policy=None):
        return group_distribution(self.records, policy or self.group_policy)


def validate_records(records, query=None):
    """Check the corpus invariants: unique ids and ranks forming 1..N."""
    if not records:
        raise ValidationError("corpus is empty")
    seen_ids = set()
    seen_ranks = set()
    for r in records:
        if query is not None and r.query != query:
            raise ValidationError(
                f"record {r.id!r} has query {r.query!r}, corpus query is {query!r}"
            )
        if r.id in seen_ids:
            raise ValidationError(f"duplicate id {r.id!r}")
        if r.original_rank in seen_ranks:
            raise ValidationError(f"duplicate rank {r.original_rank} (record {r.id!r})")
        seen_ids.add(r.id)
        seen_ranks.add(r.original_rank)
    n = len(records)
    missing = sorted(set(range(1, n + 1)) - seen_ranks)
    if missing:
        raise ValidationError(
            f"ranks must form 1..{n}; missing {missing[:10]}{'...' if len(missing) > 10 else ''}"
        )


def parse_corpus(source, group_policy=GroupPolicy.ALL_FOUR):
    """Read a JSON-lines corpus.

    Parameters
    ----------
    source : bytes, path-like or file object
        One :class:`ImageRecord` object per line.  ``str`` is a path.
    group_policy : GroupPolicy or str, default="all4"

    Returns
    -------
    QueryCorpus
    """
    records = []
    for lineno, line in _iter_text_lines(source):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        try:
            records.append(ImageRecord.from_dict(obj))
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", lineno) from None
        except (ValueError, TypeError) as exc:
            raise ParseError(str(exc), lineno) from None
    if not records:
        raise ValidationError("corpus is empty")
    queries = {r.query for r in records}
    if len(queries) > 1:
        raise ValidationError(f"corpus mixes queries: {sorted(queries)}")
    return QueryCorpus(records[0].query, tuple(records), GroupPolicy.parse(group_policy))


def serialize_corpus(corpus, dest=None):
    """Write ``corpus`` as JSON lines.  Returns the text if ``dest`` is None."""
    text = "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in corpus.records)
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _iter_text_lines(source):
    if isinstance(source, bytes):
        yield from enumerate(io.StringIO(source.decode("utf-8")), start=1)
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    else:
        for lineno, line in enumerate(source, start=1):
            yield lineno, line.decode("utf-8") if isinstance(line, bytes) else line


def group_counts(records, policy=GroupPolicy.ALL_FOUR):
    """Counts per group of ``policy``, in the policy's group order."""
    policy = GroupPolicy.parse(policy)
    tally = Counter(r.gender for r in records)
    return {g: tally.get(g, 0) for g in policy.groups}


def distribution_from_counts(counts):
    """Turn an ordered ``{group: count}`` mapping into a distribution."""
    total = sum(counts.values())
    if total == 0:
        raise EmptyDistributionError("empty distribution")
    return GroupDistribution({g: c / total for g, c in counts.items()}, total)


def group_distribution(records, policy=GroupPolicy.ALL_FOUR):
    """Empirical distribution of gender groups over ``records``.

    Under ``BINARY_MF`` only male/female records are counted and the result
    is renormalized over those two groups.

    Raises
    ------
    EmptyDistributionError
        No record falls into the policy's group set.
    """
    return distribution_from_counts(group_counts(records, policy))


def summary_row(corpus):
    """Percentages per gender label as ``"M/F/Both/Uncertain"``."""
    counts = group_counts(corpus.records, GroupPolicy.ALL_FOUR)
    n = len(corpus)
    return "/".join(f"{round(100.0 * counts[g] / n, 2):g}" for g in GroupPolicy.ALL_FOUR.groups)
