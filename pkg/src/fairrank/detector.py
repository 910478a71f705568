"""Object-label and face-gender annotations from external vision services.

Experiments run from an :class:`AnnotationStore` (a JSON-lines file of
:class:`DetectionResult` objects).  A live provider is optional; when one
is configured, misses are fetched, normalized and appended to the store
file so later runs replay them offline.

Provider payload mappings
-------------------------
``rekognition``
    Label response ``{"Labels": [{"Name": str, "Confidence": 0-100}]}``
    and face response ``{"FaceDetails": [{"Gender": {"Value": "Male"|"Female",
    "Confidence": 0-100}}]}``.  Confidences are divided by 100.
``generic``
    Already-normalized ``{"labels": [{"term", "confidence"}]}`` and
    ``{"faces": [{"gender", "confidence"}]}`` with confidences in [0, 1].
"""

import csv
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import httpx

from .corpus import GenderLabel, GroupPolicy, ImageRecord, ObjectLabel, QueryCorpus
from .exceptions import (
    MissingAnnotationError,
    ParseError,
    ProviderAuthError,
    ProviderError,
    ProviderTransportError,
    ValidationError,
)

DEFAULT_MIN_CONFIDENCE = 0.5


def _check_conf(value, what):
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ValidationError(f"{what} confidence {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class Face:
    gender: GenderLabel
    confidence: float

    def __post_init__(self):
        g = GenderLabel.parse(self.gender)
        if g not in (GenderLabel.MALE, GenderLabel.FEMALE):
            raise ValidationError(f"face gender must be male or female, got {g.value!r}")
        object.__setattr__(self, "gender", g)
        object.__setattr__(self, "confidence", _check_conf(self.confidence, "face"))


@dataclass(frozen=True)
class DetectionResult:
    image_ref: str
    labels: tuple = ()
    faces: tuple = ()
    provider: str = "offline"
    retrieved_at: str = ""

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(
            lab if isinstance(lab, ObjectLabel) else ObjectLabel(lab[0], _check_conf(lab[1], "label"))
            for lab in self.labels))
        object.__setattr__(self, "faces", tuple(
            f if isinstance(f, Face) else Face(*f) for f in self.faces))

    def to_dict(self):
        return {
            "image_ref": self.image_ref,
            "labels": [{"term": lab.term, "confidence": lab.confidence} for lab in self.labels],
            "faces": [{"gender": f.gender.value, "confidence": f.confidence} for f in self.faces],
            "provider": self.provider,
            "retrieved_at": self.retrieved_at,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, obj):
        return cls(
            image_ref=obj["image_ref"],
            labels=tuple((lab["term"], lab["confidence"]) for lab in obj.get("labels") or []),
            faces=tuple((f["gender"], f["confidence"]) for f in obj.get("faces") or []),
            provider=obj.get("provider", "offline"),
            retrieved_at=obj.get("retrieved_at", ""),
        )


def normalize_rekognition(image_ref, label_payload, face_payload, retrieved_at, provider="rekognition"):
    labels = [(item["Name"], float(item["Confidence"]) / 100.0)
              for item in label_payload.get("Labels", [])]
    faces = []
    for det in face_payload.get("FaceDetails", []):
        gender = det.get("Gender")
        if gender:
            faces.append((gender["Value"], float(gender["Confidence"]) / 100.0))
    return DetectionResult(image_ref, tuple(labels), tuple(faces), provider, retrieved_at)


def normalize_generic(image_ref, label_payload, face_payload, retrieved_at, provider="generic"):
    labels = [(item["term"], item["confidence"]) for item in label_payload.get("labels", [])]
    faces = [(f["gender"], f["confidence"]) for f in face_payload.get("faces", [])]
    return DetectionResult(image_ref, tuple(labels), tuple(faces), provider, retrieved_at)


ADAPTERS = {"rekognition": normalize_rekognition, "generic": normalize_generic}


class AnnotationStore:
    """In-memory map ``image_ref -> DetectionResult``, optionally file-backed.

    ``add`` appends to ``path`` under a lock, so concurrent live lookups
    serialize their writes.
    """

    def __init__(self, results=(), path=None):
        self._results = {}
        for res in results:
            self._results.setdefault(res.image_ref, res)
        self.path = path
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path, create=False):
        if create and not os.path.exists(path):
            return cls(path=path)
        results = []
        seen = set()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    res = DetectionResult.from_dict(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
                except KeyError as exc:
                    raise ParseError(f"missing field {exc.args[0]!r}", lineno) from None
                except (ValueError, TypeError) as exc:
                    raise ParseError(str(exc), lineno) from None
                if res.image_ref in seen:
                    raise ParseError(f"duplicate image_ref {res.image_ref!r}", lineno)
                seen.add(res.image_ref)
                results.append(res)
        return cls(results, path=path)

    def __contains__(self, ref):
        return ref in self._results

    def __len__(self):
        return len(self._results)

    def get(self, ref):
        return self._results.get(ref)

    def add(self, result):
        with self._lock:
            if result.image_ref in self._results:
                return self._results[result.image_ref]
            self._results[result.image_ref] = result
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(result.to_json() + "\n")
            return result

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for res in self._results.values():
                fh.write(res.to_json() + "\n")


class HttpDetectionProvider:
    """Live provider speaking HTTP+JSON.

    Each lookup POSTs ``{"image_ref": ref}`` to the label endpoint and the
    face endpoint, then normalizes both payloads with the named adapter.
    The bearer token is read from ``token_env`` at call time and never
    written anywhere.

    Parameters
    ----------
    base_url : str
    adapter : {"rekognition", "generic"}
    label_path, face_path : str
    token_env : str
    timeout : float
    transport : httpx.BaseTransport, optional
        Injected transport (used by tests).
    """

    def __init__(self, base_url, adapter="rekognition", label_path="/detect-labels",
                 face_path="/detect-faces", token_env="FAIRRANK_PROVIDER_TOKEN",
                 timeout=30.0, transport=None):
        if adapter not in ADAPTERS:
            raise ValidationError(f"unknown provider adapter {adapter!r}")
        self.base_url = base_url
        self.adapter = adapter
        self.label_path = label_path
        self.face_path = face_path
        self.token_env = token_env
        self.timeout = timeout
        self.transport = transport

    @property
    def name(self):
        return self.adapter

    def _post(self, client, path, ref):
        try:
            resp = client.post(path, json={"image_ref": ref})
        except httpx.HTTPError as exc:
            raise ProviderTransportError(f"{path} for {ref!r}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise ProviderAuthError(f"{path}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderTransportError(f"{path} for {ref!r}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderTransportError(f"{path} for {ref!r}: body is not JSON") from exc

    def fetch(self, ref, retrieved_at):
        headers = {}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        with httpx.Client(base_url=self.base_url, headers=headers, timeout=self.timeout,
                          transport=self.transport) as client:
            labels = self._post(client, self.label_path, ref)
            faces = self._post(client, self.face_path, ref)
        try:
            return ADAPTERS[self.adapter](ref, labels, faces, retrieved_at, provider=self.adapter)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"unexpected {self.adapter} payload for {ref!r}: {exc}") from exc


def _utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class DetectorClient:
    """Look up detections, replaying from ``store`` and falling back to ``provider``.

    Parameters
    ----------
    store : AnnotationStore
    provider : object with ``fetch(ref, retrieved_at)``, optional
        Without a provider the client is strictly offline.
    clock : callable returning str, optional
        Timestamp source for live results; pin it for byte-stable output.
    max_workers : int, default=4
        Cap on concurrent live requests in :meth:`detect_many`.
    """

    def __init__(self, store, provider=None, clock=None, max_workers=4):
        self.store = store
        self.provider = provider
        self.clock = clock or _utc_now
        self.max_workers = max_workers

    def detect(self, image_ref):
        hit = self.store.get(image_ref)
        if hit is not None:
            return hit
        if self.provider is None:
            raise MissingAnnotationError([image_ref])
        result = self.provider.fetch(image_ref, self.clock())
        return self.store.add(result)

    def detect_many(self, refs):
        refs = list(refs)
        if self.provider is None:
            missing = [r for r in refs if r not in self.store]
            if missing:
                raise MissingAnnotationError(missing)
            return [self.store.get(r) for r in refs]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(self.detect, refs))


def resolve_gender(result, min_confidence=DEFAULT_MIN_CONFIDENCE):
    """Collapse detected faces into one gender label.

    Faces below ``min_confidence`` are ignored.  No qualifying face gives
    ``UNCERTAIN``; qualifying faces of a single gender give that gender;
    qualifying faces of both genders give ``BOTH``.
    """
    seen = {f.gender for f in result.faces if f.confidence >= min_confidence}
    if not seen:
        return GenderLabel.UNCERTAIN
    if len(seen) == 2:
        return GenderLabel.BOTH
    return seen.pop()


@dataclass(frozen=True)
class ManifestRow:
    id: str
    original_rank: int
    image_ref: str


def load_manifest(path):
    """Read a CSV manifest with columns ``id,original_rank,image_ref``."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"id", "original_rank", "image_ref"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ParseError(f"manifest header must contain {sorted(need)}", 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                rank = int(row["original_rank"])
            except (TypeError, ValueError):
                raise ParseError(f"bad original_rank {row['original_rank']!r}", lineno) from None
            if not row["id"] or not row["image_ref"]:
                raise ParseError("id and image_ref must be non-empty", lineno)
            rows.append(ManifestRow(row["id"], rank, row["image_ref"]))
    if not rows:
        raise ValidationError(f"manifest {path} is empty")
    return rows


def load_overrides(path):
    """Read crowd gender labels from a CSV with columns ``id,gender``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "gender"} <= set(reader.fieldnames):
            raise ParseError("override header must contain ['gender', 'id']", 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                out[row["id"]] = GenderLabel.parse(row["gender"])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return out


def build_corpus(manifest, client, query, policy=GroupPolicy.ALL_FOUR, overrides=None,
                 min_confidence=DEFAULT_MIN_CONFIDENCE):
    """Join a manifest with detection results into a :class:`QueryCorpus`.

    Object labels always come from the detection result.  The gender comes
    from ``overrides`` (crowd labels keyed by record id) when present,
    otherwise from :func:`resolve_gender`.

    Raises
    ------
    MissingAnnotationError
        Lists every manifest ref with no stored result (offline mode).
    """
    if isinstance(client, AnnotationStore):
        client = DetectorClient(client)
    overrides = overrides or {}
    results = client.detect_many(row.image_ref for row in manifest)
    records = []
    for row, res in zip(manifest, results):
        gender = overrides.get(row.id) or resolve_gender(res, min_confidence)
        records.append(ImageRecord(
            id=row.id,
            query=query,
            original_rank=row.original_rank,
            gender=gender,
            object_labels=res.labels,
            source_ref=row.image_ref,
        ))
    return QueryCorpus(query, tuple(records), GroupPolicy.parse(policy))


@dataclass
class ConfusionMatrix:
    """Predicted-vs-reference gender counts; rows are reference labels."""

    counts: dict = field(default_factory=dict)

    @property
    def total(self):
        return sum(sum(row.values()) for row in self.counts.values())

    @property
    def accuracy(self):
        total = self.total
        if total == 0:
            return float("nan")
        return sum(self.counts[g][g] for g in self.counts) / total


def gender_confusion(predicted, reference):
    """Tabulate stored detector genders against crowd labels.

    Parameters
    ----------
    predicted, reference : dict of str to GenderLabel
        Keyed by record id; only ids present in both are counted.
    """
    labels = tuple(GenderLabel)
    counts = {t: {p: 0 for p in labels} for t in labels}
    for rid, truth in reference.items():
        if rid in predicted:
            counts[GenderLabel.parse(truth)][GenderLabel.parse(predicted[rid])] += 1
    return ConfusionMatrix(counts)
