"""Word-vector table and the vector primitives used by the relevance cost.

The table reads the plain text export used by GloVe and word2vec
(``token f1 f2 ... fd`` per line).  Vectors are stored as read-only
``float64`` numpy arrays.
"""

import io
import logging
import math
import re

import numpy as np

from .exceptions import NoCoverageError, ParseError, ValidationError

logger = logging.getLogger(__name__)

_SPLIT_RE = re.compile(r"[\s\-]+")


def tokenize(text):
    """Lowercase ``text`` and split it on whitespace and hyphens.

    >>> tokenize("Chief Executive-Officer")
    ['chief', 'executive', 'officer']
    """
    return [t for t in _SPLIT_RE.split(text.lower()) if t]


def _is_int(s):
    try:
        int(s)
    except ValueError:
        return False
    return True


class EmbeddingTable:
    """Immutable mapping from lowercase token to a fixed-length vector.

    Parameters
    ----------
    entries : dict of str to array-like
        Token vectors.  Tokens are lowercased; all vectors must share one
        length.
    dimension : int, optional
        Expected vector length.  Inferred from the first entry if omitted.
    duplicate_count : int, default=0
        Number of duplicate tokens dropped while loading (first one wins).
    """

    def __init__(self, entries, dimension=None, duplicate_count=0):
        vectors = {}
        for token, vec in entries.items():
            key = token.lower()
            if not key:
                raise ValidationError("empty token")
            if key in vectors:
                raise ValidationError(f"duplicate token {key!r}")
            arr = np.array(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ValidationError(f"vector for {key!r} is not one-dimensional")
            if dimension is None:
                dimension = arr.shape[0]
            if arr.shape[0] != dimension:
                raise ValidationError(
                    f"vector for {key!r} has length {arr.shape[0]}, expected {dimension}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"vector for {key!r} has non-finite components")
            arr.setflags(write=False)
            vectors[key] = arr
        if not dimension or dimension < 1:
            raise ValidationError("embedding dimension must be positive")
        self._vectors = vectors
        self.dimension = int(dimension)
        self.duplicate_count = duplicate_count

    @property
    def token_count(self):
        return len(self._vectors)

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, token):
        return token.lower() in self._vectors

    def __getitem__(self, token):
        return self._vectors[token.lower()]

    def get(self, token, default=None):
        return self._vectors.get(token.lower(), default)

    def tokens(self):
        return list(self._vectors)

    def __repr__(self):
        return f"EmbeddingTable(dimension={self.dimension}, token_count={self.token_count})"


def load_embeddings(source, expected_dimension=None):
    """Parse a text word-vector stream into an :class:`EmbeddingTable`.

    Parameters
    ----------
    source : bytes, path-like or file object
        Raw bytes, a filesystem path (``str`` is always a path) or an open
        text/binary stream.
    expected_dimension : int, optional
        If given, the file's vector length must match.

    Returns
    -------
    EmbeddingTable

    Raises
    ------
    ParseError
        Wrong arity or non-numeric component on some line, or an empty
        stream.  The message names the 1-based line number.
    ValidationError
        Dimension differs from ``expected_dimension``.
    """
    lines = _iter_lines(source)
    entries = {}
    dimension = None
    duplicates = 0
    first = True
    for lineno, raw in lines:
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if first:
            first = False
            # word2vec text exports start with "<vocab_size> <dim>"
            if len(fields) == 2 and _is_int(fields[0]) and _is_int(fields[1]):
                continue
        if len(fields) < 2:
            raise ParseError("expected a token followed by at least one component", lineno)
        token = fields[0].lower()
        if dimension is None:
            dimension = len(fields) - 1
            if expected_dimension is not None and dimension != expected_dimension:
                raise ValidationError(
                    f"embedding dimension {dimension} does not match expected {expected_dimension}"
                )
        elif len(fields) - 1 != dimension:
            raise ParseError(
                f"expected {dimension} components, found {len(fields) - 1}", lineno
            )
        try:
            vec = [float(x) for x in fields[1:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric component ({exc})", lineno) from None
        if not all(math.isfinite(x) for x in vec):
            raise ParseError("non-finite component", lineno)
        if token in entries:
            duplicates += 1
            logger.warning("duplicate token %r on line %d ignored", token, lineno)
            continue
        entries[token] = vec
    if dimension is None:
        raise ParseError("empty embedding stream")
    return EmbeddingTable(entries, dimension=dimension, duplicate_count=duplicates)


def save_embeddings(table, dest):
    """Write ``table`` in the text format read by :func:`load_embeddings`.

    Components use ``repr`` so a load/save round trip is bit-exact.
    """
    close = False
    if isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__"):
        dest = open(dest, "w", encoding="utf-8")
        close = True
    try:
        for token in table.tokens():
            comps = " ".join(repr(float(x)) for x in table[token])
            dest.write(f"{token} {comps}\n")
    finally:
        if close:
            dest.close()


def _iter_lines(source):
    if isinstance(source, bytes):
        stream = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
        return
    else:
        stream = source
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield lineno, line


def mean_embedding(table, tokens):
    """Component-wise mean of the in-vocabulary token vectors.

    Each entry of ``tokens`` is normalized with :func:`tokenize`, so
    ``["lab coat"]`` contributes ``lab`` and ``coat``.

    Returns
    -------
    vector : ndarray of shape (dimension,)
    skipped : list of str
        Normalized tokens that were not in the table.

    Raises
    ------
    ValidationError
        No tokens remain after normalization.
    NoCoverageError
        Every token is out of vocabulary.
    """
    normalized = [t for item in tokens for t in tokenize(item)]
    if not normalized:
        raise ValidationError("no tokens to embed")
    counts = {}
    skipped = []
    for tok in normalized:
        if tok in table:
            counts[tok] = counts.get(tok, 0) + 1
        else:
            skipped.append(tok)
    if not counts:
        raise NoCoverageError(normalized)
    # weight unique tokens by frequency so k copies of one token give its
    # vector bit-for-bit (a plain sum-then-divide does not); sorting makes the
    # result independent of label order down to the last bit
    total = sum(counts.values())
    uniq = sorted(counts)
    weights = np.array([counts[tok] / total for tok in uniq])
    matrix = np.vstack([table[tok] for tok in uniq])
    return weights @ matrix, skipped


def cosine_distance(u, v):
    """Return ``1 - cos(u, v)``, in [0, 2].

    The result is not clamped.  Zero-norm inputs and mismatched
    dimensions raise :class:`ValidationError`.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine distance undefined for a zero vector")
    return float(1.0 - np.dot(u, v) / (nu * nv))
