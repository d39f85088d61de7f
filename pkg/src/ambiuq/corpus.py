"""Desk-scale ground-truth construction from corpus co-occurrence counts.

Pipeline: chunk documents into their lowest-level text units, stem every
token, build an inverted index over stemmed terms, count chunks in which all
keyword terms and all answer terms co-occur (capped, optionally passed
through an entailment filter), and normalize the per-answer counts into a
ground-truth answer distribution. Questions where any candidate answer has
zero counts are discarded but retained in a discard log.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .dist import Categorical, normalize, row_js
from .errors import DegenerateInputError, ValidationError
from .porter import stem

import numpy as np

CHUNK_CHAR_LIMIT = 2000
DEFAULT_CAP = 1000

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")

# accept/reject decision for one retrieved chunk
EntailmentFilter = Callable[["Chunk", str, str], bool]


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    chunk_id: str
    text: str
    stemmed_terms: frozenset


@dataclass(frozen=True)
class QuestionSpec:
    question_id: str
    question: str
    keywords: tuple
    answers: tuple

    def __post_init__(self):
        if not self.keywords:
            raise ValidationError(f"{self.question_id}: keywords must be non-empty")
        if not self.answers:
            raise ValidationError(f"{self.question_id}: answers must be non-empty")


@dataclass(frozen=True)
class GroundTruthRecord:
    question_id: str
    answers: tuple
    counts: tuple
    p_star: Optional[Categorical]
    discarded: bool
    reason: Optional[str]
    raw_matches: tuple  # pre-cap, pre-filter match totals, for the log


def tokenize(text: str) -> list:
    return _TOKEN_RE.findall(text.casefold())


def stem_terms(text: str) -> frozenset:
    return frozenset(stem(tok) for tok in tokenize(text))


def answer_key(answer: str) -> str:
    """Stemmed canonical form used to match answers across record sets."""
    return " ".join(stem(tok) for tok in tokenize(answer))


def _split_oversized(text: str) -> list:
    """Split a unit > CHUNK_CHAR_LIMIT at sentence boundaries, greedily
    packing sentences; a single oversized sentence is hard-split."""
    pieces = []
    current = ""
    for sentence in _SENTENCE_RE.split(text):
        while len(sentence) > CHUNK_CHAR_LIMIT:
            if current:
                pieces.append(current)
                current = ""
            pieces.append(sentence[:CHUNK_CHAR_LIMIT])
            sentence = sentence[CHUNK_CHAR_LIMIT:]
        if not current:
            current = sentence
        elif len(current) + 1 + len(sentence) <= CHUNK_CHAR_LIMIT:
            current = f"{current} {sentence}"
        else:
            pieces.append(current)
            current = sentence
    if current:
        pieces.append(current)
    return pieces


def chunk_corpus(documents: Iterable) -> Iterator[Chunk]:
    """Yield one chunk per lowest-level unit of each (doc_id, units) pair.

    Units longer than CHUNK_CHAR_LIMIT characters are split at sentence
    boundaries. Chunk order is deterministic for a given input order.
    """
    for doc_id, units in documents:
        for unit_idx, unit in enumerate(units):
            unit = str(unit).strip()
            if not unit:
                continue
            if len(unit) <= CHUNK_CHAR_LIMIT:
                pieces = [unit]
            else:
                pieces = _split_oversized(unit)
            for piece_idx, piece in enumerate(pieces):
                chunk_id = (
                    f"{doc_id}:{unit_idx}"
                    if len(pieces) == 1
                    else f"{doc_id}:{unit_idx}.{piece_idx}"
                )
                yield Chunk(
                    doc_id=str(doc_id),
                    chunk_id=chunk_id,
                    text=piece,
                    stemmed_terms=stem_terms(piece),
                )


class InvertedIndex:
    """Stemmed term -> sorted chunk positions, over an in-memory chunk list."""

    def __init__(self, chunks: Sequence[Chunk]):
        self.chunks = list(chunks)
        self._postings: dict = {}
        for pos, chunk in enumerate(self.chunks):
            for term in chunk.stemmed_terms:
                self._postings.setdefault(term, []).append(pos)

    def __len__(self) -> int:
        return len(self.chunks)

    def postings(self, term: str) -> list:
        return self._postings.get(term, [])

    def matching(self, terms) -> list:
        """Positions of chunks containing every term, in corpus order."""
        terms = list(terms)
        if not terms:
            return []
        lists = sorted((self.postings(t) for t in terms), key=len)
        if not lists[0]:
            return []
        result = set(lists[0])
        for postings in lists[1:]:
            result &= set(postings)
            if not result:
                return []
        return sorted(result)


def build_index(chunks: Iterable) -> InvertedIndex:
    return InvertedIndex(list(chunks))


def _required_terms(keywords, answer: str) -> set:
    terms = set()
    for keyword in keywords:
        terms |= stem_terms(str(keyword))
    terms |= stem_terms(answer)
    return terms


def _count_detail(index, keywords, answer, cap, accept, question):
    terms = _required_terms(keywords, answer)
    if not terms:
        return 0, 0
    matches = index.matching(terms)
    raw = len(matches)
    kept = matches[:cap]
    if accept is None:
        return len(kept), raw
    count = sum(1 for pos in kept if accept(index.chunks[pos], question, answer))
    return count, raw


def cooccurrence_count(
    index: InvertedIndex,
    keywords,
    answer: str,
    cap: int = DEFAULT_CAP,
    accept: Optional[EntailmentFilter] = None,
    question: str = "",
) -> int:
    """Number of chunks containing all stemmed keyword and answer terms.

    Matches are truncated at ``cap`` in corpus order before the optional
    entailment filter is applied; zero is a valid count.
    """
    if not answer or not keywords:
        raise ValidationError("keywords and answer must be non-empty")
    count, _ = _count_detail(index, keywords, answer, cap, accept, question)
    return count


def _spec_record(index, spec: QuestionSpec, cap, accept) -> GroundTruthRecord:
    if len(set(spec.answers)) != len(spec.answers):
        return GroundTruthRecord(
            spec.question_id, spec.answers, (), None, True, "duplicate answers", ()
        )
    counts, raws = [], []
    for answer in spec.answers:
        count, raw = _count_detail(index, spec.keywords, answer, cap, accept, spec.question)
        counts.append(count)
        raws.append(raw)
    counts = tuple(counts)
    raws = tuple(raws)
    if min(counts) == 0:
        zeros = [a for a, c in zip(spec.answers, counts) if c == 0]
        return GroundTruthRecord(
            spec.question_id, spec.answers, counts, None, True,
            f"zero counts for answers: {zeros}", raws,
        )
    p_star = normalize(counts, classes=spec.answers)
    return GroundTruthRecord(
        spec.question_id, spec.answers, counts, p_star, False, None, raws
    )


def build_ground_truth(
    index: InvertedIndex,
    specs: Sequence[QuestionSpec],
    cap: int = DEFAULT_CAP,
    accept: Optional[EntailmentFilter] = None,
    workers: int = 1,
) -> list:
    """One GroundTruthRecord per spec, sorted by question_id.

    Counting is read-only, so records are identical for any worker count.
    """
    if workers <= 1:
        records = [_spec_record(index, s, cap, accept) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(lambda s: _spec_record(index, s, cap, accept), specs)
            )
    return sorted(records, key=lambda r: r.question_id)


def cross_validate(a: Sequence[GroundTruthRecord], b: Sequence[GroundTruthRecord]):
    """Per-question JS divergence between two ground-truth estimates.

    Records are joined on question_id (non-discarded only); answers are
    matched by stemmed canonical form, with probability 0 on the side
    missing an answer.
    """
    by_id_a = {r.question_id: r for r in a if not r.discarded}
    by_id_b = {r.question_id: r for r in b if not r.discarded}
    shared = sorted(set(by_id_a) & set(by_id_b))
    if not shared:
        raise DegenerateInputError("no shared non-discarded question_ids")
    def keyed(record):
        out = {}
        for ans, p in zip(record.answers, record.p_star.probs):
            key = answer_key(ans)
            out[key] = out.get(key, 0.0) + float(p)
        return out

    results = []
    for qid in shared:
        pa, pb = keyed(by_id_a[qid]), keyed(by_id_b[qid])
        keys = list(dict.fromkeys([*pa, *pb]))
        va = np.array([pa.get(k, 0.0) for k in keys])
        vb = np.array([pb.get(k, 0.0) for k in keys])
        results.append((qid, float(row_js(va, vb))))
    return results
