"""Self-describing data elements and the pure activity functions over them.

A datum wraps an opaque payload (a flat mapping of named fields) with
objective metadata and subjective, evolving attributes: a truth value in
[-1, 1], a confidence in [0, 1], detail and exposure levels, a storage
tier, and links to corroborating / refuting data.

All operations here are pure: they take value types and return new value
types, never mutating their arguments.  Confidence fusion uses the
noisy-OR rule ``1 - (1 - a)(1 - b)``, which is commutative, associative,
monotone, and closed over [0, 1].
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Mapping

from .errors import LifecycleError, PreconditionError, RangeError, ValidationError
from .nearness import NearnessKey

Scalar = str | int | float | bool
Payload = Mapping[str, Scalar]


class NotionKind(Enum):
    Assumption = "assumption"
    Goal = "goal"
    Hypothesis = "hypothesis"
    Event = "event"
    Aggregate = "aggregate"


class StorageTier(Enum):
    Hot = "hot"
    Warm = "warm"
    Cold = "cold"
    Archived = "archived"
    Deleted = "deleted"


class EvidencePolarity(Enum):
    Complementary = "complementary"
    Refuting = "refuting"


def format_scalar(value: Scalar) -> str:
    """Deterministic text for a payload value.

    Integral floats collapse to their integer form so that 50 and 50.0
    canonicalize identically.
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def canonical_text(payload: Payload) -> str:
    """Canonical form of a payload: fields sorted by name, ``name=value``
    pairs joined by ``;``.  Used for duplicate detection and reports."""
    return ";".join(f"{k}={format_scalar(payload[k])}" for k in sorted(payload))


def _short_hash(*parts: str) -> str:
    digest = hashlib.sha1("\x1f".join(parts).encode("utf-8")).hexdigest()
    return digest[:10]


@dataclass(frozen=True)
class Metadata:
    """Objective description of a datum: who produced it, when, how big."""

    source_id: str
    observed_at: float
    size_hint: int = 0
    schema_tag: str = ""

    def __post_init__(self):
        if not self.source_id:
            raise ValidationError("source_id must be non-empty", "source_id")
        if self.observed_at < 0:
            raise ValidationError("observed_at must be >= 0", "observed_at")


@dataclass(frozen=True)
class Hyperdata:
    """Subjective, dynamic attributes of a datum."""

    truth: float
    confidence: float
    detail: float = 0.5
    exposure: float = 0.0
    tier: StorageTier = StorageTier.Hot
    complementary: tuple[str, ...] = ()
    refuting: tuple[str, ...] = ()
    missing: tuple[str, ...] = ()
    created_at: float = 0.0
    updated_at: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.truth <= 1.0:
            raise RangeError(f"truth {self.truth} outside [-1, 1]")
        for name, v in (("confidence", self.confidence), ("detail", self.detail),
                        ("exposure", self.exposure)):
            if not 0.0 <= v <= 1.0:
                raise RangeError(f"{name} {v} outside [0, 1]")
        if self.updated_at < self.created_at:
            raise ValidationError("updated_at < created_at", "updated_at")
        if set(self.complementary) & set(self.refuting):
            raise ValidationError("complementary and refuting lists overlap",
                                  "complementary")


@dataclass(frozen=True)
class ActiveDatum:
    """The atomic element of the system: payload + metadata + hyperdata."""

    id: str
    kind: NotionKind
    payload: Payload
    key: NearnessKey
    metadata: Metadata
    hyperdata: Hyperdata

    @cached_property
    def text(self) -> str:
        # The payload never changes once wrapped, so cache the canonical form;
        # duplicate detection compares it on every peer encounter.
        return canonical_text(self.payload)

    @property
    def confidence(self) -> float:
        return self.hyperdata.confidence

    @property
    def truth(self) -> float:
        return self.hyperdata.truth

    @property
    def tier(self) -> StorageTier:
        return self.hyperdata.tier


@dataclass(frozen=True)
class Evidence:
    """A single supporting or refuting observation about a datum."""

    polarity: EvidencePolarity
    strength: float
    source_datum: str

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise RangeError(f"strength {self.strength} outside [0, 1]")


@dataclass(frozen=True)
class TierPolicy:
    """Thresholds for the storage-tier decision."""

    min_confidence: float = 0.25
    hot_age: float = 3600.0
    warm_age: float = 14400.0
    cold_age: float = 86400.0
    false_truth: float = -0.9
    false_confidence: float = 0.9


DEFAULT_TIER_POLICY = TierPolicy()


@dataclass(frozen=True)
class HypothesisRule:
    """Pattern -> template rule producing an explanatory datum.

    Each premise pattern is a mapping of payload field to the exact value
    it must carry.  The conclusion template maps fields to either literal
    values or references of the form ``{i.field}``, pulling the value
    from the datum matched by premise ``i``.
    """

    id: str
    premise_patterns: tuple[Payload, ...]
    conclusion_template: Payload
    conclusion_kind: NotionKind = NotionKind.Hypothesis

    def __post_init__(self):
        if not self.premise_patterns:
            raise ValidationError("rule needs at least one premise", "premise_patterns")
        for value in self.conclusion_template.values():
            ref = _parse_reference(value)
            if ref is None:
                continue
            idx, fname = ref
            if idx >= len(self.premise_patterns):
                raise ValidationError(f"reference {value!r} names premise {idx}, "
                                      f"but only {len(self.premise_patterns)} exist",
                                      "conclusion_template")
            if fname not in self.premise_patterns[idx]:
                raise ValidationError(f"reference {value!r} names a field not bound "
                                      f"by premise {idx}", "conclusion_template")


def _parse_reference(value: Scalar) -> tuple[int, str] | None:
    if not isinstance(value, str) or not value.startswith("{") or not value.endswith("}"):
        return None
    inner = value[1:-1]
    idx_text, _, fname = inner.partition(".")
    if not idx_text.isdigit() or not fname:
        return None
    return int(idx_text), fname


def noisy_or(a: float, b: float) -> float:
    return 1.0 - (1.0 - a) * (1.0 - b)


def _clamp(v: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, v))


def encapsulate(payload: Payload, kind: NotionKind, metadata: Metadata,
                source_confidence: float, key: NearnessKey,
                datum_id: str | None = None) -> ActiveDatum:
    """Wrap a raw payload into a datum posed as true at the source's confidence.

    The new datum starts Hot with truth +1, detail 0.5, zero exposure, and
    empty evidence lists; both timestamps equal the observation time.
    """
    if not 0.0 <= source_confidence <= 1.0:
        raise RangeError(f"source_confidence {source_confidence} outside [0, 1]")
    if datum_id is None:
        stamp = _short_hash(metadata.source_id, format_scalar(metadata.observed_at),
                            canonical_text(payload))
        datum_id = f"{metadata.source_id}-{stamp}"
    return ActiveDatum(
        id=datum_id,
        kind=kind,
        payload=dict(payload),
        key=key,
        metadata=metadata,
        hyperdata=Hyperdata(
            truth=1.0,
            confidence=source_confidence,
            detail=0.5,
            exposure=0.0,
            tier=StorageTier.Hot,
            created_at=metadata.observed_at,
            updated_at=metadata.observed_at,
        ),
    )


def is_duplicate(a: ActiveDatum, b: ActiveDatum) -> bool:
    """True when payload text and kind are equal and the keys overlap in
    every dimension (time and box intersect, concept paths are equal)."""
    return (
        a.kind is b.kind
        and a.key.concept == b.key.concept
        and a.key.time.intersects(b.key.time)
        and a.key.space.intersects(b.key.space)
        and a.text == b.text
    )


def resolve(a: ActiveDatum, b: ActiveDatum) -> ActiveDatum:
    """Fuse two duplicate data into one.

    The surviving id is the lexicographic minimum; confidences combine by
    noisy-OR; truth becomes the confidence-weighted mean; detail and
    exposure take the max; the absorbed id joins the complementary links.
    The caller is responsible for marking the loser Deleted.
    """
    if not is_duplicate(a, b):
        raise PreconditionError(f"{a.id} and {b.id} are not duplicates")
    winner, loser = (a, b) if a.id <= b.id else (b, a)
    ca, cb = a.confidence, b.confidence
    confidence = noisy_or(ca, cb)
    if ca + cb > 0:
        truth = (ca * a.truth + cb * b.truth) / (ca + cb)
    else:
        truth = (a.truth + b.truth) / 2.0
    hd_w, hd_l = winner.hyperdata, loser.hyperdata
    complementary = _merge_links(hd_w.complementary, hd_l.complementary, (loser.id,))
    refuting = tuple(r for r in _merge_links(hd_w.refuting, hd_l.refuting, ())
                     if r not in complementary)
    return replace(
        winner,
        key=winner.key.cover(loser.key),
        hyperdata=replace(
            hd_w,
            truth=_clamp(truth, -1.0, 1.0),
            confidence=_clamp(confidence, 0.0, 1.0),
            detail=max(hd_w.detail, hd_l.detail),
            exposure=max(hd_w.exposure, hd_l.exposure),
            complementary=complementary,
            refuting=refuting,
            missing=_merge_links(hd_w.missing, hd_l.missing, ()),
            created_at=min(hd_w.created_at, hd_l.created_at),
            updated_at=max(hd_w.updated_at, hd_l.updated_at),
        ),
    )


def _merge_links(first: tuple[str, ...], second: tuple[str, ...],
                 extra: tuple[str, ...]) -> tuple[str, ...]:
    out: list[str] = []
    for item in (*first, *second, *extra):
        if item not in out:
            out.append(item)
    return tuple(out)


def apply_evidence(d: ActiveDatum, e: Evidence, at: float | None = None) -> ActiveDatum:
    """Fold one piece of evidence into a datum.

    Complementary evidence raises confidence by noisy-OR and leaves truth
    alone.  Refuting evidence pulls truth toward -1 by
    ``truth - strength * (truth + 1)`` and also raises confidence, since a
    refutation is itself informative; it never deletes the datum.  ``at``
    is the evidence arrival time; when omitted the datum's own update time
    is reused (no advance).
    """
    if d.tier is StorageTier.Deleted:
        raise LifecycleError(f"datum {d.id} is deleted")
    hd = d.hyperdata
    when = hd.updated_at if at is None else max(at, hd.updated_at)
    confidence = _clamp(noisy_or(hd.confidence, e.strength), 0.0, 1.0)
    if e.polarity is EvidencePolarity.Complementary:
        truth = hd.truth
        complementary = _merge_links(hd.complementary, (), (e.source_datum,))
        refuting = tuple(r for r in hd.refuting if r != e.source_datum)
    else:
        truth = _clamp(hd.truth - e.strength * (hd.truth + 1.0), -1.0, 1.0)
        refuting = _merge_links(hd.refuting, (), (e.source_datum,))
        complementary = tuple(c for c in hd.complementary if c != e.source_datum)
    return replace(d, hyperdata=replace(
        hd, truth=truth, confidence=confidence,
        complementary=complementary, refuting=refuting, updated_at=when))


def aggregate(data: list[ActiveDatum] | set[ActiveDatum] | tuple[ActiveDatum, ...],
              group_key: str, datum_id: str | None = None) -> ActiveDatum:
    """Count distinct data per value of a shared payload field.

    The result is an Aggregate datum whose payload maps each observed
    field value to the number of distinct input ids that carried it; its
    confidence is the minimum over the inputs and its key is the smallest
    key covering all input keys.
    """
    items = sorted(data, key=lambda d: d.id)
    if not items:
        raise PreconditionError("cannot aggregate an empty set")
    kinds = {d.kind for d in items}
    if len(kinds) != 1:
        raise PreconditionError(f"mixed kinds in aggregate: {sorted(k.value for k in kinds)}")
    counts: dict[str, set[str]] = {}
    for d in items:
        if group_key not in d.payload:
            raise PreconditionError(f"datum {d.id} lacks field {group_key!r}")
        counts.setdefault(format_scalar(d.payload[group_key]), set()).add(d.id)
    key = items[0].key
    for d in items[1:]:
        key = key.cover(d.key)
    observed = max(d.metadata.observed_at for d in items)
    updated = max(d.hyperdata.updated_at for d in items)
    payload: dict[str, Scalar] = {value: len(ids) for value, ids in counts.items()}
    if datum_id is None:
        datum_id = f"agg-{_short_hash(group_key, *(d.id for d in items))}"
    return ActiveDatum(
        id=datum_id,
        kind=NotionKind.Aggregate,
        payload=payload,
        key=key,
        metadata=Metadata(source_id="aggregate", observed_at=observed,
                          size_hint=len(payload), schema_tag=f"count:{group_key}"),
        hyperdata=Hyperdata(
            truth=min(d.truth for d in items),
            confidence=min(d.confidence for d in items),
            detail=max(d.hyperdata.detail for d in items),
            exposure=max(d.hyperdata.exposure for d in items),
            complementary=tuple(d.id for d in items),
            created_at=updated,
            updated_at=updated,
        ),
    )


def _pattern_matches(pattern: Payload, datum: ActiveDatum) -> bool:
    return all(
        name in datum.payload
        and format_scalar(datum.payload[name]) == format_scalar(value)
        for name, value in pattern.items()
    )


def _find_assignment(rule: HypothesisRule,
                     candidates: list[ActiveDatum]) -> list[ActiveDatum] | None:
    """First injective premise->datum assignment in ascending-id order."""

    def extend(idx: int, used: set[str], picked: list[ActiveDatum]):
        if idx == len(rule.premise_patterns):
            return picked
        for d in candidates:
            if d.id in used or not _pattern_matches(rule.premise_patterns[idx], d):
                continue
            result = extend(idx + 1, used | {d.id}, picked + [d])
            if result is not None:
                return result
        return None

    return extend(0, set(), [])


def infer(rule: HypothesisRule, candidates: list[ActiveDatum] | set[ActiveDatum],
          datum_id: str | None = None) -> ActiveDatum | None:
    """Fire a rule against a candidate pool.

    Returns the instantiated conclusion when every premise pattern matches
    a distinct candidate, with confidence the product of the premise
    confidences and truth the minimum premise truth; otherwise None.
    """
    pool = sorted(candidates, key=lambda d: d.id)
    premises = _find_assignment(rule, pool)
    if premises is None:
        return None
    payload: dict[str, Scalar] = {}
    for name, value in rule.conclusion_template.items():
        ref = _parse_reference(value)
        if ref is None:
            payload[name] = value
        else:
            idx, fname = ref
            payload[name] = premises[idx].payload[fname]
    confidence = 1.0
    for p in premises:
        confidence *= p.confidence
    key = premises[0].key
    for p in premises[1:]:
        key = key.cover(p.key)
    updated = max(p.hyperdata.updated_at for p in premises)
    if datum_id is None:
        datum_id = f"hyp-{rule.id}-{_short_hash(rule.id, *(p.id for p in premises))}"
    return ActiveDatum(
        id=datum_id,
        kind=rule.conclusion_kind,
        payload=payload,
        key=key,
        metadata=Metadata(source_id=rule.id,
                          observed_at=max(p.metadata.observed_at for p in premises),
                          size_hint=len(payload), schema_tag="inferred"),
        hyperdata=Hyperdata(
            truth=min(p.truth for p in premises),
            confidence=_clamp(confidence, 0.0, 1.0),
            detail=min(p.hyperdata.detail for p in premises),
            exposure=0.0,
            complementary=tuple(p.id for p in premises),
            created_at=updated,
            updated_at=updated,
        ),
    )


def match_gaps(rule: HypothesisRule,
               candidates: list[ActiveDatum] | set[ActiveDatum]) -> tuple[str, ...]:
    """Canonical texts of premises left unmatched by a partial rule match.

    Empty when the rule matched fully or not at all; a non-empty result
    describes the information that would complete the story.
    """
    pool = sorted(candidates, key=lambda d: d.id)
    matched = [any(_pattern_matches(pat, d) for d in pool)
               for pat in rule.premise_patterns]
    if all(matched) or not any(matched):
        return ()
    return tuple(canonical_text(pat)
                 for pat, hit in zip(rule.premise_patterns, matched) if not hit)


def tier_decision(d: ActiveDatum, now: float,
                  policy: TierPolicy = DEFAULT_TIER_POLICY) -> StorageTier:
    """Pick the storage tier a datum should occupy at time ``now``.

    Confidently-false data delete themselves; otherwise placement follows
    age since the last update, with the hot tier additionally requiring a
    minimum confidence.  Pure: the caller applies the transition.
    """
    if d.tier is StorageTier.Deleted:
        raise LifecycleError(f"datum {d.id} is deleted")
    hd = d.hyperdata
    if hd.truth <= policy.false_truth and hd.confidence >= policy.false_confidence:
        return StorageTier.Deleted
    age = now - hd.updated_at
    if hd.confidence >= policy.min_confidence and age < policy.hot_age:
        return StorageTier.Hot
    if age < policy.warm_age:
        return StorageTier.Warm
    if age < policy.cold_age:
        return StorageTier.Cold
    return StorageTier.Archived
