"""Walkthrough of the data-element layer.

Every value in the system is wrapped with objective metadata and a set of
subjective, evolving attributes: a truth estimate in [-1, 1], a confidence
in [0, 1], corroborating/refuting links, and a storage tier.  This script
builds a handful of news-style reports and runs every activity a datum can
perform on its own: detect duplicates, fuse with them, absorb evidence,
aggregate, infer, and decide where to store itself.
"""

from adatm import (
    ConceptPath,
    Evidence,
    EvidencePolarity,
    HypothesisRule,
    Metadata,
    NearnessKey,
    NotionKind,
    PlanarBox,
    TimeInterval,
    aggregate,
    apply_evidence,
    encapsulate,
    infer,
    is_duplicate,
    resolve,
    tier_decision,
)

KEY = NearnessKey(
    time=TimeInterval(0.0, 3600.0),
    space=PlanarBox(0.0, 0.0, 50.0, 50.0),
    concept=ConceptPath.parse("news/politics/election"),
)


def show(label, d):
    hd = d.hyperdata
    print(f"  {label}: id={d.id} kind={d.kind.value} truth={hd.truth:+.3f} "
          f"confidence={hd.confidence:.3f} tier={hd.tier.value}")
    print(f"      payload: {d.text}")


# --- 1. encapsulation -------------------------------------------------------
print("1. Two networks report the same election result:")
cnn = encapsulate(
    {"race": "governor", "winner": "smith"},
    NotionKind.Event,
    Metadata(source_id="cnn", observed_at=100.0),
    source_confidence=0.6,
    key=KEY,
    datum_id="cnn-0100",
)
msnbc = encapsulate(
    {"race": "governor", "winner": "smith"},
    NotionKind.Event,
    Metadata(source_id="msnbc", observed_at=130.0),
    source_confidence=0.5,
    key=KEY,
    datum_id="msnbc-0130",
)
show("cnn", cnn)
show("msnbc", msnbc)

# --- 2. duplicate resolution -------------------------------------------------
print("\n2. They are duplicates, so they fuse into one datum")
print("   (confidence combines by noisy-OR: 1 - 0.4 * 0.5 = 0.8):")
assert is_duplicate(cnn, msnbc)
merged = resolve(cnn, msnbc)
show("merged", merged)
print(f"      absorbed: {merged.hyperdata.complementary}")

# --- 3. evidence -------------------------------------------------------------
print("\n3. A county recount supports the result, then a lawsuit disputes it:")
merged = apply_evidence(
    merged, Evidence(EvidencePolarity.Complementary, 0.5, "recount-42"), at=500.0)
show("after support", merged)
merged = apply_evidence(
    merged, Evidence(EvidencePolarity.Refuting, 0.3, "lawsuit-7"), at=900.0)
show("after dispute", merged)
print("   Refutation lowers truth but raises confidence: the datum is more")
print("   certain about a less clear-cut truth value.")

# --- 4. aggregation -----------------------------------------------------------
print("\n4. Counting delay reports by date:")
delays = [
    encapsulate({"delayed": f, "date": d}, NotionKind.Event,
                Metadata(source_id="ops", observed_at=t), 0.9, KEY,
                datum_id=f"delay-{i}")
    for i, (f, d, t) in enumerate([
        ("ua90", "16-Oct-2002", 10.0),
        ("dl12", "16-Oct-2002", 20.0),
        ("aa77", "17-Oct-2002", 30.0),
    ])
]
counts = aggregate(delays, "date")
show("aggregate", counts)

# --- 5. inference ---------------------------------------------------------------
print("\n5. Two observations combine into an explanatory hypothesis:")
rule = HypothesisRule(
    id="colocate",
    premise_patterns=(
        {"subject": "Air Force One", "event": "arrived", "city": "Paris"},
        {"person": "The US President", "aboard": "Air Force One"},
    ),
    conclusion_template={"person": "{1.person}", "status": "in", "city": "{0.city}"},
)
arrival = encapsulate(
    {"subject": "Air Force One", "event": "arrived", "city": "Paris"},
    NotionKind.Event, Metadata(source_id="reuters", observed_at=50.0), 0.9, KEY,
    datum_id="reuters-0050")
aboard = encapsulate(
    {"person": "The US President", "aboard": "Air Force One"},
    NotionKind.Assumption, Metadata(source_id="pool", observed_at=40.0), 0.8, KEY,
    datum_id="pool-0040")
hypothesis = infer(rule, [arrival, aboard])
show("hypothesis", hypothesis)
print("   Confidence is the product of the premises: 0.9 * 0.8 = 0.72.")

# --- 6. storage tiers -------------------------------------------------------------
print("\n6. The same datum picks different tiers as it ages:")
for now, label in [(1000.0, "fresh"), (8000.0, "hours old"),
                   (50_000.0, "half a day"), (200_000.0, "days old")]:
    tier = tier_decision(merged, now=now)
    print(f"  at t={now:>9.0f}s ({label:>11}): {tier.value}")
