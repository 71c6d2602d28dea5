#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Generates the bundled toy corpus under data/toy/.

50 synthetic episodes across five topics with word-level timestamps,
five queries, and segment-level qrels for 120 s windows with a 60 s stride.
Output is deterministic; rerun only when the corpus needs to change.
"""
import json
import random
from pathlib import Path

TOPICS = {
    "coffee": ["coffee", "espresso", "roast", "beans", "barista", "brew", "latte", "grinder", "arabica", "crema"],
    "marathon": ["marathon", "running", "pace", "training", "mileage", "sneakers", "race", "stamina", "hydration", "finish"],
    "astronomy": ["telescope", "galaxy", "planet", "orbit", "nebula", "comet", "stars", "astronomy", "eclipse", "moon"],
    "startup": ["startup", "founder", "funding", "investors", "product", "revenue", "pitch", "equity", "growth", "market"],
    "gardening": ["garden", "tomatoes", "compost", "soil", "seeds", "pruning", "harvest", "mulch", "watering", "roses"],
}
FILLER = ("the a and so like you know we i it is was that this really just think about what have there "
          "people going get kind thing things right yeah time well actually lot more today talk little "
          "gonna back way also something story week guest episode show listen friend sort pretty").split()

QUERIES = [
    ("1", "coffee brewing", "How do baristas brew espresso and what grinder and beans produce good crema?", "coffee"),
    ("2", "marathon training", "Advice on marathon training plans, pace and hydration for a first race.", "marathon"),
    ("3", "telescope astronomy", "Amateur astronomy with a telescope: planets, galaxies and eclipses.", "astronomy"),
    ("4", "startup funding", "Founders discussing startup funding from investors and pitching for equity.", "startup"),
    ("5", "compost garden", "Gardening tips about compost, soil and growing tomatoes.", "gardening"),
]

WINDOW, STRIDE, SECONDS_PER_WORD = 120, 60, 0.4


def episode(rng, idx, topic):
    words = TOPICS[topic]
    other = rng.choice([t for t in TOPICS if t != topic])
    n = rng.randint(400, 900)
    # Topic density varies along the episode so some windows are on topic and others are not.
    hot_start = rng.randint(0, n // 2)
    hot_end = hot_start + rng.randint(n // 5, n // 2)
    transcript, t = [], 0.0
    for i in range(n):
        r = rng.random()
        if hot_start <= i < hot_end and r < 0.25:
            w = rng.choice(words)
        elif r < 0.04:
            w = rng.choice(TOPICS[other])
        else:
            w = rng.choice(FILLER)
        dur = round(rng.uniform(0.25, 0.45), 2)
        transcript.append({"text": w, "start_s": round(t, 2), "end_s": round(t + dur, 2)})
        t += SECONDS_PER_WORD
    return {
        "episode_id": f"ep{idx:03d}",
        "show_name": f"{topic.title()} Hour",
        "title": f"{topic.title()} talk {idx}",
        "description": f"An episode about {rng.choice(words)} and {rng.choice(words)}.",
        "transcript": transcript,
    }


def segments(ep):
    words = ep["transcript"]
    duration = max(w["end_s"] for w in words)
    start = 0
    while start < duration:
        yield start, [w["text"] for w in words if start <= w["start_s"] < start + WINDOW]
        start += STRIDE


def main():
    rng = random.Random(2020)
    out = Path(__file__).resolve().parent.parent / "data" / "toy"
    out.mkdir(parents=True, exist_ok=True)
    topics = list(TOPICS)
    episodes = [episode(rng, i, topics[i % len(topics)]) for i in range(50)]
    with open(out / "corpus.jsonl", "w") as f:
        for ep in episodes:
            f.write(json.dumps(ep) + "\n")
    with open(out / "queries.jsonl", "w") as f:
        for qid, q, d, _ in QUERIES:
            f.write(json.dumps({"qid": qid, "query": q, "description": d}) + "\n")
    with open(out / "qrels.txt", "w") as f:
        for qid, _, _, topic in QUERIES:
            vocab = set(TOPICS[topic])
            for ep in episodes:
                for start, seg in segments(ep):
                    hits = sum(w in vocab for w in seg)
                    on_topic = ep["show_name"].lower().startswith(topic)
                    if not on_topic and hits == 0:
                        continue
                    rel = 2 if hits >= 25 else 1 if hits >= 8 else 0
                    f.write(f"{qid} 0 {ep['episode_id']}_{start} {rel}\n")


if __name__ == "__main__":
    main()
