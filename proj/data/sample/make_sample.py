#!/usr/bin/env python3
"""Regenerates the bundled synthetic sample files in this directory.

    python3 data/sample/make_sample.py

Outputs tsd_sample.csv, sentences_sample.csv and interchange_sample.jsonl.
Output is deterministic for a given --seed.
"""

import argparse
import csv
import hashlib
import json
import random
import re
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (toxic phrase, whether a lexicon is likely to know it)
TOXIC = [
    "stupid", "idiot", "moron", "pathetic", "disgusting", "ugly", "dumb",
    "liars", "fool", "loser", "clown", "bigots", "scum", "trash",
    "stupid idiot", "complete moron", "pathetic loser", "sh*t", "f**king idiot",
    "id!ot", "st00pid", "crétin", "imbécile",
]
SUBJECTS = [
    "this guy", "the mayor", "your friend", "these people", "the author",
    "the council", "every voter here", "the company", "they", "the editor",
]
TOXIC_TEMPLATES = [
    "{S} is a {T} and everyone knows it.",
    "What a {T}. Unbelievable.",
    "Only a {T} would write something like this!",
    "{S} are {T}, plain and simple.",
    "Stop listening to {S}, what a {T} 🙄",
    "You {T}, read the article before commenting.",
    "except for one thing: {S} are {T}",
    "Honestly? {T}. Nothing more to say…",
    "{S} acted like a {T} — again.",
    "Naïve and {T}, that's the whole plan.",
]
CLEAN_TEMPLATES = [
    "I think {S} made a fair point about the budget.",
    "Thanks for sharing, this was a good read.",
    "The vote is scheduled for next Tuesday at 7pm.",
    "{S} should publish the full report before deciding.",
    "Interesting article, though I'd like more sources.",
    "Café prices went up again this year 😊",
    "Agreed. The data supports {S} on this one.",
    "Does anyone know where the meeting is held?",
]
NEUTRAL_WORDS = (
    "the a and of to in is it that for on with as was at by this be from or "
    "people city plan vote report budget street school water tax road"
).split()
WORD_RE = re.compile(r"[^\W_]+(?:['\-_$*@#!]+[^\W_]+)*|[^\w\s]", re.UNICODE)


def toxic_post(rng):
    tmpl = rng.choice(TOXIC_TEMPLATES)
    subj = rng.choice(SUBJECTS)
    phrase = rng.choice(TOXIC)
    before, after = tmpl.split("{T}")
    before = before.replace("{S}", subj)
    after = after.replace("{S}", subj)
    if before and before[0].islower():
        before = before[0].upper() + before[1:]
    text = before + phrase + after
    start = len(before)
    return text, list(range(start, start + len(phrase)))


def clean_post(rng):
    text = rng.choice(CLEAN_TEMPLATES).replace("{S}", rng.choice(SUBJECTS))
    return text[0].upper() + text[1:]


def make_tsd(rng, n):
    rows = []
    for i in range(n):
        if i % 10 < 8:
            text, spans = toxic_post(rng)
            # annotators sometimes miss or skip a span
            if rng.random() < 0.05:
                spans = []
        else:
            text, spans = clean_post(rng), []
        rows.append({"id": f"tsd-{i:04d}", "spans": str(spans), "text": text})
    return rows


def make_sentences(rng, n):
    rows = []
    for i in range(n):
        if rng.random() < 0.4:
            text, _ = toxic_post(rng)
            score = round(rng.uniform(0.55, 1.0), 4)
        else:
            text = clean_post(rng)
            score = round(rng.uniform(0.0, 0.45), 4)
        rows.append({"id": f"s-{i:04d}", "comment_text": text, "target": score})
    # one exact boundary case: 0.5 is not hateful
    rows.append({"id": "s-boundary", "comment_text": "Right at the line.", "target": 0.5})
    return rows


def make_interchange(rng, tsd, emb_dim):
    digest = hashlib.sha256(b"synthetic-encoder").hexdigest()[:16]
    header = {"format": "toxspan-interchange", "version": 1, "checkpoint_digest": digest,
              "emb_dim": emb_dim, "truncated": 0}
    records = []
    for row in tsd:
        text = row["text"]
        gold = set(json.loads(row["spans"]))
        words = []
        for m in WORD_RE.finditer(text):
            toxic = any(i in gold for i in range(m.start(), m.end()))
            alpha = any(c.isalnum() for c in m.group())
            attn = rng.uniform(0.4, 1.0) if toxic else rng.uniform(0.0, 0.3 if alpha else 0.05)
            word = {"start": m.start(), "end": m.end()}
            if len(m.group()) > 6 and rng.random() < 0.5:
                # long words arrive as subword pieces
                k = 2 + (len(m.group()) > 9)
                word["subword_attn"] = [round(max(0.0, attn + rng.uniform(-0.05, 0.05)), 6) for _ in range(k)]
            else:
                word["attn"] = round(attn, 6)
            if emb_dim:
                signal = 1.0 if toxic else -1.0
                word["emb"] = [round(signal * (0.5 if d == 0 else 0.0) + rng.gauss(0.0, 0.3), 6)
                               for d in range(emb_dim)]
            words.append(word)
        total = sum(w.get("attn", 0.0) or 0.0 for w in words)
        sent_prob = rng.uniform(0.6, 0.99) if gold else rng.uniform(0.01, 0.45)
        if total == 0:
            sent_prob = min(sent_prob, 0.4)
        records.append({"id": row["id"], "text": text, "sent_prob": round(sent_prob, 6), "words": words})
    return header, records


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=20210415)
    ap.add_argument("--posts", type=int, default=200)
    ap.add_argument("--sentences", type=int, default=120)
    ap.add_argument("--emb-dim", type=int, default=8)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    tsd = make_tsd(rng, args.posts)
    with open(HERE / "tsd_sample.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=["id", "spans", "text"])
        w.writeheader()
        w.writerows(tsd)

    sentences = make_sentences(rng, args.sentences)
    with open(HERE / "sentences_sample.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=["id", "comment_text", "target"])
        w.writeheader()
        w.writerows(sentences)

    header, records = make_interchange(rng, tsd, args.emb_dim)
    with open(HERE / "interchange_sample.jsonl", "w", encoding="utf-8") as f:
        f.write(json.dumps(header, ensure_ascii=False) + "\n")
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
