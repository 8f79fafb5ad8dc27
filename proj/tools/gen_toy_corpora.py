#!/usr/bin/env python3
"""Writes the bundled synthetic treebanks under data/toy/.

Trees come from a small hand-written grammar in which a PP after an object
noun phrase can attach to the verb phrase or to the noun phrase, and several
words can carry more than one part of speech. Output is one bracketed tree
per line. Rerunning with the same seed reproduces the files byte for byte.
"""

import argparse
import pathlib
import random
import re

LEXICON = {
    "DT": ["the", "a", "this", "every"],
    "NN": ["dog", "man", "telescope", "park", "saw", "walk", "book", "light", "hill", "star"],
    "NNS": ["dogs", "books", "parks", "stars", "walks"],
    "VBD": ["saw", "walked", "liked", "watched", "book", "light", "found"],
    "IN": ["with", "in", "near", "on"],
    "JJ": ["old", "big", "light", "red"],
    "PRP": ["he", "she", "they"],
    "NNP": ["john", "mary"],
}

WORD = re.compile(r"\([A-Z]+ [^()\s]+\)")

HEAD_RULES = """\
# parent: direction labels tried in order
S: right VP
VP: left VBD VP
NP: right NN NNS NNP PRP NP
PP: left IN
"""


def leaf(rng, tag):
    return f"({tag} {rng.choice(LEXICON[tag])})"


def noun_phrase(rng, depth, allow_pp=True):
    r = rng.random()
    if allow_pp and depth < 2 and r < 0.12:
        return f"(NP {noun_phrase(rng, depth + 1, False)} {prep_phrase(rng, depth + 1)})"
    r = rng.random()
    if r < 0.45:
        return f"(NP {leaf(rng, 'DT')} {leaf(rng, 'NN')})"
    if r < 0.6:
        return f"(NP {leaf(rng, 'DT')} {leaf(rng, 'JJ')} {leaf(rng, 'NN')})"
    if r < 0.75:
        return f"(NP {leaf(rng, 'PRP')})"
    if r < 0.87:
        return f"(NP {leaf(rng, 'NNP')})"
    return f"(NP {leaf(rng, 'DT')} {leaf(rng, 'NNS')})"


def prep_phrase(rng, depth):
    return f"(PP {leaf(rng, 'IN')} {noun_phrase(rng, depth + 1, depth < 1)})"


def verb_phrase(rng):
    r = rng.random()
    verb = leaf(rng, "VBD")
    if r < 0.3:
        return f"(VP {verb} {noun_phrase(rng, 0)})"
    if r < 0.7:
        obj, pp = noun_phrase(rng, 1, False), prep_phrase(rng, 0)
        if rng.random() < 0.5:
            return f"(VP {verb} {obj} {pp})"
        return f"(VP {verb} (NP {obj} {pp}))"
    if r < 0.78:
        return f"(VP {verb} {noun_phrase(rng, 1, False)} {prep_phrase(rng, 1)} {prep_phrase(rng, 1)})"
    if r < 0.86:
        return f"(VP {verb})"
    return f"(VP {verb} {prep_phrase(rng, 0)})"


def sentence(rng, max_words):
    while True:
        t = f"(S {noun_phrase(rng, 1)} {verb_phrase(rng)})"
        if len(WORD.findall(t)) <= max_words:
            return t


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20261017)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "data" / "toy")
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--heldout", type=int, default=50)
    ap.add_argument("--test", type=int, default=100)
    ap.add_argument("--max-words", type=int, default=12)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, n in (("train", args.train), ("heldout", args.heldout), ("test", args.test)):
        trees = [sentence(rng, args.max_words) for _ in range(n)]
        (args.out / f"{name}.mrg").write_text("".join(t + "\n" for t in trees))
    (args.out / "single.mrg").write_text("(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN man))))\n")
    (args.out / "headrules.txt").write_text(HEAD_RULES)


if __name__ == "__main__":
    main()
