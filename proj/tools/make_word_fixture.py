#!/usr/bin/env python3
"""Regenerates data/word_vectors_50d.txt.

The fixture is a small synthetic stand-in for a GloVe table: words are
grouped into semantic clusters and each vector is its cluster centre plus
seeded noise, so related labels ("man"/"boy") have high cosine similarity
and unrelated ones do not. Output is deterministic for a given seed.
"""
import argparse

import numpy as np

CLUSTERS = {
    "person": ["man", "woman", "boy", "girl", "person", "child", "officer",
               "speaker", "reporter", "crowd", "president", "women"],
    "animal": ["dog", "cat", "horse", "bird"],
    "vehicle": ["car", "bus", "bike", "truck"],
    "furniture": ["table", "chair", "podium", "desk"],
    "object": ["sign", "cup", "phone", "camera", "microphone", "flag",
               "banner", "hat", "shirt", "screen", "book", "bag"],
    "place": ["building", "street", "road", "tree", "stage", "room", "city"],
    "color": ["red", "blue", "green", "white", "black", "bright"],
    "size": ["tall", "small", "large", "old", "young", "wooden"],
    "spatial": ["on", "near", "behind", "beside", "under", "in"],
    "action": ["holding", "wearing", "riding", "speaking", "standing",
               "sitting", "watching"],
    "media": ["fox", "news", "tpm", "tv", "debate", "speech", "rally",
              "video", "photo", "report"],
    "misc": ["stand", "up", "for", "abortion", "ronald", "reagan"],
}


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/word_vectors_50d.txt")
    parser.add_argument("--dim", type=int, default=50)
    parser.add_argument("--seed", type=int, default=20240917)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    lines = []
    for cluster in CLUSTERS.values():
        centre = rng.normal(size=args.dim)
        centre /= np.linalg.norm(centre)
        for word in cluster:
            noise = rng.normal(size=args.dim)
            noise /= np.linalg.norm(noise)
            vec = 0.85 * centre + 0.5 * noise
            lines.append(word + " " + " ".join(f"{x:.6f}" for x in vec))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
