#!/usr/bin/env python3
"""Adds image embeddings to a frames.jsonl file, producing the embeddings input of adx3.

usage: embed_frames.py FRAMES_JSONL EMBEDDINGS_JSONL [--model clip-ViT-B-32]
"""
import argparse
import json
import os

from PIL import Image
from sentence_transformers import SentenceTransformer


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("frames")
    parser.add_argument("output")
    parser.add_argument("--model", default="clip-ViT-B-32")
    parser.add_argument("--batch-size", type=int, default=32)
    args = parser.parse_args()

    base = os.path.dirname(os.path.abspath(args.frames))
    with open(args.frames) as f:
        records = [json.loads(line) for line in f if line.strip()]
    model = SentenceTransformer(args.model)
    images = [Image.open(os.path.join(base, r["image"])).convert("RGB") for r in records]
    vectors = model.encode(images, batch_size=args.batch_size, show_progress_bar=True)
    with open(args.output, "w") as out:
        for r, v in zip(records, vectors):
            out.write(json.dumps({**r, "vector": [round(float(x), 6) for x in v]}) + "\n")


if __name__ == "__main__":
    main()
