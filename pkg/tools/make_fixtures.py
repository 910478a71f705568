"""Regenerate the bundled data files under src/fairrank/data/.

    python3 tools/make_fixtures.py

Output is deterministic (fixed numpy seed); the committed files are what
the tests read.
"""

import csv
import json
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "fairrank" / "data"
DIM = 24
RNG = np.random.default_rng(20210601)

# words ordered from most to least related to their query
ENGINEER_WORDS = [
    "engineer", "engineering", "machine", "hardhat", "blueprint", "construction",
    "helmet", "tool", "factory", "industry", "computer", "electronics", "worker",
    "equipment", "building", "architecture", "office", "person", "human", "clothing",
    "face", "smile", "text", "poster", "sky", "outdoors", "tree", "plant", "animal",
    "food", "furniture", "art",
]
BIOLOGIST_WORDS = [
    "biologist", "biology", "microscope", "laboratory", "scientist", "science",
    "lab", "coat", "cell", "chemistry", "research", "specimen", "petri", "dish",
    "glasses", "goggles", "plant", "leaf", "animal", "nature", "person", "human",
    "clothing", "face", "smile", "text", "outdoors", "sky",
]


def _orthonormal_to(q):
    r = RNG.normal(size=DIM)
    r -= r.dot(q) * q
    return r / np.linalg.norm(r)


def build_embeddings():
    """Place each word at a chosen cosine from its query's vector."""
    vectors = {}
    q_eng = RNG.normal(size=DIM)
    q_eng /= np.linalg.norm(q_eng)
    q_bio = RNG.normal(size=DIM)
    q_bio -= q_bio.dot(q_eng) * q_eng * 0.8
    q_bio /= np.linalg.norm(q_bio)
    for words, q in ((ENGINEER_WORDS, q_eng), (BIOLOGIST_WORDS, q_bio)):
        n = len(words)
        for i, w in enumerate(words):
            if w in vectors:
                continue
            if i == 0:
                vectors[w] = q
                continue
            cos = 0.9 - 0.85 * i / (n - 1)
            vectors[w] = cos * q + np.sqrt(1 - cos**2) * _orthonormal_to(q)
    # a few generic words unrelated to either query
    for w in ("chief", "executive", "officer", "police", "nurse", "cook"):
        v = RNG.normal(size=DIM)
        vectors[w] = v / np.linalg.norm(v)
    lines = [f"{w} " + " ".join(f"{x:.6f}" for x in v) for w, v in vectors.items()]
    (DATA / "demo_embeddings.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _labels_for_rank(words, rank, n):
    """2-4 labels drawn around a rank-dependent position in ``words``."""
    center = 1 + (len(words) - 2) * (rank - 1) / (n - 1)
    k = int(RNG.integers(2, 5))
    idx = np.clip(np.round(RNG.normal(center, 3.0, size=k)), 1, len(words) - 1).astype(int)
    terms = list(dict.fromkeys(words[i] for i in idx))
    return [{"term": t.capitalize(), "confidence": round(float(RNG.uniform(0.55, 0.99)), 2)}
            for t in terms]


def build_synthetic():
    """100 engineer images, 70 male / 30 female, male-heavy near the top."""
    n = 100
    # probability of female rises with rank; draw exactly 30 females
    weights = np.linspace(0.1, 1.0, n)
    female = set(RNG.choice(n, size=30, replace=False, p=weights / weights.sum()))
    rows = []
    for i in range(n):
        rank = i + 1
        labels = _labels_for_rank(ENGINEER_WORDS, rank, n)
        if rank in (57, 88):
            labels = []
        elif rank == 73:
            labels = [{"term": "Zyxwvut", "confidence": 0.6}]
        rows.append({
            "id": f"eng_{rank:03d}",
            "query": "engineer",
            "original_rank": rank,
            "gender": "female" if i in female else "male",
            "object_labels": labels,
            "source_ref": f"images/engineer/eng_{rank:03d}.jpg",
        })
    with open(DATA / "synthetic_engineer.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def _faces_for(truth):
    """Detector faces that usually, but not always, agree with the crowd label."""
    conf = lambda: round(float(RNG.uniform(90.0, 99.9)), 2)  # noqa: E731
    wrong = RNG.random() < 0.2
    if truth == "male":
        g = "Female" if wrong else "Male"
        return [{"Gender": {"Value": g, "Confidence": conf()}}]
    if truth == "female":
        g = "Male" if wrong else "Female"
        return [{"Gender": {"Value": g, "Confidence": conf()}}]
    if truth == "both":
        if wrong:
            return [{"Gender": {"Value": "Male", "Confidence": conf()}}]
        return [{"Gender": {"Value": "Male", "Confidence": conf()}},
                {"Gender": {"Value": "Female", "Confidence": conf()}}]
    if wrong:
        return [{"Gender": {"Value": "Female", "Confidence": conf()}}]
    # uncertain: nothing, or a face the detector is unsure about
    if RNG.random() < 0.5:
        return []
    return [{"Gender": {"Value": "Male", "Confidence": round(float(RNG.uniform(20, 45)), 2)}}]


def build_biologist():
    """Manifest, stored detector output and crowd labels matching 27/43/11/19."""
    n = 100
    truth = ["male"] * 27 + ["female"] * 43 + ["both"] * 11 + ["uncertain"] * 19
    RNG.shuffle(truth)
    with open(DATA / "biologist_manifest.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "original_rank", "image_ref"])
        for i in range(n):
            w.writerow([f"bio_{i + 1:03d}", i + 1, f"images/biologist/bio_{i + 1:03d}.jpg"])
    with open(DATA / "biologist_overrides.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "gender"])
        for i, g in enumerate(truth):
            w.writerow([f"bio_{i + 1:03d}", g])
    # stored results are in normalized form, as the client writes them after a live call
    with open(DATA / "biologist_annotations.jsonl", "w", encoding="utf-8") as fh:
        for i, g in enumerate(truth):
            labels = _labels_for_rank(BIOLOGIST_WORDS, i + 1, n)
            faces = [{"gender": f["Gender"]["Value"].lower(),
                      "confidence": round(f["Gender"]["Confidence"] / 100.0, 4)}
                     for f in _faces_for(g)]
            obj = {
                "image_ref": f"images/biologist/bio_{i + 1:03d}.jpg",
                "labels": labels,
                "faces": faces,
                "provider": "rekognition",
                "retrieved_at": "2021-06-15T00:00:00+00:00",
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    build_embeddings()
    build_synthetic()
    build_biologist()
    print(f"wrote fixtures to {DATA}")
