"""Bundled demo data: word vectors, a synthetic skewed corpus, a biologist fixture."""

from importlib import resources

from .corpus import GroupPolicy, parse_corpus
from .detector import AnnotationStore, build_corpus, load_manifest, load_overrides
from .embeddings import load_embeddings


def fixture_path(name):
    """Filesystem path of a bundled data file."""
    return str(resources.files("fairrank").joinpath("data", name))


def load_demo_embeddings():
    return load_embeddings(fixture_path("demo_embeddings.txt"))


def load_synthetic_corpus(policy=GroupPolicy.ALL_FOUR):
    """100 "engineer" images, 70% male, with men over-represented near the top."""
    return parse_corpus(fixture_path("synthetic_engineer.jsonl"), policy)


def load_biologist_corpus(policy=GroupPolicy.ALL_FOUR, use_overrides=True):
    """Ingest the biologist manifest against its stored detector output.

    With ``use_overrides`` the crowd labels supply the genders
    (27 male / 43 female / 11 both / 19 uncertain).
    """
    manifest = load_manifest(fixture_path("biologist_manifest.csv"))
    store = AnnotationStore.load(fixture_path("biologist_annotations.jsonl"))
    overrides = load_overrides(fixture_path("biologist_overrides.csv")) if use_overrides else None
    return build_corpus(manifest, store, "biologist", policy, overrides=overrides)
