"""Dataset construction: ingestion, synthesis, normalization, sampling."""
from .pipeline import (
    MAX_LINES,
    NORMALIZER_VERSION,
    Dataset,
    IngestResult,
    NotEnoughSamples,
    SamplePair,
    SkipRecord,
    Source,
    UnparseableFile,
    content_id,
    corpus_stats,
    extract_pairs,
    ingest_directory,
    manifest_path,
    normalize,
    sample,
    strip_metadata,
    synth_blocks,
    synthetic_dataset,
)
