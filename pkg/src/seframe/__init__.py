"""Semantic frame parsing tailored for software-engineering text, plus the
sampling and evaluation machinery to study how well the frames hold up."""

from .model import (
    Document,
    FrameElement,
    FrameInstance,
    FrameLexicon,
    Sentence,
    Source,
    SourceKind,
    Span,
    Status,
    TailoringCatalog,
    load_bundled_catalog,
    load_bundled_lexicon,
    load_catalog,
    load_lexicon,
)
from .textproc import lemmatize, make_sentence, segment, tokenize
from .parser import (
    ParseResult,
    assign_frame_elements,
    import_external,
    read_interchange,
    tag_frames,
    write_interchange,
)
from .decorator import StructuredView, decorate, structure
from .ingest import SourceConfig, filter_min_length, ingest, strip_quotes
from .sampling import (
    DistributionReport,
    SampleSpec,
    frame_distribution,
    sample_per_frame,
    sample_size,
    top_k,
)
from .evaluation import (
    Campaign,
    CampaignMode,
    CorrectnessReport,
    Judgment,
    Verdict,
    annotation_agreement,
    assign_batches,
    correctness_report,
    gold_check,
    majority_correct,
    verify_assignment,
)

__version__ = "0.1.0"
