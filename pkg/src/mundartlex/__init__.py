"""Multi-dialect pronunciation dictionary toolkit."""

from .phoneset import (
    BOUNDARY,
    Phone,
    PhoneInventory,
    PhonesetError,
    ReductionRule,
    SampaSeq,
    default_extended,
    default_reduced,
    default_rules,
    format_sampa,
    load_inventory,
    load_rules,
    parse_sampa,
    reduce_sequence,
)
from .lexicon import (
    Dialect,
    DictEntry,
    GswForm,
    Lexicon,
    LexiconError,
    ValidationReport,
    export_lexicon,
    insert_boundaries,
    load_lexicon,
    validate,
)
from .evaluation import (
    EvalError,
    MatchReport,
    RankTable,
    TagRecord,
    edit_distance,
    exact_match_report,
    load_tags,
    rank_accuracy,
    save_tags,
)
from .vocab import Vocab, build_vocabs
from .model import ModelConfig, Transformer
from .training import TrainConfig, train
from .checkpoint import load_checkpoint, save_checkpoint
from .decode import Candidate, DecodeConfig, beam_decode, greedy_decode, predict_topk

__version__ = "0.1.0"
