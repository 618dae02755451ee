"""Blackbird Language Matrices toolkit.

Generates matrix puzzles over linguistic paradigms from declarative
templates and seed lexicons, trains ranking solvers (dense baseline,
sentence VAE, two-level VAE) on pluggable sentence embeddings, and probes
what the learned latents encode.
"""

__version__ = "0.1.0"

from .core import (
    ANSWER_SET_SIZES,
    BlmError,
    BlmInstance,
    BlmTemplate,
    ChunkSpec,
    Sentence,
    SentenceTemplate,
    TASKS,
    TASK_LABELS,
    agreement_patterns,
    chunk,
    pattern_of,
)
from .templates import builtin_template, supported_languages, supported_pairs, template_from_file
from .lexicon import Lexicon, augment, builtin_lexicon, builtin_table_provider, load_lexicon, save_lexicon
from .generate import BankSentence, build_sentence_bank, generate_dataset, instantiate
from .oracle import RuleReport, validate_instance
from .dataio import SplitSpec, read_dataset, split, stats, write_dataset
from .embedding import (
    BlmeProvider,
    StructuralEmbedder,
    embed_dataset,
    read_blme,
    structural_embed,
    to_flat,
    to_grid,
    write_blme,
)
from .nn import TrainConfig, kl_to_standard_normal, margin_loss, max_margin, score
from .ffnn import FfnnConfig, ffnn_forward, predict, train_ffnn
from .vae import (
    SentenceVae,
    TwoLevelVae,
    VaeConfig,
    make_triples,
    sample_latent,
    train_sentence_vae,
    train_two_level,
    two_level_forward,
)
from .evaluate import error_distribution, f1_score, latent_traversal, project_latents
