"""Pretrained-LM bridge for the BLM toolkit.

Computes averaged-token sentence embeddings into BLME files and emits
fill-mask audit files, talking to the toolkit only through its documented
file formats.
"""

__version__ = "0.1.0"

from .blme import read_blme, write_blme
from .encoders import IdentityStubEncoder, load_encoder
from .export import ExportJob, export_embeddings, read_sentences
from .fillmask import StubMaskedLM, fill_mask_audit, load_masked_lm
