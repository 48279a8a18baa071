"""embed-export: offline producer of airtran's input files.

Encodes dataset queries and documents with candidate pre-trained language
models (mean pooling over non-padding last-layer states) and writes the
core's binary matrix and JSON-lines manifest formats.
"""

from .errors import (
    BatchMemoryError,
    ExportError,
    InvalidJobError,
    ModelLoadError,
    PairSchemaError,
)
from .exporter import (
    ExportJob,
    encode_texts,
    export_embeddings,
    load_encoder,
    mean_pool,
)
from .manifest import export_manifest
from .matfile import matrix_file_bytes, write_matrix_file

__version__ = "0.1.0"
