"""Language-model tooling for HPC programming-language processing."""

__version__ = "0.1.0"

from .datasets import Dataset, Schema, SplitSpec  # noqa: E402
from .graph import ProgramGraph, build_program_graph  # noqa: E402
from .models import ModelHandle, SamplingConfig, from_pretrained  # noqa: E402
from .pipelines import PipelineSpec, Task  # noqa: E402
from .tokenizer import CodeSnippet, Language, Vocabulary, tokenize_ast, tokenize_lexical  # noqa: E402

__all__ = [
    "CodeSnippet", "Dataset", "Language", "ModelHandle", "PipelineSpec", "ProgramGraph",
    "SamplingConfig", "Schema", "SplitSpec", "Task", "Vocabulary", "build_program_graph",
    "from_pretrained", "tokenize_ast", "tokenize_lexical",
]
