"""Causal knowledge-graph generation with chat LLMs, and its evaluation."""

from .builder import GenerationParams, GraphBuilder, expand_in, expand_out, explore, refine_edges
from .errors import BackendError, ConfigError, GraphError, MalformedResponse, ValidationError
from .graph import ConceptGraph, deserialize, format_edge_list, serialize
from .groundtruth import EvalParams, EvalReport, GroundTruthGraph, NodeMapping, evaluate, load_ground_truth, map_nodes
from .llm import Gateway, ResponseCache, SamplingParams, ScriptedBackend, SyntheticBackend
from .metrics import count_simple_cycles, density, reciprocity, summarize
from .reviews import aggregate, load_reviews

__version__ = "0.1.0"
