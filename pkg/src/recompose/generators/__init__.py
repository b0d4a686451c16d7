"""Candidate generators and the operations routed through them."""
from .base import (
    Generator, GeneratorRequest, GeneratorUnavailable, HoleQuery, RequestKind,
)
from .conditions import ConditionNotFound, learn_condition
from .enumerative import (
    EnumerativeGenerator, enum_backprop, enum_conditions, enum_generate,
    harvest_constants,
)
from .inverse import (
    BACKPROP_SAMPLES, BACKPROP_TEMPERATURE, BackpropFailed, BackpropQuery,
    HoleAssignment, backprop, verify_backprop,
)
from .llm import LlmClient, LlmConfig, LlmGenerator
from .mock import MockTranscriptGenerator

__all__ = [
    "Generator", "GeneratorRequest", "GeneratorUnavailable", "HoleQuery",
    "RequestKind",
    "EnumerativeGenerator", "enum_generate", "enum_conditions",
    "enum_backprop", "harvest_constants",
    "BackpropQuery", "HoleAssignment", "BackpropFailed", "backprop",
    "verify_backprop", "BACKPROP_SAMPLES", "BACKPROP_TEMPERATURE",
    "ConditionNotFound", "learn_condition",
    "LlmConfig", "LlmClient", "LlmGenerator",
    "MockTranscriptGenerator",
]
