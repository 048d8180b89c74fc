"""Conversational layer: utterance -> tool call.

Intent classification picks one of the five pricing tools (or Unknown),
slot filling extracts market, price-bound and rule-count arguments, and a
per-session memory lets later turns omit what earlier turns established.
Both NLP steps run against a pluggable text-completion endpoint when one is
configured and fall back to deterministic parsers otherwise, so the whole
stack works offline.
"""

from .types import (
    INTENTS,
    UNKNOWN,
    AgentDecision,
    AgentMemory,
    SlotSet,
)
from .fallback import classify_intent_fallback, fill_slots_fallback
from .client import CompletionClient, load_prompt
from .agent import (
    classify_intent,
    decide,
    fill_slots,
    merge_memory,
    run_turn,
)

__all__ = [
    "INTENTS",
    "UNKNOWN",
    "AgentDecision",
    "AgentMemory",
    "SlotSet",
    "classify_intent_fallback",
    "fill_slots_fallback",
    "CompletionClient",
    "load_prompt",
    "classify_intent",
    "fill_slots",
    "merge_memory",
    "decide",
    "run_turn",
]
