"""Turn pipeline: classify -> fill slots -> merge memory -> decide.

The remote completion path and the deterministic fallback produce the same
shapes; every remote failure degrades to the fallback and flags the turn
instead of breaking the conversation.
"""

from __future__ import annotations

import re

from ..errors import ClientTimeout, MalformedCompletion
from .client import CompletionClient
from .fallback import (
    CITY_TO_AIRPORT,
    classify_intent_fallback,
    fill_slots_fallback,
)
from .types import (
    INTENTS,
    UNKNOWN,
    AgentDecision,
    AgentMemory,
    SlotSet,
    merge_slots,
)

FOLLOW_UP_MARKET = (
    "Happy to help! Which market is this for? Please tell me the origin and "
    "destination of the route, for example 'DTW to JFK'."
)
CANNED_DIALOG = (
    "I'm PresAIse, your pricing assistant. I can show the current pricing "
    "policy, optimize a new one, evaluate revenue or conversion KPIs, and "
    "explore what-if price bounds. What would you like to do?"
)
TOOL_FAILURE_TEMPLATE = (
    "I'm sorry, I couldn't complete that request ({error}). "
    "Could you adjust it and try again?"
)


def _parse_intent_completion(text: str) -> str:
    mo = re.search(r"function_call\s*:\s*([A-Za-z_]+)", text)
    token = mo.group(1) if mo else text.strip().split("\n")[0].strip()
    token = token.strip().strip('"').strip("'").upper()
    for name in INTENTS:
        if token == name or name in token:
            return name
    return UNKNOWN


def _code_or_none(token: str) -> str | None:
    token = token.strip()
    if token.lower() == UNKNOWN.lower() or not token:
        return None
    if len(token) == 3 and token.isalpha():
        return token.upper()
    return CITY_TO_AIRPORT.get(token.lower())


def _number_or_none(token: str) -> float | None:
    token = token.strip().lstrip("$")
    if token.lower() == UNKNOWN.lower() or not token:
        return None
    try:
        return float(token.replace(",", ""))
    except ValueError:
        return None


def _parse_slots_completion(text: str) -> SlotSet:
    """Parse the line-oriented key: value grammar; bad fields become
    Unknown, never guesses."""
    fields: dict[str, str] = {}
    parsed_any = False
    for line in text.splitlines():
        mo = re.match(r"\s*([A-Za-z_\-]+)\s*:\s*(.+?)\s*$", line)
        if not mo:
            continue
        key = mo.group(1).strip().lower().replace("-", "_")
        fields[key] = mo.group(2)
        parsed_any = True
    if not parsed_any:
        raise MalformedCompletion(f"no key: value lines in {text!r}")

    origin = destination = None
    if "origin_destination" in fields:
        parts = fields["origin_destination"].split("-", 1)
        origin = _code_or_none(parts[0])
        destination = _code_or_none(parts[1]) if len(parts) > 1 else None
    price_min = price_max = None
    if "price_bound" in fields:
        parts = fields["price_bound"].split("-", 1)
        price_min = _number_or_none(parts[0])
        price_max = _number_or_none(parts[1]) if len(parts) > 1 else None
        if (price_min is not None and price_max is not None
                and price_min > price_max):
            price_min, price_max = price_max, price_min
    cardinality = None
    if "cardinality" in fields:
        num = _number_or_none(fields["cardinality"])
        cardinality = int(num) if num and num >= 1 else None
    return SlotSet(origin=origin, destination=destination,
                   price_min=price_min, price_max=price_max,
                   cardinality=cardinality)


def classify_intent(utterance: str, client: CompletionClient | None = None,
                    diag: dict | None = None) -> str:
    """Map an utterance to one tool name or Unknown."""
    if not utterance.strip():
        raise ValueError("utterance must be nonempty")
    if client is not None:
        try:
            return _parse_intent_completion(
                client.complete("intent", f"Command: {utterance}"))
        except (ClientTimeout, MalformedCompletion):
            if diag is not None:
                diag["degraded"] = True
    return classify_intent_fallback(utterance)


def fill_slots(utterance: str, intent: str,
               client: CompletionClient | None = None,
               diag: dict | None = None) -> SlotSet:
    """Extract slot values; Unknown skips slot filling entirely."""
    if intent == UNKNOWN:
        raise ValueError("slot filling requires a known intent")
    if client is not None:
        try:
            return _parse_slots_completion(
                client.complete("slots", f"Command: {utterance}"))
        except (ClientTimeout, MalformedCompletion):
            if diag is not None:
                diag["degraded"] = True
    return fill_slots_fallback(utterance, intent)


def merge_memory(memory: AgentMemory, intent: str,
                 slots: SlotSet) -> AgentMemory:
    """Known incoming values overwrite, Unknown preserves; the stored tool
    changes only when the turn carries a real intent."""
    return AgentMemory(
        function_call=intent if intent != UNKNOWN else memory.function_call,
        slots=merge_slots(memory.slots, slots),
        updated_at=memory.updated_at + 1,
    )


def decide(memory: AgentMemory, intent: str, slots: SlotSet,
           client: CompletionClient | None = None) -> AgentDecision:
    """Pick the dispatch outcome for an already-merged turn."""
    if intent == UNKNOWN:
        text = CANNED_DIALOG
        if client is not None:
            try:
                text = client.complete("dialog", "").strip() or CANNED_DIALOG
            except (ClientTimeout, MalformedCompletion):
                pass
        return AgentDecision(kind="dialog", text=text)
    if memory.slots.origin is None or memory.slots.destination is None:
        return AgentDecision(kind="ask_follow_up",
                             missing=("origin_destination",),
                             question=FOLLOW_UP_MARKET)
    return AgentDecision(kind="execute", tool=intent, resolved=memory.slots)


def run_turn(memory: AgentMemory, utterance: str,
             client: CompletionClient | None = None,
             ) -> tuple[AgentDecision, AgentMemory, dict]:
    """One full user turn; exactly one memory merge, dispatch reads only.

    A turn that parses to Unknown but supplies slot values continues the
    pending tool from memory, which is how a bare market answer after a
    follow-up question executes the original request.
    """
    diag: dict = {"degraded": False}
    intent = classify_intent(utterance, client, diag)
    slots = SlotSet()
    if intent != UNKNOWN:
        slots = fill_slots(utterance, intent, client, diag)
    elif memory.function_call != UNKNOWN:
        tentative = fill_slots(utterance, memory.function_call, client, diag)
        if not tentative.is_empty():
            intent = memory.function_call
            slots = tentative
    new_memory = merge_memory(memory, intent, slots)
    decision = decide(new_memory, intent, slots, client)
    if diag["degraded"]:
        decision = AgentDecision(
            kind=decision.kind, tool=decision.tool, resolved=decision.resolved,
            missing=decision.missing, question=decision.question,
            text=decision.text, degraded=True)
    diag["intent"] = intent
    return decision, new_memory, diag
