"""Deterministic offline intent classifier and slot parser.

Ordered keyword rules for intents and regular expressions for slots; no
model in the loop, so the whole suite can run without a completion
endpoint. City names map to airport codes through a bundled lookup.
"""

from __future__ import annotations

import re

from .types import (
    CF_PRICE_BOUND,
    KPI_CONVERSION,
    KPI_REVENUE,
    RUN_OPT,
    SHOW_BASE_POLICY,
    UNKNOWN,
    SlotSet,
)

CITY_TO_AIRPORT = {
    "detroit": "DTW",
    "los angeles": "LAX",
    "new york": "JFK",
    "new york city": "JFK",
    "chicago": "ORD",
    "boston": "BOS",
    "miami": "MIA",
    "seattle": "SEA",
    "san francisco": "SFO",
    "atlanta": "ATL",
    "denver": "DEN",
    "dallas": "DFW",
    "houston": "IAH",
    "phoenix": "PHX",
    "las vegas": "LAS",
    "orlando": "MCO",
    "philadelphia": "PHL",
    "washington": "DCA",
    "minneapolis": "MSP",
    "newark": "EWR",
    "san diego": "SAN",
    "austin": "AUS",
    "nashville": "BNA",
    "charlotte": "CLT",
    "salt lake city": "SLC",
}

# Ordered: the first matching rule wins. "re-optimize" must beat the
# price-bound wording it often rides along with, and "what if" phrasing must
# not swallow plain KPI questions.
_INTENT_RULES: list[tuple[str, re.Pattern]] = [
    (SHOW_BASE_POLICY,
     re.compile(r"\b(base|current|historical|existing)\b.{0,40}"
                r"\b(polic\w*|pricing|prices?|fares?)", re.I | re.S)),
    (RUN_OPT,
     re.compile(r"(re-?optimi[sz]e|optimi[sz]ed?|optimi[sz]ation|"
                r"\bbest\b.{0,20}\bpolic)", re.I)),
    (CF_PRICE_BOUND,
     re.compile(r"(what\s+if|what\s+would\s+happen|"
                r"\b(lower|raise|increase|decrease|cap|set|limit)\b"
                r".{0,40}\b(price|fare)s?\b)", re.I | re.S)),
    (KPI_CONVERSION, re.compile(r"\bconversions?\b|\bconversion rate\b", re.I)),
    (KPI_REVENUE, re.compile(r"\brevenues?\b|\bupsell\b|\buplift\b", re.I)),
]


def classify_intent_fallback(utterance: str) -> str:
    if not utterance.strip():
        raise ValueError("utterance must be nonempty")
    for intent, pattern in _INTENT_RULES:
        if pattern.search(utterance):
            return intent
    return UNKNOWN


_NUM = r"\$?\s*([0-9][0-9,]*(?:\.[0-9]+)?)"


def _to_number(tok: str) -> float:
    return float(tok.replace(",", ""))


_MIN_PRICE = re.compile(
    r"\bmin(?:imum)?\s+price[^.?!]*?\bto\s+" + _NUM, re.I)
_MAX_PRICE = re.compile(
    r"\bmax(?:imum)?\s+price[^.?!]*?\bto\s+" + _NUM, re.I)
_MIN_PRICE_OF = re.compile(
    r"\bmin(?:imum)?\s+price\s+of\s+" + _NUM, re.I)
_MAX_PRICE_OF = re.compile(
    r"\bmax(?:imum)?\s+price\s+of\s+" + _NUM, re.I)
_BETWEEN = re.compile(
    r"\bprices?\s+(?:to\s+)?between\s+" + _NUM + r"\s+and\s+" + _NUM, re.I)
_CARDINALITY = re.compile(
    r"\b([0-9]+)\s+(?:different\s+)?(?:pricing\s+)?"
    r"(?:rules?|groups?|segments?)\b", re.I)

_CODE_PAIR = re.compile(r"\b([A-Z]{3})\s*(?:-|/|\bto\b)\s*([A-Z]{3})\b")
_ORIGIN_CUES = re.compile(
    r"\b(from|departing(?:\s+from)?|leaving|out\s+of)\s*$", re.I)
_DEST_CUES = re.compile(r"\b(to|into|arriving\s+(?:in|at)|toward)\s*$", re.I)


def _find_places(text: str) -> list[tuple[int, str]]:
    """(position, airport code) for every city name or bare code mention."""
    found: list[tuple[int, str]] = []
    lowered = text.lower()
    taken: list[tuple[int, int]] = []
    for name in sorted(CITY_TO_AIRPORT, key=len, reverse=True):
        start = 0
        while True:
            i = lowered.find(name, start)
            if i < 0:
                break
            end = i + len(name)
            boundary_ok = ((i == 0 or not lowered[i - 1].isalpha())
                           and (end == len(lowered) or not lowered[end].isalpha()))
            if boundary_ok and not any(a <= i < b for a, b in taken):
                found.append((i, CITY_TO_AIRPORT[name]))
                taken.append((i, end))
            start = end
    for mo in re.finditer(r"\b([A-Z]{3})\b", text):
        if not any(a <= mo.start() < b for a, b in taken):
            found.append((mo.start(), mo.group(1)))
    return sorted(found)


def _parse_market(text: str) -> tuple[str | None, str | None]:
    pair = _CODE_PAIR.search(text)
    if pair:
        return pair.group(1), pair.group(2)
    places = _find_places(text)
    if len(places) >= 2:
        return places[0][1], places[1][1]
    if len(places) == 1:
        pos, code = places[0]
        prefix = text[:pos]
        if _DEST_CUES.search(prefix):
            return None, code
        if _ORIGIN_CUES.search(prefix):
            return code, None
        # "departing JFK"-style cues without a trailing space anchor
        if re.search(r"\b(departing|leaving)\b[^a-zA-Z]*$", prefix, re.I):
            return code, None
        return code, None
    return None, None


def fill_slots_fallback(utterance: str, intent: str | None = None) -> SlotSet:
    """Extract whatever the utterance states; everything else stays Unknown."""
    origin, destination = _parse_market(utterance)

    price_min = price_max = None
    between = _BETWEEN.search(utterance)
    if between:
        a, b = _to_number(between.group(1)), _to_number(between.group(2))
        price_min, price_max = min(a, b), max(a, b)
    else:
        for pat in (_MIN_PRICE, _MIN_PRICE_OF):
            mo = pat.search(utterance)
            if mo:
                price_min = _to_number(mo.group(1))
                break
        for pat in (_MAX_PRICE, _MAX_PRICE_OF):
            mo = pat.search(utterance)
            if mo:
                price_max = _to_number(mo.group(1))
                break
    if (price_min is not None and price_max is not None
            and price_min > price_max):
        price_min, price_max = price_max, price_min

    cardinality = None
    mo = _CARDINALITY.search(utterance)
    if mo:
        cardinality = int(mo.group(1))

    return SlotSet(origin=origin, destination=destination,
                   price_min=price_min, price_max=price_max,
                   cardinality=cardinality)
