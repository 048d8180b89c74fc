"""Domain types for the conversational layer."""

from __future__ import annotations

from dataclasses import dataclass, field

UNKNOWN = "Unknown"

RUN_OPT = "RUN_OPT"
CF_PRICE_BOUND = "CF_PRICE_BOUND"
SHOW_BASE_POLICY = "SHOW_BASE_POLICY"
KPI_REVENUE = "KPI_REVENUE"
KPI_CONVERSION = "KPI_CONVERSION"

INTENTS = (RUN_OPT, CF_PRICE_BOUND, SHOW_BASE_POLICY, KPI_REVENUE,
           KPI_CONVERSION)


@dataclass(frozen=True)
class SlotSet:
    """Tool arguments; None means the literal Unknown."""

    origin: str | None = None
    destination: str | None = None
    price_min: float | None = None
    price_max: float | None = None
    cardinality: int | None = None

    def __post_init__(self):
        for code in (self.origin, self.destination):
            if code is not None and not (len(code) == 3 and code.isalpha()
                                         and code.isupper()):
                raise ValueError(f"airport code must be 3 uppercase letters, "
                                 f"got {code!r}")
        if (self.price_min is not None and self.price_max is not None
                and self.price_min > self.price_max):
            raise ValueError("price_min must be <= price_max")
        if self.cardinality is not None and self.cardinality < 1:
            raise ValueError("cardinality must be >= 1")

    def is_empty(self) -> bool:
        return all(v is None for v in (self.origin, self.destination,
                                       self.price_min, self.price_max,
                                       self.cardinality))

    def to_wire(self) -> dict:
        def fmt(v):
            return UNKNOWN if v is None else v
        return {
            "origin": fmt(self.origin),
            "destination": fmt(self.destination),
            "price_min": fmt(self.price_min),
            "price_max": fmt(self.price_max),
            "cardinality": fmt(self.cardinality),
        }


@dataclass(frozen=True)
class AgentMemory:
    """Unknown-initialized record of the last tool and its arguments.

    Written exactly once per turn by the parse stage; the dispatch stage
    only reads it.
    """

    function_call: str = UNKNOWN
    slots: SlotSet = field(default_factory=SlotSet)
    updated_at: int = 0  # turn counter; deterministic by design

    def to_wire(self) -> dict:
        wire = {"function_call": self.function_call}
        wire.update(self.slots.to_wire())
        return wire


@dataclass(frozen=True)
class AgentDecision:
    """One of the four dispatch outcomes of a parsed turn."""

    kind: str  # "execute" | "ask_follow_up" | "dialog"
    tool: str | None = None
    resolved: SlotSet | None = None
    missing: tuple[str, ...] = ()
    question: str = ""
    text: str = ""
    degraded: bool = False

    def __post_init__(self):
        if self.kind == "execute":
            if self.tool not in INTENTS:
                raise ValueError(f"execute needs a known tool, got {self.tool!r}")
            if self.resolved is None or self.resolved.origin is None \
                    or self.resolved.destination is None:
                raise ValueError("execute requires a resolved market pair")


def merge_slots(stored: SlotSet, incoming: SlotSet) -> SlotSet:
    """Known incoming values overwrite; Unknown incoming values preserve."""
    def pick(new, old):
        return new if new is not None else old
    merged = dict(
        origin=pick(incoming.origin, stored.origin),
        destination=pick(incoming.destination, stored.destination),
        price_min=pick(incoming.price_min, stored.price_min),
        price_max=pick(incoming.price_max, stored.price_max),
        cardinality=pick(incoming.cardinality, stored.cardinality),
    )
    # a fresh bound pair may contradict a stale stored one; the incoming
    # side wins, the stored leftover is dropped
    if (merged["price_min"] is not None and merged["price_max"] is not None
            and merged["price_min"] > merged["price_max"]):
        if incoming.price_min is not None and incoming.price_max is None:
            merged["price_max"] = None
        elif incoming.price_max is not None and incoming.price_min is None:
            merged["price_min"] = None
    return SlotSet(**merged)
