"""Session lifecycle and tool dispatch behind the chat surface.

A turn goes classify -> fill slots -> one memory merge -> decide; execute
decisions invoke the optimizer/KPI tools against the market store. Tool
failures never kill the session: they come back as apologetic replies
carrying the error class name.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agent_core import AgentMemory, CompletionClient, run_turn
from ..agent_core.agent import TOOL_FAILURE_TEMPLATE
from ..agent_core.types import (
    CF_PRICE_BOUND,
    KPI_CONVERSION,
    KPI_REVENUE,
    RUN_OPT,
    SHOW_BASE_POLICY,
)
from ..demand_model import evaluate_policy
from ..errors import PresaiseError, UnknownMarket, UnknownSession
from ..policy_opt import (
    PricingPolicy,
    SolveLimits,
    clamp_policy,
    policy_assignment,
    solve_column_generation,
)
from ..policy_opt.feature_graph import build_graph
from .config import ServiceConfig
from .store import (
    MarketEntry,
    MarketStore,
    atomic_write_text,
    canonical_json,
    market_key,
    policy_from_wire,
)


@dataclass
class ChatResponse:
    reply: str
    decision_kind: str
    memory: dict
    policy: dict | None = None
    kpis: dict | None = None
    degraded: bool = False

    def to_json_dict(self) -> dict:
        return {
            "reply": self.reply,
            "decision_kind": self.decision_kind,
            "memory": self.memory,
            "policy": self.policy,
            "kpis": self.kpis,
            "degraded": self.degraded,
        }


@dataclass
class Session:
    id: str
    memory: AgentMemory = field(default_factory=AgentMemory)
    transcript: list[dict] = field(default_factory=list)
    active_market: str | None = None
    active_policy: PricingPolicy | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class ChatEngine:
    """Owns the market store, the sessions and the optional LLM client."""

    def __init__(self, config: ServiceConfig, store: MarketStore | None = None):
        self.config = config
        self.store = store or MarketStore(config.data_dir)
        self.sessions_dir = Path(config.data_dir) / "sessions"
        self.client = (CompletionClient(endpoint=config.llm_endpoint)
                       if config.llm_endpoint else None)
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.RLock()

    # -- session lifecycle ---------------------------------------------------

    def create_session(self) -> str:
        sid = uuid.uuid4().hex
        with self._registry_lock:
            self._sessions[sid] = Session(id=sid)
            self._persist(self._sessions[sid])
        return sid

    def _get_session(self, sid: str) -> Session:
        with self._registry_lock:
            if sid in self._sessions:
                return self._sessions[sid]
            path = self.sessions_dir / f"{sid}.json"
            if path.is_file():
                session = self._load_session(json.loads(path.read_text()))
                self._sessions[sid] = session
                return session
        raise UnknownSession(f"no session {sid}")

    def _persist(self, session: Session) -> None:
        doc = {
            "id": session.id,
            "memory": session.memory.to_wire(),
            "transcript": session.transcript,
            "active_market": session.active_market,
            "active_policy": (session.active_policy.to_json_dict()
                              if session.active_policy else None),
        }
        atomic_write_text(self.sessions_dir / f"{session.id}.json",
                          canonical_json(doc))

    def _load_session(self, doc: dict) -> Session:
        mem = doc.get("memory", {})

        def v(key):
            raw = mem.get(key, "Unknown")
            return None if raw == "Unknown" else raw

        from ..agent_core.types import SlotSet
        memory = AgentMemory(
            function_call=mem.get("function_call", "Unknown"),
            slots=SlotSet(origin=v("origin"), destination=v("destination"),
                          price_min=v("price_min"), price_max=v("price_max"),
                          cardinality=v("cardinality")),
        )
        session = Session(id=doc["id"], memory=memory,
                          transcript=list(doc.get("transcript", [])),
                          active_market=doc.get("active_market"))
        if doc.get("active_policy") and session.active_market:
            try:
                entry = self.store.get(tuple(session.active_market.split("-")))
                session.active_policy = policy_from_wire(
                    doc["active_policy"], entry.obs, entry.cf)
            except UnknownMarket:
                session.active_policy = None
        return session

    # -- the chat turn ---------------------------------------------------------

    def chat(self, sid: str, text: str) -> ChatResponse:
        session = self._get_session(sid)
        with session.lock:
            decision, new_memory, _diag = run_turn(session.memory, text,
                                                   self.client)
            session.memory = new_memory  # the turn's single write

            if decision.kind == "ask_follow_up":
                reply, kind, policy_doc, kpi_doc = (decision.question,
                                                    "ask_follow_up", None, None)
            elif decision.kind == "dialog":
                reply, kind, policy_doc, kpi_doc = (decision.text, "dialog",
                                                    None, None)
            else:
                reply, kind, policy_doc, kpi_doc = self._execute(
                    session, decision.tool, decision.resolved)

            session.transcript.append({"speaker": "user", "text": text})
            agent_turn: dict = {"speaker": "agent", "text": reply}
            if policy_doc is not None:
                agent_turn["policy"] = policy_doc
            if kpi_doc is not None:
                agent_turn["kpis"] = kpi_doc
            session.transcript.append(agent_turn)
            self._persist(session)

            return ChatResponse(reply=reply, decision_kind=kind,
                                memory=session.memory.to_wire(),
                                policy=policy_doc, kpis=kpi_doc,
                                degraded=decision.degraded)

    # -- tools -----------------------------------------------------------------

    def _execute(self, session: Session, tool: str, resolved):
        market = (resolved.origin, resolved.destination)
        key = market_key(market)
        try:
            entry = self.store.get(market)
        except UnknownMarket:
            return (f"I don't have data for the {key} market yet. Ingest a "
                    f"CSV for it or pick another market.",
                    "error", None, None)
        try:
            if tool == RUN_OPT:
                return self._run_opt(session, key, entry, resolved)
            if tool == SHOW_BASE_POLICY:
                return self._show_base(entry, key)
            if tool == CF_PRICE_BOUND:
                return self._what_if(session, key, entry, resolved)
            if tool in (KPI_REVENUE, KPI_CONVERSION):
                return self._kpi(session, key, entry, tool)
            raise PresaiseError(f"no tool {tool}")
        except PresaiseError as e:
            reply = TOOL_FAILURE_TEMPLATE.format(
                error=f"{type(e).__name__}: {e}")
            return reply, "error", None, None

    def _base_assignment(self, entry: MarketEntry) -> np.ndarray:
        n = len(entry.obs)
        return policy_assignment(entry.base_policy, n,
                                 entry.base_policy.rules[0].price_index)

    def _policy_for_queries(self, session: Session,
                            key: str, entry: MarketEntry) -> PricingPolicy:
        if session.active_policy is not None and session.active_market == key:
            return session.active_policy
        return entry.base_policy

    def _run_opt(self, session: Session, key: str, entry: MarketEntry,
                 resolved):
        bounds = None
        if resolved.price_min is not None or resolved.price_max is not None:
            bounds = (resolved.price_min, resolved.price_max)
        m = resolved.cardinality or 1
        graph = build_graph(entry.obs.schema, entry.obs.price_grid, bounds)
        policy = solve_column_generation(
            graph, entry.obs, entry.cf, m,
            limits=SolveLimits(time_budget=self.config.time_budget),
            market_id=key)
        session.active_market = key
        session.active_policy = policy
        self.store.save_policy(key, "optimized", policy)

        base_assign = self._base_assignment(entry)
        assign = policy_assignment(policy, len(entry.obs),
                                   entry.base_policy.rules[0].price_index)
        kpi = evaluate_policy(entry.cf, assign, base_assign)
        note = ("" if policy.status == "optimal"
                else " (search hit its time budget; best policy found so far)")
        reply = (f"Here is the optimized pricing policy for {key} with "
                 f"{len(policy.rules)} rule(s){note}. " + kpi.format_text())
        return reply, "execute", policy.to_json_dict(), kpi.to_json_dict()

    def _show_base(self, entry: MarketEntry, key: str):
        base = entry.base_policy
        base_assign = self._base_assignment(entry)
        kpi = evaluate_policy(entry.cf, base_assign, base_assign)
        price = base.rules[0].price
        reply = (f"The current base policy for {key} charges the full fare of "
                 f"${price:,.0f} for every booking request. " + kpi.format_text())
        return reply, "execute", base.to_json_dict(), kpi.to_json_dict()

    def _what_if(self, session: Session, key: str, entry: MarketEntry,
                 resolved):
        target = self._policy_for_queries(session, key, entry)
        bounds = (resolved.price_min, resolved.price_max)
        clamped, kpi = clamp_policy(
            target, bounds, entry.cf,
            fallback_index=entry.base_policy.rules[0].price_index)
        reply = ("What-if result with prices clamped to "
                 f"[{bounds[0] if bounds[0] is not None else 'any'}, "
                 f"{bounds[1] if bounds[1] is not None else 'any'}]: "
                 + kpi.format_text()
                 + " Uplift is measured against the unclamped policy.")
        return reply, "execute", clamped.to_json_dict(), kpi.to_json_dict()

    def _kpi(self, session: Session, key: str, entry: MarketEntry, tool: str):
        target = self._policy_for_queries(session, key, entry)
        assign = policy_assignment(target, len(entry.obs),
                                   entry.base_policy.rules[0].price_index)
        kpi = evaluate_policy(entry.cf, assign, self._base_assignment(entry))
        which = ("current" if target is entry.base_policy
                 else "active optimized")
        if tool == KPI_REVENUE:
            reply = (f"Expected revenue per request for the {which} policy on "
                     f"{key}: ${kpi.expected_revenue_per_request:,.2f} "
                     f"({kpi.uplift_vs_base * 100:+.1f}% vs. base).")
        else:
            reply = (f"Expected conversion rate for the {which} policy on "
                     f"{key}: {kpi.conversion_rate * 100:.1f}%.")
        return reply, "execute", None, kpi.to_json_dict()
