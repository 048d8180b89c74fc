"""HTTP service and CLI binding ingestion, agent and optimizer together."""

from .config import ServiceConfig, load_config
from .store import MarketEntry, MarketStore, ingest_csv
from .engine import ChatEngine, ChatResponse

__all__ = [
    "ServiceConfig",
    "load_config",
    "MarketEntry",
    "MarketStore",
    "ingest_csv",
    "ChatEngine",
    "ChatResponse",
]
