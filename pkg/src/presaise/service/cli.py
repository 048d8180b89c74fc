"""Command line entry points: ingest, optimize, serve, gen-data."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .. import datagen
from ..data import write_markets_csv
from ..errors import PresaiseError, UnknownMarket
from ..policy_opt import SolveLimits, solve_column_generation
from ..policy_opt.feature_graph import build_graph
from .config import load_config
from .engine import ChatEngine
from .store import MarketStore, canonical_json, ingest_csv, market_key


@click.group()
@click.option("--data-dir", default=None,
              help="State directory (overrides PRESAISE_DATA_DIR).")
@click.option("--config", "config_path", default=None,
              help="Path to a presaise.toml config file.")
@click.pass_context
def main(ctx, data_dir, config_path):
    """Prescriptive pricing toolkit."""
    ctx.obj = load_config(data_dir=data_dir, config_path=config_path)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def ingest(config, csv_path, as_json):
    """Validate and model every market in CSV_PATH."""
    store = MarketStore(config.data_dir)
    try:
        keys = ingest_csv(csv_path, store)
    except PresaiseError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(1)
    if as_json:
        click.echo(json.dumps({"markets": keys}))
    else:
        click.echo(f"ingested {len(keys)} market(s): {', '.join(keys)}")


@main.command()
@click.argument("origin")
@click.argument("destination")
@click.option("--rules", "-m", default=1, show_default=True,
              help="Maximum number of pricing rules.")
@click.option("--min-price", type=float, default=None)
@click.option("--max-price", type=float, default=None)
@click.option("--time-budget", type=float, default=None,
              help="Seconds before returning the best policy found.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def optimize(config, origin, destination, rules, min_price, max_price,
             time_budget, as_json):
    """Optimize the pricing policy for ORIGIN DESTINATION."""
    store = MarketStore(config.data_dir)
    try:
        entry = store.get((origin.upper(), destination.upper()))
    except UnknownMarket:
        click.echo(f"error: no such market {origin}-{destination}", err=True)
        sys.exit(2)
    bounds = None
    if min_price is not None or max_price is not None:
        bounds = (min_price, max_price)
    try:
        graph = build_graph(entry.obs.schema, entry.obs.price_grid, bounds)
        policy = solve_column_generation(
            graph, entry.obs, entry.cf, rules,
            limits=SolveLimits(time_budget=time_budget or config.time_budget),
            market_id=market_key(entry.obs.market))
    except PresaiseError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(1)
    store.save_policy(market_key(entry.obs.market), "optimized", policy)
    doc = policy.to_json_dict()
    if as_json:
        click.echo(json.dumps(doc))
    else:
        click.echo(canonical_json(doc), nl=False)


@main.command()
@click.option("--port", "-p", default=None, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", default=None,
              help="Static front-end build to serve at /.")
@click.pass_obj
def serve(config, port, host, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .app import create_app

    app = create_app(config, ChatEngine(config), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port or config.port)


@main.command("gen-data")
@click.argument("out_csv", type=click.Path(dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--rows", default=2000, show_default=True)
@click.option("--origin", default="DTW", show_default=True)
@click.option("--destination", default="JFK", show_default=True)
def gen_data(out_csv, seed, rows, origin, destination):
    """Write a synthetic market CSV plus its ground-truth sidecar."""
    obs, truth = datagen.generate_market(origin=origin,
                                         destination=destination,
                                         n=rows, seed=seed)
    write_markets_csv(out_csv, [obs])
    sidecar = Path(out_csv).with_suffix(".truth.json")
    sidecar.write_text(json.dumps({
        "seed": truth.seed,
        "price_grid": list(truth.price_grid),
        "intercept": truth.intercept,
        "level_effects": [list(e) for e in truth.level_effects],
        "price_slope": truth.price_slope,
        "confound_scale": truth.confound_scale,
    }, indent=2, sort_keys=True))
    click.echo(f"wrote {rows} rows to {out_csv} (truth: {sidecar})")


if __name__ == "__main__":
    main()
