"""Command-line interface.

Exit codes: 0 success, 1 when an acceptance threshold fails, 2 for
usage errors (click's default).
"""

from __future__ import annotations

import json
import pathlib
import sys

import click

from ..constants import MICRO
from ..crypto import MasterCredential, derive_identity_root


@click.group()
def main():
    """Policy-gated, human-escalated transaction layer for agents."""


def _load_corpus(path, seed):
    from ..evalharness import Corpus, generate_corpus

    if path:
        return Corpus.from_json(pathlib.Path(path).read_text())
    return generate_corpus(seed)


@main.command()
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
def corpus(seed, out_path, as_json):
    """Generate the seeded 1,500-request evaluation corpus."""
    from ..evalharness import generate_corpus

    built = generate_corpus(seed)
    if out_path:
        pathlib.Path(out_path).write_text(built.to_json())
        click.echo(f"wrote {len(built.requests)} requests to {out_path}")
    if as_json or not out_path:
        click.echo(json.dumps({"seed": seed, "counts": built.counts()}))


@main.command()
@click.option("--config", "config_id", default="FULL", show_default=True,
              type=click.Choice(["B0", "B1", "B2", "B3", "FULL"]))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--human", default="optimal", show_default=True,
              type=click.Choice(["optimal", "approve_all", "reject_all"]))
@click.option("--json", "as_json", is_flag=True)
def gate(config_id, corpus_path, seed, human, as_json):
    """Run one gate configuration over the corpus and report metrics."""
    from ..evalharness import GateConfig, HumanPolicy, run_gate

    built = _load_corpus(corpus_path, seed)
    report = run_gate(GateConfig.named(config_id), built, HumanPolicy(human))
    click.echo(report.to_json() if as_json else report.to_markdown())
    if config_id == "FULL" and (
        report.auto_blocked_rate < 0.90 or report.false_positive_rate > 0.05
    ):
        sys.exit(1)


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True)
def ablate(corpus_path, seed, as_json):
    """Per-check ablation: marginal contribution of each policy check."""
    from ..evalharness import run_ablation

    report = run_ablation(_load_corpus(corpus_path, seed))
    click.echo(report.to_json() if as_json else report.to_markdown())
    if any(delta <= 0 for delta in report.deltas.values()):
        sys.exit(1)


@main.command()
@click.option("--ops", default=None,
              help="comma-separated operation names (default: fast set)")
@click.option("--iterations", default=1000, show_default=True, type=int)
@click.option("--trials", default=5, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True)
def bench(ops, iterations, trials, as_json):
    """Latency benchmark: median + IQR after warm-ups."""
    from ..evalharness import run_latency_bench
    from ..evalharness.latency import DEFAULT_OPS

    names = [o.strip() for o in ops.split(",")] if ops else list(DEFAULT_OPS)
    try:
        report = run_latency_bench(names, iterations=iterations, trials=trials)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo(report.to_json() if as_json else report.to_markdown())
    e2e = report.operations.get("end_to_end_authorize")
    if e2e is not None and e2e.median_ms >= 200:
        sys.exit(1)


@main.command("privacy-sim")
@click.option("--config", "config_id", default="all", show_default=True,
              type=click.Choice(["none", "jitter_only", "full_countermeasures", "all"]))
@click.option("--n-tx", default=1000, show_default=True, type=int)
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True)
def privacy_sim(config_id, n_tx, seed, as_json):
    """Unlinkability simulation with the clustering adversary."""
    from ..evalharness import (
        LinkabilityConfig,
        run_linkability,
        run_linkability_suite,
    )

    if config_id == "all":
        report = run_linkability_suite(n_tx, seed=seed)
        click.echo(report.to_json() if as_json else report.to_markdown())
        rates = report.linkage_rates
        if not (
            rates["none"] > rates["jitter_only"] > rates["full_countermeasures"]
        ):
            sys.exit(1)
    else:
        rate = run_linkability(n_tx, LinkabilityConfig(config_id), seed)
        click.echo(json.dumps({"config": config_id, "linkage_rate": rate}))


def _demo_gateway():
    """Default agent set so serve works out of the box."""
    from ..evalharness.corpus import reference_policy_for
    from .pipeline import Gateway
    from .storage import storage_from_env

    root = derive_identity_root(MasterCredential(b"\x5a" * 32, "demo-owner"))
    gateway = Gateway(root, storage=storage_from_env())
    for agent_id in ("agent-alpha", "agent-beta"):
        policy = reference_policy_for(agent_id)
        gateway.register_agent(agent_id, [policy])
        gateway.ledger.mark_paid(agent_id, policy.id)
    return gateway


def _gateway_from_config(path):
    from ..policy import Policy
    from ..privacy import PrivacyLevel
    from .pipeline import Gateway
    from .storage import storage_from_env

    config = json.loads(pathlib.Path(path).read_text())
    secret = bytes.fromhex(config.get("root_entropy_hex", "5a" * 32))
    root = derive_identity_root(
        MasterCredential(secret, config.get("passphrase", "demo-owner"))
    )
    gateway = Gateway(root, storage=storage_from_env())
    for entry in config.get("agents", []):
        policies = [Policy.from_json_dict(p) for p in entry["policies"]]
        level = PrivacyLevel(entry.get("privacy_level", "isolated"))
        gateway.register_agent(entry["agent_id"], policies, level)
        if entry.get("first_payment_done"):
            for policy in policies:
                gateway.ledger.mark_paid(entry["agent_id"], policy.id)
    return gateway


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8700, show_default=True, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(host, port, config_path):
    """Run the HTTP/SSE gateway for the review console."""
    from .server import serve as run_server

    gateway = (
        _gateway_from_config(config_path) if config_path else _demo_gateway()
    )
    click.echo(f"serving on http://{host}:{port} "
               f"(agents: {', '.join(sorted(gateway.agents))})")
    run_server(gateway, host, port)


@main.command()
@click.argument("scenario", type=click.Choice(["grocery", "cloud", "nft"]))
@click.option("--json", "as_json", is_flag=True)
def demo(scenario, as_json):
    """Run an end-to-end scenario against the in-memory stack."""
    from .demos import DEMOS

    trace = DEMOS[scenario]()
    if as_json:
        click.echo(json.dumps({"scenario": scenario, "trace": trace}))
    else:
        for line in trace:
            click.echo(line)


if __name__ == "__main__":
    main()
