"""Operator command line.

Thin shells over the library: every verification command calls the same
module functions the tests use. Exit codes: 0 success, 1 verification
failure, 2 usage error. Output is line-oriented for scripting.
"""

from __future__ import annotations

import json
import secrets
import sys
from pathlib import Path

import click

from .consensus import NetworkConfig, Trace, check_trace, run_simulation
from .crypto import KeyBundle, load_key_file, save_key_file
from .ehr import CapturingOtpSender, Cluster, HealthSystem
from .ehr.engine import read_chain_file
from .ledger import (
    build_create_tx,
    build_transfer_tx,
    detect_tamper,
    replay_chain,
)


@click.group()
def main():
    """Patient-centric record exchange tooling."""


@main.command()
@click.option("--seed", "seed_hex", default=None, help="32-byte hex seed; random if omitted.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--passphrase", prompt=True, hide_input=True)
def keygen(seed_hex: str | None, out_path: Path, passphrase: str):
    """Write an encrypted key file and print the public keys."""
    if seed_hex is not None:
        seed = bytes.fromhex(seed_hex)
        if len(seed) != 32:
            raise click.UsageError("--seed must be 64 hex characters (32 bytes)")
        agreement = bytes(b ^ 0xA5 for b in seed)
        bundle = KeyBundle.generate(signing_seed=seed, agreement_private=agreement)
    else:
        bundle = KeyBundle.generate()
    save_key_file(out_path, bundle, passphrase)
    click.echo(f"signing-public {bundle.signing.public_hex}")
    click.echo(f"agreement-public {bundle.agreement.public_hex}")
    click.echo(f"key-file {out_path}")


@main.group()
def node():
    """Run a service node."""


@node.command("run")
@click.option("--data-dir", type=click.Path(path_type=Path), required=True,
              envvar="MEDLEDGER_DATA_DIR")
@click.option("--listen", default="127.0.0.1:8000", show_default=True,
              envvar="MEDLEDGER_LISTEN")
@click.option("--mode", type=click.Choice(["bft", "pow"]), default="bft",
              show_default=True, envvar="MEDLEDGER_MODE")
@click.option("--block-time-ms", default=200, show_default=True,
              envvar="MEDLEDGER_BLOCK_TIME_MS")
@click.option("--pow-bits", default=12, show_default=True, envvar="MEDLEDGER_POW_BITS")
@click.option("--nodes", default=3, show_default=True, envvar="MEDLEDGER_NODES",
              help="Embedded cluster size.")
@click.option("--seed", default=0, show_default=True, envvar="MEDLEDGER_SEED")
@click.option("--debug-otp", is_flag=True, help="Expose issued OTP codes over HTTP (test only).")
@click.option("--portal-dist", type=click.Path(path_type=Path), default=None,
              help="Serve a built portal from this directory.")
def node_run(data_dir, listen, mode, block_time_ms, pow_bits, nodes, seed, debug_otp, portal_dist):
    """Start the HTTP service over an embedded cluster."""
    import uvicorn

    from .service import create_app

    otp_sender = CapturingOtpSender() if debug_otp else None
    system = HealthSystem(
        data_dir,
        n_nodes=nodes,
        mode=mode,
        seed=seed,
        block_time_ms=block_time_ms,
        pow_bits=pow_bits,
        otp_sender=otp_sender,
    )
    app = create_app(system, debug_otp=debug_otp, portal_dist=portal_dist)
    host, _, port = listen.partition(":")
    uvicorn.run(app, host=host, port=int(port or 8000), log_level="warning")


@main.group()
def sim():
    """Consensus simulations."""


@sim.command("run")
@click.argument("scenario", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def sim_run(scenario: Path, out_path: Path | None):
    """Run a scenario file and emit its trace."""
    config = NetworkConfig.load(scenario)
    trace = run_simulation(config)
    commits = trace.commits()
    heights = {}
    for event in commits:
        heights[event["node"]] = max(heights.get(event["node"], 0), event["height"])
    if out_path is not None:
        trace.save(out_path)
        click.echo(f"trace {out_path}")
    else:
        sys.stdout.write(trace.to_ndjson())
    click.echo(f"commits {len(commits)}", err=False)
    for index in sorted(heights):
        click.echo(f"node {index} height {heights[index]}")


@sim.command("check")
@click.argument("trace_file", type=click.Path(exists=True, path_type=Path))
def sim_check(trace_file: Path):
    """Run the trace checker; nonzero exit on any violated predicate."""
    trace = Trace.load(trace_file)
    verdict = check_trace(trace)
    click.echo(verdict.summary())
    if not verdict.ok:
        sys.exit(1)


@main.group()
def tx():
    """Submit transactions against a local data directory."""


@tx.command("submit")
@click.option("--data-dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--key", "key_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--passphrase", prompt=True, hide_input=True)
@click.option("--asset", "asset_json", default=None, help="CREATE with this JSON data map.")
@click.option("--transfer", "asset_id", default=None, help="TRANSFER this asset id.")
@click.option("--to", "recipient", default=None, help="Recipient signing key (hex).")
@click.option("--metadata", "metadata_json", default=None)
def tx_submit(data_dir, key_path, passphrase, asset_json, asset_id, recipient, metadata_json):
    """Build, sign, and commit one CREATE or TRANSFER."""
    bundle = load_key_file(key_path, passphrase)
    cluster = Cluster(Path(data_dir) / "cluster")
    metadata = json.loads(metadata_json) if metadata_json else None
    if asset_json is not None and asset_id is None:
        built = build_create_tx(bundle, json.loads(asset_json), metadata)
    elif asset_id is not None and recipient is not None:
        outpoint = None
        for ref, info in cluster.state.utxo.items():
            if info.asset_id == asset_id:
                outpoint = ref
                break
        if outpoint is None:
            click.echo(f"no live output for asset {asset_id}", err=True)
            sys.exit(1)
        built = build_transfer_tx(bundle, asset_id, outpoint, recipient, metadata)
    else:
        raise click.UsageError("pass either --asset, or --transfer with --to")
    height = cluster.submit_and_commit(built)
    click.echo(f"tx {built.id}")
    click.echo(f"height {height}")


@main.group()
def chain():
    """Inspect and verify chain data."""


def _cluster_chains(data_dir: Path):
    cluster_dir = Path(data_dir) / "cluster"
    if not cluster_dir.exists():
        raise click.UsageError(f"no cluster under {data_dir}")
    stored = json.loads((cluster_dir / "cluster.json").read_text())
    for index in range(stored["n"]):
        path = cluster_dir / f"node{index}" / "chain.ndjson"
        if path.exists():
            yield index, stored["mode"], read_chain_file(path)


@chain.command("inspect")
@click.option("--data-dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--node", "node_index", default=0, show_default=True)
def chain_inspect(data_dir, node_index):
    """Print height, hash, and transaction summary per block."""
    for index, _, blocks in _cluster_chains(Path(data_dir)):
        if index != node_index:
            continue
        for block in blocks:
            header = block.header
            click.echo(
                f"height {header.height} hash {block.hash_hex} "
                f"txs {len(block.txs)} seal {header.seal.get('type')} "
                f"time {header.timestamp}"
            )
        return
    raise click.UsageError(f"node {node_index} has no chain file")


@chain.command("verify")
@click.option("--data-dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--dump", "dump_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--mode", type=click.Choice(["bft", "pow"]), default="pow", show_default=True,
              help="Seal discipline for --dump verification.")
def chain_verify(data_dir, dump_path, mode):
    """Tamper scan plus full replay; exit 1 at the first invalid height."""
    failed = False
    targets = []
    if dump_path is not None:
        targets.append(("dump", mode, read_chain_file(Path(dump_path))))
    elif data_dir is not None:
        targets = [(f"node{i}", m, blocks) for i, m, blocks in _cluster_chains(Path(data_dir))]
    else:
        raise click.UsageError("pass --data-dir or --dump")

    for name, chain_mode, blocks in targets:
        bad_height = detect_tamper(blocks, chain_mode)
        if bad_height is not None:
            click.echo(f"{name}: FAIL first invalid height {bad_height}")
            failed = True
            continue
        try:
            state = replay_chain(blocks, chain_mode)
        except Exception as exc:
            click.echo(f"{name}: FAIL replay: {exc}")
            failed = True
            continue
        click.echo(
            f"{name}: ok height {state.height} txs "
            f"{sum(len(b.txs) for b in state.blocks)} work {state.cumulative_work}"
        )
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
