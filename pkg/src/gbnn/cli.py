"""Command line front end: store, retrieve, benchmark, sweep, ablations.

Every tabular command writes the same CSV column set (stdout by default,
--out for a file); human-oriented summaries go to stderr so piped output
stays machine-readable.
"""

from __future__ import annotations

import click
import numpy as np

from gbnn.bench import (
    ALL_METHODS,
    Scenario,
    ablation_reduction,
    ablation_sorting,
    bogus_sweep,
    emit_report,
    run_scenario,
)
from gbnn.estimator import complete_probe
from gbnn.network import (
    Network,
    NetworkConfig,
    NetworkFormatError,
    generate_messages,
    load_messages,
    load_network,
    parse_probe,
    save_messages,
    save_network,
)


def shape_options(command):
    for option in (
        click.option("--clusters", type=int, default=8, show_default=True,
                     help="symbol positions per message"),
        click.option("--neurons", type=int, default=64, show_default=True,
                     help="alphabet size per position"),
        click.option("--gamma", type=float, default=1.0, show_default=True,
                     help="memory-effect weight of the dynamics"),
    ):
        command = option(command)
    return command


def _config(clusters, neurons, gamma):
    try:
        return NetworkConfig(clusters, neurons, gamma)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


def _emit(reports, out):
    if out is None:
        click.echo(emit_report(reports, fmt="csv"), nl=False)
    else:
        emit_report(reports, fmt="csv", out=out)
        click.echo(f"wrote {out}", err=True)


@click.group()
def main():
    """Clustered binary associative memory: store codewords as cliques,
    complete partial ones, and benchmark the completion methods."""


@main.command()
@shape_options
@click.option("--messages", "messages_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="message file, one comma-separated row per line")
@click.option("--stored", type=int, default=None,
              help="generate this many random messages instead of reading a file")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--messages-out", type=click.Path(dir_okay=False), default=None,
              help="also write the stored messages to this file")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="serialized network destination")
def store(clusters, neurons, gamma, messages_path, stored, seed, messages_out, out):
    """Build a network from a message file and serialize it."""
    config = _config(clusters, neurons, gamma)
    if (messages_path is None) == (stored is None):
        raise click.UsageError("provide exactly one of --messages or --stored")
    try:
        if messages_path is not None:
            messages = load_messages(messages_path, config)
        else:
            messages = generate_messages(config, stored, seed=seed)
        network = Network(config)
        network.store_many(messages)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    save_network(network, out)
    if messages_out is not None:
        save_messages(messages_out, messages)
    click.echo(
        f"stored {len(messages)} messages in a {clusters}x{neurons} network "
        f"({network.edge_count()} edges) -> {out}",
        err=True,
    )


@main.command()
@click.option("--network", "network_path",
              type=click.Path(exists=True, dir_okay=False), required=True,
              help="serialized network produced by `store`")
@click.option("--probe", required=True, help='partial message, e.g. "9,?,?,10"')
@click.option("--method", type=click.Choice(ALL_METHODS), default="partite",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-iters", type=int, default=100, show_default=True)
def retrieve(network_path, probe, method, seed, max_iters):
    """Complete one probe and print the decoded message."""
    try:
        network = load_network(network_path)
        parsed = network.config.validate_probe(parse_probe(probe))
    except (ValueError, NetworkFormatError) as exc:
        raise click.ClickException(str(exc)) from None
    values = complete_probe(
        network, parsed, method, max_iters=max_iters,
        rng=np.random.default_rng(seed),
    )
    if values is None:
        raise click.ClickException("no message retrieved")
    click.echo(",".join(str(int(v)) for v in values))


def _scenario(clusters, neurons, gamma, stored, erased, probes, seed, methods,
              randomize_erasure, max_iters, threads):
    try:
        return Scenario(
            config=_config(clusters, neurons, gamma),
            stored_messages=stored,
            erased_clusters=erased,
            probes=probes,
            seed=seed,
            methods=tuple(methods),
            randomize_erasure=randomize_erasure,
            max_iters=max_iters,
            threads=threads,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


@main.command()
@shape_options
@click.option("--stored", type=int, required=True, help="messages to store")
@click.option("--erased", type=int, default=0, show_default=True,
              help="clusters erased from each probe")
@click.option("--probes", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", "methods", multiple=True, type=click.Choice(ALL_METHODS),
              default=("random", "partite"), show_default=True)
@click.option("--randomize-erasure", is_flag=True,
              help="draw erased positions per probe instead of fixing the last ones")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV destination (default stdout)")
@click.option("--max-iters", type=int, default=100, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
def bench(clusters, neurons, gamma, stored, erased, probes, seed, methods,
          randomize_erasure, out, max_iters, threads):
    """Run one scenario and report per-method retrieval metrics."""
    scenario = _scenario(clusters, neurons, gamma, stored, erased, probes, seed,
                         methods, randomize_erasure, max_iters, threads)
    _emit(run_scenario(scenario), out)


@main.command("bogus-sweep")
@shape_options
@click.option("--stored", "counts", multiple=True, type=int,
              default=(500, 1000, 2000, 4000), show_default=True,
              help="stored-message counts to sweep (repeatable)")
@click.option("--erased", "erased_values", multiple=True, type=int,
              default=(1, 2, 5, 6), show_default=True,
              help="erased-cluster counts to sweep (repeatable)")
@click.option("--probes", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def bogus_sweep_command(clusters, neurons, gamma, counts, erased_values, probes,
                        seed, out):
    """Measure how often the dynamics settle on a bogus fixed point."""
    config = _config(clusters, neurons, gamma)
    try:
        rows = bogus_sweep(config, erased_values, counts, probes, seed=seed)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _emit(rows, out)


@main.command("ablate-sort")
@shape_options
@click.option("--stored", type=int, required=True)
@click.option("--erased", type=int, default=0, show_default=True)
@click.option("--probes", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--max-iters", type=int, default=100, show_default=True)
def ablate_sort(clusters, neurons, gamma, stored, erased, probes, seed, out,
                max_iters):
    """Compare the four candidate-ordering settings on identical states."""
    scenario = _scenario(clusters, neurons, gamma, stored, erased, probes, seed,
                         ("partite",), False, max_iters, 1)
    outcome = ablation_sorting(scenario)
    _emit(outcome.reports, out)


@main.command("ablate-reduce")
@shape_options
@click.option("--stored", type=int, required=True)
@click.option("--erased", type=int, default=0, show_default=True)
@click.option("--probes", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--max-iters", type=int, default=100, show_default=True)
def ablate_reduce(clusters, neurons, gamma, stored, erased, probes, seed, out,
                  max_iters):
    """Time the search with and without graph reduction on identical states."""
    scenario = _scenario(clusters, neurons, gamma, stored, erased, probes, seed,
                         ("partite",), False, max_iters, 1)
    outcome = ablation_reduction(scenario)
    _emit(outcome.reports, out)
    with_reduction = outcome.total_seconds["partite-reduced"]
    without = outcome.total_seconds["partite-unreduced"]
    ratio = f", {without / with_reduction:.1f}x" if with_reduction > 0 else ""
    click.echo(
        f"search totals: reduced {with_reduction:.4f}s, "
        f"unreduced {without:.4f}s{ratio}; "
        f"outcomes identical: {outcome.outcomes_identical}",
        err=True,
    )


if __name__ == "__main__":
    main()
