"""Operator entry point: TCP party runner, simulator, benchmarks, tables.

The TCP runner and the simulator share one training driver so equal seeds
produce byte-identical transcripts on both backends.
"""

from __future__ import annotations

import json
import sys
import time

import click
import numpy as np

from . import evaluation
from .piecewise import SigmoidKind, sigmoid_table
from .protocol import Protocol
from .randomness import PrfKeySetup, derive_pair_key
from .ring import FixedPointCodec
from .session import Session
from .simulator import simulate
from .trainer import TrainConfig, train
from .transport import (
    LAN_PROFILE,
    LatencyModel,
    PartyConfig,
    connect,
    next_party,
    prev_party,
)


# -- shared training driver ------------------------------------------------


def _broadcast_shape(prot: Protocol, owner: int, shape=None) -> tuple:
    """Owner announces a (rows, cols) pair to both peers; one round."""
    ch, me = prot.session.channels, prot.me
    if me == owner:
        ch.send_words(next_party(me), np.asarray(shape, dtype=np.uint64))
        ch.send_words(prev_party(me), np.asarray(shape, dtype=np.uint64))
        out = tuple(int(v) for v in shape)
    else:
        out = tuple(int(v) for v in ch.recv_words(owner, 2))
    prot.barrier()
    return out


def run_training(prot: Protocol, cfg: TrainConfig, partition: str,
                 X_local, y_local, reveal_to: str = "all"):
    """Collective training run; identical call sequence on every backend.

    dealer: party 0 holds the full dataset.  horizontal: each party holds a
    row slice (possibly empty), concatenated in party order.  Returns
    (weights_or_None, weight_share): decoded weights where revealed, and the
    party's share of w in every case.
    """
    if partition == "dealer":
        shape = _broadcast_shape(prot, 0, None if prot.me != 0 else X_local.shape)
        n = shape[0]
        xs, ys = prot.share_many([
            (0, X_local, shape, True),
            (0, y_local.reshape(-1, 1) if y_local is not None else None, (n, 1), True),
        ])
    elif partition == "horizontal":
        my_shape = (0, 0) if X_local is None else X_local.shape
        shapes = [_broadcast_shape(prot, p, my_shape) for p in range(3)]
        f = max(s[1] for s in shapes)
        items = []
        for p, (rows, _) in enumerate(shapes):
            mine = p == prot.me
            items.append((p, X_local if mine else None, (rows, f), True))
            items.append((p, y_local.reshape(-1, 1) if mine and y_local is not None else None,
                          (rows, 1), True))
        parts = prot.share_many(items)
        xs = prot.concat([parts[2 * p] for p in range(3) if shapes[p][0]], axis=0)
        ys = prot.concat([parts[2 * p + 1] for p in range(3) if shapes[p][0]], axis=0)
    else:
        raise ValueError(f"unknown partition mode {partition!r}")

    state = train(prot, xs, ys, cfg)

    if reveal_to == "all":
        opened = prot.reveal(state.w)
        return prot.codec.decode_tensor(opened), state.w
    if reveal_to == "none":
        return None, state.w
    weights = None
    for target in sorted(int(t) for t in reveal_to.split(",")):
        opened = prot.reveal(state.w, to=target)
        if opened is not None:
            weights = prot.codec.decode_tensor(opened)
    return weights, state.w


# -- option plumbing -------------------------------------------------------


def _build_train_cfg(train_config, **overrides) -> TrainConfig:
    raw = {}
    if train_config:
        with open(train_config) as f:
            raw = json.load(f)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**raw)


def _load_dataset(data, label_column, standardize, columns) -> evaluation.Dataset:
    ds = evaluation.load_csv(data, label_column=label_column,
                             standardize_features=standardize)
    if columns:
        with open(columns) as f:
            names = [line.strip() for line in f if line.strip()]
        ds = evaluation.select_columns(ds, names)
    return ds


def _write_json(path, payload):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


_train_options = [
    click.option("--train-config", type=click.Path(exists=True),
                 help="JSON file mirroring TrainConfig fields."),
    click.option("--iterations", type=int, default=None),
    click.option("--batch-size", type=int, default=None),
    click.option("--frac-bits", type=int, default=None),
    click.option("--sigmoid-kind", type=click.Choice(["3", "5"]), default=None),
    click.option("--eta0", type=float, default=None),
    click.option("--lam", type=float, default=None),
    click.option("--l2/--no-l2", default=None),
    click.option("--class-weighting/--no-class-weighting", default=None),
    click.option("--seed", type=int, default=None),
]

_data_options = [
    click.option("--label-column", default="last", show_default=True),
    click.option("--standardize/--no-standardize", default=True, show_default=True),
    click.option("--columns", type=click.Path(exists=True),
                 help="File with one feature name per line to keep."),
]


def _with(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
def main():
    """Three-party logistic regression over replicated secret shares."""


# -- run-party -------------------------------------------------------------


@main.command("run-party")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Party config JSON: party_id, peers, session_id, seed.")
@click.option("--data", type=click.Path(exists=True),
              help="This party's CSV (full dataset for the dealer, row slice otherwise).")
@click.option("--partition", type=click.Choice(["horizontal", "dealer"]),
              default="horizontal", show_default=True)
@click.option("--reveal-to", default="all", show_default=True,
              help='"all", "none", or comma-separated party ids.')
@click.option("--model-out", type=click.Path(), help="Where to write the model JSON.")
@click.option("--stats-out", type=click.Path(), help="Where to write CommStats JSON.")
@_with(_data_options)
@_with(_train_options)
def run_party(config_path, data, partition, reveal_to, model_out, stats_out,
              label_column, standardize, columns, train_config, **overrides):
    """Join a 3-party TCP session and train collaboratively."""
    cfg = _build_train_cfg(train_config, **overrides)
    party = PartyConfig.from_json(config_path)

    X = y = None
    feature_names = None
    if data:
        ds = _load_dataset(data, label_column, standardize, columns)
        X, y, feature_names = ds.X, ds.y, ds.feature_names
    elif partition == "horizontal":
        raise click.UsageError("horizontal mode requires --data on every party")
    elif party.party_id == 0:
        raise click.UsageError("dealer mode requires --data on party 0")

    pair_key = derive_pair_key(party.seed, party.session_id)
    channels, next_key = connect(party, pair_key)
    try:
        rng = PrfKeySetup.from_keys(party.party_id, party.seed, party.session_id, next_key)
        prot = Protocol(Session(party.party_id, channels, rng), frac_bits=cfg.frac_bits)
        weights, w_share = run_training(prot, cfg, partition, X, y, reveal_to)
        stats = prot.stats
    finally:
        time.sleep(0.1)  # let the writer threads drain before teardown
        channels.close()

    if model_out:
        payload = {"frac_bits": cfg.frac_bits, "sigmoid_kind": cfg.sigmoid_kind.value}
        if feature_names:
            payload["feature_names"] = feature_names
        if weights is not None:
            payload["weights"] = weights.ravel().tolist()
        else:
            payload["weight_shares"] = {
                "s0": w_share.s0.ravel().tolist(),
                "s1": w_share.s1.ravel().tolist(),
            }
        _write_json(model_out, payload)
    if stats_out:
        _write_json(stats_out, stats.as_dict())
    click.echo(f"party {party.party_id}: rounds={stats.rounds} bytes={stats.total_bytes}")


# -- simulate --------------------------------------------------------------


@main.command("simulate")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--partition", type=click.Choice(["horizontal", "dealer"]),
              default="dealer", show_default=True)
@click.option("--wan-rtt-ms", type=float, default=50.0, show_default=True)
@click.option("--bandwidth-mbps", type=float, default=100.0, show_default=True)
@click.option("--real-latency", is_flag=True,
              help="Sleep one RTT per round instead of analytic modeling.")
@click.option("--model-out", type=click.Path())
@click.option("--stats-out", type=click.Path())
@_with(_data_options)
@_with(_train_options)
def simulate_cmd(data, partition, wan_rtt_ms, bandwidth_mbps, real_latency,
                 model_out, stats_out, label_column, standardize, columns,
                 train_config, **overrides):
    """Train on the in-process 3-party simulator and report cost estimates."""
    cfg = _build_train_cfg(train_config, **overrides)
    ds = _load_dataset(data, label_column, standardize, columns)

    def party_slices(me):
        if partition == "dealer":
            return (ds.X, ds.y) if me == 0 else (None, None)
        bounds = np.linspace(0, ds.n_samples, 4).astype(int)
        sl = slice(bounds[me], bounds[me + 1])
        return ds.X[sl], ds.y[sl]

    def program(prot):
        X, y = party_slices(prot.me)
        weights, _ = run_training(prot, cfg, partition, X, y, reveal_to="all")
        return weights

    t0 = time.time()
    result = simulate(program, seeds=(cfg.seed + 1, cfg.seed + 2, cfg.seed + 3),
                      frac_bits=cfg.frac_bits,
                      real_latency_rtt_ms=wan_rtt_ms if real_latency else None)
    elapsed = time.time() - t0
    weights = result.outputs[0]
    stats = result.stats[0]
    wan = LatencyModel(rtt_ms=wan_rtt_ms, bandwidth_mbps=bandwidth_mbps)

    preds = evaluation.predict(ds.X, weights, cfg.sigmoid_kind)
    report = evaluation.balanced_accuracy(preds, ds.y)
    click.echo(f"balanced accuracy (train set): {report.balanced_accuracy:.4f}")
    click.echo(f"iterations: {cfg.iterations}  rounds: {stats.rounds}  "
               f"bytes: {stats.total_bytes}")
    click.echo(f"wall time: {elapsed:.2f}s  modeled LAN: "
               f"{LAN_PROFILE.modeled_seconds(stats):.2f}s  modeled WAN: "
               f"{wan.modeled_seconds(stats):.2f}s")

    if model_out:
        _write_json(model_out, {
            "frac_bits": cfg.frac_bits,
            "sigmoid_kind": cfg.sigmoid_kind.value,
            "feature_names": ds.feature_names,
            "weights": weights.ravel().tolist(),
        })
    if stats_out:
        payload = stats.as_dict()
        payload["modeled_lan_seconds"] = LAN_PROFILE.modeled_seconds(stats)
        payload["modeled_wan_seconds"] = wan.modeled_seconds(stats)
        _write_json(stats_out, payload)


# -- bench -----------------------------------------------------------------


@main.command()
@click.option("--features", multiple=True, type=int, default=(64, 1024),
              show_default=True)
@click.option("--batch", multiple=True, type=int, default=(64,), show_default=True)
@click.option("--iters", type=int, default=5, show_default=True)
@click.option("--frac-bits", type=int, default=16, show_default=True)
@click.option("--sigmoid-kind", type=click.Choice(["3", "5"]), default="5",
              show_default=True)
@click.option("--out", type=click.Path(), help="CSV output path (default stdout).")
def bench(features, batch, iters, frac_bits, sigmoid_kind, out):
    """Throughput grid on synthetic data; per-iteration rounds and bytes."""
    rows = ["features,batch,iters,seconds,iters_per_sec,rounds_per_iter,bytes_per_iter"]
    for f in features:
        for b in batch:
            rng = np.random.default_rng(7)
            X = rng.normal(size=(b, f))
            y = rng.integers(0, 2, size=b)
            while y.min() == y.max():  # both classes required
                y = rng.integers(0, 2, size=b)

            def stats_for(n_iters):
                cfg = TrainConfig(iterations=n_iters, batch_size=b,
                                  frac_bits=frac_bits, sigmoid_kind=sigmoid_kind)
                t0 = time.time()
                _, stats = evaluation.train_in_simulator(X, y, cfg)
                return time.time() - t0, stats[0]

            base_t, base = stats_for(0)
            full_t, full = stats_for(iters)
            dt = max(full_t - base_t, 1e-9)
            rows.append(
                f"{f},{b},{iters},{dt:.4f},{iters / dt:.3f},"
                f"{(full.rounds - base.rounds) / iters:.1f},"
                f"{(full.total_bytes - base.total_bytes) / iters:.0f}"
            )
    text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


# -- sigmoid-table ---------------------------------------------------------


@main.command("sigmoid-table")
@click.option("--kind", type=click.Choice(["3", "5"]), required=True)
@click.option("--from", "lo", type=float, default=-8.0, show_default=True)
@click.option("--to", "hi", type=float, default=8.0, show_default=True)
@click.option("--step", type=float, default=0.001, show_default=True)
@click.option("--frac-bits", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path(), help="CSV output path (default stdout).")
def sigmoid_table_cmd(kind, lo, hi, step, frac_bits, out):
    """Emit x, approx, true, error over a grid (plot data for the sigmoid)."""
    grid, approx, truth, err = sigmoid_table(kind, lo, hi, step, frac_bits)
    fh = open(out, "w") if out else sys.stdout
    try:
        fh.write("x,approx,true,error\n")
        for row in zip(grid, approx, truth, err):
            fh.write("%.6f,%.8f,%.8f,%.8f\n" % row)
    finally:
        if out:
            fh.close()
    if out:
        click.echo(f"wrote {grid.size} rows to {out}")


# -- eval ------------------------------------------------------------------


@main.command("eval")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--fold-seed", type=int, default=0, show_default=True)
@click.option("--backend", type=click.Choice(["simulator", "plaintext"]),
              default="simulator", show_default=True)
@click.option("--out", type=click.Path(), help="Metrics JSON output path.")
@_with(_data_options)
@_with(_train_options)
def eval_cmd(data, k, fold_seed, backend, out, label_column, standardize, columns,
             train_config, **overrides):
    """k-fold cross-validated balanced accuracy."""
    cfg = _build_train_cfg(train_config, **overrides)
    ds = _load_dataset(data, label_column, standardize, columns)
    result = evaluation.kfold_cv(ds, cfg, k=k, seed=fold_seed, backend=backend)
    click.echo(f"{k}-fold balanced accuracy: "
               f"{result['mean_balanced_accuracy']:.4f} "
               f"± {result['std_balanced_accuracy']:.4f}")
    for i, score in enumerate(result["fold_scores"]):
        click.echo(f"  fold {i}: {score:.4f}")
    if out:
        _write_json(out, result)


if __name__ == "__main__":
    main()
