"""Pipeline driver: build datasets, train, predict, aggregate, score, trade.

Subcommands:

    build-dataset   event streams / benchmark matrices -> LOBD files
    train           LOBD file -> trained baseline model(s)
    predict         model + LOBD split -> prediction CSV
    ensemble        prediction CSVs -> MAJORITY / METALOB outputs
    evaluate        prediction CSVs vs labels -> metrics + score table
    backtest        signals + mid series -> trade log and returns
    latency         per-inference timing of a saved model
    report          collect per-command outputs into one summary

Every command takes ``--config FILE`` (key = value lines, # comments)
plus flag overrides, writes its outputs under ``--out`` and appends a
manifest entry with a CRC32C per artifact so reruns can be compared
bit for bit. Exit codes: 0 ok, 1 bad usage/config, 2 bad data,
3 internal invariant violation.

Randomness policy: every stochastic step keys off the explicit seed
list; nothing reads entropy from the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from ._crc32c import crc32c
from .backtest import (
    ohlc_aggregate,
    returns_report,
    run_strategy,
    write_returns_csv,
    write_trade_log,
)
from .benchmark import build_benchmark_files
from .dataset import (
    build_fi2010_bundle,
    build_stock_bundle,
    make_622,
    read_dataset,
    sample_day,
    split_by_days,
    stack_stocks,
    write_dataset,
)
from .ensemble import EnsembleInput, majority_vote, train_metalob
from .errors import ConfigError, DataError, LobkitError
from .ingest import parse_fi2010, parse_lobster_day
from .labeling import LabelParams, balance_threshold, class_distribution, label_series
from .metrics import (
    confusion,
    macro_metrics,
    score_table,
    write_report_csv,
    write_report_json,
)
from .predictor import (
    MlpConfig,
    TrainConfig,
    init_mlp,
    load_model,
    predict,
    read_predictions,
    save_model,
    train,
    write_predictions,
)
from .synthetic import SyntheticConfig, generate_days

DEFAULT_HORIZONS = (1, 2, 3, 5, 10)
DEFAULT_THETA = 0.002
DEFAULT_STRIDE = 10
DEFAULT_H = 100
DEFAULT_CAPITAL = 10_000.0


# ---------------------------------------------------------------------------
# config file + manifest plumbing
# ---------------------------------------------------------------------------


def parse_config_file(path) -> dict[str, str]:
    """key = value lines; # starts a comment; values stay strings."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key = value, got {raw.strip()!r}")
            key, _, val = line.partition("=")
            out[key.strip().replace("-", "_")] = val.strip().strip("\"'")
    return out


def _merge(args: argparse.Namespace, file_cfg: dict[str, str], key: str, default, cast):
    flag_val = getattr(args, key, None)
    if flag_val is not None:
        return flag_val
    if key in file_cfg:
        try:
            return cast(file_cfg[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from None
    return default


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in str(text).replace(",", " ").split()]


def _file_crc(path) -> str:
    with open(path, "rb") as fh:
        return f"{crc32c(fh.read()):08x}"


def _update_manifest(out_dir: Path, command: str, settings: dict, files: list[Path]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    manifest[command] = {
        "settings": settings,
        "artifacts": {p.name: _file_crc(p) for p in sorted(files)},
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _dataset_hash(path) -> str:
    return _file_crc(path)


# ---------------------------------------------------------------------------
# source loading
# ---------------------------------------------------------------------------


def _load_source_days(args, cfg) -> dict[str, list]:
    """Per-stock day streams for event-stream sources."""
    source = _merge(args, cfg, "source", "synthetic", str)
    if source == "synthetic":
        seed = _merge(args, cfg, "seed", 42, int)
        n_days = _merge(args, cfg, "days", 10, int)
        events = _merge(args, cfg, "events_per_day", 20_000, int)
        stocks = _merge(args, cfg, "stocks", "SYNA,SYNB", str)
        names = [s for s in stocks.replace(",", " ").split() if s]
        return {
            name: generate_days(seed, n_days, events, SyntheticConfig(), symbol=name)
            for name in names
        }
    if source == "lobster":
        data_dir = _merge(args, cfg, "data_dir", None, str)
        if not data_dir:
            raise ConfigError("lobster source needs --data-dir")
        days_by_stock: dict[str, list] = {}
        msg_files = sorted(Path(data_dir).glob("*message*.csv"))
        if not msg_files:
            raise DataError(f"no *message*.csv files under {data_dir}")
        for msg in msg_files:
            book = Path(str(msg).replace("message", "orderbook"))
            if not book.exists():
                raise DataError(f"missing orderbook file for {msg.name}")
            parts = msg.name.split("_")
            symbol = parts[0]
            date = parts[1] if len(parts) > 1 else "unknown"
            stream = parse_lobster_day(msg, book, symbol=symbol, date=date)
            days_by_stock.setdefault(symbol, []).append(stream)
        for streams in days_by_stock.values():
            streams.sort(key=lambda s: s.date)
        return days_by_stock
    raise ConfigError(f"unknown source {source!r} (synthetic, lobster, fi2010)")


# ---------------------------------------------------------------------------
# build-dataset
# ---------------------------------------------------------------------------


def cmd_build_dataset(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)
    horizons = _merge(args, cfg, "horizons", list(DEFAULT_HORIZONS), _int_list)
    h = _merge(args, cfg, "h", DEFAULT_H, int)
    stride = _merge(args, cfg, "stride", DEFAULT_STRIDE, int)
    levels = _merge(args, cfg, "levels", 10, int)
    theta = _merge(args, cfg, "theta", DEFAULT_THETA, float)
    auto_theta = bool(_merge(args, cfg, "balance_theta", False, lambda v: v in ("1", "true")))
    source = _merge(args, cfg, "source", "synthetic", str)

    report: dict = {"horizons": {}, "source": source}
    outputs: list[Path] = []

    if source == "fi2010":
        train_file = _merge(args, cfg, "train_file", None, str)
        test_file = _merge(args, cfg, "test_file", None, str)
        normalize = bool(_merge(args, cfg, "normalize", False, lambda v: v in ("1", "true")))
        if train_file == "bundled" or test_file == "bundled":
            bench_dir = out_dir / "bundled-benchmark"
            if not (bench_dir / "bench_meta.json").exists():
                build_benchmark_files(bench_dir)
            train_file = bench_dir / "bench_train.txt"
            test_file = bench_dir / "bench_test.txt"
            normalize = True
        if auto_theta:
            raise ConfigError("balance-theta is undefined for pre-labelled benchmark files")
        if not train_file or not test_file:
            raise ConfigError("fi2010 source needs --train-file and --test-file")
        tr = parse_fi2010(train_file, "train")
        te = parse_fi2010(test_file, "test")
        for k in horizons:
            bundle = build_fi2010_bundle(tr, te, k=k, h=h, normalize=normalize)
            path = out_dir / f"dataset_k{k}.lobd"
            write_dataset(bundle, path)
            outputs.append(path)
            report["horizons"][k] = {
                "splits": {
                    s: dict(
                        zip(("U", "S", "D"), class_distribution(bundle.labels[s]))
                    )
                    for s in ("train", "val", "test")
                },
                "counts": {s: bundle.n(s) for s in ("train", "val", "test")},
            }
    else:
        days_by_stock = _load_source_days(args, cfg)
        any_days = next(iter(days_by_stock.values()))
        spec = make_622([d.date for d in any_days])
        for k in horizons:
            theta_k = theta
            if auto_theta:
                train_mids = []
                for days in days_by_stock.values():
                    for day in split_by_days(days, spec)["train"]:
                        train_mids.append(sample_day(day, stride, levels)[1])
                theta_k = balance_threshold(np.concatenate(train_mids), k)
            params = LabelParams(k=k, theta=theta_k)
            workers = int(os.environ.get("LOBKIT_WORKERS", "1"))
            if workers > 1 and len(days_by_stock) > 1:
                from concurrent.futures import ThreadPoolExecutor

                with ThreadPoolExecutor(max_workers=workers) as pool:
                    bundles = list(
                        pool.map(
                            lambda days: build_stock_bundle(days, spec, params, h, stride, levels),
                            days_by_stock.values(),
                        )
                    )
            else:
                bundles = [
                    build_stock_bundle(days, spec, params, h, stride, levels)
                    for days in days_by_stock.values()
                ]
            stacked = stack_stocks(bundles) if len(bundles) > 1 else bundles[0]
            path = out_dir / f"dataset_k{k}.lobd"
            write_dataset(stacked, path)
            outputs.append(path)
            per_stock = {}
            for bundle in bundles:
                stock = bundle.meta["stocks"][0]
                per_stock[stock] = {
                    s: dict(zip(("U", "S", "D"), class_distribution(bundle.labels[s])))
                    for s in ("train", "val", "test")
                    if bundle.n(s)
                }
            report["horizons"][k] = {
                "theta": theta_k,
                "per_stock_splits": per_stock,
                "counts": {s: stacked.n(s) for s in ("train", "val", "test")},
            }

    report_path = out_dir / "build_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs.append(report_path)
    _update_manifest(
        out_dir,
        "build-dataset",
        {"horizons": horizons, "h": h, "stride": stride, "theta": theta, "source": source},
        outputs,
    )
    for path in outputs:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# train / predict
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    dataset_path = Path(_merge(args, cfg, "dataset", None, str) or "")
    if not dataset_path.name:
        raise ConfigError("train needs --dataset")
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _merge(args, cfg, "seeds", [0], _int_list)
    lr = _merge(args, cfg, "lr", 0.001, float)
    batch = _merge(args, cfg, "batch", 64, int)
    epochs = _merge(args, cfg, "epochs", 100, int)
    optimizer = _merge(args, cfg, "optimizer", "adam", str)
    hidden = tuple(_merge(args, cfg, "hidden", [256], _int_list))

    bundle = read_dataset(dataset_path)
    k = bundle.meta.get("k", 0)
    input_dim = bundle.windows["train"].shape[1] * bundle.windows["train"].shape[2]
    outputs = []
    for seed in seeds:
        model = init_mlp(MlpConfig(input_dim=input_dim, hidden=hidden), seed)
        trained, history = train(
            model, bundle, TrainConfig(lr, batch, epochs, optimizer, seed)
        )
        model_path = out_dir / f"model_k{k}_s{seed}.npz"
        save_model(trained, model_path)
        hist_path = out_dir / f"history_k{k}_s{seed}.json"
        hist_path.write_text(json.dumps(history, indent=2) + "\n")
        outputs.extend([model_path, hist_path])
        print(
            f"seed {seed}: best val F1 {max(history['val_f1']):.4f} "
            f"at epoch {history['best_epoch']}"
        )
    _update_manifest(
        out_dir,
        "train",
        {
            "dataset": str(dataset_path),
            "seeds": seeds,
            "lr": lr,
            "batch": batch,
            "epochs": epochs,
            "optimizer": optimizer,
            "hidden": list(hidden),
        },
        outputs,
    )
    return 0


def cmd_predict(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    dataset_path = Path(_merge(args, cfg, "dataset", None, str) or "")
    model_path = Path(_merge(args, cfg, "model", None, str) or "")
    if not dataset_path.name or not model_path.name:
        raise ConfigError("predict needs --dataset and --model")
    split = _merge(args, cfg, "split", "test", str)
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)
    model_id = _merge(args, cfg, "model_id", "MLP", str)
    seed = _merge(args, cfg, "seed", 0, int)

    bundle = read_dataset(dataset_path)
    model = load_model(model_path)
    pset = predict(
        model,
        bundle.windows[split],
        model_id=model_id,
        horizon=bundle.meta.get("k", 0),
        seed=seed,
        dataset_hash=_dataset_hash(dataset_path),
    )
    out_path = out_dir / f"preds_{model_id}_k{pset.horizon}_s{seed}_{split}.csv"
    write_predictions(pset, out_path)
    _update_manifest(
        out_dir,
        "predict",
        {"dataset": str(dataset_path), "model": str(model_path), "split": split},
        [out_path],
    )
    print(f"wrote {out_path}")
    return 0


# ---------------------------------------------------------------------------
# evaluate / ensemble
# ---------------------------------------------------------------------------


def _load_prediction_files(paths: list[str]) -> list:
    sets = []
    missing = []
    for p in paths:
        if not Path(p).exists():
            missing.append(p)
            continue
        sets.append(read_predictions(p))
    if missing:
        print(f"missing prediction files (skipped): {', '.join(missing)}", file=sys.stderr)
    return sets


def cmd_evaluate(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    dataset_path = Path(_merge(args, cfg, "dataset", None, str) or "")
    if not dataset_path.name:
        raise ConfigError("evaluate needs --dataset")
    split = _merge(args, cfg, "split", "test", str)
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)

    bundle = read_dataset(dataset_path)
    labels = bundle.labels[split]
    sets = _load_prediction_files(args.predictions or [])
    if not sets:
        raise DataError("no prediction files available to evaluate")

    claims = {}
    claims_file = _merge(args, cfg, "claims", None, str)
    if claims_file:
        claims = {
            model: {int(k): float(v) for k, v in per.items()}
            for model, per in json.loads(Path(claims_file).read_text()).items()
        }

    per_model: dict[str, dict] = {}
    detail = []
    dataset_k = bundle.meta.get("k")
    for pset in sets:
        if dataset_k is not None and pset.horizon and pset.horizon != dataset_k:
            print(
                f"skipping {pset.model_id} (horizon {pset.horizon} != dataset k={dataset_k})",
                file=sys.stderr,
            )
            continue
        if len(pset) != len(labels):
            raise DataError(
                f"{pset.model_id}: {len(pset)} predictions vs {len(labels)} labels in split {split}"
            )
        mm = macro_metrics(confusion(pset, labels))
        entry = per_model.setdefault(
            pset.model_id, {"observed": {}, "claimed": claims.get(pset.model_id, {})}
        )
        entry["observed"][(pset.horizon, pset.seed)] = mm["macro_f1"] * 100
        detail.append(
            {
                "model": pset.model_id,
                "horizon": pset.horizon,
                "seed": pset.seed,
                "macro_f1": mm["macro_f1"] * 100,
                "accuracy": mm["accuracy"] * 100,
                "macro_precision": mm["macro_precision"] * 100,
                "macro_recall": mm["macro_recall"] * 100,
            }
        )

    rows = score_table(per_model)
    extra = {"detail": detail, "split": split}
    aligned = [s for s in sets if len(s) == len(labels)]
    if len(aligned) >= 2:
        from .metrics import agreement_matrix

        extra["agreement"] = {
            "models": [s.model_id for s in aligned],
            "matrix": agreement_matrix(aligned).tolist(),
        }
    json_path = out_dir / "evaluation.json"
    write_report_json(rows, json_path, extra=extra)
    csv_path = out_dir / "evaluation.csv"
    write_report_csv(rows, csv_path)
    _update_manifest(
        out_dir,
        "evaluate",
        {"dataset": str(dataset_path), "split": split, "n_models": len(per_model)},
        [json_path, csv_path],
    )
    for row in rows:
        f1 = "-" if row["f1_measured"] is None else f"{row['f1_measured']:.1f}"
        score = "-" if row["score"] is None else f"{row['score']:.1f}"
        print(f"{row['model']:<12} F1 {f1:>6}  rank {row['rank']}  score {score}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    dataset_path = Path(_merge(args, cfg, "dataset", None, str) or "")
    if not dataset_path.name:
        raise ConfigError("ensemble needs --dataset")
    split = _merge(args, cfg, "split", "test", str)
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _merge(args, cfg, "seed", 0, int)
    hidden = _merge(args, cfg, "meta_hidden", 64, int)

    bundle = read_dataset(dataset_path)
    labels = bundle.labels[split]
    sets = _load_prediction_files(args.predictions or [])
    if len(sets) < 2:
        raise DataError("ensembling needs at least two prediction files")

    weights = np.array(
        [macro_metrics(confusion(s, labels))["macro_f1"] for s in sets]
    )
    inp = EnsembleInput(sets=sets, weights=weights)

    maj = majority_vote(inp)
    maj_path = out_dir / f"preds_MAJORITY_k{maj.horizon}_s{maj.seed}_{split}.csv"
    write_predictions(maj, maj_path)
    maj_f1 = macro_metrics(confusion(maj, labels))["macro_f1"]

    meta = train_metalob(inp, labels, hidden=hidden, seed=seed)
    meta_path = out_dir / f"preds_METALOB_k{maj.horizon}_s{seed}_{split}.csv"
    write_predictions(meta.predictions, meta_path)
    meta_f1 = macro_metrics(confusion(meta.predictions, meta.test_labels))["macro_f1"]

    summary = {
        "majority_f1": maj_f1 * 100,
        "metalob_heldout_f1": meta_f1 * 100,
        "meta_split_sizes": list(meta.split_sizes),
        "weights": {s.model_id: float(w) for s, w in zip(sets, weights)},
        "tie_break": "S>U>D",
    }
    summary_path = out_dir / "ensemble.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _update_manifest(
        out_dir,
        "ensemble",
        {"dataset": str(dataset_path), "split": split, "models": len(sets)},
        [maj_path, meta_path, summary_path],
    )
    print(f"MAJORITY F1 {maj_f1*100:.1f}  METALOB held-out F1 {meta_f1*100:.1f}")
    return 0


# ---------------------------------------------------------------------------
# backtest
# ---------------------------------------------------------------------------


def cmd_backtest(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)
    stride = _merge(args, cfg, "stride", DEFAULT_STRIDE, int)
    levels = _merge(args, cfg, "levels", 10, int)
    capital = _merge(args, cfg, "capital", DEFAULT_CAPITAL, float)
    k = _merge(args, cfg, "horizon", 5, int)
    theta = _merge(args, cfg, "theta", DEFAULT_THETA, float)
    signal_sources = args.predictions or []

    days_by_stock = _load_source_days(args, cfg)
    any_days = next(iter(days_by_stock.values()))
    spec = make_622([d.date for d in any_days])

    curves: dict[str, dict[int, object]] = {}
    outputs = []
    for stock, days in days_by_stock.items():
        test_days = split_by_days(days, spec)["test"]
        from .book import PRICE_SCALE, replay, sample_matrix

        event_mids = []
        for day in test_days:
            feats_i, incomplete = replay(day.events, levels)
            complete = feats_i[incomplete == 0]
            event_mids.append((complete[:, 0] + complete[:, 2]) / 2 / PRICE_SCALE)
        mids = np.concatenate(event_mids)
        bars = ohlc_aggregate(mids, stride)

        if signal_sources:
            psets = _load_prediction_files(signal_sources)
            by_seed = {p.seed: p.argmax() for p in psets}
        else:
            sampled = mids[stride - 1 :: stride][: len(bars)]
            labs = label_series(sampled, LabelParams(k=k, theta=theta))
            oracle = np.full(len(bars), 1, dtype=np.int8)
            oracle[: len(labs)] = labs
            by_seed = {0: oracle}

        curves[stock] = {}
        for seed, signals in by_seed.items():
            sig = np.asarray(signals, dtype=np.int8)[: len(bars)]
            if len(sig) < len(bars):
                sig = np.concatenate([sig, np.full(len(bars) - len(sig), 1, np.int8)])
            curve = run_strategy(sig, bars, capital=capital)
            curves[stock][seed] = curve
            log_path = out_dir / f"trades_{stock}_s{seed}.csv"
            write_trade_log(curve, log_path)
            outputs.append(log_path)

    rep = returns_report(curves)
    rep_json = out_dir / "backtest.json"
    rep_json.write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    rep_csv = out_dir / "backtest.csv"
    write_returns_csv(rep, rep_csv)
    outputs.extend([rep_json, rep_csv])
    _update_manifest(
        out_dir,
        "backtest",
        {"stride": stride, "capital": capital, "horizon": k},
        outputs,
    )
    for stock in sorted(rep):
        r = rep[stock]
        print(f"{stock}: median return {r['median']:.4f}% over {len(r['seeds'])} seed(s)")
    return 0


# ---------------------------------------------------------------------------
# latency
# ---------------------------------------------------------------------------


def measure_latency(model, observations: np.ndarray, repetitions: int = 100) -> dict:
    """Median and p95 single-observation inference latency, ms.

    Warmup rounds are excluded; also reports the amortized per-sample
    latency of batched inference.
    """
    if repetitions < 30:
        raise ConfigError("need at least 30 repetitions for stable quantiles")
    obs = np.asarray(observations)
    flat = obs.reshape(len(obs), -1).astype(model.dtype)
    single = flat[:1]
    for _ in range(10):
        model.predict_proba(single)
    times = np.empty(repetitions)
    for i in range(repetitions):
        row = flat[i % len(flat) : i % len(flat) + 1]
        t0 = time.perf_counter()
        model.predict_proba(row)
        times[i] = time.perf_counter() - t0
    batch = flat[: min(64, len(flat))]
    for _ in range(3):
        model.predict_proba(batch)
    t0 = time.perf_counter()
    reps_b = max(10, repetitions // 10)
    for _ in range(reps_b):
        model.predict_proba(batch)
    amortized = (time.perf_counter() - t0) / reps_b / len(batch)
    return {
        "median_ms": float(np.median(times) * 1e3),
        "p95_ms": float(np.percentile(times, 95) * 1e3),
        "amortized_batch_ms": float(amortized * 1e3),
        "repetitions": repetitions,
    }


def cmd_latency(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    dataset_path = Path(_merge(args, cfg, "dataset", None, str) or "")
    model_path = Path(_merge(args, cfg, "model", None, str) or "")
    if not dataset_path.name or not model_path.name:
        raise ConfigError("latency needs --dataset and --model")
    reps = _merge(args, cfg, "reps", 100, int)
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    out_dir.mkdir(parents=True, exist_ok=True)

    bundle = read_dataset(dataset_path)
    model = load_model(model_path)
    stats = measure_latency(model, bundle.windows["test"][:256], reps)
    path = out_dir / "latency.json"
    path.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    _update_manifest(out_dir, "latency", {"model": str(model_path), "reps": reps}, [path])
    print(
        f"median {stats['median_ms']:.3f} ms  p95 {stats['p95_ms']:.3f} ms  "
        f"amortized(64) {stats['amortized_batch_ms']:.4f} ms"
    )
    return 0


def cmd_report(args) -> int:
    cfg = parse_config_file(args.config) if args.config else {}
    out_dir = Path(_merge(args, cfg, "out", "run", str))
    collected = {}
    for name in ("build_report", "evaluation", "ensemble", "backtest", "latency"):
        path = out_dir / f"{name}.json"
        if path.exists():
            collected[name] = json.loads(path.read_text())
    if not collected:
        raise DataError(f"no command outputs found under {out_dir}")
    path = out_dir / "report.json"
    path.write_text(json.dumps(collected, indent=2, sort_keys=True) + "\n")
    _update_manifest(out_dir, "report", {"sections": sorted(collected)}, [path])
    print(f"wrote {path} with sections: {', '.join(sorted(collected))}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--config", help="key = value config file")
    sp.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lobkit", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-dataset", help="construct LOBD dataset files")
    _add_common(sp)
    sp.add_argument("--source", choices=("synthetic", "lobster", "fi2010"))
    sp.add_argument("--horizons", type=_int_list)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--balance-theta", dest="balance_theta", action="store_const", const=True)
    sp.add_argument("--h", type=int)
    sp.add_argument("--stride", type=int)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--days", type=int)
    sp.add_argument("--events-per-day", dest="events_per_day", type=int)
    sp.add_argument("--stocks")
    sp.add_argument("--data-dir", dest="data_dir")
    sp.add_argument("--train-file", dest="train_file")
    sp.add_argument("--test-file", dest="test_file")
    sp.add_argument("--normalize", action="store_const", const=True)
    sp.set_defaults(func=cmd_build_dataset)

    sp = sub.add_parser("train", help="train the baseline classifier")
    _add_common(sp)
    sp.add_argument("--dataset")
    sp.add_argument("--seeds", type=_int_list)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--batch", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--optimizer", choices=("adam", "sgd", "rmsprop"))
    sp.add_argument("--hidden", type=_int_list)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="emit a prediction CSV")
    _add_common(sp)
    sp.add_argument("--dataset")
    sp.add_argument("--model")
    sp.add_argument("--split", choices=("train", "val", "test"))
    sp.add_argument("--model-id", dest="model_id")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("evaluate", help="score prediction files against labels")
    _add_common(sp)
    sp.add_argument("--dataset")
    sp.add_argument("--split", choices=("train", "val", "test"))
    sp.add_argument("--claims", help="JSON {model: {horizon: claimed F1}}")
    sp.add_argument("predictions", nargs="*")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("ensemble", help="aggregate prediction files")
    _add_common(sp)
    sp.add_argument("--dataset")
    sp.add_argument("--split", choices=("train", "val", "test"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--meta-hidden", dest="meta_hidden", type=int)
    sp.add_argument("predictions", nargs="*")
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("backtest", help="run the long-only signal strategy")
    _add_common(sp)
    sp.add_argument("--source", choices=("synthetic", "lobster"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--days", type=int)
    sp.add_argument("--events-per-day", dest="events_per_day", type=int)
    sp.add_argument("--stocks")
    sp.add_argument("--data-dir", dest="data_dir")
    sp.add_argument("--stride", type=int)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--capital", type=float)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--predictions", nargs="*")
    sp.set_defaults(func=cmd_backtest)

    sp = sub.add_parser("latency", help="measure per-inference latency")
    _add_common(sp)
    sp.add_argument("--dataset")
    sp.add_argument("--model")
    sp.add_argument("--reps", type=int)
    sp.set_defaults(func=cmd_latency)

    sp = sub.add_parser("report", help="collect command outputs into one file")
    _add_common(sp)
    sp.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except LobkitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except Exception:  # invariant violation: report and exit 3, keep the trace
        import traceback

        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
