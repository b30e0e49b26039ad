"""Experiment orchestration: configs, the training loop, evaluation, sweeps and reports.

The training loop sets the temperature once per epoch from the schedule,
exactly like wiring ``criterion.temperature = scheduler(epoch)`` at the top
of each epoch. Contrastive runs finish with a linear probe on the frozen
encoder, so every trained network returned here carries a classifier head.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as data_mod
from .data import DatasetSplit, GeneratorSpec
from .errors import ConfigError, ContractError, TrainingError
from .losses import ce_loss, supcon_loss, supcon_ls_loss
from .metrics import (EvalResult, evaluate_predictions, improvement, score_predictions,
                      write_scores_csv, UNKNOWN)
from .nn import (CLASSIFIER, PROJECTION, Network, OptimizerState, backward, encode,
                 forward, lr_at, save_checkpoint, sgd_step)
from .schedule import Kind, ScheduleSpec, temperature_at, temperature_curve

LOSSES = ("ce", "supcon", "supcon_ls")
RESULTS_HEADER = ["run_id", "schedule", "tau_plus", "tau_minus", "period", "k", "loss",
                  "alpha", "seed", "accuracy", "auroc", "oscr", "wall_seconds"]
METRICS = ("accuracy", "auroc", "oscr")
DEFAULT_ALPHA = 0.2
# reference open-set AUROC (%) on TinyImageNet for GCos shifts, tau+ = 0.4, tau- = 0.1
REFERENCE_K_SWEEP_AUROC = {0.0: 82.87, 0.25: 82.93, 0.5: 82.99, 0.75: 83.03, 1.0: 83.09}


@dataclass
class OptimizerConfig:
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-4
    restarts: list = field(default_factory=lambda: [200, 400])
    warmup: int = 1
    decay_biases: bool = False


@dataclass
class ProbeConfig:
    epochs: int = 100
    lr: float = 0.05


@dataclass
class ModelConfig:
    hidden: list = field(default_factory=lambda: [64, 64, 32])
    proj_dim: int = 32


@dataclass
class AugmentConfig:
    sigma: float = 0.1
    scale: list = field(default_factory=lambda: [0.9, 1.1])


def _build(cls, d, where):
    if isinstance(d, cls):
        return d
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def default_schedule(loss, epochs):
    return ScheduleSpec.const(1.0 if loss == "ce" else 0.2, total_epochs=epochs)


@dataclass
class ExperimentConfig:
    """Everything that determines one training run.

    ``dataset`` is either a :class:`GeneratorSpec` or a path to a dataset CSV
    (with its JSON manifest alongside). ``seed`` drives weight init, batch
    order and augmentation; the dataset keeps its own seed.
    """

    dataset: GeneratorSpec | str = field(default_factory=GeneratorSpec)
    loss: str = "ce"
    alpha: float | None = None
    schedule: ScheduleSpec | None = None
    epochs: int = 600
    batch_size: int = 32
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.loss == "supcon_ls":
            if self.alpha is None:
                self.alpha = DEFAULT_ALPHA
            if not 0.0 <= self.alpha < 1.0:
                raise ConfigError("alpha must lie in [0, 1)")
        elif self.alpha is not None:
            raise ConfigError("alpha only applies to the supcon_ls loss")
        if self.epochs < 1 or self.batch_size < 2:
            raise ConfigError("epochs must be >= 1 and batch_size >= 2")
        if self.schedule is None:
            self.schedule = default_schedule(self.loss, self.epochs)
        if self.schedule.total_epochs != self.epochs:
            raise ConfigError(f"schedule spans {self.schedule.total_epochs} epochs, "
                              f"config trains for {self.epochs}")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        d = dict(d)
        epochs = d.get("epochs", 600)
        if isinstance(d.get("dataset"), dict):
            d["dataset"] = _build(GeneratorSpec, d["dataset"], "dataset")
        if isinstance(d.get("schedule"), dict):
            sched = dict(d["schedule"])
            sched.setdefault("total_epochs", epochs)
            try:
                d["schedule"] = ScheduleSpec.from_dict(sched)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid schedule: {exc}") from exc
        for key, sub in (("optimizer", OptimizerConfig), ("probe", ProbeConfig),
                         ("model", ModelConfig), ("augment", AugmentConfig)):
            if key in d:
                d[key] = _build(sub, d[key], key)
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["dataset"] = (self.dataset.to_dict() if isinstance(self.dataset, GeneratorSpec)
                        else str(self.dataset))
        d["schedule"] = self.schedule.to_dict()
        for key in ("optimizer", "probe", "model", "augment"):
            d[key] = dataclasses.asdict(d[key])
        return d

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def load_dataset(self) -> DatasetSplit:
        if isinstance(self.dataset, GeneratorSpec):
            return data_mod.generate(self.dataset)
        return data_mod.load_dataset(self.dataset)


@dataclass
class RunRecord:
    config_hash: str
    seed: int
    log: list
    result: EvalResult | None
    wall_seconds: float
    config: dict

    def temperatures(self):
        return [entry["temperature"] for entry in self.log]

    def to_dict(self):
        return {"config_hash": self.config_hash, "seed": self.seed, "log": self.log,
                "result": self.result.to_dict() if self.result else None,
                "wall_seconds": self.wall_seconds, "config": self.config}


def _make_optimizer(net, opt_cfg, lr_base=None):
    return OptimizerState.for_network(
        net, opt_cfg.lr if lr_base is None else lr_base, momentum=opt_cfg.momentum,
        weight_decay=opt_cfg.weight_decay, restart_epochs=list(opt_cfg.restarts),
        warmup_epochs=opt_cfg.warmup, decay_biases=opt_cfg.decay_biases)


def train_linear_probe(net: Network, x, y, num_classes, probe: ProbeConfig, seed,
                       batch_size=32, momentum=0.9) -> Network:
    """Fit a linear classifier on frozen encoder features and attach it.

    Features come from un-augmented inputs and are computed once; the encoder
    weights are never touched. Cross-entropy at temperature 1, constant
    learning rate, no weight decay.
    """
    features = encode(net, x)
    linear = Network(net.rep_dim, [], CLASSIFIER, num_classes, seed=seed)
    opt = OptimizerState.for_network(linear, probe.lr, momentum=momentum, weight_decay=0.0)
    for epoch in range(1, probe.epochs + 1):
        for idx in data_mod.epoch_batches(len(y), batch_size, seed + 1, epoch):
            _, logits, cache = forward(linear, features[idx])
            out = ce_loss(logits, y[idx], 1.0)
            backward(linear, cache, out.d_outputs)
            sgd_step(linear, opt, probe.lr)
    return net.with_head(CLASSIFIER, num_classes, head_params=linear.params)


def train_on_split(config: ExperimentConfig, split: DatasetSplit):
    """Train on an in-memory split; returns ``(network, RunRecord)``."""
    start = time.perf_counter()
    x = split.train_x
    y = split.class_index(split.train_y)
    num_classes = split.num_classes
    contrastive = config.loss != "ce"
    head, head_dim = ((PROJECTION, config.model.proj_dim) if contrastive
                      else (CLASSIFIER, num_classes))
    net = Network(split.dim, config.model.hidden, head, head_dim, seed=config.seed)
    opt = _make_optimizer(net, config.optimizer)

    log = []
    step = 0
    for epoch in range(1, config.epochs + 1):
        tau = temperature_at(config.schedule, epoch)
        lr = lr_at(opt, epoch, config.epochs)
        total, count = 0.0, 0
        batches = data_mod.epoch_batches(len(y), config.batch_size, config.seed, epoch)
        for b, idx in enumerate(batches):
            if contrastive:
                mv = data_mod.two_view_batch(x[idx], y[idx], config.augment.sigma,
                                             config.augment.scale, config.seed, step)
                _, out, cache = forward(net, mv.views)
                if config.loss == "supcon":
                    loss = supcon_loss(out, mv.labels, tau)
                else:
                    loss = supcon_ls_loss(out, mv.labels, tau, config.alpha, num_classes)
            else:
                _, out, cache = forward(net, x[idx])
                loss = ce_loss(out, y[idx], tau)
            if not np.isfinite(loss.value):
                raise TrainingError("non-finite loss", epoch, b)
            backward(net, cache, loss.d_outputs)
            sgd_step(net, opt, lr_at(opt, epoch, config.epochs, (b + 1) / len(batches)))
            total += loss.value
            count += 1
            step += 1
        log.append({"epoch": epoch, "temperature": tau, "lr": lr,
                    "train_loss": total / max(count, 1)})

    if contrastive:
        net = train_linear_probe(net, x, y, num_classes, config.probe, config.seed,
                                 batch_size=config.batch_size,
                                 momentum=config.optimizer.momentum)
    result = evaluate(net, split)
    record = RunRecord(config.config_hash(), config.seed, log, result,
                       time.perf_counter() - start, config.to_dict())
    return net, record


def train(config: ExperimentConfig):
    """Train per ``config``; with ``config.output`` set, also write artifacts there.

    Artifacts: ``checkpoint.json``, ``run_record.json`` and ``scores.csv``.
    """
    split = config.load_dataset()
    net, record = train_on_split(config, split)
    if config.output:
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(net, out / "checkpoint.json")
        (out / "run_record.json").write_text(json.dumps(record.to_dict(), indent=2))
        evaluate(net, split, scores_path=out / "scores.csv")
    return net, record


def evaluate(net: Network, split: DatasetSplit, scores_path=None) -> EvalResult:
    """Max-logit scoring of the test sets; optionally writes the scores CSV."""
    if net.head != CLASSIFIER:
        raise ContractError("evaluation needs a classifier head; attach a probe first")
    if net.head_dim != split.num_classes:
        raise ContractError(f"network predicts {net.head_dim} classes, "
                            f"split has {split.num_classes}")
    _, known_logits, _ = forward(net, split.test_known_x)
    _, unknown_logits, _ = forward(net, split.test_unknown_x)
    known = score_predictions(known_logits, split.class_index(split.test_known_y))
    unknown = score_predictions(unknown_logits, [UNKNOWN] * len(split.test_unknown_y))
    if scores_path is not None:
        write_scores_csv(scores_path, known, unknown)
    return evaluate_predictions(known, unknown)


# sweeps -------------------------------------------------------------------


def expand_sweep(base: ExperimentConfig, schedules, seeds, vary_dataset_seed=True):
    """Schedules x seeds grid of configs derived from ``base``.

    With ``vary_dataset_seed`` a generated dataset is re-drawn per seed, so a
    seed picks both the known/unknown split and the initialization. Runs that
    share a seed see the same data, which pairs the schedule comparison.
    """
    configs = []
    for sched in schedules:
        if isinstance(sched, dict):
            sched = ScheduleSpec.from_dict({"total_epochs": base.epochs, **sched})
        for seed in seeds:
            dataset = base.dataset
            if vary_dataset_seed and isinstance(dataset, GeneratorSpec):
                dataset = dataclasses.replace(dataset, seed=int(seed))
            configs.append(dataclasses.replace(base, schedule=sched, seed=int(seed),
                                               dataset=dataset, output=None))
    return configs


def _result_row(run_id, config, result=None, wall=None):
    s = config.schedule
    row = {"run_id": run_id, "schedule": s.kind.value, "tau_plus": s.tau_plus,
           "tau_minus": s.tau_minus, "period": s.period, "k": s.shift, "loss": config.loss,
           "alpha": "" if config.alpha is None else config.alpha, "seed": config.seed}
    for m in METRICS:
        row[m] = getattr(result, m) if result is not None else ""
    row["wall_seconds"] = "" if wall is None else wall
    return row


def _run_one(args):
    run_id, config = args
    try:
        _, record = train_on_split(config, config.load_dataset())
    except Exception as exc:  # isolate failures so the sweep keeps going
        return run_id, None, f"{type(exc).__name__}: {exc}", None
    return run_id, record.result, None, record.wall_seconds


@dataclass
class SweepResult:
    rows: list
    aggregates: list
    improvements: list
    failures: list

    @property
    def all_failed(self):
        return bool(self.rows) and len(self.failures) == len(self.rows)


def sweep(configs, workers=1, output_dir=None, record_timing=False) -> SweepResult:
    """Run every config, aggregate per schedule and compare against constant baselines.

    Runs share nothing, so ``workers > 1`` (a process pool) gives the same
    numbers as serial execution. ``wall_seconds`` is left blank unless
    ``record_timing`` is set, which keeps the results CSV reproducible
    byte-for-byte.
    """
    if not configs:
        raise ConfigError("a sweep needs at least one config")
    jobs = [(f"{i:04d}", c) for i, c in enumerate(configs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(job) for job in jobs]

    rows, failures = [], []
    for (run_id, config), (_, result, error, wall) in zip(jobs, outcomes):
        rows.append(_result_row(run_id, config, result, wall if record_timing else None))
        if error is not None:
            failures.append({"run_id": run_id, "error": error})
    aggregates = aggregate_rows(rows)
    result = SweepResult(rows, aggregates, improvement_table(aggregates), failures)
    if output_dir is not None:
        write_sweep(result, output_dir)
    return result


def _group_key(row):
    return (row["loss"], _num(row["alpha"]), row["schedule"], float(row["tau_plus"]),
            float(row["tau_minus"]), int(row["period"]), float(row["k"]))


def _num(v):
    return None if v in ("", None) else float(v)


def group_label(schedule, tau_plus, tau_minus, period, k):
    if schedule == "Const":
        return f"Const({tau_plus:g})"
    if schedule in ("GCos", "Cos", "NegCos"):
        return f"{schedule}({tau_plus:g},{tau_minus:g},P={period},k={k:g})"
    return f"{schedule}({tau_plus:g},{tau_minus:g},P={period})"


def aggregate_rows(rows):
    """Mean and sample standard deviation of each metric per schedule group.

    Failed runs (blank metrics) are skipped. Groups come out in first-seen order.
    """
    groups = {}
    for row in rows:
        if row["accuracy"] in ("", None):
            continue
        groups.setdefault(_group_key(row), []).append(row)
    out = []
    for key, members in groups.items():
        loss, alpha, schedule, tp, tm, period, k = key
        agg = {"loss": loss, "alpha": alpha, "schedule": schedule, "tau_plus": tp,
               "tau_minus": tm, "period": period, "k": k,
               "label": group_label(schedule, tp, tm, period, k), "n": len(members)}
        for m in METRICS:
            vals = np.array([float(r[m]) for r in members])
            agg[f"{m}_mean"] = float(vals.mean())
            agg[f"{m}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(agg)
    return out


def _is_negcos(agg):
    return agg["schedule"] == "NegCos" or (agg["schedule"] == "GCos" and agg["k"] == 1.0)


def improvement_table(aggregates):
    """Each NegCos group's metric minus the best Const group with the same loss."""
    table = []
    for agg in aggregates:
        if not _is_negcos(agg):
            continue
        baselines = [b for b in aggregates if b["schedule"] == "Const"
                     and b["loss"] == agg["loss"] and b["alpha"] == agg["alpha"]]
        if not baselines:
            continue
        entry = {"label": agg["label"], "loss": agg["loss"], "alpha": agg["alpha"],
                 "baselines": [b["label"] for b in baselines]}
        for m in METRICS:
            entry[m] = improvement(agg[f"{m}_mean"], [b[f"{m}_mean"] for b in baselines])
        table.append(entry)
    return table


def write_results_csv(rows, path):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RESULTS_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in RESULTS_HEADER})


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def read_results_csv(path):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULTS_HEADER:
            raise ValueError(f"unexpected results header {reader.fieldnames}")
        return list(reader)


def write_sweep(result: SweepResult, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(result.rows, out / "results.csv")
    summary = {"aggregates": result.aggregates, "improvements": result.improvements,
               "failures": result.failures}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))


# reports ------------------------------------------------------------------


def report_k_sweep(rows):
    """AUROC against the cosine phase shift ``k``, one row per shift, sorted by ``k``.

    Rows may be raw results rows or aggregates. No ordering of AUROC is implied.
    """
    aggregates = rows if rows and "auroc_mean" in rows[0] else aggregate_rows(rows)
    cosine = [a for a in aggregates if a["schedule"] in ("GCos", "Cos", "NegCos")]
    cosine.sort(key=lambda a: (a["k"], a["loss"], a["tau_plus"], a["tau_minus"], a["period"]))
    return [{"k": a["k"], "label": a["label"], "loss": a["loss"], "n": a["n"],
             "auroc_mean": a["auroc_mean"], "auroc_std": a["auroc_std"]} for a in cosine]


def _spec_from_aggregate(agg, epochs):
    tau_minus = None if agg["schedule"] == "Const" else agg["tau_minus"]
    return ScheduleSpec(Kind(agg["schedule"]), agg["tau_plus"], tau_minus,
                        period=agg["period"], shift=agg["k"], total_epochs=epochs)


def _write_table(path, header, records):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=header, lineterminator="\n",
                                extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: _fmt(rec.get(k, "")) for k in header})


def report(results_csv, output_dir, epochs=600):
    """Turn a results CSV into improvement, k-sweep, metric-bar and temperature-curve CSVs."""
    rows = read_results_csv(results_csv)
    aggregates = aggregate_rows(rows)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    improvements = improvement_table(aggregates)
    _write_table(out / "improvement.csv", ["label", "loss", "alpha", *METRICS],
                 improvements)
    k_rows = report_k_sweep(aggregates)
    _write_table(out / "k_sweep.csv", ["k", "label", "loss", "n", "auroc_mean", "auroc_std"],
                 k_rows)
    bar_header = ["label", "loss", "alpha", "n",
                  *(f"{m}_{s}" for m in METRICS for s in ("mean", "std"))]
    _write_table(out / "metric_bars.csv", bar_header, aggregates)

    labels, curves = [], []
    for agg in aggregates:
        if agg["label"] in labels:
            continue
        labels.append(agg["label"])
        curves.append(temperature_curve(_spec_from_aggregate(agg, epochs)))
    with open(out / "temperature_curves.csv", "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", *labels])
        for e in range(epochs):
            writer.writerow([e + 1, *(repr(float(c[e])) for c in curves)])
    return {"improvements": improvements, "k_sweep": k_rows, "aggregates": aggregates}


# class-count ablation -----------------------------------------------------


def class_count_ablation(base: ExperimentConfig, fractions, negcos: ScheduleSpec,
                         consts, trials, nested=False):
    """Improvement of ``negcos`` over the best constant schedule per class fraction.

    Each trial draws fresh known-class subsets (seeded by the trial index) of
    a fixed generated dataset; the unknown classes never change. Returns one
    dict per fraction with the trial-averaged improvement of every metric.
    """
    split = base.load_dataset()
    table = []
    per_fraction = {f: {m: [] for m in METRICS} for f in fractions}
    for trial in range(trials):
        subsets = data_mod.make_class_splits(split.num_classes, fractions, seed=trial,
                                             nested=nested)
        for frac, subset in zip(fractions, subsets):
            sub = data_mod.restrict_known(split, [split.known_classes[i] for i in subset])
            results = {}
            for sched in [negcos, *consts]:
                cfg = dataclasses.replace(base, schedule=sched, seed=trial, output=None)
                results[sched.label] = train_on_split(cfg, sub)[1].result
            for m in METRICS:
                neg = getattr(results[negcos.label], m)
                per_fraction[frac][m].append(
                    improvement(neg, [getattr(results[c.label], m) for c in consts]))
    for frac in fractions:
        entry = {"fraction": frac}
        entry.update({m: float(np.mean(v)) for m, v in per_fraction[frac].items()})
        table.append(entry)
    return table


_SWEEP_KEYS = {"base", "schedules", "seeds", "workers", "vary_dataset_seed", "output",
               "record_timing"}


@dataclass
class SweepConfig:
    """A sweep file: a base experiment crossed with schedules and seeds."""

    base: ExperimentConfig
    schedules: list
    seeds: list
    workers: int = 1
    vary_dataset_seed: bool = True
    output: str | None = None
    record_timing: bool = False

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("sweep config must be a JSON object")
        unknown = sorted(set(d) - _SWEEP_KEYS)
        if unknown:
            raise ConfigError(f"unknown sweep config keys: {unknown}")
        for key in ("schedules", "seeds"):
            if not d.get(key):
                raise ConfigError(f"sweep config needs a non-empty '{key}' list")
        base = ExperimentConfig.from_dict(d.get("base", {}))
        try:
            schedules = [ScheduleSpec.from_dict({"total_epochs": base.epochs, **s})
                         for s in d["schedules"]]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid schedule in sweep: {exc}") from exc
        return cls(base, schedules, [int(s) for s in d["seeds"]],
                   int(d.get("workers", 1)), bool(d.get("vary_dataset_seed", True)),
                   d.get("output"), bool(d.get("record_timing", False)))

    @classmethod
    def from_json(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read sweep config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def configs(self):
        return expand_sweep(self.base, self.schedules, self.seeds, self.vary_dataset_seed)
