"""ERM loop over pair (or labeled) data with risk-based model selection.

Each epoch shuffles the training pairs with a stream keyed by (seed, epoch),
walks them in minibatches (a final partial batch is kept and self-normalized
by its own size), and takes one optimizer step per batch. After every epoch
the full-train risk, full-validation risk (same estimator kind), and test
accuracy are recorded. The returned predictor is the parameter snapshot at
the epoch of minimum validation risk; test labels are touched only inside
evaluate().
"""

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from . import model, optim
from .datagen import LabeledData, SconfDataset
from .errors import ConfigError
from .losses import loss_derivative
from .rng import make_rng
from .risk import RiskSpec, pair_risk, partial_risks, risk_gradient_weights, supervised_risk

REPORT_COLUMNS = ("epoch", "train_risk", "val_risk", "test_acc", "test_01_risk", "lr")


@dataclass(frozen=True)
class TrainConfig:
    risk: RiskSpec
    arch: model.Architecture
    epochs: int
    seed: int
    batch_pairs: int | None = None  # None = full batch
    lr0: float = 0.1
    weight_decay: float = 0.0
    drop_every: int | None = None
    drop_factor: float = 10.0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("need at least one epoch")
        if self.batch_pairs is not None and self.batch_pairs < 1:
            raise ConfigError("batch size must be positive")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be positive")


@dataclass
class TrainReport:
    rows: list = field(default_factory=list)  # tuples matching REPORT_COLUMNS
    best_epoch: int = 0
    sigma_n: float = 0.0

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        text = buf.getvalue()
        if path is not None:
            tmp = f"{path}.tmp.{os.getpid()}"
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, path)
        return text

    def val_risks(self):
        return [row[2] for row in self.rows]

    def row_at(self, epoch):
        for row in self.rows:
            if row[0] == epoch:
                return row
        raise KeyError(epoch)


def evaluate(p, test):
    """(accuracy, zero-one risk) of sign(g(x)) on a labeled test set; sign(0) = +1."""
    if len(test) == 0:
        raise ConfigError("empty test set")
    scores = model.forward(p, test.X)
    p.discard_cache()
    pred = np.where(scores >= 0.0, 1, -1)
    acc = float(np.mean(pred == test.y))
    return acc, 1.0 - acc


def _pair_scores(p, ds, idx=None):
    x = ds.x if idx is None else ds.x[idx]
    xp = ds.x_prime if idx is None else ds.x_prime[idx]
    n = x.shape[0]
    z = model.forward(p, np.vstack([x, xp]))
    return z[:n], z[n:]


def _dataset_risk(p, ds, spec):
    if spec.kind == "supervised":
        scores = model.forward(p, ds.X)
        p.discard_cache()
        return supervised_risk(scores, ds.y, spec.loss)
    z, zp = _pair_scores(p, ds)
    p.discard_cache()
    return pair_risk(z, zp, ds.s, spec)


def _check_dataset(ds, spec, role):
    want_pairs = spec.kind != "supervised"
    if want_pairs and not isinstance(ds, SconfDataset):
        raise ConfigError(f"{role} data for kind {spec.kind!r} must be an SconfDataset")
    if not want_pairs and not isinstance(ds, LabeledData):
        raise ConfigError(f"{role} data for supervised training must be LabeledData")
    if len(ds) == 0:
        raise ConfigError(f"{role} dataset is empty")


def train(train_ds, val_ds, test, cfg):
    """Run ERM and return (predictor at the best-validation epoch, report).

    train_ds / val_ds are SconfDatasets for the pair estimator kinds and
    LabeledData for the supervised kind. val_ds may be None, in which case the
    training set doubles as the validation set (selection then follows the
    training risk).
    """
    spec = cfg.risk
    _check_dataset(train_ds, spec, "training")
    if val_ds is None:
        val_ds = train_ds
    else:
        _check_dataset(val_ds, spec, "validation")

    p = model.init(cfg.arch, cfg.seed)
    state = optim.AdamState.for_predictor(
        p, cfg.lr0, weight_decay=cfg.weight_decay,
        drop_every=cfg.drop_every, drop_factor=cfg.drop_factor,
    )
    n = len(train_ds)
    batch = n if cfg.batch_pairs is None else min(cfg.batch_pairs, n)

    report = TrainReport()
    if isinstance(train_ds, SconfDataset) and train_ds.reference_s is not None:
        report.sigma_n = float(np.abs(train_ds.s - train_ds.reference_s).sum())

    best = (np.inf, None, 0)
    for epoch in range(cfg.epochs):
        order = make_rng(cfg.seed, 4, epoch).permutation(n)
        for lo in range(0, n, batch):
            idx = order[lo:lo + batch]
            _train_step(p, state, train_ds, idx, spec, epoch)

        train_risk = _dataset_risk(p, train_ds, spec)
        val_risk = _dataset_risk(p, val_ds, spec)
        test_acc, test_01 = evaluate(p, test)
        lr = optim.effective_lr(state, epoch)
        if (epoch + 1) % cfg.eval_every == 0 or epoch == cfg.epochs - 1:
            report.rows.append((epoch, train_risk, val_risk, test_acc, test_01, lr))
        if val_risk < best[0]:
            best = (val_risk, p.params.copy(), epoch)

    report.best_epoch = best[2]
    chosen = model.Predictor(cfg.arch, best[1], np.zeros_like(p.params))
    return chosen, report


def _train_step(p, state, ds, idx, spec, epoch):
    if spec.kind == "supervised":
        X, y = ds.X[idx], ds.y[idx]
        scores = model.forward(p, X)
        upstream = loss_derivative(spec.loss, scores, y) / len(idx)
        model.backward(p, upstream)
    else:
        z, zp = _pair_scores(p, ds, idx)
        s = ds.s[idx]
        if spec.kind in ("similar_only", "dissimilar_only"):
            w_plus, w_minus = risk_gradient_weights(s, None, spec)
        else:
            pr = partial_risks(z, zp, s, spec)
            w_plus, w_minus = risk_gradient_weights(s, pr, spec)
        dz_p = loss_derivative(spec.loss, z, 1)
        dz_m = loss_derivative(spec.loss, z, -1)
        dzp_p = loss_derivative(spec.loss, zp, 1)
        dzp_m = loss_derivative(spec.loss, zp, -1)
        upstream = np.concatenate([
            w_plus * dz_p + w_minus * dz_m,
            w_plus * dzp_p + w_minus * dzp_m,
        ])
        model.backward(p, upstream)
    optim.step(state, p, epoch)
